//! Nondeterministic goal interpreter with choice points, trail-based
//! backtracking and multi-prompt suspension.
//!
//! The machine executes [`Goal`]s against a goal stack represented as a
//! persistent list, so creating a choice point is O(1). A [`Goal::Reset`]
//! pushes a prompt marker; executing [`Goal::Shift`] captures the pending
//! frames up to the nearest marker with an equal prompt into a
//! [`Continuation`] and hands control back to the caller of [`Machine::run`]
//! as a [`Outcome::Suspension`]. The captured segment is a deep snapshot
//! with current bindings resolved in, so a continuation can be reactivated
//! any number of times; each reactivation renames every variable fresh and
//! unifies the designated parameter slots with the supplied arguments.
//!
//! Frames that resolve to `true` are dropped at capture time, so chains of
//! dependent shift/resume pairs accumulate no dead frames and the total
//! captured-frame count stays linear in the chain length.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::builtins::{self, BuiltinOp};
use crate::program::{ClauseDB, IndexKey, Query};
use crate::term::{
    rename_frozen, term_variables, Bindings, Checkpoint, Symbol, Term, Var,
};
use crate::EngineError;

/// A ground prompt identifying which enclosing marker a suspension targets.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Prompt(pub Symbol);

impl Prompt {
    pub fn new(name: &str) -> Prompt {
        Prompt(Symbol::new(name))
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identifies a host-side operation requested by a [`Goal::Effect`]. The
/// machine pauses and delivers the tag and arguments to its driver.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EffectTag(pub u32);

#[derive(Clone, Debug)]
pub enum Goal {
    True,
    Fail,
    /// `=/2`
    Unify(Term, Term),
    /// Call of a user predicate.
    Call(Term),
    Conj(Box<Goal>, Box<Goal>),
    Disj(Box<Goal>, Box<Goal>),
    Builtin(BuiltinOp, Vec<Term>),
    /// Suspend to the nearest enclosing marker for the prompt.
    Shift(Prompt, Term),
    /// Run `body` inside a delimited context. `slots` are terms whose free
    /// variables at capture time become context parameter slots of any
    /// continuation captured at this marker.
    Reset { prompt: Prompt, slots: Arc<[Term]>, body: Box<Goal> },
    /// Reactivate a captured continuation with the given answer arguments.
    Invoke { cont: Continuation, args: Arc<[Term]> },
    /// Pause the machine and hand `(tag, args)` to the driver.
    Effect(EffectTag, Vec<Term>),
    /// In-progress clause resolution: try `candidates[next..]` against
    /// `call` in order, one choice point at a time.
    CallClauses {
        call: Term,
        clauses: Arc<[crate::program::Clause]>,
        candidates: Arc<[u32]>,
        next: usize,
    },
}

impl Goal {
    pub fn conj(a: Goal, b: Goal) -> Goal {
        Goal::Conj(Box::new(a), Box::new(b))
    }

    pub fn disj(a: Goal, b: Goal) -> Goal {
        Goal::Disj(Box::new(a), Box::new(b))
    }

    /// Right-nested disjunction of a non-empty sequence; an empty sequence
    /// is `fail`.
    pub fn disj_all(mut goals: Vec<Goal>) -> Goal {
        match goals.len() {
            0 => Goal::Fail,
            1 => goals.pop().unwrap(),
            _ => {
                let mut out = goals.pop().unwrap();
                while let Some(g) = goals.pop() {
                    out = Goal::disj(g, out);
                }
                out
            }
        }
    }

    pub fn conj_all(mut goals: Vec<Goal>) -> Goal {
        match goals.len() {
            0 => Goal::True,
            1 => goals.pop().unwrap(),
            _ => {
                let mut out = goals.pop().unwrap();
                while let Some(g) = goals.pop() {
                    out = Goal::conj(g, out);
                }
                out
            }
        }
    }
}

/// Rebuilds a goal with every embedded term transformed by `f`. Captured
/// continuations inside `Invoke` are frozen snapshots and are left alone.
pub(crate) fn map_goal<F: FnMut(&Term) -> Term>(g: &Goal, f: &mut F) -> Goal {
    match g {
        Goal::True => Goal::True,
        Goal::Fail => Goal::Fail,
        Goal::Unify(a, b) => Goal::Unify(f(a), f(b)),
        Goal::Call(t) => Goal::Call(f(t)),
        Goal::Conj(a, b) => Goal::conj(map_goal(a, f), map_goal(b, f)),
        Goal::Disj(a, b) => Goal::disj(map_goal(a, f), map_goal(b, f)),
        Goal::Builtin(op, args) => Goal::Builtin(*op, args.iter().map(|t| f(t)).collect()),
        Goal::Shift(p, sig) => Goal::Shift(*p, f(sig)),
        Goal::Reset { prompt, slots, body } => Goal::Reset {
            prompt: *prompt,
            slots: slots.iter().map(|t| f(t)).collect(),
            body: Box::new(map_goal(body, f)),
        },
        Goal::Invoke { cont, args } => Goal::Invoke {
            cont: cont.clone(),
            args: args.iter().map(|t| f(t)).collect(),
        },
        Goal::Effect(tag, args) => Goal::Effect(*tag, args.iter().map(|t| f(t)).collect()),
        Goal::CallClauses { call, clauses, candidates, next } => Goal::CallClauses {
            call: f(call),
            clauses: clauses.clone(),
            candidates: candidates.clone(),
            next: *next,
        },
    }
}

fn resolve_goal(g: &Goal, b: &Bindings) -> Goal {
    map_goal(g, &mut |t| b.resolve(t))
}

/// One element of a captured continuation segment.
#[derive(Clone, Debug)]
pub enum CapturedFrame {
    Goal(Goal),
    /// A nested marker for a different prompt that was crossed by the
    /// capture; it is re-established on resume.
    Marker { prompt: Prompt, slots: Arc<[Term]> },
}

/// A resumable, multiply-invocable capture of the conjunctive remainder of
/// a computation up to a prompt marker.
///
/// `frames[0]` is the innermost pending frame (the first to run on resume).
/// `y_slots` are the free variables of the suspension signal and `ctx_slots`
/// the free variables of the matched marker's slot terms; both are left
/// unresolved in the snapshot. Reactivation renames the whole segment
/// fresh, unifies the renamed `y_slots` with the supplied arguments and
/// aliases the renamed `ctx_slots` with the live slot variables.
#[derive(Clone, Debug)]
pub struct Continuation {
    pub(crate) frames: Arc<[CapturedFrame]>,
    pub y_slots: Arc<[Var]>,
    pub ctx_slots: Arc<[Var]>,
}

impl Continuation {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Builds the goal that reactivates this continuation with the given
    /// answer-slot arguments. Repeated resumes are independent.
    pub fn resume(&self, y_args: Vec<Term>) -> Result<Goal, EngineError> {
        if y_args.len() != self.y_slots.len() {
            return Err(EngineError::ResumeArity {
                expected: self.y_slots.len(),
                got: y_args.len(),
            });
        }
        Ok(Goal::Invoke { cont: self.clone(), args: y_args.into() })
    }
}

#[derive(Clone, Debug)]
enum Frame {
    Goal(Goal),
    Marker { prompt: Prompt, id: u64, slots: Arc<[Term]> },
}

/// Persistent goal stack; cons cells shared between the machine and its
/// choice points.
#[derive(Clone, Default)]
struct Stack(Option<Rc<StackNode>>);

struct StackNode {
    frame: Frame,
    next: Stack,
}

impl Stack {
    fn push(&self, frame: Frame) -> Stack {
        Stack(Some(Rc::new(StackNode { frame, next: self.clone() })))
    }

    fn pop(&mut self) -> Option<Frame> {
        let head = self.0.take()?;
        match Rc::try_unwrap(head) {
            Ok(node) => {
                let StackNode { frame, next } = node;
                *self = next;
                Some(frame)
            }
            Err(rc) => {
                let frame = rc.frame.clone();
                *self = rc.next.clone();
                Some(frame)
            }
        }
    }

    fn is_empty(&self) -> bool {
        self.0.is_none()
    }
}

// Long chains are dropped iteratively; a recursive drop would overflow the
// host stack on deep producer chains.
impl Drop for Stack {
    fn drop(&mut self) {
        let mut cur = self.0.take();
        while let Some(rc) = cur {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => cur = node.next.0.take(),
                Err(_) => break,
            }
        }
    }
}

struct ChoicePoint {
    stack: Stack,
    trail: Checkpoint,
}

/// Event counters for continuation bookkeeping; the basis of the
/// copy-cost accounting.
#[derive(Clone, Copy, Default, Debug)]
pub struct MachineStats {
    /// Number of continuation captures (shifts handled).
    pub captures: u64,
    /// Total captured segment length over all captures.
    pub captured_frames: u64,
    /// Largest single captured segment.
    pub max_segment: u64,
    /// Number of continuation reactivations.
    pub resumes: u64,
    /// Frames executed.
    pub steps: u64,
}

/// What the machine stopped on; the driver decides how to continue.
#[derive(Debug)]
pub enum Outcome {
    /// The goal stack emptied: one success path completed.
    Solution,
    /// A marker was crossed by a success path.
    PromptDone { prompt: Prompt, marker_id: u64 },
    /// A shift captured the delimited remainder; the marker is consumed.
    Suspension { prompt: Prompt, marker_id: u64, signal: Term, cont: Continuation },
    /// A host-operation request from [`Goal::Effect`].
    Effect { tag: EffectTag, args: Vec<Term> },
    /// All choice points are exhausted.
    Exhausted,
    /// The step budget ran out.
    StepLimit,
}

pub struct Machine {
    db: Arc<ClauseDB>,
    pub bindings: Bindings,
    stack: Stack,
    choices: Vec<ChoicePoint>,
    marker_seq: u64,
    pub step_limit: Option<u64>,
    pub stats: MachineStats,
}

impl Machine {
    pub fn new(db: Arc<ClauseDB>) -> Machine {
        Machine {
            db,
            bindings: Bindings::new(),
            stack: Stack::default(),
            choices: Vec::new(),
            marker_seq: 0,
            step_limit: None,
            stats: MachineStats::default(),
        }
    }

    pub fn db(&self) -> &Arc<ClauseDB> {
        &self.db
    }

    pub fn push_goal(&mut self, g: Goal) {
        self.stack = self.stack.push(Frame::Goal(g));
    }

    /// Installs a delimited context and runs until the first outcome.
    /// Further outcomes of the same region are produced by
    /// [`Machine::backtrack`] followed by [`Machine::run`].
    pub fn reset_run(
        &mut self,
        prompt: Prompt,
        slots: Vec<Term>,
        body: Goal,
    ) -> Result<Outcome, EngineError> {
        self.push_goal(Goal::Reset { prompt, slots: slots.into(), body: Box::new(body) });
        self.run()
    }

    /// Restores the most recent choice point. Returns false when none is
    /// left.
    pub fn backtrack(&mut self) -> bool {
        match self.choices.pop() {
            Some(cp) => {
                self.stack = cp.stack;
                self.bindings.undo_to(cp.trail);
                true
            }
            None => {
                self.stack = Stack::default();
                false
            }
        }
    }

    fn fail(&mut self) -> Option<Outcome> {
        if self.backtrack() {
            None
        } else {
            Some(Outcome::Exhausted)
        }
    }

    /// Runs until a solution, suspension, effect, exhaustion or the step
    /// budget. After a suspension the stack already continues below the
    /// consumed marker; the driver pushes whatever should run in place of
    /// the delimited region.
    pub fn run(&mut self) -> Result<Outcome, EngineError> {
        loop {
            if let Some(limit) = self.step_limit {
                if self.stats.steps >= limit {
                    return Ok(Outcome::StepLimit);
                }
            }
            let frame = match self.stack.pop() {
                None => return Ok(Outcome::Solution),
                Some(f) => f,
            };
            self.stats.steps += 1;
            match frame {
                Frame::Marker { prompt, id, .. } => {
                    return Ok(Outcome::PromptDone { prompt, marker_id: id });
                }
                Frame::Goal(g) => {
                    if let Some(outcome) = self.step_goal(g)? {
                        return Ok(outcome);
                    }
                }
            }
        }
    }

    fn step_goal(&mut self, g: Goal) -> Result<Option<Outcome>, EngineError> {
        match g {
            Goal::True => Ok(None),
            Goal::Fail => Ok(self.fail()),
            Goal::Unify(a, b) => {
                if self.bindings.unify(&a, &b) {
                    Ok(None)
                } else {
                    Ok(self.fail())
                }
            }
            Goal::Conj(a, b) => {
                self.stack = self.stack.push(Frame::Goal(*b));
                self.stack = self.stack.push(Frame::Goal(*a));
                Ok(None)
            }
            Goal::Disj(a, b) => {
                self.choices.push(ChoicePoint {
                    stack: self.stack.push(Frame::Goal(*b)),
                    trail: self.bindings.checkpoint(),
                });
                self.stack = self.stack.push(Frame::Goal(*a));
                Ok(None)
            }
            Goal::Builtin(op, args) => {
                if builtins::exec(op, &args, &mut self.bindings)? {
                    Ok(None)
                } else {
                    Ok(self.fail())
                }
            }
            Goal::Call(t) => self.step_call(t),
            Goal::CallClauses { call, clauses, candidates, next } => {
                let ci = candidates[next] as usize;
                if next + 1 < candidates.len() {
                    let alt = Goal::CallClauses {
                        call: call.clone(),
                        clauses: clauses.clone(),
                        candidates: candidates.clone(),
                        next: next + 1,
                    };
                    self.choices.push(ChoicePoint {
                        stack: self.stack.push(Frame::Goal(alt)),
                        trail: self.bindings.checkpoint(),
                    });
                }
                let (head, body) = clauses[ci].instantiate(&mut self.bindings);
                if self.bindings.unify(&head, &call) {
                    self.stack = self.stack.push(Frame::Goal(body));
                    Ok(None)
                } else {
                    Ok(self.fail())
                }
            }
            Goal::Reset { prompt, slots, body } => {
                self.marker_seq += 1;
                self.stack = self.stack.push(Frame::Marker {
                    prompt,
                    id: self.marker_seq,
                    slots,
                });
                self.stack = self.stack.push(Frame::Goal(*body));
                Ok(None)
            }
            Goal::Shift(prompt, signal) => self.capture(prompt, signal).map(Some),
            Goal::Invoke { cont, args } => {
                self.invoke(&cont, &args)?;
                Ok(None)
            }
            Goal::Effect(tag, args) => Ok(Some(Outcome::Effect { tag, args })),
        }
    }

    fn step_call(&mut self, t: Term) -> Result<Option<Outcome>, EngineError> {
        let target = self.bindings.deref(&t).clone();
        let (functor, arity) = match target.functor_arity() {
            Some(fa) => fa,
            None => {
                return match target {
                    Term::Var(_) => Err(EngineError::Instantiation("call".into())),
                    other => Err(EngineError::NotCallable(other.to_string())),
                }
            }
        };
        let entry = match self.db.lookup(functor, arity) {
            Some(e) => e,
            None => {
                return Err(EngineError::UnknownPredicate {
                    name: functor.name().to_string(),
                    arity,
                })
            }
        };
        let key = match &target {
            Term::Struct(s) => IndexKey::classify(self.bindings.deref(&s.args[0])),
            _ => None,
        };
        let candidates = entry.candidates(key);
        let clauses = entry.clauses.clone();
        if candidates.is_empty() {
            return Ok(self.fail());
        }
        self.stack = self.stack.push(Frame::Goal(Goal::CallClauses {
            call: target,
            clauses,
            candidates,
            next: 0,
        }));
        Ok(None)
    }

    /// Captures the conjunctive remainder up to the nearest marker with an
    /// equal prompt, removes it together with the marker, and reports the
    /// suspension. Frames resolving to `true` are dropped.
    fn capture(&mut self, prompt: Prompt, signal: Term) -> Result<Outcome, EngineError> {
        let mut collected: Vec<CapturedFrame> = Vec::new();
        let mut cur = std::mem::take(&mut self.stack);
        loop {
            match cur.pop() {
                None => {
                    return Err(EngineError::UnhandledShift {
                        prompt: prompt.to_string(),
                        signal: self.bindings.resolve(&signal).to_string(),
                    });
                }
                Some(Frame::Marker { prompt: q, id, slots }) => {
                    if q == prompt {
                        let marker_id = id;
                        self.stack = cur;
                        let y_slots: Arc<[Var]> =
                            term_variables(&signal, &self.bindings).into();
                        let mut ctx = Vec::new();
                        let mut seen = HashMap::new();
                        for s in slots.iter() {
                            for v in term_variables(s, &self.bindings) {
                                if seen.insert(v, ()).is_none() {
                                    ctx.push(v);
                                }
                            }
                        }
                        self.stats.captures += 1;
                        self.stats.captured_frames += collected.len() as u64;
                        self.stats.max_segment =
                            self.stats.max_segment.max(collected.len() as u64);
                        let cont = Continuation {
                            frames: collected.into(),
                            y_slots,
                            ctx_slots: ctx.into(),
                        };
                        return Ok(Outcome::Suspension {
                            prompt,
                            marker_id,
                            signal,
                            cont,
                        });
                    } else {
                        let slots =
                            slots.iter().map(|t| self.bindings.resolve(t)).collect();
                        collected.push(CapturedFrame::Marker { prompt: q, slots });
                    }
                }
                Some(Frame::Goal(g)) => {
                    let snapshot = resolve_goal(&g, &self.bindings);
                    if !matches!(snapshot, Goal::True) {
                        collected.push(CapturedFrame::Goal(snapshot));
                    }
                }
            }
        }
    }

    /// Expands an [`Goal::Invoke`]: renames the whole snapshot fresh,
    /// re-establishes crossed markers, and schedules the slot unifications
    /// ahead of the renamed frames.
    fn invoke(&mut self, cont: &Continuation, args: &[Term]) -> Result<(), EngineError> {
        if args.len() != cont.y_slots.len() {
            return Err(EngineError::ResumeArity {
                expected: cont.y_slots.len(),
                got: args.len(),
            });
        }
        self.stats.resumes += 1;
        let mut map: HashMap<Var, Var> = HashMap::new();
        for v in cont.y_slots.iter().chain(cont.ctx_slots.iter()) {
            map.entry(*v).or_insert_with(|| self.bindings.fresh_var());
        }
        // frames[0] runs first, so push in reverse order
        for frame in cont.frames.iter().rev() {
            match frame {
                CapturedFrame::Goal(g) => {
                    let renamed = map_goal(g, &mut |t| {
                        rename_frozen(t, &mut map, &mut self.bindings)
                    });
                    self.stack = self.stack.push(Frame::Goal(renamed));
                }
                CapturedFrame::Marker { prompt, slots } => {
                    let slots: Arc<[Term]> = slots
                        .iter()
                        .map(|t| rename_frozen(t, &mut map, &mut self.bindings))
                        .collect();
                    self.marker_seq += 1;
                    self.stack = self.stack.push(Frame::Marker {
                        prompt: *prompt,
                        id: self.marker_seq,
                        slots,
                    });
                }
            }
        }
        // context slots alias the live variables they were captured from
        for v in cont.ctx_slots.iter() {
            let fresh = map[v];
            self.stack = self
                .stack
                .push(Frame::Goal(Goal::Unify(Term::Var(fresh), Term::Var(*v))));
        }
        for (v, arg) in cont.y_slots.iter().zip(args.iter()) {
            let fresh = map[v];
            self.stack = self
                .stack
                .push(Frame::Goal(Goal::Unify(Term::Var(fresh), arg.clone())));
        }
        Ok(())
    }
}

/// One emitted solution: the query's named variables with bindings
/// resolved in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub bindings: Vec<(String, Term)>,
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bindings.is_empty() {
            return write!(f, "true");
        }
        for (i, (name, term)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} = {}", name, term)?;
        }
        Ok(())
    }
}

/// Demand-driven depth-first SLD solution stream; plain resolution with no
/// tabling. A shift reaching the top is a fatal error here.
pub struct SolveIter {
    machine: Machine,
    vars: Vec<(String, Var)>,
    started: bool,
    done: bool,
}

/// Plain SLD exploration of `query`: depth-first, left-to-right, clause
/// order; emits one solution per proof.
pub fn solve(db: Arc<ClauseDB>, query: &Query, step_limit: Option<u64>) -> SolveIter {
    let mut machine = Machine::new(db);
    machine.step_limit = step_limit;
    let inst = query.instantiate(&mut machine.bindings);
    machine.push_goal(inst.goal);
    SolveIter { machine, vars: inst.vars, started: false, done: false }
}

impl SolveIter {
    pub fn stats(&self) -> MachineStats {
        self.machine.stats
    }
}

impl Iterator for SolveIter {
    type Item = Result<Solution, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.started && !self.machine.backtrack() {
            self.done = true;
            return None;
        }
        self.started = true;
        loop {
            match self.machine.run() {
                Ok(Outcome::Solution) => {
                    let bindings = self
                        .vars
                        .iter()
                        .map(|(n, v)| {
                            (n.clone(), self.machine.bindings.resolve(&Term::Var(*v)))
                        })
                        .collect();
                    return Some(Ok(Solution { bindings }));
                }
                Ok(Outcome::Exhausted) => {
                    self.done = true;
                    return None;
                }
                Ok(Outcome::StepLimit) => {
                    self.done = true;
                    return Some(Err(EngineError::StepBudget(self.machine.stats.steps)));
                }
                Ok(Outcome::PromptDone { .. }) => continue,
                Ok(Outcome::Suspension { prompt, signal, .. }) => {
                    self.done = true;
                    return Some(Err(EngineError::UnhandledShift {
                        prompt: prompt.to_string(),
                        signal: self.machine.bindings.resolve(&signal).to_string(),
                    }));
                }
                Ok(Outcome::Effect { .. }) => {
                    self.done = true;
                    return Some(Err(EngineError::Internal(
                        "effect outside a tabled run".into(),
                    )));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}
