//! Parser and loader for the clause-file format, the `table` directive and
//! the `#`-renaming transformation.
//!
//! The accepted grammar is a Prolog subset: atoms (lowercase or quoted),
//! variables, integers, compound terms including list notation, `,`
//! conjunction, `;` disjunction, `:-` clauses and directives, `.`
//! terminator and `%` line comments. The only operators are the arithmetic
//! and comparison builtins in infix form.
//!
//! For each `:- table p/n.` the user clauses of `p/n` are re-homed under
//! the worker name `p#/n` and a single wrapper clause
//! `p(A1..An) :- <shift tab p#(A1..An)>` is installed, so calling `p`
//! suspends to the tabling handler with the worker call as the signal.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};

use crate::builtins::{is_builtin, BuiltinOp};
use crate::machine::{map_goal, Goal, Prompt};
use crate::term::{Bindings, Struct, Symbol, Term, Var};
use crate::EngineError;

/// The prompt used by tabled calls.
pub fn tab_prompt() -> Prompt {
    Prompt::new("tab")
}

/// Worker name for a tabled predicate: `path` becomes `path#`.
pub fn worker_symbol(p: Symbol) -> Symbol {
    Symbol::new(&format!("{}#", p.name()))
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Atom(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bar,
    Op(String),
    End,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

const SYMBOLIC: &str = "+-*/\\^<>=~:?@&";
const KNOWN_OPS: &[&str] = &[
    "=:=", "=\\=", ":-", "=<", ">=", "//", "<", ">", "=", "+", "-", "*", "/",
];

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> EngineError {
        EngineError::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn advance(&mut self) -> Option<u8> {
        let b = self.peek_byte()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_layout(&mut self) {
        loop {
            match self.peek_byte() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.advance();
                }
                Some(b'%') => {
                    while let Some(b) = self.peek_byte() {
                        if b == b'\n' {
                            break;
                        }
                        self.advance();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<(Tok, u32, u32), EngineError> {
        self.skip_layout();
        let (line, col) = (self.line, self.col);
        let b = match self.peek_byte() {
            None => return Ok((Tok::Eof, line, col)),
            Some(b) => b,
        };
        let tok = match b {
            b'(' => {
                self.advance();
                Tok::LParen
            }
            b')' => {
                self.advance();
                Tok::RParen
            }
            b'[' => {
                self.advance();
                Tok::LBracket
            }
            b']' => {
                self.advance();
                Tok::RBracket
            }
            b',' => {
                self.advance();
                Tok::Comma
            }
            b'|' => {
                self.advance();
                Tok::Bar
            }
            b';' => {
                self.advance();
                Tok::Op(";".into())
            }
            b'.' => {
                self.advance();
                match self.peek_byte() {
                    None => Tok::End,
                    Some(c) if c.is_ascii_whitespace() || c == b'%' => Tok::End,
                    _ => return Err(self.err("unexpected '.'")),
                }
            }
            b'\'' => {
                self.advance();
                let mut name = String::new();
                loop {
                    match self.advance() {
                        None => return Err(self.err("unterminated quoted atom")),
                        Some(b'\'') => {
                            if self.peek_byte() == Some(b'\'') {
                                self.advance();
                                name.push('\'');
                            } else {
                                break;
                            }
                        }
                        Some(b'\\') => match self.advance() {
                            Some(b'n') => name.push('\n'),
                            Some(b't') => name.push('\t'),
                            Some(b'\\') => name.push('\\'),
                            Some(b'\'') => name.push('\''),
                            _ => return Err(self.err("bad escape in quoted atom")),
                        },
                        Some(c) => name.push(c as char),
                    }
                }
                Tok::Atom(name)
            }
            b'0'..=b'9' => {
                let mut text = String::new();
                while let Some(c) = self.peek_byte() {
                    if c.is_ascii_digit() {
                        text.push(c as char);
                        self.advance();
                    } else {
                        break;
                    }
                }
                let value: i64 = text
                    .parse()
                    .map_err(|_| self.err("integer literal out of range"))?;
                Tok::Int(value)
            }
            b'a'..=b'z' => {
                let mut name = String::new();
                while let Some(c) = self.peek_byte() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        name.push(c as char);
                        self.advance();
                    } else {
                        break;
                    }
                }
                Tok::Atom(name)
            }
            b'A'..=b'Z' | b'_' => {
                let mut name = String::new();
                while let Some(c) = self.peek_byte() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        name.push(c as char);
                        self.advance();
                    } else {
                        break;
                    }
                }
                Tok::Var(name)
            }
            c if SYMBOLIC.contains(c as char) => {
                let mut run = String::new();
                while let Some(c) = self.peek_byte() {
                    if SYMBOLIC.contains(c as char) {
                        run.push(c as char);
                        self.advance();
                    } else {
                        break;
                    }
                }
                if KNOWN_OPS.contains(&run.as_str()) {
                    Tok::Op(run)
                } else {
                    return Err(EngineError::Parse {
                        line,
                        col,
                        msg: format!("unknown operator '{}'", run),
                    });
                }
            }
            other => {
                return Err(self.err(format!("unexpected character '{}'", other as char)))
            }
        };
        Ok((tok, line, col))
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, u32, u32)>, EngineError> {
    let mut lexer = Lexer::new(src);
    let mut out = Vec::new();
    loop {
        let t = lexer.next_token()?;
        let eof = t.0 == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

// (priority, right-associative) for the infix operators accepted in terms
fn infix_op(name: &str) -> Option<(u32, bool)> {
    Some(match name {
        ":-" => (1200, false),
        ";" => (1100, true),
        "," => (1000, true),
        "is" | "=" | "<" | "=<" | ">" | ">=" | "=:=" | "=\\=" => (700, false),
        "+" | "-" => (500, false),
        "*" | "//" | "mod" => (400, false),
        _ => return None,
    })
}

struct VarAlloc {
    by_name: HashMap<String, u32>,
    order: Vec<String>,
    next: u32,
}

impl VarAlloc {
    fn new() -> VarAlloc {
        VarAlloc { by_name: HashMap::new(), order: Vec::new(), next: 0 }
    }

    fn get(&mut self, name: &str) -> Var {
        if name == "_" {
            let v = Var(self.next as u64);
            self.next += 1;
            return v;
        }
        if let Some(&i) = self.by_name.get(name) {
            return Var(i as u64);
        }
        let i = self.next;
        self.next += 1;
        self.by_name.insert(name.to_string(), i);
        self.order.push(name.to_string());
        Var(i as u64)
    }
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
    vars: VarAlloc,
}

impl Parser {
    fn new(toks: Vec<(Tok, u32, u32)>) -> Parser {
        Parser { toks, pos: 0, vars: VarAlloc::new() }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (u32, u32) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn err(&self, msg: impl Into<String>) -> EngineError {
        let (line, col) = self.here();
        EngineError::Parse { line, col, msg: msg.into() }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), EngineError> {
        if self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {}", what)))
        }
    }

    fn parse_term(&mut self, max_prec: u32) -> Result<Term, EngineError> {
        let mut left = self.parse_primary()?;
        loop {
            let (name, prec, right) = match self.peek() {
                Tok::Comma if max_prec >= 1000 => (",".to_string(), 1000, true),
                Tok::Op(s) => match infix_op(s) {
                    Some((p, r)) if p <= max_prec => (s.clone(), p, r),
                    _ => break,
                },
                Tok::Atom(s) => match infix_op(s) {
                    Some((p, r)) if p <= max_prec => (s.clone(), p, r),
                    _ => break,
                },
                _ => break,
            };
            self.bump();
            let rhs = self.parse_term(if right { prec } else { prec - 1 })?;
            left = Term::structure(&name, vec![left, rhs]);
        }
        Ok(left)
    }

    fn parse_primary(&mut self) -> Result<Term, EngineError> {
        match self.bump() {
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Var(name) => Ok(Term::Var(self.vars.get(&name))),
            Tok::Atom(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.parse_term(999)?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.parse_term(999)?);
                    }
                    self.expect(&Tok::RParen, "')'")?;
                    Ok(Term::structure(&name, args))
                } else {
                    Ok(Term::atom(&name))
                }
            }
            Tok::Op(op) if op == "-" => {
                // prefix minus: negative literal or negated expression
                match self.peek().clone() {
                    Tok::Int(i) => {
                        self.bump();
                        Ok(Term::Int(-i))
                    }
                    _ => {
                        let operand = self.parse_term(200)?;
                        Ok(Term::structure("-", vec![operand]))
                    }
                }
            }
            Tok::LParen => {
                let t = self.parse_term(1200)?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(t)
            }
            Tok::LBracket => {
                if *self.peek() == Tok::RBracket {
                    self.bump();
                    return Ok(Term::atom("[]"));
                }
                let mut items = vec![self.parse_term(999)?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    items.push(self.parse_term(999)?);
                }
                let tail = if *self.peek() == Tok::Bar {
                    self.bump();
                    self.parse_term(999)?
                } else {
                    Term::atom("[]")
                };
                self.expect(&Tok::RBracket, "']'")?;
                let mut t = tail;
                for item in items.into_iter().rev() {
                    t = Term::structure(".", vec![item, t]);
                }
                Ok(t)
            }
            other => Err(self.err(format!("unexpected {:?} in term", other))),
        }
    }
}

// ---------------------------------------------------------------------------
// Clause database
// ---------------------------------------------------------------------------

/// One stored clause with variables normalised to `0..nvars`.
#[derive(Clone, Debug)]
pub struct Clause {
    pub head: Term,
    pub body: Goal,
    pub nvars: u32,
}

fn replace_vars(t: &Term, buf: &[Var]) -> Term {
    match t {
        Term::Var(v) => Term::Var(buf[v.0 as usize]),
        Term::Struct(s) => {
            let args = s.args.iter().map(|a| replace_vars(a, buf)).collect();
            Term::Struct(Arc::new(Struct { functor: s.functor, args }))
        }
        other => other.clone(),
    }
}

impl Clause {
    /// Fresh copy of this clause against the engine's variable store.
    pub fn instantiate(&self, b: &mut Bindings) -> (Term, Goal) {
        let buf: Vec<Var> = (0..self.nvars).map(|_| b.fresh_var()).collect();
        let head = replace_vars(&self.head, &buf);
        let body = map_goal(&self.body, &mut |t| replace_vars(t, &buf));
        (head, body)
    }
}

/// First-argument classification for clause indexing.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum IndexKey {
    Atom(Symbol),
    Int(i64),
    Struct(Symbol, u32),
}

impl IndexKey {
    /// `None` means unindexable (variable or big integer): scan everything.
    pub fn classify(t: &Term) -> Option<IndexKey> {
        match t {
            Term::Atom(s) => Some(IndexKey::Atom(*s)),
            Term::Int(i) => Some(IndexKey::Int(*i)),
            Term::Struct(s) => Some(IndexKey::Struct(s.functor, s.args.len() as u32)),
            _ => None,
        }
    }
}

#[derive(Debug, Default)]
struct ArgIndex {
    all: Arc<[u32]>,
    var_only: Arc<[u32]>,
    buckets: HashMap<IndexKey, Arc<[u32]>>,
}

impl ArgIndex {
    fn build(clauses: &[Clause]) -> ArgIndex {
        let all: Arc<[u32]> = (0..clauses.len() as u32).collect();
        let mut var_idx: Vec<u32> = Vec::new();
        let mut raw: HashMap<IndexKey, Vec<u32>> = HashMap::new();
        let mut indexable = false;
        for (i, c) in clauses.iter().enumerate() {
            match &c.head {
                Term::Struct(s) => {
                    indexable = true;
                    match IndexKey::classify(&s.args[0]) {
                        Some(k) => raw.entry(k).or_default().push(i as u32),
                        None => var_idx.push(i as u32),
                    }
                }
                _ => {
                    // zero-arity predicate: no first argument to index on
                }
            }
        }
        if !indexable {
            return ArgIndex { all, var_only: Arc::from(vec![]), buckets: HashMap::new() };
        }
        let mut buckets = HashMap::new();
        for (k, mut hits) in raw {
            hits.extend_from_slice(&var_idx);
            hits.sort_unstable();
            buckets.insert(k, Arc::from(hits));
        }
        ArgIndex { all, var_only: var_idx.into(), buckets }
    }
}

#[derive(Debug)]
pub struct PredEntry {
    pub clauses: Arc<[Clause]>,
    index: ArgIndex,
}

impl PredEntry {
    /// Clause candidates in source order for a call whose first argument
    /// dereferences to `key` (`None`: unbound or unindexable).
    pub fn candidates(&self, key: Option<IndexKey>) -> Arc<[u32]> {
        match key {
            None => self.index.all.clone(),
            Some(k) => match self.index.buckets.get(&k) {
                Some(hits) => hits.clone(),
                None => self.index.var_only.clone(),
            },
        }
    }
}

/// Map from predicate indicator to ordered clause list, plus the set of
/// tabled predicates. Immutable after load.
#[derive(Debug)]
pub struct ClauseDB {
    preds: IndexMap<(Symbol, u32), PredEntry>,
    tabled: IndexSet<(Symbol, u32)>,
}

impl ClauseDB {
    pub fn lookup(&self, functor: Symbol, arity: u32) -> Option<&PredEntry> {
        self.preds.get(&(functor, arity))
    }

    pub fn is_tabled(&self, functor: Symbol, arity: u32) -> bool {
        self.tabled.contains(&(functor, arity))
    }

    pub fn tabled_preds(&self) -> impl Iterator<Item = &(Symbol, u32)> {
        self.tabled.iter()
    }

    pub fn preds(&self) -> impl Iterator<Item = (&(Symbol, u32), &PredEntry)> {
        self.preds.iter()
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn compile_body(t: &Term, line: u32) -> Result<Goal, EngineError> {
    let err = |msg: String| EngineError::Parse { line, col: 0, msg };
    match t {
        Term::Atom(s) => match &*s.name() {
            "true" => Ok(Goal::True),
            "fail" | "false" => Ok(Goal::Fail),
            _ => Ok(Goal::Call(t.clone())),
        },
        Term::Struct(s) => {
            let name = s.functor.name();
            match (&*name, s.args.len()) {
                (",", 2) => Ok(Goal::conj(
                    compile_body(&s.args[0], line)?,
                    compile_body(&s.args[1], line)?,
                )),
                (";", 2) => Ok(Goal::disj(
                    compile_body(&s.args[0], line)?,
                    compile_body(&s.args[1], line)?,
                )),
                ("=", 2) => Ok(Goal::Unify(s.args[0].clone(), s.args[1].clone())),
                _ => match BuiltinOp::from_name(&name) {
                    Some(op) if s.args.len() == 2 => {
                        Ok(Goal::Builtin(op, s.args.clone()))
                    }
                    _ => Ok(Goal::Call(t.clone())),
                },
            }
        }
        Term::Var(_) => Err(err("variable goal in clause body".into())),
        other => Err(err(format!("non-callable goal: {}", other))),
    }
}

struct Loader {
    clauses: IndexMap<(Symbol, u32), Vec<Clause>>,
    tabled: IndexSet<(Symbol, u32)>,
}

impl Loader {
    fn new() -> Loader {
        Loader { clauses: IndexMap::new(), tabled: IndexSet::new() }
    }

    fn add_clause(&mut self, head: Term, body: Goal, nvars: u32, line: u32) -> Result<(), EngineError> {
        let (functor, arity) = head.functor_arity().ok_or(EngineError::Parse {
            line,
            col: 0,
            msg: "clause head must be an atom or a compound term".into(),
        })?;
        if is_builtin(functor, arity) {
            return Err(EngineError::Parse {
                line,
                col: 0,
                msg: format!("cannot redefine builtin {}/{}", functor, arity),
            });
        }
        if functor.name().ends_with('#') {
            return Err(EngineError::Parse {
                line,
                col: 0,
                msg: "predicate names ending in '#' are reserved".into(),
            });
        }
        self.clauses
            .entry((functor, arity))
            .or_default()
            .push(Clause { head, body, nvars });
        Ok(())
    }

    fn add_table_spec(&mut self, spec: &Term, line: u32) -> Result<(), EngineError> {
        let err = |msg: String| EngineError::Parse { line, col: 0, msg };
        match spec {
            Term::Struct(s) if &*s.functor.name() == "," && s.args.len() == 2 => {
                self.add_table_spec(&s.args[0], line)?;
                self.add_table_spec(&s.args[1], line)
            }
            Term::Struct(s) if &*s.functor.name() == "/" && s.args.len() == 2 => {
                let name = match &s.args[0] {
                    Term::Atom(a) => *a,
                    other => return Err(err(format!("bad predicate name {}", other))),
                };
                let arity = match &s.args[1] {
                    Term::Int(i) if *i >= 0 => *i as u32,
                    other => return Err(err(format!("bad arity {}", other))),
                };
                if is_builtin(name, arity) {
                    return Err(err(format!("cannot table builtin {}/{}", name, arity)));
                }
                // double declaration is a no-op
                self.tabled.insert((name, arity));
                Ok(())
            }
            Term::Struct(s) if &*s.functor.name() == "//" && s.args.len() == 2 => {
                Err(err("grammar-rule table specs (name//arity) are not supported".into()))
            }
            other => Err(err(format!("bad table spec {}", other))),
        }
    }

    fn directive(&mut self, t: &Term, line: u32) -> Result<(), EngineError> {
        match t {
            Term::Struct(s) if &*s.functor.name() == "table" && s.args.len() == 1 => {
                self.add_table_spec(&s.args[0], line)
            }
            other => Err(EngineError::Parse {
                line,
                col: 0,
                msg: format!("unknown directive {}", other),
            }),
        }
    }

    fn finish(mut self) -> Result<ClauseDB, EngineError> {
        // re-home tabled predicates under their worker names and install
        // the wrapper clauses
        for &(p, n) in self.tabled.clone().iter() {
            let worker = worker_symbol(p);
            let user_clauses = self.clauses.shift_remove(&(p, n)).unwrap_or_default();
            let rehomed: Vec<Clause> = user_clauses
                .into_iter()
                .map(|c| {
                    let head = match &c.head {
                        Term::Atom(_) => Term::Atom(worker),
                        Term::Struct(s) => Term::app(worker, s.args.clone()),
                        other => other.clone(),
                    };
                    Clause { head, ..c }
                })
                .collect();
            self.clauses.insert((worker, n), rehomed);
            let args: Vec<Term> = (0..n).map(|i| Term::Var(Var(i as u64))).collect();
            let head = Term::app(p, args.clone());
            let signal = Term::app(worker, args);
            let wrapper = Clause {
                head,
                body: Goal::Shift(tab_prompt(), signal),
                nvars: n,
            };
            self.clauses.insert((p, n), vec![wrapper]);
        }
        let mut preds = IndexMap::new();
        for ((f, n), clauses) in self.clauses {
            let index = ArgIndex::build(&clauses);
            preds.insert((f, n), PredEntry { clauses: clauses.into(), index });
        }
        Ok(ClauseDB { preds, tabled: self.tabled })
    }
}

/// Parses a program text into a finalised clause database, applying table
/// directives in file order.
pub fn parse_program(text: &str) -> Result<ClauseDB, EngineError> {
    let toks = tokenize(text)?;
    let mut parser = Parser::new(toks);
    let mut loader = Loader::new();
    loop {
        if *parser.peek() == Tok::Eof {
            break;
        }
        let (line, _) = parser.here();
        parser.vars = VarAlloc::new();
        if *parser.peek() == Tok::Op(":-".into()) {
            parser.bump();
            let t = parser.parse_term(1200)?;
            parser.expect(&Tok::End, "'.' after directive")?;
            loader.directive(&t, line)?;
            continue;
        }
        let t = parser.parse_term(1200)?;
        parser.expect(&Tok::End, "'.' after clause")?;
        let nvars = parser.vars.next;
        match &t {
            Term::Struct(s) if &*s.functor.name() == ":-" && s.args.len() == 2 => {
                let body = compile_body(&s.args[1], line)?;
                loader.add_clause(s.args[0].clone(), body, nvars, line)?;
            }
            _ => loader.add_clause(t, Goal::True, nvars, line)?,
        }
    }
    loader.finish()
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

/// A parsed query with normalised variables and the source names of the
/// named ones, for output formatting.
#[derive(Clone, Debug)]
pub struct Query {
    pub term: Term,
    nvars: u32,
    names: Vec<(String, u32)>,
    line: u32,
}

/// A query instantiated against an engine's variable store.
pub struct InstantiatedQuery {
    pub term: Term,
    pub goal: Goal,
    pub vars: Vec<(String, Var)>,
}

impl Query {
    pub fn instantiate(&self, b: &mut Bindings) -> InstantiatedQuery {
        let buf: Vec<Var> = (0..self.nvars).map(|_| b.fresh_var()).collect();
        let term = replace_vars(&self.term, &buf);
        let goal = compile_body(&term, self.line).expect("query was validated at parse time");
        let vars = self
            .names
            .iter()
            .map(|(name, i)| (name.clone(), buf[*i as usize]))
            .collect();
        InstantiatedQuery { term, goal, vars }
    }
}

/// Parses a goal term; same grammar as clause bodies, with named variables
/// recorded for output formatting.
pub fn parse_query(text: &str) -> Result<Query, EngineError> {
    let toks = tokenize(text)?;
    let mut parser = Parser::new(toks);
    let term = parser.parse_term(1200)?;
    if *parser.peek() == Tok::End {
        parser.bump();
    }
    if *parser.peek() != Tok::Eof {
        return Err(parser.err("unexpected input after query"));
    }
    let nvars = parser.vars.next;
    let names: Vec<(String, u32)> = parser
        .vars
        .order
        .iter()
        .map(|n| (n.clone(), parser.vars.by_name[n]))
        .collect();
    // validate now so instantiation cannot fail
    compile_body(&term, 1)?;
    Ok(Query { term, nvars, names, line: 1 })
}

// ---------------------------------------------------------------------------
// Printing (round-trip form)
// ---------------------------------------------------------------------------

fn goal_to_term(g: &Goal) -> Term {
    match g {
        Goal::True => Term::atom("true"),
        Goal::Fail => Term::atom("fail"),
        Goal::Unify(a, b) => Term::structure("=", vec![a.clone(), b.clone()]),
        Goal::Call(t) => t.clone(),
        Goal::Conj(a, b) => Term::structure(",", vec![goal_to_term(a), goal_to_term(b)]),
        Goal::Disj(a, b) => Term::structure(";", vec![goal_to_term(a), goal_to_term(b)]),
        Goal::Builtin(op, args) => Term::structure(op.name(), args.to_vec()),
        Goal::Shift(_, sig) => Term::structure("$shift", vec![sig.clone()]),
        other => Term::structure("$opaque", vec![Term::atom(&format!("{:?}", other))]),
    }
}

impl fmt::Display for ClauseDB {
    /// Prints the database in re-parseable source form: table directives
    /// first, worker predicates de-renamed back to their surface names,
    /// wrapper clauses omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, n) in self.tabled.iter() {
            writeln!(f, ":- table {}/{}.", p, n)?;
        }
        for ((sym, arity), entry) in self.preds.iter() {
            if self.tabled.contains(&(*sym, *arity)) {
                continue; // wrapper
            }
            let name = sym.name();
            let display_sym = match name.strip_suffix('#') {
                Some(base) if self.tabled.contains(&(Symbol::new(base), *arity)) => {
                    Symbol::new(base)
                }
                _ => *sym,
            };
            for clause in entry.clauses.iter() {
                let head = match &clause.head {
                    Term::Atom(_) => Term::Atom(display_sym),
                    Term::Struct(s) => Term::app(display_sym, s.args.clone()),
                    other => other.clone(),
                };
                match &clause.body {
                    Goal::True => writeln!(f, "{}.", head)?,
                    body => writeln!(f, "{} :- {}.", head, goal_to_term(body))?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_fact() {
        let db = parse_program("p(a).").unwrap();
        let entry = db.lookup(Symbol::new("p"), 1).unwrap();
        assert_eq!(entry.clauses.len(), 1);
        assert_eq!(entry.clauses[0].head, Term::structure("p", vec![Term::atom("a")]));
    }

    #[test]
    fn table_directive_renames() {
        let src = "
            :- table path/2.
            path(X,Z) :- edge(X,Z).
            path(X,Z) :- path(X,Y), edge(Y,Z).
            edge(a,b).
        ";
        let db = parse_program(src).unwrap();
        let worker = db.lookup(Symbol::new("path#"), 2).unwrap();
        assert_eq!(worker.clauses.len(), 2);
        let wrapper = db.lookup(Symbol::new("path"), 2).unwrap();
        assert_eq!(wrapper.clauses.len(), 1);
        assert!(matches!(wrapper.clauses[0].body, Goal::Shift(_, _)));
        assert!(db.is_tabled(Symbol::new("path"), 2));
    }

    #[test]
    fn directive_before_or_after_clauses() {
        let a = parse_program(":- table f/2.\nf(0,1).\nf(1,1).").unwrap();
        let b = parse_program("f(0,1).\nf(1,1).\n:- table f/2.").unwrap();
        for db in [&a, &b] {
            assert_eq!(db.lookup(Symbol::new("f#"), 2).unwrap().clauses.len(), 2);
            assert_eq!(db.lookup(Symbol::new("f"), 2).unwrap().clauses.len(), 1);
        }
    }

    #[test]
    fn double_declaration_is_noop() {
        let db = parse_program(":- table f/2.\n:- table f/2.\nf(0,1).").unwrap();
        assert_eq!(db.lookup(Symbol::new("f#"), 2).unwrap().clauses.len(), 1);
        assert_eq!(db.tabled_preds().count(), 1);
    }

    #[test]
    fn table_with_zero_clauses_is_legal() {
        let db = parse_program(":- table nothing/1.").unwrap();
        let worker = db.lookup(Symbol::new("nothing#"), 1).unwrap();
        assert!(worker.clauses.is_empty());
        assert!(db.lookup(Symbol::new("nothing"), 1).is_some());
    }

    #[test]
    fn table_builtin_rejected() {
        assert!(matches!(
            parse_program(":- table is/2."),
            Err(EngineError::Parse { .. })
        ));
    }

    #[test]
    fn dcg_table_spec_rejected() {
        assert!(matches!(
            parse_program(":- table path//0."),
            Err(EngineError::Parse { .. })
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_program("p(X) :- q(X") {
            Err(EngineError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn parse_query_records_names() {
        let q = parse_query("path(a,W)").unwrap();
        let mut b = Bindings::new();
        let inst = q.instantiate(&mut b);
        assert_eq!(inst.vars.len(), 1);
        assert_eq!(inst.vars[0].0, "W");
        assert!(matches!(inst.goal, Goal::Call(_)));
    }

    #[test]
    fn parse_conjunctive_query() {
        let q = parse_query("p(X), q(X)").unwrap();
        let mut b = Bindings::new();
        let inst = q.instantiate(&mut b);
        assert!(matches!(inst.goal, Goal::Conj(_, _)));
        assert_eq!(inst.vars.len(), 1);
    }

    #[test]
    fn arithmetic_parses_with_precedence() {
        let q = parse_query("X is 1 + 2 * 3").unwrap();
        let mut b = Bindings::new();
        let inst = q.instantiate(&mut b);
        match inst.goal {
            Goal::Builtin(BuiltinOp::Is, args) => {
                assert_eq!(format!("{}", args[1]), "1 + 2 * 3");
            }
            other => panic!("expected is/2, got {:?}", other),
        }
    }

    #[test]
    fn negative_literals_and_parens() {
        let q = parse_query("X is (2 + 1) * -3").unwrap();
        let mut b = Bindings::new();
        let inst = q.instantiate(&mut b);
        let sols_goal = inst.goal;
        match sols_goal {
            Goal::Builtin(BuiltinOp::Is, args) => {
                let val = crate::builtins::eval_arith(&args[1], &b).unwrap();
                assert_eq!(val, crate::builtins::Num::I(-9));
            }
            other => panic!("expected is/2, got {:?}", other),
        }
    }

    #[test]
    fn list_notation() {
        let q = parse_query("X = [1,2|T]").unwrap();
        let mut b = Bindings::new();
        let inst = q.instantiate(&mut b);
        match inst.goal {
            Goal::Unify(_, rhs) => assert_eq!(format!("{}", rhs), "[1,2|_G1]"),
            other => panic!("expected =/2, got {:?}", other),
        }
    }

    #[test]
    fn round_trip_is_structurally_identical() {
        let src = "
            :- table path/2.
            path(X,Z) :- edge(X,Z).
            path(X,Z) :- path(X,Y), edge(Y,Z).
            edge(a,b). edge(b,c).
            len([],0).
            len([_|T],N) :- len(T,M), N is M + 1.
        ";
        let db = parse_program(src).unwrap();
        let printed = format!("{}", db);
        let db2 = parse_program(&printed).unwrap();
        let printed2 = format!("{}", db2);
        assert_eq!(printed, printed2);
        // same predicates, same clause counts, variant heads
        for ((f, n), entry) in db.preds() {
            let entry2 = db2.lookup(*f, *n).unwrap_or_else(|| panic!("missing {}/{}", f, n));
            assert_eq!(entry.clauses.len(), entry2.clauses.len());
            let b = Bindings::new();
            for (c1, c2) in entry.clauses.iter().zip(entry2.clauses.iter()) {
                assert!(crate::term::is_variant(&c1.head, &b, &c2.head, &b));
            }
        }
    }

    #[test]
    fn first_arg_indexing_preserves_order() {
        let src = "p(a,1). p(b,2). p(X,3). p(a,4).";
        let db = parse_program(src).unwrap();
        let entry = db.lookup(Symbol::new("p"), 2).unwrap();
        let hits = entry.candidates(Some(IndexKey::Atom(Symbol::new("a"))));
        assert_eq!(&*hits, &[0, 2, 3]);
        let hits = entry.candidates(Some(IndexKey::Atom(Symbol::new("zz"))));
        assert_eq!(&*hits, &[2]);
        let hits = entry.candidates(None);
        assert_eq!(&*hits, &[0, 1, 2, 3]);
    }
}
