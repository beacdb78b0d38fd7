//! Terms, bindings and variant-class canonicalisation.
//!
//! A [`Term`] is the universal value of the engine: variables, interned
//! atoms, integers (64-bit with automatic promotion to big integers) and
//! compound structures. [`Bindings`] holds the current substitution together
//! with an undo trail, so unification can be rolled back to any checkpoint.
//! [`variant_key`] maps a call to the ground canonical form that identifies
//! its variant class: each distinct free variable is replaced, in
//! first-occurrence depth-first order, by `'$VAR'(i)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use once_cell::sync::Lazy;
use std::sync::RwLock;

/// An interned atom or functor name.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

struct Interner {
    names: Vec<Arc<str>>,
    by_name: HashMap<Arc<str>, u32>,
}

static INTERNER: Lazy<RwLock<Interner>> = Lazy::new(|| {
    RwLock::new(Interner { names: Vec::new(), by_name: HashMap::new() })
});

impl Symbol {
    pub fn new(name: &str) -> Symbol {
        {
            let interner = INTERNER.read().unwrap();
            if let Some(&id) = interner.by_name.get(name) {
                return Symbol(id);
            }
        }
        let mut interner = INTERNER.write().unwrap();
        if let Some(&id) = interner.by_name.get(name) {
            return Symbol(id);
        }
        let id = interner.names.len() as u32;
        let owned: Arc<str> = Arc::from(name);
        interner.names.push(owned.clone());
        interner.by_name.insert(owned, id);
        Symbol(id)
    }

    pub fn name(&self) -> Arc<str> {
        INTERNER.read().unwrap().names[self.0 as usize].clone()
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A logic variable, identified by a monotonically increasing id from the
/// engine's [`Bindings`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub u64);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_G{}", self.0)
    }
}

/// A compound structure; arity is always at least 1 (zero-arity structures
/// are atoms).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Struct {
    pub functor: Symbol,
    pub args: Vec<Term>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Atom(Symbol),
    Int(i64),
    /// A big integer; by construction never holds a value that fits in i64.
    Big(Arc<BigInt>),
    Struct(Arc<Struct>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Symbol::new(name))
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    /// Builds an integer term, normalising to `Int` when the value fits.
    pub fn big(value: BigInt) -> Term {
        match i64::try_from(&value) {
            Ok(v) => Term::Int(v),
            Err(_) => Term::Big(Arc::new(value)),
        }
    }

    pub fn structure(functor: &str, args: Vec<Term>) -> Term {
        assert!(!args.is_empty(), "zero-arity structures are atoms");
        Term::Struct(Arc::new(Struct { functor: Symbol::new(functor), args }))
    }

    pub fn app(functor: Symbol, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Atom(functor)
        } else {
            Term::Struct(Arc::new(Struct { functor, args }))
        }
    }

    /// Principal functor and arity, for atoms and structures.
    pub fn functor_arity(&self) -> Option<(Symbol, u32)> {
        match self {
            Term::Atom(s) => Some((*s, 0)),
            Term::Struct(s) => Some((s.functor, s.args.len() as u32)),
            _ => None,
        }
    }

    pub fn is_ground_constant(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Int(_) | Term::Big(_))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// The functor used for canonical variable markers, as in `'$VAR'(0)`.
pub fn var_marker_symbol() -> Symbol {
    Symbol::new("$VAR")
}

fn list_cons() -> Symbol {
    Symbol::new(".")
}

fn list_nil() -> Symbol {
    Symbol::new("[]")
}

pub fn list_term(items: Vec<Term>) -> Term {
    let mut t = Term::Atom(list_nil());
    for item in items.into_iter().rev() {
        t = Term::Struct(Arc::new(Struct { functor: list_cons(), args: vec![item, t] }));
    }
    t
}

// Operator table used when printing terms back in source syntax.
// (priority, name); xfx comparisons at 700, yfx arithmetic below.
const INFIX_OPS: &[(&str, u32)] = &[
    (";", 1100),
    (",", 1000),
    ("is", 700),
    ("=", 700),
    ("<", 700),
    ("=<", 700),
    (">", 700),
    (">=", 700),
    ("=:=", 700),
    ("=\\=", 700),
    ("+", 500),
    ("-", 500),
    ("*", 400),
    ("//", 400),
    ("mod", 400),
];

fn infix_priority(name: &str) -> Option<u32> {
    INFIX_OPS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

fn atom_needs_quotes(name: &str) -> bool {
    if name == "[]" || name == "{}" || name == "!" || name == ";" {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {
            !chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
        Some(first) => {
            // solid runs of symbol characters print bare
            let symbolic = "+-*/\\^<>=~:.?@#&$";
            !(symbolic.contains(first) && name.chars().all(|c| symbolic.contains(c)))
        }
        None => true,
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if atom_needs_quotes(name) {
        write!(f, "'")?;
        for c in name.chars() {
            match c {
                '\'' => write!(f, "\\'")?,
                '\\' => write!(f, "\\\\")?,
                '\n' => write!(f, "\\n")?,
                '\t' => write!(f, "\\t")?,
                _ => write!(f, "{}", c)?,
            }
        }
        write!(f, "'")
    } else {
        write!(f, "{}", name)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, max_priority: u32) -> fmt::Result {
    match t {
        Term::Var(v) => write!(f, "{}", v),
        Term::Atom(s) => write_atom(f, &s.name()),
        Term::Int(i) => write!(f, "{}", i),
        Term::Big(b) => write!(f, "{}", b),
        Term::Struct(s) => {
            let name = s.functor.name();
            if *name == *"." && s.args.len() == 2 {
                return write_list(f, t);
            }
            if s.args.len() == 2 {
                if let Some(p) = infix_priority(&name) {
                    let needs_parens = p > max_priority;
                    if needs_parens {
                        write!(f, "(")?;
                    }
                    // print as yfx for arithmetic, xfx/xfy tight enough elsewhere
                    write_term(f, &s.args[0], p)?;
                    if *name == *"," {
                        write!(f, ", ")?;
                    } else {
                        write!(f, " {} ", name)?;
                    }
                    write_term(f, &s.args[1], p.saturating_sub(1))?;
                    if needs_parens {
                        write!(f, ")")?;
                    }
                    return Ok(());
                }
            }
            write_atom(f, &name)?;
            write!(f, "(")?;
            for (i, a) in s.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write_term(f, a, 999)?;
            }
            write!(f, ")")
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    write!(f, "[")?;
    let mut cur = t;
    let mut first = true;
    loop {
        match cur {
            Term::Struct(s) if s.functor == list_cons() && s.args.len() == 2 => {
                if !first {
                    write!(f, ",")?;
                }
                write_term(f, &s.args[0], 999)?;
                first = false;
                cur = &s.args[1];
            }
            Term::Atom(s) if *s == list_nil() => break,
            other => {
                write!(f, "|")?;
                write_term(f, other, 999)?;
                break;
            }
        }
    }
    write!(f, "]")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, 1200)
    }
}

/// Ground canonical form of a call, identifying its variant class.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VariantKey(pub Term);

impl fmt::Debug for VariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for VariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Trail checkpoint; undoing to it restores the exact binding state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Checkpoint(usize);

/// The variable store: a map from variable id to bound term plus the undo
/// trail of variables bound since any checkpoint. Also the source of fresh
/// variables for one engine.
pub struct Bindings {
    slots: Vec<Option<Term>>,
    trail: Vec<u64>,
}

impl Default for Bindings {
    fn default() -> Self {
        Self::new()
    }
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings { slots: Vec::new(), trail: Vec::new() }
    }

    pub fn fresh_var(&mut self) -> Var {
        let id = self.slots.len() as u64;
        self.slots.push(None);
        Var(id)
    }

    pub fn var_count(&self) -> u64 {
        self.slots.len() as u64
    }

    pub fn lookup(&self, v: Var) -> Option<&Term> {
        self.slots.get(v.0 as usize).and_then(|s| s.as_ref())
    }

    pub fn is_bound(&self, v: Var) -> bool {
        self.lookup(v).is_some()
    }

    /// Follows variable chains until an unbound variable or a non-variable
    /// term. Shallow: structure arguments are not entered.
    pub fn deref<'a>(&'a self, t: &'a Term) -> &'a Term {
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.lookup(*v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    pub fn bind(&mut self, v: Var, t: Term) {
        debug_assert!(self.lookup(v).is_none(), "binding an already bound variable");
        self.slots[v.0 as usize] = Some(t);
        self.trail.push(v.0);
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint(self.trail.len())
    }

    pub fn undo_to(&mut self, cp: Checkpoint) {
        while self.trail.len() > cp.0 {
            let id = self.trail.pop().unwrap();
            self.slots[id as usize] = None;
        }
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        let mut work = vec![t.clone()];
        while let Some(t) = work.pop() {
            match self.deref(&t) {
                Term::Var(w) => {
                    if *w == v {
                        return true;
                    }
                }
                Term::Struct(s) => work.extend(s.args.iter().cloned()),
                _ => {}
            }
        }
        false
    }

    /// Unification with occurs check. On success the bindings are the most
    /// general unifier extension and every newly bound variable is trailed;
    /// on failure the bindings are restored unchanged.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let mark = self.checkpoint();
        let mut work = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = work.pop() {
            let x = self.deref(&x).clone();
            let y = self.deref(&y).clone();
            let ok = match (&x, &y) {
                (Term::Var(v), Term::Var(w)) if v == w => true,
                (Term::Var(v), other) => {
                    if self.occurs(*v, other) {
                        false
                    } else {
                        self.bind(*v, other.clone());
                        true
                    }
                }
                (other, Term::Var(v)) => {
                    if self.occurs(*v, other) {
                        false
                    } else {
                        self.bind(*v, other.clone());
                        true
                    }
                }
                (Term::Atom(p), Term::Atom(q)) => p == q,
                (Term::Int(i), Term::Int(j)) => i == j,
                (Term::Big(i), Term::Big(j)) => i == j,
                (Term::Struct(s1), Term::Struct(s2)) => {
                    if s1.functor == s2.functor && s1.args.len() == s2.args.len() {
                        for (p, q) in s1.args.iter().zip(s2.args.iter()) {
                            work.push((p.clone(), q.clone()));
                        }
                        true
                    } else {
                        false
                    }
                }
                _ => false,
            };
            if !ok {
                self.undo_to(mark);
                return false;
            }
        }
        true
    }

    /// Deep copy of `t` with current bindings resolved in; unbound variables
    /// stay as they are.
    pub fn resolve(&self, t: &Term) -> Term {
        let t = self.deref(t);
        match t {
            Term::Struct(s) => {
                let args = s.args.iter().map(|a| self.resolve(a)).collect();
                Term::Struct(Arc::new(Struct { functor: s.functor, args }))
            }
            other => other.clone(),
        }
    }
}

/// Distinct free variables of `t` under `b`, in depth-first left-to-right
/// first-occurrence order.
pub fn term_variables(t: &Term, b: &Bindings) -> Vec<Var> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    collect_vars(t, b, &mut out, &mut seen);
    out
}

fn collect_vars(t: &Term, b: &Bindings, out: &mut Vec<Var>, seen: &mut HashMap<Var, ()>) {
    match b.deref(t) {
        Term::Var(v) => {
            let v = *v;
            if seen.insert(v, ()).is_none() {
                out.push(v);
            }
        }
        Term::Struct(s) => {
            let s = s.clone();
            for a in s.args.iter() {
                collect_vars(a, b, out, seen);
            }
        }
        _ => {}
    }
}

/// Canonicalises a call into its variant-class key: the dereferenced term
/// with each distinct free variable replaced by `'$VAR'(i)` in first
/// occurrence order. The original term is not mutated.
pub fn variant_key(t: &Term, b: &Bindings) -> VariantKey {
    let mut map: HashMap<Var, i64> = HashMap::new();
    VariantKey(canon(t, b, &mut map))
}

fn canon(t: &Term, b: &Bindings, map: &mut HashMap<Var, i64>) -> Term {
    match b.deref(t) {
        Term::Var(v) => {
            let n = map.len() as i64;
            let i = *map.entry(*v).or_insert(n);
            Term::Struct(Arc::new(Struct {
                functor: var_marker_symbol(),
                args: vec![Term::Int(i)],
            }))
        }
        Term::Struct(s) => {
            let s = s.clone();
            let args = s.args.iter().map(|a| canon(a, b, map)).collect();
            Term::Struct(Arc::new(Struct { functor: s.functor, args }))
        }
        other => other.clone(),
    }
}

/// Replaces each `'$VAR'(i)` marker in a canonical term by a fresh variable,
/// the same variable for equal `i`.
pub fn decode_variant(t: &Term, b: &mut Bindings) -> Term {
    let mut map: HashMap<i64, Var> = HashMap::new();
    decode(t, b, &mut map)
}

fn decode(t: &Term, b: &mut Bindings, map: &mut HashMap<i64, Var>) -> Term {
    match t {
        Term::Struct(s) if s.functor == var_marker_symbol() && s.args.len() == 1 => {
            if let Term::Int(i) = s.args[0] {
                let v = *map.entry(i).or_insert_with(|| b.fresh_var());
                return Term::Var(v);
            }
            t.clone()
        }
        Term::Struct(s) => {
            let args = s.args.iter().map(|a| decode(a, b, map)).collect();
            Term::Struct(Arc::new(Struct { functor: s.functor, args }))
        }
        other => other.clone(),
    }
}

/// Copy of `t` (dereferenced) where every free variable except the protected
/// ones is replaced by a fresh variable. Returns the copy and the mapping of
/// renamed variables.
pub fn rename_fresh(
    t: &Term,
    protected: &[Var],
    b: &mut Bindings,
) -> (Term, HashMap<Var, Var>) {
    let mut map = HashMap::new();
    let copy = rename(t, protected, b, &mut map);
    (copy, map)
}

fn rename(t: &Term, protected: &[Var], b: &mut Bindings, map: &mut HashMap<Var, Var>) -> Term {
    match b.deref(t).clone() {
        Term::Var(v) => {
            if protected.contains(&v) {
                Term::Var(v)
            } else if let Some(&w) = map.get(&v) {
                Term::Var(w)
            } else {
                let w = b.fresh_var();
                map.insert(v, w);
                Term::Var(w)
            }
        }
        Term::Struct(s) => {
            let args = s.args.iter().map(|a| rename(a, protected, b, map)).collect();
            Term::Struct(Arc::new(Struct { functor: s.functor, args }))
        }
        other => other,
    }
}

/// Structural rename of a frozen term: variables are mapped through `map`
/// (extended with fresh variables on first occurrence) and current bindings
/// are deliberately not consulted. Used when reactivating captured
/// continuation snapshots.
pub fn rename_frozen(t: &Term, map: &mut HashMap<Var, Var>, b: &mut Bindings) -> Term {
    match t {
        Term::Var(v) => {
            if let Some(&w) = map.get(v) {
                Term::Var(w)
            } else {
                let w = b.fresh_var();
                map.insert(*v, w);
                Term::Var(w)
            }
        }
        Term::Struct(s) => {
            let args = s.args.iter().map(|a| rename_frozen(a, map, b)).collect();
            Term::Struct(Arc::new(Struct { functor: s.functor, args }))
        }
        other => other.clone(),
    }
}

/// Independent variant check by simultaneous traversal: true iff there is a
/// bijective renaming of free variables taking `a` to `b`.
pub fn is_variant(a: &Term, ba: &Bindings, b: &Term, bb: &Bindings) -> bool {
    let mut fwd: HashMap<Var, Var> = HashMap::new();
    let mut bwd: HashMap<Var, Var> = HashMap::new();
    variant_walk(a, ba, b, bb, &mut fwd, &mut bwd)
}

fn variant_walk(
    a: &Term,
    ba: &Bindings,
    b: &Term,
    bb: &Bindings,
    fwd: &mut HashMap<Var, Var>,
    bwd: &mut HashMap<Var, Var>,
) -> bool {
    match (ba.deref(a), bb.deref(b)) {
        (Term::Var(x), Term::Var(y)) => {
            let (x, y) = (*x, *y);
            match (fwd.get(&x), bwd.get(&y)) {
                (None, None) => {
                    fwd.insert(x, y);
                    bwd.insert(y, x);
                    true
                }
                (Some(&y2), Some(&x2)) => y2 == y && x2 == x,
                _ => false,
            }
        }
        (Term::Atom(p), Term::Atom(q)) => p == q,
        (Term::Int(i), Term::Int(j)) => i == j,
        (Term::Big(i), Term::Big(j)) => i == j,
        (Term::Struct(s1), Term::Struct(s2)) => {
            if s1.functor != s2.functor || s1.args.len() != s2.args.len() {
                return false;
            }
            let (s1, s2) = (s1.clone(), s2.clone());
            s1.args
                .iter()
                .zip(s2.args.iter())
                .all(|(p, q)| variant_walk(p, ba, q, bb, fwd, bwd))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(b: &mut Bindings) -> Term {
        Term::Var(b.fresh_var())
    }

    #[test]
    fn unify_examples() {
        // unify(f(X,b), f(a,Y)) -> {X=a, Y=b}
        let mut b = Bindings::new();
        let x = v(&mut b);
        let y = v(&mut b);
        let lhs = Term::structure("f", vec![x.clone(), Term::atom("b")]);
        let rhs = Term::structure("f", vec![Term::atom("a"), y.clone()]);
        assert!(b.unify(&lhs, &rhs));
        assert_eq!(b.resolve(&x), Term::atom("a"));
        assert_eq!(b.resolve(&y), Term::atom("b"));

        // distinct atoms fail
        let mut b = Bindings::new();
        assert!(!b.unify(&Term::atom("a"), &Term::atom("b")));

        // occurs check: X = f(X) fails
        let mut b = Bindings::new();
        let x = v(&mut b);
        let fx = Term::structure("f", vec![x.clone()]);
        assert!(!b.unify(&x, &fx));

        // g(X,X) with g(a,b) fails, and bindings are restored
        let mut b = Bindings::new();
        let x = v(&mut b);
        let lhs = Term::structure("g", vec![x.clone(), x.clone()]);
        let rhs = Term::structure("g", vec![Term::atom("a"), Term::atom("b")]);
        let mark = b.checkpoint();
        assert!(!b.unify(&lhs, &rhs));
        assert_eq!(mark, b.checkpoint());
        assert!(matches!(b.deref(&x), Term::Var(_)));
    }

    #[test]
    fn unify_failure_restores_exactly() {
        let mut b = Bindings::new();
        let x = v(&mut b);
        let y = v(&mut b);
        assert!(b.unify(&x, &Term::atom("a")));
        let cp = b.checkpoint();
        let lhs = Term::structure("g", vec![y.clone(), y.clone()]);
        let rhs = Term::structure("g", vec![Term::atom("c"), Term::atom("d")]);
        assert!(!b.unify(&lhs, &rhs));
        assert_eq!(cp, b.checkpoint());
        assert_eq!(b.resolve(&x), Term::atom("a"));
        assert!(matches!(b.deref(&y), Term::Var(_)));
    }

    #[test]
    fn variant_key_examples() {
        let mut b = Bindings::new();
        let x = v(&mut b);
        let y = v(&mut b);
        // foo(a,X,Y) -> foo(a,'$VAR'(0),'$VAR'(1))
        let call = Term::structure("foo", vec![Term::atom("a"), x.clone(), y.clone()]);
        let key = variant_key(&call, &b);
        assert_eq!(format!("{}", key), "foo(a,'$VAR'(0),'$VAR'(1))");

        // foo(a,X,X) -> foo(a,'$VAR'(0),'$VAR'(0))
        let call = Term::structure("foo", vec![Term::atom("a"), x.clone(), x.clone()]);
        let key = variant_key(&call, &b);
        assert_eq!(format!("{}", key), "foo(a,'$VAR'(0),'$VAR'(0))");

        // ground term is its own key
        let call = Term::structure("p", vec![Term::atom("a"), Term::atom("b")]);
        let key = variant_key(&call, &b);
        assert_eq!(key.0, call);
    }

    #[test]
    fn variant_key_separates_classes() {
        let mut b = Bindings::new();
        let x = v(&mut b);
        let y = v(&mut b);
        let k1 = variant_key(&Term::structure("foo", vec![Term::atom("a"), x.clone(), y.clone()]), &b);
        let k2 = variant_key(&Term::structure("foo", vec![Term::atom("a"), y.clone(), x.clone()]), &b);
        let k3 = variant_key(&Term::structure("foo", vec![Term::atom("a"), x.clone(), x.clone()]), &b);
        assert_eq!(k1, k2);
        assert_ne!(k1, k3);
    }

    #[test]
    fn term_variables_examples() {
        let mut b = Bindings::new();
        let x = b.fresh_var();
        let y = b.fresh_var();
        let t = Term::structure("foo", vec![Term::atom("a"), Term::Var(x), Term::Var(y)]);
        assert_eq!(term_variables(&t, &b), vec![x, y]);

        let t = Term::structure("p", vec![Term::atom("a"), Term::atom("b")]);
        assert!(term_variables(&t, &b).is_empty());

        // f(X,g(Y,X)) -> [X,Y]: manual depth-first first-occurrence traversal
        let t = Term::structure(
            "f",
            vec![Term::Var(x), Term::structure("g", vec![Term::Var(y), Term::Var(x)])],
        );
        assert_eq!(term_variables(&t, &b), vec![x, y]);
    }

    #[test]
    fn rename_fresh_examples() {
        let mut b = Bindings::new();
        let x = b.fresh_var();
        let y = b.fresh_var();
        let t = Term::structure("f", vec![Term::Var(x), Term::Var(y)]);
        let (copy, map) = rename_fresh(&t, &[x], &mut b);
        match copy {
            Term::Struct(s) => {
                assert_eq!(s.args[0], Term::Var(x));
                assert!(matches!(s.args[1], Term::Var(w) if w != y));
            }
            _ => panic!("expected structure"),
        }
        assert_eq!(map.len(), 1);

        let ground = Term::structure("p", vec![Term::atom("a")]);
        let (copy, map) = rename_fresh(&ground, &[], &mut b);
        assert_eq!(copy, ground);
        assert!(map.is_empty());

        // two renames of the same term yield disjoint fresh variable sets
        let (c1, m1) = rename_fresh(&t, &[], &mut b);
        let (c2, m2) = rename_fresh(&t, &[], &mut b);
        let v1: Vec<Var> = term_variables(&c1, &b);
        let v2: Vec<Var> = term_variables(&c2, &b);
        assert!(v1.iter().all(|v| !v2.contains(v)));
        assert_eq!(m1.len(), 2);
        assert_eq!(m2.len(), 2);
    }

    #[test]
    fn rename_fresh_output_is_variant_of_input() {
        let mut b = Bindings::new();
        let x = b.fresh_var();
        let y = b.fresh_var();
        let t = Term::structure(
            "f",
            vec![Term::Var(x), Term::structure("g", vec![Term::Var(y), Term::Var(x)])],
        );
        let (copy, _) = rename_fresh(&t, &[], &mut b);
        assert!(is_variant(&t, &b, &copy, &b));
    }

    #[test]
    fn undo_restores_bit_exactly() {
        let mut b = Bindings::new();
        let x = v(&mut b);
        let y = v(&mut b);
        let z = v(&mut b);
        assert!(b.unify(&x, &Term::atom("pre")));
        let cp = b.checkpoint();
        assert!(b.unify(&y, &Term::structure("f", vec![z.clone()])));
        assert!(b.unify(&z, &Term::int(3)));
        b.undo_to(cp);
        assert_eq!(b.resolve(&x), Term::atom("pre"));
        assert!(matches!(b.deref(&y), Term::Var(_)));
        assert!(matches!(b.deref(&z), Term::Var(_)));
    }

    #[test]
    fn big_int_normalisation() {
        use num_bigint::BigInt;
        let small = Term::big(BigInt::from(42));
        assert_eq!(small, Term::Int(42));
        let large = Term::big(BigInt::from(i64::MAX) + 1);
        assert!(matches!(large, Term::Big(_)));
    }

    #[test]
    fn list_printing() {
        let t = list_term(vec![Term::int(1), Term::int(2), Term::int(3)]);
        assert_eq!(format!("{}", t), "[1,2,3]");
        let nil = list_term(vec![]);
        assert_eq!(format!("{}", nil), "[]");
    }
}
