//! The minimal builtin predicates needed by the benchmark programs:
//! `is/2`, the integer comparisons, `true/0`, `fail/0` and `=/2` (the last
//! is a machine-level goal). Arithmetic is 64-bit with automatic promotion
//! to big integers on overflow.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::term::{Bindings, Symbol, Term};
use crate::EngineError;

/// Comparison and evaluation operators exposed as goals.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuiltinOp {
    /// `X is Expr`
    Is,
    /// `<`
    Lt,
    /// `=<`
    Le,
    /// `>`
    Gt,
    /// `>=`
    Ge,
    /// `=:=`
    NumEq,
    /// `=\=`
    NumNe,
}

impl BuiltinOp {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinOp::Is => "is",
            BuiltinOp::Lt => "<",
            BuiltinOp::Le => "=<",
            BuiltinOp::Gt => ">",
            BuiltinOp::Ge => ">=",
            BuiltinOp::NumEq => "=:=",
            BuiltinOp::NumNe => "=\\=",
        }
    }

    pub fn from_name(name: &str) -> Option<BuiltinOp> {
        Some(match name {
            "is" => BuiltinOp::Is,
            "<" => BuiltinOp::Lt,
            "=<" => BuiltinOp::Le,
            ">" => BuiltinOp::Gt,
            ">=" => BuiltinOp::Ge,
            "=:=" => BuiltinOp::NumEq,
            "=\\=" => BuiltinOp::NumNe,
            _ => None,
        })
    }
}

/// Predicate indicators reserved for the engine; these can never be tabled
/// or redefined by a program.
pub fn is_builtin(functor: Symbol, arity: u32) -> bool {
    let name = functor.name();
    matches!(
        (&*name, arity),
        ("true", 0)
            | ("fail", 0)
            | ("false", 0)
            | (",", 2)
            | (";", 2)
            | ("=", 2)
            | ("is", 2)
            | ("<", 2)
            | ("=<", 2)
            | (">", 2)
            | (">=", 2)
            | ("=:=", 2)
            | ("=\\=", 2)
    )
}

/// An evaluated integer; `I` is used whenever the value fits.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Num {
    I(i64),
    B(BigInt),
}

impl Num {
    pub fn to_term(self) -> Term {
        match self {
            Num::I(i) => Term::Int(i),
            Num::B(b) => Term::big(b),
        }
    }

    fn to_big(&self) -> BigInt {
        match self {
            Num::I(i) => BigInt::from(*i),
            Num::B(b) => b.clone(),
        }
    }

    fn cmp_num(&self, other: &Num) -> Ordering {
        match (self, other) {
            (Num::I(a), Num::I(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

fn bin<FI, FB>(a: Num, b: Num, fi: FI, fb: FB) -> Num
where
    FI: Fn(i64, i64) -> Option<i64>,
    FB: Fn(BigInt, BigInt) -> BigInt,
{
    if let (Num::I(x), Num::I(y)) = (&a, &b) {
        if let Some(r) = fi(*x, *y) {
            return Num::I(r);
        }
    }
    let r = fb(a.to_big(), b.to_big());
    match i64::try_from(&r) {
        Ok(v) => Num::I(v),
        Err(_) => Num::B(r),
    }
}

// floored modulo, following the usual Prolog reading of mod/2
fn floored_mod_i64(a: i64, b: i64) -> Option<i64> {
    if b == 0 {
        return None;
    }
    let r = a.checked_rem(b)?;
    if r != 0 && (r < 0) != (b < 0) {
        r.checked_add(b)
    } else {
        Some(r)
    }
}

fn floored_mod_big(a: BigInt, b: BigInt) -> BigInt {
    use num_bigint::Sign;
    let r = &a % &b;
    if r.sign() != Sign::NoSign && (r.sign() == Sign::Minus) != (b.sign() == Sign::Minus) {
        r + b
    } else {
        r
    }
}

/// Evaluates an arithmetic expression term to an integer. The expression
/// must be ground under `s`; operators are `+ - * // mod` (binary), `-`
/// (unary) and integer literals.
pub fn eval_arith(expr: &Term, s: &Bindings) -> Result<Num, EngineError> {
    match s.deref(expr) {
        Term::Int(i) => Ok(Num::I(*i)),
        Term::Big(b) => Ok(Num::B((**b).clone())),
        Term::Var(_) => Err(EngineError::Instantiation("arithmetic expression".into())),
        Term::Atom(a) => Err(EngineError::Type {
            expected: "evaluable term".into(),
            got: a.name().to_string(),
        }),
        Term::Struct(st) => {
            let st: Arc<_> = st.clone();
            let name = st.functor.name();
            match (&*name, st.args.len()) {
                ("-", 1) => {
                    let a = eval_arith(&st.args[0], s)?;
                    Ok(bin(Num::I(0), a, |_, y| y.checked_neg(), |_, y| -y))
                }
                ("+", 2) => {
                    let a = eval_arith(&st.args[0], s)?;
                    let b = eval_arith(&st.args[1], s)?;
                    Ok(bin(a, b, |x, y| x.checked_add(y), |x, y| x + y))
                }
                ("-", 2) => {
                    let a = eval_arith(&st.args[0], s)?;
                    let b = eval_arith(&st.args[1], s)?;
                    Ok(bin(a, b, |x, y| x.checked_sub(y), |x, y| x - y))
                }
                ("*", 2) => {
                    let a = eval_arith(&st.args[0], s)?;
                    let b = eval_arith(&st.args[1], s)?;
                    Ok(bin(a, b, |x, y| x.checked_mul(y), |x, y| x * y))
                }
                ("//", 2) => {
                    let a = eval_arith(&st.args[0], s)?;
                    let b = eval_arith(&st.args[1], s)?;
                    if matches!(b, Num::I(0)) || b.to_big() == BigInt::from(0) {
                        return Err(EngineError::Type {
                            expected: "non-zero divisor".into(),
                            got: "0".into(),
                        });
                    }
                    Ok(bin(a, b, |x, y| x.checked_div(y), |x, y| x / y))
                }
                ("mod", 2) => {
                    let a = eval_arith(&st.args[0], s)?;
                    let b = eval_arith(&st.args[1], s)?;
                    if b.to_big() == BigInt::from(0) {
                        return Err(EngineError::Type {
                            expected: "non-zero divisor".into(),
                            got: "0".into(),
                        });
                    }
                    Ok(bin(a, b, floored_mod_i64, floored_mod_big))
                }
                _ => Err(EngineError::Type {
                    expected: "evaluable term".into(),
                    got: format!("{}/{}", name, st.args.len()),
                }),
            }
        }
    }
}

/// Standard ordering semantics for the comparison operators; both sides are
/// evaluated as arithmetic expressions.
pub fn compare_ints(op: BuiltinOp, a: &Term, b: &Term, s: &Bindings) -> Result<bool, EngineError> {
    let x = eval_arith(a, s)?;
    let y = eval_arith(b, s)?;
    let ord = x.cmp_num(&y);
    Ok(match op {
        BuiltinOp::Lt => ord == Ordering::Less,
        BuiltinOp::Le => ord != Ordering::Greater,
        BuiltinOp::Gt => ord == Ordering::Greater,
        BuiltinOp::Ge => ord != Ordering::Less,
        BuiltinOp::NumEq => ord == Ordering::Equal,
        BuiltinOp::NumNe => ord != Ordering::Equal,
        BuiltinOp::Is => unreachable!("is/2 is not a comparison"),
    })
}

/// Executes a builtin goal: true on success, false on failure (a normal
/// outcome), errors propagate.
pub fn exec(
    op: BuiltinOp,
    args: &[Term],
    s: &mut Bindings,
) -> Result<bool, EngineError> {
    match op {
        BuiltinOp::Is => {
            let value = eval_arith(&args[1], s)?.to_term();
            Ok(s.unify(&args[0], &value))
        }
        cmp => compare_ints(cmp, &args[0], &args[1], s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_str_term(t: Term) -> Result<Num, EngineError> {
        let b = Bindings::new();
        eval_arith(&t, &b)
    }

    #[test]
    fn arith_examples() {
        // 1+2*3 -> 7
        let t = Term::structure(
            "+",
            vec![Term::int(1), Term::structure("*", vec![Term::int(2), Term::int(3)])],
        );
        assert_eq!(eval_str_term(t).unwrap(), Num::I(7));

        // X is 5-2 binds X=3
        let mut b = Bindings::new();
        let x = Term::Var(b.fresh_var());
        let expr = Term::structure("-", vec![Term::int(5), Term::int(2)]);
        assert!(exec(BuiltinOp::Is, &[x.clone(), expr], &mut b).unwrap());
        assert_eq!(b.resolve(&x), Term::int(3));

        // X is Y+1 with Y unbound is an instantiation error
        let mut b = Bindings::new();
        let x = Term::Var(b.fresh_var());
        let y = Term::Var(b.fresh_var());
        let expr = Term::structure("+", vec![y, Term::int(1)]);
        assert!(matches!(
            exec(BuiltinOp::Is, &[x, expr], &mut b),
            Err(EngineError::Instantiation(_))
        ));
    }

    #[test]
    fn compare_examples() {
        let b = Bindings::new();
        assert!(compare_ints(BuiltinOp::Lt, &Term::int(2), &Term::int(3), &b).unwrap());
        assert!(!compare_ints(BuiltinOp::Le, &Term::int(3), &Term::int(2), &b).unwrap());
        assert!(matches!(
            compare_ints(BuiltinOp::Lt, &Term::atom("a"), &Term::int(1), &b),
            Err(EngineError::Type { .. })
        ));
    }

    #[test]
    fn overflow_promotes_to_big() {
        let t = Term::structure("+", vec![Term::int(i64::MAX), Term::int(1)]);
        match eval_str_term(t).unwrap() {
            Num::B(b) => assert_eq!(b, BigInt::from(i64::MAX) + 1),
            other => panic!("expected big result, got {:?}", other),
        }
    }

    #[test]
    fn floored_mod() {
        let b = Bindings::new();
        let m = |x: i64, y: i64| {
            eval_arith(&Term::structure("mod", vec![Term::int(x), Term::int(y)]), &b).unwrap()
        };
        assert_eq!(m(7, 3), Num::I(1));
        assert_eq!(m(-7, 3), Num::I(2));
        assert_eq!(m(7, -3), Num::I(-2));
        assert_eq!(m(-7, -3), Num::I(-1));
    }
}
