//! Arithmetic expression language for reward attribute formulas.
//!
//! Expressions are evaluated over a flat feature environment (name -> f64).
//! The function set is deliberately closed: `min`, `max`, `abs`, `clip` and
//! `cond` together with the four arithmetic operators cover every formula in
//! the shipped corpus. There is no symbolic simplification.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Feature environment an expression is evaluated against.
pub type FeatureEnv = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        };
        f.write_str(s)
    }
}

/// Expression AST over named trajectory features.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Feature(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Clip {
        x: Box<Expr>,
        lo: Box<Expr>,
        hi: Box<Expr>,
    },
    Cond {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("missing feature `{0}`")]
    MissingFeature(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("clip bounds inverted (lo {lo} > hi {hi}) in `{at}`")]
    InvalidClipBounds { lo: f64, hi: f64, at: String },
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn feature(name: &str) -> Expr {
        Expr::Feature(name.to_string())
    }

    /// Collects every feature name referenced anywhere in the expression.
    pub fn features(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Feature(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(e) | Expr::Abs(e) => e.features(out),
            Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                a.features(out);
                b.features(out);
            }
            Expr::Clip { x, lo, hi } => {
                x.features(out);
                lo.features(out);
                hi.features(out);
            }
            Expr::Cond {
                lhs,
                rhs,
                then,
                otherwise,
                ..
            } => {
                lhs.features(out);
                rhs.features(out);
                then.features(out);
                otherwise.features(out);
            }
        }
    }

    /// Evaluates the expression if it references no features at all.
    pub fn const_value(&self) -> Option<f64> {
        let empty = FeatureEnv::new();
        eval_expr(self, &empty).ok()
    }
}

/// Evaluates `expr` over `env`. Pure and total except for division by zero
/// and inverted clip bounds.
pub fn eval_expr(expr: &Expr, env: &FeatureEnv) -> Result<f64, EvalError> {
    match expr {
        Expr::Const(v) => Ok(*v),
        Expr::Feature(name) => env
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::MissingFeature(name.clone())),
        Expr::Neg(e) => Ok(-eval_expr(e, env)?),
        Expr::Bin(op, a, b) => {
            let x = eval_expr(a, env)?;
            let y = eval_expr(b, env)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        Err(EvalError::DivisionByZero(b.to_string()))
                    } else {
                        Ok(x / y)
                    }
                }
            }
        }
        Expr::Min(a, b) => Ok(eval_expr(a, env)?.min(eval_expr(b, env)?)),
        Expr::Max(a, b) => Ok(eval_expr(a, env)?.max(eval_expr(b, env)?)),
        Expr::Abs(e) => Ok(eval_expr(e, env)?.abs()),
        Expr::Clip { x, lo, hi } => {
            let v = eval_expr(x, env)?;
            let l = eval_expr(lo, env)?;
            let h = eval_expr(hi, env)?;
            if l > h {
                return Err(EvalError::InvalidClipBounds {
                    lo: l,
                    hi: h,
                    at: expr.to_string(),
                });
            }
            Ok(v.clamp(l, h))
        }
        Expr::Cond {
            op,
            lhs,
            rhs,
            then,
            otherwise,
        } => {
            let a = eval_expr(lhs, env)?;
            let b = eval_expr(rhs, env)?;
            let holds = match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Eq => a == b,
                CmpOp::Ge => a >= b,
                CmpOp::Gt => a > b,
            };
            if holds {
                eval_expr(then, env)
            } else {
                eval_expr(otherwise, env)
            }
        }
    }
}

// Rendering uses standard precedence so that `parse(render(e)) == e`.
// Levels: additive 1, multiplicative 2, unary minus 3, atoms 4.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, _, _) => 2,
        Expr::Neg(_) => 3,
        _ => 4,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Feature(name) => f.write_str(name),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, 4)
            }
            Expr::Bin(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                write_child(f, a, prec)?;
                write!(f, " {sym} ")?;
                // The parser builds left-nested chains, so a right child at
                // the same precedence keeps explicit parentheses.
                write_child(f, b, prec + 1)
            }
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Abs(e) => write!(f, "abs({e})"),
            Expr::Clip { x, lo, hi } => write!(f, "clip({x}, {lo}, {hi})"),
            Expr::Cond {
                op,
                lhs,
                rhs,
                then,
                otherwise,
            } => write!(f, "cond({lhs} {op} {rhs}, {then}, {otherwise})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> FeatureEnv {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn min_of_speed_and_complement() {
        // min(speed, 10 - speed) at speed = 5
        let e = Expr::Min(
            Box::new(Expr::feature("speed")),
            Box::new(Expr::Bin(
                BinOp::Sub,
                Box::new(Expr::Const(10.0)),
                Box::new(Expr::feature("speed")),
            )),
        );
        assert_eq!(eval_expr(&e, &env(&[("speed", 5.0)])).unwrap(), 5.0);
    }

    #[test]
    fn clip_identity_within_bounds() {
        let e = Expr::Clip {
            x: Box::new(Expr::feature("x")),
            lo: Box::new(Expr::Neg(Box::new(Expr::Const(1.0)))),
            hi: Box::new(Expr::Const(0.0)),
        };
        assert_eq!(eval_expr(&e, &env(&[("x", 0.0)])).unwrap(), 0.0);
        assert_eq!(eval_expr(&e, &env(&[("x", -2.0)])).unwrap(), -1.0);
    }

    #[test]
    fn normalized_speed_reward() {
        // (v - 40) / 40 at v = 80
        let e = Expr::Bin(
            BinOp::Div,
            Box::new(Expr::Bin(
                BinOp::Sub,
                Box::new(Expr::Const(80.0)),
                Box::new(Expr::Const(40.0)),
            )),
            Box::new(Expr::Const(40.0)),
        );
        assert_eq!(eval_expr(&e, &FeatureEnv::new()).unwrap(), 1.0);
    }

    #[test]
    fn missing_feature_is_reported_by_name() {
        let e = Expr::feature("speed_mps");
        assert_eq!(
            eval_expr(&e, &FeatureEnv::new()),
            Err(EvalError::MissingFeature("speed_mps".to_string()))
        );
    }

    #[test]
    fn division_by_zero_names_the_divisor() {
        let e = Expr::Bin(
            BinOp::Div,
            Box::new(Expr::Const(1.0)),
            Box::new(Expr::feature("d")),
        );
        match eval_expr(&e, &env(&[("d", 0.0)])) {
            Err(EvalError::DivisionByZero(loc)) => assert_eq!(loc, "d"),
            other => panic!("expected division error, got {other:?}"),
        }
    }

    #[test]
    fn inverted_clip_bounds_error() {
        let e = Expr::Clip {
            x: Box::new(Expr::Const(0.5)),
            lo: Box::new(Expr::Const(1.0)),
            hi: Box::new(Expr::Const(0.0)),
        };
        assert!(matches!(
            eval_expr(&e, &FeatureEnv::new()),
            Err(EvalError::InvalidClipBounds { .. })
        ));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let e = Expr::Bin(
            BinOp::Mul,
            Box::new(Expr::feature("a")),
            Box::new(Expr::Bin(
                BinOp::Add,
                Box::new(Expr::feature("b")),
                Box::new(Expr::Const(0.1)),
            )),
        );
        let environment = env(&[("a", 3.7), ("b", -1.9)]);
        let first = eval_expr(&e, &environment).unwrap();
        for _ in 0..10 {
            let again = eval_expr(&e, &environment).unwrap();
            assert_eq!(first.to_bits(), again.to_bits());
        }
    }

    #[test]
    fn rendering_uses_minimal_parentheses() {
        let e = Expr::Bin(
            BinOp::Mul,
            Box::new(Expr::Neg(Box::new(Expr::Const(1000.0)))),
            Box::new(Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Bin(
                    BinOp::Mul,
                    Box::new(Expr::feature("v")),
                    Box::new(Expr::feature("v")),
                )),
                Box::new(Expr::Const(0.5)),
            )),
        );
        assert_eq!(e.to_string(), "-1000 * (v * v + 0.5)");
    }

    #[test]
    fn cond_selects_branch() {
        let e = Expr::Cond {
            op: CmpOp::Lt,
            lhs: Box::new(Expr::feature("x")),
            rhs: Box::new(Expr::Const(0.0)),
            then: Box::new(Expr::Const(-1.0)),
            otherwise: Box::new(Expr::Const(1.0)),
        };
        assert_eq!(eval_expr(&e, &env(&[("x", -0.5)])).unwrap(), -1.0);
        assert_eq!(eval_expr(&e, &env(&[("x", 0.0)])).unwrap(), 1.0);
    }
}
