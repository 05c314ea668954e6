//! Numeric evaluation of expressions at a jet point.

use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{Signed, ToPrimitive};

use super::{Expr, FuncKind, Rat, Var};

/// A point in jet space. `y3` is optional and only consulted when the
/// expression mentions `y'''`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetPoint {
    pub t: f64,
    pub y: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: Option<f64>,
}

impl JetPoint {
    /// Point over the four coefficient variables.
    pub fn new(t: f64, y: f64, y1: f64, y2: f64) -> Self {
        JetPoint {
            t,
            y,
            y1,
            y2,
            y3: None,
        }
    }

    /// Point including `y'''`.
    pub fn with_y3(t: f64, y: f64, y1: f64, y2: f64, y3: f64) -> Self {
        JetPoint {
            t,
            y,
            y1,
            y2,
            y3: Some(y3),
        }
    }

    fn get(&self, v: Var) -> Result<f64, EvalError> {
        match v {
            Var::T => Ok(self.t),
            Var::Y => Ok(self.y),
            Var::Y1 => Ok(self.y1),
            Var::Y2 => Ok(self.y2),
            Var::Y3 => self.y3.ok_or(EvalError::MissingVariable(Var::Y3)),
        }
    }
}

/// Evaluation failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// Logarithm of a non-positive value, zero raised to a negative power,
    /// or a fractional power of a negative value.
    Domain(&'static str),
    /// The expression mentions a variable the point does not supply.
    MissingVariable(Var),
    /// An intermediate magnitude fell below the sampler guard; the point is
    /// too close to a singularity to trust.
    NearSingular,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Domain(what) => write!(f, "domain error: {what}"),
            EvalError::MissingVariable(v) => write!(f, "point does not supply {}", v.name()),
            EvalError::NearSingular => write!(f, "evaluation too close to a singularity"),
        }
    }
}

/// Evaluate `e` at `p` in IEEE double precision.
pub fn eval(e: &Expr, p: &JetPoint) -> Result<f64, EvalError> {
    eval_guarded(e, p, 0.0)
}

/// Evaluate with a singularity guard: any logarithm argument or negative
/// power base with magnitude below `guard` is rejected as [`EvalError::NearSingular`].
pub fn eval_guarded(e: &Expr, p: &JetPoint, guard: f64) -> Result<f64, EvalError> {
    match e {
        Expr::Const(c) => Ok(rat_to_f64(c)),
        Expr::Var(v) => p.get(*v),
        Expr::Sum(terms) => {
            let mut acc = 0.0;
            for t in terms {
                acc += eval_guarded(t, p, guard)?;
            }
            Ok(acc)
        }
        Expr::Product(factors) => {
            let mut acc = 1.0;
            for f in factors {
                acc *= eval_guarded(f, p, guard)?;
            }
            Ok(acc)
        }
        Expr::Power(base, q) => {
            let b = eval_guarded(base, p, guard)?;
            pow_f64(b, q, guard)
        }
        Expr::Func(kind, arg) => {
            let a = eval_guarded(arg, p, guard)?;
            match kind {
                FuncKind::Exp => Ok(a.exp()),
                FuncKind::Ln => {
                    if a <= 0.0 {
                        Err(EvalError::Domain("ln of a non-positive value"))
                    } else if a < guard {
                        Err(EvalError::NearSingular)
                    } else {
                        Ok(a.ln())
                    }
                }
                FuncKind::Sin => Ok(a.sin()),
                FuncKind::Cos => Ok(a.cos()),
            }
        }
    }
}

fn pow_f64(b: f64, q: &Rat, guard: f64) -> Result<f64, EvalError> {
    use num_traits::Zero;
    let negative_exp = q.is_negative();
    if b == 0.0 {
        return if negative_exp {
            Err(EvalError::Domain("zero raised to a negative power"))
        } else if q.is_zero() {
            // 0^0 = 1, agreeing with the x^0 -> 1 canonicalization and
            // IEEE powf.
            Ok(1.0)
        } else {
            Ok(0.0)
        };
    }
    if negative_exp && b.abs() < guard {
        return Err(EvalError::NearSingular);
    }
    let qf = rat_to_f64(q);
    if b > 0.0 {
        return Ok(b.powf(qf));
    }
    // Negative base: only integral exponents are real-valued.
    if q.is_integer() {
        let even = !q.to_integer().bit(0);
        let mag = b.abs().powf(qf);
        Ok(if even { mag } else { -mag })
    } else {
        Err(EvalError::Domain("fractional power of a negative value"))
    }
}

pub(crate) fn rat_to_f64(c: &Rat) -> f64 {
    c.to_f64()
        .unwrap_or_else(|| {
            // Fall back to the quotient of component approximations for
            // magnitudes outside BigRational's direct conversion range.
            let n = c.numer().to_f64().unwrap_or(f64::NAN);
            let d = c.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
}
