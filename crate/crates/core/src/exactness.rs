//! Exactness of `F3·y''' + F2·y'' + F1·y' + F0 = 0` and construction of the
//! first integral.
//!
//! The equation is exact when six cross-partial equalities hold; its first
//! integral is then a sum of four univariate definite integrals with the
//! earlier arguments frozen at the base point. The engine reports each
//! condition separately, distinguishing a symbolic certificate (the
//! difference canonicalizes to zero) from a numeric one (the sampler
//! agrees).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::One;

use crate::calculus::{definite_integral, partial, total_derivative, UnsupportedIntegrand};
use crate::expr::{
    equivalent, eval, is_zero, product, sub, sum, Expr, InsufficientSamples, JetPoint, Rat,
    Sampler, Var,
};

/// The coefficient quadruple of a third-order equation. Fields are canonical
/// expressions over `t, y, y', y''`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    f3: Expr,
    f2: Expr,
    f1: Expr,
    f0: Expr,
}

/// Rejected coefficient set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquationError {
    /// The leading coefficient is identically zero.
    ZeroLeadingCoefficient,
    /// A coefficient mentions `y'''`.
    ContainsY3,
    /// The sampler could not probe the leading coefficient.
    Sampling(InsufficientSamples),
}

impl fmt::Display for EquationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquationError::ZeroLeadingCoefficient => {
                f.write_str("leading coefficient F3 is identically zero")
            }
            EquationError::ContainsY3 => f.write_str("coefficients must not mention y'''"),
            EquationError::Sampling(e) => write!(f, "{e}"),
        }
    }
}

impl Equation {
    /// Validate and canonicalize a coefficient quadruple.
    pub fn new(f3: Expr, f2: Expr, f1: Expr, f0: Expr) -> Result<Equation, EquationError> {
        for c in [&f3, &f2, &f1, &f0] {
            if !c.is_free_of(Var::Y3) {
                return Err(EquationError::ContainsY3);
            }
        }
        let f3 = crate::expr::simplify(&f3);
        match is_zero(&f3, &Sampler::default()) {
            Ok(true) => return Err(EquationError::ZeroLeadingCoefficient),
            Ok(false) => {}
            Err(e) => return Err(EquationError::Sampling(e)),
        }
        Ok(Equation {
            f3,
            f2: crate::expr::simplify(&f2),
            f1: crate::expr::simplify(&f1),
            f0: crate::expr::simplify(&f0),
        })
    }

    pub fn f3(&self) -> &Expr {
        &self.f3
    }
    pub fn f2(&self) -> &Expr {
        &self.f2
    }
    pub fn f1(&self) -> &Expr {
        &self.f1
    }
    pub fn f0(&self) -> &Expr {
        &self.f0
    }

    /// The left-hand side `F3·y''' + F2·y'' + F1·y' + F0` as an expression
    /// over all five jet variables.
    pub fn lhs(&self) -> Expr {
        sum(vec![
            product(vec![self.f3.clone(), Expr::var(Var::Y3)]),
            product(vec![self.f2.clone(), Expr::var(Var::Y2)]),
            product(vec![self.f1.clone(), Expr::var(Var::Y1)]),
            self.f0.clone(),
        ])
    }
}

/// Identifier of one of the six exactness conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionId {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl ConditionId {
    pub const ALL: [ConditionId; 6] = [
        ConditionId::I,
        ConditionId::II,
        ConditionId::III,
        ConditionId::IV,
        ConditionId::V,
        ConditionId::VI,
    ];

    /// Roman-numeral label.
    pub fn label(self) -> &'static str {
        match self {
            ConditionId::I => "i",
            ConditionId::II => "ii",
            ConditionId::III => "iii",
            ConditionId::IV => "iv",
            ConditionId::V => "v",
            ConditionId::VI => "vi",
        }
    }

    /// Human-readable statement of the condition.
    pub fn statement(self) -> &'static str {
        match self {
            ConditionId::I => "d/dy''[F0] = d/dt[F3]",
            ConditionId::II => "d/dy''[F1] = d/dy[F3]",
            ConditionId::III => "d/dy''[F2] = d/dy'[F3]",
            ConditionId::IV => "d/dy'[F0] = d/dt[F2]",
            ConditionId::V => "d/dy'[F1] = d/dy[F2]",
            ConditionId::VI => "d/dy[F0] = d/dt[F1]",
        }
    }

    /// The two partial derivatives `(lhs, rhs)` whose equality this
    /// condition asserts.
    pub fn sides(self, eq: &Equation) -> (Expr, Expr) {
        match self {
            ConditionId::I => (partial(eq.f0(), Var::Y2), partial(eq.f3(), Var::T)),
            ConditionId::II => (partial(eq.f1(), Var::Y2), partial(eq.f3(), Var::Y)),
            ConditionId::III => (partial(eq.f2(), Var::Y2), partial(eq.f3(), Var::Y1)),
            ConditionId::IV => (partial(eq.f0(), Var::Y1), partial(eq.f2(), Var::T)),
            ConditionId::V => (partial(eq.f1(), Var::Y1), partial(eq.f2(), Var::Y)),
            ConditionId::VI => (partial(eq.f0(), Var::Y), partial(eq.f1(), Var::T)),
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How a condition was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The difference of the two sides canonicalizes to zero.
    SymbolicPass,
    /// Only the sampler agrees the sides are equal.
    NumericPass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        !matches!(self, Verdict::Fail)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::SymbolicPass => "symbolic-pass",
            Verdict::NumericPass => "numeric-pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One checked exactness condition.
#[derive(Clone, Debug)]
pub struct ConditionCheck {
    pub id: ConditionId,
    pub lhs: Expr,
    pub rhs: Expr,
    pub verdict: Verdict,
}

/// The six condition verdicts for an equation.
#[derive(Clone, Debug)]
pub struct ExactnessReport {
    pub conditions: [ConditionCheck; 6],
}

impl ExactnessReport {
    /// Exact iff no condition failed.
    pub fn is_exact(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict.passed())
    }

    /// All six conditions hold symbolically.
    pub fn is_symbolically_exact(&self) -> bool {
        self.conditions
            .iter()
            .all(|c| c.verdict == Verdict::SymbolicPass)
    }

    pub fn condition(&self, id: ConditionId) -> &ConditionCheck {
        &self.conditions[id as usize]
    }

    /// Ids of failing conditions.
    pub fn failures(&self) -> Vec<ConditionId> {
        self.conditions
            .iter()
            .filter(|c| !c.verdict.passed())
            .map(|c| c.id)
            .collect()
    }
}

/// Check the six exactness conditions.
pub fn check_exact(eq: &Equation, s: &Sampler) -> Result<ExactnessReport, InsufficientSamples> {
    let mut checks: Vec<ConditionCheck> = Vec::with_capacity(6);
    for id in ConditionId::ALL {
        let (lhs, rhs) = id.sides(eq);
        let verdict = if sub(lhs.clone(), rhs.clone()).is_zero_const() {
            Verdict::SymbolicPass
        } else if equivalent(&lhs, &rhs, s)? {
            Verdict::NumericPass
        } else {
            Verdict::Fail
        };
        checks.push(ConditionCheck {
            id,
            lhs,
            rhs,
            verdict,
        });
    }
    Ok(ExactnessReport {
        conditions: checks.try_into().expect("exactly six conditions"),
    })
}

/// Lower limits for the first-integral quadratures; exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePoint {
    pub t0: Rat,
    pub y0: Rat,
    pub y10: Rat,
    pub y20: Rat,
}

impl Default for BasePoint {
    fn default() -> Self {
        // The origin would sit on the singularities of negative powers, so
        // the default base point is all ones.
        BasePoint::ones()
    }
}

impl BasePoint {
    pub fn ones() -> Self {
        BasePoint {
            t0: Rat::one(),
            y0: Rat::one(),
            y10: Rat::one(),
            y20: Rat::one(),
        }
    }

    pub fn new(t0: Rat, y0: Rat, y10: Rat, y20: Rat) -> Self {
        BasePoint { t0, y0, y10, y20 }
    }

    fn component(&self, v: Var) -> Expr {
        match v {
            Var::T => Expr::Const(self.t0.clone()),
            Var::Y => Expr::Const(self.y0.clone()),
            Var::Y1 => Expr::Const(self.y10.clone()),
            Var::Y2 => Expr::Const(self.y20.clone()),
            Var::Y3 => unreachable!("base point has four components"),
        }
    }

    fn jet_point(&self) -> JetPoint {
        JetPoint::new(
            crate::expr::rat_to_f64(&self.t0),
            crate::expr::rat_to_f64(&self.y0),
            crate::expr::rat_to_f64(&self.y10),
            crate::expr::rat_to_f64(&self.y20),
        )
    }
}

/// A first integral `Ψ(t,y,y',y'') = c`, normalized so `Ψ(base) = 0`.
#[derive(Clone, Debug)]
pub struct FirstIntegral {
    pub psi: Expr,
    pub base: BasePoint,
}

/// Failure to construct a first integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FirstIntegralError {
    /// The equation is not exact; multiply by an integrating factor first.
    NotExact,
    /// The named coefficient has no rule-table antiderivative in its
    /// integration variable (0 through 3 for `F0` through `F3`).
    UnsupportedTerm(u8),
    /// A coefficient is singular at the requested base point.
    SingularBasePoint,
    /// Sampling failed while checking exactness.
    Sampling(InsufficientSamples),
}

impl fmt::Display for FirstIntegralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstIntegralError::NotExact => f.write_str("equation is not exact"),
            FirstIntegralError::UnsupportedTerm(i) => {
                write!(f, "coefficient F{i} is outside the integration rule table")
            }
            FirstIntegralError::SingularBasePoint => {
                f.write_str("a coefficient is singular at the base point")
            }
            FirstIntegralError::Sampling(e) => write!(f, "{e}"),
        }
    }
}

/// Construct the first integral of an exact equation:
///
/// `Ψ = ∫_{t0}^{t} F0(ξ,y,y',y'') dξ + ∫_{y0}^{y} F1(t0,ξ,y',y'') dξ
///    + ∫_{y'0}^{y'} F2(t0,y0,ξ,y'') dξ + ∫_{y''0}^{y''} F3(t0,y0,y'0,ξ) dξ`.
pub fn first_integral(eq: &Equation, base: &BasePoint) -> Result<FirstIntegral, FirstIntegralError> {
    let report = check_exact(eq, &Sampler::default()).map_err(FirstIntegralError::Sampling)?;
    if !report.is_exact() {
        return Err(FirstIntegralError::NotExact);
    }

    // The base point must avoid the coefficients' singularities.
    let p = base.jet_point();
    for c in [eq.f0(), eq.f1(), eq.f2(), eq.f3()] {
        match eval(c, &p) {
            Ok(v) if v.is_finite() => {}
            _ => return Err(FirstIntegralError::SingularBasePoint),
        }
    }

    // Each term freezes the previously integrated variables at the base
    // point and integrates the next coefficient in its own variable.
    let freeze = |e: &Expr, vars: &[Var]| {
        let mut out = e.clone();
        for v in vars {
            out = out.subst(*v, &base.component(*v));
        }
        out
    };

    let term = |e: &Expr, v: Var, idx: u8| {
        definite_integral(e, v, &base.component(v), &Expr::var(v))
            .map_err(|_: UnsupportedIntegrand| FirstIntegralError::UnsupportedTerm(idx))
    };

    let t0 = term(eq.f0(), Var::T, 0)?;
    let t1 = term(&freeze(eq.f1(), &[Var::T]), Var::Y, 1)?;
    let t2 = term(&freeze(eq.f2(), &[Var::T, Var::Y]), Var::Y1, 2)?;
    let t3 = term(&freeze(eq.f3(), &[Var::T, Var::Y, Var::Y1]), Var::Y2, 3)?;

    Ok(FirstIntegral {
        psi: sum(vec![t0, t1, t2, t3]),
        base: base.clone(),
    })
}

/// True iff `dΨ/dt` agrees with the equation's left-hand side at sampled
/// points (including random `y'''`).
pub fn verify_first_integral(
    eq: &Equation,
    fi: &FirstIntegral,
    s: &Sampler,
) -> Result<bool, InsufficientSamples> {
    let td = match total_derivative(&fi.psi) {
        Ok(td) => td,
        // Ψ mentioning y''' is ill-formed, never a first integral.
        Err(_) => return Ok(false),
    };
    equivalent(&td, &eq.lhs(), s)
}
