//! Expression trees over the jet variables `t`, `y`, `y'`, `y''` (and `y'''`
//! in verification contexts only).
//!
//! Expressions are immutable value trees kept in a canonical form: sums and
//! products are flattened and sorted, constants are folded, like terms are
//! collected and like-base powers merged. Rational constants and exponents
//! are exact (`BigRational`), so calculus rules stay exact. Structural
//! equality on canonical trees is the cheap first layer of identity testing;
//! the [`Sampler`] provides the randomized numeric second layer.

mod canon;
mod eval;
mod parse;
mod print;
mod sampler;

pub use canon::{func, pow, product, sum};
pub use eval::{eval, eval_guarded, EvalError, JetPoint};
pub(crate) use eval::rat_to_f64;
pub use parse::{parse, SyntaxError};
pub use sampler::{equivalent, is_zero, InsufficientSamples, Sampler};

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use num_rational::BigRational;

/// Exact rational scalar used for constants and exponents.
pub type Rat = BigRational;

/// A jet variable.
///
/// `Y3` stands for `y'''` and is only produced by
/// [`total_derivative`](crate::calculus::total_derivative); equation
/// coefficients never contain it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Independent variable `t`.
    T,
    /// Dependent variable `y`.
    Y,
    /// First derivative `y'`.
    Y1,
    /// Second derivative `y''`.
    Y2,
    /// Third derivative `y'''` (verification only).
    Y3,
}

impl Var {
    /// All five jet variables in canonical order.
    pub const ALL: [Var; 5] = [Var::T, Var::Y, Var::Y1, Var::Y2, Var::Y3];

    /// The four variables equation coefficients may depend on.
    pub const COEFF: [Var; 4] = [Var::T, Var::Y, Var::Y1, Var::Y2];

    /// Grammar spelling (`t`, `y`, `y'`, `y''`, `y'''`).
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::Y => "y",
            Var::Y1 => "y'",
            Var::Y2 => "y''",
            Var::Y3 => "y'''",
        }
    }
}

/// Unary function heads supported by the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FuncKind {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl FuncKind {
    pub fn name(self) -> &'static str {
        match self {
            FuncKind::Exp => "exp",
            FuncKind::Ln => "ln",
            FuncKind::Sin => "sin",
            FuncKind::Cos => "cos",
        }
    }
}

/// An immutable symbolic expression in canonical form.
///
/// Invariants maintained by the constructors in this module:
/// - no `Sum` directly inside a `Sum`, no `Product` inside a `Product`;
/// - no zero terms in sums, at most one constant term, like terms collected;
/// - products carry at most one leading constant factor (never `0` or `1`),
///   and like-base powers are merged;
/// - `Power` exponents are nonzero rationals, exponent `1` is collapsed,
///   nested powers are merged and powers of products distributed;
/// - children are sorted by the derived total order, so structural equality
///   is deterministic.
///
/// Build expressions through [`sum`], [`product`], [`pow`], [`func`] and the
/// arithmetic helpers; pattern-match freely on the result.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Rat),
    Var(Var),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, Rat),
    Func(FuncKind, Box<Expr>),
}

impl Expr {
    /// Integer constant.
    pub fn int(n: i64) -> Expr {
        Expr::Const(Rat::from_integer(n.into()))
    }

    /// Rational constant `n/d`.
    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Const(Rat::new(n.into(), d.into()))
    }

    /// The constant zero.
    pub fn zero() -> Expr {
        Expr::int(0)
    }

    /// The constant one.
    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// Variable leaf.
    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// True if this is the constant zero.
    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(c) if num_traits::Zero::is_zero(c))
    }

    /// True if this is the constant one.
    pub fn is_one_const(&self) -> bool {
        matches!(self, Expr::Const(c) if num_traits::One::is_one(c))
    }

    /// Node count, used to rank competing results by size.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Sum(xs) | Expr::Product(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Expr::Power(b, _) => 2 + b.size(),
            Expr::Func(_, a) => 1 + a.size(),
        }
    }

    /// The set of variables occurring in the expression.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Sum(xs) | Expr::Product(xs) => {
                for x in xs {
                    x.collect_vars(out);
                }
            }
            Expr::Power(b, _) => b.collect_vars(out),
            Expr::Func(_, a) => a.collect_vars(out),
        }
    }

    /// True if `v` does not occur in the expression.
    pub fn is_free_of(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(w) => *w != v,
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().all(|x| x.is_free_of(v)),
            Expr::Power(b, _) => b.is_free_of(v),
            Expr::Func(_, a) => a.is_free_of(v),
        }
    }

    /// Substitute `replacement` for every occurrence of `v`, re-canonicalizing.
    pub fn subst(&self, v: Var, replacement: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(w) => {
                if *w == v {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Sum(xs) => sum(xs.iter().map(|x| x.subst(v, replacement)).collect()),
            Expr::Product(xs) => product(xs.iter().map(|x| x.subst(v, replacement)).collect()),
            Expr::Power(b, q) => pow(b.subst(v, replacement), q.clone()),
            Expr::Func(f, a) => func(*f, a.subst(v, replacement)),
        }
    }

    /// Rename variable `from` to `to` (a substitution by a variable leaf).
    pub fn rename(&self, from: Var, to: Var) -> Expr {
        self.subst(from, &Expr::Var(to))
    }
}

/// Re-canonicalize an arbitrary tree bottom-up.
///
/// Expressions built via the constructors are already canonical; this is the
/// entry point for trees assembled by hand (for example in tests).
pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Sum(xs) => sum(xs.iter().map(simplify).collect()),
        Expr::Product(xs) => product(xs.iter().map(simplify).collect()),
        Expr::Power(b, q) => pow(simplify(b), q.clone()),
        Expr::Func(f, a) => func(*f, simplify(a)),
    }
}

/// `a + b`.
pub fn add(a: Expr, b: Expr) -> Expr {
    sum(alloc::vec![a, b])
}

/// `a - b`.
pub fn sub(a: Expr, b: Expr) -> Expr {
    sum(alloc::vec![a, neg(b)])
}

/// `-a`.
pub fn neg(a: Expr) -> Expr {
    mul(Expr::int(-1), a)
}

/// `a * b`.
pub fn mul(a: Expr, b: Expr) -> Expr {
    product(alloc::vec![a, b])
}

/// `a / b`.
pub fn div(a: Expr, b: Expr) -> Expr {
    product(alloc::vec![a, pow(b, Rat::from_integer((-1).into()))])
}

/// Convenience: rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Convenience: rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn y1() -> Expr {
        Expr::var(Var::Y1)
    }

    #[test]
    fn parse_power_of_prime_variable() {
        let e = parse("(y')^3").unwrap();
        assert_eq!(e, pow(y1(), rat_int(3)));
    }

    #[test]
    fn parse_matches_programmatic_tree_for_cube_coefficient() {
        // Leading coefficient of the worked nonlinear example.
        let parsed = parse("(y')^3").unwrap();
        let built = pow(Expr::var(Var::Y1), rat_int(3));
        assert_eq!(parsed, built);
    }

    #[test]
    fn parse_reports_offset_and_hint() {
        let err = parse("y'' + * 3").unwrap_err();
        assert_eq!(err.offset, 6);
        assert!(err.expected.contains("number"));
    }

    #[test]
    fn parse_aliases_and_literals() {
        assert_eq!(parse("y1").unwrap(), Expr::var(Var::Y1));
        assert_eq!(parse("y2").unwrap(), Expr::var(Var::Y2));
        assert_eq!(parse("y'''").unwrap(), Expr::var(Var::Y3));
        assert_eq!(parse("0.25").unwrap(), Expr::ratio(1, 4));
        assert_eq!(parse("1/2").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("-3").unwrap(), Expr::int(-3));
    }

    #[test]
    fn parse_precedence_and_right_assoc_power() {
        // 2^3^2 = 2^(3^2) = 512 by right associativity.
        assert_eq!(parse("2^3^2").unwrap(), Expr::int(512));
        // -x^2 is -(x^2).
        assert_eq!(
            parse("-t^2").unwrap(),
            neg(pow(Expr::var(Var::T), rat_int(2)))
        );
        assert_eq!(
            parse("1 + 2*t").unwrap(),
            add(Expr::int(1), mul(Expr::int(2), Expr::var(Var::T)))
        );
    }

    #[test]
    fn parse_rejects_symbolic_exponent() {
        let err = parse("t^y").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.expected.contains("exponent"));
    }

    #[test]
    fn parse_rejects_unknown_identifier() {
        let err = parse("2*w").unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn eval_cube_at_point() {
        let e = pow(y1(), rat_int(3));
        let p = JetPoint::new(1.0, 1.0, 2.0, 1.0);
        assert_eq!(eval(&e, &p).unwrap(), 8.0);
    }

    #[test]
    fn eval_ln_of_negative_is_domain_error() {
        let e = Expr::Func(FuncKind::Ln, alloc::boxed::Box::new(Expr::int(-1)));
        let p = JetPoint::new(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(eval(&e, &p), Err(EvalError::Domain(_))));
    }

    #[test]
    fn eval_zero_to_negative_power_is_domain_error() {
        let e = Expr::Power(alloc::boxed::Box::new(Expr::zero()), rat_int(-1));
        let p = JetPoint::new(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(eval(&e, &p), Err(EvalError::Domain(_))));
    }

    #[test]
    fn eval_missing_y3_is_reported() {
        let e = Expr::var(Var::Y3);
        let p = JetPoint::new(1.0, 1.0, 1.0, 1.0);
        assert_eq!(eval(&e, &p), Err(EvalError::MissingVariable(Var::Y3)));
    }

    #[test]
    fn eval_nonlinear_example_lhs_vanishes_on_solution_jet() {
        // (y')^3 y''' + 2y y'' - (y')^2 + (y')^3 = 0 solved for y''' at
        // (t,y,y',y'') = (1,1,2,1) gives y''' = -(2*1*1 - 4 + 8)/8 = -3/4.
        let lhs = parse("(y')^3 * y''' + 2*y*y'' - (y')^2 + (y')^3").unwrap();
        let p = JetPoint::with_y3(1.0, 1.0, 2.0, 1.0, -0.75);
        let v = eval(&lhs, &p).unwrap();
        assert!(v.abs() < 1e-12, "lhs = {v}");
    }

    #[test]
    fn simplify_cancels_reciprocal_powers() {
        let e = Expr::Product(vec![pow(y1(), rat_int(3)), pow(y1(), rat_int(-3))]);
        assert_eq!(simplify(&e), Expr::one());
    }

    #[test]
    fn simplify_collects_like_terms_to_zero() {
        let e = Expr::Sum(vec![
            Expr::var(Var::T),
            Expr::Product(vec![Expr::int(-1), Expr::var(Var::T)]),
        ]);
        assert_eq!(simplify(&e), Expr::zero());
    }

    #[test]
    fn simplify_merges_constant_into_negative_power() {
        // (y')^-3 * (-1 * y') -> -(y')^-2, the multiplied F1 of the worked
        // example.
        let e = Expr::Product(vec![
            pow(y1(), rat_int(-3)),
            Expr::Product(vec![Expr::int(-1), y1()]),
        ]);
        let expected = Expr::Product(vec![Expr::int(-1), pow(y1(), rat_int(-2))]);
        assert_eq!(simplify(&e), expected);
    }

    #[test]
    fn exp_of_scaled_ln_folds_to_power() {
        let mu = func(
            FuncKind::Exp,
            mul(Expr::int(-3), func(FuncKind::Ln, y1())),
        );
        assert_eq!(mu, pow(y1(), rat_int(-3)));
    }

    #[test]
    fn exp_factors_merge_and_cancel() {
        let e = mul(
            func(FuncKind::Exp, Expr::var(Var::T)),
            func(FuncKind::Exp, neg(Expr::var(Var::T))),
        );
        assert_eq!(e, Expr::one());
    }

    #[test]
    fn free_vars_examples() {
        assert_eq!(
            pow(y1(), rat_int(3)).free_vars(),
            [Var::Y1].into_iter().collect()
        );
        assert!(Expr::int(5).free_vars().is_empty());
        let f2 = mul(Expr::int(2), Expr::var(Var::Y));
        assert_eq!(f2.free_vars(), [Var::Y].into_iter().collect());
    }

    #[test]
    fn equivalent_detects_distinct_variables() {
        let s = Sampler::default();
        assert!(!equivalent(&Expr::var(Var::T), &Expr::var(Var::Y), &s).unwrap());
    }

    #[test]
    fn equivalent_accepts_simplified_form() {
        let s = Sampler::default();
        let e = parse("t*y + t*y + (y')^2/(y')^3").unwrap();
        let raw = Expr::Sum(vec![
            mul(Expr::var(Var::T), Expr::var(Var::Y)),
            mul(Expr::var(Var::T), Expr::var(Var::Y)),
            div(pow(y1(), rat_int(2)), pow(y1(), rat_int(3))),
        ]);
        assert!(equivalent(&e, &raw, &s).unwrap());
    }

    #[test]
    fn equivalent_rejects_distinct_polynomials() {
        // Hand-built distinct pairs within total degree 8 and 4 variables.
        let s = Sampler::default();
        let pairs = [
            ("(t + y)^2", "t^2 + y^2"),
            ("t*y*y'", "t*y*y''"),
            ("t^4 + y^4", "t^4 + y^4 + 0.000001*y'"),
            ("(t + 1)^3", "t^3 + 3*t^2 + 3*t + 2"),
            ("t^8", "t^7"),
        ];
        for (a, b) in pairs {
            let ea = parse(a).unwrap();
            let eb = parse(b).unwrap();
            assert!(!equivalent(&ea, &eb, &s).unwrap(), "{a} vs {b}");
        }
        // And one equal pair for contrast.
        let ea = parse("(t + 1)*(t - 1)").unwrap();
        let eb = parse("t^2 - 1").unwrap();
        assert!(equivalent(&ea, &eb, &s).unwrap());
    }

    #[test]
    fn equivalent_insufficient_when_always_singular() {
        // ln(-2) is a domain error at every sample point.
        let bad = Expr::Func(FuncKind::Ln, alloc::boxed::Box::new(Expr::int(-2)));
        let s = Sampler::default();
        assert_eq!(
            equivalent(&bad, &bad, &s),
            Err(InsufficientSamples)
        );
    }

    #[test]
    fn print_round_trips_fixed_forms() {
        for text in [
            "(y')^-3",
            "t + y'' - y*(y')^-2",
            "2*y*(y')^-3",
            "exp(2*t)",
            "ln(t)",
            "sin(y)*cos(t)",
            "t^(1/2)",
            "-t - 1",
            "1/2*y + t^2",
            "(t + 1)^2",
        ] {
            let e = parse(text).unwrap();
            let printed = alloc::format!("{e}");
            let back = parse(&printed).unwrap();
            assert_eq!(back, e, "text `{text}` printed `{printed}`");
        }
    }

    #[test]
    fn subst_replaces_and_recanonicalizes() {
        let e = parse("t^2 + t*y").unwrap();
        let out = e.subst(Var::T, &Expr::int(1));
        assert_eq!(out, parse("1 + y").unwrap());
    }
}
