//! Partial derivatives, the total derivative along a solution jet, and a
//! rule-based univariate antiderivative.
//!
//! The integration rule table is deliberately small: linearity, constant
//! factors pulled out, Laurent monomials `v^k`, and `exp`/`sin`/`cos` with
//! arguments of the form `a*v` where `a` is free of `v`. Integrands outside
//! the table are reported as unsupported rather than guessed at.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::One;

use crate::expr::{func, neg, pow, product, rat_int, sub, sum, Expr, FuncKind, Rat, Var};

/// Result of a rule-table integration attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Antiderivative {
    /// An antiderivative whose partial in the integration variable matches
    /// the integrand.
    Supported(Expr),
    /// The integrand is outside the rule table.
    Unsupported,
}

impl Antiderivative {
    pub fn supported(&self) -> bool {
        matches!(self, Antiderivative::Supported(_))
    }

    pub fn result(&self) -> Option<&Expr> {
        match self {
            Antiderivative::Supported(e) => Some(e),
            Antiderivative::Unsupported => None,
        }
    }
}

/// `total_derivative` rejects expressions that already mention `y'''`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContainsY3;

impl fmt::Display for ContainsY3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expression already mentions y'''")
    }
}

/// The integrand falls outside the integration rule table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnsupportedIntegrand;

impl fmt::Display for UnsupportedIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("integrand outside the rule table")
    }
}

/// Partial derivative of `e` with respect to `v`, treating the other jet
/// variables as independent symbols. The result is canonical.
pub fn partial(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Sum(terms) => sum(terms.iter().map(|t| partial(t, v)).collect()),
        Expr::Product(factors) => {
            let mut terms = Vec::with_capacity(factors.len());
            for (i, fi) in factors.iter().enumerate() {
                let d = partial(fi, v);
                if d.is_zero_const() {
                    continue;
                }
                let mut parts: Vec<Expr> = factors
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, f)| f.clone())
                    .collect();
                parts.push(d);
                terms.push(product(parts));
            }
            sum(terms)
        }
        Expr::Power(base, q) => {
            let d = partial(base, v);
            if d.is_zero_const() {
                return Expr::zero();
            }
            let qm1 = q.clone() - Rat::one();
            product(vec![
                Expr::Const(q.clone()),
                pow((**base).clone(), qm1),
                d,
            ])
        }
        Expr::Func(kind, arg) => {
            let d = partial(arg, v);
            if d.is_zero_const() {
                return Expr::zero();
            }
            let outer = match kind {
                FuncKind::Exp => func(FuncKind::Exp, (**arg).clone()),
                FuncKind::Ln => pow((**arg).clone(), rat_int(-1)),
                FuncKind::Sin => func(FuncKind::Cos, (**arg).clone()),
                FuncKind::Cos => neg(func(FuncKind::Sin, (**arg).clone())),
            };
            product(vec![outer, d])
        }
    }
}

/// Total derivative along a solution jet:
/// `d/dt = ∂t + y'·∂y + y''·∂y' + y'''·∂y''`. The result may mention `y'''`.
pub fn total_derivative(psi: &Expr) -> Result<Expr, ContainsY3> {
    if !psi.is_free_of(Var::Y3) {
        return Err(ContainsY3);
    }
    Ok(sum(vec![
        partial(psi, Var::T),
        product(vec![Expr::var(Var::Y1), partial(psi, Var::Y)]),
        product(vec![Expr::var(Var::Y2), partial(psi, Var::Y1)]),
        product(vec![Expr::var(Var::Y3), partial(psi, Var::Y2)]),
    ]))
}

/// Rule-table antiderivative of `e` with respect to `v`.
pub fn antiderivative(e: &Expr, v: Var) -> Antiderivative {
    if e.is_free_of(v) {
        return Antiderivative::Supported(product(vec![e.clone(), Expr::var(v)]));
    }
    match e {
        Expr::Sum(terms) => {
            let mut parts = Vec::with_capacity(terms.len());
            for t in terms {
                match antiderivative(t, v) {
                    Antiderivative::Supported(a) => parts.push(a),
                    Antiderivative::Unsupported => return Antiderivative::Unsupported,
                }
            }
            Antiderivative::Supported(sum(parts))
        }
        Expr::Product(factors) => {
            let (mut free, mut dependent): (Vec<Expr>, Vec<Expr>) = (Vec::new(), Vec::new());
            for f in factors {
                if f.is_free_of(v) {
                    free.push(f.clone());
                } else {
                    dependent.push(f.clone());
                }
            }
            if dependent.len() != 1 {
                // Products of several v-dependent factors need integration
                // by parts, which the table does not do.
                return Antiderivative::Unsupported;
            }
            match integrate_atom(&dependent[0], v) {
                Some(a) => {
                    free.push(a);
                    Antiderivative::Supported(product(free))
                }
                None => Antiderivative::Unsupported,
            }
        }
        atom => match integrate_atom(atom, v) {
            Some(a) => Antiderivative::Supported(a),
            None => Antiderivative::Unsupported,
        },
    }
}

/// Integrate a single v-dependent factor, if it matches the rule table.
fn integrate_atom(atom: &Expr, v: Var) -> Option<Expr> {
    match atom {
        Expr::Var(w) if *w == v => Some(product(vec![
            Expr::ratio(1, 2),
            pow(Expr::var(v), rat_int(2)),
        ])),
        Expr::Power(base, q) => {
            if **base != Expr::Var(v) {
                return None;
            }
            if *q == -Rat::one() {
                Some(func(FuncKind::Ln, Expr::var(v)))
            } else {
                let qp1 = q.clone() + Rat::one();
                Some(product(vec![
                    Expr::Const(qp1.clone().recip()),
                    pow(Expr::var(v), qp1),
                ]))
            }
        }
        Expr::Func(kind, arg) => {
            let scale = linear_scale(arg, v)?;
            let inv = pow(scale, rat_int(-1));
            match kind {
                FuncKind::Exp => Some(product(vec![
                    func(FuncKind::Exp, (**arg).clone()),
                    inv,
                ])),
                FuncKind::Sin => Some(product(vec![
                    Expr::int(-1),
                    func(FuncKind::Cos, (**arg).clone()),
                    inv,
                ])),
                FuncKind::Cos => Some(product(vec![
                    func(FuncKind::Sin, (**arg).clone()),
                    inv,
                ])),
                FuncKind::Ln => None,
            }
        }
        _ => None,
    }
}

/// Match `arg = a * v` with `a` free of `v`, returning `a`.
fn linear_scale(arg: &Expr, v: Var) -> Option<Expr> {
    match arg {
        Expr::Var(w) if *w == v => Some(Expr::one()),
        Expr::Product(factors) => {
            let mut scale = Vec::new();
            let mut seen_v = false;
            for f in factors {
                if *f == Expr::Var(v) {
                    seen_v = true;
                } else if f.is_free_of(v) {
                    scale.push(f.clone());
                } else {
                    return None;
                }
            }
            if seen_v {
                Some(product(scale))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Definite integral `∫_lo^hi e dv` via the rule table: `A(hi) - A(lo)`.
///
/// The bounds are substituted for `v` in the antiderivative; callers pass
/// bounds free of `v` (passing `v` itself as a bound is the identity
/// substitution and is also fine).
pub fn definite_integral(
    e: &Expr,
    v: Var,
    lo: &Expr,
    hi: &Expr,
) -> Result<Expr, UnsupportedIntegrand> {
    match antiderivative(e, v) {
        Antiderivative::Supported(a) => Ok(sub(a.subst(v, hi), a.subst(v, lo))),
        Antiderivative::Unsupported => Err(UnsupportedIntegrand),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{add, equivalent, mul, parse, JetPoint, Sampler};
    use rand::Rng;

    #[test]
    fn partial_of_constant_and_unrelated_variable() {
        assert_eq!(partial(&Expr::int(7), Var::T), Expr::zero());
        let f2 = parse("2*y").unwrap();
        assert_eq!(partial(&f2, Var::Y1), Expr::zero());
    }

    #[test]
    fn partial_of_negative_power() {
        // d/dy' (y')^-2 = -2 (y')^-3.
        let e = parse("(y')^-2").unwrap();
        let expected = parse("-2*(y')^-3").unwrap();
        assert_eq!(partial(&e, Var::Y1), expected);
    }

    #[test]
    fn cross_partials_of_multiplied_example_agree() {
        // For the multiplied nonlinear example, d/dy' F1 = d/dy F2 = 2(y')^-3.
        let f1 = parse("-(y')^-2").unwrap();
        let f2 = parse("2*y*(y')^-3").unwrap();
        let expected = parse("2*(y')^-3").unwrap();
        assert_eq!(partial(&f1, Var::Y1), expected);
        assert_eq!(partial(&f2, Var::Y), expected);
    }

    #[test]
    fn total_derivative_of_y2_is_y3() {
        let td = total_derivative(&Expr::var(Var::Y2)).unwrap();
        assert_eq!(td, Expr::var(Var::Y3));
    }

    #[test]
    fn total_derivative_product_rule() {
        let e = parse("t*y").unwrap();
        let expected = parse("y + t*y'").unwrap();
        assert_eq!(total_derivative(&e).unwrap(), expected);
    }

    #[test]
    fn total_derivative_of_first_integral_matches_exact_form() {
        let psi = parse("y'' - (y')^-2*y + t").unwrap();
        let td = total_derivative(&psi).unwrap();
        let expected = parse("y''' + 2*y*(y')^-3*y'' - (y')^-2*y' + 1").unwrap();
        let s = Sampler::default();
        assert!(equivalent(&td, &expected, &s).unwrap());
    }

    #[test]
    fn total_derivative_rejects_y3_input() {
        let e = parse("y'''").unwrap();
        assert_eq!(total_derivative(&e), Err(ContainsY3));
    }

    #[test]
    fn antiderivative_of_inverse_cube() {
        // ∫ v^-3 dv = -v^-2/2.
        let e = parse("(y')^-3").unwrap();
        let expected = parse("-1/2*(y')^-2").unwrap();
        assert_eq!(
            antiderivative(&e, Var::Y1),
            Antiderivative::Supported(expected)
        );
    }

    #[test]
    fn antiderivative_of_constant() {
        assert_eq!(
            antiderivative(&Expr::one(), Var::T),
            Antiderivative::Supported(Expr::var(Var::T))
        );
    }

    #[test]
    fn antiderivative_scaled_exponential() {
        // exp(y*t) in t has scale a = y, giving exp(y*t)/y.
        let e = parse("exp(y*t)").unwrap();
        let expected = parse("exp(y*t)*y^-1").unwrap();
        assert_eq!(
            antiderivative(&e, Var::T),
            Antiderivative::Supported(expected)
        );
    }

    #[test]
    fn antiderivative_composite_exponential_unsupported() {
        let e = parse("exp(t^2)").unwrap();
        assert_eq!(antiderivative(&e, Var::T), Antiderivative::Unsupported);
    }

    #[test]
    fn antiderivative_rejects_by_parts_cases() {
        let e = parse("t*exp(t)").unwrap();
        assert_eq!(antiderivative(&e, Var::T), Antiderivative::Unsupported);
        let f = parse("ln(t)").unwrap();
        assert_eq!(antiderivative(&f, Var::T), Antiderivative::Unsupported);
    }

    #[test]
    fn antiderivative_trig_rules() {
        let s = parse("sin(2*t)").unwrap();
        let expected = parse("-1/2*cos(2*t)").unwrap();
        assert_eq!(
            antiderivative(&s, Var::T),
            Antiderivative::Supported(expected)
        );
        let c = parse("cos(t)").unwrap();
        assert_eq!(
            antiderivative(&c, Var::T),
            Antiderivative::Supported(parse("sin(t)").unwrap())
        );
    }

    #[test]
    fn definite_integral_of_one() {
        // ∫_{t0}^{t} 1 dξ = t - t0 with a symbolic upper bound.
        let out =
            definite_integral(&Expr::one(), Var::T, &Expr::int(1), &Expr::var(Var::T)).unwrap();
        assert_eq!(out, parse("t - 1").unwrap());
    }

    #[test]
    fn definite_integral_equal_bounds_is_zero() {
        let e = parse("t^2").unwrap();
        let out = definite_integral(&e, Var::T, &Expr::int(2), &Expr::int(2)).unwrap();
        assert_eq!(out, Expr::zero());
    }

    #[test]
    fn definite_integral_power_rule_with_quadrature_oracle() {
        // ∫_{a}^{b} 2 c ξ^-3 dξ = c (a^-2 - b^-2); cross-check the closed
        // form against Simpson quadrature at random bounds.
        let integrand = parse("2*y*(y')^-3").unwrap();
        let closed = definite_integral(
            &integrand,
            Var::Y1,
            &Expr::ratio(3, 2),
            &Expr::var(Var::Y1),
        )
        .unwrap();
        let expected = parse("y*((3/2)^-2 - (y')^-2)").unwrap();
        let s = Sampler::default();
        assert!(equivalent(&closed, &expected, &s).unwrap());

        let mut rng = s.rng();
        for _ in 0..10 {
            let a: f64 = rng.gen_range(0.5..2.5);
            let b: f64 = rng.gen_range(0.5..2.5);
            let c: f64 = rng.gen_range(0.5..2.5);
            let numeric = simpson(|x| 2.0 * c * x.powi(-3), a, b, 2000);
            let exact = c * (a.powi(-2) - b.powi(-2));
            assert!(
                (numeric - exact).abs() <= 1e-9 * exact.abs().max(1.0),
                "a={a} b={b} c={c}: {numeric} vs {exact}"
            );
        }
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            acc += f(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn fundamental_theorem_on_rule_table_outputs() {
        let s = Sampler::default();
        let cases = [
            ("(y')^-3", Var::Y1),
            ("t^2 + 3*t - 1/2", Var::T),
            ("y^-1", Var::Y),
            ("exp(2*t)", Var::T),
            ("sin(y)*t^2", Var::T),
            ("cos(3*y'')", Var::Y2),
            ("y*t^(1/2)", Var::T),
        ];
        for (text, v) in cases {
            let e = parse(text).unwrap();
            let a = match antiderivative(&e, v) {
                Antiderivative::Supported(a) => a,
                Antiderivative::Unsupported => panic!("{text} should be supported"),
            };
            assert!(
                equivalent(&partial(&a, v), &e, &s).unwrap(),
                "d/d{} of antiderivative of {text}",
                v.name()
            );
        }
    }

    #[test]
    fn linearity_of_partial() {
        let s = Sampler::default();
        let e1 = parse("t^2*y").unwrap();
        let e2 = parse("sin(t)*y''").unwrap();
        let combo = add(mul(Expr::int(3), e1.clone()), mul(Expr::int(-2), e2.clone()));
        let lhs = partial(&combo, Var::T);
        let rhs = add(
            mul(Expr::int(3), partial(&e1, Var::T)),
            mul(Expr::int(-2), partial(&e2, Var::T)),
        );
        assert!(equivalent(&lhs, &rhs, &s).unwrap());
    }

    #[test]
    fn clairaut_mixed_partials_commute() {
        let s = Sampler::default();
        for text in ["t^2*y^3*(y')^-2", "exp(t*y)", "ln(t)*y''^2", "sin(t*y')"] {
            let e = parse(text).unwrap();
            for (u, w) in [(Var::T, Var::Y), (Var::Y, Var::Y1), (Var::T, Var::Y2)] {
                let a = partial(&partial(&e, u), w);
                let b = partial(&partial(&e, w), u);
                assert!(equivalent(&a, &b, &s).unwrap(), "{text} {u:?} {w:?}");
            }
        }
    }

    #[test]
    fn partial_matches_central_finite_differences() {
        // Independent numeric oracle for the differentiator.
        let s = Sampler::default();
        let exprs = [
            "t^3*y - 2*(y')^-1",
            "exp(2*t)*y''",
            "sin(t)*cos(y)",
            "ln(y')*t",
            "y^(3/2) + t*y''^2",
        ];
        let mut rng = s.rng();
        for text in exprs {
            let e = parse(text).unwrap();
            for v in Var::COEFF {
                let d = partial(&e, v);
                let mut checked = 0;
                while checked < 8 {
                    let p = s.draw(&mut rng, false);
                    match (fd_check(&e, &d, v, &p), ()) {
                        (Some(ok), ()) => {
                            assert!(ok, "{text} wrt {} at {p:?}", v.name());
                            checked += 1;
                        }
                        _ => continue,
                    }
                }
            }
        }
    }

    fn fd_check(e: &Expr, d: &Expr, v: Var, p: &JetPoint) -> Option<bool> {
        let h = 1e-5;
        let shift = |p: &JetPoint, delta: f64| {
            let mut q = *p;
            match v {
                Var::T => q.t += delta,
                Var::Y => q.y += delta,
                Var::Y1 => q.y1 += delta,
                Var::Y2 => q.y2 += delta,
                Var::Y3 => unreachable!(),
            }
            q
        };
        let fp = crate::expr::eval(e, &shift(p, h)).ok()?;
        let fm = crate::expr::eval(e, &shift(p, -h)).ok()?;
        let exact = crate::expr::eval(d, p).ok()?;
        if !fp.is_finite() || !fm.is_finite() || !exact.is_finite() {
            return None;
        }
        let approx = (fp - fm) / (2.0 * h);
        Some((approx - exact).abs() <= 1e-6 * exact.abs().max(1.0))
    }
}
