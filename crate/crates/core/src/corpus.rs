//! Seeded generators for test corpora.
//!
//! Two families are provided: general expression trees for exercising the
//! simplifier, evaluator, and differentiator; and first integrals from the
//! supported class (sums of products of rational powers of the jet
//! variables) whose partials construct exact equations with a known answer.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::partial;
use crate::exactness::Equation;
use crate::expr::{func, pow, product, rat, rat_int, sum, Expr, FuncKind, Var};

/// Deterministic general expression for `seed`: depth-bounded trees over
/// `t, y, y', y''` with rational constants, small rational exponents, and
/// occasional function applications.
pub fn expression(seed: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_expr(&mut rng, 3)
}

fn gen_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 {
        return gen_leaf(rng);
    }
    match rng.gen_range(0u32..10) {
        0..=1 => gen_leaf(rng),
        2..=4 => {
            let n = rng.gen_range(2usize..=3);
            sum((0..n).map(|_| gen_expr(rng, depth - 1)).collect())
        }
        5..=7 => {
            let n = rng.gen_range(2usize..=3);
            product((0..n).map(|_| gen_expr(rng, depth - 1)).collect())
        }
        8 => pow(gen_leaf(rng), gen_exponent(rng)),
        _ => {
            let kind = match rng.gen_range(0u32..4) {
                0 => FuncKind::Exp,
                1 => FuncKind::Ln,
                2 => FuncKind::Sin,
                _ => FuncKind::Cos,
            };
            // Low-degree arguments keep finite differences well conditioned.
            let arg = match rng.gen_range(0u32..3) {
                0 => gen_var(rng),
                1 => product(alloc::vec![gen_const(rng), gen_var(rng)]),
                _ => sum(alloc::vec![gen_var(rng), gen_const(rng)]),
            };
            func(kind, arg)
        }
    }
}

fn gen_leaf(rng: &mut ChaCha8Rng) -> Expr {
    match rng.gen_range(0u32..4) {
        0 => gen_const(rng),
        _ => gen_var(rng),
    }
}

fn gen_var(rng: &mut ChaCha8Rng) -> Expr {
    Expr::var(Var::COEFF[rng.gen_range(0usize..4)])
}

fn gen_const(rng: &mut ChaCha8Rng) -> Expr {
    let n = rng.gen_range(-4i64..=4);
    let d = rng.gen_range(1i64..=3);
    let n = if n == 0 { 1 } else { n };
    Expr::Const(rat(n, d))
}

fn gen_exponent(rng: &mut ChaCha8Rng) -> crate::expr::Rat {
    // Rational exponents in [-3, 3]: integers and halves, never zero.
    let halves = rng.gen_range(-6i64..=6);
    let halves = if halves == 0 { 2 } else { halves };
    rat(halves, 2)
}

/// Deterministic first integral from the supported class for `seed`: a sum
/// of at most four terms, each a nonzero rational times a product of
/// rational powers of `t, y, y', y''` with exponents in `[-3, 3]`; at least
/// one term depends on `y''` so the constructed leading coefficient is
/// nonzero.
pub fn first_integral_expr(seed: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    loop {
        let terms = rng.gen_range(1usize..=4);
        let mut parts = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut factors = alloc::vec![gen_coeff_nonzero(&mut rng)];
            for v in Var::COEFF {
                let e = rng.gen_range(-3i64..=3);
                if e != 0 {
                    factors.push(pow(Expr::var(v), rat_int(e)));
                }
            }
            parts.push(product(factors));
        }
        let psi = sum(parts);
        if !partial(&psi, Var::Y2).is_zero_const() {
            return psi;
        }
    }
}

fn gen_coeff_nonzero(rng: &mut ChaCha8Rng) -> Expr {
    let n = rng.gen_range(1i64..=5);
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    Expr::int(sign * n)
}

/// Exact equation built from the partials of a generated first integral:
/// `F3 = ∂Ψ/∂y''`, `F2 = ∂Ψ/∂y'`, `F1 = ∂Ψ/∂y`, `F0 = ∂Ψ/∂t`. Returns the
/// equation together with the Ψ it came from.
pub fn exact_equation(seed: u64) -> (Equation, Expr) {
    let psi = first_integral_expr(seed);
    let eq = Equation::new(
        partial(&psi, Var::Y2),
        partial(&psi, Var::Y1),
        partial(&psi, Var::Y),
        partial(&psi, Var::T),
    )
    .expect("generated leading coefficient is nonzero");
    (eq, psi)
}

/// Non-exact variant of [`exact_equation`]: one coefficient is perturbed by
/// a term that breaks at least one exactness condition. Returns `None` when
/// the perturbation accidentally keeps the equation exact or degenerate.
pub fn perturbed_equation(seed: u64) -> Option<Equation> {
    let (eq, _) = exact_equation(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xDEAD_BEEF);
    let bump = product(alloc::vec![
        gen_coeff_nonzero(&mut rng),
        pow(gen_var(&mut rng), gen_exponent(&mut rng)),
    ]);
    let which = rng.gen_range(0u32..4);
    let wrap = |e: &Expr, hit: bool| {
        if hit {
            sum(alloc::vec![e.clone(), bump.clone()])
        } else {
            e.clone()
        }
    };
    let candidate = Equation::new(
        wrap(eq.f3(), which == 3),
        wrap(eq.f2(), which == 2),
        wrap(eq.f1(), which == 1),
        wrap(eq.f0(), which == 0),
    )
    .ok()?;
    let report =
        crate::exactness::check_exact(&candidate, &crate::expr::Sampler::with_seed(seed)).ok()?;
    if report.is_exact() {
        return None;
    }
    Some(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(expression(7), expression(7));
        assert_eq!(first_integral_expr(7), first_integral_expr(7));
    }

    #[test]
    fn first_integral_class_depends_on_y2() {
        for seed in 0..20 {
            let psi = first_integral_expr(seed);
            assert!(!partial(&psi, Var::Y2).is_zero_const(), "seed {seed}");
        }
    }

    #[test]
    fn perturbed_equations_are_not_exact() {
        let mut produced = 0;
        for seed in 0..40 {
            if let Some(eq) = perturbed_equation(seed) {
                produced += 1;
                let report =
                    crate::exactness::check_exact(&eq, &crate::expr::Sampler::default()).unwrap();
                assert!(!report.is_exact(), "seed {seed}");
            }
        }
        assert!(produced >= 30, "only {produced} perturbations produced");
    }
}
