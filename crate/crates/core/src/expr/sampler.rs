//! Randomized numeric identity testing.
//!
//! Structural equality on canonical trees is the cheap certificate; this
//! module supplies the probabilistic one. Points are drawn uniformly from a
//! per-variable box that excludes zero, so rational powers and logarithms
//! are well defined; draws that land near a singularity are rejected and
//! redrawn, up to a bounded oversampling factor.

use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::eval_guarded;
use super::{Expr, JetPoint, Var};

/// Sampling configuration for numeric identity testing.
///
/// Owns no RNG state between calls: every query reseeds from `seed`, so
/// results are reproducible and the type is freely shareable.
#[derive(Clone, Debug)]
pub struct Sampler {
    /// RNG seed.
    pub seed: u64,
    /// Per-variable closed sampling intervals, indexed `t, y, y', y'', y'''`.
    pub var_box: [(f64, f64); 5],
    /// Minimum magnitude for denominators and logarithm arguments.
    pub guard: f64,
    /// Number of admissible points required per query.
    pub samples: u32,
    /// Relative tolerance for agreement.
    pub tol: f64,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            seed: 0x5EED,
            var_box: [(0.5, 2.5); 5],
            guard: 1e-6,
            samples: 32,
            tol: 1e-9,
        }
    }
}

impl Sampler {
    /// Default configuration with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Sampler {
            seed,
            ..Sampler::default()
        }
    }

    /// Derived sampler for an independent sub-search, offset by `index`.
    pub fn derive(&self, index: u64) -> Self {
        Sampler {
            seed: self.seed.wrapping_add(index),
            ..self.clone()
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Draw a jet point from the box; `with_y3` controls whether `y'''` is
    /// supplied.
    pub fn draw(&self, rng: &mut ChaCha8Rng, with_y3: bool) -> JetPoint {
        let mut coord = |i: usize| {
            let (lo, hi) = self.var_box[i];
            rng.gen_range(lo..=hi)
        };
        let t = coord(0);
        let y = coord(1);
        let y1 = coord(2);
        let y2 = coord(3);
        let y3 = if with_y3 { Some(coord(4)) } else { None };
        JetPoint { t, y, y1, y2, y3 }
    }

    /// Endless deterministic stream of box points, reseeded from `seed`.
    pub fn draws(&self, with_y3: bool) -> impl Iterator<Item = JetPoint> + '_ {
        let mut rng = self.rng();
        core::iter::from_fn(move || Some(self.draw(&mut rng, with_y3)))
    }
}

/// The sample box never avoided the singularities of the expressions under
/// test: fewer admissible points than requested were found within the 10x
/// oversampling budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsufficientSamples;

impl fmt::Display for InsufficientSamples {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("sample box never avoids the singularities of the expressions under test")
    }
}

/// Randomized equivalence test: true iff the two expressions agree within
/// `s.tol` relative tolerance at `s.samples` admissible points.
///
/// Points where either evaluation hits a domain error, a near-singularity,
/// or a non-finite value are redrawn, at most ten times oversampled.
pub fn equivalent(e1: &Expr, e2: &Expr, s: &Sampler) -> Result<bool, InsufficientSamples> {
    let with_y3 = !e1.is_free_of(Var::Y3) || !e2.is_free_of(Var::Y3);
    let mut rng = s.rng();
    let mut admissible = 0u32;
    let budget = s.samples.saturating_mul(10);
    for _ in 0..budget {
        if admissible == s.samples {
            break;
        }
        let p = s.draw(&mut rng, with_y3);
        let a = match eval_guarded(e1, &p, s.guard) {
            Ok(v) if v.is_finite() => v,
            _ => continue,
        };
        let b = match eval_guarded(e2, &p, s.guard) {
            Ok(v) if v.is_finite() => v,
            _ => continue,
        };
        admissible += 1;
        if (a - b).abs() > s.tol * max_f(1.0, a.abs()) {
            return Ok(false);
        }
    }
    if admissible < s.samples {
        return Err(InsufficientSamples);
    }
    Ok(true)
}

/// Zero test: structural after canonicalization, falling back to sampling.
pub fn is_zero(e: &Expr, s: &Sampler) -> Result<bool, InsufficientSamples> {
    if e.is_zero_const() {
        return Ok(true);
    }
    // A canonical nonzero constant is never zero.
    if matches!(e, Expr::Const(_)) {
        return Ok(false);
    }
    equivalent(e, &Expr::zero(), s)
}

fn max_f(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}
