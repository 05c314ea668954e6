//! Canonicalizing constructors.
//!
//! Every constructor assumes canonical children and produces a canonical
//! result, so rebuilding a canonical tree is a no-op and `simplify` is
//! idempotent. Rewrites that are only valid on a positive domain (merging
//! nested rational powers, distributing powers over products, `ln(u^q) ->
//! q*ln(u)`) are applied unconditionally: the engine evaluates on a
//! positive sample box and targets expressions whose powers have positive
//! bases.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use super::{Expr, FuncKind, Rat};

/// Canonical sum of `terms`: flattens, folds constants, collects like terms
/// by their non-constant core, drops zeros, sorts. A term of the shape
/// `c * (a + b)` is spliced as `c*a + c*b`, so differences of sums cancel
/// term by term.
pub fn sum(terms: Vec<Expr>) -> Expr {
    let mut constant = Rat::zero();
    let mut cores: BTreeMap<Expr, Rat> = BTreeMap::new();

    let mut pending = terms;
    pending.reverse();
    while let Some(term) = pending.pop() {
        match term {
            Expr::Sum(inner) => {
                for t in inner.into_iter().rev() {
                    pending.push(t);
                }
            }
            Expr::Const(c) => constant += c,
            Expr::Product(fs) if is_scaled_sum(&fs) => {
                let (c, inner) = match (&fs[0], &fs[1]) {
                    (Expr::Const(c), Expr::Sum(inner)) => (c.clone(), inner.clone()),
                    _ => unreachable!(),
                };
                for t in inner.into_iter().rev() {
                    pending.push(product(alloc::vec![Expr::Const(c.clone()), t]));
                }
            }
            other => {
                let (coeff, core) = split_coeff(other);
                *cores.entry(core).or_insert_with(Rat::zero) += coeff;
            }
        }
    }

    let mut out: Vec<Expr> = Vec::new();
    for (core, coeff) in cores {
        if coeff.is_zero() {
            continue;
        }
        out.push(apply_coeff(coeff, core));
    }
    if !constant.is_zero() {
        out.push(Expr::Const(constant));
    }
    out.sort();
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::Sum(out),
    }
}

/// True for the exact shape `[Const(c), Sum(..)]`.
fn is_scaled_sum(fs: &[Expr]) -> bool {
    fs.len() == 2 && matches!((&fs[0], &fs[1]), (Expr::Const(_), Expr::Sum(_)))
}

/// Split a non-sum term into `(coefficient, core)` where the core carries no
/// leading constant factor.
fn split_coeff(term: Expr) -> (Rat, Expr) {
    match term {
        Expr::Const(c) => (c, Expr::one()),
        Expr::Product(mut fs) => {
            if let Some(Expr::Const(_)) = fs.first() {
                let c = match fs.remove(0) {
                    Expr::Const(c) => c,
                    _ => unreachable!(),
                };
                let core = if fs.len() == 1 {
                    fs.pop().unwrap()
                } else {
                    Expr::Product(fs)
                };
                (c, core)
            } else {
                (Rat::one(), Expr::Product(fs))
            }
        }
        other => (Rat::one(), other),
    }
}

/// Rebuild `coeff * core` without re-canonicalizing the core.
fn apply_coeff(coeff: Rat, core: Expr) -> Expr {
    if coeff.is_one() {
        return core;
    }
    match core {
        Expr::Const(c) => Expr::Const(coeff * c),
        Expr::Product(mut fs) => {
            fs.insert(0, Expr::Const(coeff));
            Expr::Product(fs)
        }
        other => Expr::Product(alloc::vec![Expr::Const(coeff), other]),
    }
}

/// Canonical product of `factors`: flattens, folds constants, merges
/// like-base powers, merges `exp` factors by summing their arguments,
/// annihilates on zero, sorts with the constant coefficient first.
pub fn product(factors: Vec<Expr>) -> Expr {
    let mut coeff = Rat::one();
    let mut bases: BTreeMap<Expr, Rat> = BTreeMap::new();
    let mut exp_args: Vec<Expr> = Vec::new();

    let mut pending = factors;
    pending.reverse();
    while let Some(factor) = pending.pop() {
        match factor {
            Expr::Product(inner) => {
                for f in inner.into_iter().rev() {
                    pending.push(f);
                }
            }
            Expr::Const(c) => {
                if c.is_zero() {
                    return Expr::zero();
                }
                coeff *= c;
            }
            Expr::Func(FuncKind::Exp, arg) => exp_args.push(*arg),
            Expr::Power(b, q) => match *b {
                Expr::Func(FuncKind::Exp, arg) => {
                    exp_args.push(scale(q, *arg));
                }
                base => *bases.entry(base).or_insert_with(Rat::zero) += q,
            },
            other => *bases.entry(other).or_insert_with(Rat::zero) += Rat::one(),
        }
    }

    // Combine all exp factors into one; ln terms inside the combined argument
    // fold back into rational powers, which may feed new factors to merge.
    if !exp_args.is_empty() {
        let combined = func(FuncKind::Exp, sum(exp_args));
        merge_factor(combined, &mut coeff, &mut bases);
    }

    let mut out: Vec<Expr> = Vec::new();
    for (base, q) in bases {
        if q.is_zero() {
            continue;
        }
        // pow() may fold (e.g. integer powers of constants); route the result
        // through the coefficient when it does.
        match pow(base, q) {
            Expr::Const(c) => {
                if c.is_zero() {
                    return Expr::zero();
                }
                coeff *= c;
            }
            e => out.push(e),
        }
    }
    out.sort();
    if !coeff.is_one() {
        out.insert(0, Expr::Const(coeff.clone()));
    }
    match out.len() {
        0 => Expr::Const(coeff),
        1 => out.pop().unwrap(),
        _ => Expr::Product(out),
    }
}

/// Fold one canonical factor (possibly a product) into a coefficient and
/// base map.
fn merge_factor(e: Expr, coeff: &mut Rat, bases: &mut BTreeMap<Expr, Rat>) {
    match e {
        Expr::Const(c) => *coeff *= c,
        Expr::Product(fs) => {
            for f in fs {
                merge_factor(f, coeff, bases);
            }
        }
        Expr::Power(b, q) => *bases.entry(*b).or_insert_with(Rat::zero) += q,
        other => *bases.entry(other).or_insert_with(Rat::zero) += Rat::one(),
    }
}

/// `coeff * e` as a canonical expression.
fn scale(coeff: Rat, e: Expr) -> Expr {
    product(alloc::vec![Expr::Const(coeff), e])
}

/// Canonical power `base^q`.
///
/// Folds integer powers of constants, collapses exponents 0 and 1, merges
/// nested powers, distributes over products, and rewrites `exp(u)^q` to
/// `exp(q*u)`.
pub fn pow(base: Expr, q: Rat) -> Expr {
    if q.is_zero() {
        return Expr::one();
    }
    if q.is_one() {
        return base;
    }
    match base {
        Expr::Const(c) => {
            if c.is_one() {
                return Expr::one();
            }
            if c.is_zero() {
                return if q.is_positive() {
                    Expr::zero()
                } else {
                    // 0^negative: keep the node; evaluation reports the
                    // domain error.
                    Expr::Power(Box::new(Expr::zero()), q)
                };
            }
            if q.is_integer() {
                use num_traits::ToPrimitive;
                let expo = q.to_integer();
                match expo.magnitude().to_u32() {
                    Some(mag) => {
                        let p = Rat::new(
                            num_traits::pow::pow(c.numer().clone(), mag as usize),
                            num_traits::pow::pow(c.denom().clone(), mag as usize),
                        );
                        if expo.sign() == num_bigint::Sign::Minus {
                            Expr::Const(p.recip())
                        } else {
                            Expr::Const(p)
                        }
                    }
                    // Astronomically large exponents stay symbolic.
                    None => Expr::Power(Box::new(Expr::Const(c)), q),
                }
            } else {
                Expr::Power(Box::new(Expr::Const(c)), q)
            }
        }
        Expr::Power(b, r) => pow(*b, r * q),
        Expr::Product(fs) => product(fs.into_iter().map(|f| pow(f, q.clone())).collect()),
        Expr::Func(FuncKind::Exp, arg) => func(FuncKind::Exp, scale(q, *arg)),
        other => Expr::Power(Box::new(other), q),
    }
}

/// Canonical function application.
///
/// Applies the safe local identities `exp(0)=1`, `ln(1)=0`, `sin(0)=0`,
/// `cos(0)=1`, `exp(ln u)=u`, `ln(exp u)=u`, `ln(u^q)=q*ln(u)`, and folds
/// `c*ln(u)` terms under `exp` back into powers.
pub fn func(f: FuncKind, arg: Expr) -> Expr {
    match f {
        FuncKind::Exp => exp_of(arg),
        FuncKind::Ln => ln_of(arg),
        FuncKind::Sin => {
            if arg.is_zero_const() {
                Expr::zero()
            } else {
                Expr::Func(FuncKind::Sin, Box::new(arg))
            }
        }
        FuncKind::Cos => {
            if arg.is_zero_const() {
                Expr::one()
            } else {
                Expr::Func(FuncKind::Cos, Box::new(arg))
            }
        }
    }
}

fn exp_of(arg: Expr) -> Expr {
    match arg {
        Expr::Const(c) => {
            if c.is_zero() {
                Expr::one()
            } else {
                Expr::Func(FuncKind::Exp, Box::new(Expr::Const(c)))
            }
        }
        Expr::Func(FuncKind::Ln, u) => *u,
        Expr::Sum(terms) => {
            // exp(sum) splits its c*ln(u) terms into powers u^c; the rest
            // stays under a single exp.
            let mut powers: Vec<Expr> = Vec::new();
            let mut rest: Vec<Expr> = Vec::new();
            for t in terms {
                match as_ln_multiple(&t) {
                    Some((c, u)) => powers.push(pow(u, c)),
                    None => rest.push(t),
                }
            }
            if powers.is_empty() {
                Expr::Func(FuncKind::Exp, Box::new(sum(rest)))
            } else {
                if !rest.is_empty() {
                    powers.push(exp_of(sum(rest)));
                }
                product(powers)
            }
        }
        other => match as_ln_multiple(&other) {
            Some((c, u)) => pow(u, c),
            None => Expr::Func(FuncKind::Exp, Box::new(other)),
        },
    }
}

/// Recognize `c * ln(u)` (including plain `ln(u)`), returning `(c, u)`.
fn as_ln_multiple(e: &Expr) -> Option<(Rat, Expr)> {
    match e {
        Expr::Func(FuncKind::Ln, u) => Some((Rat::one(), (**u).clone())),
        Expr::Product(fs) if fs.len() == 2 => match (&fs[0], &fs[1]) {
            (Expr::Const(c), Expr::Func(FuncKind::Ln, u)) => Some((c.clone(), (**u).clone())),
            _ => None,
        },
        _ => None,
    }
}

fn ln_of(arg: Expr) -> Expr {
    match arg {
        Expr::Const(c) => {
            if c.is_one() {
                Expr::zero()
            } else {
                Expr::Func(FuncKind::Ln, Box::new(Expr::Const(c)))
            }
        }
        Expr::Func(FuncKind::Exp, u) => *u,
        Expr::Power(b, q) => scale(q, ln_of(*b)),
        other => Expr::Func(FuncKind::Ln, Box::new(other)),
    }
}
