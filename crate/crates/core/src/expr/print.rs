//! ASCII printer emitting the parse grammar, so `parse(print(e))` rebuilds
//! the same canonical tree.

use core::fmt;

use num_traits::{One, Signed};

use super::{Expr, Rat, Var};

// Precedence contexts: 0 top, 1 additive, 2 multiplicative, 3 atom.
const CTX_TOP: u8 = 0;
const CTX_ADD: u8 = 1;
const CTX_MUL: u8 = 2;
const CTX_ATOM: u8 = 3;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, CTX_TOP)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, ctx: u8) -> fmt::Result {
    match e {
        Expr::Const(c) => write_const(f, c),
        Expr::Var(v) => f.write_str(v.name()),
        Expr::Sum(terms) => {
            let parens = ctx >= CTX_MUL;
            if parens {
                f.write_str("(")?;
            }
            for (i, term) in terms.iter().enumerate() {
                let (negative, abs) = sign_split(term);
                if i == 0 {
                    if negative {
                        f.write_str("-")?;
                    }
                } else if negative {
                    f.write_str(" - ")?;
                } else {
                    f.write_str(" + ")?;
                }
                write_expr(f, &abs, CTX_ADD)?;
            }
            if parens {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Product(factors) => {
            // Canonical products never nest and never sit under a power
            // base, so the only contexts are top-level, additive, and
            // function arguments; a sign prefix is unambiguous there.
            let parens = ctx >= CTX_ATOM;
            if parens {
                f.write_str("(")?;
            }
            let mut first = true;
            for factor in factors {
                if first {
                    if let Expr::Const(c) = factor {
                        if *c == -Rat::one() {
                            // Bare sign prefix; no separator before the
                            // next factor.
                            f.write_str("-")?;
                        } else {
                            write_const(f, c)?;
                            first = false;
                        }
                        continue;
                    }
                }
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                write_expr(f, factor, CTX_MUL)?;
            }
            if parens {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Power(base, q) => {
            let plain_base = matches!(base.as_ref(), Expr::Var(Var::T) | Expr::Var(Var::Y))
                || matches!(base.as_ref(), Expr::Const(c) if c.is_integer() && !c.is_negative());
            if plain_base {
                write_expr(f, base, CTX_ATOM)?;
            } else {
                f.write_str("(")?;
                write_expr(f, base, CTX_TOP)?;
                f.write_str(")")?;
            }
            f.write_str("^")?;
            if q.is_integer() {
                write!(f, "{}", q.numer())
            } else {
                write!(f, "({}/{})", q.numer(), q.denom())
            }
        }
        Expr::Func(kind, arg) => {
            f.write_str(kind.name())?;
            f.write_str("(")?;
            write_expr(f, arg, CTX_TOP)?;
            f.write_str(")")
        }
    }
}

/// Split a canonical term into its sign and printable absolute value.
fn sign_split(term: &Expr) -> (bool, Expr) {
    match term {
        Expr::Const(c) if c.is_negative() => (true, Expr::Const(-c.clone())),
        Expr::Product(fs) => {
            if let Some(Expr::Const(c)) = fs.first() {
                if c.is_negative() {
                    let negated = -c.clone();
                    let mut rest = fs[1..].to_vec();
                    let abs = if negated.is_one() {
                        if rest.len() == 1 {
                            rest.pop().unwrap()
                        } else {
                            Expr::Product(rest)
                        }
                    } else {
                        let mut all = alloc::vec![Expr::Const(negated)];
                        all.extend(rest);
                        Expr::Product(all)
                    };
                    return (true, abs);
                }
            }
            (false, term.clone())
        }
        _ => (false, term.clone()),
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &Rat) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}
