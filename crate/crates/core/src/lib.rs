//! Symbolic engine for third-order ordinary differential equations of the
//! form `F3·y''' + F2·y'' + F1·y' + F0 = 0`, where each coefficient is an
//! expression over `t, y, y', y''`.
//!
//! The engine decides exactness (six cross-partial conditions), searches for
//! integrating factors of the product form `μ(ξ)` with
//! `ξ = α(t)β(y)γ(y')δ(y'')`, and constructs the first integral
//! `Ψ(t,y,y',y'') = c` that reduces the equation to second order.
//!
//! Identity testing is two-layered: structural equality on canonical trees
//! where it holds, randomized evaluation on a positive sample box otherwise.
//! Every integrating factor the search returns carries a final certificate,
//! namely that the multiplied equation passes the exactness check.
//!
//! The crate is `no_std` (with `alloc`); IO and the command line interface
//! live in the companion `exact3-cli` crate.

#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod calculus;
pub mod corpus;
pub mod exactness;
pub mod expr;
pub mod mu_search;

pub use expr::{Expr, FuncKind, JetPoint, Rat, Sampler, Var};
