//! N-trader optimal execution with transient price impact.
//!
//! Traders liquidate or accumulate positions on a common time grid. Every
//! trade moves the price through a decaying kernel `G`, so each trader pays
//! for their own impact and for the residual impact of everybody else. The
//! crate evaluates those costs exactly, shows that randomizing a schedule
//! never pays, and computes the (unique) Nash equilibrium of the grid game.
//!
//! * [`kernels`]: decay kernels, closed-form integrals, positive-definiteness checks.
//! * [`strategy`]: grid strategies with block trades and piecewise-constant rates,
//!   plus finite randomizations of them.
//! * [`cost`]: the expected cost functional, randomized expectations and the
//!   gain from replacing a randomized schedule with its average.
//! * [`equilibrium`]: KKT and best-response solvers for the grid game.
//! * [`market_sim`]: pathwise costs against simulated prices and Monte Carlo
//!   checks of the analytic objective.
//! * [`cli`]: config-driven experiments behind the `impact-game` binary.

// `!(x > tol)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cost;
pub mod equilibrium;
pub mod error;
pub mod extended;
pub mod forms;
pub mod impact;
pub mod kernels;
pub mod linalg;
pub mod market_sim;
pub mod quadrature;
pub mod strategy;

pub use cost::{CostSpec, Terminal};
pub use error::{Error, Result};
pub use extended::Extended;
pub use kernels::Kernel;
pub use strategy::{RandomizedStrategy, Strategy, TradingGrid};
