//! Optimal information acquisition and portfolio choice for a CARA investor
//! who learns an unobservable drift with a Gaussian prior and can buy a
//! private signal of controllable precision.
//!
//! The optimal acquisition schedule `t ↦ ϑ*(t)²` is deterministic, so every
//! solver in this crate produces a [`StrategyPath`]:
//!
//! * [`closedform`]: truncated-linear cost, explicit free boundary and value function.
//! * [`characteristics`]: smooth convex cost, Hamilton's ODE plus shooting.
//! * [`hjsolver`]: explicit upwind finite differences for the same Hamilton–Jacobi equation.
//! * [`detcontrol`]: the equivalent deterministic control problem solved directly.
//!
//! [`filtersim`] simulates the market with exact Gaussian filtering and checks
//! the resulting strategies statistically.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x >= 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod path;
mod roots;
pub mod stats;

pub mod characteristics;
pub mod closedform;
pub mod detcontrol;
pub mod filtersim;
pub mod hjsolver;
pub mod model;

pub use error::{Error, Result};
pub use model::{CostModel, CostValue, GaussKernel, ModelParams, PowerCost};
pub use path::{SolverTag, StrategyPath};
