//! Solvers for stochastic convex composite problems `min f(x) + h(x)` where
//! `f(x) = E[F(x, xi)]` is known only through a sampling oracle and `h` is a
//! simple convex term handled through its prox operator.
//!
//! The main solver keeps a single aggregated affine minorant of the objective
//! (a one-cut bundle), updated by convex combination, and performs one prox
//! step per iteration. Iterations are grouped into cycles; the cycle length
//! is governed by one of two rules (`B1`, geometric budget; `B2`, gap-scaled
//! geometric budget). A projected stochastic subgradient baseline (`smd`) and
//! a reproducible experiment harness (`harness`) share the same problem and
//! RNG-stream abstractions.

pub mod config;
pub mod cut;
pub mod driver;
pub mod error;
pub mod harness;
pub mod kvfile;
pub mod linalg;
pub mod problems;
pub mod prox;
pub mod record;
pub mod rng;
pub mod smd;

pub use config::{tau_from_theta, theta_from_tau, SolverConfig, TauSpec, Variant};
pub use cut::{blend_cut, gamma_lambda_value, prox_step, serious_cut, update_u, update_y, AggregateCut};
pub use driver::{cycle_length_b1, cycle_length_b2, recommended_config, run_scpb, run_scpb_observed, CycleRule, RunState};
pub use error::{Error, Result};
pub use problems::CompositeProblem;
pub use prox::{project_ball, project_simplex, ProxOperator};
pub use record::{CyclePoint, RunRecord};
pub use rng::SampleStream;
pub use smd::{run_smd, SmdConfig, SmdRecord};
