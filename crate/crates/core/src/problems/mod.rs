//! The stochastic problem suite and the oracle interface the solvers consume.

mod io;
mod portfolio;
mod quadratic;
mod two_stage;

pub use io::{load_instance, save_instance, Instance};
pub use portfolio::PortfolioInstance;
pub use quadratic::QuadraticProblem;
pub use two_stage::{solve_recourse, TwoStageQuadInstance, DEFAULT_RECOURSE_TOL_FACTOR};

use crate::error::Result;
use crate::linalg::norm_sq;
use crate::prox::ProxOperator;
use crate::rng::SampleStream;

/// A stochastic convex composite problem `min E[F(x, xi)] + h(x)`.
///
/// `oracle` returns the sampled value `F(x, xi)` together with a stochastic
/// subgradient `s(x, xi)`; both are pure functions of `(x, xi)`, so problems
/// are safe to share across concurrent runs.
pub trait CompositeProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// Draw one sample of `xi`. Deterministic problems return an empty vector.
    fn draw_sample(&self, stream: &mut SampleStream) -> Vec<f64>;

    /// `(F(x, xi), s(x, xi))`.
    fn oracle(&self, x: &[f64], xi: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn prox_op(&self) -> &dyn ProxOperator;

    /// Bound `M` with `E[||s(x, xi)||^2] <= M^2` on the feasible set.
    fn second_moment_bound(&self) -> f64;

    /// `phi(x) = E[F(x, xi)] + h(x)` when it can be computed exactly.
    fn exact_objective(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// A known optimum `(x*, phi*)`, when available.
    fn reference_optimum(&self) -> Option<(Vec<f64>, f64)> {
        None
    }
}

/// Monte-Carlo estimate of `sqrt(E[||s(x, xi)||^2])` with `x` drawn uniformly
/// from the feasible set for each sample.
pub fn estimate_second_moment(
    problem: &dyn CompositeProblem,
    samples: usize,
    stream: &mut SampleStream,
) -> Result<f64> {
    assert!(samples > 0);
    let mut acc = 0.0;
    for _ in 0..samples {
        let x = problem.prox_op().sample_feasible(stream);
        let xi = problem.draw_sample(stream);
        let (_, subgrad) = problem.oracle(&x, &xi)?;
        acc += norm_sq(&subgrad);
    }
    Ok((acc / samples as f64).sqrt())
}
