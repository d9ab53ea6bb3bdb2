//! Noiseless quadratic test problem with a known optimum.

use crate::error::Result;
use crate::linalg::{dist, dist_sq};
use crate::problems::CompositeProblem;
use crate::prox::ProxOperator;
use crate::rng::SampleStream;

/// `f(x) = ||x - target||^2 / 2` with an arbitrary prox term. The optimum is
/// the projection of `target`, which makes this the reference problem for the
/// deterministic invariant suites.
pub struct QuadraticProblem {
    target: Vec<f64>,
    prox: Box<dyn ProxOperator>,
    optimum: Option<(Vec<f64>, f64)>,
    m_bound: f64,
}

impl QuadraticProblem {
    pub fn new(target: Vec<f64>, prox: Box<dyn ProxOperator>) -> Self {
        assert_eq!(target.len(), prox.dim());
        let x_star = prox.prox(&target, 1.0);
        let phi_star = dist_sq(&x_star, &target) / 2.0;
        // ||grad f|| = ||x - target|| <= D + dist(x*, target) on the domain.
        let m_bound = prox.diameter() + dist(&x_star, &target);
        QuadraticProblem {
            target,
            prox,
            optimum: Some((x_star, phi_star)),
            m_bound,
        }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

impl CompositeProblem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn draw_sample(&self, _stream: &mut SampleStream) -> Vec<f64> {
        Vec::new()
    }

    fn oracle(&self, x: &[f64], _xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let value = dist_sq(x, &self.target) / 2.0;
        let grad = x.iter().zip(&self.target).map(|(a, z)| a - z).collect();
        Ok((value, grad))
    }

    fn prox_op(&self) -> &dyn ProxOperator {
        self.prox.as_ref()
    }

    fn second_moment_bound(&self) -> f64 {
        self.m_bound
    }

    fn exact_objective(&self, x: &[f64]) -> Option<f64> {
        Some(dist_sq(x, &self.target) / 2.0 + self.prox.evaluate(x))
    }

    fn reference_optimum(&self) -> Option<(Vec<f64>, f64)> {
        self.optimum.clone()
    }
}
