//! Prox operators and exact projections for the feasible sets used by the
//! problem suite.

use crate::linalg::dist;
use crate::rng::SampleStream;

/// Feasibility slack used when evaluating indicator functions. Prox outputs
/// carry rounding noise of a few ulps, so membership checks need a margin.
pub const FEAS_TOL: f64 = 1e-9;

/// The nonsmooth term `h` of a composite objective, exposed through its value
/// and its prox map `prox(v, a) = argmin_u h(u) + ||u - v||^2 / (2a)`.
pub trait ProxOperator: Send + Sync {
    /// `h(x)`; `+inf` outside the domain for indicator functions.
    fn evaluate(&self, x: &[f64]) -> f64;

    /// `argmin_u h(u) + ||u - v||^2 / (2 alpha)`; output is feasible.
    fn prox(&self, v: &[f64], alpha: f64) -> Vec<f64>;

    /// Diameter of `dom h` (may be `+inf` for unconstrained test problems).
    fn diameter(&self) -> f64;

    /// Lipschitz constant of `h` on its domain (zero for indicators).
    fn lipschitz(&self) -> f64 {
        0.0
    }

    /// Whether `h` is the indicator of a set, in which case `prox` is the
    /// Euclidean projection for every stepsize.
    fn is_indicator(&self) -> bool;

    fn dim(&self) -> usize;

    /// A random point of `dom h`, used by estimators and tests.
    fn sample_feasible(&self, stream: &mut SampleStream) -> Vec<f64>;
}

/// Euclidean projection onto the probability simplex, by sorting and
/// thresholding at the largest order statistic that keeps the shifted entries
/// positive. O(n log n); exact up to rounding.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    debug_assert!(!v.is_empty());
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = sorted[0] - 1.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

/// Euclidean projection onto `{x : ||x - center|| <= radius}`.
pub fn project_ball(v: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    debug_assert_eq!(v.len(), center.len());
    let d = dist(v, center);
    if d <= radius {
        return v.to_vec();
    }
    let scale = radius / d;
    v.iter()
        .zip(center)
        .map(|(x, c)| c + scale * (x - c))
        .collect()
}

/// Indicator of the probability simplex in `R^n`.
#[derive(Clone, Debug)]
pub struct SimplexProx {
    dim: usize,
}

impl SimplexProx {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        SimplexProx { dim }
    }
}

impl ProxOperator for SimplexProx {
    fn evaluate(&self, x: &[f64]) -> f64 {
        let sum: f64 = x.iter().sum();
        let feasible =
            x.len() == self.dim && (sum - 1.0).abs() <= FEAS_TOL && x.iter().all(|&v| v >= -FEAS_TOL);
        if feasible {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, v: &[f64], _alpha: f64) -> Vec<f64> {
        project_simplex(v)
    }

    fn diameter(&self) -> f64 {
        // Attained between two vertices.
        std::f64::consts::SQRT_2
    }

    fn is_indicator(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_feasible(&self, stream: &mut SampleStream) -> Vec<f64> {
        stream.simplex_point(self.dim)
    }
}

/// Indicator of a Euclidean ball.
#[derive(Clone, Debug)]
pub struct BallProx {
    center: Vec<f64>,
    radius: f64,
}

impl BallProx {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0);
        BallProx { center, radius }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ProxOperator for BallProx {
    fn evaluate(&self, x: &[f64]) -> f64 {
        if x.len() == self.center.len() && dist(x, &self.center) <= self.radius + FEAS_TOL {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, v: &[f64], _alpha: f64) -> Vec<f64> {
        project_ball(v, &self.center, self.radius)
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn is_indicator(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn sample_feasible(&self, stream: &mut SampleStream) -> Vec<f64> {
        stream.ball_point(&self.center, self.radius)
    }
}

/// `h = 0` on all of `R^n`; for unconstrained test problems only.
#[derive(Clone, Debug)]
pub struct Unconstrained {
    dim: usize,
}

impl Unconstrained {
    pub fn new(dim: usize) -> Self {
        Unconstrained { dim }
    }
}

impl ProxOperator for Unconstrained {
    fn evaluate(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, v: &[f64], _alpha: f64) -> Vec<f64> {
        v.to_vec()
    }

    fn diameter(&self) -> f64 {
        f64::INFINITY
    }

    fn is_indicator(&self) -> bool {
        false
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_feasible(&self, stream: &mut SampleStream) -> Vec<f64> {
        stream.standard_normal_vec(self.dim)
    }
}
