//! The aggregate cut and the elementary update formulas shared by the bundle
//! driver.
//!
//! The bundle model is `G(u) = intercept + <slope, u> + h(u)`; only the affine
//! part is stored because every composite linearization shares the same `h`
//! term. Blending two models is therefore a convex combination of their
//! affine parts, and the prox subproblem
//! `argmin G(u) + ||u - x_center||^2 / (2 lambda)` collapses to a single prox
//! evaluation of `h`.

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot};
use crate::problems::CompositeProblem;
use crate::prox::ProxOperator;

/// A single aggregated affine minorant, excluding the shared `h` term.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateCut {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

impl AggregateCut {
    /// Cut from a function value and subgradient at `x`, so that
    /// `intercept + <slope, u> = value + <subgrad, u - x>` for all `u`.
    pub fn from_linearization(x: &[f64], value: f64, subgrad: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), subgrad.len());
        let intercept = value - dot(&subgrad, x);
        AggregateCut {
            slope: subgrad,
            intercept,
        }
    }

    /// Affine part `intercept + <slope, x>`.
    pub fn affine_value(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.slope, x)
    }

    pub fn dim(&self) -> usize {
        self.slope.len()
    }
}

/// Fresh composite linearization of `F(., xi) + h` at `x`.
pub fn serious_cut(x: &[f64], xi: &[f64], problem: &dyn CompositeProblem) -> Result<AggregateCut> {
    let (value, subgrad) = problem.oracle(x, xi)?;
    Ok(AggregateCut::from_linearization(x, value, subgrad))
}

/// Convex combination `(1 - tau) * fresh + tau * prev` of two cuts.
pub fn blend_cut(prev: &AggregateCut, fresh: &AggregateCut, tau: f64) -> Result<AggregateCut> {
    if prev.dim() != fresh.dim() {
        return Err(Error::invalid(format!(
            "cut dimensions differ: {} vs {}",
            prev.dim(),
            fresh.dim()
        )));
    }
    let w = 1.0 - tau;
    let slope = fresh
        .slope
        .iter()
        .zip(&prev.slope)
        .map(|(f, p)| w * f + tau * p)
        .collect();
    Ok(AggregateCut {
        slope,
        intercept: w * fresh.intercept + tau * prev.intercept,
    })
}

/// Minimizer of `cut(u) + h(u) + ||u - x_center||^2 / (2 lambda)`, which is
/// `prox_{lambda h}(x_center - lambda * slope)` (the intercept does not move
/// the argmin).
pub fn prox_step(cut: &AggregateCut, x_center: &[f64], lambda: f64, h: &dyn ProxOperator) -> Vec<f64> {
    debug_assert!(lambda > 0.0);
    debug_assert_eq!(cut.dim(), x_center.len());
    let shifted: Vec<f64> = x_center
        .iter()
        .zip(&cut.slope)
        .map(|(c, s)| c - lambda * s)
        .collect();
    h.prox(&shifted, lambda)
}

/// Value of the regularized model `cut(x) + h(x) + ||x - x_center||^2 / (2 lambda)`.
/// Returns `+inf` when `x` is outside `dom h` (indicator case).
pub fn gamma_lambda_value(
    cut: &AggregateCut,
    x: &[f64],
    x_center: &[f64],
    lambda: f64,
    h: &dyn ProxOperator,
) -> f64 {
    cut.affine_value(x) + h.evaluate(x) + dist_sq(x, x_center) / (2.0 * lambda)
}

/// `(1 - tau) * x_new + tau * prev`, elementwise.
pub fn update_y(x_new: &[f64], prev: &[f64], tau: f64) -> Vec<f64> {
    debug_assert_eq!(x_new.len(), prev.len());
    let w = 1.0 - tau;
    x_new.iter().zip(prev).map(|(x, p)| w * x + tau * p).collect()
}

/// `(1 - tau) * phi_new + tau * prev_u`.
pub fn update_u(phi_new: f64, prev_u: f64, tau: f64) -> f64 {
    (1.0 - tau) * phi_new + tau * prev_u
}
