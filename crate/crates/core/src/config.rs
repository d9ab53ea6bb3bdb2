//! Solver configuration and the blend-weight parameterization.
//!
//! The blend weight `tau` can be given directly (as in benchmark setups) or
//! derived from the pair `(theta, K)` via `tau = theta*K / (theta*K + 1)`
//! (as in worst-case tuning). Both directions are exposed and round-trip.

use crate::error::{Error, Result};
use crate::linalg::positive_finite;

/// Cycle-termination rule selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    B1,
    B2,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::B1 => write!(f, "B1"),
            Variant::B2 => write!(f, "B2"),
        }
    }
}

/// Either the blend weight itself or the scale it is derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauSpec {
    Theta(f64),
    Tau(f64),
}

/// `tau = theta*K / (theta*K + 1)`, strictly inside `(0, 1)`.
pub fn tau_from_theta(theta: f64, cycles: usize) -> Result<f64> {
    if !positive_finite(theta) {
        return Err(Error::invalid(format!("theta must be positive and finite, got {theta}")));
    }
    if cycles == 0 {
        return Err(Error::invalid("cycle count must be at least 1"));
    }
    let tk = theta * cycles as f64;
    Ok(tk / (tk + 1.0))
}

/// Inverse of [`tau_from_theta`]: `theta = tau / ((1 - tau) * K)`.
pub fn theta_from_tau(tau: f64, cycles: usize) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("tau must lie in (0, 1), got {tau}")));
    }
    if cycles == 0 {
        return Err(Error::invalid("cycle count must be at least 1"));
    }
    Ok(tau / ((1.0 - tau) * cycles as f64))
}

pub const DEFAULT_MAX_TOTAL_ITERS: usize = 10_000_000;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Prox stepsize.
    pub lambda: f64,
    pub tau_spec: TauSpec,
    /// Number of cycles to run (K).
    pub cycles: usize,
    /// Constant of the cycle rule (C).
    pub rule_constant: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Starting point; must be feasible for the problem's `h`.
    pub x0: Vec<f64>,
    /// Hard cap on total inner iterations. A run that would exceed it is
    /// truncated and flagged, never silently continued.
    pub max_total_iters: usize,
}

impl SolverConfig {
    pub fn new(
        lambda: f64,
        tau_spec: TauSpec,
        cycles: usize,
        rule_constant: f64,
        variant: Variant,
        seed: u64,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let cfg = SolverConfig {
            lambda,
            tau_spec,
            cycles,
            rule_constant,
            variant,
            seed,
            x0,
            max_total_iters: DEFAULT_MAX_TOTAL_ITERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !positive_finite(self.lambda) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !positive_finite(self.rule_constant) {
            return Err(Error::invalid(format!(
                "rule constant must be positive, got {}",
                self.rule_constant
            )));
        }
        if self.cycles == 0 {
            return Err(Error::invalid("cycle count must be at least 1"));
        }
        if self.max_total_iters == 0 {
            return Err(Error::invalid("max_total_iters must be at least 1"));
        }
        if self.x0.is_empty() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x0 must be non-empty and finite"));
        }
        match self.tau_spec {
            TauSpec::Theta(theta) => {
                tau_from_theta(theta, self.cycles)?;
            }
            TauSpec::Tau(tau) => {
                theta_from_tau(tau, self.cycles)?;
            }
        }
        Ok(())
    }

    /// Blend weight in `(0, 1)`. Assumes the config validates.
    pub fn tau(&self) -> f64 {
        match self.tau_spec {
            TauSpec::Theta(theta) => tau_from_theta(theta, self.cycles).expect("validated config"),
            TauSpec::Tau(tau) => tau,
        }
    }

    /// Scale parameter matching [`Self::tau`]. Assumes the config validates.
    pub fn theta(&self) -> f64 {
        match self.tau_spec {
            TauSpec::Theta(theta) => theta,
            TauSpec::Tau(tau) => theta_from_tau(tau, self.cycles).expect("validated config"),
        }
    }
}
