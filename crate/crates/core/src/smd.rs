//! Projected stochastic subgradient baseline (Euclidean stochastic mirror
//! descent) with the constant step `step_scale / sqrt(N)`.

use crate::error::{Error, Result};
use crate::linalg::positive_finite;
use crate::problems::CompositeProblem;
use crate::rng::SampleStream;

#[derive(Clone, Debug)]
pub struct SmdConfig {
    /// Iteration budget N.
    pub iters: usize,
    /// Step scale; the constant stepsize is `step_scale / sqrt(iters)`.
    pub step_scale: f64,
    pub seed: u64,
    pub x0: Vec<f64>,
    /// Iteration indices (1-based, strictly increasing) at which the running
    /// average and last iterate are recorded.
    pub checkpoints: Vec<usize>,
}

impl SmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::invalid("SMD iteration budget must be at least 1"));
        }
        if !positive_finite(self.step_scale) {
            return Err(Error::invalid("SMD step scale must be positive"));
        }
        if self.x0.is_empty() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x0 must be non-empty and finite"));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("checkpoints must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SmdCheckpoint {
    pub iter: usize,
    pub x_avg: Vec<f64>,
    pub x_last: Vec<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct SmdRecord {
    pub checkpoints: Vec<SmdCheckpoint>,
    /// Running average of the iterates after the full budget; the reported
    /// solution (the last iterate is also kept in the trace).
    pub x_avg: Vec<f64>,
    pub x_last: Vec<f64>,
    pub total_iters: usize,
    /// Wall clock of the whole run, milliseconds.
    pub wall_ms: f64,
}

/// `x_{t+1} = P(x_t - gamma * s(x_t, xi_t))` for `t = 0..N-1`, with
/// `gamma = step_scale / sqrt(N)`. Defined for indicator `h` only, where the
/// prox is the projection for every stepsize.
pub fn run_smd(
    problem: &dyn CompositeProblem,
    config: &SmdConfig,
    stream: &mut SampleStream,
) -> Result<SmdRecord> {
    config.validate()?;
    let n = problem.dim();
    if config.x0.len() != n {
        return Err(Error::invalid(format!(
            "x0 has dimension {}, problem has {n}",
            config.x0.len()
        )));
    }
    let h = problem.prox_op();
    if !h.is_indicator() {
        return Err(Error::Unsupported(
            "SMD needs an indicator h exposing a projection".to_string(),
        ));
    }
    if !h.evaluate(&config.x0).is_finite() {
        return Err(Error::invalid("x0 lies outside dom h"));
    }

    let clock = std::time::Instant::now();
    let gamma = config.step_scale / (config.iters as f64).sqrt();
    let mut x = config.x0.clone();
    let mut sum = vec![0.0; n];
    let mut checkpoints = Vec::with_capacity(config.checkpoints.len());
    let mut next_checkpoint = config.checkpoints.iter().copied().peekable();

    for t in 1..=config.iters {
        let xi = problem.draw_sample(stream);
        let (_, subgrad) = problem
            .oracle(&x, &xi)
            .map_err(|e| Error::Oracle(format!("iteration {t}: {e}")))?;
        let shifted: Vec<f64> = x.iter().zip(&subgrad).map(|(v, s)| v - gamma * s).collect();
        x = h.prox(&shifted, 1.0);
        for (acc, v) in sum.iter_mut().zip(&x) {
            *acc += v;
        }
        if next_checkpoint.peek() == Some(&t) {
            next_checkpoint.next();
            checkpoints.push(SmdCheckpoint {
                iter: t,
                x_avg: sum.iter().map(|v| v / t as f64).collect(),
                x_last: x.clone(),
                wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            });
        }
    }

    let x_avg = sum.iter().map(|v| v / config.iters as f64).collect();
    Ok(SmdRecord {
        checkpoints,
        x_avg,
        x_last: x,
        total_iters: config.iters,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}
