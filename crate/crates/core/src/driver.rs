//! The single-cut bundle driver and the two cycle-termination rules.
//!
//! Each inner iteration pays one sampling-oracle call and one prox (resolvent)
//! evaluation. Iterations come in cycles: the first iteration of a cycle is
//! serious (the prox center moves to the previous iterate and the model resets
//! to that iterate's fresh linearization), the rest are null (center fixed,
//! model blended). The cycle end `j_k` is fixed at the cycle start by rule B1
//! (`lambda * k * tau^m <= C`) or B2 (same inequality scaled by the
//! model-vs-estimate gap at the cycle start). After the last cycle the driver
//! reports the average of the candidate pairs over the trailing half of the
//! cycles.

use std::time::Instant;

use crate::config::{theta_from_tau, SolverConfig, TauSpec, Variant};
use crate::cut::{blend_cut, gamma_lambda_value, prox_step, update_u, update_y, AggregateCut};
use crate::error::{Error, Result};
use crate::linalg::{dist, positive_finite};
use crate::problems::CompositeProblem;
use crate::record::{tail_average, CyclePoint, RunRecord};
use crate::rng::SampleStream;

/// Cycle-termination rule: variant selector plus its constant.
#[derive(Clone, Copy, Debug)]
pub struct CycleRule {
    pub variant: Variant,
    pub constant: f64,
}

impl CycleRule {
    /// Inner iterations the current cycle will run beyond its serious
    /// iteration (`m = j_k - i_k >= 1`).
    pub fn length(&self, lambda: f64, cycle: usize, tau: f64, gap_at_start: f64) -> Result<usize> {
        match self.variant {
            Variant::B1 => Ok(cycle_length_b1(lambda, cycle, tau, self.constant)),
            Variant::B2 => cycle_length_b2(lambda, cycle, tau, self.constant, gap_at_start),
        }
    }
}

/// Smallest `m >= 1` with `scale * tau^m <= limit`. Closed form from the
/// logarithm, then verified in both directions so the result matches a direct
/// scan even at floating-point boundaries.
fn smallest_decay_steps(scale: f64, limit: f64, tau: f64) -> usize {
    debug_assert!(scale.is_finite() && limit > 0.0 && tau > 0.0 && tau < 1.0);
    if scale * tau <= limit {
        return 1;
    }
    let estimate = ((scale / limit).ln() / (1.0 / tau).ln()).ceil();
    let mut m = if estimate.is_finite() && estimate >= 1.0 {
        estimate as usize
    } else {
        1
    };
    while m > 1 && scale * tau.powi((m - 1) as i32) <= limit {
        m -= 1;
    }
    while scale * tau.powi(m as i32) > limit {
        m += 1;
    }
    m
}

/// Cycle length under rule B1: smallest `m >= 1` with
/// `lambda * k * tau^m <= c`. Deterministic, identical across seeds, and
/// non-decreasing in `k`.
pub fn cycle_length_b1(lambda: f64, cycle: usize, tau: f64, c: f64) -> usize {
    smallest_decay_steps(lambda * cycle as f64, c, tau)
}

/// Cycle length under rule B2: smallest `m >= 1` with
/// `lambda * k * tau^m * gap <= c`. A non-positive gap already satisfies the
/// inequality, so the minimum `m = 1` applies; a non-finite gap admits no
/// finite cycle.
pub fn cycle_length_b2(lambda: f64, cycle: usize, tau: f64, c: f64, gap_at_start: f64) -> Result<usize> {
    if gap_at_start.is_nan() || gap_at_start == f64::INFINITY {
        return Err(Error::UnboundedCycle);
    }
    if gap_at_start <= 0.0 {
        return Ok(1);
    }
    Ok(smallest_decay_steps(lambda * cycle as f64 * gap_at_start, c, tau))
}

/// Evolving driver state, observable after every inner iteration.
pub struct RunState {
    /// Inner iteration counter `j`, starting at 1.
    pub iter: usize,
    /// Cycle counter `k`, starting at 1.
    pub cycle: usize,
    /// First iteration of the current cycle.
    pub cycle_start: usize,
    /// Last iteration of the current cycle, fixed at the cycle start.
    pub cycle_end: usize,
    /// Prox center; constant within a cycle.
    pub x_center: Vec<f64>,
    /// Current iterate `x_j`.
    pub x: Vec<f64>,
    /// Current candidate `y_j`.
    pub y: Vec<f64>,
    /// Objective estimate `u_j` paired with `y_j`.
    pub u: f64,
    /// Current aggregated model (affine part).
    pub cut: AggregateCut,
    /// Model-vs-estimate gap at the current cycle's start. Computed under
    /// both rules so statistics over it can be collected on B1 runs too.
    pub t_cycle_start: f64,
    /// Fresh linearization at `(x_j, xi_j)`, consumed by the next iteration.
    pending_cut: AggregateCut,
    /// Sampled composite value at `(x_j, xi_j)`.
    pending_phi: f64,
}

impl RunState {
    /// Whether the just-finished iteration was the serious one of its cycle.
    pub fn is_serious(&self) -> bool {
        self.iter == self.cycle_start
    }
}

pub fn run_scpb(
    problem: &dyn CompositeProblem,
    config: &SolverConfig,
    stream: &mut SampleStream,
) -> Result<RunRecord> {
    run_scpb_observed(problem, config, stream, &mut |_| {})
}

/// Same as [`run_scpb`], invoking `observe` after every inner iteration.
/// Observation is read-only and does not touch the sample stream, so it
/// cannot perturb the run.
pub fn run_scpb_observed(
    problem: &dyn CompositeProblem,
    config: &SolverConfig,
    stream: &mut SampleStream,
    observe: &mut dyn FnMut(&RunState),
) -> Result<RunRecord> {
    config.validate()?;
    let n = problem.dim();
    if config.x0.len() != n {
        return Err(Error::invalid(format!(
            "x0 has dimension {}, problem has {n}",
            config.x0.len()
        )));
    }
    let h = problem.prox_op();
    if !h.evaluate(&config.x0).is_finite() {
        return Err(Error::invalid("x0 lies outside dom h"));
    }

    let tau = config.tau();
    let lambda = config.lambda;
    let rule = CycleRule {
        variant: config.variant,
        constant: config.rule_constant,
    };
    let clock = Instant::now();

    // The sample drawn before the loop pairs with x0; every later iteration
    // draws its own sample after computing x_j, and that pair seeds the next
    // iteration's linearization.
    let xi0 = problem.draw_sample(stream);
    let (f0, s0) = problem
        .oracle(&config.x0, &xi0)
        .map_err(|e| wrap_oracle(e, 0))?;
    let mut state = RunState {
        iter: 1,
        cycle: 1,
        cycle_start: 1,
        cycle_end: 0,
        x_center: config.x0.clone(),
        x: config.x0.clone(),
        y: config.x0.clone(),
        u: 0.0,
        cut: AggregateCut::from_linearization(&config.x0, f0, s0.clone()),
        t_cycle_start: 0.0,
        pending_cut: AggregateCut::from_linearization(&config.x0, f0, s0),
        pending_phi: f0 + h.evaluate(&config.x0),
    };

    let mut cycles: Vec<CyclePoint> = Vec::with_capacity(config.cycles);
    let mut aborted = false;

    loop {
        if state.iter > config.max_total_iters {
            // Can only trigger when a cycle closed exactly on the cap.
            state.iter -= 1;
            aborted = true;
            break;
        }
        let serious = state.iter == state.cycle_start;
        if serious {
            // Center moves to the previous iterate; the model resets to that
            // iterate's fresh linearization.
            state.x_center = state.x.clone();
            state.cut = state.pending_cut.clone();
        } else {
            state.cut = blend_cut(&state.cut, &state.pending_cut, tau)?;
        }

        let x_next = prox_step(&state.cut, &state.x_center, lambda, h);
        let y_prev = if serious { &state.x_center } else { &state.y };
        let y_next = update_y(&x_next, y_prev, tau);

        let xi = problem.draw_sample(stream);
        let (f_val, subgrad) = problem
            .oracle(&x_next, &xi)
            .map_err(|e| wrap_oracle(e, state.iter))?;
        let phi_sample = f_val + h.evaluate(&x_next);
        let u_prev = if serious { state.pending_phi } else { state.u };
        let u_next = update_u(phi_sample, u_prev, tau);

        state.x = x_next;
        state.y = y_next;
        state.u = u_next;
        state.pending_cut = AggregateCut::from_linearization(&state.x, f_val, subgrad);
        state.pending_phi = phi_sample;

        if serious {
            state.t_cycle_start =
                state.u - gamma_lambda_value(&state.cut, &state.x, &state.x_center, lambda, h);
            let extra = rule.length(lambda, state.cycle, tau, state.t_cycle_start)?;
            state.cycle_end = state.cycle_start + extra;
            if state.cycle_end > config.max_total_iters {
                // The cycle cannot finish under the cap: truncate and flag.
                observe(&state);
                aborted = true;
                break;
            }
        }

        observe(&state);

        if state.iter == state.cycle_end {
            cycles.push(CyclePoint {
                cycle: state.cycle,
                end_iter: state.iter,
                len: state.cycle_end - state.cycle_start + 1,
                y: state.y.clone(),
                u: state.u,
                wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            });
            if state.cycle == config.cycles {
                break;
            }
            state.cycle += 1;
            state.cycle_start = state.iter + 1;
        }
        state.iter += 1;
    }

    let total_iters = state.iter;
    let (y_avg, u_avg) = if cycles.is_empty() {
        (state.y.clone(), state.u)
    } else {
        tail_average(&cycles, n)
    };

    let (known_gap, start_distance) = match problem.reference_optimum() {
        Some((x_star, phi_star)) => {
            let gap = problem.exact_objective(&y_avg).map(|phi| phi - phi_star);
            (gap, Some(dist(&config.x0, &x_star)))
        }
        None => (None, None),
    };

    Ok(RunRecord {
        cycles,
        y_avg,
        u_avg,
        total_iters,
        aborted,
        known_gap,
        start_distance,
    })
}

fn wrap_oracle(err: Error, iter: usize) -> Error {
    match err {
        Error::Oracle(msg) => Error::Oracle(format!("iteration {iter}: {msg}")),
        other => other,
    }
}

/// Worst-case parameter choice for a target accuracy `epsilon`, with the
/// start-distance term replaced by the domain diameter (conservative).
/// `sigma` bounds the mean absolute deviation of sampled objective values and
/// only enters the B2 choice; pass 0 when no estimate is available.
#[allow(clippy::too_many_arguments)]
pub fn recommended_config(
    m_bound: f64,
    m_h: f64,
    diameter: f64,
    lambda: f64,
    epsilon: f64,
    sigma: f64,
    variant: Variant,
    x0: Vec<f64>,
) -> Result<SolverConfig> {
    if !positive_finite(epsilon) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !positive_finite(m_bound) || !positive_finite(diameter) || !positive_finite(lambda) {
        return Err(Error::invalid(
            "recommended_config needs positive finite M, D and lambda".to_string(),
        ));
    }
    if m_h < 0.0 || sigma < 0.0 {
        return Err(Error::invalid("M_h and sigma must be nonnegative".to_string()));
    }
    let d_sq = diameter * diameter;
    let (constant, theta, cycles_real) = match variant {
        Variant::B1 => {
            let c = diameter / (2.0 * m_bound + m_h);
            let theta = lambda * lambda * m_bound * m_bound / d_sq;
            let k = (3.0 * c * (2.0 * m_bound + m_h) * diameter + d_sq) / (lambda * epsilon)
                + 2.0 * lambda * m_bound * m_bound / (theta * epsilon);
            (c, theta, k)
        }
        Variant::B2 => {
            let c = d_sq;
            let theta = (lambda * lambda * m_bound * m_bound + lambda * sigma) / d_sq;
            let k = (3.0 * c + d_sq) / (lambda * epsilon)
                + (2.0 * lambda * m_bound * m_bound + 2.0 * sigma) / (theta * epsilon)
                + (2.0 * lambda).sqrt() * m_bound / (theta * epsilon.sqrt());
            (c, theta, k)
        }
    };
    let cycles = cycles_real.floor() as usize + 1;
    SolverConfig::new(lambda, TauSpec::Theta(theta), cycles, constant, variant, 0, x0)
}

/// Upper bound on the size of cycle `k` under rule B1 with the given
/// parameters (one more than the geometric-decay exponent bound).
pub fn b1_cycle_size_bound(tau: f64, cycles: usize, lambda: f64, k: usize, c: f64) -> Result<usize> {
    let theta = theta_from_tau(tau, cycles)?;
    let bound = (theta * cycles as f64 + 1.0) * (lambda * k as f64 / c + 1.0).ln();
    Ok(bound.ceil() as usize + 1)
}
