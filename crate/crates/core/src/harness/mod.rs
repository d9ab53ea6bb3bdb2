//! Experiment runner: builds problems from specs, runs every configured
//! method on the same instance with per-method RNG substreams, estimates
//! objectives on a fixed independent evaluation sample, and writes the trace
//! and summary CSV files.

mod config;

pub use config::{ExperimentConfig, MethodKind, MethodSpec, ProblemSpec};

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::config::SolverConfig;
use crate::driver::run_scpb;
use crate::error::{Error, Result};
use crate::kvfile::fmt_f64;
use crate::problems::{
    load_instance, CompositeProblem, Instance, PortfolioInstance, QuadraticProblem,
    TwoStageQuadInstance,
};
use crate::prox::SimplexProx;
use crate::record::output_window;
use crate::rng::{stream, SampleStream};
use crate::smd::{run_smd, SmdConfig};

/// Bit-exact CSV header of the per-checkpoint trace.
pub const TRACE_HEADER: &str =
    "method,trial,checkpoint_kind,outer_k,inner_j,wall_ms,obj_mean,obj_half_ci,u_hat,cycle_len";

/// Header of the one-line-per-method summary.
pub const SUMMARY_HEADER: &str =
    "method,trial,outer_iters,inner_iters,wall_ms,obj_mean,obj_half_ci,status";

/// Sample mean and half-width of the 95% confidence interval of
/// `F(x, xi) + h(x)` over `n_eval` draws from `eval_stream`.
///
/// The caller controls sample reuse through the stream: cloning one pristine
/// evaluation stream for every call evaluates all points on the same sample.
pub fn estimate_objective(
    problem: &dyn CompositeProblem,
    x: &[f64],
    eval_stream: &mut SampleStream,
    n_eval: usize,
) -> Result<(f64, f64)> {
    assert!(n_eval > 0);
    let h_val = problem.prox_op().evaluate(x);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_eval {
        let xi = problem.draw_sample(eval_stream);
        let (f, _) = problem.oracle(x, &xi)?;
        let delta = f - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (f - mean);
    }
    let half_ci = if n_eval > 1 {
        1.96 * (m2 / (n_eval - 1) as f64).sqrt() / (n_eval as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean + h_val, half_ci))
}

/// Instantiate the problem `spec` names. Generated instances draw from
/// the dedicated instance-generation substream of `base_seed`.
pub fn build_problem(spec: &ProblemSpec, base_seed: u64) -> Result<Box<dyn CompositeProblem>> {
    let mut gen = SampleStream::new(base_seed, stream::INSTANCE_GEN);
    match spec {
        ProblemSpec::Portfolio { n, breakpoints } => Ok(Box::new(PortfolioInstance::generate(
            *n,
            *breakpoints,
            &mut gen,
        ))),
        ProblemSpec::TwoStage { n } => Ok(Box::new(TwoStageQuadInstance::generate(*n, &mut gen)?)),
        ProblemSpec::Quadratic { n, target } => {
            let z = match target {
                Some(z) => {
                    if z.len() != *n {
                        return Err(Error::Config("problem.z length differs from problem.n".into()));
                    }
                    z.clone()
                }
                None => {
                    let mut z = vec![0.0; *n];
                    z[0] = 2.0;
                    z
                }
            };
            Ok(Box::new(QuadraticProblem::new(z, Box::new(SimplexProx::new(*n)))))
        }
        ProblemSpec::File(path) => match load_instance(path)? {
            Instance::Portfolio(p) => Ok(Box::new(p)),
            Instance::TwoStage(t) => Ok(Box::new(t)),
        },
    }
}

#[derive(Clone, Debug)]
pub struct MethodSummary {
    pub label: String,
    pub trial: usize,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub wall_ms: f64,
    pub obj_mean: f64,
    pub obj_half_ci: f64,
    pub aborted: bool,
}

#[derive(Debug)]
pub struct ComparisonReport {
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub summaries: Vec<MethodSummary>,
    pub any_aborted: bool,
}

fn csv_float(x: f64) -> String {
    fmt_f64(x)
}

fn csv_wall(ms: f64) -> String {
    format!("{ms:.3}")
}

struct TraceWriter {
    buffer: String,
}

impl TraceWriter {
    fn new() -> Self {
        TraceWriter {
            buffer: format!("{TRACE_HEADER}\n"),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        &mut self,
        method: &str,
        trial: usize,
        kind: &str,
        outer: usize,
        inner: usize,
        wall_ms: f64,
        obj: (f64, f64),
        u_hat: Option<f64>,
        cycle_len: Option<usize>,
    ) {
        let u = u_hat.map(csv_float).unwrap_or_default();
        let len = cycle_len.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            self.buffer,
            "{method},{trial},{kind},{outer},{inner},{},{},{},{u},{len}",
            csv_wall(wall_ms),
            csv_float(obj.0),
            csv_float(obj.1),
        )
        .expect("string write");
    }
}

/// Run every configured method on the same instance and write the trace and
/// summary files. Partial failures are recorded per method; the report flags
/// whether any method aborted or failed.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let problem = build_problem(&config.problem, config.base_seed)?;
    let x0 = match &config.x0 {
        Some(x) => {
            if x.len() != problem.dim() {
                return Err(Error::Config("problem.x0 has the wrong dimension".into()));
            }
            x.clone()
        }
        None => problem.prox_op().prox(&vec![0.0; problem.dim()], 1.0),
    };

    let mut trace = TraceWriter::new();
    let mut summaries = Vec::new();
    let mut any_aborted = false;

    for trial in 0..config.trials {
        // One pristine evaluation stream per trial; every estimate below is
        // taken on a clone, so all checkpoints see the same sample.
        let eval_pristine = SampleStream::new(config.base_seed, stream::evaluation(trial));
        let estimate = |x: &[f64]| -> Result<(f64, f64)> {
            let mut stream = eval_pristine.clone();
            estimate_objective(problem.as_ref(), x, &mut stream, config.n_eval)
        };

        for (index, method) in config.methods.iter().enumerate() {
            let mut algo_stream = SampleStream::new(config.base_seed, stream::algorithm(index, trial));
            match &method.kind {
                MethodKind::Scpb {
                    variant,
                    tau_spec,
                    lambda,
                    rule_constant,
                    cycles,
                    max_total_iters,
                } => {
                    let mut solver_cfg = SolverConfig::new(
                        *lambda,
                        *tau_spec,
                        *cycles,
                        *rule_constant,
                        *variant,
                        config.base_seed,
                        x0.clone(),
                    )?;
                    if let Some(cap) = max_total_iters {
                        solver_cfg.max_total_iters = *cap;
                    }
                    let record = match run_scpb(problem.as_ref(), &solver_cfg, &mut algo_stream) {
                        Ok(r) => r,
                        Err(e) => {
                            eprintln!("method {}: {e}", method.label);
                            any_aborted = true;
                            summaries.push(MethodSummary {
                                label: method.label.clone(),
                                trial,
                                outer_iters: 0,
                                inner_iters: 0,
                                wall_ms: 0.0,
                                obj_mean: f64::NAN,
                                obj_half_ci: f64::NAN,
                                aborted: true,
                            });
                            continue;
                        }
                    };
                    any_aborted |= record.aborted;
                    for &k in &config.checkpoints {
                        if k == 0 || k > record.cycles.len() {
                            continue;
                        }
                        let point = &record.cycles[k - 1];
                        let obj = estimate(&point.y)?;
                        trace.row(
                            &method.label,
                            trial,
                            "cycle",
                            point.cycle,
                            point.end_iter,
                            point.wall_ms,
                            obj,
                            Some(point.u),
                            Some(point.len),
                        );
                    }
                    let wall = record.cycles.last().map(|c| c.wall_ms).unwrap_or(0.0);
                    let obj = estimate(&record.y_avg)?;
                    trace.row(
                        &method.label,
                        trial,
                        "final",
                        record.cycles.len(),
                        record.total_iters,
                        wall,
                        obj,
                        Some(record.u_avg),
                        None,
                    );
                    summaries.push(MethodSummary {
                        label: method.label.clone(),
                        trial,
                        outer_iters: record.cycles.len(),
                        inner_iters: record.total_iters,
                        wall_ms: wall,
                        obj_mean: obj.0,
                        obj_half_ci: obj.1,
                        aborted: record.aborted,
                    });
                }
                MethodKind::Smd { iters, step_scale } => {
                    let smd_cfg = SmdConfig {
                        iters: *iters,
                        step_scale: *step_scale,
                        seed: config.base_seed,
                        x0: x0.clone(),
                        checkpoints: config
                            .checkpoints
                            .iter()
                            .copied()
                            .filter(|&t| t <= *iters)
                            .collect(),
                    };
                    let record = match run_smd(problem.as_ref(), &smd_cfg, &mut algo_stream) {
                        Ok(r) => r,
                        Err(e) => {
                            eprintln!("method {}: {e}", method.label);
                            any_aborted = true;
                            summaries.push(MethodSummary {
                                label: method.label.clone(),
                                trial,
                                outer_iters: 0,
                                inner_iters: 0,
                                wall_ms: 0.0,
                                obj_mean: f64::NAN,
                                obj_half_ci: f64::NAN,
                                aborted: true,
                            });
                            continue;
                        }
                    };
                    for point in &record.checkpoints {
                        let obj = estimate(&point.x_avg)?;
                        trace.row(
                            &method.label,
                            trial,
                            "iter",
                            point.iter,
                            point.iter,
                            point.wall_ms,
                            obj,
                            None,
                            None,
                        );
                    }
                    let obj = estimate(&record.x_avg)?;
                    trace.row(
                        &method.label,
                        trial,
                        "final",
                        record.total_iters,
                        record.total_iters,
                        record.wall_ms,
                        obj,
                        None,
                        None,
                    );
                    summaries.push(MethodSummary {
                        label: method.label.clone(),
                        trial,
                        outer_iters: record.total_iters,
                        inner_iters: record.total_iters,
                        wall_ms: record.wall_ms,
                        obj_mean: obj.0,
                        obj_half_ci: obj.1,
                        aborted: false,
                    });
                }
            }
        }
    }

    let trace_path = config.output.with_extension("csv");
    let summary_path = config.output.with_extension("summary.csv");
    if let Some(parent) = trace_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&trace_path, &trace.buffer)?;

    let mut summary_text = format!("{SUMMARY_HEADER}\n");
    for s in &summaries {
        writeln!(
            summary_text,
            "{},{},{},{},{},{},{},{}",
            s.label,
            s.trial,
            s.outer_iters,
            s.inner_iters,
            csv_wall(s.wall_ms),
            csv_float(s.obj_mean),
            csv_float(s.obj_half_ci),
            if s.aborted { "aborted" } else { "ok" },
        )
        .expect("string write");
    }
    std::fs::write(&summary_path, &summary_text)?;

    Ok(ComparisonReport {
        trace_path,
        summary_path,
        summaries,
        any_aborted,
    })
}

/// Window of cycles averaged into the final output of a bundle run, exposed
/// for report tooling.
pub fn final_window(total_cycles: usize) -> std::ops::RangeInclusive<usize> {
    output_window(total_cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::estimate_second_moment;

    #[test]
    fn deterministic_problem_estimates_exactly() {
        let problem = build_problem(&ProblemSpec::Quadratic { n: 4, target: None }, 0).unwrap();
        let x = vec![0.25; 4];
        let mut s = SampleStream::new(0, stream::evaluation(0));
        let (mean, half_ci) = estimate_objective(problem.as_ref(), &x, &mut s, 100).unwrap();
        let exact = problem.exact_objective(&x).unwrap();
        assert!((mean - exact).abs() < 1e-12);
        assert_eq!(half_ci, 0.0);
    }

    #[test]
    fn estimates_are_reproducible_for_equal_streams() {
        let problem = build_problem(
            &ProblemSpec::Portfolio { n: 6, breakpoints: 4 },
            11,
        )
        .unwrap();
        let x = vec![1.0 / 6.0; 6];
        let pristine = SampleStream::new(11, stream::evaluation(0));
        let (m1, c1) = estimate_objective(problem.as_ref(), &x, &mut pristine.clone(), 500).unwrap();
        let (m2, c2) = estimate_objective(problem.as_ref(), &x, &mut pristine.clone(), 500).unwrap();
        assert_eq!(m1.to_bits(), m2.to_bits());
        assert_eq!(c1.to_bits(), c2.to_bits());
    }

    #[test]
    fn portfolio_estimate_tracks_exact_value() {
        let problem = build_problem(
            &ProblemSpec::Portfolio { n: 8, breakpoints: 6 },
            3,
        )
        .unwrap();
        let mut point_stream = SampleStream::new(99, 0);
        for trial in 0..10 {
            let x = problem.prox_op().sample_feasible(&mut point_stream);
            let mut s = SampleStream::new(3, stream::evaluation(trial));
            let (mean, half_ci) = estimate_objective(problem.as_ref(), &x, &mut s, 1000).unwrap();
            let exact = problem.exact_objective(&x).unwrap();
            // half_ci = 1.96 se; allow 3 se.
            assert!(
                (mean - exact).abs() <= 3.0 / 1.96 * half_ci.max(1e-12),
                "mean {mean} exact {exact} half_ci {half_ci}"
            );
        }
    }

    #[test]
    fn instance_constants_are_seed_reproducible() {
        let spec = ProblemSpec::Portfolio { n: 5, breakpoints: 3 };
        let p1 = build_problem(&spec, 21).unwrap();
        let p2 = build_problem(&spec, 21).unwrap();
        let mut s = SampleStream::new(0, 0);
        let x = p1.prox_op().sample_feasible(&mut s);
        assert_eq!(
            p1.exact_objective(&x).unwrap().to_bits(),
            p2.exact_objective(&x).unwrap().to_bits()
        );
        let m1 = estimate_second_moment(p1.as_ref(), 200, &mut SampleStream::new(1, 1)).unwrap();
        let m2 = estimate_second_moment(p2.as_ref(), 200, &mut SampleStream::new(1, 1)).unwrap();
        assert_eq!(m1.to_bits(), m2.to_bits());
    }
}
