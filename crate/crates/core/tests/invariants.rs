//! Cross-module invariants exercised on full solver runs.

use scpb::config::{SolverConfig, TauSpec, Variant};
use scpb::driver::{run_scpb, run_scpb_observed};
use scpb::linalg::dist;
use scpb::problems::{CompositeProblem, PortfolioInstance, QuadraticProblem};
use scpb::prox::{ProxOperator, SimplexProx};
use scpb::record::output_window;
use scpb::rng::{stream, SampleStream};

fn portfolio(n: usize, seed: u64) -> PortfolioInstance {
    let mut gen = SampleStream::new(seed, stream::INSTANCE_GEN);
    PortfolioInstance::generate(n, 10, &mut gen)
}

fn config(variant: Variant, tau: f64, cycles: usize, n: usize) -> SolverConfig {
    SolverConfig::new(
        1.0,
        TauSpec::Tau(tau),
        cycles,
        1.0,
        variant,
        0,
        vec![1.0 / n as f64; n],
    )
    .unwrap()
}

#[test]
fn all_iterates_stay_feasible() {
    let n = 12;
    let instance = portfolio(n, 3);
    let prox = SimplexProx::new(n);
    for variant in [Variant::B1, Variant::B2] {
        let cfg = config(variant, 0.9, 15, n);
        let record = run_scpb_observed(
            &instance,
            &cfg,
            &mut SampleStream::new(5, stream::algorithm(0, 0)),
            &mut |state| {
                for point in [&state.x, &state.y] {
                    let projected = prox.prox(point, 1.0);
                    assert!(dist(point, &projected) <= 1e-10, "iterate left the simplex");
                }
            },
        )
        .unwrap();
        for cycle in &record.cycles {
            let projected = prox.prox(&cycle.y, 1.0);
            assert!(dist(&cycle.y, &projected) <= 1e-10);
        }
        let projected = prox.prox(&record.y_avg, 1.0);
        assert!(dist(&record.y_avg, &projected) <= 1e-10);
    }
}

#[test]
fn output_average_matches_recorded_window() {
    let n = 8;
    let instance = portfolio(n, 4);
    let cfg = config(Variant::B1, 0.8, 9, n);
    let record = run_scpb(&instance, &cfg, &mut SampleStream::new(1, 0)).unwrap();
    let window = output_window(record.cycles.len());
    let count = (*window.end() - *window.start() + 1) as f64;
    for i in 0..n {
        let mean: f64 = record
            .cycles
            .iter()
            .filter(|c| window.contains(&c.cycle))
            .map(|c| c.y[i])
            .sum::<f64>()
            / count;
        assert!((mean - record.y_avg[i]).abs() < 1e-14);
    }
    let mean_u: f64 = record
        .cycles
        .iter()
        .filter(|c| window.contains(&c.cycle))
        .map(|c| c.u)
        .sum::<f64>()
        / count;
    assert!((mean_u - record.u_avg).abs() < 1e-12);
}

#[test]
fn b1_cycle_lengths_are_seed_invariant_b2_vary() {
    let n = 10;
    let instance = portfolio(n, 6);
    let lengths = |variant: Variant, seed: u64| -> Vec<usize> {
        // Small lambda so the B2 rule actually reacts to the sampled gap.
        let mut cfg = config(variant, 0.9, 12, n);
        cfg.lambda = 0.05;
        run_scpb(&instance, &cfg, &mut SampleStream::new(seed, 0))
            .unwrap()
            .cycles
            .iter()
            .map(|c| c.len)
            .collect()
    };
    let b1: Vec<Vec<usize>> = (0..6).map(|s| lengths(Variant::B1, s)).collect();
    assert!(b1.windows(2).all(|w| w[0] == w[1]), "B1 lengths varied across seeds");
    // Monotone workload under B1.
    assert!(b1[0].windows(2).all(|w| w[1] >= w[0]));

    let b2: Vec<Vec<usize>> = (0..6).map(|s| lengths(Variant::B2, s)).collect();
    assert!(
        b2.windows(2).any(|w| w[0] != w[1]),
        "B2 lengths never varied across seeds — gap rule not engaged"
    );
}

#[test]
fn stochastic_runs_are_bit_reproducible() {
    let n = 10;
    let instance = portfolio(n, 8);
    for variant in [Variant::B1, Variant::B2] {
        let cfg = config(variant, 0.9, 10, n);
        let a = run_scpb(&instance, &cfg, &mut SampleStream::new(11, 9)).unwrap();
        let b = run_scpb(&instance, &cfg, &mut SampleStream::new(11, 9)).unwrap();
        assert_eq!(a.total_iters, b.total_iters);
        for (ca, cb) in a.cycles.iter().zip(&b.cycles) {
            assert_eq!(ca.u.to_bits(), cb.u.to_bits());
            for (x, y) in ca.y.iter().zip(&cb.y) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

#[test]
fn reference_diagnostics_populated_for_known_optima() {
    let n = 6;
    let mut target = vec![0.0; n];
    target[0] = 2.0;
    let problem = QuadraticProblem::new(target, Box::new(SimplexProx::new(n)));
    let cfg = config(Variant::B1, 0.9, 30, n);
    let record = run_scpb(&problem, &cfg, &mut SampleStream::new(0, 0)).unwrap();
    let gap = record.known_gap.expect("gap against the projection oracle");
    assert!((-1e-12..1e-2).contains(&gap));
    let d0 = record.start_distance.expect("distance from x0 to x*");
    let (x_star, _) = problem.reference_optimum().unwrap();
    assert!((d0 - dist(&cfg.x0, &x_star)).abs() < 1e-15);
}

#[test]
fn concurrent_runs_on_a_shared_problem_match_serial_runs() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<PortfolioInstance>();
    assert_send_sync::<SolverConfig>();
    assert_send_sync::<scpb::cut::AggregateCut>();

    let n = 8;
    let instance = portfolio(n, 10);
    let cfg = config(Variant::B1, 0.9, 6, n);
    let serial: Vec<Vec<f64>> = (0..4u64)
        .map(|seed| {
            run_scpb(&instance, &cfg, &mut SampleStream::new(seed, stream::algorithm(0, 0)))
                .unwrap()
                .y_avg
        })
        .collect();
    let parallel: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4u64)
            .map(|seed| {
                let instance = &instance;
                let cfg = &cfg;
                scope.spawn(move || {
                    run_scpb(instance, cfg, &mut SampleStream::new(seed, stream::algorithm(0, 0)))
                        .unwrap()
                        .y_avg
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (a, b) in serial.iter().zip(&parallel) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn stochastic_minorant_in_expectation() {
    // Mean of the model value at a fixed point over many independent runs
    // stays below the exact objective, up to Monte-Carlo noise.
    let n = 8;
    let instance = portfolio(n, 12);
    let x_bar = SampleStream::new(3, 1).simplex_point(n);
    let phi = instance.exact_objective(&x_bar).unwrap();
    let mut values = Vec::with_capacity(1000);
    for seed in 0..1000u64 {
        let cfg = config(Variant::B1, 0.9, 2, n);
        let mut captured = f64::NAN;
        run_scpb_observed(
            &instance,
            &cfg,
            &mut SampleStream::new(seed, stream::algorithm(2, 0)),
            &mut |state| {
                if state.iter == 5 {
                    captured = state.cut.affine_value(&x_bar);
                }
            },
        )
        .unwrap();
        values.push(captured);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
    let se = (var / values.len() as f64).sqrt();
    assert!(
        mean <= phi + 3.0 * se,
        "mean model value {mean} above phi {phi} + 3se {:.3e}",
        3.0 * se
    );
}
