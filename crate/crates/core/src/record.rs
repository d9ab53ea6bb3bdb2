//! Run traces produced by the bundle driver.

/// End-of-cycle snapshot.
#[derive(Clone, Debug)]
pub struct CyclePoint {
    /// Cycle index, 1-based.
    pub cycle: usize,
    /// Last inner iteration of the cycle.
    pub end_iter: usize,
    /// Number of inner iterations in the cycle.
    pub len: usize,
    /// Candidate point at the cycle end.
    pub y: Vec<f64>,
    /// Objective estimate tracked alongside `y`.
    pub u: f64,
    /// Wall clock since the start of the run, milliseconds.
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub cycles: Vec<CyclePoint>,
    /// Mean of `y` over the output window (second half of the cycles).
    pub y_avg: Vec<f64>,
    /// Mean of `u` over the same window.
    pub u_avg: f64,
    pub total_iters: usize,
    /// Set when the safety cap truncated the run before all cycles finished.
    pub aborted: bool,
    /// `phi(y_avg) - phi*` when the problem carries a reference optimum and
    /// an exact objective.
    pub known_gap: Option<f64>,
    /// `||x0 - x*||` when a reference optimum is available.
    pub start_distance: Option<f64>,
}

/// 1-based cycle indices averaged into the final output: the trailing
/// `ceil(k/2)` cycles, i.e. `floor(k/2)+1 ..= k`.
pub fn output_window(total_cycles: usize) -> std::ops::RangeInclusive<usize> {
    total_cycles / 2 + 1..=total_cycles
}

/// Mean of the `(y, u)` pairs in the output window of `cycles`.
pub(crate) fn tail_average(cycles: &[CyclePoint], dim: usize) -> (Vec<f64>, f64) {
    let k = cycles.len();
    debug_assert!(k >= 1);
    let window = output_window(k);
    let first = *window.start() - 1;
    let count = (k - first) as f64;
    let mut y = vec![0.0; dim];
    let mut u = 0.0;
    for point in &cycles[first..] {
        for (acc, v) in y.iter_mut().zip(&point.y) {
            *acc += v;
        }
        u += point.u;
    }
    for v in &mut y {
        *v /= count;
    }
    (y, u / count)
}
