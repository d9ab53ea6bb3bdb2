//! Two-stage stochastic quadratic program over coupled simplexes.
//!
//! First stage: `min c^T x1 + E[Q(x1, xi)]` with `x1` on the probability
//! simplex. The recourse cost is
//! `Q(x1, xi) = min_{x2 in simplex} 0.5 z^T (xi xi^T + r I) z + xi^T z` with
//! `z = (x1; x2)` and ridge `r > 0`, so the recourse objective is r-strongly
//! convex and its Hessian-vector products are rank-1 plus diagonal.
//!
//! Because the second-stage feasible set does not depend on `x1`, the value
//! function differentiates through the inner minimizer: with `z* = (x1; x2*)`,
//! `s(x1, xi) = c + [ (xi^T z* + 1) xi + r z* ]_{x1 block}`.

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm_sq, positive_finite};
use crate::problems::CompositeProblem;
use crate::prox::{project_simplex, ProxOperator, SimplexProx};
use crate::rng::SampleStream;

/// Default recourse tolerance is this factor times `1 + ||xi||^2`, keeping
/// subgradient inexactness far below Monte-Carlo noise.
pub const DEFAULT_RECOURSE_TOL_FACTOR: f64 = 1e-8;

const MAX_RECOURSE_ITERS: usize = 100_000;

pub struct TwoStageQuadInstance {
    dim: usize,
    cost: Vec<f64>,
    xi_mean: Vec<f64>,
    xi_std: Vec<f64>,
    ridge: f64,
    m_estimate: f64,
    prox: SimplexProx,
    gen_seed: u64,
}

impl TwoStageQuadInstance {
    pub fn from_parts(
        dim: usize,
        cost: Vec<f64>,
        xi_mean: Vec<f64>,
        xi_std: Vec<f64>,
        ridge: f64,
        m_estimate: f64,
        gen_seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("two-stage dimension must be positive"));
        }
        if cost.len() != dim || xi_mean.len() != 2 * dim || xi_std.len() != 2 * dim {
            return Err(Error::invalid("two-stage instance vectors have inconsistent lengths"));
        }
        if !positive_finite(ridge) {
            return Err(Error::invalid("ridge must be positive"));
        }
        if !xi_std.iter().all(|s| positive_finite(*s)) {
            return Err(Error::invalid("sample standard deviations must be positive"));
        }
        Ok(TwoStageQuadInstance {
            dim,
            cost,
            xi_mean,
            xi_std,
            ridge,
            m_estimate,
            prox: SimplexProx::new(dim),
            gen_seed,
        })
    }

    /// Instance with costs in `[1, 3]`, sample means in `[5, 25]`, sample
    /// standard deviations in `[5, 15]`, and ridge 2. The subgradient
    /// second-moment constant is estimated from 10^4 draws at random feasible
    /// points, continuing the same stream.
    pub fn generate(dim: usize, stream: &mut SampleStream) -> Result<Self> {
        let cost = (0..dim).map(|_| stream.uniform_in(1.0, 3.0)).collect();
        let xi_mean = (0..2 * dim).map(|_| stream.uniform_in(5.0, 25.0)).collect();
        let xi_std = (0..2 * dim).map(|_| stream.uniform_in(5.0, 15.0)).collect();
        let mut inst =
            TwoStageQuadInstance::from_parts(dim, cost, xi_mean, xi_std, 2.0, 0.0, stream.base_seed())?;
        inst.m_estimate = crate::problems::estimate_second_moment(&inst, 10_000, stream)?;
        Ok(inst)
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn xi_mean(&self) -> &[f64] {
        &self.xi_mean
    }

    pub fn xi_std(&self) -> &[f64] {
        &self.xi_std
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn m_estimate(&self) -> f64 {
        self.m_estimate
    }

    pub fn gen_seed(&self) -> u64 {
        self.gen_seed
    }

    pub fn default_tolerance(&self, xi: &[f64]) -> f64 {
        DEFAULT_RECOURSE_TOL_FACTOR * (1.0 + norm_sq(xi))
    }

    /// Full second-stage objective at `(x1, x2)` for a fixed scenario.
    pub fn recourse_objective(&self, x1: &[f64], xi: &[f64], x2: &[f64]) -> f64 {
        let inner = dot(&xi[..self.dim], x1) + dot(&xi[self.dim..], x2);
        0.5 * inner * inner + 0.5 * self.ridge * (norm_sq(x1) + norm_sq(x2)) + inner
    }
}

/// Minimize the recourse objective over the second-stage simplex with
/// accelerated projected gradient. Gradient products use the rank-1 plus
/// diagonal structure, O(n) per iteration. Terminates when the projected
/// gradient fixed-point residual `||x2 - P(x2 - grad/L)||` with
/// `L = ||xi||^2 + ridge` drops to `tol`; the returned point is the one the
/// residual was certified at.
pub fn solve_recourse(
    x1: &[f64],
    xi: &[f64],
    instance: &TwoStageQuadInstance,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = instance.dim;
    if x1.len() != n || xi.len() != 2 * n {
        return Err(Error::invalid("recourse solve called with mismatched dimensions"));
    }
    if !positive_finite(tol) {
        return Err(Error::invalid("recourse tolerance must be positive"));
    }
    let (xi1, xi2) = xi.split_at(n);
    let offset = dot(xi1, x1);
    let ridge = instance.ridge;
    let lip = norm_sq(xi) + ridge;
    let momentum = (lip.sqrt() - ridge.sqrt()) / (lip.sqrt() + ridge.sqrt());

    let grad = |x2: &[f64]| -> Vec<f64> {
        let scale = offset + dot(xi2, x2) + 1.0;
        x2.iter().zip(xi2).map(|(x, b)| scale * b + ridge * x).collect()
    };
    let step = |point: &[f64], g: &[f64]| -> Vec<f64> {
        let shifted: Vec<f64> = point.iter().zip(g).map(|(p, gi)| p - gi / lip).collect();
        project_simplex(&shifted)
    };

    let mut x = vec![1.0 / n as f64; n];
    let mut x_prev = x.clone();
    for _ in 0..MAX_RECOURSE_ITERS {
        let g = grad(&x);
        let fixed_point = step(&x, &g);
        if dist(&x, &fixed_point) <= tol {
            let value = instance.recourse_objective(x1, xi, &x);
            return Ok((value, x));
        }
        let y: Vec<f64> = x
            .iter()
            .zip(&x_prev)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        let gy = grad(&y);
        let next = step(&y, &gy);
        x_prev = x;
        x = next;
    }
    Err(Error::Oracle(format!(
        "recourse solver exceeded {MAX_RECOURSE_ITERS} iterations (tol {tol:.3e})"
    )))
}

impl CompositeProblem for TwoStageQuadInstance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw_sample(&self, stream: &mut SampleStream) -> Vec<f64> {
        self.xi_mean
            .iter()
            .zip(&self.xi_std)
            .map(|(m, s)| m + s * stream.standard_normal())
            .collect()
    }

    fn oracle(&self, x: &[f64], xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let tol = self.default_tolerance(xi);
        let (recourse, x2) = solve_recourse(x, xi, self, tol)?;
        let value = dot(&self.cost, x) + recourse;
        let inner = dot(&xi[..self.dim], x) + dot(&xi[self.dim..], &x2);
        let subgrad = self
            .cost
            .iter()
            .zip(&xi[..self.dim])
            .zip(x)
            .map(|((c, xi1), x1)| c + (inner + 1.0) * xi1 + self.ridge * x1)
            .collect();
        Ok((value, subgrad))
    }

    fn prox_op(&self) -> &dyn ProxOperator {
        &self.prox
    }

    fn second_moment_bound(&self) -> f64 {
        self.m_estimate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::estimate_second_moment;

    fn small_instance(seed: u64) -> TwoStageQuadInstance {
        let mut stream = SampleStream::new(seed, crate::rng::stream::INSTANCE_GEN);
        // Skip the heavyweight generate() for unit tests: fixed parts, then a
        // cheap moment estimate.
        let mut inst = TwoStageQuadInstance::from_parts(
            2,
            vec![1.5, 2.5],
            vec![8.0, 20.0, 6.0, 14.0],
            vec![6.0, 9.0, 12.0, 7.0],
            2.0,
            0.0,
            seed,
        )
        .unwrap();
        inst.m_estimate = estimate_second_moment(&inst, 500, &mut stream).unwrap();
        inst
    }

    #[test]
    fn zero_scenario_closed_form() {
        let inst = small_instance(1);
        let x1 = vec![0.7, 0.3];
        let xi = vec![0.0; 4];
        let (q, x2) = solve_recourse(&x1, &xi, &inst, 1e-12).unwrap();
        for v in &x2 {
            assert!((v - 0.5).abs() < 1e-9);
        }
        let expect = 1.0 * norm_sq(&x1) + 2.0 / (2.0 * 2.0);
        assert!((q - expect).abs() < 1e-9, "{q} vs {expect}");

        let (_, s) = inst.oracle(&x1, &xi).unwrap();
        for i in 0..2 {
            assert!((s[i] - (inst.cost[i] + 2.0 * x1[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn recourse_matches_grid_minimum() {
        let inst = small_instance(2);
        let mut s = SampleStream::new(3, 0);
        for _ in 0..10 {
            let x1 = s.simplex_point(2);
            let xi = inst.draw_sample(&mut s);
            let tol = 1e-12 * (1.0 + norm_sq(&xi));
            let (q, _) = solve_recourse(&x1, &xi, &inst, tol).unwrap();
            let mut grid_min = f64::INFINITY;
            for i in 0..=10_000 {
                let t = i as f64 * 1e-4;
                let v = inst.recourse_objective(&x1, &xi, &[t, 1.0 - t]);
                grid_min = grid_min.min(v);
            }
            assert!((q - grid_min).abs() < 1e-6, "{q} vs {grid_min}");
        }
    }

    #[test]
    fn tightening_tol_cannot_worsen_value_much() {
        let inst = small_instance(4);
        let mut s = SampleStream::new(5, 0);
        let x1 = s.simplex_point(2);
        let xi = inst.draw_sample(&mut s);
        let lip = norm_sq(&xi) + inst.ridge();
        let d = inst.prox_op().diameter();
        let loose = 1e-4;
        let (q_loose, _) = solve_recourse(&x1, &xi, &inst, loose).unwrap();
        let (q_tight, _) = solve_recourse(&x1, &xi, &inst, loose / 100.0).unwrap();
        assert!(q_tight <= q_loose + loose * (1.0 + lip * d));
    }

    #[test]
    fn recourse_objective_is_strongly_convex_in_x2() {
        let inst = small_instance(6);
        let mut s = SampleStream::new(7, 0);
        let x1 = s.simplex_point(2);
        let xi = inst.draw_sample(&mut s);
        for _ in 0..50 {
            let z = s.simplex_point(2);
            let w = s.simplex_point(2);
            let alpha = s.uniform();
            let mix: Vec<f64> = z.iter().zip(&w).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let lhs = inst.recourse_objective(&x1, &xi, &mix);
            let rhs = alpha * inst.recourse_objective(&x1, &xi, &z)
                + (1.0 - alpha) * inst.recourse_objective(&x1, &xi, &w)
                - inst.ridge() * alpha * (1.0 - alpha) / 2.0 * crate::linalg::dist_sq(&z, &w);
            assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn value_function_subgradient_inequality() {
        // F(., xi) is convex; APG inexactness is kept well below the slack.
        let inst = small_instance(8);
        let mut s = SampleStream::new(9, 0);
        for _ in 0..50 {
            let x = s.simplex_point(2);
            let u = s.simplex_point(2);
            let xi = inst.draw_sample(&mut s);
            let (fx, g) = inst.oracle(&x, &xi).unwrap();
            let (fu, _) = inst.oracle(&u, &xi).unwrap();
            let lin = fx + g.iter().zip(x.iter().zip(&u)).map(|(gi, (xi_, ui))| gi * (ui - xi_)).sum::<f64>();
            let scale = 1.0 + fx.abs() + fu.abs();
            assert!(fu >= lin - 1e-6 * scale, "slack {}", (fu - lin) / scale);
        }
    }

    #[test]
    fn second_moment_estimate_stable_across_seeds() {
        let inst = small_instance(10);
        let mut s1 = SampleStream::new(100, 0);
        let mut s2 = SampleStream::new(200, 0);
        let m1 = estimate_second_moment(&inst, 10_000, &mut s1).unwrap();
        let m2 = estimate_second_moment(&inst, 10_000, &mut s2).unwrap();
        assert!((m1 - m2).abs() <= 0.1 * m1.max(m2), "{m1} vs {m2}");
    }

    #[test]
    fn returned_point_satisfies_residual() {
        let inst = small_instance(11);
        let mut s = SampleStream::new(12, 0);
        for _ in 0..20 {
            let x1 = s.simplex_point(2);
            let xi = inst.draw_sample(&mut s);
            let tol = inst.default_tolerance(&xi);
            let (_, x2) = solve_recourse(&x1, &xi, &inst, tol).unwrap();
            let lip = norm_sq(&xi) + inst.ridge();
            let scale = dot(&xi[..2], &x1) + dot(&xi[2..], &x2) + 1.0;
            let g: Vec<f64> = x2.iter().zip(&xi[2..]).map(|(x, b)| scale * b + inst.ridge() * x).collect();
            let shifted: Vec<f64> = x2.iter().zip(&g).map(|(p, gi)| p - gi / lip).collect();
            let p = project_simplex(&shifted);
            assert!(dist(&x2, &p) <= tol);
        }
    }
}
