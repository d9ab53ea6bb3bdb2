//! Piecewise-linear portfolio objective over the probability simplex.
//!
//! `F(x, xi) = p(sum_i (i/n + xi_i) x_i)` where `p(t) = max_r (v_r + s_r t)`
//! is a convex piecewise-affine scalar function and `xi_i ~ N(0, 1)` i.i.d.
//! Since `sum_i xi_i x_i ~ N(0, ||x||^2)`, the exact objective
//! `phi(x) = E[p(mu + sigma Z)]` with `mu = sum_i (i/n) x_i`, `sigma = ||x||`
//! has a closed form: each affine piece of the upper envelope integrates
//! against the normal density through the normal CDF.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::problems::CompositeProblem;
use crate::prox::{ProxOperator, SimplexProx};
use crate::rng::SampleStream;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// One affine piece of the upper envelope, active on `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
struct EnvelopePiece {
    value: f64,
    slope: f64,
    lo: f64,
    hi: f64,
}

/// Upper envelope of `max_r (v_r + s_r t)` as a sorted list of active pieces
/// with their crossing points. Classic hull sweep over slope-sorted lines.
fn upper_envelope(pieces: &[(f64, f64)]) -> Vec<EnvelopePiece> {
    let mut lines: Vec<(f64, f64)> = pieces.to_vec();
    lines.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    // Equal slopes: only the largest value can be active.
    lines.dedup_by(|next, prev| {
        if next.1 == prev.1 {
            prev.0 = prev.0.max(next.0);
            true
        } else {
            false
        }
    });

    let cross = |a: &(f64, f64), b: &(f64, f64)| (a.0 - b.0) / (b.1 - a.1);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
    for line in lines {
        while hull.len() >= 2 {
            let last = hull[hull.len() - 1];
            let before = hull[hull.len() - 2];
            if cross(&before, &line) <= cross(&before, &last) {
                hull.pop();
            } else {
                break;
            }
        }
        if hull.len() == 1 && cross(&hull[0], &line).is_nan() {
            // Identical lines after dedup cannot happen; guard anyway.
            hull.pop();
        }
        hull.push(line);
    }

    let mut out = Vec::with_capacity(hull.len());
    for (i, &(value, slope)) in hull.iter().enumerate() {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            cross(&hull[i - 1], &hull[i])
        };
        let hi = if i + 1 == hull.len() {
            f64::INFINITY
        } else {
            cross(&hull[i], &hull[i + 1])
        };
        out.push(EnvelopePiece { value, slope, lo, hi });
    }
    out
}

pub struct PortfolioInstance {
    dim: usize,
    /// The `(value, slope)` pairs defining the scalar max.
    pieces: Vec<(f64, f64)>,
    envelope: Vec<EnvelopePiece>,
    prox: SimplexProx,
    m_bound: f64,
    gen_seed: u64,
}

impl PortfolioInstance {
    pub fn from_pieces(dim: usize, pieces: Vec<(f64, f64)>, gen_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("portfolio dimension must be positive"));
        }
        if pieces.is_empty() || pieces.iter().any(|(v, s)| !v.is_finite() || !s.is_finite()) {
            return Err(Error::invalid("portfolio pieces must be non-empty and finite"));
        }
        let envelope = upper_envelope(&pieces);
        // E||w||^2 = n + sum_i (i/n)^2 is independent of x, so
        // M^2 = max_r s_r^2 * E||w||^2 bounds the subgradient second moment.
        let n = dim as f64;
        let w_sq = n + (n + 1.0) * (2.0 * n + 1.0) / (6.0 * n);
        let max_slope_sq = pieces.iter().map(|(_, s)| s * s).fold(0.0, f64::max);
        Ok(PortfolioInstance {
            dim,
            pieces,
            envelope,
            prox: SimplexProx::new(dim),
            m_bound: (max_slope_sq * w_sq).sqrt(),
            gen_seed,
        })
    }

    /// Instance with `breakpoints` kinks drawn uniformly on `[0, 1]`,
    /// continuous increasing slopes spanning negative to positive, and the
    /// scalar minimum anchored around 12 so objective values have a scale
    /// comparable across regenerated instances.
    pub fn generate(dim: usize, breakpoints: usize, stream: &mut SampleStream) -> Self {
        let count = breakpoints + 1;
        let negative = count / 2;
        let mut slopes: Vec<f64> = (0..count)
            .map(|r| {
                if r < negative {
                    stream.uniform_in(-3.0, -0.05)
                } else {
                    stream.uniform_in(0.05, 3.0)
                }
            })
            .collect();
        slopes.sort_by(f64::total_cmp);
        let mut kinks: Vec<f64> = (0..breakpoints).map(|_| stream.uniform()).collect();
        kinks.sort_by(f64::total_cmp);

        let mut values = vec![0.0];
        for r in 0..breakpoints {
            values.push(values[r] + (slopes[r] - slopes[r + 1]) * kinks[r]);
        }
        let anchor = stream.uniform_in(10.0, 14.0);
        let current_min = kinks
            .iter()
            .enumerate()
            .map(|(r, &t)| values[r] + slopes[r] * t)
            .fold(f64::INFINITY, f64::min);
        let shift = if breakpoints == 0 { anchor } else { anchor - current_min };
        let pieces = values
            .into_iter()
            .zip(slopes)
            .map(|(v, s)| (v + shift, s))
            .collect();
        PortfolioInstance::from_pieces(dim, pieces, stream.base_seed())
            .expect("generated pieces are finite")
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn gen_seed(&self) -> u64 {
        self.gen_seed
    }

    /// `max_r (v_r + s_r t)` and the index of the maximizing piece (lowest
    /// index wins ties).
    pub fn scalar_max(&self, t: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (r, &(v, s)) in self.pieces.iter().enumerate() {
            let val = v + s * t;
            if val > best.0 {
                best = (val, r);
            }
        }
        best
    }

    /// `E[p(mu + sigma Z)]` for standard normal `Z`, by closed-form
    /// integration of each active envelope piece against the normal density.
    pub fn expected_scalar_max(&self, mu: f64, sigma: f64) -> f64 {
        debug_assert!(sigma > 0.0);
        let mut total = 0.0;
        for piece in &self.envelope {
            let alpha = (piece.lo - mu) / sigma;
            let beta = (piece.hi - mu) / sigma;
            let (cdf_a, pdf_a) = if alpha == f64::NEG_INFINITY {
                (0.0, 0.0)
            } else {
                (std_normal_cdf(alpha), std_normal_pdf(alpha))
            };
            let (cdf_b, pdf_b) = if beta == f64::INFINITY {
                (1.0, 0.0)
            } else {
                (std_normal_cdf(beta), std_normal_pdf(beta))
            };
            let mass = cdf_b - cdf_a;
            let first_moment = mu * mass - sigma * (pdf_b - pdf_a);
            total += piece.value * mass + piece.slope * first_moment;
        }
        total
    }

    /// Mean `mu = sum_i (i/n) x_i` and sigma `= ||x||` of the scalar
    /// aggregate `t` under `x`.
    pub fn scalar_moments(&self, x: &[f64]) -> (f64, f64) {
        let n = self.dim as f64;
        let mu = x
            .iter()
            .enumerate()
            .map(|(i, xi)| (i + 1) as f64 / n * xi)
            .sum();
        (mu, norm(x))
    }
}

impl CompositeProblem for PortfolioInstance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw_sample(&self, stream: &mut SampleStream) -> Vec<f64> {
        stream.standard_normal_vec(self.dim)
    }

    fn oracle(&self, x: &[f64], xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(xi.len(), self.dim);
        let n = self.dim as f64;
        let weights: Vec<f64> = xi
            .iter()
            .enumerate()
            .map(|(i, z)| (i + 1) as f64 / n + z)
            .collect();
        let t = dot(&weights, x);
        let (value, active) = self.scalar_max(t);
        let slope = self.pieces[active].1;
        let subgrad = weights.into_iter().map(|w| slope * w).collect();
        Ok((value, subgrad))
    }

    fn prox_op(&self) -> &dyn ProxOperator {
        &self.prox
    }

    fn second_moment_bound(&self) -> f64 {
        self.m_bound
    }

    fn exact_objective(&self, x: &[f64]) -> Option<f64> {
        let (mu, sigma) = self.scalar_moments(x);
        Some(self.expected_scalar_max(mu, sigma) + self.prox.evaluate(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_piece(n: usize) -> PortfolioInstance {
        PortfolioInstance::from_pieces(n, vec![(0.0, 1.0)], 0).unwrap()
    }

    #[test]
    fn single_piece_oracle_is_affine() {
        let inst = single_piece(4);
        let x = vec![0.25; 4];
        let xi = vec![0.1, -0.2, 0.3, 0.0];
        let (f, g) = inst.oracle(&x, &xi).unwrap();
        let w: Vec<f64> = (0..4).map(|i| (i + 1) as f64 / 4.0 + xi[i]).collect();
        assert!((f - dot(&w, &x)).abs() < 1e-15);
        for (gi, wi) in g.iter().zip(&w) {
            assert!((gi - wi).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_noise_at_last_vertex() {
        let pieces = vec![(1.0, -2.0), (0.5, 0.3), (-1.0, 2.5)];
        let inst = PortfolioInstance::from_pieces(3, pieces.clone(), 0).unwrap();
        let mut x = vec![0.0; 3];
        x[2] = 1.0; // t = n/n = 1 under zero noise
        let (f, _) = inst.oracle(&x, &[0.0, 0.0, 0.0]).unwrap();
        let expect = pieces.iter().map(|(v, s)| v + s).fold(f64::NEG_INFINITY, f64::max);
        assert!((f - expect).abs() < 1e-15);
    }

    #[test]
    fn ties_take_lowest_index() {
        // Both pieces equal at t = 0.
        let inst = PortfolioInstance::from_pieces(2, vec![(1.0, -1.0), (1.0, 1.0)], 0).unwrap();
        let (_, idx) = inst.scalar_max(0.0);
        assert_eq!(idx, 0);
    }

    #[test]
    fn per_sample_subgradient_inequality() {
        let mut s = SampleStream::new(21, 0);
        let inst = PortfolioInstance::generate(8, 6, &mut s);
        let xi = inst.draw_sample(&mut s);
        let x = s.simplex_point(8);
        let (fx, g) = inst.oracle(&x, &xi).unwrap();
        for _ in 0..100 {
            let u = s.simplex_point(8);
            let (fu, _) = inst.oracle(&u, &xi).unwrap();
            let lin: f64 = fx + (0..8).map(|i| g[i] * (u[i] - x[i])).sum::<f64>();
            assert!(fu >= lin - 1e-12, "subgradient inequality violated");
        }
    }

    #[test]
    fn envelope_matches_direct_max() {
        let mut s = SampleStream::new(33, 0);
        for _ in 0..20 {
            let m = 2 + (s.uniform() * 9.0) as usize;
            let pieces: Vec<(f64, f64)> = (0..m)
                .map(|_| (s.uniform_in(-5.0, 5.0), s.uniform_in(-4.0, 4.0)))
                .collect();
            let inst = PortfolioInstance::from_pieces(2, pieces, 0).unwrap();
            for _ in 0..200 {
                let t = s.uniform_in(-6.0, 6.0);
                let (direct, _) = inst.scalar_max(t);
                let via_env = inst
                    .envelope
                    .iter()
                    .filter(|p| t >= p.lo && t <= p.hi)
                    .map(|p| p.value + p.slope * t)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((direct - via_env).abs() < 1e-9, "{direct} vs {via_env}");
            }
        }
    }

    #[test]
    fn exact_phi_single_piece() {
        let inst = PortfolioInstance::from_pieces(3, vec![(0.7, 1.3)], 0).unwrap();
        let x = vec![0.2, 0.3, 0.5];
        let (mu, _) = inst.scalar_moments(&x);
        let phi = inst.exact_objective(&x).unwrap();
        assert!((phi - (0.7 + 1.3 * mu)).abs() < 1e-12);
    }

    #[test]
    fn exact_phi_folded_normal() {
        // p(t) = |t| with mu = 0 has mean sigma * sqrt(2/pi).
        let inst = PortfolioInstance::from_pieces(2, vec![(0.0, -1.0), (0.0, 1.0)], 0).unwrap();
        for sigma in [0.3, 1.0, 2.5] {
            let got = inst.expected_scalar_max(0.0, sigma);
            let expect = sigma * (2.0 / std::f64::consts::PI).sqrt();
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn exact_phi_matches_quadrature() {
        // Fixed composite Simpson over each active envelope interval.
        let mut s = SampleStream::new(7, 0);
        let inst = PortfolioInstance::generate(6, 5, &mut s);
        let x = s.simplex_point(6);
        let (mu, sigma) = inst.scalar_moments(&x);
        let lo = mu - 12.0 * sigma;
        let hi = mu + 12.0 * sigma;
        let density = |t: f64| std_normal_pdf((t - mu) / sigma) / sigma;
        let mut quad = 0.0;
        for piece in &inst.envelope {
            let a = piece.lo.max(lo);
            let b = piece.hi.min(hi);
            if a >= b {
                continue;
            }
            let steps = 4096;
            let h = (b - a) / steps as f64;
            let f = |t: f64| (piece.value + piece.slope * t) * density(t);
            let mut acc = f(a) + f(b);
            for i in 1..steps {
                let t = a + i as f64 * h;
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
            }
            quad += acc * h / 3.0;
        }
        let exact = inst.expected_scalar_max(mu, sigma);
        assert!((exact - quad).abs() < 1e-8, "{exact} vs {quad}");
    }

    #[test]
    fn exact_phi_matches_monte_carlo() {
        let mut s = SampleStream::new(17, 0);
        let inst = PortfolioInstance::generate(5, 3, &mut s);
        let x = s.simplex_point(5);
        let exact = inst.exact_objective(&x).unwrap();
        let runs = 1_000_000usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..runs {
            let xi = inst.draw_sample(&mut s);
            let (f, _) = inst.oracle(&x, &xi).unwrap();
            let delta = f - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (f - mean);
        }
        let std = (m2 / (runs - 1) as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 4.0 * std / 1e3,
            "MC {mean} vs exact {exact} (std {std})"
        );
    }

    #[test]
    fn second_moment_bound_holds_empirically() {
        let mut s = SampleStream::new(23, 0);
        let inst = PortfolioInstance::generate(10, 9, &mut s);
        let m = crate::problems::estimate_second_moment(&inst, 10_000, &mut s).unwrap();
        assert!(
            m * m <= 1.1 * inst.second_moment_bound().powi(2),
            "estimated {m} vs bound {}",
            inst.second_moment_bound()
        );
    }
}
