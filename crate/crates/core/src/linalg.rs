//! Small dense vector helpers used throughout the crate.

/// Strictly positive and finite (false for NaN and infinities).
pub fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}
