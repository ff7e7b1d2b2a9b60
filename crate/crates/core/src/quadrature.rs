//! Gauss rules used by the period and Abel integrals.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Chebyshev (first kind) rule: `∫ g(t)/√(1−t²) dt ≈ (π/n) Σ g(tₖ)`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

pub fn gauss_chebyshev<F: FnMut(f64) -> Complex64>(n: usize, mut g: F) -> Complex64 {
    let s: Complex64 = chebyshev_nodes(n).into_iter().map(&mut g).sum();
    s * (PI / n as f64)
}

/// Fixed-order Gauss–Legendre rule on a complex segment `a → b` for an
/// integrand in the segment parameter `t ∈ [0, 1]`.
pub struct SegmentRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl SegmentRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        SegmentRule { x, w }
    }

    /// `∫_{t0}^{t1} g(t) dt` for real `t`.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, t0: f64, t1: f64, mut g: F) -> Complex64 {
        let h = 0.5 * (t1 - t0);
        let m = 0.5 * (t1 + t0);
        let mut s = Complex64::new(0.0, 0.0);
        for (xi, wi) in self.x.iter().zip(&self.w) {
            s += g(m + h * xi) * *wi;
        }
        s * h
    }
}

/// Adaptive bisection on `[t0, t1]` with a 20-point rule, comparing the
/// whole interval against its two halves. `g` returns a vector so several
/// integrands can share one subdivision.
pub fn adaptive<F>(t0: f64, t1: f64, dim: usize, tol: f64, g: &mut F) -> Vec<Complex64>
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let rule = SegmentRule::new(20);
    let whole = rule_vec(&rule, t0, t1, dim, g);
    adaptive_rec(&rule, t0, t1, dim, tol, whole, g, 0)
}

fn rule_vec<F>(rule: &SegmentRule, t0: f64, t1: f64, dim: usize, g: &mut F) -> Vec<Complex64>
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let h = 0.5 * (t1 - t0);
    let m = 0.5 * (t1 + t0);
    let mut s = vec![Complex64::new(0.0, 0.0); dim];
    for (xi, wi) in rule.x.iter().zip(&rule.w) {
        let v = g(m + h * xi);
        for k in 0..dim {
            s[k] += v[k] * *wi;
        }
    }
    s.iter().map(|z| z * h).collect()
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F>(
    rule: &SegmentRule,
    t0: f64,
    t1: f64,
    dim: usize,
    tol: f64,
    whole: Vec<Complex64>,
    g: &mut F,
    depth: usize,
) -> Vec<Complex64>
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let mid = 0.5 * (t0 + t1);
    let left = rule_vec(rule, t0, mid, dim, g);
    let right = rule_vec(rule, mid, t1, dim, g);
    let split: Vec<Complex64> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
    let err = split
        .iter()
        .zip(&whole)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = split.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    if err <= tol * scale.max(1.0) || depth >= 40 {
        return split;
    }
    let l = adaptive_rec(rule, t0, mid, dim, tol, left, g, depth + 1);
    let r = adaptive_rec(rule, mid, t1, dim, tol, right, g, depth + 1);
    l.iter().zip(&r).map(|(a, b)| a + b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = SegmentRule::new(10);
        // exact for degree 19
        let v = rule.integrate(0.0, 2.0, |t| Complex64::new(t.powi(19), 0.0));
        assert!((v.re - 2f64.powi(20) / 20.0).abs() < 1e-8);
        let (_, w) = gauss_legendre(33);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_moments() {
        // ∫ t²/√(1−t²) = π/2
        let v = gauss_chebyshev(8, |t| Complex64::new(t * t, 0.0));
        assert!((v.re - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_a_peak() {
        let mut g = |t: f64| vec![Complex64::new(1.0 / (1e-4 + t * t), 0.0)];
        let v = adaptive(-1.0, 1.0, 1, 1e-13, &mut g);
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((v[0].re - exact).abs() < 1e-9 * exact);
    }
}
