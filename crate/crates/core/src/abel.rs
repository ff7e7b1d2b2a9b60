//! Abel map from the point at infinity, the embedding of the curve into its
//! Jacobian, and reduction modulo the period lattice.
//!
//! Near ∞ the local parameter is `s` with `x = 1/s²`, in which
//! `y = s^{−(2g+1)} Π √(1 − eₖs²)` and `du_k = −s^{2g−2k} ds / Π √(1 − eₖs²)`
//! are regular. A path runs radially in `s` to a matching point on a circle
//! `|x| = R` enclosing every branch point, then along straight segments in `x`
//! with small detours around branch points.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{sqrt_p, Curve, CurvePoint};
use crate::error::{Error, Result};
use crate::periods::PeriodData;
use crate::quadrature;
use crate::report::ResidualReport;
use crate::sigma::SigmaContext;

const QUAD_TOL: f64 = 1e-14;
const ARC_POINTS: usize = 8;

/// A point `u ∈ ℂᵍ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacPoint {
    pub u: Vec<Complex64>,
}

impl JacPoint {
    pub fn new(u: Vec<Complex64>) -> Self {
        JacPoint { u }
    }

    pub fn zero(g: usize) -> Self {
        JacPoint {
            u: vec![Complex64::new(0.0, 0.0); g],
        }
    }

    pub fn scale(&self, k: f64) -> JacPoint {
        JacPoint::new(self.u.iter().map(|z| z * k).collect())
    }

    pub fn add(&self, o: &JacPoint) -> JacPoint {
        JacPoint::new(self.u.iter().zip(&o.u).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &JacPoint) -> JacPoint {
        JacPoint::new(self.u.iter().zip(&o.u).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> JacPoint {
        self.scale(-1.0)
    }

    pub fn norm(&self) -> f64 {
        self.u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorPair {
    pub p1: CurvePoint,
    pub p2: CurvePoint,
}

/// Route from ∞ to an affine point: the matching point on the big circle and
/// intermediate waypoints in the `x`-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct AbelPath {
    pub matching: Complex64,
    pub waypoints: Vec<Complex64>,
}

impl AbelPath {
    /// Radial approach: match on the ray through the target.
    pub fn radial(curve: &Curve, x: Complex64) -> AbelPath {
        let r = matching_radius(curve);
        let dir = if x.norm() > 1e-12 { x / x.norm() } else { Complex64::new(1.0, 0.0) };
        AbelPath {
            matching: dir * r,
            waypoints: Vec::new(),
        }
    }
}

fn matching_radius(curve: &Curve) -> f64 {
    let emax = curve.roots().iter().map(|e| e.norm()).fold(0.0, f64::max);
    2.0 * emax + 2.0
}

fn detour_radius(curve: &Curve) -> f64 {
    0.1 * curve.min_root_separation()
}

/// `y(B)` continued from `y(A)` along the straight segment `A → B`; exact as
/// long as no branch point lies on the segment.
fn continue_straight(curve: &Curve, a: Complex64, b: Complex64, ya: Complex64) -> Complex64 {
    let mut y = ya;
    for e in curve.roots() {
        y *= sqrt_p((b - e) / (a - e));
    }
    y
}

/// Replace the segment `a → b` by a polyline that stays at least the detour
/// radius away from every branch point not at an endpoint.
fn detoured(curve: &Curve, a: Complex64, b: Complex64) -> Vec<Complex64> {
    let rho = detour_radius(curve);
    let d = b - a;
    let len2 = d.norm_sqr();
    let mut hits: Vec<(f64, Complex64)> = Vec::new();
    for &e in curve.roots() {
        if len2 == 0.0 {
            break;
        }
        let t = ((e - a) * d.conj()).re / len2;
        if t <= 0.0 || t >= 1.0 {
            continue;
        }
        let dist = (a + d * t - e).norm();
        if dist < rho && (b - e).norm() > rho && (a - e).norm() > rho {
            hits.push((t, e));
        }
    }
    hits.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut pts = vec![a];
    for (_, e) in hits {
        // entry and exit of the circle |x − e| = ρ along the line
        let u = d / d.norm();
        let proj = ((e - a) * u.conj()).re;
        let foot = a + u * proj;
        let h = (foot - e).norm();
        let half = (rho * rho - h * h).max(0.0).sqrt();
        let p_in = foot - u * half;
        let p_out = foot + u * half;
        let ang_in = (p_in - e).arg();
        // shorter arc, i.e. the side of e the line passes on
        let mut delta = (p_out - e).arg() - ang_in;
        while delta > std::f64::consts::PI {
            delta -= 2.0 * std::f64::consts::PI;
        }
        while delta <= -std::f64::consts::PI {
            delta += 2.0 * std::f64::consts::PI;
        }
        let ang_out = ang_in + delta;
        let r = rho * 1.05;
        for k in 0..=ARC_POINTS {
            let th = ang_in + (ang_out - ang_in) * k as f64 / ARC_POINTS as f64;
            pts.push(e + Complex64::from_polar(r, th));
        }
    }
    pts.push(b);
    pts
}

/// `∫_∞^P (du₁, …, du_g)` along `path`.
pub fn abel_point_along(curve: &Curve, p: &CurvePoint, path: &AbelPath) -> Result<Vec<Complex64>> {
    let g = curve.genus();
    let (x, y) = match *p {
        CurvePoint::Infinity => return Ok(vec![Complex64::new(0.0, 0.0); g]),
        CurvePoint::Affine { x, y } => (x, y),
    };
    if curve.branch_distance(x) < 1e-12 {
        return Err(Error::PathNearBranch(format!("endpoint x = {x} is a branch point")));
    }
    if path.waypoints.is_empty() && x.norm() >= matching_radius(curve) {
        // far out the whole path stays in the chart at infinity
        let s0 = 1.0 / sqrt_p(x);
        let y0 = y_in_s(curve, s0);
        let s = if (y0 - y).norm() <= (y0 + y).norm() { s0 } else { -s0 };
        return Ok(s_part(curve, s));
    }
    let xm = path.matching;
    let mut poly = vec![xm];
    for &w in path.waypoints.iter().chain(std::iter::once(&x)) {
        let last = *poly.last().unwrap();
        let seg = detoured(curve, last, w);
        poly.extend_from_slice(&seg[1..]);
    }
    let rho = detour_radius(curve);
    for w in poly.windows(2) {
        if segment_distance(curve, w[0], w[1]) < 1e-3 * rho && w[1] != x {
            return Err(Error::PathNearBranch(format!("segment {} → {}", w[0], w[1])));
        }
    }
    // choose the s-branch at the matching point whose continuation ends on y
    let sm0 = 1.0 / sqrt_p(xm);
    let ym0 = y_in_s(curve, sm0);
    let mut yc = ym0;
    for w in poly.windows(2) {
        yc = continue_straight(curve, w[0], w[1], yc);
    }
    let sign = if (yc - y).norm() <= (yc + y).norm() { 1.0 } else { -1.0 };
    if ((yc - y).norm() - (yc + y).norm()).abs() < 1e-8 * y.norm() {
        return Err(Error::SheetAmbiguity(format!("cannot match sheets at x = {x}")));
    }
    let sm = sm0 * sign;
    let mut total = s_part(curve, sm);
    let mut ya = ym0 * sign;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg = x_part(curve, a, b, ya);
        for k in 0..g {
            total[k] += seg[k];
        }
        ya = continue_straight(curve, a, b, ya);
    }
    Ok(total)
}

fn segment_distance(curve: &Curve, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    curve
        .roots()
        .iter()
        .map(|&e| {
            let t = if d.norm_sqr() > 0.0 {
                (((e - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (a + d * t - e).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn h_of_s(curve: &Curve, s: Complex64) -> Complex64 {
    curve.roots().iter().map(|e| sqrt_p(1.0 - e * s * s)).product()
}

fn y_in_s(curve: &Curve, s: Complex64) -> Complex64 {
    h_of_s(curve, s) / s.powi(curve.degree() as i32)
}

/// `∫_0^{s_m} −s^{2g−2k} ds / h(s)` for `k = 1..g`.
fn s_part(curve: &Curve, sm: Complex64) -> Vec<Complex64> {
    let g = curve.genus();
    let mut f = |t: f64| {
        let s = sm * t;
        let h = h_of_s(curve, s);
        (1..=g)
            .map(|k| -s.powi((2 * g - 2 * k) as i32) / h * sm)
            .collect::<Vec<_>>()
    };
    quadrature::adaptive(0.0, 1.0, g, QUAD_TOL, &mut f)
}

/// `∫_a^b x^{k−1} dx / 2y` with `y` continued from `y(a) = ya`.
fn x_part(curve: &Curve, a: Complex64, b: Complex64, ya: Complex64) -> Vec<Complex64> {
    let g = curve.genus();
    let d = b - a;
    let mut f = |t: f64| {
        let x = a + d * t;
        let y = continue_straight(curve, a, x, ya);
        (0..g).map(|k| x.powi(k as i32) / (2.0 * y) * d).collect::<Vec<_>>()
    };
    quadrature::adaptive(0.0, 1.0, g, QUAD_TOL, &mut f)
}

pub fn abel_point(curve: &Curve, p: &CurvePoint) -> Result<Vec<Complex64>> {
    match p {
        CurvePoint::Infinity => Ok(vec![Complex64::new(0.0, 0.0); curve.genus()]),
        CurvePoint::Affine { x, .. } => abel_point_along(curve, p, &AbelPath::radial(curve, *x)),
    }
}

/// Abel image of a degree-two divisor, `w(P₁ + P₂)`.
pub fn abel(curve: &Curve, d: &DivisorPair) -> Result<JacPoint> {
    let a = abel_point(curve, &d.p1)?;
    let b = abel_point(curve, &d.p2)?;
    Ok(JacPoint::new(a.iter().zip(&b).map(|(x, y)| x + y).collect()))
}

/// `ι(P) = w(P + ∞)`.
pub fn embed(curve: &Curve, p: &CurvePoint) -> Result<JacPoint> {
    Ok(JacPoint::new(abel_point(curve, p)?))
}

/// Subtract the lattice vector `2ω′p + 2ω″q` nearest in the real
/// coordinates of the period basis. Returns the remainder and `(p, q)`.
pub fn reduce_lattice(periods: &PeriodData, u: &JacPoint) -> (JacPoint, Vec<i64>) {
    let g = periods.genus();
    let basis = lattice_basis(periods);
    let n = 2 * g;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let z = basis[j][i % g];
        if i < g {
            z.re
        } else {
            z.im
        }
    });
    let rhs = DVector::from_fn(n, |i, _| if i < g { u.u[i].re } else { u.u[i - g].im });
    let coef = m.lu().solve(&rhs).expect("period lattice is non-degenerate");
    let shift: Vec<i64> = coef.iter().map(|c| c.round() as i64).collect();
    let mut r = u.u.clone();
    for (j, &k) in shift.iter().enumerate() {
        for i in 0..g {
            r[i] -= basis[j][i] * k as f64;
        }
    }
    (JacPoint::new(r), shift)
}

/// Columns of `2ω′` followed by columns of `2ω″`.
pub fn lattice_basis(p: &PeriodData) -> Vec<Vec<Complex64>> {
    let g = p.genus();
    let mut out = Vec::new();
    for m in [&p.omega1, &p.omega2] {
        for j in 0..g {
            out.push((0..g).map(|i| m[(i, j)] * 2.0).collect());
        }
    }
    out
}

pub fn lattice_vector(p: &PeriodData, coeffs: &[i64]) -> JacPoint {
    let g = p.genus();
    let basis = lattice_basis(p);
    let mut v = vec![Complex64::new(0.0, 0.0); g];
    for (j, &k) in coeffs.iter().enumerate() {
        for i in 0..g {
            v[i] += basis[j][i] * k as f64;
        }
    }
    JacPoint::new(v)
}

/// Random affine point with `x` in the disk `|x| ≤ 3`, at least 0.2 from
/// every branch point, and a random sheet.
pub fn random_curve_point<R: Rng>(curve: &Curve, rng: &mut R) -> CurvePoint {
    loop {
        let x = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if x.norm() > 3.0 || curve.branch_distance(x) < 0.2 {
            continue;
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        return CurvePoint::above(curve, x, sign);
    }
}

/// Random divisor of two affine points with distinct `x`.
pub fn random_divisor<R: Rng>(curve: &Curve, rng: &mut R) -> DivisorPair {
    loop {
        let p1 = random_curve_point(curve, rng);
        let p2 = random_curve_point(curve, rng);
        if (p1.x().unwrap() - p2.x().unwrap()).norm() > 0.2 {
            return DivisorPair { p1, p2 };
        }
    }
}

/// Jacobi inversion: `℘₂₂(w(P₁+P₂)) = x₁ + x₂` and `℘₁₂ = −x₁x₂`, residuals
/// relative to `1 + |x₁| + |x₂|`. Returns the two residuals.
pub fn inversion_residuals(ctx: &SigmaContext, d: &DivisorPair) -> Result<(f64, f64)> {
    let (Some(x1), Some(x2)) = (d.p1.x(), d.p2.x()) else {
        return Err(Error::NearDivisor(0.0));
    };
    if (x1 - x2).norm() < 1e-10 {
        return Err(Error::NearDivisor((x1 - x2).norm()));
    }
    let u = abel(&ctx.curve, d)?;
    let jet = ctx.wp_jet(&u)?;
    let scale = 1.0 + x1.norm() + x2.norm();
    Ok((
        (jet.wp(&[2, 2]) - (x1 + x2)).norm() / scale,
        (jet.wp(&[1, 2]) + x1 * x2).norm() / scale,
    ))
}

/// Jacobi inversion as report records: the two gating checks and the
/// printed sign of `℘₁₂` as a diagnostic.
pub fn verify_inversion(ctx: &SigmaContext, d: &DivisorPair, inputs: &str) -> Result<Vec<ResidualReport>> {
    let (r22, r12) = inversion_residuals(ctx, d)?;
    let (x1, x2) = (d.p1.x().unwrap(), d.p2.x().unwrap());
    let u = abel(&ctx.curve, d)?;
    let jet = ctx.wp_jet(&u)?;
    let scale = 1.0 + x1.norm() + x2.norm();
    let literal = (jet.wp(&[1, 2]) - x1 * x2).norm() / scale;
    Ok(vec![
        ResidualReport::gating("inversion", "wp22-sum", "℘22 = x1 + x2", inputs, r22, 1e-8),
        ResidualReport::gating("inversion", "wp12-product", "℘12 = −x1·x2", inputs, r12, 1e-8),
        ResidualReport::diagnostic("inversion", "wp12-product-literal", "℘12 = x1·x2", inputs, literal, 1e-8),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::random_curve;
    use crate::periods::compute_periods;

    #[test]
    fn infinity_maps_to_zero() {
        let cv = random_curve(1, 2);
        let d = DivisorPair {
            p1: CurvePoint::Infinity,
            p2: CurvePoint::Infinity,
        };
        assert_eq!(abel(&cv, &d).unwrap(), JacPoint::zero(2));
    }

    #[test]
    fn involution_negates() {
        let cv = random_curve(2, 2);
        let p = CurvePoint::above(&cv, Complex64::new(0.7, -1.3), 1.0);
        let a = embed(&cv, &p).unwrap();
        let b = embed(&cv, &p.involution()).unwrap();
        assert!(a.add(&b).norm() < 1e-12);
    }

    #[test]
    fn lattice_reduction_removes_periods() {
        let cv = random_curve(3, 2);
        let per = compute_periods(&cv).unwrap();
        let u = JacPoint::new(vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05)]);
        let (r0, s0) = reduce_lattice(&per, &u);
        let shifted = u.add(&lattice_vector(&per, &[1, 0, 0, 0]));
        let (r1, s1) = reduce_lattice(&per, &shifted);
        assert!(r0.sub(&r1).norm() < 1e-12);
        assert_eq!(s1[0] - s0[0], 1);
        let (z, _) = reduce_lattice(&per, &lattice_vector(&per, &[2, -1, 3, 1]));
        assert!(z.norm() < 1e-12);
    }
}
