//! The curve `y² = f(x)` with `f` monic of degree `2g + 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOL_ON_CURVE: f64 = 1e-10;
pub const TOL_ROOT: f64 = 1e-12;
const MIN_ROOT_SEPARATION: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Principal square root with the cut on the negative real axis.
pub fn sqrt_p(z: Complex64) -> Complex64 {
    z.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct Curve {
    genus: usize,
    lambdas: Vec<Complex64>,
    roots: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    genus: usize,
    lambdas: Vec<[f64; 2]>,
}

impl TryFrom<CurveJson> for Curve {
    type Error = Error;

    fn try_from(j: CurveJson) -> Result<Curve> {
        let lambdas: Vec<Complex64> = j.lambdas.iter().map(|p| c(p[0], p[1])).collect();
        let curve = Curve::new(lambdas)?;
        if curve.genus != j.genus {
            return Err(Error::InvalidCurve(format!(
                "genus {} does not match {} coefficients",
                j.genus,
                curve.lambdas.len()
            )));
        }
        Ok(curve)
    }
}

impl From<Curve> for CurveJson {
    fn from(c: Curve) -> CurveJson {
        CurveJson {
            genus: c.genus,
            lambdas: c.lambdas.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl Curve {
    /// Curve from `λ₀..λ_{2g+1}`; the leading coefficient must be exactly 1.
    pub fn new(lambdas: Vec<Complex64>) -> Result<Curve> {
        let genus = match lambdas.len() {
            4 => 1,
            6 => 2,
            n => {
                return Err(Error::InvalidCurve(format!(
                    "expected 4 or 6 coefficients (odd degree 3 or 5), got {n}"
                )))
            }
        };
        if lambdas[lambdas.len() - 1] != c(1.0, 0.0) {
            return Err(Error::InvalidCurve("leading coefficient must be exactly 1".into()));
        }
        if lambdas.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidCurve("non-finite coefficient".into()));
        }
        let roots = polished_roots(&lambdas)?;
        Ok(Curve {
            genus,
            lambdas,
            roots,
        })
    }

    /// Monic curve with the given simple roots.
    pub fn from_roots(roots: &[Complex64]) -> Result<Curve> {
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        *coeffs.last_mut().unwrap() = c(1.0, 0.0);
        Curve::new(coeffs)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    /// `λₖ`, zero beyond the degree.
    pub fn lambda(&self, k: usize) -> Complex64 {
        self.lambdas.get(k).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn degree(&self) -> usize {
        2 * self.genus + 1
    }

    pub fn eval_f(&self, x: Complex64) -> Complex64 {
        horner(&self.lambdas, x)
    }

    pub fn eval_df(&self, x: Complex64) -> Complex64 {
        let mut acc = c(0.0, 0.0);
        for k in (1..self.lambdas.len()).rev() {
            acc = acc * x + self.lambdas[k] * k as f64;
        }
        acc
    }

    /// Sum of the magnitudes of the terms of `f(x)`, the natural scale for
    /// residuals of `f`.
    pub fn term_scale(&self, x: Complex64) -> f64 {
        let r = x.norm();
        self.lambdas
            .iter()
            .enumerate()
            .map(|(k, l)| l.norm() * r.powi(k as i32))
            .sum()
    }

    /// Finite branch points in lexicographic order.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Distance from `x` to the nearest finite branch point.
    pub fn branch_distance(&self, x: Complex64) -> f64 {
        self.roots.iter().map(|e| (x - e).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn min_root_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in i + 1..self.roots.len() {
                m = m.min((self.roots[i] - self.roots[j]).norm());
            }
        }
        m
    }
}

pub fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * x + a)
}

fn polished_roots(lambdas: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = lambdas.len() - 1;
    let comp = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -lambdas[i]
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let schur = comp.schur();
    let (_, t) = schur.unpack();
    let mut roots: Vec<Complex64> = (0..d).map(|i| t[(i, i)]).collect();
    for r in roots.iter_mut() {
        *r = newton_polish(lambdas, *r);
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let mut sep = f64::INFINITY;
    for i in 0..d {
        for j in i + 1..d {
            sep = sep.min((roots[i] - roots[j]).norm());
        }
    }
    if sep < MIN_ROOT_SEPARATION {
        return Err(Error::DegenerateCurve(sep));
    }
    // A double root splits into two eigenvalues about √ε apart, so close
    // pairs are re-examined: a common zero of f and f' between them means
    // the curve is singular.
    let df: Vec<Complex64> = (1..=d).map(|k| lambdas[k] * k as f64).collect();
    for i in 0..d {
        for j in i + 1..d {
            let dist = (roots[i] - roots[j]).norm();
            if dist < 1e-5 {
                let m = newton_polish(&df, 0.5 * (roots[i] + roots[j]));
                let scale: f64 = lambdas
                    .iter()
                    .enumerate()
                    .map(|(k, l)| l.norm() * m.norm().powi(k as i32))
                    .sum();
                if horner(lambdas, m).norm() < 1e-12 * scale {
                    return Err(Error::DegenerateCurve(dist));
                }
            }
        }
    }
    Ok(roots)
}

fn newton_polish(lambdas: &[Complex64], mut z: Complex64) -> Complex64 {
    let df: Vec<Complex64> = (1..lambdas.len()).map(|k| lambdas[k] * k as f64).collect();
    let mut best = horner(lambdas, z).norm();
    for _ in 0..50 {
        let step = horner(lambdas, z) / horner(&df, z);
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        let next = z - step;
        let r = horner(lambdas, next).norm();
        if r < best {
            best = r;
            z = next;
        } else {
            break;
        }
        if step.norm() < 1e-17 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// A point of the curve: affine `(x, y)` or the single point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurvePoint {
    Infinity,
    Affine { x: Complex64, y: Complex64 },
}

impl CurvePoint {
    /// Affine point, rejected if `|y² − f(x)|` exceeds the on-curve tolerance.
    pub fn affine(curve: &Curve, x: Complex64, y: Complex64) -> Result<CurvePoint> {
        let fx = curve.eval_f(x);
        let residual = (y * y - fx).norm();
        if residual > TOL_ON_CURVE * (1.0 + fx.norm()) || !residual.is_finite() {
            return Err(Error::OffCurve {
                x: x.to_string(),
                y: y.to_string(),
                residual,
            });
        }
        Ok(CurvePoint::Affine { x, y })
    }

    /// Point above `x` on the principal sheet (`sign = ±1`).
    pub fn above(curve: &Curve, x: Complex64, sign: f64) -> CurvePoint {
        CurvePoint::Affine {
            x,
            y: sqrt_p(curve.eval_f(x)) * sign,
        }
    }

    /// Hyperelliptic involution `(x, y) ↦ (x, −y)`.
    pub fn involution(&self) -> CurvePoint {
        match *self {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine { x, y: -y },
        }
    }

    pub fn x(&self) -> Option<Complex64> {
        match *self {
            CurvePoint::Infinity => None,
            CurvePoint::Affine { x, .. } => Some(x),
        }
    }

    pub fn y(&self) -> Option<Complex64> {
        match *self {
            CurvePoint::Infinity => None,
            CurvePoint::Affine { y, .. } => Some(y),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchData {
    pub finite_branch_points: Vec<Complex64>,
    /// Cuts as index pairs into `finite_branch_points`; `None` is ∞.
    pub pairing: Vec<(usize, Option<usize>)>,
}

/// Branch points sorted by real then imaginary part, paired consecutively
/// with the last one joined to ∞.
pub fn branch_points(curve: &Curve) -> BranchData {
    let e = curve.roots().to_vec();
    let mut pairing = Vec::new();
    let mut k = 0;
    while k + 1 < e.len() {
        pairing.push((k, Some(k + 1)));
        k += 2;
    }
    pairing.push((e.len() - 1, None));
    BranchData {
        finite_branch_points: e,
        pairing,
    }
}

/// Continue `y` along the polygon through `path`, choosing at every step the
/// square root of `f(x)` closest to the previous value. Steps are bisected
/// until `|Δy|/|y| < 0.1`.
pub fn continue_y(curve: &Curve, path: &[Complex64], y_start: Complex64) -> Result<Complex64> {
    let Some(&x0) = path.first() else {
        return Ok(y_start);
    };
    let f0 = curve.eval_f(x0);
    if (y_start * y_start - f0).norm() > TOL_ON_CURVE * (1.0 + f0.norm()) {
        return Err(Error::OffCurve {
            x: x0.to_string(),
            y: y_start.to_string(),
            residual: (y_start * y_start - f0).norm(),
        });
    }
    let mut y = y_start;
    for w in path.windows(2) {
        y = continue_segment(curve, w[0], w[1], y, 0)?;
    }
    Ok(y)
}

fn continue_segment(
    curve: &Curve,
    a: Complex64,
    b: Complex64,
    ya: Complex64,
    depth: u32,
) -> Result<Complex64> {
    if a == b {
        return Ok(ya);
    }
    let r = sqrt_p(curve.eval_f(b));
    let (d1, d2) = ((r - ya).norm(), (r + ya).norm());
    let yb = if d1 <= d2 { r } else { -r };
    let small = (yb - ya).norm() < 0.1 * ya.norm().max(yb.norm());
    if small {
        if (d1 - d2).abs() <= 1e-10 * ya.norm().max(1e-300) {
            return Err(Error::SheetAmbiguity(format!(
                "both roots equidistant at x = {b}"
            )));
        }
        return Ok(yb);
    }
    if depth > 60 {
        return Err(Error::SheetAmbiguity(format!(
            "step from {a} to {b} does not resolve; path too close to a branch point"
        )));
    }
    let m = 0.5 * (a + b);
    let ym = continue_segment(curve, a, m, ya, depth + 1)?;
    continue_segment(curve, m, b, ym, depth + 1)
}

/// Deterministic curve from a seed: `2g + 1` roots in the disk of radius 3
/// with pairwise distance at least 0.5.
pub fn random_curve(seed: u64, genus: usize) -> Curve {
    let roots = random_roots(seed, genus);
    Curve::from_roots(&roots).expect("separated roots give a nonsingular curve")
}

/// The roots used by [`random_curve`], in sampling order.
pub fn random_roots(seed: u64, genus: usize) -> Vec<Complex64> {
    assert!(genus == 1 || genus == 2, "genus must be 1 or 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut roots: Vec<Complex64> = Vec::new();
    while roots.len() < 2 * genus + 1 {
        let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if z.norm() > 3.0 {
            continue;
        }
        if roots.iter().all(|r| (r - z).norm() >= 0.5) {
            roots.push(z);
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quintic(l: [f64; 5]) -> Curve {
        let mut v: Vec<Complex64> = l.iter().map(|&r| c(r, 0.0)).collect();
        v.push(c(1.0, 0.0));
        Curve::new(v).unwrap()
    }

    #[test]
    fn x5_minus_x_roots() {
        let cv = quintic([0.0, -1.0, 0.0, 0.0, 0.0]);
        let want = [c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)];
        for (r, w) in cv.roots().iter().zip(want) {
            assert!((r - w).norm() < 1e-13, "{r} vs {w}");
        }
    }

    #[test]
    fn rejects_non_monic_and_even() {
        assert!(Curve::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)]).is_err());
        assert!(Curve::new(vec![c(1.0, 0.0); 5]).is_err());
        // (x−1)²(x+1)
        assert!(matches!(
            Curve::new(vec![c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::DegenerateCurve(_))
        ));
    }

    #[test]
    fn fifth_power() {
        let cv = Curve::from_roots(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 1.0), c(-1.0, 0.5), c(0.0, -2.0)])
            .unwrap();
        assert_eq!(cv.eval_f(c(0.0, 0.0)), cv.lambda(0));
    }

    #[test]
    fn json_round_trip() {
        let cv = random_curve(4, 2);
        let s = serde_json::to_string(&cv).unwrap();
        assert!(s.starts_with("{\"genus\":2,\"lambdas\":[["));
        let back: Curve = serde_json::from_str(&s).unwrap();
        for (a, b) in back.lambdas().iter().zip(cv.lambdas()) {
            assert!((a - b).norm() <= 1e-15 * b.norm());
        }
    }

    #[test]
    fn pairing_layout() {
        let b = branch_points(&random_curve(2, 2));
        assert_eq!(b.pairing, vec![(0, Some(1)), (2, Some(3)), (4, None)]);
        let b = branch_points(&random_curve(2, 1));
        assert_eq!(b.pairing, vec![(0, Some(1)), (2, None)]);
    }

    #[test]
    fn constant_path() {
        let cv = random_curve(3, 2);
        let x = c(0.3, 0.2);
        let y = sqrt_p(cv.eval_f(x));
        assert_eq!(continue_y(&cv, &[x, x, x], y).unwrap(), y);
    }
}
