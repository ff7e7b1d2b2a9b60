//! Homology basis and period matrices.
//!
//! Cycles are built from lifts of straight segments between finite branch
//! points: the segment `a → b` lifted to one sheet and back on the other is a
//! closed cycle `c_ab`, and the `2g` edges of a spanning tree on the finite
//! branch points give a basis of `H₁`. Intersection numbers of these edge
//! cycles are read off from their tangents in the local parameter
//! `s = √(x − e)` at shared endpoints, and a symplectic basis is extracted
//! by Gram–Schmidt over ℤ.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curve::{branch_points, sqrt_p, BranchData, Curve};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::quadrature::gauss_chebyshev;
use crate::report::ResidualReport;

const QUAD_START: usize = 32;
const QUAD_CAP: usize = 1 << 14;
const QUAD_TOL: f64 = 1e-11;
const QUAD_FAIL: f64 = 1e-8;
const COND_MAX: f64 = 1e8;

/// The differentials `du₁ = dx/2y`, `du₂ = x dx/2y` and their second-kind
/// partners `dr₁`, `dr₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferentialKind {
    First1,
    First2,
    Second1,
    Second2,
}

impl DifferentialKind {
    /// Numerator polynomial (coefficients of `1, x, x², …`) over `2y`.
    ///
    /// The second-kind numerators are `Σ_{k=j}^{2g+1−j} (k+1−j) λ_{k+1+j} xᵏ`,
    /// which for genus two gives `λ₃x + 2λ₄x² + 3x³` and `x²`, and for genus
    /// one gives `x`.
    pub fn numerator(&self, curve: &Curve) -> Vec<Complex64> {
        let g = curve.genus();
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self {
            DifferentialKind::First1 => vec![one],
            DifferentialKind::First2 => vec![z, one],
            DifferentialKind::Second1 | DifferentialKind::Second2 => {
                let j = if *self == DifferentialKind::Second1 { 1 } else { 2 };
                let mut p = vec![z; 2 * g + 2];
                for k in j..=(2 * g + 1 - j) {
                    p[k] += curve.lambda(k + 1 + j) * (k + 1 - j) as f64;
                }
                p
            }
        }
    }

    pub fn first_kind(g: usize) -> Vec<DifferentialKind> {
        [DifferentialKind::First1, DifferentialKind::First2][..g].to_vec()
    }

    pub fn second_kind(g: usize) -> Vec<DifferentialKind> {
        [DifferentialKind::Second1, DifferentialKind::Second2][..g].to_vec()
    }
}

/// A straight segment between two finite branch points together with the
/// square-root branch used on its "upper" lift.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    a: Complex64,
    b: Complex64,
    /// Other roots mapped to the segment coordinate `t ∈ [−1, 1]`.
    u: Vec<Complex64>,
    /// `y(t) = c·√(1−t²)·Π √(1 − t/uₖ)` on the upper lift.
    c: Complex64,
}

impl Edge {
    fn new(e: &[Complex64], from: usize, to: usize) -> Edge {
        let (a, b) = (e[from], e[to]);
        let half = 0.5 * (b - a);
        let u: Vec<Complex64> = e
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != from && *k != to)
            .map(|(_, ek)| (2.0 * ek - a - b) / (b - a))
            .collect();
        let mut c2 = -half.powi(e.len() as i32);
        for uk in &u {
            c2 *= -uk;
        }
        Edge {
            from,
            to,
            a,
            b,
            u,
            c: sqrt_p(c2),
        }
    }

    fn x(&self, t: f64) -> Complex64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * t
    }

    fn g(&self, t: f64) -> Complex64 {
        self.u
            .iter()
            .map(|uk| sqrt_p(1.0 - t / uk))
            .product::<Complex64>()
    }

    /// `y` on the upper lift at parameter `t ∈ (−1, 1)`.
    pub fn y(&self, t: f64) -> Complex64 {
        self.c * (1.0 - t * t).sqrt() * self.g(t)
    }

    pub fn point(&self, t: f64) -> Complex64 {
        self.x(t)
    }

    /// Direction of travel of the cycle through the lift of `e_from`, in the
    /// local parameter `s` with `x − e = s²`, `y = K s + …`.
    fn tangent_at_start(&self, k: Complex64) -> Complex64 {
        self.c * self.g(-1.0) / k
    }

    fn tangent_at_end(&self, k: Complex64) -> Complex64 {
        -(self.c * self.g(1.0) / k)
    }

    /// Distance from the segment to the nearest other branch point,
    /// relative to the segment length.
    fn margin(&self) -> f64 {
        self.u
            .iter()
            .map(|uk| {
                let t = uk.re.clamp(-1.0, 1.0);
                0.5 * (uk - t).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `∫_a^b xᵏ dx / 2y` on the upper lift for `k = 0..n`, by Gauss–Chebyshev
    /// with node doubling.
    fn monomial_integrals(&self, n: usize) -> Result<Vec<Complex64>> {
        let half = 0.5 * (self.b - self.a);
        let pre = half / (2.0 * self.c);
        let eval = |nodes: usize| -> Vec<Complex64> {
            (0..n)
                .map(|k| pre * gauss_chebyshev(nodes, |t| self.x(t).powi(k as i32) / self.g(t)))
                .collect()
        };
        let mut nodes = QUAD_START;
        let mut prev = eval(nodes);
        loop {
            nodes *= 2;
            let cur = eval(nodes);
            let scale = cur.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let diff = cur
                .iter()
                .zip(&prev)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
                / scale.max(1e-300);
            if diff < QUAD_TOL {
                return Ok(cur);
            }
            if nodes >= QUAD_CAP {
                if diff > QUAD_FAIL {
                    return Err(Error::NoConvergence(diff));
                }
                return Ok(cur);
            }
            prev = cur;
        }
    }
}

/// Symplectic basis as integer combinations of edge cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct HomologyBasis {
    pub genus: usize,
    pub edges: Vec<Edge>,
    pub alpha_cycles: Vec<Vec<i64>>,
    pub beta_cycles: Vec<Vec<i64>>,
    /// Intersection numbers of the edge cycles.
    pub edge_intersections: Vec<Vec<i64>>,
}

impl HomologyBasis {
    /// Intersection matrix of `(α₁..α_g, β₁..β_g)`.
    pub fn intersection_matrix(&self) -> Vec<Vec<i64>> {
        let cycles: Vec<&Vec<i64>> = self.alpha_cycles.iter().chain(&self.beta_cycles).collect();
        cycles
            .iter()
            .map(|p| cycles.iter().map(|q| pair(&self.edge_intersections, p, q)).collect())
            .collect()
    }

    /// Same basis with the orientation of `α_i` reversed.
    pub fn with_alpha_reversed(&self, i: usize) -> HomologyBasis {
        let mut h = self.clone();
        for c in h.alpha_cycles[i].iter_mut() {
            *c = -*c;
        }
        h
    }
}

fn pair(k: &[Vec<i64>], p: &[i64], q: &[i64]) -> i64 {
    let mut s = 0;
    for i in 0..p.len() {
        for j in 0..q.len() {
            s += p[i] * k[i][j] * q[j];
        }
    }
    s
}

/// Edges of the chain through the branch points in their sorted order.
fn chain_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n - 1).map(|k| (k, k + 1)).collect()
}

/// Euclidean minimum spanning tree (Prim); its edges never cross.
fn mst_edges(e: &[Complex64]) -> Vec<(usize, usize)> {
    let n = e.len();
    let mut inside = vec![false; n];
    inside[0] = true;
    let mut out = Vec::new();
    for _ in 1..n {
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| inside[i]) {
            for j in (0..n).filter(|&j| !inside[j]) {
                let d = (e[i] - e[j]).norm();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        inside[best.2] = true;
        out.push((best.1.min(best.2), best.1.max(best.2)));
    }
    out.sort();
    out
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

const EDGE_MARGIN: f64 = 1e-3;

fn layout_ok(e: &[Complex64], edges: &[(usize, usize)]) -> bool {
    for (i, &(a, b)) in edges.iter().enumerate() {
        if Edge::new(e, a, b).margin() < EDGE_MARGIN {
            return false;
        }
        for &(c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(e[a], e[b], e[c], e[d]) {
                return false;
            }
        }
    }
    true
}

/// Build a symplectic homology basis. The chain through the sorted branch
/// points is tried first, then the minimum spanning tree.
pub fn build_homology(curve: &Curve, branch: &BranchData) -> Result<HomologyBasis> {
    let e = &branch.finite_branch_points;
    let g = curve.genus();
    let mut layout = chain_edges(e.len());
    if !layout_ok(e, &layout) {
        log::debug!("chain layout rejected, trying the spanning tree");
        layout = mst_edges(e);
        if !layout_ok(e, &layout) {
            return Err(Error::CutCrossing(
                "neither the sorted chain nor the spanning tree gives clean segments".into(),
            ));
        }
    }
    let edges: Vec<Edge> = layout.iter().map(|&(a, b)| Edge::new(e, a, b)).collect();
    let k: Vec<Complex64> = e.iter().map(|&r| sqrt_p(curve.eval_df(r))).collect();

    let n = edges.len();
    let mut inter = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut s = 0;
            for v in [edges[i].from, edges[i].to] {
                if v != edges[j].from && v != edges[j].to {
                    continue;
                }
                let t1 = tangent(&edges[i], v, k[v]);
                let t2 = tangent(&edges[j], v, k[v]);
                let im = (t1.conj() * t2).im;
                s += if im > 0.0 { 1 } else { -1 };
            }
            inter[i][j] = s;
        }
    }
    let (alpha, beta) = symplectic_basis(&inter, g)?;
    Ok(HomologyBasis {
        genus: g,
        edges,
        alpha_cycles: alpha,
        beta_cycles: beta,
        edge_intersections: inter,
    })
}

fn tangent(edge: &Edge, v: usize, k: Complex64) -> Complex64 {
    if edge.from == v {
        edge.tangent_at_start(k)
    } else {
        edge.tangent_at_end(k)
    }
}

fn symplectic_basis(k: &[Vec<i64>], g: usize) -> Result<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let n = k.len();
    let mut pool: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as i64).collect())
        .collect();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for _ in 0..g {
        let mut found = None;
        'search: for i in 0..pool.len() {
            for j in i + 1..pool.len() {
                let v = pair(k, &pool[i], &pool[j]);
                if v == 1 || v == -1 {
                    found = Some((i, j, v));
                    break 'search;
                }
            }
        }
        let Some((i, j, v)) = found else {
            return Err(Error::CutCrossing("intersection form is not unimodular".into()));
        };
        let a = pool[i].clone();
        let b: Vec<i64> = pool[j].iter().map(|x| x * v).collect();
        pool.remove(j);
        pool.remove(i);
        for w in pool.iter_mut() {
            let kwa = pair(k, w, &a);
            let kwb = pair(k, w, &b);
            for t in 0..n {
                w[t] += kwa * b[t] - kwb * a[t];
            }
        }
        alpha.push(a);
        beta.push(b);
    }
    Ok((alpha, beta))
}

/// `∮ numerator(x) dx / 2y` over an integer combination of edge cycles.
pub fn integrate_differential(
    curve: &Curve,
    basis: &HomologyBasis,
    kind: DifferentialKind,
    cycle: &[i64],
) -> Result<Complex64> {
    let num = kind.numerator(curve);
    let mut total = Complex64::new(0.0, 0.0);
    for (edge, &m) in basis.edges.iter().zip(cycle) {
        if m == 0 {
            continue;
        }
        let ints = edge.monomial_integrals(num.len())?;
        let v: Complex64 = num.iter().zip(&ints).map(|(c, i)| c * i).sum();
        total += 2.0 * v * m as f64;
    }
    Ok(total)
}

/// Period matrices with the half-period convention: `2ω′ = (∮_{α_j} du_i)`,
/// `2ω″ = (∮_{β_j} du_i)`, and likewise `η′, η″` from `dr_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodData {
    #[serde(with = "cmat_serde")]
    pub omega1: CMat,
    #[serde(with = "cmat_serde")]
    pub omega2: CMat,
    #[serde(with = "cmat_serde")]
    pub eta1: CMat,
    #[serde(with = "cmat_serde")]
    pub eta2: CMat,
    #[serde(with = "cmat_serde")]
    pub tau: CMat,
    #[serde(default)]
    pub gamma_sq: Option<[f64; 2]>,
}

impl PeriodData {
    pub fn genus(&self) -> usize {
        self.omega1.nrows()
    }

    /// Assemble from the four half-period matrices, forming `τ = ω′⁻¹ω″`.
    pub fn from_halves(omega1: CMat, omega2: CMat, eta1: CMat, eta2: CMat) -> Result<PeriodData> {
        let cond = linalg::condition_number(&omega1);
        if !(cond <= COND_MAX) {
            return Err(Error::IllConditioned(format!("cond(ω′) = {cond:.3e}")));
        }
        let inv = linalg::inverse(&omega1)
            .ok_or_else(|| Error::IllConditioned("ω′ is singular".into()))?;
        let tau = &inv * &omega2;
        Ok(PeriodData {
            omega1,
            omega2,
            eta1,
            eta2,
            tau,
            gamma_sq: None,
        })
    }

    /// `η′ᵗω″ − ω′ᵗη″`. With `[αᵢ, βⱼ] = δᵢⱼ` (so that Im τ ≻ 0) and the
    /// differentials above, the bilinear relation for `du` against `dr`
    /// makes this `−(πi/2)·I`.
    pub fn legendre_matrix(&self) -> CMat {
        self.eta1.transpose() * &self.omega2 - self.omega1.transpose() * &self.eta2
    }

    pub fn legendre_residual(&self) -> f64 {
        let g = self.genus();
        let target = linalg::identity(g) * Complex64::new(0.0, -PI / 2.0);
        linalg::max_abs(&(self.legendre_matrix() - target)) / (PI / 2.0)
    }

    pub fn tau_asymmetry(&self) -> f64 {
        linalg::max_abs(&(&self.tau - self.tau.transpose()))
    }

    pub fn min_imag_eigenvalue(&self) -> f64 {
        linalg::imag_eigenvalues(&self.tau)[0]
    }

    /// `(2ω′)⁻¹`, the map from `u` to the theta argument.
    pub fn theta_map(&self) -> CMat {
        linalg::inverse(&(&self.omega1 * Complex64::new(2.0, 0.0))).expect("ω′ checked invertible")
    }

    /// `η′ω′⁻¹`.
    pub fn kappa(&self) -> CMat {
        &self.eta1 * linalg::inverse(&self.omega1).expect("ω′ checked invertible")
    }
}

/// All period data of a curve from the default homology basis.
pub fn compute_periods(curve: &Curve) -> Result<PeriodData> {
    let branch = branch_points(curve);
    let basis = build_homology(curve, &branch)?;
    periods_in_basis(curve, &basis)
}

pub fn periods_in_basis(curve: &Curve, basis: &HomologyBasis) -> Result<PeriodData> {
    let g = curve.genus();
    let deg = 2 * g + 2;
    // one quadrature per edge serves every differential
    let mut per_edge = Vec::new();
    for edge in &basis.edges {
        per_edge.push(edge.monomial_integrals(deg)?);
    }
    let cycle_integral = |num: &[Complex64], cycle: &[i64]| -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (ints, &m) in per_edge.iter().zip(cycle) {
            let v: Complex64 = num.iter().zip(ints).map(|(c, i)| c * i).sum();
            total += 2.0 * v * m as f64;
        }
        total
    };
    let half_matrix = |kinds: &[DifferentialKind], cycles: &[Vec<i64>]| -> CMat {
        DMatrix::from_fn(g, g, |i, j| 0.5 * cycle_integral(&kinds[i].numerator(curve), &cycles[j]))
    };
    let first = DifferentialKind::first_kind(g);
    let second = DifferentialKind::second_kind(g);
    PeriodData::from_halves(
        half_matrix(&first, &basis.alpha_cycles),
        half_matrix(&first, &basis.beta_cycles),
        half_matrix(&second, &basis.alpha_cycles),
        half_matrix(&second, &basis.beta_cycles),
    )
}

/// The three sanity records: symmetry of τ, positivity of Im τ, and the
/// Legendre relation.
pub fn check_period_sanity(p: &PeriodData, inputs: &str) -> Vec<ResidualReport> {
    let lmin = p.min_imag_eigenvalue();
    let pd_residual = if lmin > 0.0 { 1.0 / lmin } else { f64::INFINITY };
    vec![
        ResidualReport::gating("periods", "tau-symmetric", "τ = τᵗ", inputs, p.tau_asymmetry(), 1e-9),
        ResidualReport::gating(
            "periods",
            "tau-imaginary-positive",
            "1/λmin(Im τ) ≤ 1e6",
            inputs,
            pd_residual,
            1e6,
        ),
        ResidualReport::gating(
            "periods",
            "legendre-relation",
            "η′ᵗω″ − ω′ᵗη″ = −(πi/2)·I",
            inputs,
            p.legendre_residual(),
            1e-8,
        ),
    ]
}

mod cmat_serde {
    use super::CMat;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("period matrix must be square"));
        }
        Ok(CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::random_curve;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn standard_symplectic_form() {
        for seed in 0..8 {
            for g in [1, 2] {
                let cv = random_curve(seed, g);
                let h = build_homology(&cv, &branch_points(&cv)).unwrap();
                let m = h.intersection_matrix();
                for i in 0..2 * g {
                    for j in 0..2 * g {
                        let want = if j == i + g {
                            1
                        } else if i == j + g {
                            -1
                        } else {
                            0
                        };
                        assert_eq!(m[i][j], want, "seed {seed} genus {g}: {m:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn reversing_alpha_flips_its_row() {
        let cv = random_curve(5, 2);
        let h = build_homology(&cv, &branch_points(&cv)).unwrap();
        let m = h.intersection_matrix();
        let r = h.with_alpha_reversed(0).intersection_matrix();
        for j in 0..4 {
            assert_eq!(r[0][j], -m[0][j]);
        }
    }

    #[test]
    fn second_kind_numerators() {
        let cv = random_curve(1, 2);
        let n1 = DifferentialKind::Second1.numerator(&cv);
        assert_eq!(n1[1], cv.lambda(3));
        assert_eq!(n1[2], cv.lambda(4) * 2.0);
        assert_eq!(n1[3], c(3.0, 0.0));
        let n2 = DifferentialKind::Second2.numerator(&cv);
        assert_eq!(n2[2], c(1.0, 0.0));
        let e = random_curve(1, 1);
        assert_eq!(DifferentialKind::Second1.numerator(&e)[1], c(1.0, 0.0));
    }

    #[test]
    fn period_invariants_random_curves() {
        for seed in 1..4 {
            let p = compute_periods(&random_curve(seed, 2)).unwrap();
            assert!(p.tau_asymmetry() < 1e-9);
            assert!(p.min_imag_eigenvalue() > 1e-6);
            assert!(p.legendre_residual() < 1e-8, "{}", p.legendre_residual());
        }
    }

    #[test]
    fn sanity_records() {
        let p = compute_periods(&random_curve(2, 2)).unwrap();
        let r = check_period_sanity(&p, "seed=2");
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.passed()));
        let mut bad = p.clone();
        bad.omega2[(0, 0)] += c(1e-3, 0.0);
        let r = check_period_sanity(&bad, "seed=2");
        assert!(!r[2].passed());
    }

    #[test]
    fn json_round_trip() {
        let p = compute_periods(&random_curve(3, 2)).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: PeriodData = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
