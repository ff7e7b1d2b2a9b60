//! ψ-function sequences and the recursions they satisfy.
//!
//! All sequences are stored as [`LogValue`]s: `σ(k·u)` grows like
//! `exp(c·k²)`. Negative indices come from the oddness of σ.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::abel::{self, JacPoint};
use crate::curve::CurvePoint;
use crate::error::{Error, Result};
use crate::logval::LogValue;
use crate::multi;
use crate::sigma::{self, SigmaContext, WpJet, NEAR_DIVISOR};

/// Default second-point abscissae for the limit probes.
pub const LIMIT_X2: [f64; 7] = [1e2, 1e3, 1e4, 1e6, 1e8, 1e10, 1e12];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// `Ψ_n = σ(nu)/σ₂(u)^{n²}` at a generic Jacobian point.
    PsiOnJacobian,
    /// `ψ_n`, the same quotient at `u = ι(P)`.
    PsiOnCurve,
    /// `Φ_n = σ(nu)/σ(u)^{n²}`.
    PhiOnJacobian,
    /// Genus one, `σ(nu)/σ(u)^{n²}`.
    Elliptic,
}

/// `value(k)` for `0 ≤ k ≤ N`, cached once per base point.
#[derive(Clone, Debug)]
pub struct PsiSequence {
    pub flavor: Flavor,
    pub base: JacPoint,
    pub point: Option<CurvePoint>,
    values: Vec<LogValue>,
    // ln|value| ≈ a + b·k², used as the size of entries that vanish
    proxy: (f64, f64),
}

impl PsiSequence {
    fn build(
        ctx: &SigmaContext,
        base: &JacPoint,
        denom: LogValue,
        n_max: usize,
        flavor: Flavor,
        point: Option<CurvePoint>,
    ) -> Result<Self> {
        if n_max < 3 {
            return Err(Error::InvalidArgument(format!("sequence length {n_max} < 3")));
        }
        let mut values = Vec::with_capacity(n_max + 1);
        for k in 0..=n_max {
            let s = ctx.sigma_log(&base.scale(k as f64))?;
            let d = denom.powi((k * k) as i64);
            values.push(s.div(&d));
        }
        if matches!(flavor, Flavor::Elliptic | Flavor::PhiOnJacobian) {
            values[1] = LogValue::ONE;
        }
        let (l2, l3) = (values[2].log_abs(), values[3].log_abs());
        let b = (l3 - l2) / 5.0;
        Ok(PsiSequence {
            flavor,
            base: base.clone(),
            point,
            values,
            proxy: (l2 - 4.0 * b, b),
        })
    }

    pub fn max_index(&self) -> i64 {
        self.values.len() as i64 - 1
    }

    pub fn log_value(&self, k: i64) -> LogValue {
        let v = self.values[k.unsigned_abs() as usize];
        if k < 0 {
            v.neg()
        } else {
            v
        }
    }

    pub fn value(&self, k: i64) -> Complex64 {
        self.log_value(k).to_complex()
    }

    /// Size used for entry `k` when measuring a residual: entries that
    /// vanish identically are replaced by the quadratic fit through k = 2, 3.
    fn scale_log(&self, k: i64) -> f64 {
        let k = k.abs();
        let actual = self.log_value(k).log_abs();
        let vanishing = k == 0 || (k == 1 && self.flavor == Flavor::PsiOnCurve);
        if vanishing {
            actual.max(self.proxy.0 + self.proxy.1 * (k * k) as f64)
        } else {
            actual
        }
    }

    /// Size of `ψ_k` relative to the quadratic trend of the sequence.
    pub fn relative_size(&self, k: i64) -> f64 {
        let k = k.abs();
        (self.log_value(k).log_abs() - self.proxy.0 - self.proxy.1 * (k * k) as f64).exp()
    }

    /// `|Σ cᵢ Π ψ_k|` divided by the largest monomial size.
    pub fn relative_sum(&self, terms: &[(f64, Vec<i64>)]) -> f64 {
        let sizes: Vec<f64> = terms
            .iter()
            .map(|(_, ks)| ks.iter().map(|&k| self.scale_log(k)).sum())
            .collect();
        let shift = sizes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return 0.0;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (c, ks) in terms {
            let p = ks
                .iter()
                .fold(LogValue::ONE, |acc, &k| acc.mul(&self.log_value(k)));
            sum += *c * p.scaled(shift);
        }
        sum.norm()
    }

    /// `Π ψ_{num} / Π ψ_{den}` as an ordinary complex number.
    pub fn ratio(&self, num: &[i64], den: &[i64]) -> Complex64 {
        let n = num
            .iter()
            .fold(LogValue::ONE, |acc, &k| acc.mul(&self.log_value(k)));
        let d = den
            .iter()
            .fold(LogValue::ONE, |acc, &k| acc.mul(&self.log_value(k)));
        n.div(&d).to_complex()
    }

    fn need(&self, k: i64) -> Result<()> {
        if k.abs() > self.max_index() {
            return Err(Error::InvalidArgument(format!(
                "index {k} beyond cached length {}",
                self.max_index()
            )));
        }
        Ok(())
    }
}

fn require_genus(ctx: &SigmaContext, g: usize) -> Result<()> {
    if ctx.genus() != g {
        return Err(Error::InvalidArgument(format!(
            "operation needs genus {g}, curve has genus {}",
            ctx.genus()
        )));
    }
    Ok(())
}

fn sigma2_checked(ctx: &SigmaContext, u: &JacPoint) -> Result<LogValue> {
    let d = ctx.sigma_derivs_log(u)?;
    let s2 = d[multi::position([0, 1])];
    let big = [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
        .iter()
        .map(|m| d[multi::position(*m)].log_abs())
        .fold(f64::NEG_INFINITY, f64::max);
    if s2.log_abs() < big + (1e-8f64).ln() {
        return Err(Error::DegeneratePoint(format!(
            "σ₂ vanishes at u (|σ₂|/scale = {:.3e})",
            (s2.log_abs() - big).exp()
        )));
    }
    Ok(s2)
}

/// `ψ_k(u)`, `0 ≤ k ≤ n_max`, at `u = ι(P)`.
pub fn psi_on_curve(ctx: &SigmaContext, p: &CurvePoint, n_max: usize) -> Result<PsiSequence> {
    require_genus(ctx, 2)?;
    let Some(x) = p.x() else {
        return Err(Error::DegeneratePoint("ψ is not defined at infinity".into()));
    };
    if ctx.curve.branch_distance(x) < 1e-6 {
        return Err(Error::DegeneratePoint(format!("y ≈ 0 at x = {x}")));
    }
    let u = abel::embed(&ctx.curve, p)?;
    psi_on_curve_at(ctx, p, &u, n_max)
}

/// Same as [`psi_on_curve`] with a caller-supplied representative `u` of
/// `ι(P)`, e.g. the image along another path.
pub fn psi_on_curve_at(ctx: &SigmaContext, p: &CurvePoint, u: &JacPoint, n_max: usize) -> Result<PsiSequence> {
    require_genus(ctx, 2)?;
    let s2 = sigma2_checked(ctx, u)?;
    PsiSequence::build(ctx, u, s2, n_max, Flavor::PsiOnCurve, Some(*p))
}

/// `ψ_n(P)` for a single index.
pub fn psi_g2(ctx: &SigmaContext, p: &CurvePoint, n: usize) -> Result<Complex64> {
    Ok(psi_on_curve(ctx, p, n.max(3))?.value(n as i64))
}

/// `Ψ_k(u)` at a Jacobian point.
pub fn psi_on_jacobian(ctx: &SigmaContext, u: &JacPoint, n_max: usize) -> Result<PsiSequence> {
    require_genus(ctx, 2)?;
    let s2 = sigma2_checked(ctx, u)?;
    PsiSequence::build(ctx, u, s2, n_max, Flavor::PsiOnJacobian, None)
}

/// `Φ_k(u) = σ(ku)/σ(u)^{k²}`.
pub fn phi_on_jacobian(ctx: &SigmaContext, u: &JacPoint, n_max: usize) -> Result<PsiSequence> {
    require_genus(ctx, 2)?;
    let r = ctx.divisor_ratio(u)?;
    if r < NEAR_DIVISOR {
        return Err(Error::NearDivisor(r));
    }
    PsiSequence::build(ctx, u, ctx.sigma_log(u)?, n_max, Flavor::PhiOnJacobian, None)
}

/// Genus-one `ψ_k(u) = σ(ku)/σ(u)^{k²}`.
pub fn psi_elliptic_sequence(ctx: &SigmaContext, u: &JacPoint, n_max: usize) -> Result<PsiSequence> {
    require_genus(ctx, 1)?;
    let (r, _) = abel::reduce_lattice(&ctx.periods, u);
    if r.norm() < 1e-6 {
        return Err(Error::NearLattice(r.norm()));
    }
    PsiSequence::build(ctx, u, ctx.sigma_log(u)?, n_max, Flavor::Elliptic, None)
}

pub fn psi_elliptic(ctx: &SigmaContext, u: &JacPoint, n: usize) -> Result<Complex64> {
    Ok(psi_elliptic_sequence(ctx, u, n.max(3))?.value(n as i64))
}

/// `ψ_{n+m}ψ_{m−n} − (ψ_{m−1}ψ_{m+1}ψ_n² − ψ_m²ψ_{n+1}ψ_{n−1})`, relative
/// to the largest of its three monomials. Also used for Φ.
pub fn elliptic_recursion_residual(seq: &PsiSequence, m: i64, n: i64) -> Result<f64> {
    seq.need(m + n)?;
    seq.need(m + 1)?;
    Ok(seq.relative_sum(&[
        (1.0, vec![n + m, m - n]),
        (-1.0, vec![m - 1, n, m + 1, n]),
        (1.0, vec![m, n + 1, m, n - 1]),
    ]))
}

/// Residual of the same pattern on a Φ sequence; a diagnostic only.
pub fn phi_residual(seq: &PsiSequence, m: i64, n: i64) -> Result<f64> {
    elliptic_recursion_residual(seq, m, n)
}

/// Genus-one addition forms:
/// `ψ_{n+1}ψ_{n−1}/ψ_n² = −(℘(nu) − ℘(u))` and
/// `ψ_{m+n}ψ_{m−n}/(ψ_m²ψ_n²) = −(℘(mu) − ℘(nu))`, each relative to the
/// size of the ℘ values involved.
pub fn elliptic_addition_residuals(ctx: &SigmaContext, seq: &PsiSequence, m: i64, n: i64) -> Result<(f64, f64)> {
    seq.need(m + n)?;
    let wp = |k: i64| -> Result<Complex64> { Ok(ctx.wp_jet(&seq.base.scale(k as f64))?.wp(&[1, 1])) };
    let (p1, pn, pm) = (wp(1)?, wp(n)?, wp(m)?);
    let lhs4 = seq.ratio(&[n + 1, n - 1], &[n, n]);
    let r4 = (lhs4 + (pn - p1)).norm() / (pn.norm() + p1.norm());
    let lhs5 = seq.ratio(&[m + n, m - n], &[m, m, n, n]);
    let r5 = (lhs5 + (pm - pn)).norm() / (pm.norm() + pn.norm());
    Ok((r4, r5))
}

/// The entry `(i, j)` of the 3×3 matrix as a pair of ψ indices.
fn entry(m: i64, n: i64, i: i64, j: i64) -> [i64; 2] {
    [m - 2 + i + j, n + j - i]
}

/// `ψ₂²ψ_mψ_nψ_{n+m}ψ_{m−n} − det[ψ_{m−2+i+j}ψ_{n+j−i}]`, relative to the
/// largest of the seven monomials.
pub fn recursion_residual_g2(seq: &PsiSequence, m: i64, n: i64) -> Result<f64> {
    if !(m >= n && n >= 0) {
        return Err(Error::InvalidArgument(format!("need m ≥ n ≥ 0, got m={m}, n={n}")));
    }
    seq.need(m + n)?;
    seq.need(m + 2)?;
    let mut terms = vec![(1.0, vec![2, 2, m, n, n + m, m - n])];
    for (perm, sign) in [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
        ([1, 0, 2], -1.0),
    ] {
        let mut ks = Vec::with_capacity(6);
        for (i, &j) in perm.iter().enumerate() {
            ks.extend_from_slice(&entry(m, n, i as i64, j));
        }
        terms.push((-sign, ks));
    }
    Ok(seq.relative_sum(&terms))
}

/// Ξ₃ on the Jacobian by its ψ-definition and by the closed form in `Q`.
#[derive(Clone, Debug)]
pub struct Xi3Pair {
    pub definition: Complex64,
    pub closed: Complex64,
    /// The closed form with the signs of the `Q·Q₁₂` and `Q·Q₂₂` terms as
    /// originally printed.
    pub printed: Complex64,
    pub scale: f64,
}

impl Xi3Pair {
    pub fn residual(&self) -> f64 {
        (self.definition - self.closed).norm() / self.scale
    }

    pub fn printed_residual(&self) -> f64 {
        (self.definition - self.printed).norm() / self.scale
    }
}

/// `(Ψ_{k−1}²Ψ_{k+2} + Ψ_{k+1}²Ψ_{k−2}) / Ψ_k³` and the size of its terms.
fn xi3_ratio(seq: &PsiSequence, k: i64) -> (Complex64, f64) {
    let a = seq.ratio(&[k - 1, k - 1, k + 2], &[k, k, k]);
    let b = seq.ratio(&[k + 1, k + 1, k - 2], &[k, k, k]);
    (a + b, a.norm().max(b.norm()))
}

pub fn xi3_jacobian(ctx: &SigmaContext, u: &JacPoint, m: i64) -> Result<Xi3Pair> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("m = {m} < 1")));
    }
    let seq = psi_on_jacobian(ctx, u, (m + 2).max(3) as usize)?;
    let (definition, size) = xi3_ratio(&seq, m);
    let a = ctx.wp_jet(&u.scale(m as f64))?;
    let b = ctx.wp_jet(u)?;
    let q = sigma::q_from_jets(&a, &b);
    let d = |l: &[u8]| sigma::q_deriv_from_jets(&a, &b, l);
    let (q1, q2, q11, q12, q22) = (d(&[1]), d(&[2]), d(&[1, 1]), d(&[1, 2]), d(&[2, 2]));
    let (p12, p22) = (b.wp(&[1, 2]), b.wp(&[2, 2]));
    let tail = -q1 * q1 - p22 * q1 * q2 + p12 * q2 * q2;
    let psi1_6 = seq.log_value(1).powi(6);
    let closed = psi1_6
        .scale(q * (2.0 * q * q + q11 + p22 * q12 - p12 * q22) + tail)
        .to_complex();
    let printed = psi1_6
        .scale(q * (2.0 * q * q + q11 - p22 * q12 + p12 * q22) + tail)
        .to_complex();
    Ok(Xi3Pair {
        definition,
        closed,
        printed,
        scale: size.max(closed.norm()),
    })
}

/// `Ψ_{m+n}Ψ_{m−n}/(Ψ_n²Ψ_m²) − Q(mu, nu)` relative to `|Q|`.
pub fn psi_addition_residual(ctx: &SigmaContext, seq: &PsiSequence, m: i64, n: i64) -> Result<f64> {
    seq.need(m + n)?;
    let lhs = seq.ratio(&[m + n, m - n], &[n, n, m, m]);
    let q = ctx.q_fn(&seq.base.scale(m as f64), &seq.base.scale(n as f64))?;
    Ok((lhs - q).norm() / q.norm().max(lhs.norm()))
}

/// Limits of `Ψ₁²Q`, `Ψ₁²Q_i`, `Ψ₁²Q_ij` at `(mu, u)` as `u → ι(P)`.
#[derive(Clone, Copy, Debug)]
pub struct QLimits {
    pub q: Complex64,
    pub q1: Complex64,
    pub q2: Complex64,
    pub q11: Complex64,
    pub q12: Complex64,
    pub q22: Complex64,
}

impl QLimits {
    /// `q = x² − ℘₁₂ − x℘₂₂`, `q_i = −(℘₁₂ᵢ + x℘₂₂ᵢ)`, from the jet at `mu`.
    pub fn from_jet(jet: &WpJet, x: Complex64) -> Self {
        let f = |a: &[u8]| {
            let mut l12 = vec![1u8, 2];
            l12.extend_from_slice(a);
            let mut l22 = vec![2u8, 2];
            l22.extend_from_slice(a);
            -(jet.wp(&l12) + x * jet.wp(&l22))
        };
        QLimits {
            q: x * x + f(&[]),
            q1: f(&[1]),
            q2: f(&[2]),
            q11: f(&[1, 1]),
            q12: f(&[1, 2]),
            q22: f(&[2, 2]),
        }
    }

    /// `q(2q² + q₁₂ + xq₂₂) − q₂(q₁ + xq₂)`.
    pub fn xi3(&self, x: Complex64) -> Complex64 {
        self.q * (2.0 * self.q * self.q + self.q12 + x * self.q22) - self.q2 * (self.q1 + x * self.q2)
    }

    /// The same combination with `q`, `q_i`, `q_ij` of opposite sign and
    /// `q(2q² − q₁₂ − xq₂₂) − q₂(q₁ + xq₂)` as the outer form.
    pub fn xi3_printed(&self, x: Complex64) -> Complex64 {
        let (q, q1, q2, q12, q22) = (-self.q, -self.q1, -self.q2, -self.q12, -self.q22);
        q * (2.0 * q * q - q12 - x * q22) - q2 * (q1 + x * q2)
    }
}

fn curve_x(p: &CurvePoint) -> Result<Complex64> {
    p.x()
        .ok_or_else(|| Error::DegeneratePoint("point at infinity".into()))
}

pub fn q_limits(ctx: &SigmaContext, p: &CurvePoint, m: i64) -> Result<QLimits> {
    require_genus(ctx, 2)?;
    let x = curve_x(p)?;
    let u = abel::embed(&ctx.curve, p)?;
    let jet = ctx.wp_jet(&u.scale(m as f64))?;
    Ok(QLimits::from_jet(&jet, x))
}

/// One step of the large-`x₂` sequence: `(name, error)` per probed limit.
#[derive(Clone, Debug)]
pub struct LimitSample {
    pub x2: f64,
    pub errors: Vec<(&'static str, &'static str, f64)>,
}

/// Probe the limits `u = w(P + P₂) → ι(P)` as `x₂ → ∞`.
pub fn limit_probes(ctx: &SigmaContext, p: &CurvePoint, m: i64, x2s: &[f64]) -> Result<Vec<LimitSample>> {
    require_genus(ctx, 2)?;
    let x = curve_x(p)?;
    let target = q_limits(ctx, p, m)?;
    let rel = |v: Complex64, t: Complex64| (v - t).norm() / t.norm().max(1.0);
    let mut out = Vec::new();
    for &x2 in x2s {
        let p2 = CurvePoint::above(&ctx.curve, Complex64::new(x2, 0.0), 1.0);
        let u = abel::abel(&ctx.curve, &abel::DivisorPair { p1: *p, p2 })?;
        let d = ctx.sigma_derivs_log(&u)?;
        let s2 = d[multi::position([0, 1])];
        let psi1 = d[0].div(&s2);
        let w = psi1.powi(2).to_complex();
        let w6 = psi1.powi(6).to_complex();
        let sig_ratio = d[multi::position([1, 0])].div(&s2).to_complex();
        let ju = ctx.wp_jet(&u)?;
        let jm = ctx.wp_jet(&u.scale(m as f64))?;
        let q = sigma::q_from_jets(&jm, &ju);
        let qd = |l: &[u8]| sigma::q_deriv_from_jets(&jm, &ju, l);
        let q11 = qd(&[1, 1]);
        let errors = vec![
            ("wp11-limit", "Ψ1²℘11 → x²", rel(w * ju.wp(&[1, 1]), x * x)),
            ("wp12-limit", "Ψ1²℘12 → −x", rel(w * ju.wp(&[1, 2]), -x)),
            ("wp22-limit", "Ψ1²℘22 → 1", rel(w * ju.wp(&[2, 2]), Complex64::new(1.0, 0.0))),
            ("sigma-ratio-limit", "σ1/σ2 → −x", rel(sig_ratio, -x)),
            ("q-limit", "Ψ1²Q → q", rel(w * q, target.q)),
            ("q1-limit", "Ψ1²Q1 → q1", rel(w * qd(&[1]), target.q1)),
            ("q2-limit", "Ψ1²Q2 → q2", rel(w * qd(&[2]), target.q2)),
            ("q11-limit", "Ψ1²Q11 → q11", rel(w * q11, target.q11)),
            ("q12-limit", "Ψ1²Q12 → q12", rel(w * qd(&[1, 2]), target.q12)),
            ("q22-limit", "Ψ1²Q22 → q22", rel(w * qd(&[2, 2]), target.q22)),
            (
                "q11-squared-vanishes",
                "Ψ1⁶Q11² → 0",
                (w6 * q11 * q11).norm() / target.q11.norm().powi(2).max(1.0),
            ),
            (
                "q-q11-vanishes",
                "Ψ1⁶Q·Q11 → 0",
                (w6 * q * q11).norm() / (target.q * target.q11).norm().max(1.0),
            ),
        ];
        out.push(LimitSample { x2, errors });
    }
    Ok(out)
}

/// The ξ quantities at `u = ι(P)`, by ψ ratios and by closed forms.
#[derive(Clone, Debug)]
pub struct XiBundle {
    pub x: Complex64,
    pub y: Complex64,
    pub xi0: Complex64,
    pub xi1_m: Complex64,
    pub xi1_n: Complex64,
    pub xi2: Complex64,
    pub xi3_m: Complex64,
    pub xi3_n: Complex64,
    pub xi3_m_closed: Complex64,
    pub xi3_n_closed: Complex64,
    pub xi3_m_printed: Complex64,
    pub q_m: QLimits,
    pub q_n: QLimits,
    /// `4y²Q(mu, nu)`.
    pub xi0_closed: Complex64,
    pub xi0_printed: Complex64,
    pub xi1_m_closed: Complex64,
    pub xi1_m_printed: Complex64,
    pub xi2_closed: Complex64,
    pub xi2_printed: Complex64,
    /// `℘₁₂(2u)` and `℘₂₂(2u)`.
    pub wp12_2u: Complex64,
    pub wp22_2u: Complex64,
    /// Sizes used to normalize residuals.
    pub xi3_scale: [f64; 2],
    /// Sum of the term magnitudes of the closed forms of ξ₀, ξ₁(mu),
    /// ξ₁(nu), ξ₂. Several ξ vanish identically on the curve (a ψ₀ or ψ₁
    /// factor), so their own size is no scale.
    pub term_scale: [f64; 4],
}

impl XiBundle {
    /// `ξ₀(nu,mu) + ξ₁(mu) − ξ₁(nu) + s·ξ₂(mu,nu)` relative to its terms;
    /// `s = 1` is the form that holds.
    pub fn assembly(&self, s: f64) -> f64 {
        let parts = [-self.xi0, self.xi1_m, -self.xi1_n, s * self.xi2];
        let sum: Complex64 = parts.iter().sum();
        let big = parts
            .iter()
            .map(|z| z.norm())
            .chain(self.term_scale.iter().copied())
            .fold(0.0, f64::max);
        sum.norm() / big
    }

    pub fn xi3_residuals(&self) -> (f64, f64) {
        (
            (self.xi3_m - self.xi3_m_closed).norm() / self.xi3_scale[0],
            (self.xi3_n - self.xi3_n_closed).norm() / self.xi3_scale[1],
        )
    }
}

fn rel_diff(a: Complex64, b: Complex64, scale: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(scale)
}

impl XiBundle {
    pub fn xi0_residual(&self) -> f64 {
        rel_diff(self.xi0, self.xi0_closed, self.term_scale[0])
    }
    pub fn xi0_printed_residual(&self) -> f64 {
        rel_diff(self.xi0, self.xi0_printed, self.term_scale[0])
    }
    pub fn xi1_residual(&self) -> f64 {
        rel_diff(self.xi1_m, self.xi1_m_closed, self.term_scale[1])
    }
    pub fn xi1_printed_residual(&self) -> f64 {
        rel_diff(self.xi1_m, self.xi1_m_printed, self.term_scale[1])
    }
    pub fn xi2_residual(&self) -> f64 {
        rel_diff(self.xi2, self.xi2_closed, self.term_scale[3])
    }
    pub fn xi2_printed_residual(&self) -> f64 {
        rel_diff(self.xi2, self.xi2_printed, self.term_scale[3])
    }
    pub fn xi3_printed_residual(&self) -> f64 {
        (self.xi3_m - self.xi3_m_printed).norm() / self.xi3_scale[0]
    }
    /// `℘₁₂(2u) = −x²` and `℘₂₂(2u) = 2x`, relative to `1 + |x|²`.
    pub fn doubling_residuals(&self) -> (f64, f64) {
        let s = 1.0 + self.x.norm_sqr();
        (
            (self.wp12_2u + self.x * self.x).norm() / s,
            (self.wp22_2u - 2.0 * self.x).norm() / s,
        )
    }
}

pub fn xi_bundle(ctx: &SigmaContext, seq: &PsiSequence, m: i64, n: i64) -> Result<XiBundle> {
    if !(m > n && n >= 2) {
        return Err(Error::InvalidArgument(format!("need m > n ≥ 2, got m={m}, n={n}")));
    }
    let Some(p) = seq.point.filter(|_| seq.flavor == Flavor::PsiOnCurve) else {
        return Err(Error::InvalidArgument("ξ quantities need a ψ sequence on the curve".into()));
    };
    seq.need(m + n)?;
    seq.need(m + 2)?;
    let (x, y) = (p.x().unwrap(), p.y().unwrap());
    let u = &seq.base;
    let jm = ctx.wp_jet(&u.scale(m as f64))?;
    let jn = ctx.wp_jet(&u.scale(n as f64))?;
    let j2 = ctx.wp_jet(&u.scale(2.0))?;
    let y4 = 4.0 * y * y;
    let w = |j: &WpJet, l: &[u8]| j.wp(l);

    let xi0 = seq.ratio(&[2, 2, m - n, m + n], &[m, m, n, n]);
    let xi1 = |k: i64| seq.ratio(&[k - 2, k + 2], &[k, k]);
    let beta = |k: i64| seq.ratio(&[k - 1, k + 1], &[k, k]);
    let (xi3_m, s_m) = xi3_ratio(seq, m);
    let (xi3_n, s_n) = xi3_ratio(seq, n);
    let xi2 = beta(m) * xi3_n - beta(n) * xi3_m;
    let q_m = QLimits::from_jet(&jm, x);
    let q_n = QLimits::from_jet(&jn, x);
    let (xi3_m_closed, xi3_n_closed) = (q_m.xi3(x), q_n.xi3(x));

    let xi0_closed = y4 * sigma::q_from_jets(&jm, &jn);
    let xi0_printed = -y4
        * (w(&jm, &[1, 1]) - w(&jn, &[1, 1])
            - 2.0 * w(&jm, &[1, 2]) * w(&jn, &[1, 2])
            - w(&jm, &[2, 2]) * w(&jn, &[2, 2]));
    let xi1_m_closed = y4
        * (w(&j2, &[1, 1]) - w(&jm, &[1, 1]) - 2.0 * x * w(&jm, &[1, 2]) - x * x * w(&jm, &[2, 2]));
    let xi1_m_printed = y4
        * (w(&jm, &[1, 1]) - w(&j2, &[1, 1]) - 2.0 * x * w(&jm, &[1, 2]) - x * x * w(&jm, &[2, 2]));
    let (p12m, p22m, p12n, p22n) = (
        w(&jm, &[1, 2]),
        w(&jm, &[2, 2]),
        w(&jn, &[1, 2]),
        w(&jn, &[2, 2]),
    );
    let y4n = y4.norm();
    let xn = x.norm();
    let t1 = |j: &WpJet| {
        y4n * (w(&j2, &[1, 1]).norm()
            + w(j, &[1, 1]).norm()
            + 2.0 * xn * w(j, &[1, 2]).norm()
            + xn * xn * w(j, &[2, 2]).norm())
    };
    let term_scale = [
        y4n * (w(&jm, &[1, 1]).norm()
            + w(&jn, &[1, 1]).norm()
            + (w(&jm, &[1, 2]) * w(&jn, &[2, 2])).norm()
            + (w(&jn, &[1, 2]) * w(&jm, &[2, 2])).norm()),
        t1(&jm),
        t1(&jn),
        y4n * [
            w(&jm, &[2, 2]) * x * x,
            2.0 * w(&jm, &[1, 2]) * x,
            w(&jn, &[1, 2]) * w(&jm, &[2, 2]),
            w(&jn, &[2, 2]) * x * x,
            2.0 * w(&jn, &[1, 2]) * x,
            w(&jm, &[1, 2]) * w(&jn, &[2, 2]),
        ]
        .iter()
        .map(|z| z.norm())
        .sum::<f64>(),
    ];
    let common = p22m * x * x + 2.0 * p12m * x - p22n * x * x - 2.0 * p12n * x - p12m * p22n;
    let xi2_closed = y4 * (common + p12n * p22m);
    let xi2_printed = y4 * (common - p12n * p22m);
    Ok(XiBundle {
        x,
        y,
        xi0,
        xi1_m: xi1(m),
        xi1_n: xi1(n),
        xi2,
        xi3_m,
        xi3_n,
        xi3_m_closed,
        xi3_n_closed,
        xi3_m_printed: q_m.xi3_printed(x),
        q_m,
        q_n,
        xi0_closed,
        xi0_printed,
        xi1_m_closed,
        xi1_m_printed,
        xi2_closed,
        xi2_printed,
        wp12_2u: w(&j2, &[1, 2]),
        wp22_2u: w(&j2, &[2, 2]),
        xi3_scale: [s_m.max(xi3_m_closed.norm()), s_n.max(xi3_n_closed.norm())],
        term_scale,
    })
}

/// `β_n = ψ_{n+1}ψ_{n−1}/ψ_n²` with the fitted `β_{n+1}β_{n−1} = z/β_n + a/β_n²`.
#[derive(Clone, Debug)]
pub struct PainleveFit {
    pub beta: BTreeMap<i64, Complex64>,
    pub z: Complex64,
    pub a: Complex64,
    pub residuals: BTreeMap<i64, f64>,
}

pub fn painleve_fit(seq: &PsiSequence, fit: [i64; 2], upto: i64) -> Result<PainleveFit> {
    seq.need(upto + 2)?;
    let beta: BTreeMap<i64, Complex64> = (1..=upto + 1)
        .map(|n| (n, seq.ratio(&[n + 1, n - 1], &[n, n])))
        .collect();
    fit_beta(beta, fit, upto)
}

/// Fit `(z, a)` from the relations at the two indices in `fit`, then
/// report the residual of every other `2 ≤ n ≤ upto`.
pub fn fit_beta(beta: BTreeMap<i64, Complex64>, fit: [i64; 2], upto: i64) -> Result<PainleveFit> {
    let get = |n: i64| {
        beta.get(&n)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("β_{n} missing")))
    };
    let row = |n: i64| -> Result<([Complex64; 2], Complex64)> {
        let b = get(n)?;
        if b.norm() == 0.0 {
            return Err(Error::SingularFit(0.0));
        }
        Ok(([1.0 / b, 1.0 / (b * b)], get(n + 1)? * get(n - 1)?))
    };
    let (r0, c0) = row(fit[0])?;
    let (r1, c1) = row(fit[1])?;
    let det = r0[0] * r1[1] - r0[1] * r1[0];
    let size = (r0[0] * r1[1]).norm() + (r0[1] * r1[0]).norm();
    if det.norm() <= 1e-10 * size {
        return Err(Error::SingularFit(det.norm() / size));
    }
    let z = (c0 * r1[1] - r0[1] * c1) / det;
    let a = (r0[0] * c1 - c0 * r1[0]) / det;
    let mut residuals = BTreeMap::new();
    for n in 2..=upto {
        if fit.contains(&n) {
            continue;
        }
        let (r, c) = row(n)?;
        let parts = [c, z * r[0], a * r[1]];
        let big = parts.iter().map(|p| p.norm()).fold(0.0, f64::max);
        residuals.insert(n, (c - parts[1] - parts[2]).norm() / big);
    }
    Ok(PainleveFit { beta, z, a, residuals })
}
