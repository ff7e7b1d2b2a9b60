//! The Kleinian sigma function and the ℘ hierarchy.
//!
//! σ(u) = γ·exp(−½uᵗκu)·θ[χ](Wu), with κ = η′ω′⁻¹ and W = (2ω′)⁻¹.
//!
//! Every quantity here is formed from the individual theta terms of the
//! reduced series: derivatives of σ by Leibniz' rule against the Gaussian
//! prefactor, and the ℘-jet as cumulants of the term multipliers, which
//! avoids dividing differences of large σ-derivatives.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::abel::{self, JacPoint};
use crate::curve::{Curve, CurvePoint};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::logval::LogValue;
use crate::multi::{self, MultiIndex, COUNT};
use crate::periods::PeriodData;
use crate::theta::{self, Characteristic, ThetaConfig, ThetaTerms};

/// Threshold on `|θ| / max term` below which ℘ is refused.
pub const NEAR_DIVISOR: f64 = 1e-8;
/// Threshold on `|θ| / max term` for a point to count as on the divisor.
pub const ON_DIVISOR: f64 = 1e-7;
const GAMMA_SPREAD: f64 = 1e-7;
const PROBE_SEED: u64 = 0x5151_0002;

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// ℘ derivatives up to fourth order, indexed by multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct WpJet {
    genus: usize,
    values: [Complex64; COUNT],
}

impl WpJet {
    /// `℘` with the given 1-based labels, e.g. `wp(&[1, 2, 2])` is `℘₁₂₂`.
    /// Between two and four labels.
    pub fn wp(&self, labels: &[u8]) -> Complex64 {
        assert!((2..=4).contains(&labels.len()), "℘ needs 2 to 4 indices");
        assert!(
            labels.iter().all(|&l| l as usize <= self.genus),
            "index above genus"
        );
        self.values[multi::position(multi::from_labels(labels))]
    }

    pub fn by_index(&self, m: MultiIndex) -> Complex64 {
        self.values[multi::position(m)]
    }

    pub fn genus(&self) -> usize {
        self.genus
    }
}

/// Everything needed to evaluate σ on one curve.
#[derive(Clone, Debug)]
pub struct SigmaContext {
    pub curve: Curve,
    pub periods: PeriodData,
    pub chi: Characteristic,
    pub kappa: CMat,
    /// `(2ω′)⁻¹`.
    pub w: CMat,
    pub gamma_sq: Complex64,
    /// The square root of `gamma_sq` with `σ₁(0) = 1` (genus two) or
    /// `σ'(0) = 1` (genus one).
    pub gamma: Complex64,
    pub cfg: ThetaConfig,
}

impl SigmaContext {
    /// Context with a given characteristic and `γ = 1`.
    pub fn with_characteristic(curve: &Curve, periods: &PeriodData, chi: Characteristic) -> Self {
        SigmaContext {
            curve: curve.clone(),
            periods: periods.clone(),
            chi,
            kappa: periods.kappa(),
            w: periods.theta_map(),
            gamma_sq: Complex64::new(1.0, 0.0),
            gamma: Complex64::new(1.0, 0.0),
            cfg: ThetaConfig::default(),
        }
    }

    /// Full construction: characteristic scan, then γ² calibration on probe
    /// pairs drawn from a fixed seed.
    pub fn new(curve: &Curve, periods: &PeriodData) -> Result<Self> {
        let chi = auto_select_characteristic(curve, periods)?;
        let mut ctx = Self::with_characteristic(curve, periods, chi);
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let probes: Vec<(JacPoint, JacPoint)> = (0..4)
            .map(|_| {
                let u = abel::abel(curve, &abel::random_divisor(curve, &mut rng))?;
                let v = abel::abel(curve, &abel::random_divisor(curve, &mut rng))?;
                Ok((u, v))
            })
            .collect::<Result<_>>()?;
        let gsq = calibrate_gamma(&ctx, &probes)?;
        ctx.set_gamma_sq(gsq);
        Ok(ctx)
    }

    /// Install `γ²`, fixing the sign of `γ` by the normalization of σ at 0.
    pub fn set_gamma_sq(&mut self, gsq: Complex64) {
        self.gamma_sq = gsq;
        self.periods.gamma_sq = Some([gsq.re, gsq.im]);
        let g = gsq.sqrt();
        let lead = self.sigma_tilde_lead();
        self.gamma = if (g * lead).re >= 0.0 { g } else { -g };
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    /// `∂σ̃/∂u₁` at the origin with `γ = 1`; σ = u₁ + … fixes `γ = 1/this`.
    pub fn sigma_tilde_lead(&self) -> Complex64 {
        let mut alpha = [0u8; 2];
        alpha[0] = 1;
        let z = JacPoint::zero(self.genus());
        let v = self
            .sigma_derivs_log(&z)
            .expect("theta converges at the origin");
        v[multi::position(alpha)].div(&LogValue::from_complex(self.gamma)).to_complex()
    }

    fn z_of(&self, u: &JacPoint) -> Vec<Complex64> {
        linalg::mat_vec(&self.w, &u.u)
    }

    fn terms(&self, u: &JacPoint, order: usize) -> Result<ThetaTerms> {
        theta::theta_terms(&self.z_of(u), &self.periods.tau, &self.chi, &self.cfg, order)
    }

    /// `ln γ − ½uᵗκu`.
    fn log_gauss(&self, u: &JacPoint) -> Complex64 {
        self.gamma.ln() - 0.5 * linalg::bilinear(&self.kappa, &u.u, &u.u)
    }

    /// Multipliers `Wᵗ·2πi(k + a − shift)` of each theta term, i.e. the
    /// factor a `u`-derivative pulls down.
    fn multipliers(&self, t: &ThetaTerms, shifted: bool) -> Vec<Vec<Complex64>> {
        let g = self.genus();
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        t.terms
            .iter()
            .map(|(w, _)| {
                let v: Vec<Complex64> = (0..g)
                    .map(|i| two_pi_i * (w[i] - if shifted { t.shift[i] } else { 0.0 }))
                    .collect();
                linalg::mat_t_vec(&self.w, &v)
            })
            .collect()
    }

    pub fn sigma_log(&self, u: &JacPoint) -> Result<LogValue> {
        let t = self.terms(u, 0)?;
        let s: Complex64 = t.terms.iter().map(|(_, x)| x).sum();
        Ok(LogValue::from_complex(s).mul(&LogValue::from_ln(t.log_factor + self.log_gauss(u))))
    }

    pub fn sigma(&self, u: &JacPoint) -> Result<Complex64> {
        Ok(self.sigma_log(u)?.to_complex())
    }

    /// `|θ(Wu)|` relative to its largest series term: small near the divisor.
    pub fn divisor_ratio(&self, u: &JacPoint) -> Result<f64> {
        let t = self.terms(u, 0)?;
        let s: Complex64 = t.terms.iter().map(|(_, x)| x).sum();
        Ok(s.norm() / t.max_term())
    }

    /// All `∂^α σ`, `|α| ≤ 4`, in log form, indexed by multi-index position.
    pub fn sigma_derivs_log(&self, u: &JacPoint) -> Result<[LogValue; COUNT]> {
        let g = self.genus();
        let t = self.terms(u, 4)?;
        let p = self.multipliers(&t, true);
        // Θ derivatives (without the common factor)
        let mut th = [c0(); COUNT];
        for (k, m) in multi::ALL.iter().enumerate() {
            if g == 1 && m[1] > 0 {
                continue;
            }
            th[k] = t
                .terms
                .iter()
                .zip(&p)
                .map(|((_, x), pk)| x * pow_multi(pk, *m))
                .sum();
        }
        let e = gauss_hermite(&self.kappa, &u.u, g);
        let factor = LogValue::from_ln(t.log_factor + self.log_gauss(u));
        let mut out = [LogValue::ZERO; COUNT];
        for (k, alpha) in multi::ALL.iter().enumerate() {
            if g == 1 && alpha[1] > 0 {
                continue;
            }
            let mut s = c0();
            for (beta, binom) in multi::sub_indices(*alpha) {
                s += binom * e[multi::position(multi::sub(*alpha, beta))] * th[multi::position(beta)];
            }
            out[k] = LogValue::from_complex(s).mul(&factor);
        }
        Ok(out)
    }

    /// `∂^α σ` for `|α| ≤ 4`.
    pub fn sigma_deriv(&self, u: &JacPoint, alpha: MultiIndex) -> Result<Complex64> {
        Ok(self.sigma_derivs_log(u)?[multi::position(alpha)].to_complex())
    }

    /// ℘-jet at `u`: `℘_{ij} = κᵢⱼ − ∂ᵢⱼ log Θ`, and the higher entries are
    /// minus the cumulants of the term multipliers.
    pub fn wp_jet(&self, u: &JacPoint) -> Result<WpJet> {
        let g = self.genus();
        let t = self.terms(u, 4)?;
        let total: Complex64 = t.terms.iter().map(|(_, x)| x).sum();
        let ratio = total.norm() / t.max_term();
        if !(ratio >= NEAR_DIVISOR) {
            return Err(Error::NearDivisor(ratio));
        }
        let p = self.multipliers(&t, false);
        let weights: Vec<Complex64> = t.terms.iter().map(|(_, x)| x / total).collect();
        let mut mean = vec![c0(); g];
        for (w, pk) in weights.iter().zip(&p) {
            for i in 0..g {
                mean[i] += w * pk[i];
            }
        }
        let centered: Vec<Vec<Complex64>> = p
            .iter()
            .map(|pk| (0..g).map(|i| pk[i] - mean[i]).collect())
            .collect();
        let mut m = [c0(); COUNT];
        for (k, a) in multi::ALL.iter().enumerate() {
            if multi::order(*a) < 2 || (g == 1 && a[1] > 0) {
                continue;
            }
            m[k] = weights
                .iter()
                .zip(&centered)
                .map(|(w, ck)| w * pow_multi(ck, *a))
                .sum();
        }
        let mut values = [c0(); COUNT];
        for (k, a) in multi::ALL.iter().enumerate() {
            if multi::order(*a) < 2 || (g == 1 && a[1] > 0) {
                continue;
            }
            let labels = labels_of(*a);
            let cum = match labels.len() {
                2 | 3 => m[k],
                _ => {
                    let m2 = |i: usize, j: usize| m[multi::position(multi::from_labels(&[labels[i], labels[j]]))];
                    m[k] - m2(0, 1) * m2(2, 3) - m2(0, 2) * m2(1, 3) - m2(0, 3) * m2(1, 2)
                }
            };
            values[k] = if labels.len() == 2 {
                let (i, j) = ((labels[0] - 1) as usize, (labels[1] - 1) as usize);
                0.5 * (self.kappa[(i, j)] + self.kappa[(j, i)]) - cum
            } else {
                -cum
            };
        }
        Ok(WpJet { genus: g, values })
    }

    /// `Q(u, v)`; genus one: `℘(v) − ℘(u)`.
    pub fn q_fn(&self, u: &JacPoint, v: &JacPoint) -> Result<Complex64> {
        let a = self.wp_jet(u)?;
        let b = self.wp_jet(v)?;
        Ok(q_from_jets(&a, &b))
    }

    /// `∂Q/∂u_i` (one label) or `∂²Q/∂u_i∂u_j` (two labels), `v` fixed.
    pub fn q_fn_deriv(&self, u: &JacPoint, v: &JacPoint, labels: &[u8]) -> Result<Complex64> {
        let a = self.wp_jet(u)?;
        let b = self.wp_jet(v)?;
        Ok(q_deriv_from_jets(&a, &b, labels))
    }
}

/// `Q(u,v) = −(℘₁₁(u) − ℘₁₁(v) + ℘₁₂(u)℘₂₂(v) − ℘₁₂(v)℘₂₂(u))` from two jets.
pub fn q_from_jets(a: &WpJet, b: &WpJet) -> Complex64 {
    if a.genus == 1 {
        return b.wp(&[1, 1]) - a.wp(&[1, 1]);
    }
    -(a.wp(&[1, 1]) - b.wp(&[1, 1]) + a.wp(&[1, 2]) * b.wp(&[2, 2]) - b.wp(&[1, 2]) * a.wp(&[2, 2]))
}

/// `u`-partials of `Q(u, v)`; `labels` has one or two entries.
pub fn q_deriv_from_jets(a: &WpJet, b: &WpJet, labels: &[u8]) -> Complex64 {
    assert!(labels.len() == 1 || labels.len() == 2, "Q derivatives of order 1 or 2");
    let with = |base: &[u8]| {
        let mut l = base.to_vec();
        l.extend_from_slice(labels);
        a.wp(&l)
    };
    if a.genus == 1 {
        return -with(&[1, 1]);
    }
    -(with(&[1, 1]) + with(&[1, 2]) * b.wp(&[2, 2]) - b.wp(&[1, 2]) * with(&[2, 2]))
}

fn labels_of(m: MultiIndex) -> Vec<u8> {
    let mut v = vec![1u8; m[0] as usize];
    v.extend(std::iter::repeat_n(2u8, m[1] as usize));
    v
}

fn pow_multi(p: &[Complex64], m: MultiIndex) -> Complex64 {
    let mut r = p[0].powu(m[0] as u32);
    if m[1] > 0 {
        r *= p[1].powu(m[1] as u32);
    }
    r
}

/// `∂^α exp(−½uᵗκu) / exp(−½uᵗκu)` for all `|α| ≤ 4`, by the recursion
/// `e_{α+i} = dᵢe_α − Σⱼ αⱼκᵢⱼe_{α−j}` with `d = −κu`.
fn gauss_hermite(kappa: &CMat, u: &[Complex64], g: usize) -> [Complex64; COUNT] {
    let d: Vec<Complex64> = (0..g)
        .map(|i| -(0..g).map(|j| kappa[(i, j)] * u[j]).sum::<Complex64>())
        .collect();
    let mut e = [c0(); COUNT];
    e[0] = Complex64::new(1.0, 0.0);
    for alpha in multi::ALL.iter().skip(1) {
        if g == 1 && alpha[1] > 0 {
            continue;
        }
        // peel off the last variable present
        let i = if alpha[1] > 0 { 1 } else { 0 };
        let mut base = *alpha;
        base[i] -= 1;
        let mut v = d[i] * e[multi::position(base)];
        for j in 0..g {
            if base[j] > 0 {
                let mut lower = base;
                lower[j] -= 1;
                v -= base[j] as f64 * kappa[(i, j)] * e[multi::position(lower)];
            }
        }
        e[multi::position(*alpha)] = v;
    }
    e
}

/// `γ²` as the mean of `[σ̃(u+v)σ̃(u−v)/(σ̃(u)²σ̃(v)²)]/Q(u,v)` over the probes,
/// with σ̃ the sigma function at `γ = 1`.
pub fn calibrate_gamma(ctx: &SigmaContext, probes: &[(JacPoint, JacPoint)]) -> Result<Complex64> {
    let mut plain = ctx.clone();
    plain.gamma = Complex64::new(1.0, 0.0);
    plain.gamma_sq = Complex64::new(1.0, 0.0);
    let mut vals = Vec::new();
    for (u, v) in probes {
        let num = plain.sigma_log(&u.add(v))?.mul(&plain.sigma_log(&u.sub(v))?);
        let den = plain.sigma_log(u)?.powi(2).mul(&plain.sigma_log(v)?.powi(2));
        let q = plain.q_fn(u, v)?;
        vals.push(num.div(&den).to_complex() / q);
    }
    let mean: Complex64 = vals.iter().sum::<Complex64>() / vals.len() as f64;
    let spread = vals.iter().map(|x| (x - mean).norm()).fold(0.0, f64::max) / mean.norm();
    if !(spread < GAMMA_SPREAD) {
        return Err(Error::InconsistentGamma(spread));
    }
    Ok(mean)
}

/// Odd characteristic whose σ vanishes on the embedded curve (genus two).
/// Ties go to the lexicographically first.
pub fn auto_select_characteristic(curve: &Curve, periods: &PeriodData) -> Result<Characteristic> {
    let g = curve.genus();
    if g == 1 {
        // the embedded curve is the whole Jacobian; the odd
        // characteristic is unique
        return Ok(Characteristic::new(vec![1], vec![1]));
    }
    let probes = probe_points(curve)?;
    let mut best: Option<(f64, Characteristic)> = None;
    for chi in Characteristic::odd(g) {
        let ctx = SigmaContext::with_characteristic(curve, periods, chi.clone());
        let mut worst: f64 = 0.0;
        for u in &probes {
            worst = worst.max(ctx.divisor_ratio(u)?);
        }
        log::debug!("characteristic {chi}: max divisor ratio {worst:.3e}");
        if best.as_ref().is_none_or(|(b, _)| worst < *b) {
            best = Some((worst, chi));
        }
    }
    let (score, chi) = best.expect("at least one odd characteristic");
    if score < ON_DIVISOR {
        Ok(chi)
    } else {
        Err(Error::NoVanishingCharacteristic(score))
    }
}

/// Five deterministic embedded points used to test divisor membership.
pub fn probe_points(curve: &Curve) -> Result<Vec<JacPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED ^ 0xff);
    (0..5)
        .map(|_| abel::embed(curve, &abel::random_curve_point(curve, &mut rng)))
        .collect()
}

/// Embedded curve point `ι(P)`, convenience for callers holding a context.
pub fn embed_point(ctx: &SigmaContext, p: &CurvePoint) -> Result<JacPoint> {
    abel::embed(&ctx.curve, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::random_curve;
    use crate::periods::compute_periods;

    #[test]
    fn hermite_factors_match_closed_form() {
        let k = CMat::from_row_slice(2, 2, &[
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.4),
            Complex64::new(-0.2, 0.4),
            Complex64::new(1.1, -0.3),
        ]);
        let u = [Complex64::new(0.4, -0.2), Complex64::new(-0.7, 0.3)];
        let e = gauss_hermite(&k, &u, 2);
        let d0 = -(k[(0, 0)] * u[0] + k[(0, 1)] * u[1]);
        let d1 = -(k[(1, 0)] * u[0] + k[(1, 1)] * u[1]);
        assert!((e[multi::position([1, 0])] - d0).norm() < 1e-15);
        assert!((e[multi::position([1, 1])] - (d0 * d1 - k[(0, 1)])).norm() < 1e-14);
        let want = d0 * d0 * d0 - 3.0 * k[(0, 0)] * d0;
        assert!((e[multi::position([3, 0])] - want).norm() < 1e-14);
    }

    #[test]
    fn context_builds_on_random_curves() {
        for seed in [1, 2] {
            let cv = random_curve(seed, 2);
            let p = compute_periods(&cv).unwrap();
            let ctx = SigmaContext::new(&cv, &p).unwrap();
            assert!(ctx.chi.is_odd());
            assert!((ctx.gamma * ctx.sigma_tilde_lead() - 1.0).norm() < 1e-6);
        }
    }
}
