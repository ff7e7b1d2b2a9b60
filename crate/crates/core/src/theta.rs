//! Riemann theta function with characteristics.
//!
//! θ[a;b](z) = Σₙ exp 2πi(½(n+a)ᵗτ(n+a) + (n+a)ᵗ(z+b)).
//!
//! Arguments are first reduced modulo the lattice `ℤᵍ + τℤᵍ`; the exact
//! quasi-periodicity factor is returned in logarithmic form so callers can
//! work with σ(n·u) for large `n` without overflow. The series is truncated
//! on a sphere around the dominant term whose radius comes from the smallest
//! eigenvalue of Im τ.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::logval::LogValue;
use crate::multi::MultiIndex;

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Half-integer characteristic `[a; b]`, stored doubled.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct Characteristic {
    pub a2: Vec<i32>,
    pub b2: Vec<i32>,
}

impl Characteristic {
    pub fn new(a2: Vec<i32>, b2: Vec<i32>) -> Self {
        assert_eq!(a2.len(), b2.len(), "characteristic halves differ in length");
        Characteristic { a2, b2 }
    }

    pub fn genus(&self) -> usize {
        self.a2.len()
    }

    pub fn a(&self) -> Vec<f64> {
        self.a2.iter().map(|&x| 0.5 * x as f64).collect()
    }

    pub fn b(&self) -> Vec<f64> {
        self.b2.iter().map(|&x| 0.5 * x as f64).collect()
    }

    /// `4aᵗb mod 2`: 1 for odd characteristics.
    pub fn parity(&self) -> i32 {
        let s: i32 = self.a2.iter().zip(&self.b2).map(|(x, y)| x * y).sum();
        s.rem_euclid(2)
    }

    pub fn is_odd(&self) -> bool {
        self.parity() == 1
    }

    /// Entries reduced to `{0, ½}`.
    pub fn reduced(&self) -> Characteristic {
        Characteristic {
            a2: self.a2.iter().map(|x| x.rem_euclid(2)).collect(),
            b2: self.b2.iter().map(|x| x.rem_euclid(2)).collect(),
        }
    }

    /// All `4ᵍ` characteristics with entries in `{0, ½}`, in lexicographic
    /// order of `(a, b)`.
    pub fn all_half(g: usize) -> Vec<Characteristic> {
        let mut out = Vec::new();
        for bits in 0..(1u32 << (2 * g)) {
            let v: Vec<i32> = (0..2 * g).rev().map(|k| ((bits >> k) & 1) as i32).collect();
            out.push(Characteristic::new(v[..g].to_vec(), v[g..].to_vec()));
        }
        out
    }

    pub fn odd(g: usize) -> Vec<Characteristic> {
        Self::all_half(g).into_iter().filter(|c| c.is_odd()).collect()
    }
}

impl std::fmt::Display for Characteristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let half = |v: &[i32]| {
            v.iter()
                .map(|&x| if x % 2 == 0 { format!("{}", x / 2) } else { format!("{x}/2") })
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "[{};{}]", half(&self.a2), half(&self.b2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaConfig {
    pub eps: f64,
    pub radius_cap: u32,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig {
            eps: 1e-13,
            radius_cap: 64,
        }
    }
}

/// Result of [`reduce_argument`]: `z = z_reduced + m + τ·m_prime`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub z_reduced: Vec<Complex64>,
    /// `−2πi(½m′ᵗτm′ + m′ᵗz_reduced)`.
    pub log_prefactor: Complex64,
    pub m: Vec<i64>,
    pub m_prime: Vec<i64>,
}

impl Reduction {
    /// `2πi(aᵗm − bᵗm′)`, the characteristic-dependent part of the factor.
    pub fn log_phase(&self, chi: &Characteristic) -> Complex64 {
        let a = chi.a();
        let b = chi.b();
        let s: f64 = (0..a.len())
            .map(|i| a[i] * self.m[i] as f64 - b[i] * self.m_prime[i] as f64)
            .sum();
        TWO_PI_I * s
    }
}

/// Split `z` into a lattice vector and a remainder whose imaginary part
/// satisfies `Y⁻¹ Im z ∈ [−½, ½]ᵍ` and whose real part lies in `[−½, ½]ᵍ`,
/// so that `θ(z) = exp(log_prefactor + log_phase)·θ(z_reduced)`.
pub fn reduce_argument(z: &[Complex64], tau: &CMat) -> Reduction {
    let g = z.len();
    let y = nalgebra::DMatrix::from_fn(g, g, |i, j| tau[(i, j)].im);
    let yinv = y.try_inverse().expect("Im τ is positive definite");
    let im = nalgebra::DVector::from_iterator(g, z.iter().map(|w| w.im));
    let frac = yinv * im;
    let m_prime: Vec<i64> = frac.iter().map(|v| v.round() as i64).collect();
    let mp: Vec<Complex64> = m_prime.iter().map(|&k| Complex64::new(k as f64, 0.0)).collect();
    let tm = linalg::mat_vec(tau, &mp);
    let z1: Vec<Complex64> = (0..g).map(|i| z[i] - tm[i]).collect();
    let m: Vec<i64> = z1.iter().map(|w| w.re.round() as i64).collect();
    let z_reduced: Vec<Complex64> = (0..g).map(|i| z1[i] - m[i] as f64).collect();
    let quad = linalg::bilinear(tau, &mp, &mp);
    let lin: Complex64 = (0..g).map(|i| mp[i] * z_reduced[i]).sum();
    Reduction {
        z_reduced,
        log_prefactor: -TWO_PI_I * (0.5 * quad + lin),
        m,
        m_prime,
    }
}

/// Theta series at a reduced argument, kept as individual terms so that
/// callers can form any derivative or moment.
#[derive(Clone, Debug)]
pub struct ThetaTerms {
    /// `θ(z) = exp(log_factor)·Σ terms`.
    pub log_factor: Complex64,
    /// Shift to subtract from `k + a` to get the multipliers of the
    /// unreduced argument.
    pub shift: Vec<f64>,
    /// `(k + a, term)` in deterministic enumeration order.
    pub terms: Vec<(Vec<f64>, Complex64)>,
}

impl ThetaTerms {
    /// Largest term magnitude, the natural scale for cancellation checks.
    pub fn max_term(&self) -> f64 {
        self.terms.iter().map(|(_, t)| t.norm()).fold(0.0, f64::max)
    }

    /// `∂^α θ / exp(log_factor)` in the coordinates `z`.
    pub fn deriv_sum(&self, alpha: &[u8]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (w, t) in &self.terms {
            let mut f = *t;
            for (i, &k) in alpha.iter().enumerate() {
                f *= (TWO_PI_I * (w[i] - self.shift[i])).powu(k as u32);
            }
            s += f;
        }
        s
    }
}

/// Truncated, reduced theta series. `order` is the highest derivative order
/// the caller will form; it enters the tail bound.
pub fn theta_terms(
    z: &[Complex64],
    tau: &CMat,
    chi: &Characteristic,
    cfg: &ThetaConfig,
    order: usize,
) -> Result<ThetaTerms> {
    let g = z.len();
    assert_eq!(chi.genus(), g, "characteristic genus mismatch");
    let red = reduce_argument(z, tau);
    let a = chi.a();
    let b = chi.b();
    let y = nalgebra::DMatrix::from_fn(g, g, |i, j| tau[(i, j)].im);
    let lmin = linalg::imag_eigenvalues(tau)[0];
    if !(lmin > 0.0) {
        return Err(Error::IllConditioned("Im τ is not positive definite".into()));
    }
    let yinv = y.clone().try_inverse().expect("positive definite");
    let im = nalgebra::DVector::from_iterator(g, red.z_reduced.iter().map(|w| w.im));
    // the dominant term sits at k + a ≈ −Y⁻¹ Im z
    let center: Vec<f64> = (-(yinv * im)).iter().cloned().collect();
    let shift: Vec<f64> = red.m_prime.iter().map(|&k| k as f64).collect();
    let reach = center.iter().map(|c| c.abs()).fold(0.0, f64::max)
        + shift.iter().map(|s| s.abs()).fold(0.0, f64::max)
        + 1.0;
    let bound = |r: f64| {
        (-PI * lmin * r * r).exp()
            * (2.0 * PI * (r + reach)).powi(order as i32)
            * (2.0 * r + 2.0).powi(g as i32)
    };
    let mut radius = 1.0;
    while bound(radius) >= cfg.eps {
        radius += 0.25;
        if radius > cfg.radius_cap as f64 {
            return Err(Error::RadiusCap {
                required: radius.ceil() as u32,
                cap: cfg.radius_cap,
            });
        }
    }
    let zb: Vec<Complex64> = (0..g).map(|i| red.z_reduced[i] + b[i]).collect();
    let lo: Vec<i64> = (0..g).map(|i| (center[i] - a[i] - radius).floor() as i64).collect();
    let hi: Vec<i64> = (0..g).map(|i| (center[i] - a[i] + radius).ceil() as i64).collect();
    let mut terms = Vec::new();
    let mut push = |k: &[i64]| {
        let w: Vec<f64> = (0..g).map(|i| k[i] as f64 + a[i]).collect();
        let d2: f64 = (0..g).map(|i| (w[i] - center[i]).powi(2)).sum();
        if d2 > radius * radius {
            return;
        }
        let wc: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let e = 0.5 * linalg::bilinear(tau, &wc, &wc) + (0..g).map(|i| wc[i] * zb[i]).sum::<Complex64>();
        terms.push((w, (TWO_PI_I * e).exp()));
    };
    if g == 1 {
        for k0 in lo[0]..=hi[0] {
            push(&[k0]);
        }
    } else {
        for k0 in lo[0]..=hi[0] {
            for k1 in lo[1]..=hi[1] {
                push(&[k0, k1]);
            }
        }
    }
    Ok(ThetaTerms {
        log_factor: red.log_prefactor + red.log_phase(chi),
        shift,
        terms,
    })
}

pub fn theta(z: &[Complex64], tau: &CMat, chi: &Characteristic, cfg: &ThetaConfig) -> Result<Complex64> {
    theta_deriv(z, tau, chi, &vec![0; z.len()], cfg)
}

/// `∂^α θ` with respect to `z`, term-wise. `alpha` has one entry per variable.
pub fn theta_deriv(
    z: &[Complex64],
    tau: &CMat,
    chi: &Characteristic,
    alpha: &[u8],
    cfg: &ThetaConfig,
) -> Result<Complex64> {
    Ok(theta_deriv_log(z, tau, chi, alpha, cfg)?.to_complex())
}

/// Same as [`theta_deriv`] in logarithmic form.
pub fn theta_deriv_log(
    z: &[Complex64],
    tau: &CMat,
    chi: &Characteristic,
    alpha: &[u8],
    cfg: &ThetaConfig,
) -> Result<LogValue> {
    let order: usize = alpha.iter().map(|&k| k as usize).sum();
    let t = theta_terms(z, tau, chi, cfg, order)?;
    Ok(LogValue::from_complex(t.deriv_sum(alpha)).mul(&LogValue::from_ln(t.log_factor)))
}

/// Multi-index form for genus two (or genus one, ignoring the second entry).
pub fn theta_deriv_multi(
    z: &[Complex64],
    tau: &CMat,
    chi: &Characteristic,
    alpha: MultiIndex,
    cfg: &ThetaConfig,
) -> Result<Complex64> {
    theta_deriv(z, tau, chi, &alpha[..z.len()], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tau2() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.3, 1.1), c(0.2, 0.35), c(0.2, 0.35), c(-0.4, 0.9)])
    }

    #[test]
    fn six_odd_characteristics() {
        let odd = Characteristic::odd(2);
        assert_eq!(odd.len(), 6);
        assert_eq!(Characteristic::all_half(2).len(), 16);
        assert_eq!(Characteristic::odd(1), vec![Characteristic::new(vec![1], vec![1])]);
    }

    #[test]
    fn reduced_argument_is_identity_when_small() {
        let z = [c(0.1, 0.05), c(-0.2, 0.1)];
        let r = reduce_argument(&z, &tau2());
        assert_eq!(r.m, vec![0, 0]);
        assert_eq!(r.m_prime, vec![0, 0]);
        assert_eq!(r.log_prefactor, c(0.0, 0.0));
    }

    #[test]
    fn odd_theta_vanishes_at_zero() {
        let cfg = ThetaConfig::default();
        for chi in Characteristic::odd(2) {
            let v = theta(&[c(0.0, 0.0), c(0.0, 0.0)], &tau2(), &chi, &cfg).unwrap();
            assert!(v.norm() < 1e-14);
            let d1 = theta_deriv(&[c(0.0, 0.0), c(0.0, 0.0)], &tau2(), &chi, &[1, 0], &cfg).unwrap();
            let d2 = theta_deriv(&[c(0.0, 0.0), c(0.0, 0.0)], &tau2(), &chi, &[0, 1], &cfg).unwrap();
            assert!(d1.norm().max(d2.norm()) > 1e-3);
        }
    }

    #[test]
    fn radius_cap_triggers() {
        let tau = CMat::from_row_slice(1, 1, &[c(0.0, 1e-4)]);
        let cfg = ThetaConfig::default();
        let chi = Characteristic::new(vec![0], vec![0]);
        assert!(matches!(
            theta(&[c(0.0, 0.0)], &tau, &chi, &cfg),
            Err(Error::RadiusCap { .. })
        ));
    }
}
