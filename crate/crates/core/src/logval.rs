//! Complex numbers stored by their logarithm.
//!
//! σ(n·u) grows like `exp(c·n²)` so the ψ sequences overflow `f64` well
//! before n = 10 on some curves. Products and quotients are formed on the
//! logarithms; sums are only taken after rescaling to a common exponent.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    /// `ln|z| + i·arg z`, meaningless when `zero` is set.
    pub ln: Complex64,
    pub zero: bool,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        ln: Complex64::new(0.0, 0.0),
        zero: true,
    };
    pub const ONE: LogValue = LogValue {
        ln: Complex64::new(0.0, 0.0),
        zero: false,
    };

    pub fn from_ln(ln: Complex64) -> Self {
        LogValue { ln, zero: false }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            Self::ZERO
        } else {
            LogValue {
                ln: z.ln(),
                zero: false,
            }
        }
    }

    /// `ln|z|`, or `-inf` for zero.
    pub fn log_abs(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            self.ln.re
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.zero {
            Complex64::new(0.0, 0.0)
        } else {
            self.ln.exp()
        }
    }

    /// `z / exp(shift)` as an ordinary complex number.
    pub fn scaled(&self, shift: f64) -> Complex64 {
        if self.zero {
            Complex64::new(0.0, 0.0)
        } else {
            (self.ln - shift).exp()
        }
    }

    pub fn mul(&self, other: &LogValue) -> LogValue {
        if self.zero || other.zero {
            Self::ZERO
        } else {
            Self::from_ln(self.ln + other.ln)
        }
    }

    /// Panics on division by an exact zero.
    pub fn div(&self, other: &LogValue) -> LogValue {
        assert!(!other.zero, "division by an exact zero LogValue");
        if self.zero {
            Self::ZERO
        } else {
            Self::from_ln(self.ln - other.ln)
        }
    }

    pub fn powi(&self, k: i64) -> LogValue {
        if k == 0 {
            return Self::ONE;
        }
        if self.zero {
            return Self::ZERO;
        }
        Self::from_ln(self.ln * k as f64)
    }

    pub fn neg(&self) -> LogValue {
        if self.zero {
            *self
        } else {
            Self::from_ln(self.ln + Complex64::new(0.0, std::f64::consts::PI))
        }
    }

    pub fn scale(&self, c: Complex64) -> LogValue {
        self.mul(&LogValue::from_complex(c))
    }
}

/// Sum of products of log values, returned as `(sum, largest term)` both
/// divided by `exp(shift)` where `shift` is the largest log magnitude.
pub fn sum_products(terms: &[(f64, Vec<LogValue>)]) -> (Complex64, f64, f64) {
    let prods: Vec<(f64, LogValue)> = terms
        .iter()
        .map(|(c, fs)| {
            let p = fs.iter().fold(LogValue::ONE, |acc, f| acc.mul(f));
            (*c, p)
        })
        .collect();
    let shift = prods
        .iter()
        .filter(|(c, p)| *c != 0.0 && !p.zero)
        .map(|(_, p)| p.ln.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return (Complex64::new(0.0, 0.0), 0.0, 0.0);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut big: f64 = 0.0;
    for (c, p) in &prods {
        let v = p.scaled(shift) * *c;
        big = big.max(v.norm());
        sum += v;
    }
    (sum, big, shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let z = Complex64::new(-3.0, 0.25);
        let l = LogValue::from_complex(z);
        assert!((l.to_complex() - z).norm() < 1e-15);
        assert!(LogValue::from_complex(Complex64::new(0.0, 0.0)).zero);
    }

    #[test]
    fn arithmetic() {
        let a = Complex64::new(1.5, -2.0);
        let b = Complex64::new(-0.5, 0.75);
        let la = LogValue::from_complex(a);
        let lb = LogValue::from_complex(b);
        assert!((la.mul(&lb).to_complex() - a * b).norm() < 1e-14);
        assert!((la.div(&lb).to_complex() - a / b).norm() < 1e-14);
        assert!((la.powi(3).to_complex() - a * a * a).norm() < 1e-13);
        assert!((la.neg().to_complex() + a).norm() < 1e-15);
    }

    #[test]
    fn huge_products_cancel() {
        let big = LogValue::from_ln(Complex64::new(2000.0, 0.3));
        let t = vec![(1.0, vec![big, big]), (-1.0, vec![big.powi(2)])];
        let (s, m, shift) = sum_products(&t);
        assert!(s.norm() < 1e-12 * m);
        assert_eq!(shift, 4000.0);
    }
}
