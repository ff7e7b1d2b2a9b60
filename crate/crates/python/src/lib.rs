//! Python bindings: curves, period data, the sigma context and its ℘/ψ
//! functions, and the suite runner.

use kleinian::abel;
use kleinian::psi;
use kleinian::suite::{self, RunError};
use kleinian::{Complex64, Curve, CurvePoint, DivisorPair, Error, JacPoint, SigmaContext, SuiteConfig};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidCurve(_) | Error::DegenerateCurve(_) | Error::OffCurve { .. } | Error::InvalidArgument(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn point(curve: &Curve, x: Complex64, y: Option<Complex64>) -> PyResult<CurvePoint> {
    match y {
        Some(y) => CurvePoint::affine(curve, x, y).map_err(err),
        None => Ok(CurvePoint::above(curve, x, 1.0)),
    }
}

fn labels(s: &str) -> PyResult<Vec<u8>> {
    let out: Vec<u8> = s.bytes().map(|b| b.wrapping_sub(b'0')).collect();
    if !(2..=4).contains(&out.len()) || out.iter().any(|&l| l != 1 && l != 2) {
        return Err(PyValueError::new_err(format!("bad ℘ labels '{s}', expected e.g. \"12\" or \"2222\"")));
    }
    Ok(out)
}

/// Monic odd-degree curve `y² = f(x)`.
#[pyclass(name = "Curve", frozen)]
struct PyCurve {
    inner: Curve,
}

#[pymethods]
impl PyCurve {
    /// Coefficients `λ₀ … λ_{2g+1}`, constant term first, leading one last.
    #[new]
    fn new(lambdas: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyCurve { inner: Curve::new(lambdas).map_err(err)? })
    }

    #[staticmethod]
    fn from_roots(roots: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyCurve { inner: Curve::from_roots(&roots).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (seed, genus=2))]
    fn random(seed: u64, genus: usize) -> PyResult<Self> {
        if genus != 1 && genus != 2 {
            return Err(PyValueError::new_err("genus must be 1 or 2"));
        }
        Ok(PyCurve { inner: kleinian::curve::random_curve(seed, genus) })
    }

    #[getter]
    fn genus(&self) -> usize {
        self.inner.genus()
    }

    #[getter]
    fn lambdas(&self) -> Vec<Complex64> {
        self.inner.lambdas().to_vec()
    }

    #[getter]
    fn roots(&self) -> Vec<Complex64> {
        self.inner.roots().to_vec()
    }

    fn f(&self, x: Complex64) -> Complex64 {
        self.inner.eval_f(x)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("curve serializes")
    }

    fn __repr__(&self) -> String {
        format!("Curve({})", self.to_json())
    }
}

/// Curve with its periods, characteristic and calibrated `γ²`.
#[pyclass(name = "Sigma", frozen)]
struct PySigma {
    ctx: SigmaContext,
}

fn rows(m: &kleinian::linalg::CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[pymethods]
impl PySigma {
    #[new]
    fn new(curve: &PyCurve) -> PyResult<Self> {
        let periods = kleinian::periods::compute_periods(&curve.inner).map_err(err)?;
        Ok(PySigma { ctx: SigmaContext::new(&curve.inner, &periods).map_err(err)? })
    }

    #[getter]
    fn genus(&self) -> usize {
        self.ctx.genus()
    }

    #[getter]
    fn tau(&self) -> Vec<Vec<Complex64>> {
        rows(&self.ctx.periods.tau)
    }

    /// Half periods `(ω′, ω″, η′, η″)` as nested lists.
    fn periods(&self) -> [Vec<Vec<Complex64>>; 4] {
        let p = &self.ctx.periods;
        [rows(&p.omega1), rows(&p.omega2), rows(&p.eta1), rows(&p.eta2)]
    }

    #[getter]
    fn gamma_sq(&self) -> Complex64 {
        self.ctx.gamma_sq
    }

    #[getter]
    fn characteristic(&self) -> String {
        self.ctx.chi.to_string()
    }

    fn legendre_residual(&self) -> f64 {
        self.ctx.periods.legendre_residual()
    }

    fn sigma(&self, u: Vec<Complex64>) -> PyResult<Complex64> {
        self.ctx.sigma(&JacPoint::new(u)).map_err(err)
    }

    /// `℘` with labels such as "11", "122" or "2222".
    fn wp(&self, u: Vec<Complex64>, which: &str) -> PyResult<Complex64> {
        let l = labels(which)?;
        if l.iter().any(|&k| k as usize > self.ctx.genus()) {
            return Err(PyValueError::new_err("℘ index above the genus"));
        }
        Ok(self.ctx.wp_jet(&JacPoint::new(u)).map_err(err)?.wp(&l))
    }

    /// `Q(u, v) = σ(u+v)σ(u−v)/(σ(u)²σ(v)²)` in its ℘ form.
    fn q(&self, u: Vec<Complex64>, v: Vec<Complex64>) -> PyResult<Complex64> {
        self.ctx.q_fn(&JacPoint::new(u), &JacPoint::new(v)).map_err(err)
    }

    /// Abel image `ι(P)` of `P = (x, y)`; `y` defaults to the principal root.
    #[pyo3(signature = (x, y=None))]
    fn embed(&self, x: Complex64, y: Option<Complex64>) -> PyResult<Vec<Complex64>> {
        let p = point(&self.ctx.curve, x, y)?;
        Ok(abel::embed(&self.ctx.curve, &p).map_err(err)?.u)
    }

    /// Abel image of the divisor `P₁ + P₂` (genus two).
    fn abel(&self, x1: Complex64, y1: Complex64, x2: Complex64, y2: Complex64) -> PyResult<Vec<Complex64>> {
        let c = &self.ctx.curve;
        let d = DivisorPair { p1: point(c, x1, Some(y1))?, p2: point(c, x2, Some(y2))? };
        Ok(abel::abel(c, &d).map_err(err)?.u)
    }

    /// `ψ₀ … ψ_n`: at `ι(P)` in genus two, at `u = ι(P)` for genus one.
    #[pyo3(signature = (x, n, y=None))]
    fn psi(&self, x: Complex64, n: usize, y: Option<Complex64>) -> PyResult<Vec<Complex64>> {
        let p = point(&self.ctx.curve, x, y)?;
        let seq = if self.ctx.genus() == 2 {
            psi::psi_on_curve(&self.ctx, &p, n.max(3)).map_err(err)?
        } else {
            let u = abel::embed(&self.ctx.curve, &p).map_err(err)?;
            psi::psi_elliptic_sequence(&self.ctx, &u, n.max(3)).map_err(err)?
        };
        Ok((0..=n as i64).map(|k| seq.value(k)).collect())
    }

    /// Relative residual of the 3×3 determinant recursion at `ι(P)`.
    #[pyo3(signature = (x, m, n, y=None))]
    fn recursion_residual(&self, x: Complex64, m: i64, n: i64, y: Option<Complex64>) -> PyResult<f64> {
        let p = point(&self.ctx.curve, x, y)?;
        let len = (m + n).max(m + 2).max(3) as usize;
        let seq = psi::psi_on_curve(&self.ctx, &p, len).map_err(err)?;
        psi::recursion_residual_g2(&seq, m, n).map_err(err)
    }
}

/// Run the suites for a JSON config (same schema as the CLI) and return the
/// report as a JSON string.
#[pyfunction]
#[pyo3(signature = (config_json="{}"))]
fn run_suites(config_json: &str) -> PyResult<String> {
    let cfg = SuiteConfig::from_json(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    match suite::run(&cfg) {
        Ok(recs) => Ok(kleinian::report::to_json(&recs)),
        Err(RunError::Config(s)) => Err(PyValueError::new_err(s)),
        Err(RunError::Io(e)) => Err(PyIOError::new_err(e.to_string())),
        Err(e) => Err(PyRuntimeError::new_err(e.to_string())),
    }
}

#[pymodule]
pub fn kleinian_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PySigma>()?;
    m.add_function(wrap_pyfunction!(run_suites, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_parsing() {
        assert_eq!(labels("122").unwrap(), vec![1, 2, 2]);
        assert!(labels("1").is_err());
        assert!(labels("13").is_err());
        assert!(labels("22222").is_err());
    }
}
