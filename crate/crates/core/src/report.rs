//! Residual records and their JSON/CSV serialization.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Diagnostic,
}

/// One evaluated identity. Gating records pass iff `residual ≤ tolerance`;
/// diagnostic records never affect an exit code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub suite: String,
    pub identity: String,
    pub equation: String,
    pub inputs: String,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub wall_time_ms: f64,
}

impl ResidualReport {
    pub fn gating(
        suite: &str,
        identity: &str,
        equation: &str,
        inputs: impl Into<String>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        // NaN compares false, so a NaN residual fails
        let verdict = if residual <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        ResidualReport {
            suite: suite.into(),
            identity: identity.into(),
            equation: equation.into(),
            inputs: inputs.into(),
            residual,
            tolerance,
            verdict,
            wall_time_ms: 0.0,
        }
    }

    pub fn diagnostic(
        suite: &str,
        identity: &str,
        equation: &str,
        inputs: impl Into<String>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        ResidualReport {
            verdict: Verdict::Diagnostic,
            ..Self::gating(suite, identity, equation, inputs, residual, tolerance)
        }
    }

    pub fn with_time(mut self, ms: f64) -> Self {
        self.wall_time_ms = ms;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// Whether a diagnostic record would have passed had it been gating.
    pub fn within_tolerance(&self) -> bool {
        self.residual <= self.tolerance
    }
}

pub fn sort_reports(records: &mut [ResidualReport]) {
    records.sort_by(|a, b| {
        (&a.suite, &a.identity, &a.inputs).cmp(&(&b.suite, &b.identity, &b.inputs))
    });
}

pub fn to_json(records: &[ResidualReport]) -> String {
    serde_json::to_string_pretty(records).expect("reports serialize")
}

pub fn to_csv(records: &[ResidualReport]) -> String {
    let mut out = String::from("suite,identity,equation,inputs,residual,tolerance,verdict,wall_time_ms\n");
    for r in records {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Diagnostic => "diagnostic",
        };
        out.push_str(&format!(
            "{},{},{},{},{:e},{:e},{},{}\n",
            csv_field(&r.suite),
            csv_field(&r.identity),
            csv_field(&r.equation),
            csv_field(&r.inputs),
            r.residual,
            r.tolerance,
            verdict,
            r.wall_time_ms
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write through a temporary file in the same directory and rename it over
/// the target, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(suite: &str, id: &str, inputs: &str, r: f64) -> ResidualReport {
        ResidualReport::gating(suite, id, "a = b", inputs, r, 1e-8)
    }

    #[test]
    fn empty_list() {
        assert_eq!(serde_json::to_string(&Vec::<ResidualReport>::new()).unwrap(), "[]");
    }

    #[test]
    fn verdicts() {
        assert_eq!(rec("s", "i", "", 1e-9).verdict, Verdict::Pass);
        assert_eq!(rec("s", "i", "", 1e-7).verdict, Verdict::Fail);
        assert_eq!(rec("s", "i", "", f64::NAN).verdict, Verdict::Fail);
        let d = ResidualReport::diagnostic("s", "i", "", "", 1.0, 1e-8);
        assert!(d.passed() && !d.within_tolerance());
    }

    #[test]
    fn sorting_and_csv() {
        let mut v = vec![rec("b", "x", "1", 0.0), rec("a", "y", "2", 0.0), rec("a", "x", "3", 0.0)];
        sort_reports(&mut v);
        let keys: Vec<_> = v.iter().map(|r| (r.suite.as_str(), r.identity.as_str())).collect();
        assert_eq!(keys, vec![("a", "x"), ("a", "y"), ("b", "x")]);
        assert_eq!(to_csv(&v).lines().count(), v.len() + 1);
    }

    #[test]
    fn json_round_trip() {
        let v = vec![rec("periods", "tau-symmetry", "seed=1", 1.2345678901234567e-13)];
        let back: Vec<ResidualReport> = serde_json::from_str(&to_json(&v)).unwrap();
        assert_eq!(back, v);
    }
}
