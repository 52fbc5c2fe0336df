//! Run reports: JSON is the primary form, with a flat CSV view.
//!
//! The JSON layout is described by `schema/report.schema.json` at the
//! repository root. Runtimes appear only when a run asks for them, so a
//! report without them depends on the seed and settings alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The statement the check exercises.
    pub anchor: String,
    pub verdict: Verdict,
    /// Largest observed violation, in the units of the check. Infinite
    /// values are stored as `f64::MAX`.
    pub max_violation: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub seed: u64,
    pub grid: usize,
    pub overrides: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixtures: Vec<String>,
    pub verdict: Verdict,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn checks(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.suites
            .iter()
            .flat_map(|s| s.checks.iter().map(move |c| (s.name.as_str(), c)))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Report = serde_json::from_str(text)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "report schema {} is not supported (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// One row per check.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "check", "anchor", "verdict", "max_violation", "tolerance", "runtime_ms"])
            .map_err(csv_err)?;
        for (suite, c) in self.checks() {
            w.write_record([
                suite,
                &c.name,
                &c.anchor,
                if c.passed() { "pass" } else { "fail" },
                &format!("{:e}", c.max_violation),
                &format!("{:e}", c.tolerance),
                &c.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            seed: 42,
            grid: 48,
            overrides: vec![],
            fixtures: vec![],
            verdict: Verdict::Fail,
            suites: vec![SuiteReport {
                name: "smooth".into(),
                verdict: Verdict::Fail,
                checks: vec![
                    Check {
                        name: "a".into(),
                        anchor: "x, with a comma".into(),
                        verdict: Verdict::Pass,
                        max_violation: 0.0,
                        tolerance: 1e-9,
                        detail: String::new(),
                        runtime_ms: None,
                    },
                    Check {
                        name: "b".into(),
                        anchor: "y".into(),
                        verdict: Verdict::Fail,
                        max_violation: 2.5,
                        tolerance: 1.0,
                        detail: "too big".into(),
                        runtime_ms: Some(1.25),
                    },
                ],
            }],
        }
    }

    #[test]
    fn json_roundtrip_and_version_gate() {
        let r = sample();
        let text = r.to_json().unwrap();
        assert_eq!(Report::from_json(&text).unwrap(), r);
        assert!(!text.contains("\"detail\": \"\""));
        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(Report::from_json(&bumped), Err(Error::Format(_))));
    }

    #[test]
    fn csv_rows() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "smooth,a,\"x, with a comma\",pass,0e0,1e-9,");
        assert_eq!(lines[2], "smooth,b,y,fail,2.5e0,1e0,1.250");
    }
}
