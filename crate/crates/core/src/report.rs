use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
    #[serde(rename = "error")]
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "n/a",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub residual: Option<f64>,
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSummary {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub verdict: Verdict,
    pub points: usize,
    pub f_summary: FSummary,
    /// Largest value of each residual over the sample.
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scene: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub classification: Option<ClassificationSummary>,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    /// 0 all pass, 3 if any check hit a numeric error, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else if self.checks.iter().any(|c| c.status == Status::Error) {
            3
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scene {} (seed {})", self.scene, self.seed);
        if let Some(c) = &self.classification {
            let _ = writeln!(
                out,
                "field: {} over {} points, f in [{:.2e}, {:.2e}]",
                c.verdict, c.points, c.f_summary.min, c.f_summary.max
            );
        }
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            out,
            "{:<width$}  {:<6}  {:>9}  witness",
            "check", "status", "residual"
        );
        for c in &self.checks {
            let residual = c.residual.map_or("-".to_string(), |r| format!("{r:.2e}"));
            let witness = c.witness.as_ref().map_or(String::new(), |w| {
                let p: Vec<String> = w.point.iter().map(|x| format!("{x:.3}")).collect();
                format!("[{}]", p.join(", "))
            });
            let _ = writeln!(
                out,
                "{:<width$}  {:<6}  {:>9}  {}",
                c.name,
                c.status.label(),
                residual,
                witness
            );
            if let Some(w) = &c.witness {
                for (k, v) in &w.values {
                    let _ = writeln!(out, "{:<width$}    {k} = {v:.2e}", "");
                }
            }
            if let Some(d) = &c.detail {
                let _ = writeln!(out, "{:<width$}    {d}", "");
            }
        }
        out
    }
}
