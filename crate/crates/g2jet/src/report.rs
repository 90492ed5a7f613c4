//! Machine-readable verification reports.
//!
//! A report is a list of claims, each with a stable id, a formula-style
//! anchor describing the identity being checked, a pass/fail status, and a
//! witness (the offending data) on failure. Serialization is deterministic:
//! field order is fixed and no volatile data is included unless timing
//! collection is explicitly requested.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Claim {
    pub id: String,
    /// The identity being checked, as a formula string.
    pub anchor: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Claim {
    pub fn pass(id: &str, anchor: &str) -> Self {
        Claim {
            id: id.to_string(),
            anchor: anchor.to_string(),
            status: Status::Pass,
            witness: None,
        }
    }

    pub fn fail(id: &str, anchor: &str, witness: String) -> Self {
        Claim {
            id: id.to_string(),
            anchor: anchor.to_string(),
            status: Status::Fail,
            witness: Some(witness),
        }
    }

    pub fn check(id: &str, anchor: &str, ok: bool, witness: impl FnOnce() -> String) -> Self {
        if ok {
            Claim::pass(id, anchor)
        } else {
            Claim::fail(id, anchor, witness())
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub backend: String,
    pub order: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs_digest: Option<String>,
    pub claims: Vec<Claim>,
    pub summary: Summary,
    /// Milliseconds per phase; only populated when timing collection is
    /// requested, so that default reports are byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<(String, u64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
}

impl Report {
    pub fn new(command: &str, backend: &str, order: u32, seed: u64, claims: Vec<Claim>) -> Self {
        let pass = claims.iter().filter(|c| c.passed()).count();
        let fail = claims.len() - pass;
        Report {
            artifact: "g2jet".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            backend: backend.to_string(),
            order,
            seed,
            inputs_digest: None,
            claims,
            summary: Summary { pass, fail },
        timings: None,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Human rendering; the structured JSON is the contract.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} — {} (backend {}, order {}, seed {})\n",
            self.artifact, self.version, self.command, self.backend, self.order, self.seed
        ));
        for c in &self.claims {
            let s = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
            };
            out.push_str(&format!("  [{s}] {}  ({})\n", c.id, c.anchor));
            if let Some(w) = &c.witness {
                out.push_str(&format!("         witness: {w}\n"));
            }
        }
        out.push_str(&format!(
            "{} passed, {} failed\n",
            self.summary.pass, self.summary.fail
        ));
        out
    }
}
