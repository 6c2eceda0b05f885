use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Record of one scenario run: which inputs produced which outputs, the
/// metric table, and the verdict of every expected result. Every listed
/// output exists after a successful run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    /// SHA-256 of the scenario text, for reproducibility.
    pub scenario_hash: String,
    pub config: ConfigEcho,
    pub outputs: Vec<String>,
    /// One record per exported trace arc: which estimator, which arc, its
    /// value shape, and the CSV file holding it.
    pub trace_arcs: Vec<TraceArcRecord>,
    pub metrics: BTreeMap<String, f64>,
    pub expectations: Vec<ExpectationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceArcRecord {
    pub estimator: String,
    pub arc: String,
    pub shape: [usize; 2],
    pub file: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub step: f64,
    pub t_max: f64,
    pub j_max: u32,
    pub zeno_guard: u32,
    pub estimators: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExpectationRecord {
    pub expression: String,
    pub observed: Option<f64>,
    pub pass: bool,
}

pub fn hash_text(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
