//! Report schema. Everything but `timing` is deterministic given the command
//! line and input bytes.

use std::collections::BTreeMap;

use chanbox::sdp::SolverSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: String,
    pub inputs: Vec<InputDigest>,
    pub config: Config,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Excluded from the determinism contract.
    pub timing: Timing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InputError,
    ComputationError,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::ComputationError => 1,
            Status::InputError => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    /// Absent when the input could not be read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl InputDigest {
    pub fn of(name: &str, bytes: &[u8]) -> Self {
        let hash = Sha256::digest(bytes);
        Self { name: name.to_string(), sha256: Some(hash.iter().map(|b| format!("{b:02x}")).collect()) }
    }
}

/// Everything needed to rerun the computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub solver: SolverSettings,
    pub hermiticity_tol: f64,
    pub rank_tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub eps: f64,
    /// Command-specific parameters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_at: String,
    pub elapsed_seconds: f64,
}
