//! Experiment manifests and their hashes.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use langevin_ldp::ModelParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Simulate,
    Cycles,
    Stationary,
    Variational,
    Fpt,
    Tails,
    Weibull,
    Renewal,
    Report,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Simulate => "simulate",
            Operation::Cycles => "cycles",
            Operation::Stationary => "stationary",
            Operation::Variational => "variational",
            Operation::Fpt => "fpt",
            Operation::Tails => "tails",
            Operation::Weibull => "weibull",
            Operation::Renewal => "renewal",
            Operation::Report => "report",
        }
    }
}

/// One experiment: model parameters, an operation with its knobs, and the
/// seed every random stream is derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub seed: u64,
    pub operation: Operation,
    /// Operation-specific settings; omitted ones take their defaults.
    #[serde(default = "empty_object")]
    pub knobs: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Failure::invalid(format!("malformed manifest: {e}")))?;
        if m.name.trim().is_empty() {
            return Err(Failure::invalid("manifest name is empty"));
        }
        if !m.knobs.is_object() {
            return Err(Failure::invalid("knobs must be a JSON object"));
        }
        Ok(m)
    }

    /// Parses the knobs into the operation's settings type.
    pub fn knobs<K: for<'de> Deserialize<'de>>(&self) -> Result<K, Failure> {
        serde_json::from_value(self.knobs.clone())
            .map_err(|e| Failure::invalid(format!("bad knobs for {}: {e}", self.operation.name())))
    }
}

/// Hex SHA-256 of a JSON value. `serde_json` maps keep keys sorted, so the
/// serialization is canonical.
pub fn hash_json(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("JSON values always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes of a resolved manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hashes {
    /// Everything that determines the results: name, params, seed,
    /// operation and resolved knobs.
    pub manifest_hash: String,
    /// The parameter set alone (params, operation, resolved knobs): runs
    /// that differ only in seed or name share it.
    pub config_hash: String,
}

pub fn hashes(m: &Manifest, resolved_knobs: &Value) -> Hashes {
    let params = serde_json::to_value(m.params).expect("params serialize");
    let config = serde_json::json!({
        "params": params,
        "operation": m.operation,
        "knobs": resolved_knobs,
    });
    let full = serde_json::json!({
        "name": m.name,
        "seed": m.seed,
        "config": config,
    });
    Hashes {
        manifest_hash: hash_json(&full),
        config_hash: hash_json(&config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let text = r#"{"name":"s","params":{"kappa":1.0,"p":4.0,"sigma":1.0,"delta":0.5},"seed":7,"operation":"stationary","knobs":{"p_grid":[2.0,4.0]}}"#;
        let m: Manifest = serde_json::from_str(text).unwrap();
        let again: Manifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"name":"s","operation":"stationary","colour":"red"}"#;
        assert!(serde_json::from_str::<Manifest>(text).is_err());
    }

    #[test]
    fn hashes_separate_seed_from_config() {
        let mut m: Manifest = serde_json::from_str(r#"{"name":"s","operation":"stationary"}"#).unwrap();
        let k = serde_json::json!({});
        let a = hashes(&m, &k);
        m.seed = 99;
        let b = hashes(&m, &k);
        assert_ne!(a.manifest_hash, b.manifest_hash);
        assert_eq!(a.config_hash, b.config_hash);
        m.params.p = 6.0;
        assert_ne!(hashes(&m, &k).config_hash, a.config_hash);
    }
}
