//! Experiment configuration: a strict JSON schema with defaults filled at
//! parse time, duplicate/unknown key rejection, and a canonical hash.
//!
//! Schema (all top-level keys optional unless noted):
//!
//! ```json
//! {
//!   "kind": "resolvent-sweep" | "decay-run" | "lemma-certify" | "esmall-probe",
//!   "profile": { "sigma": 1.5708, "beta": 0, "c0": 1, "variant": "exact-v" },
//!   "grid":    { "scheme": "fd2", "n": null },
//!   "q":       { "min": 16, "max": 1024, "factor": 2 }  or  { "values": [...] },
//!   "e-policy": "all-modes"  or  { "fixed": [0, 0.1, 0.25] },
//!   "data":    { "family": "gaussian-strip", "k": 8, "width": null },
//!   "evolve":  { "t-final": 1000, "dt": 0.05, "stride": 10 },
//!   "tau":     null,
//!   "seed":    42,
//!   "out":     "out"
//! }
//! ```
//!
//! `kind` and `profile` are required. `grid.n = null` selects the per-solve
//! rule `max(256, 8*ceil(q))`. `data.width = null` selects a quarter of the
//! undamped half-width. `tau = null` selects the midpoint of `(sigma, pi)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::damping::{DampingProfile, Variant};
use crate::grid::Scheme;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("duplicate key {key:?} in object at byte {at}")]
    DuplicateKey { key: String, at: usize },
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("sigma out of (0, pi): {0}")]
    SigmaOutOfRange(f64),
    #[error("beta must be >= 0, got {0}")]
    NegativeBeta(f64),
    #[error("c0 must be >= 1, got {0}")]
    BadC0(f64),
    #[error("{0}")]
    Profile(#[from] crate::damping::DampingError),
    #[error("q grid is empty or invalid: {0}")]
    BadQGrid(String),
    #[error("grid n must be even and >= 8, got {0}")]
    BadGridN(usize),
    #[error("e-policy fixed list must be nonempty")]
    EmptyEList,
    #[error("evolve settings invalid: {0}")]
    BadEvolve(String),
    #[error("tau must lie in (sigma, pi), got {0}")]
    BadTau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ResolventSweep,
    DecayRun,
    LemmaCertify,
    EsmallProbe,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentKind::ResolventSweep => write!(f, "resolvent-sweep"),
            ExperimentKind::DecayRun => write!(f, "decay-run"),
            ExperimentKind::LemmaCertify => write!(f, "lemma-certify"),
            ExperimentKind::EsmallProbe => write!(f, "esmall-probe"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub sigma: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
}

fn one() -> f64 {
    1.0
}

fn default_variant() -> Variant {
    Variant::ExactV
}

impl ProfileConfig {
    pub fn build(&self) -> Result<DampingProfile, ConfigError> {
        if !(self.sigma > 0.0 && self.sigma < PI) {
            return Err(ConfigError::SigmaOutOfRange(self.sigma));
        }
        if self.beta < 0.0 {
            return Err(ConfigError::NegativeBeta(self.beta));
        }
        if self.c0 < 1.0 {
            return Err(ConfigError::BadC0(self.c0));
        }
        Ok(DampingProfile::new(
            self.sigma,
            self.beta,
            self.c0,
            self.variant,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Explicit node count; `None` selects `max(256, 8*ceil(q))` per solve.
    #[serde(default)]
    pub n: Option<usize>,
}

fn default_scheme() -> Scheme {
    Scheme::Fd2
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            scheme: default_scheme(),
            n: None,
        }
    }
}

/// Frequency grid: explicit values or a geometric range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

impl Default for QGrid {
    fn default() -> Self {
        QGrid {
            values: None,
            min: Some(16.0),
            max: Some(1024.0),
            factor: Some(2.0),
        }
    }
}

impl QGrid {
    /// Normalizes to an explicit, sorted value list.
    pub fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        if let Some(vals) = &self.values {
            if vals.is_empty() || vals.iter().any(|&v| !(v > 0.0)) {
                return Err(ConfigError::BadQGrid(
                    "values must be nonempty and positive".into(),
                ));
            }
            let mut v = vals.clone();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(v);
        }
        let min = self.min.unwrap_or(16.0);
        let max = self.max.unwrap_or(1024.0);
        let factor = self.factor.unwrap_or(2.0);
        if !(min > 0.0 && max >= min && factor > 1.0) {
            return Err(ConfigError::BadQGrid(format!(
                "min={min} max={max} factor={factor}"
            )));
        }
        let mut out = Vec::new();
        let mut q = min;
        while q <= max * (1.0 + 1e-12) {
            out.push(q);
            q *= factor;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EPolicy {
    /// All transverse modes with `E = q^2 - k^2` above the cut.
    AllModes,
    /// Fixed list of spectral parameters for 1D sweeps.
    Fixed(Vec<f64>),
}

impl Default for EPolicy {
    fn default() -> Self {
        EPolicy::AllModes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DataConfig {
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default = "default_k")]
    pub k: i64,
    /// Gaussian width; `None` selects `sigma/4`.
    #[serde(default)]
    pub width: Option<f64>,
    /// x-frequency for the plane-wave family.
    #[serde(default)]
    pub m: Option<i64>,
}

fn default_family() -> String {
    "gaussian-strip".to_string()
}

fn default_k() -> i64 {
    8
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            family: default_family(),
            k: default_k(),
            width: None,
            m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvolveConfig {
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_t_final() -> f64 {
    1000.0
}

fn default_dt() -> f64 {
    0.05
}

fn default_stride() -> usize {
    10
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            t_final: default_t_final(),
            dt: default_dt(),
            stride: default_stride(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub profile: ProfileConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub q: QGrid,
    #[serde(default)]
    pub e_policy: EPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub evolve: EvolveConfig,
    /// Cut for the piecewise-linear periodic weight; `None` selects the
    /// midpoint of `(sigma, pi)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_seed() -> u64 {
    42
}

/// Parses, validates, and fills defaults. The returned config serializes to
/// a canonical form that re-parses to an identical value.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    check_duplicate_keys(text)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(text)?;
    cfg.profile.build()?;
    if let Some(n) = cfg.grid.n {
        if n < 8 || n % 2 != 0 {
            return Err(ConfigError::BadGridN(n));
        }
    }
    // normalize q to an explicit list so serialization is canonical
    let resolved = cfg.q.resolve()?;
    cfg.q = QGrid {
        values: Some(resolved),
        min: None,
        max: None,
        factor: None,
    };
    if let EPolicy::Fixed(es) = &cfg.e_policy {
        if es.is_empty() {
            return Err(ConfigError::EmptyEList);
        }
    }
    if cfg.kind == ExperimentKind::EsmallProbe {
        if let EPolicy::AllModes = cfg.e_policy {
            cfg.e_policy = EPolicy::Fixed(vec![0.0, 0.1, 0.25]);
        }
    }
    if cfg.kind == ExperimentKind::DecayRun && cfg.data.is_none() {
        cfg.data = Some(DataConfig::default());
    }
    if let Some(data) = &mut cfg.data {
        if data.width.is_none() {
            data.width = Some(cfg.profile.sigma / 4.0);
        }
    }
    if cfg.tau.is_none() {
        cfg.tau = Some(0.5 * (cfg.profile.sigma + PI));
    }
    if let Some(tau) = cfg.tau {
        if !(tau > cfg.profile.sigma && tau < PI) {
            return Err(ConfigError::BadTau(tau));
        }
    }
    if !(cfg.evolve.t_final > 0.0 && cfg.evolve.dt > 0.0 && cfg.evolve.stride > 0) {
        return Err(ConfigError::BadEvolve(format!(
            "t-final={} dt={} stride={}",
            cfg.evolve.t_final, cfg.evolve.dt, cfg.evolve.stride
        )));
    }
    Ok(cfg)
}

/// Canonical serialization (field order fixed by the struct definitions).
pub fn canonical_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

/// Hash of the canonical serialization; stable under key reordering in the
/// source text because parsing normalizes first.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_json(cfg).as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Rejects duplicate keys anywhere in the document. serde_json silently
/// keeps the last occurrence, which would make typo'd configs run with
/// unintended values.
fn check_duplicate_keys(text: &str) -> Result<(), ConfigError> {
    #[derive(PartialEq)]
    enum Ctx {
        Object,
        Array,
    }
    let bytes = text.as_bytes();
    let mut stack: Vec<(Ctx, Vec<String>)> = Vec::new();
    let mut i = 0usize;
    let mut expecting_key = false;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'{' => {
                stack.push((Ctx::Object, Vec::new()));
                expecting_key = true;
                i += 1;
            }
            b'}' | b']' => {
                stack.pop();
                expecting_key = false;
                i += 1;
            }
            b'[' => {
                stack.push((Ctx::Array, Vec::new()));
                expecting_key = false;
                i += 1;
            }
            b',' => {
                expecting_key = matches!(stack.last(), Some((Ctx::Object, _)));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut key = String::new();
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' {
                        key.push(bytes[i] as char);
                        i += 1;
                        if i < bytes.len() {
                            key.push(bytes[i] as char);
                            i += 1;
                        }
                    } else {
                        key.push(bytes[i] as char);
                        i += 1;
                    }
                }
                i += 1; // closing quote
                if expecting_key {
                    if let Some((Ctx::Object, keys)) = stack.last_mut() {
                        if keys.contains(&key) {
                            return Err(ConfigError::DuplicateKey { key, at: start });
                        }
                        keys.push(key);
                    }
                    expecting_key = false;
                }
            }
            _ => {
                i += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "kind": "resolvent-sweep",
        "profile": { "sigma": 1.5708, "beta": 0 },
        "q": { "min": 16, "max": 1024 }
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::ResolventSweep);
        assert_eq!(cfg.grid.scheme, Scheme::Fd2);
        assert_eq!(cfg.grid.n, None); // auto rule max(256, 8*ceil(q))
        let qs = cfg.q.values.as_ref().unwrap();
        assert_eq!(qs.len(), 7);
        assert_eq!(qs[0], 16.0);
        assert_eq!(qs[6], 1024.0);
        assert_eq!(cfg.seed, 42);
        assert!(cfg.tau.is_some());
    }

    #[test]
    fn sigma_out_of_range_is_rejected() {
        let text = r#"{ "kind": "resolvent-sweep", "profile": { "sigma": 3.5, "beta": 0 } }"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("sigma out of (0, pi)"), "{err}");
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = r#"{
            "kind": "resolvent-sweep",
            "profile": { "sigma": 1.5, "beta": 0 },
            "seed": 1,
            "seed": 2
        }"#;
        let err = parse_config(text).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { .. }), "{err}");
    }

    #[test]
    fn nested_duplicate_key_is_rejected() {
        let text = r#"{
            "kind": "resolvent-sweep",
            "profile": { "sigma": 1.5, "sigma": 1.6, "beta": 0 }
        }"#;
        assert!(matches!(
            parse_config(text),
            Err(ConfigError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn repeated_keys_across_objects_are_fine() {
        let text = r#"{
            "kind": "decay-run",
            "profile": { "sigma": 1.5, "beta": 0 },
            "data": { "family": "gaussian-strip", "k": 4 }
        }"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.data.as_ref().unwrap().k, 4);
        // decay defaults: width filled from sigma
        assert_eq!(cfg.data.as_ref().unwrap().width, Some(1.5 / 4.0));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = r#"{
            "kind": "resolvent-sweep",
            "profile": { "sigma": 1.5, "beta": 0 },
            "qq": 3
        }"#;
        assert!(matches!(parse_config(text), Err(ConfigError::Schema(_))));
    }

    #[test]
    fn roundtrip_is_identity() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text2 = canonical_json(&cfg);
        let cfg2 = parse_config(&text2).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(config_hash(&cfg), config_hash(&cfg2));
    }

    #[test]
    fn hash_stable_under_field_reordering() {
        let a = r#"{ "kind": "resolvent-sweep", "profile": { "sigma": 1.5, "beta": 1 }, "seed": 7 }"#;
        let b = r#"{ "seed": 7, "profile": { "beta": 1, "sigma": 1.5 }, "kind": "resolvent-sweep" }"#;
        let ca = parse_config(a).unwrap();
        let cb = parse_config(b).unwrap();
        assert_eq!(config_hash(&ca), config_hash(&cb));
    }

    #[test]
    fn esmall_gets_default_e_list() {
        let text = r#"{ "kind": "esmall-probe", "profile": { "sigma": 1.5708, "beta": 0 } }"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.e_policy, EPolicy::Fixed(vec![0.0, 0.1, 0.25]));
    }

    #[test]
    fn variant_forms_parse() {
        let text = r#"{
            "kind": "resolvent-sweep",
            "profile": { "sigma": 1.5, "beta": 0, "c0": 2, "variant": { "scaled": 2.0 } }
        }"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.profile.variant, Variant::Scaled(2.0));
        assert!(cfg.profile.build().is_ok());
    }

    #[test]
    fn bad_scale_rejected_at_build() {
        let text = r#"{
            "kind": "resolvent-sweep",
            "profile": { "sigma": 1.5, "beta": 0, "c0": 2, "variant": { "scaled": 3.0 } }
        }"#;
        assert!(parse_config(text).is_err());
    }
}
