//! Scenario runner: parse, validate, execute experiments in order and write
//! reports plus a manifest.

pub mod config;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{apply_overrides, Experiment, Scenario};

use crate::error::{Error, Result};
use crate::greens::{resolvent_bound_checks, resolvent_bound_violations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub index: usize,
    pub kind: String,
    pub status: Status,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub scenario_hash: String,
    pub version: String,
    pub timestamp: u64,
    pub seed: u64,
    pub experiments: Vec<ExperimentRecord>,
    /// Every file written by the run except the manifest itself.
    pub files: Vec<String>,
    pub resolvent_bound_checks: usize,
    pub resolvent_bound_violations: usize,
}

impl RunManifest {
    /// No experiment failed.
    pub fn success(&self) -> bool {
        self.experiments.iter().all(|e| e.status != Status::Fail)
    }
}

/// `(name, document)` for each bundled scenario.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "free_ballistic",
        include_str!("../../scenarios/free_ballistic.toml"),
    ),
    (
        "supercritical_localized",
        include_str!("../../scenarios/supercritical_localized.toml"),
    ),
    (
        "parseval_audit",
        include_str!("../../scenarios/parseval_audit.toml"),
    ),
    (
        "commutator_audit",
        include_str!("../../scenarios/commutator_audit.toml"),
    ),
    (
        "barrier_demo",
        include_str!("../../scenarios/barrier_demo.toml"),
    ),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Names and descriptions of the bundled scenarios.
pub fn list_scenarios() -> Vec<(String, String)> {
    BUNDLED
        .iter()
        .map(|(n, t)| {
            let desc = Scenario::parse(t)
                .map(|s| s.description)
                .unwrap_or_default();
            (n.to_string(), desc)
        })
        .collect()
}

/// A scenario file path, or the name of a bundled scenario when no such file exists.
pub fn read_scenario_text(source: &str) -> Result<String> {
    let path = Path::new(source);
    if path.exists() {
        return Ok(fs::read_to_string(path)?);
    }
    bundled(source).map(str::to_string).ok_or_else(|| {
        Error::Config(format!(
            "no scenario file or bundled scenario named `{source}`"
        ))
    })
}

/// Parse with overrides applied, then validate.
pub fn load(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    apply_overrides(&mut doc, overrides)?;
    let canonical = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
    let scenario = Scenario::parse(&canonical)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Full parse and grid sanity without computation.
pub fn validate(text: &str, overrides: &[String]) -> Result<Scenario> {
    load(text, overrides)
}

pub fn scenario_hash(scenario: &Scenario) -> Result<String> {
    Ok(hex::encode(Sha256::digest(
        scenario.canonical()?.as_bytes(),
    )))
}

/// Execute every experiment in declaration order and write the reports and
/// `manifest.json` into `out` (or the scenario's `output_dir`, or
/// `runs/<name>`).
pub fn run(scenario: &Scenario, out: Option<&Path>) -> Result<RunManifest> {
    let spec = scenario.validate()?;
    let dir: PathBuf = match (out, &scenario.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("runs").join(&scenario.name),
    };
    fs::create_dir_all(&dir)?;
    let checks0 = resolvent_bound_checks();
    let violations0 = resolvent_bound_violations();
    let mut records = Vec::new();
    let mut all_files = Vec::new();
    for (index, exp) in scenario.experiments.iter().enumerate() {
        let kind = exp.kind();
        let stem = format!("{index:02}_{kind}");
        let seed = scenario.seed.wrapping_add(index as u64);
        let record = match experiments::run_experiment(&spec, exp, seed) {
            Ok(outcome) => {
                let mut files = Vec::new();
                for (suffix, bytes) in &outcome.files {
                    let name = format!("{stem}{suffix}");
                    fs::write(dir.join(&name), bytes)?;
                    files.push(name);
                }
                let summary_name = format!("{stem}_summary.json");
                let mut summary = serde_json::to_vec_pretty(&outcome.summary)?;
                summary.push(b'\n');
                fs::write(dir.join(&summary_name), summary)?;
                files.push(summary_name);
                ExperimentRecord {
                    index,
                    kind: kind.into(),
                    status: outcome.status,
                    files,
                    error: None,
                    summary: outcome.summary,
                }
            }
            Err(e) => ExperimentRecord {
                index,
                kind: kind.into(),
                status: Status::Fail,
                files: Vec::new(),
                error: Some(e.in_experiment(&stem).to_string()),
                summary: serde_json::Value::Null,
            },
        };
        all_files.extend(record.files.iter().cloned());
        records.push(record);
    }
    let manifest = RunManifest {
        scenario: scenario.name.clone(),
        scenario_hash: scenario_hash(scenario)?,
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        seed: scenario.seed,
        experiments: records,
        files: all_files,
        resolvent_bound_checks: resolvent_bound_checks() - checks0,
        resolvent_bound_violations: resolvent_bound_violations() - violations0,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(dir.join("manifest.json"), bytes)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_validate() {
        for (name, text) in BUNDLED {
            let s = load(text, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&s.name, name);
        }
    }

    #[test]
    fn hash_tracks_overrides() {
        let text = bundled("barrier_demo").unwrap();
        let a = scenario_hash(&load(text, &[]).unwrap()).unwrap();
        let b = scenario_hash(&load(text, &[]).unwrap()).unwrap();
        let c = scenario_hash(&load(text, &["seed=99".into()]).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn diagonal_run_is_all_pass() {
        let text = r#"
name = "diag"
[operator]
coupling = 0.0
kernel = { type = "nn" }
potential = { type = "constant", value = 0.3 }
[[experiment]]
kind = "exponent_sweep"
p = [2.0]
t_grid = { min = 10.0, max = 100.0, points = 5 }
beta_max = 0.0
"#;
        let dir = tempfile::tempdir().unwrap();
        let s = load(text, &[]).unwrap();
        let m = run(&s, Some(dir.path())).unwrap();
        assert!(m.success());
        assert_eq!(m.experiments[0].status, Status::Pass);
        let beta = m.experiments[0].summary["estimates"][0]["beta_hat"]
            .as_f64()
            .unwrap();
        assert_eq!(beta, 0.0);
        for f in &m.files {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let listed: std::collections::BTreeSet<_> = m.files.iter().cloned().collect();
        for entry in fs::read_dir(dir.path()).unwrap() {
            let name = entry.unwrap().file_name().into_string().unwrap();
            assert!(name == "manifest.json" || listed.contains(&name), "{name}");
        }
    }
}
