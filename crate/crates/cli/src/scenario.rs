//! Versioned JSON scenario files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use barrier_cpg::simulation::KickSchedule;
use barrier_cpg::NetworkModel;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Malformed or inconsistent input; maps to exit code 2.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "schema error: {}", self.0)
    }
}

impl std::error::Error for SchemaError {}

pub fn schema_err(msg: impl Into<String>) -> anyhow::Error {
    SchemaError(msg.into()).into()
}

/// A model given inline or as a path relative to the scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    File { file: PathBuf },
    Inline(Box<NetworkModel>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub label: String,
    pub theta0: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_default_kicks")]
    pub kicks: KickSchedule,
}

fn is_default_kicks(k: &KickSchedule) -> bool {
    *k == KickSchedule::default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Convergence window; defaults to 10 time units or 10% of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

/// A scenario with its model resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub model: NetworkModel,
}

impl Scenario {
    pub fn inline(name: &str, model: NetworkModel, runs: Vec<RunSpec>, t_end: f64, tol: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: Some(name.to_string()),
            model: ModelSource::Inline(Box::new(model)),
            runs,
            t_end: Some(t_end),
            tol: Some(tol),
            window: None,
        }
    }
}

pub fn check_version(v: u32) -> anyhow::Result<()> {
    if v != SCHEMA_VERSION {
        return Err(schema_err(format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")));
    }
    Ok(())
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| schema_err(format!("cannot read {}: {e}", path.display())))
}

pub fn load(path: &Path) -> anyhow::Result<Loaded> {
    let text = read(path)?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| schema_err(format!("{}: {e}", path.display())))?;
    check_version(scenario.schema_version)?;
    let model = match &scenario.model {
        ModelSource::Inline(m) => (**m).clone(),
        ModelSource::File { file } => {
            let full = path.parent().unwrap_or(Path::new(".")).join(file);
            let text = read(&full)?;
            serde_json::from_str(&text).map_err(|e| schema_err(format!("{}: {e}", full.display())))?
        }
    };
    for run in &scenario.runs {
        if run.theta0.len() != model.node_count() {
            return Err(schema_err(format!(
                "run {:?} has {} initial phases for {} nodes",
                run.label,
                run.theta0.len(),
                model.node_count()
            )));
        }
        run.kicks.validate(model.node_count()).map_err(|e| schema_err(format!("run {:?}: {e}", run.label)))?;
    }
    Ok(Loaded { scenario, model })
}
