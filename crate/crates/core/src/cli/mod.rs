//! Scenario orchestration behind the `cornerlab` binary.

pub mod config;
pub mod report;
mod scenarios;

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::Table;

pub use config::{apply_override, merge, DiagnosticsSpec, IncidentSpec, MediumSpec, MeshSpec, RunConfig, TruncationSpec};
pub use report::{Check, ErrorBlock, LevelReport, Output, RunReport, SCHEMA, SCHEMA_VERSION};
pub use scenarios::{catalog, find_scenario, ScenarioInfo};

#[derive(Debug, Error)]
pub enum RunError {
    /// Invalid configuration value, with the dotted path of the offending key.
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Core(e.into())
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Field { .. } => 2,
            RunError::Core(e) => e.exit_code(),
            RunError::Internal(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Field { .. } => "config",
            RunError::Core(e) => e.kind(),
            RunError::Internal(_) => "internal",
        }
    }
}

/// Assemble a configuration from the defaults of `scenario` (or the scenario
/// named in the file or the overrides), the TOML file at `path`, and
/// `key=value` overrides, in that order of precedence.
pub fn load_config(scenario: Option<&str>, path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, RunError> {
    let mut top = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            text.parse::<Table>().map_err(|e| RunError::Field {
                field: p.display().to_string(),
                message: e.to_string().trim().to_string(),
            })?
        }
        None => Table::new(),
    };
    for s in overrides {
        apply_override(&mut top, s)?;
    }
    let name = match (top.get("scenario"), scenario) {
        (Some(v), _) => v
            .as_str()
            .ok_or_else(|| RunError::Field { field: "scenario".into(), message: "must be a string".into() })?
            .to_string(),
        (None, Some(s)) => s.to_string(),
        (None, None) => {
            return Err(RunError::Field { field: "scenario".into(), message: "no scenario given".into() });
        }
    };
    let info = find_scenario(&name)?;
    let mut base = info.defaults();
    merge(&mut base, top);
    base.insert("scenario".into(), toml::Value::String(name));
    RunConfig::from_table(base)
}

/// Result of a run: the (possibly partial) report and the error that stopped it.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub error: Option<RunError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, RunError::exit_code)
    }
}

/// Execute the pipeline of the configured scenario. Artifacts go to
/// `cfg.output_dir` when set; `report.json` is written even when a stage fails.
pub fn run_scenario(cfg: &RunConfig) -> RunOutcome {
    let echo = serde_json::to_value(cfg).unwrap_or_default();
    let (info, mut report) = match find_scenario(&cfg.scenario) {
        Ok(info) => (Some(info), RunReport::new(info.name, info.anchor, echo)),
        Err(e) => {
            let mut r = RunReport::new(&cfg.scenario, "", echo);
            r.fail(&e);
            return RunOutcome { report: r, error: Some(e) };
        }
    };
    let out = match Output::new(cfg.output_dir.as_deref()) {
        Ok(o) => o,
        Err(e) => {
            let e = RunError::from(e);
            report.fail(&e);
            return RunOutcome { report, error: Some(e) };
        }
    };
    let mut error = info.and_then(|i| scenarios::run(i, cfg, &mut report, &out).err());
    if let Some(e) = &error {
        report.fail(e);
    }
    if let Err(e) = out.report(&report) {
        let e = RunError::from(e);
        if error.is_none() {
            report.fail(&e);
            error = Some(e);
        }
    }
    RunOutcome { report, error }
}

/// Run inside a dedicated pool of `threads` workers.
pub fn run_with_threads(cfg: &RunConfig, threads: Option<usize>) -> RunOutcome {
    match threads {
        None => run_scenario(cfg),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| run_scenario(cfg)),
            Err(e) => {
                let err = RunError::Internal(e.to_string());
                let mut report = RunReport::new(&cfg.scenario, "", serde_json::Value::Null);
                report.fail(&err);
                RunOutcome { report, error: Some(err) }
            }
        },
    }
}

/// Default output directory for a scenario.
pub fn default_output_dir(scenario: &str) -> PathBuf {
    PathBuf::from("runs").join(scenario)
}
