use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::RunError;
use crate::diagnostics::RadialProfile;
use crate::error::Result;
use crate::farfield::{FarFieldPattern, RellichReport};
use crate::geometry::MeshStats;
use crate::solver::SolveStats;

pub const SCHEMA: &str = "cornerlab.run_report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub mesh_s: f64,
    pub solve_s: f64,
    pub farfield_s: f64,
    pub diagnostics_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub h: f64,
    pub mesh: MeshStats,
    pub solver: SolveStats,
    pub farfield_norm: f64,
    /// Relative `L^2` error against a reference pattern, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub farfield_error: Option<f64>,
    pub rellich: RellichReport,
    pub timing: Timing,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorBlock {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub exit_code: i32,
}

impl From<&RunError> for ErrorBlock {
    fn from(e: &RunError) -> Self {
        let field = match e {
            RunError::Field { field, .. } => Some(field.clone()),
            _ => None,
        };
        Self { kind: e.kind().into(), message: e.to_string(), field, exit_code: e.exit_code() }
    }
}

/// A named pass/fail outcome derived from the diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub scenario: String,
    pub anchor: String,
    pub config: Value,
    pub threads: usize,
    pub status: &'static str,
    pub levels: Vec<LevelReport>,
    /// Ratios of far-field norms (and errors) between consecutive levels.
    pub convergence: BTreeMap<String, Vec<f64>>,
    pub diagnostics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBlock>,
}

impl RunReport {
    pub fn new(scenario: &str, anchor: &str, config: Value) -> Self {
        Self {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            scenario: scenario.into(),
            anchor: anchor.into(),
            config,
            threads: rayon::current_num_threads(),
            status: "ok",
            levels: Vec::new(),
            convergence: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            checks: Vec::new(),
            error: None,
        }
    }

    /// Record a diagnostic block; a name may appear only once.
    pub fn diagnostic(&mut self, name: &str, block: impl Serialize) -> Result<(), RunError> {
        if self.diagnostics.contains_key(name) {
            return Err(RunError::Internal(format!("diagnostic `{name}` recorded twice")));
        }
        let v = serde_json::to_value(block).map_err(|e| RunError::Internal(e.to_string()))?;
        self.diagnostics.insert(name.into(), v);
        Ok(())
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fail(&mut self, e: &RunError) {
        self.status = "error";
        self.error = Some(e.into());
    }
}

/// Destination of the run artifacts; `None` keeps everything in memory.
#[derive(Clone, Debug)]
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn create(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        match &self.dir {
            Some(d) => Ok(Some(BufWriter::new(File::create(d.join(name))?))),
            None => Ok(None),
        }
    }

    /// `profile_<name>.csv`.
    pub fn profile(&self, name: &str, p: &RadialProfile) -> Result<()> {
        if let Some(mut f) = self.create(&format!("profile_{name}.csv"))? {
            p.write_csv(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }

    /// `level,theta,re,im` for every level.
    pub fn farfield(&self, patterns: &[(usize, FarFieldPattern)]) -> Result<()> {
        if patterns.is_empty() {
            return Ok(());
        }
        if let Some(mut f) = self.create("farfield.csv")? {
            writeln!(f, "level,theta,re,im")?;
            for (level, p) in patterns {
                for (t, v) in p.angles.iter().zip(&p.values) {
                    writeln!(f, "{level},{t:.17e},{:.17e},{:.17e}", v.re, v.im)?;
                }
            }
            f.flush()?;
        }
        Ok(())
    }

    pub fn write_with(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        if let Some(mut f) = self.create(name)? {
            body(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }

    pub fn report(&self, r: &RunReport) -> Result<()> {
        self.write_with("report.json", |f| {
            serde_json::to_writer_pretty(&mut *f, r).map_err(std::io::Error::other)?;
            writeln!(f)?;
            Ok(())
        })
    }
}
