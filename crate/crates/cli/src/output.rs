//! Errors, exit codes, CSV formatting and run manifests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

/// Version of the manifest layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs: exit code 2.
    Config(String),
    /// A numerical routine failed: exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Numerical(m) => ("numerical", m),
        };
        json!({ "error": { "kind": kind, "message": message }, "exit_code": self.exit_code() }).to_string()
    }
}

impl From<yukawa_stripes::Error> for CliError {
    fn from(e: yukawa_stripes::Error) -> Self {
        match e {
            yukawa_stripes::Error::Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-joined row terminated by LF.
pub fn row<I: IntoIterator<Item = String>>(cells: I) -> String {
    let mut s = cells.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Collects the artifacts of one run and writes its manifest.
pub struct Run {
    command: &'static str,
    dir: PathBuf,
    started: Instant,
    outputs: Vec<String>,
    pub seeds: Vec<u64>,
    pub tolerances: Value,
    pub results: Value,
}

impl Run {
    pub fn new(command: &'static str, dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            command,
            dir: dir.to_path_buf(),
            started: Instant::now(),
            outputs: Vec::new(),
            seeds: Vec::new(),
            tolerances: json!({}),
            results: json!({}),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>.manifest.json` and returns its path.
    pub fn finish(mut self, inputs: &impl Serialize) -> CliResult<PathBuf> {
        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": inputs,
            "seeds": self.seeds,
            "tolerances": self.tolerances,
            "versions": { "yukawa_stripes": yukawa_stripes::VERSION, "yukawa_cli": env!("CARGO_PKG_VERSION") },
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
            "outputs": self.outputs,
            "results": self.results,
        });
        let name = format!("{}.manifest.json", self.command);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write(&name, &text)?;
        Ok(self.dir.join(name))
    }
}
