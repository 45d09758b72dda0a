//! Batch front-end for the `jjtls` simulator.
//!
//! A run reads one JSON configuration, executes one analysis verb and writes
//! `<verb>.csv` (plus any auxiliary tables) and `manifest.json` into an
//! output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::{CliError, CliResult};

use commands::CommandOutput;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    SweepCoupling,
    Compare,
    Gate,
    Readout,
    Universality,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::SweepCoupling => "sweep-coupling",
            Verb::Compare => "compare",
            Verb::Gate => "gate",
            Verb::Readout => "readout",
            Verb::Universality => "universality",
        }
    }

    pub fn execute(self, r: &config::Resolved) -> CliResult<CommandOutput> {
        match self {
            Verb::SweepCoupling => commands::sweep_coupling(r),
            Verb::Compare => commands::compare(r),
            Verb::Gate => commands::gate(r),
            Verb::Readout => commands::readout(r),
            Verb::Universality => commands::universality(r),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Files written by one run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Parses `raw_config`, runs `verb` on a dedicated thread pool and writes
/// the outputs into `out_dir`.
pub fn run(verb: Verb, raw_config: &str, out_dir: &Path, opts: &RunOptions) -> CliResult<RunSummary> {
    let start = Instant::now();
    let resolved = config::load(raw_config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    let output = pool.install(|| verb.execute(&resolved))?;

    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for (stem, table) in &output.tables {
        let path = out_dir.join(format!("{stem}.csv"));
        std::fs::write(&path, table.to_csv())?;
        files.push(path);
    }
    let names = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = manifest::build(
        verb.name(),
        raw_config,
        &resolved,
        names,
        output.warnings.clone(),
        opts.seed,
        opts.threads,
        start.elapsed().as_secs_f64(),
    );
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(&path, text + "\n")?;
    files.push(path);
    Ok(RunSummary { files, warnings: output.warnings })
}
