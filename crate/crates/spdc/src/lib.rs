//! Configuration files, crystal constants files, CSV/JSON output and task
//! orchestration around `spdc-core`.
// `!(x > 0.0)` is deliberate: NaN must fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod config;
pub mod crystal;
pub mod output;
pub mod parallel;
pub mod tasks;

pub use config::RunConfig;
pub use output::Written;
pub use tasks::{execute, Context, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Numeric {
        context: String,
        source: spdc_core::Error,
    },

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl Error {
    /// Process exit status: 1 for bad input, 2 for numeric or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Input { .. } => 1,
            Error::Numeric { .. } | Error::Output { .. } => 2,
        }
    }
}

/// Runs the configured task and writes `<name>.csv` and `<name>.json` into
/// `out_dir` (default: the config's `output.dir`). Nothing is written if
/// the task fails.
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<(Outcome, Written), Error> {
    let outcome = execute(config)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir());
    let csv_name = format!("{}.csv", config.output_name);
    let written = Written {
        csv: dir.join(&csv_name),
        json: dir.join(format!("{}.json", config.output_name)),
    };
    let bytes = outcome.table.to_csv().map_err(|e| Error::Output {
        path: written.csv.clone(),
        message: e.to_string(),
    })?;
    output::write_file(&written.csv, &bytes)?;
    output::write_file(
        &written.json,
        output::to_json(&outcome.summary(&csv_name)).as_bytes(),
    )?;
    Ok((outcome, written))
}
