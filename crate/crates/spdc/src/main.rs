use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spdc::{output, Context, RunConfig};

/// Fiber-coupled down-conversion: spectra, scans and optimization runs.
#[derive(Parser)]
#[command(name = "spdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured task and write CSV and JSON output.
    Run {
        /// Config file, or the JSON summary of an earlier run.
        config: PathBuf,
        /// Write output here instead of the config's `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Parse and check a config, print it with defaults filled in.
    Validate { config: PathBuf },
    /// Print the derived crystal constants for a config as JSON.
    Constants { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out_dir } => RunConfig::load(&config)
            .and_then(|c| spdc::run(&c, out_dir.as_deref()))
            .map(|(outcome, written)| {
                eprintln!("{} records", outcome.table.rows.len());
                println!("{}", written.csv.display());
                println!("{}", written.json.display());
            }),
        Command::Validate { config } => RunConfig::load(&config)
            .and_then(|c| Context::new(&c).map(|_| print!("{}", c.to_text()))),
        Command::Constants { config } => RunConfig::load(&config)
            .and_then(|c| Context::new(&c))
            .map(|ctx| print!("{}", output::to_json(&ctx.constants_json()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spdc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
