//! The `curvlab` command line: `run <config> [--set key=value]...`, `list-examples
//! [--json]`, `version`.

mod config;
mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    apply_override, Analysis, BangBangOptions, BuiltProblem, ConeConfig, GridConfig, OutputConfig, ProblemConfig,
    RunConfig, ScanConfig, SetConfig,
};
pub use run::{run_config, samples_csv, RunOutput, CSV_HEADER, EXIT_CONFIG, EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_OK};

use crate::problems::{example, EXAMPLES};

#[derive(Parser, Debug)]
#[command(name = "curvlab", about = "Curvature functionals and no-gap second-order checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the analysis described by a JSON config (or a bundled example name).
    Run {
        config: String,
        /// Override a config value by dotted path, e.g. `--set grid.cells=64`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the bundled examples.
    ListExamples {
        #[arg(long)]
        json: bool,
    },
    /// Print the version.
    Version,
}

/// Reads a config file; a missing file whose stem names a bundled example falls back to
/// the bundled config.
pub fn read_config(path: &str) -> Result<(String, Option<&'static str>), String> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok((text, None)),
        Err(e) => {
            let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or(path);
            match example(stem) {
                Some(ex) => Ok((ex.config.to_string(), Some(ex.name))),
                None => Err(format!("cannot read config `{path}`: {e}")),
            }
        }
    }
}

fn threads_from_env() {
    if let Some(n) = std::env::var("CURVLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // Ignored if a pool was already installed.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> std::io::Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&dir)?;
    let report = serde_json::to_string_pretty(&out.report).expect("report serializes");
    std::fs::write(dir.join("report.json"), report + "\n")?;
    std::fs::write(dir.join("samples.csv"), &out.samples_csv)?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time": stamp,
        "threads": rayon::current_num_threads(),
    });
    std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta).expect("serializes") + "\n")?;
    Ok(dir)
}

fn list_examples(json: bool) {
    if json {
        let rows: Vec<_> = EXAMPLES
            .iter()
            .map(|e| serde_json::json!({ "name": e.name, "description": e.label }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows).expect("serializes"));
    } else {
        for e in EXAMPLES {
            println!("{:<24} {}", e.name, e.label);
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Version => {
            println!("curvlab {}", env!("CARGO_PKG_VERSION"));
            EXIT_OK
        }
        Command::ListExamples { json } => {
            list_examples(json);
            EXIT_OK
        }
        Command::Run { config, set } => {
            threads_from_env();
            let (text, bundled) = match read_config(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            if let Some(name) = bundled {
                eprintln!("note: `{config}` not found, using bundled example `{name}`");
            }
            let cfg = match RunConfig::load(&text, &set) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {config}: {e}");
                    return EXIT_CONFIG;
                }
            };
            let out = match run_config(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {config}: {e}");
                    return EXIT_CONFIG;
                }
            };
            match write_outputs(&cfg, &out) {
                Ok(dir) => {
                    print!("{}", out.summary);
                    println!("  wrote {}", dir.join("report.json").display());
                }
                Err(e) => {
                    eprintln!("error: writing outputs to {}: {e}", cfg.output.dir);
                    return EXIT_CONFIG;
                }
            }
            out.exit_code
        }
    }
}
