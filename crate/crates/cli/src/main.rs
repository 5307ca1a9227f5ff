use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dyadic_cli::config::{ExperimentConfig, Format};
use dyadic_cli::error::{CliError, EXIT_CHECK_FAILED, EXIT_PASS, EXIT_USAGE};
use dyadic_cli::manifest::MANIFEST_NAME;

/// Environment variable that overrides the output directory of the config.
const OUT_DIR_ENV: &str = "DYADIC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "dyadic",
    version,
    about = "Run dyadic shell model experiments from a JSON configuration",
    after_help = "\
Output directory precedence: --out, then $DYADIC_OUT_DIR, then output_dir in the config, then ./out.

Exit codes:
  0  every check passed
  1  usage or configuration error
  2  a hypothesis of the checked statement does not hold for the data
  3  numerical failure (stiffness, step limit, blow-up, shooting bracket or precision)
  4  the run completed but at least one check failed
  5  I/O error"
)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for parallel sections and sweeps.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Seed for random initial data, replacing the one in the config.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,

    /// Artifact format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn execute(args: Args) -> Result<i32, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        if !cfg.override_seed(seed) {
            log::warn!("--seed given but the data spec is not random; ignored");
        }
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.validate()?;
    if let Some(w) = cfg.workers {
        // a second initialization can only fail if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let out = args
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let manifest = dyadic_cli::run(&cfg, &out)?;
    for v in &manifest.verdicts {
        println!(
            "{:<28} {:<4} value={:e} needs {}",
            v.name,
            if v.passed { "pass" } else { "FAIL" },
            v.value,
            v.condition
        );
    }
    println!("manifest: {}", out.join(MANIFEST_NAME).display());
    Ok(if manifest.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_PASS as u8 });
        }
    };
    let code = match execute(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
