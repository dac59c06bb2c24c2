use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snowline::cli::{run, ExperimentConfig, ExperimentKind, ParamsSpec, RunError};

#[derive(Parser)]
#[command(
    name = "snowline",
    version,
    about = "Experiments on snowflaked line metrics and their products"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Randomised sweep of the profile and line-metric inequalities.
    VerifyLemmas(Common),
    /// Rescaled balls against Euclidean balls.
    Tangents(Common),
    /// Covering numbers and the Assouad-dimension sweep.
    Covering(Common),
    /// Plate modulus divergence.
    Modulus(Common),
    /// Triangle-inequality sweep of the compactified ball metric.
    SphereMetric(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `out`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the default recipe truncated at this depth.
    #[arg(long)]
    n_max: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.verb {
        Verb::VerifyLemmas(c) => (ExperimentKind::VerifyLemmas, c),
        Verb::Tangents(c) => (ExperimentKind::Tangents, c),
        Verb::Covering(c) => (ExperimentKind::Covering, c),
        Verb::Modulus(c) => (ExperimentKind::Modulus, c),
        Verb::SphereMetric(c) => (ExperimentKind::SphereMetric, c),
    };
    match execute(kind, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: ExperimentKind, common: Common) -> Result<i32, RunError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path, Some(kind))?,
        None => ExperimentConfig::new(kind),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n_max) = common.n_max {
        config.params = ParamsSpec::Default { n_max };
    }
    let out = common
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let summary = run(&config, &out)?;
    for c in &summary.failed {
        eprintln!("contract failed: {} ({})", c.name, c.detail);
    }
    println!("{}", summary.table_path.display());
    println!("{}", summary.manifest_path.display());
    Ok(summary.exit_code)
}
