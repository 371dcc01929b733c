use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use poisson_obstacles::experiment::{
    error_report, exit_code, parse_config, run, ExperimentConfig, ExperimentKind,
};
use poisson_obstacles::Error;

/// Monte Carlo experiments on the Poisson hard-obstacle model.
#[derive(Parser)]
#[command(name = "poisson-obstacles", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vacant volume fraction.
    Vacancy(RunArgs),
    /// Vacant cluster census per trial.
    Clusters(RunArgs),
    /// Exponential tail of the origin cluster size.
    Tail(RunArgs),
    /// Largest cluster against ln L.
    Scaling(RunArgs),
    /// Critical intensity from spanning probabilities.
    NuC(RunArgs),
    /// Free unit-ball census and the threshold check.
    FreeBalls(RunArgs),
    /// Largest obstacle-free ball.
    Clearing(RunArgs),
    /// Cell-partition occupation bound on the largest cluster.
    BecPartition(RunArgs),
    /// Trial-state energy per volume.
    BecEnergy(RunArgs),
    /// Rate-condition classifiers on sequence fixtures.
    BecConditions(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; defaults for the subcommand when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory, overriding the configured one.
    #[arg(long, env = "POISSON_OBSTACLES_OUT")]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        use ExperimentKind as K;
        match self {
            Command::Vacancy(a) => (K::Vacancy, a),
            Command::Clusters(a) => (K::Clusters, a),
            Command::Tail(a) => (K::Tail, a),
            Command::Scaling(a) => (K::Scaling, a),
            Command::NuC(a) => (K::NuC, a),
            Command::FreeBalls(a) => (K::FreeBalls, a),
            Command::Clearing(a) => (K::Clearing, a),
            Command::BecPartition(a) => (K::BecPartition, a),
            Command::BecEnergy(a) => (K::BecEnergy, a),
            Command::BecConditions(a) => (K::BecConditions, a),
        }
    }
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::for_kind(kind),
    };
    if config.kind != kind {
        return Err(Error::Config(format!(
            "config is for `{}`, not `{}`",
            config.kind.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.to_string_lossy().into_owned();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    let result = load(kind, &args).and_then(|config| {
        let output = run(&config, args.threads)?;
        let dir = PathBuf::from(&config.out_dir);
        output.write_to(&dir)?;
        Ok(dir)
    });
    match result {
        Ok(dir) => {
            println!("{}", json!({ "status": "ok", "exit_code": 0, "out_dir": dir }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", error_report(&e));
            ExitCode::from(exit_code(e.kind()) as u8)
        }
    }
}
