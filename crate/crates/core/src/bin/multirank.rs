//! Thin command-line front end over `multirank::experiment`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multirank::experiment::{execute, ExperimentConfig, Verb};

#[derive(Parser)]
#[command(version, about = "Nonparametric preference completion experiments")]
struct Cli {
    #[command(subcommand)]
    verb: VerbArg,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's top-level seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report directory; defaults to the config's `out`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum VerbArg {
    /// Synthetic consistency sweep.
    Synth,
    /// Run whatever the config's `mode` says.
    Run,
    /// Validation grid search on the first resample.
    Grid,
    /// Score a saved ranking collection against held-out ratings.
    Eval,
    /// Write train/val/test split manifests.
    Split,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = &cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut loaded = match ExperimentConfig::load(config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(s) = cli.seed {
        loaded.config.seed = s;
    }
    let out = match (&cli.out, &loaded.config.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => loaded.resolve(o),
        (None, None) => PathBuf::from("out"),
    };
    let verb = match cli.verb {
        VerbArg::Synth => Verb::Synth,
        VerbArg::Run => Verb::Run,
        VerbArg::Grid => Verb::Grid,
        VerbArg::Eval => Verb::Eval,
        VerbArg::Split => Verb::Split,
    };
    match execute(verb, &loaded, &out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
