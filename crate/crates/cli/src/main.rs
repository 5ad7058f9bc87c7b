//! `lie-psido`: runs named experiments and writes one JSON summary plus one
//! CSV per table into the output directory.
//!
//! Exit status is 0 when every selected experiment passes, 1 when any fails
//! and 2 on validation or resource errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use lie_psido::experiments::config::RunConfig;
use lie_psido::experiments::{list_experiments, run, write_outcome};
use lie_psido::Error;

#[derive(Parser, Debug)]
#[command(name = "lie-psido", version, about = "Run calculus experiments and emit CSV/JSON results")]
struct Cli {
    /// INI-style run configuration; command-line flags take precedence.
    #[arg(long, env = "LIEPSIDO_CONFIG")]
    config: Option<PathBuf>,

    /// Experiment name, comma list, or `all`. Repeatable.
    #[arg(long, env = "LIEPSIDO_EXPERIMENT", value_delimiter = ',')]
    experiment: Vec<String>,

    /// Overrides each selected experiment's cutoff key.
    #[arg(long, env = "LIEPSIDO_CUTOFF")]
    cutoff: Option<f64>,

    /// Output directory [default: results].
    #[arg(long, env = "LIEPSIDO_OUT")]
    out: Option<PathBuf>,

    /// Seed for every random input [default: 1].
    #[arg(long, env = "LIEPSIDO_SEED")]
    seed: Option<u64>,

    /// Worker threads inside each experiment [default: 1].
    #[arg(long, env = "LIEPSIDO_THREADS")]
    threads: Option<usize>,

    /// Print the experiment registry and exit.
    #[arg(long)]
    list: bool,
}

fn resolve(cli: Cli) -> Result<(RunConfig, PathBuf, usize), Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if !cli.experiment.is_empty() {
        cfg.experiments = cli.experiment.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    cfg.cutoff = cli.cutoff.or(cfg.cutoff);
    cfg.seed = cli.seed.or(cfg.seed);
    let out = cli.out.or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let threads = cli.threads.or(cfg.threads).unwrap_or(1);
    if threads == 0 {
        return Err(Error::Invalid("--threads must be at least 1".into()));
    }
    if cfg.experiments.is_empty() {
        return Err(Error::Invalid("no experiment selected (use --experiment NAME or --list)".into()));
    }
    Ok((cfg, out, threads))
}

fn execute(cfg: &RunConfig, out: &std::path::Path) -> Result<bool, Error> {
    let selected = cfg.selected()?;
    // resolve every parameter set before running anything
    let params = selected.iter().map(|e| cfg.params_for(e)).collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Invalid(format!("cannot create output directory {}: {e}", out.display())))?;
    let mut all_pass = true;
    for p in &params {
        let start = Instant::now();
        let outcome = run(p)?;
        let files = write_outcome(&outcome, out)?;
        eprintln!("{}: {:.2} s", outcome.experiment, start.elapsed().as_secs_f64());
        let pass = outcome.passed();
        all_pass &= pass;
        println!("{} {} ({} files)", if pass { "PASS" } else { "FAIL" }, outcome.experiment, files.len());
        for c in outcome.checks.iter().filter(|c| !c.verdict.is_success()) {
            println!("  failed check {}: {} (target {})", c.name, c.value, c.target);
        }
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        print!("{}", list_experiments());
        return ExitCode::SUCCESS;
    }
    let (cfg, out, threads) = match resolve(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| execute(&cfg, &out)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
