//! Configuration-driven entry point wiring semigroups, shock laws, and
//! experiments into machine-readable results.
//!
//! Exit codes: 0 when every enabled check passes, 1 when a check fails
//! (the worst margin is named on stderr), 2 on configuration or I/O
//! errors.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, ExperimentKind, FUNCTIONAL_KINDS};

#[derive(Parser)]
#[command(name = "shocksim", version, about = "Shock-driven semigroup simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        /// Path to the JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the config seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Replaces the config replica count.
        #[arg(long)]
        replicas_override: Option<usize>,
        /// Suppresses progress output on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// List experiment kinds, semigroups, shock laws, and defaults.
    List,
}

fn main() -> ExitCode {
    init_thread_pool();
    match Cli::parse().command {
        Command::List => {
            print_listing();
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            seed_override,
            replicas_override,
            quiet,
        } => run(config, out, seed_override, replicas_override, quiet),
    }
}

/// `SHOCKSIM_THREADS` caps worker parallelism; results do not depend on it.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("SHOCKSIM_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed_override: Option<u64>,
    replicas_override: Option<usize>,
    quiet: bool,
) -> ExitCode {
    let mut cfg = match ExperimentConfig::from_file(&config_path) {
        Ok(cfg) => cfg,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(replicas) = replicas_override {
        cfg.replicas = Some(replicas);
    }
    let out_dir = out
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let result = match experiments::execute(&cfg, &out_dir.display().to_string()) {
        Ok(result) => result,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    if let Err(err) = output::write_artifacts(&result, &out_dir) {
        eprintln!("error: cannot write artifacts: {err}");
        return ExitCode::from(2);
    }

    if !quiet {
        let mut lines = String::new();
        for check in &result.checks {
            lines.push_str(&format!(
                "{} {}: {:e} vs {:e}\n",
                if check.pass { "PASS" } else { "FAIL" },
                check.name,
                check.value,
                check.threshold
            ));
        }
        lines.push_str(&format!("artifacts written to {}\n", out_dir.display()));
        print_ignoring_pipe(&lines);
    }
    if result.pass() {
        ExitCode::SUCCESS
    } else {
        if let Some(worst) = result.worst_failure() {
            eprintln!(
                "check failed: {} = {:e} exceeds {:e} by {:e}",
                worst.name,
                worst.value,
                worst.threshold,
                worst.value - worst.threshold
            );
        }
        ExitCode::from(1)
    }
}

/// Writes to stdout, swallowing broken-pipe errors (e.g. `shocksim list |
/// head`).
fn print_ignoring_pipe(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn print_listing() {
    let mut text = String::from("experiments:\n");
    for kind in ExperimentKind::ALL {
        text.push_str(&format!("  {}\n", kind.name()));
    }
    text.push_str(concat!(
        "semigroups:\n",
        "  ode          params: rho\n",
        "  plaplacian   params: n, length, p, dt_max (default 1e-3), q (default 2), weights\n",
        "weights: constant | piecewise | per-cell\n",
        "shock laws:\n",
        "  zero | gaussian-iid-coords(sigma) | uniform-box(half_width)\n",
        "  scaled-bump(amplitude) | two-point(magnitude)\n",
    ));
    text.push_str(&format!("functionals: {}\n", FUNCTIONAL_KINDS.join(" | ")));
    text.push_str(concat!(
        "initials: zero | scalar(value) | bump(amplitude)\n",
        "defaults:\n",
        "  shocks: zero; psi: v-norm (e-property: clipped-v-norm clip=10); initial: zero\n",
        "  quad_dt: min(1e-2/theta, dt_max); burn_in: 50/theta; batches: 32\n",
        "  replicas: path-dump 1, bounds 100, slln 4000, clt 2000,\n",
        "            ck-test 10000, e-property 100, moments 100000\n",
        "env: SHOCKSIM_THREADS caps parallelism (results are independent of it)\n",
    ));
    print_ignoring_pipe(&text);
}
