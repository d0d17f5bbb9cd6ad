//! Command-line front end: run experiment configs, validate them, or list
//! the known experiment kinds. Exit codes: 0 when every experiment passes,
//! 1 when any experiment fails or is inconclusive, 2 for configuration
//! errors (including unreadable or invalid config files).

use clap::{Parser, Subcommand};
use nevlab::config::{parse_config, parse_config_str, ExperimentConfig, Kind};
use nevlab::error::Error;
use nevlab::experiment::{run_experiment, ExperimentReport, Status};
use rayon::prelude::*;
use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

/// The shipped config corpus, embedded so `run --suite acceptance` works
/// from any directory.
const ACCEPTANCE_SUITE: &[(&str, &str)] = &[
    ("fmt_line", include_str!("../../configs/fmt_line.cfg")),
    ("fmt_exponential", include_str!("../../configs/fmt_exponential.cfg")),
    ("jensen_polynomial", include_str!("../../configs/jensen_polynomial.cfg")),
    ("jensen_exponential", include_str!("../../configs/jensen_exponential.cfg")),
    ("thm24_exponential", include_str!("../../configs/thm24_exponential.cfg")),
    ("thm24_parabola", include_str!("../../configs/thm24_parabola.cfg")),
    ("thm24_rational_field", include_str!("../../configs/thm24_rational_field.cfg")),
    ("thm25_exponential", include_str!("../../configs/thm25_exponential.cfg")),
    ("smt_identity_exponential", include_str!("../../configs/smt_identity_exponential.cfg")),
    ("smt_identity_parabola", include_str!("../../configs/smt_identity_parabola.cfg")),
    ("smt_inequality_exponential", include_str!("../../configs/smt_inequality_exponential.cfg")),
    ("smt_inequality_parabola", include_str!("../../configs/smt_inequality_parabola.cfg")),
    ("ramification_parabola", include_str!("../../configs/ramification_parabola.cfg")),
    ("first_integral_parabola", include_str!("../../configs/first_integral_parabola.cfg")),
    ("first_integral_exponential", include_str!("../../configs/first_integral_exponential.cfg")),
    ("autoparallel_line", include_str!("../../configs/autoparallel_line.cfg")),
    ("autoparallel_exponential", include_str!("../../configs/autoparallel_exponential.cfg")),
    ("siu_flat_exponential", include_str!("../../configs/siu_flat_exponential.cfg")),
    ("siu_membership", include_str!("../../configs/siu_membership.cfg")),
    ("diagnostic_exponential", include_str!("../../configs/diagnostic_exponential.cfg")),
];

#[derive(Parser)]
#[command(
    name = "nevlab",
    version,
    about = "Numerical laboratory for value distribution of holomorphic curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment configs; each experiment writes its CSV tables and
    /// summary.txt into its own subdirectory of --out.
    Run {
        /// Experiment config files to run.
        #[arg(value_name = "CONFIG")]
        configs: Vec<PathBuf>,
        /// Output root directory.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Run a shipped suite as well: `acceptance` is the full config corpus.
        #[arg(long)]
        suite: Option<String>,
        /// Override the random-sample seed of every experiment.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the batch (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Validate configs without running them, reporting every problem.
    Check {
        /// Experiment config files to validate.
        #[arg(value_name = "CONFIG", required = true)]
        configs: Vec<PathBuf>,
    },
    /// List the experiment kinds with their required sections.
    ListKinds,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            configs,
            out,
            suite,
            seed,
            jobs,
        } => run(configs, out, suite, seed, jobs),
        Command::Check { configs } => check(configs),
        Command::ListKinds => {
            list_kinds();
            ExitCode::SUCCESS
        }
    }
}

fn list_kinds() {
    for kind in Kind::all() {
        println!("{:<16} {}", kind.name(), kind.describe());
        println!("{:16} sections: {}", "", kind.sections());
    }
}

fn report_config_error(origin: impl Display, err: &Error) {
    match err {
        Error::Config(problems) => {
            eprintln!("{origin}: invalid config:");
            for p in problems {
                eprintln!("  {p}");
            }
        }
        other => eprintln!("{origin}: {other}"),
    }
}

fn check(paths: Vec<PathBuf>) -> ExitCode {
    let mut ok = true;
    for path in &paths {
        match parse_config(path) {
            Ok(config) => println!(
                "ok: {} ({}, kind {})",
                path.display(),
                config.name,
                config.kind.name()
            ),
            Err(err) => {
                ok = false;
                report_config_error(path.display(), &err);
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn suite_configs(name: &str) -> Result<Vec<ExperimentConfig>, String> {
    if name != "acceptance" {
        return Err(format!("unknown suite `{name}`; available: acceptance"));
    }
    ACCEPTANCE_SUITE
        .iter()
        .map(|(entry, src)| {
            parse_config_str(src).map_err(|e| format!("embedded config {entry} is invalid: {e}"))
        })
        .collect()
}

fn run(
    paths: Vec<PathBuf>,
    out: PathBuf,
    suite: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> ExitCode {
    let mut batch: Vec<ExperimentConfig> = Vec::new();
    if let Some(name) = suite {
        match suite_configs(&name) {
            Ok(configs) => batch.extend(configs),
            Err(message) => {
                eprintln!("{message}");
                return ExitCode::from(2);
            }
        }
    }
    let mut config_error = false;
    for path in &paths {
        match parse_config(path) {
            Ok(config) => batch.push(config),
            Err(err) => {
                config_error = true;
                report_config_error(path.display(), &err);
            }
        }
    }
    if config_error {
        return ExitCode::from(2);
    }
    if batch.is_empty() {
        eprintln!("nothing to run: pass config paths or --suite acceptance");
        return ExitCode::from(2);
    }
    if let Some(seed) = seed {
        for config in &mut batch {
            config.samples.seed = seed;
        }
    }
    if let Some(threads) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("thread pool: {e}");
        }
    }

    let reports: Vec<ExperimentReport> =
        batch.par_iter().map(|c| run_experiment(c, &out)).collect();

    let mut counts = [0usize; 3];
    let mut lines = Vec::new();
    for report in &reports {
        counts[match report.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }] += 1;
        lines.push(format!(
            "{}: {} ({})",
            report.name,
            report.status.word(),
            report.directory.display()
        ));
        if let Some(err) = &report.error {
            lines.push(format!("  error: {err}"));
        }
    }
    lines.push(format!(
        "total: {} pass, {} fail, {} inconclusive",
        counts[0], counts[1], counts[2]
    ));
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Err(e) = std::fs::write(out.join("suite_summary.txt"), &text) {
        eprintln!("cannot write {}: {e}", out.join("suite_summary.txt").display());
    }

    if counts[1] + counts[2] == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
