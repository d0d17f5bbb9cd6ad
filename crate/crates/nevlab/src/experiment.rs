//! Experiment pipelines behind the config format.
//!
//! [`run_experiment`] executes one validated [`ExperimentConfig`] inside its
//! own subdirectory of the output root, writing one CSV per growth table
//! plus a `summary.txt`, and returns the verdict as an
//! [`ExperimentReport`]. Module errors never escape: they land verbatim in
//! the report with status fail, and a panic in a pipeline is caught the
//! same way. Runs are deterministic — random samples come from a generator
//! seeded by the config, every numeric cell prints with fixed `{:.17e}`
//! formatting, and identical config plus seed produces byte-identical
//! files.

use crate::config::{Expectation, ExperimentConfig, Kind, SampleSpec};
use crate::connection::{self, MeromorphicConnection};
use crate::curve::ProjectiveCurve;
use crate::error::{Error, Result};
use crate::growth::{tables_to_csv, GrowthTable};
use crate::jacobian::{self, HolomorphicField, EFFECTIVITY_FLOOR};
use crate::nevanlinna;
use crate::quad::QuadLog;
use crate::zeros::{JetFn, ZeroList};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

/// Largest share of the grid's log-measure the exceptional set may own
/// before an inequality report fails.
pub const EXCEPTIONAL_SHARE: f64 = 0.05;

/// Kind-specific default for the `flatness` tolerance, used when the
/// config leaves it unset.
pub fn default_flatness(kind: Kind) -> f64 {
    match kind {
        Kind::Jensen => 1e-8,
        Kind::SmtIdentity => 0.1,
        Kind::FirstIntegral | Kind::Autoparallel => 1e-12,
        _ => 1e-3,
    }
}

/// Verdict of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The run produced no usable data points (for example, every random
    /// sample hit a pole), so the predicate was never exercised.
    Inconclusive,
}

impl Status {
    pub fn word(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// Headline statistics of the experiment's residual column.
#[derive(Debug, Clone, Copy)]
pub struct ResidualStats {
    pub max: f64,
    pub min: f64,
    pub spread: f64,
}

impl ResidualStats {
    fn of(values: &[f64]) -> Option<ResidualStats> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        values.first().map(|_| ResidualStats {
            max: hi,
            min: lo,
            spread: hi - lo,
        })
    }

    fn of_table(table: &GrowthTable) -> Option<ResidualStats> {
        Self::of(table.values())
    }
}

/// Everything `run_experiment` learned: the verdict, the files it wrote,
/// the residual statistics, kind-specific detail lines, and the full
/// perturbed-radius / skipped-node log.
#[derive(Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: Kind,
    pub status: Status,
    pub seed: u64,
    pub directory: PathBuf,
    /// File names written into `directory`.
    pub files: Vec<String>,
    pub residuals: Option<ResidualStats>,
    pub detail: Vec<String>,
    /// Perturbed radii and skipped nodes, verbatim — nothing is dropped.
    pub log_lines: Vec<String>,
    /// Module error or panic text when the pipeline did not finish.
    pub error: Option<String>,
}

impl ExperimentReport {
    /// The text of `summary.txt`.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "name: {}", self.name).expect("write to string");
        writeln!(out, "kind: {}", self.kind.name()).expect("write to string");
        writeln!(out, "status: {}", self.status.word()).expect("write to string");
        writeln!(out, "seed: {}", self.seed).expect("write to string");
        if let Some(stats) = &self.residuals {
            writeln!(out, "residual max = {:.17e}", stats.max).expect("write to string");
            writeln!(out, "residual min = {:.17e}", stats.min).expect("write to string");
            writeln!(out, "residual spread = {:.17e}", stats.spread).expect("write to string");
        }
        if let Some(err) = &self.error {
            writeln!(out, "error: {err}").expect("write to string");
        }
        for line in &self.detail {
            writeln!(out, "{line}").expect("write to string");
        }
        writeln!(out, "perturbed radii and skipped nodes:").expect("write to string");
        if self.log_lines.is_empty() {
            writeln!(out, "  (none)").expect("write to string");
        }
        for line in &self.log_lines {
            writeln!(out, "  {line}").expect("write to string");
        }
        writeln!(out, "files:").expect("write to string");
        for file in &self.files {
            writeln!(out, "  {file}").expect("write to string");
        }
        out
    }
}

struct Outcome {
    status: Status,
    files: Vec<String>,
    residuals: Option<ResidualStats>,
    detail: Vec<String>,
    log_lines: Vec<String>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            status: Status::Fail,
            files: Vec::new(),
            residuals: None,
            detail: Vec::new(),
            log_lines: Vec::new(),
        }
    }
}

/// Run one experiment in `output_root/<name>/`. Never panics and never
/// returns an error: failures are reported through the status and the
/// `error` field.
pub fn run_experiment(config: &ExperimentConfig, output_root: &Path) -> ExperimentReport {
    let dir = output_root.join(sanitize(&config.name));
    let mut report = ExperimentReport {
        name: config.name.clone(),
        kind: config.kind,
        status: Status::Fail,
        seed: config.samples.seed,
        directory: dir.clone(),
        files: Vec::new(),
        residuals: None,
        detail: Vec::new(),
        log_lines: Vec::new(),
        error: None,
    };
    if let Err(e) = std::fs::create_dir_all(&dir) {
        report.error = Some(format!("cannot create {}: {e}", dir.display()));
        return report;
    }
    match catch_unwind(AssertUnwindSafe(|| execute(config, &dir))) {
        Ok(Ok(outcome)) => {
            report.status = outcome.status;
            report.files = outcome.files;
            report.residuals = outcome.residuals;
            report.detail = outcome.detail;
            report.log_lines = outcome.log_lines;
        }
        Ok(Err(err)) => report.error = Some(err.to_string()),
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with a non-string payload".into());
            report.error = Some(format!("panic: {message}"));
        }
    }
    match std::fs::write(dir.join("summary.txt"), report.summary_text()) {
        Ok(()) => report.files.push("summary.txt".into()),
        Err(e) => {
            report.status = Status::Fail;
            report
                .error
                .get_or_insert_with(|| format!("cannot write summary.txt: {e}"));
        }
    }
    report
}

fn execute(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    match config.kind {
        Kind::Fmt => run_fmt(config, dir),
        Kind::Jensen => run_jensen(config, dir),
        Kind::Thm24 => run_thm24(config, dir),
        Kind::Thm25 => run_thm25(config, dir),
        Kind::SmtIdentity => run_smt_identity(config, dir),
        Kind::SmtInequality => run_smt_inequality(config, dir),
        Kind::Ramification => run_ramification(config, dir),
        Kind::FirstIntegral => run_first_integral(config, dir),
        Kind::Autoparallel => run_autoparallel(config, dir),
        Kind::SiuResidual => run_siu_residual(config, dir),
        Kind::Diagnostic => run_diagnostic(config, dir),
    }
}

/// Directory- and file-name-safe rendering of a label.
fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "experiment".into()
    } else {
        cleaned
    }
}

fn write_file(dir: &Path, name: &str, content: &str, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    files.push(name.to_string());
    Ok(())
}

fn write_table(dir: &Path, table: &GrowthTable, files: &mut Vec<String>) -> Result<()> {
    write_file(
        dir,
        &format!("{}.csv", sanitize(table.label())),
        &table.to_csv(),
        files,
    )
}

fn write_combined(dir: &Path, tables: &[&GrowthTable], files: &mut Vec<String>) -> Result<()> {
    write_file(dir, "combined.csv", &tables_to_csv(tables)?, files)
}

fn quad_log_lines(log: &QuadLog) -> Vec<String> {
    let mut out = Vec::new();
    for p in &log.perturbations {
        out.push(format!(
            "perturbed radius ({}): requested {:.17e}, used {:.17e}",
            p.context, p.requested, p.used
        ));
    }
    for note in &log.notes {
        out.push(format!("note: {note}"));
    }
    out
}

fn zero_lines(label: &str, zeros: &ZeroList) -> Vec<String> {
    let mut out = vec![format!("{label}: {} zero(s)", zeros.len())];
    for z in zeros.iter() {
        out.push(format!(
            "  zero at ({:.17e}, {:.17e}), multiplicity {}",
            z.location.re, z.location.im, z.multiplicity
        ));
    }
    out
}

fn curve_of(config: &ExperimentConfig) -> Result<&ProjectiveCurve> {
    config
        .curve
        .as_ref()
        .ok_or_else(|| Error::Domain("config has no [curve] section".into()))
}

fn lift_of(config: &ExperimentConfig) -> Result<&HolomorphicField> {
    config
        .lift
        .as_ref()
        .ok_or_else(|| Error::Domain("config has no [field] sections".into()))
}

fn flatness(config: &ExperimentConfig) -> f64 {
    config
        .tolerances
        .flatness
        .unwrap_or_else(|| default_flatness(config.kind))
}

/// The seeded sample cloud shared by the pointwise kinds.
fn sample_points(spec: &SampleSpec) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let b = spec.box_radius;
    (0..spec.count)
        .map(|_| Complex64::new(rng.gen_range(-b..b), rng.gen_range(-b..b)))
        .collect()
}

/// Errors that disqualify a single sample point without disqualifying the
/// experiment: poles of the chart, stationary points of the curve, and
/// probe points where every minor vanishes.
fn skippable(err: &Error) -> bool {
    matches!(
        err,
        Error::SingularPoint { .. } | Error::StationaryPoint { .. } | Error::DegenerateProbe { .. }
    )
}

fn run_fmt(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let divisor = config
        .divisor
        .as_ref()
        .ok_or_else(|| Error::Domain("config has no [divisor] section".into()))?;
    let opts = config.tolerances.quad_opts();
    let tables = nevanlinna::fmt_tables(curve, divisor, &config.grid, &opts)?;
    let columns = [
        &tables.characteristic,
        &tables.proximity,
        &tables.counting,
        &tables.residual,
    ];

    let mut outcome = Outcome::new();
    for table in columns {
        write_table(dir, table, &mut outcome.files)?;
    }
    write_combined(dir, &columns, &mut outcome.files)?;

    let flat = flatness(config);
    let spread = tables.residual.spread();
    let spread_ok = spread <= flat;
    let residual_ok = match config.tolerances.expected_residual {
        Some(expected) => tables
            .residual
            .values()
            .iter()
            .all(|v| (v - expected).abs() <= flat),
        None => true,
    };
    outcome.status = if spread_ok && residual_ok {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of_table(&tables.residual);
    outcome
        .detail
        .push(format!("flatness tolerance = {flat:.17e}"));
    if let Some(expected) = config.tolerances.expected_residual {
        outcome
            .detail
            .push(format!("expected residual = {expected:.17e}"));
    }
    outcome.log_lines = quad_log_lines(&tables.log);
    Ok(outcome)
}

fn run_jensen(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let spec = config
        .jensen
        .as_ref()
        .ok_or_else(|| Error::Domain("config has no [jensen] section".into()))?;
    let opts = config.tolerances.quad_opts();
    let table = GrowthTable::tabulate("jensen_residual", &config.grid, |r| {
        nevanlinna::jensen_check(&spec.g, spec.inner, r, &opts)
    })?;

    let mut outcome = Outcome::new();
    write_table(dir, &table, &mut outcome.files)?;
    let flat = flatness(config);
    let worst = table.max_abs();
    outcome.status = if worst <= flat {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of_table(&table);
    outcome.detail = vec![
        format!("inner radius = {:.17e}", spec.inner),
        format!("max |residual| = {worst:.17e}, tolerance = {flat:.17e}"),
    ];
    Ok(outcome)
}

fn run_thm24(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let lift = lift_of(config)?;
    let radius = config.grid.max_radius();
    let mut log = QuadLog::default();

    let formula_fn = JetFn(|z, order| jacobian::jacobian_scalar(curve, lift, z, order));
    let wedge_fn = JetFn(|z, order| jacobian::wedge_scalar(curve, lift, z, order));
    let formula_zeros =
        nevanlinna::count_zeros_logged(&formula_fn, radius, "Jacobian scalar, formula route", &mut log)?;
    let wedge_zeros =
        nevanlinna::count_zeros_logged(&wedge_fn, radius, "Jacobian scalar, wedge route", &mut log)?;

    let formula_table = nevanlinna::counting_table("N_ram_formula", &formula_zeros, &config.grid)?;
    let wedge_table = nevanlinna::counting_table("N_ram_wedge", &wedge_zeros, &config.grid)?;
    let gap = formula_table.zip_with(&wedge_table, "route_gap", |a, b| a - b)?;

    let mut outcome = Outcome::new();
    write_table(dir, &formula_table, &mut outcome.files)?;
    write_table(dir, &wedge_table, &mut outcome.files)?;
    write_table(dir, &gap, &mut outcome.files)?;
    write_combined(dir, &[&formula_table, &wedge_table, &gap], &mut outcome.files)?;

    let tol = config.tolerances.zero_match;
    let matched = zero_lists_match(&formula_zeros, &wedge_zeros, tol);
    outcome.status = if matched { Status::Pass } else { Status::Fail };
    outcome.residuals = ResidualStats::of_table(&gap);
    outcome.detail.push(format!(
        "zero lists {} within {tol:.17e}",
        if matched { "match" } else { "disagree" }
    ));
    outcome
        .detail
        .extend(zero_lines("formula route", &formula_zeros));
    outcome.detail.extend(zero_lines("wedge route", &wedge_zeros));
    outcome.log_lines = quad_log_lines(&log);
    Ok(outcome)
}

fn zero_lists_match(a: &ZeroList, b: &ZeroList, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(x, y)| {
            (x.location - y.location).norm() <= tol * (1.0 + x.location.norm())
                && x.multiplicity == y.multiplicity
        })
}

fn run_thm25(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let lift = lift_of(config)?;
    let slack = config.tolerances.slack;
    let samples = sample_points(&config.samples);

    let mut outcome = Outcome::new();
    let mut rows = String::from("re,im,g,phi_norm\n");
    let mut margins = Vec::new();
    let mut violations = 0usize;
    for &z in &samples {
        match jacobian::g_ratio(curve, lift, z) {
            Ok(ratio) => {
                writeln!(
                    rows,
                    "{:.17e},{:.17e},{:.17e},{:.17e}",
                    z.re, z.im, ratio.g, ratio.phi_norm
                )
                .expect("write to string");
                margins.push(ratio.phi_norm - ratio.g);
                if ratio.g > ratio.phi_norm + slack {
                    violations += 1;
                    outcome.detail.push(format!(
                        "violation at ({:.17e}, {:.17e}): g = {:.17e} > |phi| = {:.17e}",
                        z.re, z.im, ratio.g, ratio.phi_norm
                    ));
                }
            }
            Err(err) if skippable(&err) => {
                outcome.log_lines.push(format!(
                    "skipped sample at ({:.17e}, {:.17e}): {err}",
                    z.re, z.im
                ));
            }
            Err(err) => return Err(err),
        }
    }
    write_file(dir, "samples.csv", &rows, &mut outcome.files)?;

    outcome.status = if margins.is_empty() {
        Status::Inconclusive
    } else if violations == 0 {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of(&margins);
    outcome.detail.insert(
        0,
        format!(
            "{} of {} samples evaluated, {} violation(s) at slack {slack:.17e}; \
             margin |phi| - g in the residual statistics",
            margins.len(),
            samples.len(),
            violations
        ),
    );
    Ok(outcome)
}

fn run_smt_identity(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let lift = lift_of(config)?;
    let opts = config.tolerances.quad_opts();
    let tables = jacobian::smt_identity_residual(curve, lift, &config.grid, &opts)?;
    let columns = [
        &tables.lhs,
        &tables.canonical,
        &tables.section,
        &tables.ramification,
        &tables.residual,
    ];

    let mut outcome = Outcome::new();
    for table in columns {
        write_table(dir, table, &mut outcome.files)?;
    }
    write_combined(dir, &columns, &mut outcome.files)?;

    let flat = flatness(config);
    let spread = tables.residual.spread();
    let spread_ok = spread <= flat;
    let residual_ok = match config.tolerances.expected_residual {
        Some(expected) => tables
            .residual
            .values()
            .iter()
            .all(|v| (v - expected).abs() <= flat),
        None => true,
    };
    outcome.status = if spread_ok && residual_ok {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of_table(&tables.residual);
    outcome
        .detail
        .push(format!("flatness tolerance = {flat:.17e}"));
    if let Some(expected) = config.tolerances.expected_residual {
        outcome
            .detail
            .push(format!("expected residual = {expected:.17e}"));
    }
    outcome
        .detail
        .extend(zero_lines("Jacobian scalar", &tables.zeros));
    outcome.log_lines = quad_log_lines(&tables.log);
    Ok(outcome)
}

fn run_smt_inequality(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let lift = lift_of(config)?;
    let opts = config.tolerances.quad_opts();
    let report = jacobian::smt_inequality_report(curve, lift, &config.grid, &opts)?;
    let columns = [&report.lhs, &report.normalized, &report.normalized_plus];

    let mut outcome = Outcome::new();
    for table in columns {
        write_table(dir, table, &mut outcome.files)?;
    }
    write_combined(dir, &columns, &mut outcome.files)?;

    let share_ok = report.exceptional_log_measure <= EXCEPTIONAL_SHARE * report.grid_log_measure;
    outcome.status = if report.bound.is_finite() && share_ok {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of_table(&report.normalized);
    outcome.detail.push(format!("bound = {:.17e}", report.bound));
    outcome.detail.push(format!(
        "exceptional log-measure = {:.17e} of {:.17e}",
        report.exceptional_log_measure, report.grid_log_measure
    ));
    for r in &report.exceptional {
        outcome.detail.push(format!("exceptional radius r = {r:.17e}"));
    }
    outcome
        .detail
        .extend(zero_lines("Jacobian scalar", &report.zeros));
    outcome.log_lines = quad_log_lines(&report.log);
    Ok(outcome)
}

fn run_ramification(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let lift = lift_of(config)?;
    let tables = jacobian::ramification(curve, lift, &config.grid)?;

    let mut outcome = Outcome::new();
    write_table(dir, &tables.counting, &mut outcome.files)?;

    let values = tables.counting.values();
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let nonnegative = values.iter().all(|&v| v >= -1e-12);
    outcome.status = if nondecreasing && nonnegative {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of_table(&tables.counting);
    outcome.detail.push(format!(
        "counting column nondecreasing: {nondecreasing}; nonnegative: {nonnegative}"
    ));
    outcome
        .detail
        .extend(zero_lines("Jacobian scalar", &tables.zeros));
    outcome.log_lines = quad_log_lines(&tables.log);
    Ok(outcome)
}

fn run_first_integral(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let phi = config
        .first_integral
        .as_ref()
        .ok_or_else(|| Error::Domain("config has no [first-integral] section".into()))?;
    let expect = config
        .expect
        .ok_or_else(|| Error::Domain("first-integral config declares no expectation".into()))?;
    let samples = sample_points(&config.samples);
    let deviation = jacobian::first_integral_check(curve, phi, &samples)?;

    let mut outcome = Outcome::new();
    let n = curve.n();
    let mut rows = String::from("re,im,phi_re,phi_im\n");
    for &z in &samples {
        let w = curve.affine_jets(z, 0)?;
        let bind =
            |name: &str| crate::jacobian::chart_var_index(name, n).ok().map(|j| w[j - 1].clone());
        let value = phi.eval_jet(&bind, z)?.value();
        writeln!(rows, "{:.17e},{:.17e},{:.17e},{:.17e}", z.re, z.im, value.re, value.im)
            .expect("write to string");
    }
    write_file(dir, "samples.csv", &rows, &mut outcome.files)?;
    let flat = flatness(config);
    let threshold = config.tolerances.threshold;
    let (label, pass) = match expect {
        Expectation::Degenerate => ("degenerate", deviation <= flat),
        Expectation::Nondegenerate => ("nondegenerate", deviation > threshold),
        _ => {
            return Err(Error::Domain(
                "first-integral expects `degenerate` or `nondegenerate`".into(),
            ))
        }
    };
    outcome.status = if pass { Status::Pass } else { Status::Fail };
    outcome.residuals = ResidualStats::of(&[deviation]);
    outcome.detail = vec![
        format!("expected {label}"),
        format!(
            "level-set deviation = {deviation:.17e} over {} samples \
             (degenerate at {flat:.17e}, nondegenerate above {threshold:.17e})",
            samples.len()
        ),
    ];
    Ok(outcome)
}

fn run_autoparallel(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let conn = config
        .connection
        .clone()
        .unwrap_or_else(|| MeromorphicConnection::flat(curve.n()));
    let expect = config
        .expect
        .ok_or_else(|| Error::Domain("autoparallel config declares no expectation".into()))?;
    let samples = sample_points(&config.samples);

    let mut outcome = Outcome::new();
    let mut rows = String::from("re,im,abs_wronskian\n");
    let mut magnitudes = Vec::new();
    for &z in &samples {
        match connection::autoparallel_wronskian(curve, &conn, z) {
            Ok(w) => {
                writeln!(rows, "{:.17e},{:.17e},{:.17e}", z.re, z.im, w.norm())
                    .expect("write to string");
                magnitudes.push(w.norm());
            }
            Err(err) if skippable(&err) => {
                outcome.log_lines.push(format!(
                    "skipped sample at ({:.17e}, {:.17e}): {err}",
                    z.re, z.im
                ));
            }
            Err(err) => return Err(err),
        }
    }
    write_file(dir, "samples.csv", &rows, &mut outcome.files)?;

    let flat = flatness(config);
    let max = magnitudes.iter().copied().fold(0.0f64, f64::max);
    let (label, pass) = match expect {
        Expectation::Autoparallel => ("autoparallel", max <= flat),
        Expectation::Generic => ("generic", max > EFFECTIVITY_FLOOR),
        _ => {
            return Err(Error::Domain(
                "autoparallel expects `autoparallel` or `generic`".into(),
            ))
        }
    };
    outcome.status = if magnitudes.is_empty() {
        Status::Inconclusive
    } else if pass {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of(&magnitudes);
    outcome.detail = vec![
        format!("expected {label}"),
        format!(
            "max |Wronskian| = {max:.17e} over {} of {} samples",
            magnitudes.len(),
            samples.len()
        ),
    ];
    Ok(outcome)
}

fn run_siu_residual(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let conn = config
        .connection
        .clone()
        .unwrap_or_else(|| MeromorphicConnection::flat(curve.n()));
    let opts = config.tolerances.quad_opts();
    let report = connection::siu_smt_residual(curve, &conn, &config.grid, &opts)?;
    let columns = [
        &report.lhs,
        &report.ramification,
        &report.normalized,
        &report.normalized_plus,
    ];

    let mut outcome = Outcome::new();
    for table in columns {
        write_table(dir, table, &mut outcome.files)?;
    }
    write_combined(dir, &columns, &mut outcome.files)?;

    let share_ok = report.exceptional_log_measure <= EXCEPTIONAL_SHARE * report.grid_log_measure;
    outcome.status = if report.bound.is_finite() && share_ok {
        Status::Pass
    } else {
        Status::Fail
    };
    outcome.residuals = ResidualStats::of_table(&report.normalized);
    outcome.detail.push(format!("bound = {:.17e}", report.bound));
    outcome.detail.push(format!(
        "exceptional log-measure = {:.17e} of {:.17e}",
        report.exceptional_log_measure, report.grid_log_measure
    ));
    for r in &report.exceptional {
        outcome.detail.push(format!("exceptional radius r = {r:.17e}"));
    }
    outcome
        .detail
        .extend(zero_lines("autoparallel Wronskian", &report.zeros));
    for sample in &report.membership {
        outcome.detail.push(format!(
            "pole membership at ({:.17e}, {:.17e}): |t(f(z))| = {:.17e}",
            sample.at.re, sample.at.im, sample.section_magnitude
        ));
    }
    outcome.log_lines = quad_log_lines(&report.log);
    Ok(outcome)
}

fn run_diagnostic(config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let curve = curve_of(config)?;
    let opts = config.tolerances.quad_opts();
    let radii: Vec<f64> = config.grid.iter().collect();
    let diagnostic = nevanlinna::calculus_lemma_diagnostic(
        |z| nevanlinna::fs_pullback_density(curve, z),
        &radii,
        config.tolerances.delta,
        &opts,
    )?;

    let mut outcome = Outcome::new();
    let mut rows = String::from("r,circle_integral,characteristic,ratio\n");
    for row in &diagnostic.rows {
        writeln!(
            rows,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            row.r, row.circle_integral, row.characteristic, row.ratio
        )
        .expect("write to string");
    }
    write_file(dir, "diagnostic.csv", &rows, &mut outcome.files)?;

    outcome.status = Status::Pass;
    outcome.residuals = ResidualStats::of(
        &diagnostic
            .rows
            .iter()
            .map(|row| row.ratio)
            .collect::<Vec<_>>(),
    );
    outcome.detail.push(format!(
        "Borel exponent delta = {:.17e}; {} of {} segments exceed the growth bound \
         (exceptional measure {:.17e} of span {:.17e})",
        config.tolerances.delta,
        diagnostic.violating.len(),
        diagnostic.rows.len().saturating_sub(1),
        diagnostic.exceptional_measure,
        diagnostic.grid_span
    ));
    for segment in &diagnostic.violating {
        outcome.detail.push(format!(
            "fast-growth segment [{:.17e}, {:.17e}]: slope {:.17e} > bound {:.17e}",
            segment.lo, segment.hi, segment.slope, segment.bound
        ));
    }
    Ok(outcome)
}
