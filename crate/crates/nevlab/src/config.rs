//! Declarative experiment files.
//!
//! The format is line-oriented for hand-editability and clean diffs:
//! `key = value` pairs, `[section]` headers, `#` comments. Expression
//! values are double-quoted; lists separate quoted items with commas.
//! Two keys live at the top level (`name`, `kind`, plus the optional
//! `expect` verdict used by the first-integral and autoparallel kinds);
//! everything else sits in a named section:
//!
//! ```text
//! name = smt-identity-exponential
//! kind = smt-identity
//!
//! [curve]
//! components = "1", "z", "exp(z)"
//!
//! [field]
//! components = "0", "1"
//!
//! [pole]
//! section = "1"
//!
//! [grid]
//! min = 2
//! max = 64
//! points = 11
//!
//! [tolerances]
//! flatness = 0.1
//! ```
//!
//! `[field]` may repeat (one section per wedge factor); `[connection]`
//! holds the clearing section under `t` and sparse Christoffel entries
//! under `gamma_<a>_<b>_<c>` (or `gamma_<a>_<bc>` for single digits).
//! Validation is whole-file: every problem is collected with its line
//! number before the parse is rejected, so one `check` run surfaces all
//! mistakes at once.

use crate::connection::MeromorphicConnection;
use crate::curve::{Divisor, ProjectiveCurve};
use crate::error::{ConfigProblem, Error, Result};
use crate::expr::Expr;
use crate::growth::RGrid;
use crate::jacobian::{HolomorphicField, MeromorphicVectorField, PoleSection};
use crate::quad::QuadOpts;
use std::path::Path;

/// The experiment families the runner knows how to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Fmt,
    Jensen,
    Thm24,
    Thm25,
    SmtIdentity,
    SmtInequality,
    Ramification,
    FirstIntegral,
    Autoparallel,
    SiuResidual,
    Diagnostic,
}

impl Kind {
    pub fn all() -> [Kind; 11] {
        [
            Kind::Fmt,
            Kind::Jensen,
            Kind::Thm24,
            Kind::Thm25,
            Kind::SmtIdentity,
            Kind::SmtInequality,
            Kind::Ramification,
            Kind::FirstIntegral,
            Kind::Autoparallel,
            Kind::SiuResidual,
            Kind::Diagnostic,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Fmt => "fmt",
            Kind::Jensen => "jensen",
            Kind::Thm24 => "thm24",
            Kind::Thm25 => "thm25",
            Kind::SmtIdentity => "smt-identity",
            Kind::SmtInequality => "smt-inequality",
            Kind::Ramification => "ramification",
            Kind::FirstIntegral => "first-integral",
            Kind::Autoparallel => "autoparallel",
            Kind::SiuResidual => "siu-residual",
            Kind::Diagnostic => "diagnostic",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::all().into_iter().find(|k| k.name() == s)
    }

    /// One-line description for `list-kinds`.
    pub fn describe(&self) -> &'static str {
        match self {
            Kind::Fmt => "characteristic, proximity, counting columns and the flat FMT residual",
            Kind::Jensen => "Jensen annulus residual for an explicit function of z",
            Kind::Thm24 => "zero lists of the Jacobian scalar by two independent routes",
            Kind::Thm25 => "pointwise Schwarz bound g <= |phi| at random chart points",
            Kind::SmtIdentity => "flat residual tying the log xi average to characteristics",
            Kind::SmtInequality => "degeneracy combination normalized by log T",
            Kind::Ramification => "counting function of the Jacobian scalar's zeros",
            Kind::FirstIntegral => "level-set deviation of a rational first integral",
            Kind::Autoparallel => "autoparallel Wronskian verdict for a connection",
            Kind::SiuResidual => "connection-side degeneracy report with pole membership",
            Kind::Diagnostic => "growth-rate diagnostic for the curve's area density",
        }
    }

    /// Domain sections the kind reads, beyond the always-allowed
    /// plumbing sections (grid, samples, tolerances).
    pub fn sections(&self) -> &'static str {
        match self {
            Kind::Fmt => "curve, divisor",
            Kind::Jensen => "jensen",
            Kind::Thm24 | Kind::Thm25 | Kind::SmtIdentity | Kind::SmtInequality | Kind::Ramification => {
                "curve, field (repeatable), pole (optional)"
            }
            Kind::FirstIntegral => "curve, first-integral; top-level expect",
            Kind::Autoparallel => "curve, connection (optional); top-level expect",
            Kind::SiuResidual => "curve, connection (optional)",
            Kind::Diagnostic => "curve",
        }
    }
}

/// The verdict a config declares for kinds that test a dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    /// First integral: deviation at the degenerate tolerance.
    Degenerate,
    /// First integral: deviation above the threshold.
    Nondegenerate,
    /// Autoparallel Wronskian vanishes everywhere.
    Autoparallel,
    /// Autoparallel Wronskian is visibly nonzero somewhere.
    Generic,
}

impl Expectation {
    fn parse(s: &str) -> Option<Expectation> {
        match s {
            "degenerate" => Some(Expectation::Degenerate),
            "nondegenerate" => Some(Expectation::Nondegenerate),
            "autoparallel" => Some(Expectation::Autoparallel),
            "generic" => Some(Expectation::Generic),
            _ => None,
        }
    }
}

/// Random-sample controls for the point-sampling kinds.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Samples are drawn uniformly from the square |Re|, |Im| < box_radius.
    pub box_radius: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            count: 300,
            seed: 0,
            box_radius: 2.5,
        }
    }
}

/// Numerical tolerances; `flatness` stays `None` until the kind's default
/// applies so each experiment can pick its own.
#[derive(Debug, Clone, Copy)]
pub struct ToleranceSpec {
    pub quadrature: f64,
    pub flatness: Option<f64>,
    pub zero_match: f64,
    pub slack: f64,
    /// Deviation a nondegenerate first integral must exceed.
    pub threshold: f64,
    /// Borel exponent for the diagnostic kind.
    pub delta: f64,
    /// When set, the fmt residual must equal this value, not merely flatten.
    pub expected_residual: Option<f64>,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            quadrature: 1e-8,
            flatness: None,
            zero_match: 1e-9,
            slack: 1e-9,
            threshold: 1.0,
            delta: 0.1,
            expected_residual: None,
        }
    }
}

impl ToleranceSpec {
    pub fn quad_opts(&self) -> QuadOpts {
        QuadOpts {
            circle_tol: self.quadrature,
            area_tol: self.quadrature,
        }
    }
}

/// One Jensen experiment: a function of z and the inner annulus radius.
#[derive(Debug, Clone)]
pub struct JensenSpec {
    pub g: Expr,
    pub inner: f64,
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    pub curve: Option<ProjectiveCurve>,
    pub divisor: Option<Divisor>,
    pub lift: Option<HolomorphicField>,
    pub connection: Option<MeromorphicConnection>,
    pub first_integral: Option<Expr>,
    pub jensen: Option<JensenSpec>,
    pub expect: Option<Expectation>,
    pub grid: RGrid,
    pub samples: SampleSpec,
    pub tolerances: ToleranceSpec,
}

/// Read and validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&src)
}

/// Validate config text. Collects every problem before rejecting.
pub fn parse_config_str(src: &str) -> Result<ExperimentConfig> {
    Builder::new(src).build()
}

#[derive(Debug, Clone)]
struct Item {
    quoted: bool,
    text: String,
}

#[derive(Debug, Clone)]
struct RawEntry {
    line: usize,
    key: String,
    items: Vec<Item>,
    consumed: bool,
}

#[derive(Debug)]
struct RawSection {
    line: usize,
    name: String,
    entries: Vec<RawEntry>,
}

struct Builder {
    top: Vec<RawEntry>,
    sections: Vec<RawSection>,
    problems: Vec<ConfigProblem>,
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_top_level_commas(src: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut in_quotes = false;
    for (i, c) in src.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => {
                parts.push(&src[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&src[start..]);
    parts
}

impl Builder {
    fn new(src: &str) -> Builder {
        let mut b = Builder {
            top: Vec::new(),
            sections: Vec::new(),
            problems: Vec::new(),
        };
        b.scan(src);
        b
    }

    fn problem(&mut self, line: usize, message: impl Into<String>) {
        self.problems.push(ConfigProblem {
            line,
            message: message.into(),
        });
    }

    fn scan(&mut self, src: &str) {
        for (idx, raw_line) in src.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw_line).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let Some(name) = inner.strip_suffix(']') else {
                    self.problem(line_no, format!("unterminated section header `{line}`"));
                    continue;
                };
                let name = name.trim();
                if name.is_empty() {
                    self.problem(line_no, "empty section name");
                    continue;
                }
                self.sections.push(RawSection {
                    line: line_no,
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                self.problem(
                    line_no,
                    format!("expected `key = value` or `[section]`, got `{line}`"),
                );
                continue;
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                self.problem(line_no, "empty key before `=`");
                continue;
            }
            let mut items = Vec::new();
            let value = value.trim();
            if value.is_empty() {
                self.problem(line_no, format!("key `{key}` has an empty value"));
                continue;
            }
            if value.matches('"').count() % 2 != 0 {
                self.problem(line_no, format!("unbalanced quotes in the value of `{key}`"));
                continue;
            }
            let mut bad = false;
            for piece in split_top_level_commas(value) {
                let piece = piece.trim();
                if let Some(inner) = piece.strip_prefix('"') {
                    match inner.strip_suffix('"') {
                        Some(text) if !text.contains('"') => items.push(Item {
                            quoted: true,
                            text: text.to_string(),
                        }),
                        _ => {
                            self.problem(
                                line_no,
                                format!("malformed quoted item `{piece}` in the value of `{key}`"),
                            );
                            bad = true;
                        }
                    }
                } else if piece.is_empty() || piece.contains('"') {
                    self.problem(
                        line_no,
                        format!("malformed item `{piece}` in the value of `{key}`"),
                    );
                    bad = true;
                } else {
                    items.push(Item {
                        quoted: false,
                        text: piece.to_string(),
                    });
                }
            }
            if bad {
                continue;
            }
            let entry = RawEntry {
                line: line_no,
                key,
                items,
                consumed: false,
            };
            match self.sections.last_mut() {
                Some(section) => section.entries.push(entry),
                None => self.top.push(entry),
            }
        }
    }

    fn take_top(&mut self, key: &str) -> Option<RawEntry> {
        let pos = self.top.iter().position(|e| !e.consumed && e.key == key)?;
        self.top[pos].consumed = true;
        Some(self.top[pos].clone())
    }

    fn section_indices(&self, name: &str) -> Vec<usize> {
        self.sections
            .iter()
            .enumerate()
            .filter(|(_, s)| s.name == name)
            .map(|(i, _)| i)
            .collect()
    }

    fn take_entry(&mut self, section: usize, key: &str) -> Option<RawEntry> {
        let entries = &mut self.sections[section].entries;
        let pos = entries.iter().position(|e| !e.consumed && e.key == key)?;
        entries[pos].consumed = true;
        Some(entries[pos].clone())
    }

    fn one_string(&mut self, entry: &RawEntry) -> Option<String> {
        if entry.items.len() == 1 {
            Some(entry.items[0].text.clone())
        } else {
            self.problem(
                entry.line,
                format!("key `{}` expects a single value", entry.key),
            );
            None
        }
    }

    fn one_f64(&mut self, entry: &RawEntry) -> Option<f64> {
        let text = self.one_string(entry)?;
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.problem(
                    entry.line,
                    format!("key `{}` expects a finite number, got `{text}`", entry.key),
                );
                None
            }
        }
    }

    fn one_usize(&mut self, entry: &RawEntry) -> Option<usize> {
        let text = self.one_string(entry)?;
        match text.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.problem(
                    entry.line,
                    format!("key `{}` expects a nonnegative integer, got `{text}`", entry.key),
                );
                None
            }
        }
    }

    fn one_bool(&mut self, entry: &RawEntry) -> Option<bool> {
        let text = self.one_string(entry)?;
        match text.as_str() {
            "true" => Some(true),
            "false" => Some(false),
            _ => {
                self.problem(
                    entry.line,
                    format!("key `{}` expects true or false, got `{text}`", entry.key),
                );
                None
            }
        }
    }

    fn one_expr(&mut self, entry: &RawEntry) -> Option<Expr> {
        if entry.items.len() != 1 || !entry.items[0].quoted {
            self.problem(
                entry.line,
                format!("key `{}` expects one quoted expression", entry.key),
            );
            return None;
        }
        let text = entry.items[0].text.clone();
        match Expr::parse(&text) {
            Ok(e) => Some(e),
            Err(err) => {
                self.problem(entry.line, format!("cannot parse `{text}`: {err}"));
                None
            }
        }
    }

    fn expr_list(&mut self, entry: &RawEntry) -> Option<Vec<Expr>> {
        if entry.items.is_empty() || entry.items.iter().any(|i| !i.quoted) {
            self.problem(
                entry.line,
                format!("key `{}` expects quoted expressions separated by commas", entry.key),
            );
            return None;
        }
        let mut out = Vec::with_capacity(entry.items.len());
        let mut ok = true;
        for item in &entry.items {
            match Expr::parse(&item.text) {
                Ok(e) => out.push(e),
                Err(err) => {
                    self.problem(entry.line, format!("cannot parse `{}`: {err}", item.text));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn finish_section(&mut self, section: usize) {
        let (name, leftovers): (String, Vec<(usize, String)>) = {
            let s = &self.sections[section];
            (
                s.name.clone(),
                s.entries
                    .iter()
                    .filter(|e| !e.consumed)
                    .map(|e| (e.line, e.key.clone()))
                    .collect(),
            )
        };
        for (line, key) in leftovers {
            self.problem(line, format!("unknown key `{key}` in section [{name}]"));
        }
    }

    fn build(mut self) -> Result<ExperimentConfig> {
        let name = match self.take_top("name") {
            Some(entry) => self.one_string(&entry).unwrap_or_default(),
            None => {
                self.problem(0, "missing top-level key `name`");
                String::new()
            }
        };
        let kind = match self.take_top("kind") {
            Some(entry) => match self.one_string(&entry) {
                Some(text) => match Kind::parse(&text) {
                    Some(k) => Some(k),
                    None => {
                        let known = Kind::all().map(|k| k.name()).join(", ");
                        self.problem(
                            entry.line,
                            format!("unknown kind `{text}`; known kinds: {known}"),
                        );
                        None
                    }
                },
                None => None,
            },
            None => {
                self.problem(0, "missing top-level key `kind`");
                None
            }
        };
        let expect = match self.take_top("expect") {
            Some(entry) => match self.one_string(&entry) {
                Some(text) => match Expectation::parse(&text) {
                    Some(e) => Some(e),
                    None => {
                        self.problem(
                            entry.line,
                            format!(
                                "unknown expectation `{text}`; use degenerate, nondegenerate, \
                                 autoparallel, or generic"
                            ),
                        );
                        None
                    }
                },
                None => None,
            },
            None => None,
        };
        for entry in std::mem::take(&mut self.top) {
            if !entry.consumed {
                self.problem(entry.line, format!("unknown top-level key `{}`", entry.key));
            }
        }

        let curve = self.build_curve();
        let n = curve.as_ref().map(ProjectiveCurve::n);
        let divisor = self.build_divisor(n);
        let lift = self.build_lift(n);
        let connection = self.build_connection(n);
        let first_integral = self.build_first_integral(n);
        let grid = self.build_grid();
        let jensen = self.build_jensen(&grid);
        let samples = self.build_samples();
        let tolerances = self.build_tolerances();

        if let Some(kind) = kind {
            self.check_kind_requirements(
                kind,
                curve.is_some(),
                divisor.is_some(),
                lift.is_some(),
                connection.is_some(),
                first_integral.is_some(),
                jensen.is_some(),
                expect,
            );
        }

        for section in &self.sections {
            let known = [
                "curve",
                "divisor",
                "field",
                "pole",
                "connection",
                "first-integral",
                "jensen",
                "grid",
                "samples",
                "tolerances",
            ];
            if !known.contains(&section.name.as_str()) {
                self.problems.push(ConfigProblem {
                    line: section.line,
                    message: format!("unknown section [{}]", section.name),
                });
            }
        }

        if !self.problems.is_empty() {
            self.problems.sort_by_key(|p| p.line);
            return Err(Error::Config(self.problems));
        }
        Ok(ExperimentConfig {
            name,
            kind: kind.expect("kind is present when no problems were recorded"),
            curve,
            divisor,
            lift,
            connection,
            first_integral,
            jensen,
            expect,
            grid,
            samples,
            tolerances,
        })
    }

    fn single_section(&mut self, name: &str) -> Option<usize> {
        let found = self.section_indices(name);
        match found.len() {
            0 => None,
            1 => Some(found[0]),
            _ => {
                let line = self.sections[found[1]].line;
                self.problem(line, format!("section [{name}] appears more than once"));
                Some(found[0])
            }
        }
    }

    fn build_curve(&mut self) -> Option<ProjectiveCurve> {
        let section = self.single_section("curve")?;
        let components = self
            .take_entry(section, "components")
            .or_else(|| {
                self.problem(
                    self.sections[section].line,
                    "section [curve] needs a `components` key",
                );
                None
            })
            .and_then(|entry| self.expr_list(&entry));
        let precompose = self
            .take_entry(section, "precompose_exp")
            .and_then(|entry| self.one_bool(&entry))
            .unwrap_or(false);
        self.finish_section(section);
        let components = components?;
        let line = self.sections[section].line;
        match ProjectiveCurve::new(components) {
            Ok(curve) => Some(if precompose {
                curve.precompose_exp()
            } else {
                curve
            }),
            Err(err) => {
                self.problem(line, format!("invalid curve: {err}"));
                None
            }
        }
    }

    fn build_divisor(&mut self, n: Option<usize>) -> Option<Divisor> {
        let section = self.single_section("divisor")?;
        let poly = self
            .take_entry(section, "poly")
            .or_else(|| {
                self.problem(
                    self.sections[section].line,
                    "section [divisor] needs a `poly` key",
                );
                None
            })
            .and_then(|entry| self.one_expr(&entry));
        self.finish_section(section);
        let line = self.sections[section].line;
        let n = n?;
        match Divisor::new(poly?, n) {
            Ok(d) => Some(d),
            Err(err) => {
                self.problem(line, format!("invalid divisor: {err}"));
                None
            }
        }
    }

    fn build_lift(&mut self, n: Option<usize>) -> Option<HolomorphicField> {
        let field_sections = self.section_indices("field");
        let pole_section = self.single_section("pole");

        let mut fields = Vec::new();
        let mut fields_ok = true;
        for section in field_sections.clone() {
            let line = self.sections[section].line;
            let components = self
                .take_entry(section, "components")
                .or_else(|| {
                    self.problem(line, "section [field] needs a `components` key");
                    None
                })
                .and_then(|entry| self.expr_list(&entry));
            self.finish_section(section);
            match components.map(MeromorphicVectorField::new) {
                Some(Ok(f)) => fields.push(f),
                Some(Err(err)) => {
                    self.problem(line, format!("invalid field: {err}"));
                    fields_ok = false;
                }
                None => fields_ok = false,
            }
        }

        let pole = match pole_section {
            Some(section) => {
                let line = self.sections[section].line;
                let poly = self
                    .take_entry(section, "section")
                    .or_else(|| {
                        self.problem(line, "section [pole] needs a `section` key");
                        None
                    })
                    .and_then(|entry| self.one_expr(&entry));
                self.finish_section(section);
                match (poly, n) {
                    (Some(poly), Some(n)) => match PoleSection::new(poly, n) {
                        Ok(p) => Some(p),
                        Err(err) => {
                            self.problem(line, format!("invalid pole section: {err}"));
                            return None;
                        }
                    },
                    _ => None,
                }
            }
            None => n.map(PoleSection::one),
        };

        if field_sections.is_empty() {
            return None;
        }
        let n = n?;
        if !fields_ok {
            return None;
        }
        if fields.len() != n - 1 {
            self.problem(
                self.sections[field_sections[0]].line,
                format!(
                    "the Jacobian construction needs n - 1 = {} [field] sections for a curve \
                     into P^{n}, found {}",
                    n - 1,
                    fields.len()
                ),
            );
            return None;
        }
        if let Some(bad) = fields.iter().find(|f| f.n() != n) {
            self.problem(
                self.sections[field_sections[0]].line,
                format!(
                    "field has {} components but the curve chart has dimension {n}",
                    bad.n()
                ),
            );
            return None;
        }
        match HolomorphicField::new(fields, pole?) {
            Ok(lift) => Some(lift),
            Err(err) => {
                self.problem(
                    self.sections[field_sections[0]].line,
                    format!("invalid lift: {err}"),
                );
                None
            }
        }
    }

    fn build_connection(&mut self, n: Option<usize>) -> Option<MeromorphicConnection> {
        let section = self.single_section("connection")?;
        let line = self.sections[section].line;
        let t = self.take_entry(section, "t").map(|entry| self.one_expr(&entry));

        let mut entries = Vec::new();
        let mut ok = true;
        let gamma_keys: Vec<String> = self.sections[section]
            .entries
            .iter()
            .filter(|e| !e.consumed && e.key.starts_with("gamma_"))
            .map(|e| e.key.clone())
            .collect();
        for key in gamma_keys {
            let entry = self.take_entry(section, &key).expect("listed just above");
            let Some(indices) = parse_gamma_key(&key) else {
                self.problem(
                    entry.line,
                    format!(
                        "cannot read Christoffel indices from `{key}`; use \
                         gamma_<a>_<b>_<c> or gamma_<a>_<bc>"
                    ),
                );
                ok = false;
                continue;
            };
            match self.one_expr(&entry) {
                Some(expr) => entries.push((indices, expr)),
                None => ok = false,
            }
        }
        self.finish_section(section);

        let n = n?;
        let t = match t {
            Some(Some(expr)) => match PoleSection::new(expr, n) {
                Ok(p) => p,
                Err(err) => {
                    self.problem(line, format!("invalid connection section t: {err}"));
                    return None;
                }
            },
            Some(None) => return None,
            None => PoleSection::one(n),
        };
        if !ok {
            return None;
        }
        match MeromorphicConnection::new(t, entries) {
            Ok(conn) => Some(conn),
            Err(err) => {
                self.problem(line, format!("invalid connection: {err}"));
                None
            }
        }
    }

    fn build_first_integral(&mut self, n: Option<usize>) -> Option<Expr> {
        let section = self.single_section("first-integral")?;
        let line = self.sections[section].line;
        let phi = self
            .take_entry(section, "phi")
            .or_else(|| {
                self.problem(line, "section [first-integral] needs a `phi` key");
                None
            })
            .and_then(|entry| self.one_expr(&entry));
        self.finish_section(section);
        let phi = phi?;
        if let Some(n) = n {
            for v in phi.variables() {
                if crate::jacobian::chart_var_index(&v, n).is_err() {
                    self.problem(
                        line,
                        format!("first integral uses `{v}`; only w1..w{n} are available"),
                    );
                    return None;
                }
            }
        }
        Some(phi)
    }

    fn build_jensen(&mut self, grid: &RGrid) -> Option<JensenSpec> {
        let section = self.single_section("jensen")?;
        let line = self.sections[section].line;
        let g = self
            .take_entry(section, "g")
            .or_else(|| {
                self.problem(line, "section [jensen] needs a `g` key");
                None
            })
            .and_then(|entry| self.one_expr(&entry));
        let inner = self
            .take_entry(section, "inner")
            .and_then(|entry| self.one_f64(&entry))
            .unwrap_or(0.5);
        self.finish_section(section);
        let g = g?;
        for v in g.variables() {
            if v != "z" {
                self.problem(
                    line,
                    format!("jensen function uses `{v}`; only `z` is allowed"),
                );
                return None;
            }
        }
        if !(inner > 0.0 && inner < grid.radii()[0]) {
            self.problem(
                line,
                format!(
                    "jensen inner radius {inner} must sit in (0, {})",
                    grid.radii()[0]
                ),
            );
            return None;
        }
        Some(JensenSpec { g, inner })
    }

    fn build_grid(&mut self) -> RGrid {
        let Some(section) = self.single_section("grid") else {
            return RGrid::standard();
        };
        let line = self.sections[section].line;
        let min = self.take_entry(section, "min").and_then(|e| self.one_f64(&e));
        let max = self.take_entry(section, "max").and_then(|e| self.one_f64(&e));
        let points = self
            .take_entry(section, "points")
            .and_then(|e| self.one_usize(&e));
        self.finish_section(section);
        let (Some(min), Some(max), Some(points)) = (min, max, points) else {
            self.problem(line, "section [grid] needs `min`, `max`, and `points` keys");
            return RGrid::standard();
        };
        if !(min > 1.0 && max > min && points >= 2) {
            self.problem(
                line,
                format!(
                    "grid needs 1 < min < max and points >= 2, got min = {min}, max = {max}, \
                     points = {points}"
                ),
            );
            return RGrid::standard();
        }
        let ratio = max / min;
        let radii: Vec<f64> = (0..points)
            .map(|i| min * ratio.powf(i as f64 / (points - 1) as f64))
            .collect();
        match RGrid::from_radii(radii) {
            Ok(grid) => grid,
            Err(err) => {
                self.problem(line, format!("invalid grid: {err}"));
                RGrid::standard()
            }
        }
    }

    fn build_samples(&mut self) -> SampleSpec {
        let mut spec = SampleSpec::default();
        let Some(section) = self.single_section("samples") else {
            return spec;
        };
        if let Some(count) = self
            .take_entry(section, "count")
            .and_then(|e| self.one_usize(&e))
        {
            if count == 0 {
                self.problem(self.sections[section].line, "sample count must be positive");
            } else {
                spec.count = count;
            }
        }
        if let Some(entry) = self.take_entry(section, "seed") {
            if let Some(text) = self.one_string(&entry) {
                match text.parse::<u64>() {
                    Ok(seed) => spec.seed = seed,
                    Err(_) => self.problem(
                        entry.line,
                        format!("key `seed` expects a nonnegative integer, got `{text}`"),
                    ),
                }
            }
        }
        if let Some(b) = self
            .take_entry(section, "box")
            .and_then(|e| self.one_f64(&e))
        {
            if b > 0.0 {
                spec.box_radius = b;
            } else {
                self.problem(
                    self.sections[section].line,
                    "sample box radius must be positive",
                );
            }
        }
        self.finish_section(section);
        spec
    }

    fn build_tolerances(&mut self) -> ToleranceSpec {
        let mut spec = ToleranceSpec::default();
        let Some(section) = self.single_section("tolerances") else {
            return spec;
        };
        let line = self.sections[section].line;
        let positive = |b: &mut Builder, key: &str| -> Option<f64> {
            let v = b.take_entry(section, key).and_then(|e| b.one_f64(&e))?;
            if v > 0.0 {
                Some(v)
            } else {
                b.problem(line, format!("tolerance `{key}` must be positive, got {v}"));
                None
            }
        };
        if let Some(v) = positive(self, "quadrature") {
            spec.quadrature = v;
        }
        if let Some(v) = positive(self, "flatness") {
            spec.flatness = Some(v);
        }
        if let Some(v) = positive(self, "zero_match") {
            spec.zero_match = v;
        }
        if let Some(v) = positive(self, "slack") {
            spec.slack = v;
        }
        if let Some(v) = positive(self, "threshold") {
            spec.threshold = v;
        }
        if let Some(v) = positive(self, "delta") {
            spec.delta = v;
        }
        if let Some(entry) = self.take_entry(section, "expected_residual") {
            spec.expected_residual = self.one_f64(&entry);
        }
        self.finish_section(section);
        spec
    }

    #[allow(clippy::too_many_arguments)]
    fn check_kind_requirements(
        &mut self,
        kind: Kind,
        curve: bool,
        divisor: bool,
        lift: bool,
        connection: bool,
        first_integral: bool,
        jensen: bool,
        expect: Option<Expectation>,
    ) {
        let require = |b: &mut Builder, present: bool, what: &str| {
            if !present {
                b.problem(0, format!("kind {} requires {what}", kind.name()));
            }
        };
        let forbid = |b: &mut Builder, present: bool, what: &str| {
            if present {
                b.problem(0, format!("kind {} does not use {what}", kind.name()));
            }
        };
        match kind {
            Kind::Fmt => {
                require(self, curve, "a [curve] section");
                require(self, divisor, "a [divisor] section");
                forbid(self, lift, "[field] or [pole] sections");
                forbid(self, connection, "a [connection] section");
                forbid(self, first_integral, "a [first-integral] section");
                forbid(self, jensen, "a [jensen] section");
            }
            Kind::Jensen => {
                require(self, jensen, "a [jensen] section");
                forbid(self, curve, "a [curve] section");
                forbid(self, divisor, "a [divisor] section");
                forbid(self, lift, "[field] or [pole] sections");
                forbid(self, connection, "a [connection] section");
                forbid(self, first_integral, "a [first-integral] section");
            }
            Kind::Thm24 | Kind::Thm25 | Kind::SmtIdentity | Kind::SmtInequality | Kind::Ramification => {
                require(self, curve, "a [curve] section");
                require(self, lift, "[field] sections");
                forbid(self, divisor, "a [divisor] section");
                forbid(self, connection, "a [connection] section");
                forbid(self, first_integral, "a [first-integral] section");
                forbid(self, jensen, "a [jensen] section");
            }
            Kind::FirstIntegral => {
                require(self, curve, "a [curve] section");
                require(self, first_integral, "a [first-integral] section");
                forbid(self, divisor, "a [divisor] section");
                forbid(self, lift, "[field] or [pole] sections");
                forbid(self, connection, "a [connection] section");
                forbid(self, jensen, "a [jensen] section");
                if matches!(expect, Some(Expectation::Autoparallel | Expectation::Generic)) {
                    self.problem(
                        0,
                        "kind first-integral expects `degenerate` or `nondegenerate`",
                    );
                }
            }
            Kind::Autoparallel | Kind::SiuResidual => {
                require(self, curve, "a [curve] section");
                forbid(self, divisor, "a [divisor] section");
                forbid(self, lift, "[field] or [pole] sections");
                forbid(self, first_integral, "a [first-integral] section");
                forbid(self, jensen, "a [jensen] section");
                if kind == Kind::SiuResidual && expect.is_some() {
                    self.problem(0, "kind siu-residual does not use `expect`");
                }
                if kind == Kind::Autoparallel
                    && matches!(
                        expect,
                        Some(Expectation::Degenerate | Expectation::Nondegenerate)
                    )
                {
                    self.problem(0, "kind autoparallel expects `autoparallel` or `generic`");
                }
            }
            Kind::Diagnostic => {
                require(self, curve, "a [curve] section");
                forbid(self, divisor, "a [divisor] section");
                forbid(self, lift, "[field] or [pole] sections");
                forbid(self, connection, "a [connection] section");
                forbid(self, first_integral, "a [first-integral] section");
                forbid(self, jensen, "a [jensen] section");
            }
        }
        if expect.is_some()
            && !matches!(kind, Kind::FirstIntegral | Kind::Autoparallel)
        {
            self.problem(0, format!("kind {} does not use `expect`", kind.name()));
        }
    }
}

fn parse_gamma_key(key: &str) -> Option<(usize, usize, usize)> {
    let rest = key.strip_prefix("gamma_")?;
    let parts: Vec<&str> = rest.split('_').collect();
    match parts.as_slice() {
        [a, b, c] => Some((a.parse().ok()?, b.parse().ok()?, c.parse().ok()?)),
        [a, bc] if bc.len() == 2 => {
            let digits: Vec<usize> = bc
                .chars()
                .map(|ch| ch.to_digit(10).map(|d| d as usize))
                .collect::<Option<_>>()?;
            Some((a.parse().ok()?, digits[0], digits[1]))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problems(src: &str) -> Vec<ConfigProblem> {
        match parse_config_str(src) {
            Err(Error::Config(problems)) => problems,
            other => panic!("expected config problems, got {other:?}"),
        }
    }

    #[test]
    fn minimal_fmt_config_parses() {
        let cfg = parse_config_str(
            r#"
name = fmt-line
kind = fmt

[curve]
components = "1", "z"

[divisor]
poly = "w1"
"#,
        )
        .unwrap();
        assert_eq!(cfg.name, "fmt-line");
        assert_eq!(cfg.kind, Kind::Fmt);
        assert_eq!(cfg.curve.as_ref().unwrap().n(), 1);
        assert_eq!(cfg.divisor.as_ref().unwrap().degree(), 1);
        assert_eq!(cfg.grid.radii().len(), 13);
        assert_eq!(cfg.samples.seed, 0);
    }

    #[test]
    fn full_jacobian_config_parses() {
        let cfg = parse_config_str(
            r#"
name = identity-exp
kind = smt-identity

[curve]
components = "1", "z^2", "exp(z)"

[field]
components = "w2 / w1", "w1"

[pole]
section = "w1"

[grid]
min = 2
max = 64
points = 11

[tolerances]
flatness = 0.1
quadrature = 1e-8
"#,
        )
        .unwrap();
        let lift = cfg.lift.unwrap();
        assert_eq!(lift.q(), 1);
        assert_eq!(lift.section().degree(), 1);
        assert_eq!(cfg.grid.radii().len(), 11);
        assert!((cfg.grid.radii()[0] - 2.0).abs() < 1e-15);
        assert!((cfg.grid.max_radius() - 64.0).abs() < 1e-12);
        assert_eq!(cfg.tolerances.flatness, Some(0.1));
    }

    #[test]
    fn connection_config_parses_sparse_gamma_keys() {
        let cfg = parse_config_str(
            r#"
name = siu
kind = siu-residual

[curve]
components = "1", "z", "exp(z)"

[connection]
t = "w1"
gamma_2_11 = "1 / w1"
gamma_1_2_2 = "w2"
"#,
        )
        .unwrap();
        let conn = cfg.connection.unwrap();
        assert!(conn.gamma(2, 1, 1).is_some());
        assert!(conn.gamma(1, 2, 2).is_some());
        assert!(conn.gamma(1, 1, 1).is_none());
    }

    #[test]
    fn all_problems_surface_in_one_pass() {
        let found = problems(
            r#"
kind = fmta
oops

[curve]
components = "z +* 2", "z"

[grid]
min = 0.5
max = 4
points = 3
"#,
        );
        let text: Vec<String> = found.iter().map(|p| p.to_string()).collect();
        assert!(text.iter().any(|m| m.contains("missing top-level key `name`")), "{text:?}");
        assert!(text.iter().any(|m| m.contains("unknown kind `fmta`")), "{text:?}");
        assert!(text.iter().any(|m| m.contains("expected `key = value`")), "{text:?}");
        assert!(text.iter().any(|m| m.contains("cannot parse `z +* 2`")), "{text:?}");
        assert!(text.iter().any(|m| m.contains("1 < min < max")), "{text:?}");
    }

    #[test]
    fn missing_required_section_is_named() {
        let found = problems(
            r#"
name = broken
kind = smt-identity

[curve]
components = "1", "z", "exp(z)"
"#,
        );
        assert!(found
            .iter()
            .any(|p| p.message.contains("requires [field] sections")));
    }

    #[test]
    fn field_count_must_match_the_chart() {
        let found = problems(
            r#"
name = broken
kind = thm24

[curve]
components = "1", "z", "z^2", "exp(z)"

[field]
components = "1", "0", "0"
"#,
        );
        assert!(found.iter().any(|p| p.message.contains("n - 1 = 2")));
    }

    #[test]
    fn unknown_keys_and_sections_are_reported() {
        let found = problems(
            r#"
name = strict
kind = fmt
extra = 1

[curve]
components = "1", "z"
colour = blue

[divisor]
poly = "w1"

[mystery]
x = 1
"#,
        );
        let text: Vec<String> = found.iter().map(|p| p.to_string()).collect();
        assert!(text.iter().any(|m| m.contains("unknown top-level key `extra`")));
        assert!(text.iter().any(|m| m.contains("unknown key `colour`")));
        assert!(text.iter().any(|m| m.contains("unknown section [mystery]")));
    }

    #[test]
    fn expectation_gating_is_kind_aware() {
        let found = problems(
            r#"
name = wrong-expect
kind = first-integral
expect = autoparallel

[curve]
components = "1", "z", "z^2"

[first-integral]
phi = "w2 - w1^2"
"#,
        );
        assert!(found
            .iter()
            .any(|p| p.message.contains("degenerate` or `nondegenerate")));
    }

    #[test]
    fn comments_and_quotes_coexist() {
        let cfg = parse_config_str(
            r#"
# full-line comment
name = commented   # trailing comment
kind = jensen

[jensen]
g = "z^2 + 1"      # the '#' binds the comment, quotes protect nothing here
inner = 0.5

[grid]
min = 2            # radii avoid the unit circle where the zeros sit
max = 8
points = 5
"#,
        )
        .unwrap();
        assert_eq!(cfg.name, "commented");
        assert!(cfg.jensen.is_some());
    }

    #[test]
    fn uncleared_lift_pole_is_a_config_problem() {
        let found = problems(
            r#"
name = uncleared
kind = ramification

[curve]
components = "1", "z^2", "exp(z)"

[field]
components = "w2 / w1^2", "1"

[pole]
section = "w1"
"#,
        );
        assert!(found.iter().any(|p| p.message.contains("clear")));
    }
}
