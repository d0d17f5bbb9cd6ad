//! Meromorphic connections on the chart tangent bundle and their
//! covariant jets along a curve.
//!
//! A connection is a Christoffel table of rational expressions
//! `Gamma^a_{bc}(w1..wn)` together with a pole-clearing section t of O(p):
//! `t * Gamma` must be finite across the chart. Along a curve f the
//! covariant jets iterate
//!
//! ```text
//! f^(1) = f',    f^(j+1)_a = t(f) * [ d/dz f^(j)_a
//!                        + sum_{b,c} Gamma^a_{bc}(f) f'_b f^(j)_c ]
//! ```
//!
//! so f^(j) carries a twist factor t^(j-1); the scalar twist is folded
//! into the component values and surfaces only in degree bookkeeping. The
//! autoparallel Wronskian is the determinant with rows f^(1) .. f^(n),
//! computed as the top coefficient of the wedge of the rows: it vanishes
//! identically exactly when the curve is autoparallel for the connection.
//! Its zero divisor feeds the connection-side degeneracy combination
//!
//! ```text
//! T(r, O(-n-1)) + N_ram(r) - (n(n-1)/2) T(r, O(p))
//! ```
//!
//! whose normalization by ln T follows the same exceptional-band policy
//! as the Jacobian-side report. The wedge f^(2) ^ ... ^ f^(n) behind that
//! combination is twisted by t^(1+2+...+(n-1)), which is where the
//! n(n-1)/2 multiplier on the O(p) term comes from.

use crate::curve::ProjectiveCurve;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::exterior::ExteriorElement;
use crate::growth::{GrowthTable, RGrid};
use crate::jacobian::{
    chart_var_index, degree_one, effectivity_probes, normalize_by_log_t, reject_transcendental,
    PoleSection, EFFECTIVITY_FLOOR,
};
use crate::jet::Jet;
use crate::nevanlinna::{characteristic_unit, count_zeros_logged, counting_table};
use crate::quad::{QuadLog, QuadOpts};
use crate::zeros::{JetFn, ZeroList};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// A meromorphic connection on the tangent bundle of the affine chart:
/// a sparse table of Christoffel expressions `Gamma^a_{bc}` in `w1..wn`
/// (absent entries are zero) and a section t whose multiples clear their
/// poles, certified at construction.
#[derive(Debug, Clone)]
pub struct MeromorphicConnection {
    gamma: BTreeMap<(usize, usize, usize), Expr>,
    section: PoleSection,
}

impl MeromorphicConnection {
    pub fn new(
        section: PoleSection,
        entries: impl IntoIterator<Item = ((usize, usize, usize), Expr)>,
    ) -> Result<Self> {
        let n = section.n();
        let mut gamma = BTreeMap::new();
        for ((a, b, c), expr) in entries {
            for idx in [a, b, c] {
                if !(1..=n).contains(&idx) {
                    return Err(Error::Domain(format!(
                        "Christoffel index ({a},{b},{c}) is out of range for chart \
                         dimension {n}"
                    )));
                }
            }
            reject_transcendental(&expr)?;
            for v in expr.variables() {
                chart_var_index(&v, n)?;
            }
            if matches!(expr.as_constant(), Some(v) if v.norm() == 0.0) {
                continue;
            }
            gamma.insert((a, b, c), expr);
        }
        let items: Vec<(String, &Expr)> = gamma
            .iter()
            .map(|(&(a, b, c), e)| (format!("Gamma^{a}_({b},{c})"), e))
            .collect();
        section.verify_clears_exprs(&items)?;
        Ok(MeromorphicConnection { gamma, section })
    }

    /// The flat connection: every Christoffel symbol zero, t = 1.
    pub fn flat(n: usize) -> Self {
        MeromorphicConnection {
            gamma: BTreeMap::new(),
            section: PoleSection::one(n),
        }
    }

    /// Chart dimension.
    pub fn n(&self) -> usize {
        self.section.n()
    }

    pub fn section(&self) -> &PoleSection {
        &self.section
    }

    /// The Christoffel entry `Gamma^a_{bc}`, if present (absent = zero).
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> Option<&Expr> {
        self.gamma.get(&(a, b, c))
    }

    /// Entries in deterministic index order.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Expr)> {
        self.gamma.iter()
    }
}

/// Covariant jet rows f^(1) .. f^(k) along the curve at z, each entry a
/// jet of the requested order, so the rows remain differentiable data
/// (the Wronskian zero counter needs them as analytic functions).
pub fn covariant_jet_rows(
    f: &ProjectiveCurve,
    conn: &MeromorphicConnection,
    k: usize,
    z: Complex64,
    order: usize,
) -> Result<Vec<Vec<Jet>>> {
    let n = f.n();
    if conn.n() != n {
        return Err(Error::Domain(format!(
            "connection over chart dimension {} applied to a curve into P^{n}",
            conn.n()
        )));
    }
    if k == 0 {
        return Err(Error::Domain(
            "covariant jets need at least order k = 1".into(),
        ));
    }
    // Each recursion step differentiates once, so the chart jets start
    // k orders above the requested output order.
    let w = f.affine_jets(z, order + k)?;
    let fprime: Vec<Jet> = w.iter().map(Jet::differentiate).collect();
    let bind = |name: &str| {
        chart_var_index(name, n)
            .ok()
            .map(|j| w[j - 1].clone())
    };
    let mut gamma_vals: BTreeMap<(usize, usize, usize), Jet> = BTreeMap::new();
    for (&idx, expr) in conn.entries() {
        gamma_vals.insert(idx, expr.eval_jet(&bind, z)?);
    }
    let t = conn.section().chart_jet(&w, z)?;

    let mut rows: Vec<Vec<Jet>> = vec![fprime.clone()];
    for _ in 1..k {
        let prev = rows.last().expect("rows start nonempty");
        let mut next = Vec::with_capacity(n);
        for a in 1..=n {
            let mut acc = prev[a - 1].differentiate();
            for ((ga, gb, gc), gamma) in &gamma_vals {
                if *ga != a {
                    continue;
                }
                acc = acc + gamma.clone() * fprime[*gb - 1].clone() * prev[*gc - 1].clone();
            }
            next.push(acc * t.clone());
        }
        rows.push(next);
    }
    Ok(rows)
}

/// The covariant jet values f^(1)(z) .. f^(k)(z) as n-vectors.
pub fn covariant_jets(
    f: &ProjectiveCurve,
    conn: &MeromorphicConnection,
    k: usize,
    z: Complex64,
) -> Result<Vec<Vec<Complex64>>> {
    Ok(covariant_jet_rows(f, conn, k, z, 0)?
        .iter()
        .map(|row| row.iter().map(Jet::value).collect())
        .collect())
}

/// Determinant of a square matrix of jet rows, as the top coefficient of
/// the wedge of the rows. Exact alternation comes with the construction:
/// a repeated row wedges to the zero element.
pub fn wronskian_of_rows(rows: &[Vec<Jet>]) -> Result<Jet> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Domain(format!(
            "the Wronskian needs a square matrix of rows, got {n} rows of lengths {:?}",
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let mut acc: Option<ExteriorElement<Jet>> = None;
    for row in rows {
        let el = degree_one(n, row.clone())?;
        acc = Some(match acc {
            None => el,
            Some(prev) => prev.wedge(&el)?,
        });
    }
    acc.expect("at least one row").top_coefficient()
}

/// The autoparallel Wronskian det(f^(1), ..., f^(n)) at z as a jet of the
/// given order.
pub fn wronskian_jet(
    f: &ProjectiveCurve,
    conn: &MeromorphicConnection,
    z: Complex64,
    order: usize,
) -> Result<Jet> {
    let rows = covariant_jet_rows(f, conn, f.n(), z, order)?;
    wronskian_of_rows(&rows)
}

/// The autoparallel Wronskian value: zero along the whole curve exactly
/// when the curve is autoparallel for the connection.
pub fn autoparallel_wronskian(
    f: &ProjectiveCurve,
    conn: &MeromorphicConnection,
    z: Complex64,
) -> Result<Complex64> {
    Ok(wronskian_jet(f, conn, z, 0)?.value())
}

/// One line of the pole-divisor membership report: the magnitude of the
/// clearing section along the curve at a sample point. A curve contained
/// in the pole divisor reports zero at every sample.
#[derive(Debug, Clone, Copy)]
pub struct MembershipSample {
    pub at: Complex64,
    pub section_magnitude: f64,
}

/// Evaluate |t(f(z))| at each sample.
pub fn pole_membership(
    f: &ProjectiveCurve,
    conn: &MeromorphicConnection,
    samples: &[Complex64],
) -> Result<Vec<MembershipSample>> {
    if f.n() != conn.n() {
        return Err(Error::Domain(format!(
            "connection over chart dimension {} applied to a curve into P^{}",
            conn.n(),
            f.n()
        )));
    }
    samples
        .iter()
        .map(|&z| {
            let w: Vec<Complex64> = f.affine_jets(z, 0)?.iter().map(Jet::value).collect();
            Ok(MembershipSample {
                at: z,
                section_magnitude: conn.section().chart_value(&w)?.norm(),
            })
        })
        .collect()
}

/// All columns of the connection-side degeneracy report.
#[derive(Debug, Clone)]
pub struct SiuResidualTables {
    /// T(r, O(-n-1)) + N_ram(r) - (n(n-1)/2) T(r, O(p)).
    pub lhs: GrowthTable,
    pub ramification: GrowthTable,
    pub normalized: GrowthTable,
    pub normalized_plus: GrowthTable,
    /// max of `normalized` over non-exceptional radii.
    pub bound: f64,
    pub exceptional: Vec<f64>,
    pub exceptional_log_measure: f64,
    pub grid_log_measure: f64,
    pub zeros: ZeroList,
    /// |t(f(z))| at the standard probes: the pole-divisor membership data.
    pub membership: Vec<MembershipSample>,
    pub log: QuadLog,
}

/// Build the connection-side degeneracy report: count the zeros of the
/// autoparallel Wronskian, assemble the combination of characteristics
/// with the twist multiplier n(n-1)/2 on the O(p) term, and normalize by
/// ln T. Autoparallel curves are rejected: their Wronskian vanishes
/// identically and the ramification term is undefined.
pub fn siu_smt_residual(
    f: &ProjectiveCurve,
    conn: &MeromorphicConnection,
    grid: &RGrid,
    opts: &QuadOpts,
) -> Result<SiuResidualTables> {
    let n = f.n();
    if conn.n() != n {
        return Err(Error::Domain(format!(
            "connection over chart dimension {} applied to a curve into P^{n}",
            conn.n()
        )));
    }
    let probes = effectivity_probes();
    let effective = probes
        .iter()
        .any(|&z| matches!(autoparallel_wronskian(f, conn, z), Ok(v) if v.norm() > EFFECTIVITY_FLOOR));
    if !effective {
        return Err(Error::Degenerate(
            "the curve is autoparallel for this connection: the Wronskian vanishes \
             at every probe, so the ramification divisor is undefined"
                .into(),
        ));
    }

    let scalar = JetFn(|z, order| wronskian_jet(f, conn, z, order));
    let mut log = QuadLog::default();
    let zeros = count_zeros_logged(
        &scalar,
        grid.max_radius(),
        "autoparallel Wronskian",
        &mut log,
    )?;
    let ram = counting_table("N_ram", &zeros, grid)?;

    let unit = characteristic_unit(f, grid, opts)?;
    let twist = (n * (n - 1) / 2) as f64 * conn.section().degree() as f64;
    let lhs = unit.zip_with(&ram, "siu_lhs", |t1, nr| {
        -((n as f64) + 1.0) * t1 + nr - twist * t1
    })?;
    let norm = normalize_by_log_t(&unit, &lhs, grid)?;
    let membership = pole_membership(f, conn, &probes)?;

    Ok(SiuResidualTables {
        lhs,
        ramification: ram,
        normalized: norm.normalized,
        normalized_plus: norm.normalized_plus,
        bound: norm.bound,
        exceptional: norm.exceptional,
        exceptional_log_measure: norm.exceptional_log_measure,
        grid_log_measure: norm.grid_log_measure,
        zeros,
        membership,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FLAT_TOLERANCE: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chart_curve(affine: &[&str]) -> ProjectiveCurve {
        ProjectiveCurve::from_affine(
            affine
                .iter()
                .map(|s| Expr::parse(s).expect("test curve component"))
                .collect(),
        )
        .expect("test curve")
    }

    fn connection(n: usize, t: &str, entries: &[((usize, usize, usize), &str)]) -> MeromorphicConnection {
        MeromorphicConnection::new(
            PoleSection::parse(t, n).expect("test section"),
            entries
                .iter()
                .map(|&(idx, src)| (idx, Expr::parse(src).expect("test Christoffel entry"))),
        )
        .expect("test connection")
    }

    fn sample_points() -> Vec<Complex64> {
        vec![c(0.45, 0.3), c(-0.7, 0.9), c(1.2, -0.4), c(-1.1, -0.8)]
    }

    #[test]
    fn flat_jets_are_plain_derivatives() {
        let flat2 = MeromorphicConnection::flat(2);
        for affine in [
            ["z", "exp(z)"],
            ["z^2", "exp(z)"],
            ["z", "z^2"],
            ["exp(z)", "exp(2 * z)"],
        ] {
            let f = chart_curve(&affine);
            for z in sample_points() {
                let jets = covariant_jets(&f, &flat2, 4, z).unwrap();
                let w = f.affine_jets(z, 4).unwrap();
                for (j, row) in jets.iter().enumerate() {
                    for (alpha, &value) in row.iter().enumerate() {
                        let plain = w[alpha].derivative_value(j + 1);
                        assert!(
                            (value - plain).norm() <= FLAT_TOLERANCE * (1.0 + plain.norm()),
                            "flat jet {} component {alpha} at {z}: {value} vs {plain}",
                            j + 1
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn flat_jet_pattern_for_the_exponential_pair() {
        let f = chart_curve(&["z", "exp(z)"]);
        let flat2 = MeromorphicConnection::flat(2);
        let jets = covariant_jets(&f, &flat2, 3, Complex64::ZERO).unwrap();
        let expect = [[1.0, 1.0], [0.0, 1.0], [0.0, 1.0]];
        for (row, want) in jets.iter().zip(&expect) {
            for (value, &w) in row.iter().zip(want) {
                assert_relative_eq!(value.re, w, epsilon = 1e-14);
                assert!(value.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_christoffel_recursion_on_the_line() {
        // n = 1, Gamma^1_{11} = c, f = (z): f' = 1, so each step multiplies
        // by c: f^(2) = c, f^(3) = c^2.
        let gamma = c(0.7, -0.3);
        let conn = MeromorphicConnection::new(
            PoleSection::one(1),
            [((1, 1, 1), Expr::constant(gamma))],
        )
        .unwrap();
        let f = chart_curve(&["z"]);
        let jets = covariant_jets(&f, &conn, 3, c(0.2, 0.5)).unwrap();
        assert_relative_eq!(jets[0][0].re, 1.0, epsilon = 1e-14);
        assert!((jets[1][0] - gamma).norm() < 1e-14);
        assert!((jets[2][0] - gamma * gamma).norm() < 1e-14);
    }

    #[test]
    fn polynomial_christoffel_hand_recursion() {
        // Gamma^2_{12} = 1 on (z, z^2): f^(2) = (0, 2 + 2z) by hand, and
        // the Wronskian is det[[1, 2z], [0, 2 + 2z]] = 2 + 2z.
        let conn = connection(2, "1", &[((2, 1, 2), "1")]);
        let f = chart_curve(&["z", "z^2"]);
        for z in sample_points() {
            let jets = covariant_jets(&f, &conn, 2, z).unwrap();
            assert!(jets[1][0].norm() < 1e-14);
            let expect = 2.0 + 2.0 * z;
            assert!((jets[1][1] - expect).norm() < 1e-13);
            let w = autoparallel_wronskian(&f, &conn, z).unwrap();
            assert!((w - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn rational_christoffel_with_clearing_section() {
        // Gamma^2_{11} = 1/w1 cleared by t = w1 along (z, e^z):
        // f^(2) = z * (0, e^z + 1/z) = (0, z e^z + 1).
        let conn = connection(2, "w1", &[((2, 1, 1), "1 / w1")]);
        let f = chart_curve(&["z", "exp(z)"]);
        for z in sample_points() {
            let jets = covariant_jets(&f, &conn, 2, z).unwrap();
            assert!(jets[1][0].norm() < 1e-13);
            let expect = z * z.exp() + 1.0;
            assert!(
                (jets[1][1] - expect).norm() < 1e-12 * (1.0 + expect.norm()),
                "at {z}: {} vs {expect}",
                jets[1][1]
            );
            let w = autoparallel_wronskian(&f, &conn, z).unwrap();
            assert!((w - expect).norm() < 1e-12 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn wronskian_hand_determinants() {
        let flat2 = MeromorphicConnection::flat(2);
        let parabola = chart_curve(&["z", "z^2"]);
        let exponential = chart_curve(&["z", "exp(z)"]);
        for z in sample_points() {
            let w = autoparallel_wronskian(&parabola, &flat2, z).unwrap();
            assert_relative_eq!(w.re, 2.0, epsilon = 1e-13);
            assert!(w.im.abs() < 1e-13);
            let w = autoparallel_wronskian(&exponential, &flat2, z).unwrap();
            assert!((w - z.exp()).norm() < 1e-13 * (1.0 + z.exp().norm()));
        }
    }

    #[test]
    fn lines_are_autoparallel_for_the_flat_connection() {
        let flat2 = MeromorphicConnection::flat(2);
        let line = chart_curve(&["z", "3 * z + 0.5"]);
        for z in sample_points() {
            let w = autoparallel_wronskian(&line, &flat2, z).unwrap();
            assert_eq!(w, Complex64::ZERO);
        }
        let grid = RGrid::geometric(2.0, 2, 6).unwrap();
        match siu_smt_residual(&line, &flat2, &grid, &QuadOpts::default()) {
            Err(Error::Degenerate(msg)) => assert!(msg.contains("autoparallel")),
            other => panic!("expected the autoparallel rejection, got {other:?}"),
        }
    }

    #[test]
    fn autoparallel_verdict_survives_affine_reparametrization() {
        // z -> 2z + 1 keeps lines lines and non-lines non-lines; the
        // Wronskian value changes, the verdict does not.
        let flat2 = MeromorphicConnection::flat(2);
        let line = chart_curve(&["2 * z + 1", "3 * (2 * z + 1) + 0.5"]);
        let curved = chart_curve(&["2 * z + 1", "exp(2 * z + 1)"]);
        for z in sample_points() {
            assert_eq!(
                autoparallel_wronskian(&line, &flat2, z).unwrap(),
                Complex64::ZERO
            );
            assert!(
                autoparallel_wronskian(&curved, &flat2, z).unwrap().norm() > EFFECTIVITY_FLOOR
            );
        }
    }

    #[test]
    fn wronskian_is_alternating_in_its_rows() {
        let f = chart_curve(&["z", "exp(z)"]);
        let flat2 = MeromorphicConnection::flat(2);
        let rows = covariant_jet_rows(&f, &flat2, 2, c(0.4, -0.7), 1).unwrap();
        let repeated = vec![rows[0].clone(), rows[0].clone()];
        let det = wronskian_of_rows(&repeated).unwrap();
        assert!(det.value() == Complex64::ZERO && det.coeff(1) == Complex64::ZERO);
    }

    #[test]
    fn siu_report_for_the_flat_exponential_pair() {
        // W = e^z has no zeros, so N_ram = 0 and the combination is
        // -3 T_1(r): bounded above after normalization, and negative at
        // every radius where T_1 has cleared 1.
        let f = chart_curve(&["z", "exp(z)"]);
        let flat2 = MeromorphicConnection::flat(2);
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let report = siu_smt_residual(&f, &flat2, &grid, &QuadOpts::default()).unwrap();
        assert!(report.zeros.is_empty());
        assert!(report.ramification.max_abs() < 1e-12);
        assert!(report.bound.is_finite());
        let (_, last) = report.normalized.rows().last().unwrap();
        assert!(last < 0.0, "normalized residual at the top radius: {last}");
        assert!(report.exceptional_log_measure <= 0.05 * report.grid_log_measure);
        for (sample, probe) in report.membership.iter().zip(effectivity_probes()) {
            assert_eq!(sample.at, probe);
            // t = 1 identically for the flat connection.
            assert_relative_eq!(sample.section_magnitude, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn membership_report_detects_pole_divisor_containment() {
        // The curve (0, e^z) lies inside {w1 = 0}, the pole divisor of a
        // w1-cleared connection; every sample must report magnitude 0.
        let conn = connection(2, "w1", &[((2, 1, 1), "1 / w1")]);
        let contained = chart_curve(&["0", "exp(z)"]);
        for sample in pole_membership(&contained, &conn, &sample_points()).unwrap() {
            assert_eq!(sample.section_magnitude, 0.0);
        }
        let transverse = chart_curve(&["z", "exp(z)"]);
        for sample in pole_membership(&transverse, &conn, &sample_points()).unwrap() {
            assert_relative_eq!(sample.section_magnitude, sample.at.norm(), epsilon = 1e-14);
        }
    }

    #[test]
    fn constructors_reject_malformed_tables() {
        let t1 = PoleSection::one(2);
        assert!(MeromorphicConnection::new(
            t1.clone(),
            [((3, 1, 1), Expr::parse("1").unwrap())]
        )
        .is_err());
        assert!(MeromorphicConnection::new(
            t1.clone(),
            [((1, 1, 1), Expr::parse("exp(w1)").unwrap())]
        )
        .is_err());
        assert!(MeromorphicConnection::new(
            t1.clone(),
            [((1, 1, 1), Expr::parse("w3").unwrap())]
        )
        .is_err());
        // An uncleared Christoffel pole is a configuration bug.
        match MeromorphicConnection::new(t1, [((1, 1, 1), Expr::parse("1 / w1").unwrap())]) {
            Err(Error::Degenerate(msg)) => assert!(msg.contains("clear")),
            other => panic!("expected a clearing conviction, got {other:?}"),
        }
        // Explicit zeros are dropped, not stored.
        let conn = MeromorphicConnection::new(
            PoleSection::one(2),
            [((1, 1, 1), Expr::parse("0").unwrap())],
        )
        .unwrap();
        assert!(conn.gamma(1, 1, 1).is_none());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let f3 = chart_curve(&["z", "z^2", "exp(z)"]);
        let flat2 = MeromorphicConnection::flat(2);
        assert!(covariant_jets(&f3, &flat2, 2, Complex64::ZERO).is_err());
        assert!(pole_membership(&f3, &flat2, &sample_points()).is_err());
        assert!(covariant_jets(&chart_curve(&["z", "exp(z)"]), &flat2, 0, Complex64::ZERO).is_err());
    }

    #[test]
    fn nonflat_wronskian_zeros_feed_the_counting_table() {
        // Gamma^2_{12} = 1 on (z, z^2): W = 2 + 2z vanishes at z = -1, so
        // N_ram(r) = ln r for r > 1 once the zero enters the disk.
        let conn = connection(2, "1", &[((2, 1, 2), "1")]);
        let f = chart_curve(&["z", "z^2"]);
        let grid = RGrid::from_radii(vec![1.5, 3.0, 6.0]).unwrap();
        let report = siu_smt_residual(&f, &conn, &grid, &QuadOpts::default()).unwrap();
        assert_eq!(report.zeros.len(), 1);
        let zero = report.zeros.iter().next().unwrap();
        assert!((zero.location - c(-1.0, 0.0)).norm() < 1e-9);
        assert_eq!(zero.multiplicity, 1);
        for (r, v) in report.ramification.rows() {
            assert_relative_eq!(v, r.ln(), epsilon = 1e-9);
        }
    }
}
