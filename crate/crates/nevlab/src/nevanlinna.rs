//! The growth functions of value distribution.
//!
//! For a curve f into projective space and a divisor D, three quantities
//! share the total growth: the characteristic T (a double integral of the
//! pulled-back Fubini-Study curvature), the proximity m (circle averages of
//! the log-distance to the divisor), and the counting function N
//! (log-weighted intersections). Their interplay — T = m + N + O(1) — and
//! the Jensen and growth-rate diagnostics live here.
//!
//! All circle work uses the quadrature module's honesty policy: singular
//! nodes perturb the radius and record the event; refinement that stalls
//! reports an accuracy error instead of a wrong number.

use crate::curve::{Divisor, ProjectiveCurve};
use crate::error::{Error, Result};
use crate::growth::{GrowthTable, RGrid};
use crate::quad::{
    circle_average, circle_average_logged, integrate_adaptive_gl, integrate_adaptive_simpson,
    Perturbation, QuadLog, QuadOpts, RADIUS_PERTURBATION,
};
use crate::zeros::{count_zeros, AnalyticFn, ZeroList, BOUNDARY_BAND};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::{E, PI, TAU};

/// Density of the pulled-back Fubini-Study curvature form against Lebesgue
/// measure, computed from order-1 jets in the Lagrange form
/// (1/pi) * sum_{i<j} |F_i F'_j - F_j F'_i|^2 / ‖F‖^4,
/// which is nonnegative term by term. Zero exactly at stationary points of
/// the projective map (where F' is proportional to F).
pub fn fs_pullback_density(f: &ProjectiveCurve, z: Complex64) -> Result<f64> {
    let jets = f.jets(z, 1)?;
    let vals: Vec<Complex64> = jets.iter().map(|j| j.value()).collect();
    let ders: Vec<Complex64> = jets.iter().map(|j| j.derivative_value(1)).collect();
    let norm2: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
    let mut lagrange = 0.0;
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            lagrange += (vals[i] * ders[j] - vals[j] * ders[i]).norm_sqr();
        }
    }
    Ok(lagrange / (PI * norm2 * norm2))
}

/// Disk integrals A(t) of a density, cached incrementally: each new t
/// integrates only from the nearest already-computed radius. Rings are
/// angular circle averages times 2*pi*rho, integrated radially by adaptive
/// Gauss-Legendre panels.
struct AreaCache<'a> {
    density: &'a mut dyn FnMut(Complex64) -> Result<f64>,
    circle_tol: f64,
    radial_tol: f64,
    /// A(t) keyed by t's bit pattern (order-preserving for t >= 0).
    cache: BTreeMap<u64, f64>,
}

impl<'a> AreaCache<'a> {
    fn new(density: &'a mut dyn FnMut(Complex64) -> Result<f64>, opts: &QuadOpts) -> Self {
        AreaCache {
            density,
            circle_tol: opts.circle_tol,
            // Ring integrals feed the outer radial quadrature, so they run
            // one order tighter than the requested area tolerance.
            radial_tol: opts.area_tol * 0.1,
            cache: BTreeMap::from([(0u64, 0.0)]),
        }
    }

    fn ring(&mut self, rho: f64) -> Result<f64> {
        if rho <= 0.0 {
            return Ok(0.0);
        }
        let tol = self.circle_tol;
        let mut point = |z: Complex64| (self.density)(z);
        let mean = circle_average(&mut point, rho, tol)?;
        Ok(TAU * rho * mean)
    }

    fn area(&mut self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let key = t.to_bits();
        if let Some(&a) = self.cache.get(&key) {
            return Ok(a);
        }
        let (t0, a0) = {
            let (&kb, &ab) = self
                .cache
                .range(..=key)
                .next_back()
                .expect("cache is seeded with t = 0");
            (f64::from_bits(kb), ab)
        };
        let rtol = self.radial_tol;
        let inc = integrate_adaptive_gl(&mut |rho| self.ring(rho), t0, t, rtol)?;
        let a = a0 + inc;
        self.cache.insert(key, a);
        Ok(a)
    }

    /// Characteristic values for an increasing radius list: cumulative
    /// integrals of A(e^u) du over u = log t, segment by segment, by
    /// adaptive Simpson on the log-radius axis.
    fn accumulate(&mut self, radii: impl Iterator<Item = f64>, tol: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let (mut acc, mut u_prev) = (0.0f64, 0.0f64);
        for r in radii {
            let u = r.ln();
            acc += integrate_adaptive_simpson(&mut |u: f64| self.area(u.exp()), u_prev, u, tol)?;
            out.push(acc);
            u_prev = u;
        }
        Ok(out)
    }
}

/// Characteristic of f against the unit-degree bundle: the nested integral
/// T(r) = ∫_1^r (dt/t) ∫_{|z|<t} (pullback density) dA.
pub fn characteristic_unit(f: &ProjectiveCurve, grid: &RGrid, opts: &QuadOpts) -> Result<GrowthTable> {
    let mut density = |z: Complex64| fs_pullback_density(f, z);
    let mut cache = AreaCache::new(&mut density, opts);
    let values = cache.accumulate(grid.iter(), opts.area_tol)?;
    GrowthTable::new("T", grid.clone(), values)
}

/// Characteristic against a degree-d bundle: d times the unit table, by
/// construction. Negative degrees (canonical bundles) are allowed.
pub fn characteristic(f: &ProjectiveCurve, d: i32, grid: &RGrid, opts: &QuadOpts) -> Result<GrowthTable> {
    Ok(characteristic_unit(f, grid, opts)?.map("T", |v| d as f64 * v))
}

/// The same unit characteristic through circle means of log ‖F‖ (the
/// Green-Jensen route): T(r) = avg_{|z|=r} log ‖F‖ − avg_{|z|=1} log ‖F‖.
/// An independent quadrature path used to cross-check the nested integral.
pub fn characteristic_green_jensen(
    f: &ProjectiveCurve,
    grid: &RGrid,
    opts: &QuadOpts,
    log: &mut QuadLog,
) -> Result<GrowthTable> {
    let mut integrand = |z: Complex64| -> Result<f64> {
        let w = f.values(z)?;
        Ok(0.5 * w.iter().map(|v| v.norm_sqr()).sum::<f64>().ln())
    };
    let base = circle_average_logged(&mut integrand, 1.0, opts.circle_tol, "curve norm, base circle", log)?;
    GrowthTable::tabulate("T", grid, |r| {
        Ok(circle_average_logged(&mut integrand, r, opts.circle_tol, "curve norm", log)? - base)
    })
}

/// The unit characteristic normalized at the origin instead of the unit
/// circle: T(r) = avg_{|z|=r} log ‖F‖ − log ‖F(0)‖. A reduced representation
/// never vanishes, so the base value is finite, and by Green-Jensen this
/// equals the nested area integral taken from 0. With this normalization
/// T(r)/log r → deg f for rational curves with no base constant in the way.
pub fn characteristic_cartan(f: &ProjectiveCurve, grid: &RGrid, opts: &QuadOpts) -> Result<GrowthTable> {
    let mut log_norm = |z: Complex64| -> Result<f64> {
        let w = f.values(z)?;
        Ok(0.5 * w.iter().map(|v| v.norm_sqr()).sum::<f64>().ln())
    };
    let base = log_norm(Complex64::new(0.0, 0.0))?;
    GrowthTable::tabulate("T", grid, |r| {
        Ok(circle_average(&mut log_norm, r, opts.circle_tol)? - base)
    })
}

/// Guard: the curve must not lie inside the divisor. Probes the normalized
/// section ‖s_D∘f‖ = |Q(F)| / (c_Q ‖F‖^d) — a scale-free quantity in [0,1]
/// — at a handful of spread-out points.
fn section_alive(f: &ProjectiveCurve, div: &Divisor) -> Result<()> {
    let probes = [
        Complex64::new(0.3, 0.1),
        Complex64::new(1.1, -0.7),
        Complex64::new(-0.45, 0.83),
        Complex64::new(2.2, 1.9),
        Complex64::new(-1.7, -1.3),
    ];
    let d = div.degree() as f64;
    for z in probes {
        let w = f.values(z)?;
        let norm2: f64 = w.iter().map(|v| v.norm_sqr()).sum();
        let q = div.eval_at_values(&w)?;
        let section = q.norm() / (div.coeff_norm() * norm2.powf(0.5 * d));
        if section > 1e-12 {
            return Ok(());
        }
    }
    Err(Error::Degenerate(
        "curve lies inside the divisor: the composed section vanishes at every probe".into(),
    ))
}

/// Proximity function m(r): circle average of d·log ‖F‖ + log c_Q − log |Q(F)|,
/// the negative log of the (≤ 1 normalized) section norm along the curve.
/// Nonnegative up to quadrature error.
pub fn proximity(
    f: &ProjectiveCurve,
    div: &Divisor,
    grid: &RGrid,
    opts: &QuadOpts,
    log: &mut QuadLog,
) -> Result<GrowthTable> {
    section_alive(f, div)?;
    let d = div.degree() as f64;
    let log_c = div.coeff_norm().ln();
    let mut integrand = |z: Complex64| -> Result<f64> {
        let w = f.values(z)?;
        let norm2: f64 = w.iter().map(|v| v.norm_sqr()).sum();
        let q = div.eval_at_values(&w)?;
        if q.norm() < crate::jet::SINGULARITY_TOLERANCE {
            return Err(Error::singular("Q∘F", z));
        }
        Ok(0.5 * d * norm2.ln() + log_c - q.norm().ln())
    };
    GrowthTable::tabulate("m", grid, |r| {
        circle_average_logged(&mut integrand, r, opts.circle_tol, "proximity integrand", log)
    })
}

/// Count zeros with the boundary policy: when a zero sits on the counting
/// circle, the radius is bumped by a relative 1e-6 (up to 8 times) and each
/// bump is recorded.
pub fn count_zeros_logged(
    g: &dyn AnalyticFn,
    radius: f64,
    context: &str,
    log: &mut QuadLog,
) -> Result<ZeroList> {
    let mut r = radius;
    for _ in 0..8 {
        match count_zeros(g, r) {
            Err(Error::BoundaryZero { location }) => {
                let next = r * (1.0 + RADIUS_PERTURBATION);
                log.perturbations.push(Perturbation {
                    context: format!("{context}: zero at {location} on the counting circle"),
                    requested: radius,
                    used: next,
                });
                r = next;
            }
            other => return other,
        }
    }
    Err(Error::Degenerate(format!(
        "counting circle at r = {radius} kept hitting zeros after 8 perturbations ({context})"
    )))
}

/// Log-weighted counting table from an explicit zero list:
/// N(r) = Σ mult · (log r − log max(|a|, 1)) over zeros with |a| < r.
/// Continuous in the zero locations, so zeros near grid radii are harmless.
pub fn counting_table(label: &str, zeros: &ZeroList, grid: &RGrid) -> Result<GrowthTable> {
    GrowthTable::tabulate(label, grid, |r| {
        Ok(zeros
            .iter()
            .map(|z| z.multiplicity as f64 * (r.ln() - z.location.norm().max(1.0).ln()).max(0.0))
            .sum())
    })
}

/// Counting function N(r) of the curve against the divisor: zeros of the
/// composite Q∘F inside the largest grid radius, log-weighted.
pub fn counting(
    f: &ProjectiveCurve,
    div: &Divisor,
    grid: &RGrid,
    log: &mut QuadLog,
) -> Result<GrowthTable> {
    section_alive(f, div)?;
    let g = div.compose(f)?;
    let zeros = count_zeros_logged(&g, grid.max_radius(), "counting function", log)?;
    counting_table("N", &zeros, grid)
}

/// The three growth tables and their residual T − m − N, which the First
/// Main Theorem pins to a bounded (here: flat) function of r.
pub struct FmtTables {
    pub characteristic: GrowthTable,
    pub proximity: GrowthTable,
    pub counting: GrowthTable,
    pub residual: GrowthTable,
    pub log: QuadLog,
}

pub fn fmt_tables(
    f: &ProjectiveCurve,
    div: &Divisor,
    grid: &RGrid,
    opts: &QuadOpts,
) -> Result<FmtTables> {
    let mut log = QuadLog::default();
    let t = characteristic(f, div.degree() as i32, grid, opts)?;
    let m = proximity(f, div, grid, opts, &mut log)?;
    let n = counting(f, div, grid, &mut log)?;
    let residual = t
        .zip_with(&m, "T-m", |a, b| a - b)?
        .zip_with(&n, "residual", |a, b| a - b)?;
    Ok(FmtTables {
        characteristic: t,
        proximity: m,
        counting: n,
        residual,
        log,
    })
}

/// Jensen residual over the annulus s < |z| < r:
/// [avg_{|z|=r} log|g| − avg_{|z|=s} log|g|] − Σ mult · log(r / max(|a|, s)),
/// which vanishes for g analytic with no zeros on either circle.
pub fn jensen_check(g: &dyn AnalyticFn, s: f64, r: f64, opts: &QuadOpts) -> Result<f64> {
    if !(s > 0.0 && s < r && r.is_finite()) {
        return Err(Error::Domain(format!(
            "jensen radii must satisfy 0 < s < r, got s = {s}, r = {r}"
        )));
    }
    let zeros = count_zeros(g, r)?;
    for z in zeros.iter() {
        if (z.location.norm() - s).abs() <= BOUNDARY_BAND * s.max(1.0) {
            return Err(Error::BoundaryZero {
                location: format!("{} on |z| = {s}", z.location),
            });
        }
    }
    let mut integrand = |z: Complex64| -> Result<f64> {
        let v = g.eval_jet(z, 0)?.value();
        if v.norm() < crate::jet::SINGULARITY_TOLERANCE {
            return Err(Error::singular("g", z));
        }
        Ok(v.norm().ln())
    };
    let hi = circle_average(&mut integrand, r, opts.circle_tol)?;
    let lo = circle_average(&mut integrand, s, opts.circle_tol)?;
    let weighted: f64 = zeros
        .iter()
        .map(|z| z.multiplicity as f64 * (r.ln() - z.location.norm().max(s).ln()))
        .sum();
    Ok((hi - lo) - weighted)
}

/// One grid point of the growth-rate diagnostic.
#[derive(Debug, Clone)]
pub struct RatioRow {
    pub r: f64,
    /// Circle integral of the density against dθ/2π.
    pub circle_integral: f64,
    /// T_κ(r), the density's own characteristic.
    pub characteristic: f64,
    /// log⁺(circle integral) / (log⁺ T_κ + log⁺ log r); 0/0 reads as 0.
    pub ratio: f64,
}

/// One grid segment where the growth bound φ' ≤ φ · (log φ)^{1+δ} failed.
#[derive(Debug, Clone)]
pub struct BorelSegment {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub bound: f64,
}

/// Report of [`calculus_lemma_diagnostic`]: per-radius growth ratios plus
/// the measure of grid segments violating the derivative bound. Diagnostic
/// only — the underlying lemmas allow a finite-measure exceptional set, so
/// nothing here is pass/fail by itself.
#[derive(Debug, Clone, Default)]
pub struct CalculusDiagnostic {
    pub rows: Vec<RatioRow>,
    pub violating: Vec<BorelSegment>,
    /// Total length of violating segments.
    pub exceptional_measure: f64,
    /// Total length spanned by the grid, for context.
    pub grid_span: f64,
}

fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// Growth-rate diagnostic for a nonnegative density κ: compares circle
/// integrals of κ against its characteristic T_κ on each radius, and flags
/// grid segments where T_κ grows faster than the Borel-type bound
/// T' ≤ T · (log T)^{1+δ}. An empty radius list yields an empty report.
pub fn calculus_lemma_diagnostic<K>(
    mut kappa: K,
    radii: &[f64],
    delta: f64,
    opts: &QuadOpts,
) -> Result<CalculusDiagnostic>
where
    K: FnMut(Complex64) -> Result<f64>,
{
    if radii.is_empty() {
        return Ok(CalculusDiagnostic::default());
    }
    if radii[0] <= 1.0 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "diagnostic radii must be strictly increasing and exceed 1".into(),
        ));
    }

    let mut circle_integrals = Vec::with_capacity(radii.len());
    for &r in radii {
        circle_integrals.push(circle_average(&mut |z| kappa(z), r, opts.circle_tol)?);
    }

    let mut density = |z: Complex64| kappa(z);
    let mut cache = AreaCache::new(&mut density, opts);
    let characteristics = cache.accumulate(radii.iter().copied(), opts.area_tol)?;

    let rows = radii
        .iter()
        .zip(circle_integrals.iter())
        .zip(characteristics.iter())
        .map(|((&r, &ci), &t)| {
            let num = log_plus(ci);
            let den = log_plus(t) + log_plus(r.ln());
            let ratio = if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            RatioRow {
                r,
                circle_integral: ci,
                characteristic: t,
                ratio,
            }
        })
        .collect();

    let mut violating = Vec::new();
    let mut exceptional_measure = 0.0;
    for k in 0..radii.len().saturating_sub(1) {
        let (lo, hi) = (radii[k], radii[k + 1]);
        let slope = (characteristics[k + 1] - characteristics[k]) / (hi - lo);
        let phi = characteristics[k].max(E);
        let bound = phi * phi.ln().powf(1.0 + delta);
        if slope > bound {
            exceptional_measure += hi - lo;
            violating.push(BorelSegment {
                lo,
                hi,
                slope,
                bound,
            });
        }
    }

    Ok(CalculusDiagnostic {
        rows,
        violating,
        exceptional_measure,
        grid_span: radii.last().unwrap() - radii[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use approx::assert_relative_eq;

    fn curve(sources: &[&str]) -> ProjectiveCurve {
        ProjectiveCurve::parse(sources).unwrap()
    }

    fn opts() -> QuadOpts {
        QuadOpts::default()
    }

    /// Closed form for the unit characteristic of (1, z).
    fn line_characteristic(r: f64) -> f64 {
        0.5 * ((1.0 + r * r) / 2.0).ln()
    }

    #[test]
    fn density_matches_the_closed_forms() {
        let line = curve(&["1", "z"]);
        let d0 = fs_pullback_density(&line, Complex64::ZERO).unwrap();
        assert_relative_eq!(d0, 1.0 / PI, epsilon = 1e-14);
        let d1 = fs_pullback_density(&line, Complex64::new(1.0, 1.0)).unwrap();
        assert_relative_eq!(d1, 1.0 / (PI * 9.0), epsilon = 1e-14);

        let parabola = curve(&["1", "z^2"]);
        let dp = fs_pullback_density(&parabola, Complex64::ONE).unwrap();
        assert_relative_eq!(dp, 1.0 / PI, epsilon = 1e-14);
        // Stationary point: the projective derivative vanishes at 0.
        assert_eq!(fs_pullback_density(&parabola, Complex64::ZERO).unwrap(), 0.0);

        let constant = curve(&["2", "3"]);
        assert_eq!(fs_pullback_density(&constant, Complex64::ONE).unwrap(), 0.0);
    }

    #[test]
    fn unit_characteristic_matches_the_closed_form() {
        let grid = RGrid::geometric(2.0, 2, 6).unwrap();
        let t = characteristic_unit(&curve(&["1", "z"]), &grid, &opts()).unwrap();
        for (r, v) in t.rows() {
            assert_relative_eq!(v, line_characteristic(r), epsilon = 1e-6);
        }
    }

    #[test]
    fn cartan_characteristic_matches_the_closed_form() {
        // ‖F‖ is constant on circles for rational normal curves, so the
        // origin-normalized characteristic is ½ log (1 + r² + … + r^{2d}).
        let grid = RGrid::geometric(2.0, 2, 6).unwrap();
        let conic = characteristic_cartan(&curve(&["1", "z", "z^2"]), &grid, &opts()).unwrap();
        for (r, v) in conic.rows() {
            let oracle = 0.5 * (1.0 + r * r + r.powi(4)).ln();
            assert_relative_eq!(v, oracle, epsilon = 1e-8);
        }
        // It differs from the unit-based table by the constant base shift
        // avg_{|z|=1} log ‖F‖ − log ‖F(0)‖, here ½ log 3.
        let unit = characteristic_unit(&curve(&["1", "z", "z^2"]), &grid, &opts()).unwrap();
        let shift = conic.zip_with(&unit, "shift", |c, u| c - u).unwrap();
        for (_, s) in shift.rows() {
            assert_relative_eq!(s, 0.5 * 3.0f64.ln(), epsilon = 1e-6);
        }
    }

    #[test]
    fn degree_scaling_is_the_exact_table_identity() {
        let grid = RGrid::geometric(2.0, 2, 4).unwrap();
        let f = curve(&["1", "z"]);
        let unit = characteristic_unit(&f, &grid, &opts()).unwrap();
        let cubic = characteristic(&f, 3, &grid, &opts()).unwrap();
        for (u, c) in unit.values().iter().zip(cubic.values()) {
            assert_eq!(*c, 3.0 * u);
        }
        let canonical = characteristic(&f, -2, &grid, &opts()).unwrap();
        for (u, c) in unit.values().iter().zip(canonical.values()) {
            assert_eq!(*c, -2.0 * u);
        }
    }

    #[test]
    fn green_jensen_route_agrees_with_the_nested_quadrature() {
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let f = curve(&["1", "z", "exp(z)"]);
        let nested = characteristic_unit(&f, &grid, &opts()).unwrap();
        let mut log = QuadLog::default();
        let gj = characteristic_green_jensen(&f, &grid, &opts(), &mut log).unwrap();
        assert!(log.is_clean());
        for (a, b) in nested.values().iter().zip(gj.values()) {
            assert!((a - b).abs() < 2e-6, "nested {a} vs green-jensen {b}");
        }
    }

    #[test]
    fn proximity_closed_forms_for_the_line() {
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let f = curve(&["1", "z"]);
        let mut log = QuadLog::default();

        let axis = Divisor::parse("w1", 1).unwrap();
        let m1 = proximity(&f, &axis, &grid, &opts(), &mut log).unwrap();
        for (r, v) in m1.rows() {
            assert_relative_eq!(v, 0.5 * (1.0 + r * r).ln() - r.ln(), epsilon = 1e-8);
        }

        let hyperplane = Divisor::parse("w0", 1).unwrap();
        let m0 = proximity(&f, &hyperplane, &grid, &opts(), &mut log).unwrap();
        for (r, v) in m0.rows() {
            assert_relative_eq!(v, 0.5 * (1.0 + r * r).ln(), epsilon = 1e-8);
        }
        assert!(log.is_clean());
    }

    #[test]
    fn proximity_is_nonnegative_for_a_transcendental_pair() {
        let grid = RGrid::geometric(2.0, 2, 6).unwrap();
        let f = curve(&["1", "z", "exp(z)"]);
        let div = Divisor::parse("w2 - w1", 2).unwrap();
        let mut log = QuadLog::default();
        let m = proximity(&f, &div, &grid, &opts(), &mut log).unwrap();
        for (_, v) in m.rows() {
            assert!(v >= -1e-9, "proximity dipped to {v}");
        }
    }

    #[test]
    fn counting_closed_forms() {
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let mut log = QuadLog::default();

        let line = curve(&["1", "z"]);
        let axis = Divisor::parse("w1", 1).unwrap();
        let n1 = counting(&line, &axis, &grid, &mut log).unwrap();
        for (r, v) in n1.rows() {
            assert_relative_eq!(v, r.ln(), epsilon = 1e-9);
        }

        let parabola = curve(&["1", "z^2"]);
        let n2 = counting(&parabola, &axis, &grid, &mut log).unwrap();
        for (r, v) in n2.rows() {
            assert_relative_eq!(v, 2.0 * r.ln(), epsilon = 1e-9);
        }

        // A curve missing the divisor counts nothing.
        let trans = curve(&["1", "z", "exp(z)"]);
        let far = Divisor::parse("w2", 2).unwrap();
        let n0 = counting(&trans, &far, &grid, &mut log).unwrap();
        assert_eq!(n0.max_abs(), 0.0);
        assert!(log.is_clean());
    }

    #[test]
    fn counting_is_additive_over_divisor_products() {
        let grid = RGrid::geometric(2.0, 2, 6).unwrap();
        let f = curve(&["1", "z"]);
        let a = Divisor::parse("w1", 1).unwrap();
        let b = Divisor::parse("w1 - w0", 1).unwrap();
        let mut log = QuadLog::default();
        let na = counting(&f, &a, &grid, &mut log).unwrap();
        let nb = counting(&f, &b, &grid, &mut log).unwrap();
        let nab = counting(&f, &a.product(&b).unwrap(), &grid, &mut log).unwrap();
        for ((x, y), z) in na.values().iter().zip(nb.values()).zip(nab.values()) {
            assert_relative_eq!(x + y, *z, epsilon = 1e-9);
        }
    }

    #[test]
    fn fmt_residual_is_the_flat_constant_for_the_line() {
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let f = curve(&["1", "z"]);
        let expected = -0.5 * 2.0f64.ln();

        for src in ["w1", "w0"] {
            let div = Divisor::parse(src, 1).unwrap();
            let tables = fmt_tables(&f, &div, &grid, &opts()).unwrap();
            for (r, v) in tables.residual.rows() {
                assert!(
                    (v - expected).abs() < 1e-6,
                    "residual {v} at r = {r} for {src}, expected {expected}"
                );
            }
            assert!(tables.log.is_clean());
        }
    }

    #[test]
    fn containment_in_the_divisor_is_rejected() {
        let grid = RGrid::geometric(2.0, 2, 4).unwrap();
        let f = curve(&["1", "z", "z"]);
        let div = Divisor::parse("w2 - w1", 2).unwrap();
        let mut log = QuadLog::default();
        assert!(matches!(
            proximity(&f, &div, &grid, &opts(), &mut log),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            counting(&f, &div, &grid, &mut log),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn jensen_residual_vanishes_for_polynomials() {
        let g = Expr::parse("z^2 - 1").unwrap();
        let res = jensen_check(&g, 2.0, 4.0, &opts()).unwrap();
        assert!(res.abs() < 1e-8, "jensen residual {res}");

        // Direct closed form: both zeros inside |z| = s, so the annulus
        // gains 2 log(r/s) of circle mean.
        let hi = circle_average(
            &mut |z: Complex64| Ok((z * z - Complex64::ONE).norm().ln()),
            4.0,
            1e-10,
        )
        .unwrap();
        let lo = circle_average(
            &mut |z: Complex64| Ok((z * z - Complex64::ONE).norm().ln()),
            2.0,
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(hi - lo, 2.0 * 2.0f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn jensen_residual_is_exact_for_the_harmonic_case() {
        // log |exp(z)| = Re z has exact mean zero on every centered circle.
        let g = Expr::parse("exp(z)").unwrap();
        let res = jensen_check(&g, 2.0, 5.0, &opts()).unwrap();
        assert!(res.abs() < 1e-12, "harmonic residual {res}");
    }

    #[test]
    fn jensen_hand_case_both_sides_equal_one() {
        let g = Expr::parse("z").unwrap();
        let res = jensen_check(&g, 1.0, E, &opts()).unwrap();
        assert!(res.abs() < 1e-10, "residual {res}");
        // The two sides individually equal 1.
        let hi = circle_average(&mut |z: Complex64| Ok(z.norm().ln()), E, 1e-10).unwrap();
        assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jensen_rejects_zeros_on_either_circle() {
        let g = Expr::parse("z^2 - 4").unwrap();
        assert!(matches!(
            jensen_check(&g, 2.0, 5.0, &opts()),
            Err(Error::BoundaryZero { .. })
        ));
        assert!(matches!(
            jensen_check(&g, 1.0, 2.0, &opts()),
            Err(Error::BoundaryZero { .. })
        ));
        assert!(matches!(
            jensen_check(&g, 3.0, 2.0, &opts()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn diagnostic_constant_density_has_quadratic_characteristic() {
        let radii = [2.0, 4.0, 8.0];
        let report =
            calculus_lemma_diagnostic(|_z| Ok(1.0), &radii, 0.1, &opts()).unwrap();
        assert_eq!(report.rows.len(), 3);
        for row in &report.rows {
            assert_relative_eq!(row.circle_integral, 1.0, epsilon = 1e-10);
            let expected = PI * (row.r * row.r - 1.0) / 2.0;
            assert_relative_eq!(row.characteristic, expected, epsilon = 1e-5);
            assert_eq!(row.ratio, 0.0); // log+ of a unit circle integral
        }
        assert_relative_eq!(report.grid_span, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn diagnostic_fs_density_stays_tame_out_to_large_radii() {
        let f = curve(&["1", "z"]);
        let radii = [2.0, 8.0, 32.0, 128.0, 1000.0];
        let report = calculus_lemma_diagnostic(
            |z| fs_pullback_density(&f, z),
            &radii,
            0.1,
            &opts(),
        )
        .unwrap();
        for row in &report.rows {
            assert!(row.ratio.is_finite() && row.ratio <= 1.0);
        }
        // T grows like log r: far below the Borel threshold everywhere.
        assert!(report.violating.is_empty());
        assert_eq!(report.exceptional_measure, 0.0);
    }

    #[test]
    fn diagnostic_empty_grid_is_an_empty_report() {
        let report = calculus_lemma_diagnostic(|_z| Ok(1.0), &[], 0.1, &opts()).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.violating.is_empty());
        assert_eq!(report.grid_span, 0.0);
    }
}
