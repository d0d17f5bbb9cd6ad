//! Zero location and counting for analytic functions on disks.
//!
//! Two independent routes that can cross-check one another: a polynomial
//! route (coefficient extraction, exact deflation of the origin factor, an
//! Aberth-Ehrlich simultaneous solver) and an argument-principle route
//! (adaptive winding numbers over a jittered box subdivision, with
//! contour-moment extraction on terminal boxes). Both feed the same final
//! pass: solver outputs are clustered, every cluster's multiplicity is
//! confirmed by a winding count on a small circle, and locations are
//! polished by a multiplicity-aware Newton step.
//!
//! Multiple zeros are genuinely hard in double precision — a simultaneous
//! solver scatters an m-fold zero into a cluster of diameter roughly
//! eps^(1/m) — so cluster merging is driven by the winding counts rather
//! than by a fixed metric radius alone, and reported locations of m-fold
//! zeros carry an irreducible error of that same order.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, TAU};

/// Baseline relative merge radius for solver outputs representing one zero.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;

/// Relative radius below which two solver outputs are the same root.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// Relative half-width of the band around the counting circle in which a
/// zero aborts the count as `BoundaryZero` instead of being counted.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Magnitudes below this are treated as "on top of a zero" by contours.
const VALUE_FLOOR: f64 = 1e-280;

/// An analytic function presented through its Taylor data.
pub trait AnalyticFn {
    /// Taylor expansion at `z` through the given order.
    fn eval_jet(&self, z: Complex64, order: usize) -> Result<Jet>;

    /// Ascending coefficients when the function is an explicit polynomial
    /// in the disk variable; `None` switches counting to contour methods.
    fn as_poly(&self) -> Option<Vec<Complex64>> {
        None
    }
}

impl AnalyticFn for Expr {
    fn eval_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        self.jet_at(z, order)
    }

    fn as_poly(&self) -> Option<Vec<Complex64>> {
        self.as_polynomial("z", 64)
    }
}

/// Adapter turning a jet-producing closure into an [`AnalyticFn`].
pub struct JetFn<F>(pub F);

impl<F> AnalyticFn for JetFn<F>
where
    F: Fn(Complex64, usize) -> Result<Jet>,
{
    fn eval_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        (self.0)(z, order)
    }
}

/// One zero with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub location: Complex64,
    pub multiplicity: usize,
}

/// Zeros inside a disk, sorted by real part then imaginary part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroList {
    entries: Vec<Zero>,
}

impl ZeroList {
    fn from_entries(mut entries: Vec<Zero>) -> Self {
        entries.sort_by(|a, b| {
            a.location
                .re
                .total_cmp(&b.location.re)
                .then(a.location.im.total_cmp(&b.location.im))
        });
        ZeroList { entries }
    }

    pub fn entries(&self) -> &[Zero] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &Zero> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|z| z.multiplicity).sum()
    }
}

/// Which counting machinery to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Polynomial route when coefficients are available, contours otherwise.
    Auto,
    /// Force the coefficient/Aberth route; errors if no coefficients exist.
    Polynomial,
    /// Force the argument-principle route even for explicit polynomials.
    Winding,
}

/// All zeros of `f` in the open disk `|z| < radius`, with multiplicities.
///
/// A zero within a relative 1e-9 of the circle itself is reported as
/// [`Error::BoundaryZero`]: counts that depend on which side of the contour
/// a zero sits are not answered silently.
pub fn count_zeros(f: &dyn AnalyticFn, radius: f64) -> Result<ZeroList> {
    count_zeros_with(f, radius, Route::Auto)
}

/// [`count_zeros`] with the route pinned; `Route::Winding` on an explicit
/// polynomial is the standard cross-check of one route against the other.
pub fn count_zeros_with(f: &dyn AnalyticFn, radius: f64, route: Route) -> Result<ZeroList> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!(
            "counting radius must be positive and finite, got {radius}"
        )));
    }
    match route {
        Route::Auto => match f.as_poly() {
            Some(coeffs) => polynomial_route(f, &coeffs, radius),
            None => winding_route(f, radius),
        },
        Route::Polynomial => {
            let coeffs = f.as_poly().ok_or_else(|| {
                Error::Domain("function is not an explicit polynomial in z".into())
            })?;
            polynomial_route(f, &coeffs, radius)
        }
        Route::Winding => winding_route(f, radius),
    }
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

// ---------------------------------------------------------------------------
// polynomial route
// ---------------------------------------------------------------------------

fn polynomial_route(f: &dyn AnalyticFn, coeffs: &[Complex64], radius: f64) -> Result<ZeroList> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        return Err(Error::Degenerate(
            "cannot count zeros of the identically zero function".into(),
        ));
    }
    // An exactly-zero low end is a z^k factor; deflate it rather than asking
    // the solver to resolve a pinned multiple root.
    let origin_mult = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let deflated = &coeffs[origin_mult..];

    let mut raw: Vec<(Complex64, usize)> = Vec::new();
    if origin_mult > 0 {
        raw.push((czero(), origin_mult));
    }
    if deflated.len() >= 2 {
        // Roots far outside the disk are irrelevant; the margin comfortably
        // exceeds any solver scatter so no cluster is split by the cut.
        let keep = radius + 0.02 * (1.0 + radius);
        for z in aberth(deflated)? {
            if z.norm() <= keep {
                raw.push((z, 1));
            }
        }
    }
    let clusters = verified_clusters(f, &raw)?;
    let zeros = polish_clusters(f, clusters)?;
    finalize(zeros, radius, None)
}

/// Aberth-Ehrlich simultaneous iteration; `coeffs` ascending, degree >= 1,
/// nonzero leading and constant coefficients assumed (callers deflate).
fn aberth(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    debug_assert!(n >= 1 && coeffs[n].norm() > 0.0);
    if n == 1 {
        return Ok(vec![-coeffs[0] / coeffs[1]]);
    }
    let lead = coeffs[n];
    let bound = 1.0
        + coeffs[..n]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    // Distinct starts on a circle, angle-offset so lattice roots are missed.
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.7 * bound, TAU * k as f64 / n as f64 + 0.41))
        .collect();
    let mut corrections = vec![czero(); n];
    for _ in 0..300 {
        let mut all_small = true;
        for i in 0..n {
            let (p, dp) = horner_pair(coeffs, z[i]);
            let w = if dp.norm() > VALUE_FLOOR && p.is_finite() && dp.is_finite() {
                p / dp
            } else {
                // Stationary or overflowing point: nudge deterministically.
                Complex64::from_polar(1e-3 * (1.0 + z[i].norm()), 0.7)
            };
            let mut s = czero();
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > VALUE_FLOOR {
                        s += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let corr = if denom.norm() > VALUE_FLOOR { w / denom } else { w };
            let corr = if corr.is_finite() {
                corr
            } else {
                Complex64::from_polar(1e-3 * bound, 0.7)
            };
            if corr.norm() > 1e-14 * (1.0 + z[i].norm()) {
                all_small = false;
            }
            corrections[i] = corr;
        }
        for i in 0..n {
            z[i] -= corrections[i];
        }
        if all_small {
            break;
        }
    }
    Ok(z)
}

/// Value and derivative of an ascending-coefficient polynomial.
fn horner_pair(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let n = coeffs.len() - 1;
    let mut p = coeffs[n];
    let mut dp = czero();
    for k in (0..n).rev() {
        dp = dp * z + p;
        p = p * z + coeffs[k];
    }
    (p, dp)
}

// ---------------------------------------------------------------------------
// winding primitives
// ---------------------------------------------------------------------------

enum WindError {
    /// The contour passes within the value floor of a zero (location given).
    NearZero(Complex64),
    /// Refinement exhausted without the total settling on an integer.
    Unsettled,
    /// The evaluator itself failed.
    Eval(Error),
}

type WindResult = std::result::Result<i64, WindError>;

fn eval_value(f: &dyn AnalyticFn, z: Complex64) -> std::result::Result<Complex64, WindError> {
    let g = f.eval_jet(z, 0).map_err(WindError::Eval)?.value();
    if !g.is_finite() || g.norm() < VALUE_FLOOR {
        return Err(WindError::NearZero(z));
    }
    Ok(g)
}

/// Total argument change of `f` along the closed path, by adaptive phase
/// tracking. A step is accepted only when both half-steps turn by less than
/// pi/2 AND the midpoint magnitude is log-consistent with the endpoints:
/// the magnitude check catches the V-dip of a zero pair straddled by one
/// arc, whose net 2-pi phase change would otherwise alias to zero.
fn winding_path<P: Fn(f64) -> Complex64>(f: &dyn AnalyticFn, path: &P, init: usize) -> WindResult {
    fn refine<P: Fn(f64) -> Complex64>(
        f: &dyn AnalyticFn,
        path: &P,
        t0: f64,
        t1: f64,
        g0: Complex64,
        g1: Complex64,
        depth: u32,
    ) -> std::result::Result<f64, WindError> {
        let tm = 0.5 * (t0 + t1);
        let gm = eval_value(f, path(tm))?;
        let d0 = (gm / g0).arg();
        let d1 = (g1 / gm).arg();
        let gmean = (g0.norm() * g1.norm()).sqrt();
        let dip = gm.norm() / gmean;
        if d0.is_finite()
            && d1.is_finite()
            && d0.abs() < FRAC_PI_2
            && d1.abs() < FRAC_PI_2
            && (1.0 / 16.0..16.0).contains(&dip)
        {
            return Ok(d0 + d1);
        }
        if depth == 0 {
            return Err(WindError::Unsettled);
        }
        Ok(refine(f, path, t0, tm, g0, gm, depth - 1)?
            + refine(f, path, tm, t1, gm, g1, depth - 1)?)
    }

    let vals: Vec<Complex64> = (0..init)
        .map(|j| eval_value(f, path(j as f64 / init as f64)))
        .collect::<std::result::Result<_, _>>()?;
    let mut total = 0.0;
    for j in 0..init {
        let t0 = j as f64 / init as f64;
        let (t1, g1) = if j + 1 == init {
            (1.0, vals[0])
        } else {
            ((j + 1) as f64 / init as f64, vals[j + 1])
        };
        total += refine(f, path, t0, t1, vals[j], g1, 30)?;
    }
    let w = total / TAU;
    if (w - w.round()).abs() > 0.05 {
        return Err(WindError::Unsettled);
    }
    Ok(w.round() as i64)
}

fn winding_circle(f: &dyn AnalyticFn, center: Complex64, rho: f64, init: usize) -> WindResult {
    let path = |t: f64| center + Complex64::from_polar(rho, TAU * t);
    winding_path(f, &path, init)
}

// ---------------------------------------------------------------------------
// cluster verification shared by both routes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Cluster {
    points: Vec<(Complex64, usize)>,
}

impl Cluster {
    fn multiplicity(&self) -> usize {
        self.points.iter().map(|&(_, m)| m).sum()
    }

    fn center(&self) -> Complex64 {
        let m = self.multiplicity() as f64;
        self.points
            .iter()
            .map(|&(p, w)| p * w as f64)
            .fold(czero(), |a, b| a + b)
            / m
    }

    fn spread(&self) -> f64 {
        let c = self.center();
        self.points
            .iter()
            .map(|&(p, _)| (p - c).norm())
            .fold(0.0, f64::max)
    }
}

/// Single-link collapse of near-identical solver outputs.
fn duplicate_collapse(raw: &[(Complex64, usize)]) -> Vec<Cluster> {
    let mut pts = raw.to_vec();
    pts.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let mut clusters: Vec<Cluster> = Vec::new();
    'outer: for &(p, w) in &pts {
        for cl in &mut clusters {
            let near = cl.points.iter().any(|&(q, _)| {
                (p - q).norm() <= DUPLICATE_TOLERANCE * (1.0 + p.norm().max(q.norm()))
            });
            if near {
                cl.points.push((p, w));
                continue 'outer;
            }
        }
        clusters.push(Cluster { points: vec![(p, w)] });
    }
    clusters
}

enum Verdict {
    Verified,
    /// The circle of the given radius holds more zeros than claimed: absorb
    /// every other cluster inside it.
    MergeWithin(f64),
    /// The claimed zeros are not where this cluster says; adopt the nearest
    /// cluster and retry (solver scatter from a multiple zero).
    MergeNearest,
}

fn verify_one(
    f: &dyn AnalyticFn,
    center: Complex64,
    mult: usize,
    spread: f64,
    d_nearest: f64,
) -> Result<Verdict> {
    let scale = 1.0 + center.norm();
    let mut rho = (4.0 * spread).max(3e-7 * scale);
    let rho_cap = if d_nearest.is_finite() {
        (0.45 * d_nearest).max(rho)
    } else {
        (2e-3 * scale).max(rho)
    };
    let mut nudges = 0;
    loop {
        match winding_circle(f, center, rho, 64) {
            Err(WindError::Eval(e)) => return Err(e),
            Err(_) => {
                nudges += 1;
                if nudges > 24 {
                    return Err(Error::Degenerate(format!(
                        "could not place a verification contour near {center} (a zero \
                         shadows every attempted circle)"
                    )));
                }
                rho *= 1.0831;
            }
            Ok(w) if w < 0 => {
                return Err(Error::Degenerate(format!(
                    "negative winding around {center}: the function is not analytic there"
                )))
            }
            Ok(w) if w as usize == mult => return Ok(Verdict::Verified),
            Ok(w) if w as usize > mult => return Ok(Verdict::MergeWithin(rho)),
            Ok(_) => {
                if rho * 3.0 <= rho_cap {
                    rho *= 3.0;
                } else {
                    return Ok(Verdict::MergeNearest);
                }
            }
        }
    }
}

/// Merge solver outputs into verified (center, multiplicity, spread) groups:
/// every group's multiplicity is confirmed by a winding count on a circle
/// that separates it from its neighbours.
fn verified_clusters(
    f: &dyn AnalyticFn,
    raw: &[(Complex64, usize)],
) -> Result<Vec<(Complex64, usize, f64)>> {
    let mut clusters = duplicate_collapse(raw);
    // Metric pre-merge at the baseline radius keeps the verification loop
    // short for ordinary double roots.
    metric_merge(&mut clusters, CLUSTER_TOLERANCE);
    loop {
        if clusters.is_empty() {
            return Ok(Vec::new());
        }
        let centers: Vec<Complex64> = clusters.iter().map(Cluster::center).collect();
        let mut action: Option<(usize, Verdict)> = None;
        for i in 0..clusters.len() {
            let d_nearest = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| (c - centers[i]).norm())
                .fold(f64::INFINITY, f64::min);
            match verify_one(f, centers[i], clusters[i].multiplicity(), clusters[i].spread(), d_nearest)? {
                Verdict::Verified => continue,
                v => {
                    action = Some((i, v));
                    break;
                }
            }
        }
        match action {
            None => break,
            Some((i, Verdict::MergeWithin(rho))) => {
                let mut absorbed = Vec::new();
                let ci = centers[i];
                for j in (0..clusters.len()).rev() {
                    if j != i && (centers[j] - ci).norm() <= rho {
                        absorbed.push(clusters.remove(j));
                    }
                }
                if absorbed.is_empty() {
                    return Err(Error::Degenerate(format!(
                        "winding near {ci} finds zeros the solver never produced"
                    )));
                }
                let i_now = clusters
                    .iter()
                    .position(|c| c.center() == ci || (c.center() - ci).norm() == 0.0)
                    .unwrap_or_else(|| {
                        // Center moved by removals shifting indices; find by
                        // minimum distance instead.
                        let mut best = 0;
                        let mut bd = f64::INFINITY;
                        for (k, c) in clusters.iter().enumerate() {
                            let d = (c.center() - ci).norm();
                            if d < bd {
                                bd = d;
                                best = k;
                            }
                        }
                        best
                    });
                for a in absorbed {
                    clusters[i_now].points.extend(a.points);
                }
            }
            Some((i, Verdict::MergeNearest)) => {
                if clusters.len() < 2 {
                    return Err(Error::Degenerate(format!(
                        "no zeros found near the solver output at {}",
                        centers[i]
                    )));
                }
                let mut best = usize::MAX;
                let mut bd = f64::INFINITY;
                for (j, c) in centers.iter().enumerate() {
                    if j != i {
                        let d = (c - centers[i]).norm();
                        if d < bd {
                            bd = d;
                            best = j;
                        }
                    }
                }
                let moved = clusters.remove(best);
                let i_now = if best < i { i - 1 } else { i };
                clusters[i_now].points.extend(moved.points);
            }
            Some((_, Verdict::Verified)) => unreachable!(),
        }
    }
    Ok(clusters
        .iter()
        .map(|c| (c.center(), c.multiplicity(), c.spread()))
        .collect())
}

fn metric_merge(clusters: &mut Vec<Cluster>, tol: f64) {
    let mut merged = true;
    while merged {
        merged = false;
        'pairs: for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let (a, b) = (clusters[i].center(), clusters[j].center());
                if (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm())) {
                    let c = clusters.remove(j);
                    clusters[i].points.extend(c.points);
                    merged = true;
                    break 'pairs;
                }
            }
        }
    }
}

/// Multiplicity-aware Newton polish: `z <- z - m g/g'` converges
/// quadratically at an m-fold zero. Steps are capped near the cluster so a
/// mismatched basin cannot run away from the verified circle.
fn polish_clusters(
    f: &dyn AnalyticFn,
    clusters: Vec<(Complex64, usize, f64)>,
) -> Result<Vec<Zero>> {
    let mut out = Vec::with_capacity(clusters.len());
    for (center, mult, spread) in clusters {
        let scale = 1.0 + center.norm();
        let cap = (6.0 * spread).max(1e-5 * scale);
        let mut z = center;
        for _ in 0..80 {
            let jet = f.eval_jet(z, 1)?;
            let g = jet.value();
            let dg = jet.derivative_value(1);
            if g.norm() == 0.0 || dg.norm() < VALUE_FLOOR {
                break;
            }
            let mut step = g / dg * mult as f64;
            if !step.is_finite() {
                break;
            }
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            z -= step;
            if step.norm() < 1e-14 * scale {
                break;
            }
        }
        out.push(Zero {
            location: z,
            multiplicity: mult,
        });
    }
    Ok(out)
}

fn finalize(zeros: Vec<Zero>, radius: f64, expected_inside: Option<i64>) -> Result<ZeroList> {
    let band = BOUNDARY_BAND * radius.max(1.0);
    let mut kept = Vec::new();
    for z in zeros {
        let d = z.location.norm();
        if (d - radius).abs() <= band {
            return Err(Error::BoundaryZero {
                location: format!(
                    "{:.17e}{:+.17e}i with |z| - r = {:.3e}",
                    z.location.re,
                    z.location.im,
                    d - radius
                ),
            });
        }
        if d < radius {
            kept.push(z);
        }
    }
    if let Some(n) = expected_inside {
        let s: usize = kept.iter().map(|z| z.multiplicity).sum();
        if s as i64 != n {
            return Err(Error::Degenerate(format!(
                "found {s} zeros inside |z| < {radius} but the boundary winding counts {n}"
            )));
        }
    }
    Ok(ZeroList::from_entries(kept))
}

// ---------------------------------------------------------------------------
// winding route
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct BoxRegion {
    lo: (f64, f64),
    hi: (f64, f64),
}

impl BoxRegion {
    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.lo.0 + self.hi.0), 0.5 * (self.lo.1 + self.hi.1))
    }

    fn max_side(&self) -> f64 {
        (self.hi.0 - self.lo.0).max(self.hi.1 - self.lo.1)
    }

    fn circumradius(&self) -> f64 {
        0.5 * (self.hi.0 - self.lo.0).hypot(self.hi.1 - self.lo.1)
    }

    fn min_dist_origin(&self) -> f64 {
        let dx = self.lo.0.max(-self.hi.0).max(0.0);
        let dy = self.lo.1.max(-self.hi.1).max(0.0);
        dx.hypot(dy)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.lo.0, self.lo.1),
            Complex64::new(self.hi.0, self.lo.1),
            Complex64::new(self.hi.0, self.hi.1),
            Complex64::new(self.lo.0, self.hi.1),
        ]
    }

    fn split(&self, frac: f64) -> [BoxRegion; 4] {
        let mx = self.lo.0 + frac * (self.hi.0 - self.lo.0);
        let my = self.lo.1 + frac * (self.hi.1 - self.lo.1);
        [
            BoxRegion { lo: self.lo, hi: (mx, my) },
            BoxRegion { lo: (mx, self.lo.1), hi: (self.hi.0, my) },
            BoxRegion { lo: (self.lo.0, my), hi: (mx, self.hi.1) },
            BoxRegion { lo: (mx, my), hi: self.hi },
        ]
    }
}

/// Whether the segment [a, b] stays clear of zeros of `f`.
///
/// A zero pair sitting exactly on a subdivision line is invisible to phase
/// tracking at coarse scale (its two flips cancel) yet poisons every contour
/// that inherits the line, splitting the pair's winding in half between the
/// adjacent boxes. So proposed lines are vetted directly: scan |g| along the
/// segment and chase each local minimum with Newton; a converged zero within
/// 1e-7 of the segment (relative to its length) condemns the line. The probe
/// is advisory, so a point where `f` cannot even be evaluated (an isolated
/// singularity of the evaluation path) also condemns the line rather than
/// aborting the count: contours must stay away from such points anyway.
fn line_is_clear(f: &dyn AnalyticFn, a: Complex64, b: Complex64) -> Result<bool> {
    let dir = b - a;
    let len = dir.norm();
    let n = 128usize;
    let mut mags = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let g = match f.eval_jet(a + dir * (j as f64 / n as f64), 0) {
            Ok(jet) => jet.value(),
            Err(_) => return Ok(false),
        };
        if !g.is_finite() || g.norm() < VALUE_FLOOR {
            return Ok(false);
        }
        mags.push(g.norm());
    }
    for j in 1..n {
        if mags[j] > mags[j - 1] || mags[j] > mags[j + 1] {
            continue;
        }
        let mut z = a + dir * (j as f64 / n as f64);
        let mut converged = false;
        for _ in 0..16 {
            let jet = match f.eval_jet(z, 1) {
                Ok(jet) => jet,
                Err(_) => break,
            };
            let (g, dg) = (jet.value(), jet.derivative_value(1));
            if g.norm() == 0.0 {
                converged = true;
                break;
            }
            if dg.norm() < VALUE_FLOOR {
                break;
            }
            let step = g / dg;
            // A huge step means no zero lives near this minimum.
            if !step.is_finite() || step.norm() > 0.25 * len {
                break;
            }
            z -= step;
            if step.norm() < 1e-13 * (1.0 + z.norm()) {
                converged = true;
                break;
            }
        }
        if converged {
            let t = ((z - a) / dir).re.clamp(0.0, 1.0);
            let dist = (z - (a + dir * t)).norm();
            if dist < 1e-7 * len {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn winding_box(f: &dyn AnalyticFn, bx: &BoxRegion) -> WindResult {
    let cs = bx.corners();
    let path = |t: f64| {
        let s = (t * 4.0).rem_euclid(4.0);
        let k = (s.floor() as usize).min(3);
        let u = s - k as f64;
        let a = cs[k];
        let b = cs[(k + 1) % 4];
        a + (b - a) * u
    };
    winding_path(f, &path, 256)
}

/// Split offsets tried in order when a contour lands on a zero; all are
/// fixed so reruns are bit-identical.
const JITTER: [f64; 5] = [0.5, 0.53125, 0.46875, 0.578125, 0.421875];

enum BoxError {
    /// A zero shadows every jittered contour at this level; the caller
    /// restarts the whole subdivision with a different root box.
    Retry,
    Fatal(Error),
}

fn winding_route(f: &dyn AnalyticFn, radius: f64) -> Result<ZeroList> {
    // Identically-zero probe: a handful of spread-out samples.
    let probes = [
        Complex64::from_polar(radius, 0.1),
        Complex64::from_polar(radius, 1.3),
        Complex64::from_polar(radius, 2.7),
        Complex64::from_polar(radius, 4.1),
        Complex64::from_polar(0.37 * radius, 5.3),
    ];
    let mut any_alive = false;
    for p in probes {
        let g = f.eval_jet(p, 0)?.value();
        if g.is_finite() && g.norm() >= VALUE_FLOOR {
            any_alive = true;
            break;
        }
    }
    if !any_alive {
        return Err(Error::Degenerate(
            "function vanishes at every probe point; cannot count zeros of the \
             identically zero function"
                .into(),
        ));
    }

    let total = match winding_circle(f, czero(), radius, 256) {
        Ok(w) => w,
        Err(WindError::Eval(e)) => return Err(e),
        Err(WindError::NearZero(z)) => {
            return Err(Error::BoundaryZero {
                location: format!("{:.17e}{:+.17e}i on |z| = {radius}", z.re, z.im),
            })
        }
        Err(WindError::Unsettled) => {
            return Err(Error::Degenerate(format!(
                "boundary winding at r = {radius} did not settle on an integer; \
                 a zero is likely hugging the circle"
            )))
        }
    };
    if total < 0 {
        return Err(Error::Degenerate(
            "negative boundary winding: the function has poles in the disk".into(),
        ));
    }
    if total == 0 {
        return Ok(ZeroList::default());
    }

    let mut last_err: Option<Error> = None;
    's_factors: for s_factor in [1.001, 1.0047, 1.0093] {
        let s = radius * s_factor;
        let root = BoxRegion { lo: (-s, -s), hi: (s, s) };
        // Root-box edges are split lines too: every descendant inherits
        // stretches of them, so a zero on one poisons the whole subdivision.
        let cs = root.corners();
        for k in 0..4 {
            if !line_is_clear(f, cs[k], cs[(k + 1) % 4])? {
                last_err = Some(Error::Degenerate(
                    "zeros shadow every jittered subdivision contour".into(),
                ));
                continue 's_factors;
            }
        }
        let mut raw: Vec<(Complex64, usize)> = Vec::new();
        let mut budget = 5_000u32;
        match gather(f, &root, None, radius, 0, &mut raw, &mut budget) {
            Ok(()) => {
                let clusters = verified_clusters(f, &raw)?;
                let zeros = polish_clusters(f, clusters)?;
                return finalize(zeros, radius, Some(total));
            }
            Err(BoxError::Fatal(e)) => return Err(e),
            Err(BoxError::Retry) => {
                last_err = Some(Error::Degenerate(
                    "zeros shadow every jittered subdivision contour".into(),
                ));
            }
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Degenerate("box subdivision failed".into())))
}

/// Recursive box refinement. `w` is this box's winding if the caller knows
/// it (the root box never does). Raw root estimates accumulate in `out`;
/// `budget` bounds the total number of box visits so pathological retry
/// cascades surface as an error instead of unbounded work.
fn gather(
    f: &dyn AnalyticFn,
    bx: &BoxRegion,
    w: Option<i64>,
    radius: f64,
    depth: u32,
    out: &mut Vec<(Complex64, usize)>,
    budget: &mut u32,
) -> std::result::Result<(), BoxError> {
    if w == Some(0) {
        return Ok(());
    }
    if *budget == 0 {
        return Err(BoxError::Fatal(Error::Degenerate(
            "box subdivision exhausted its work budget; zeros too entangled with \
             the contour geometry"
                .into(),
        )));
    }
    *budget -= 1;
    if depth > 60 {
        return Err(BoxError::Fatal(Error::Degenerate(
            "box subdivision exceeded depth 60 without isolating zeros".into(),
        )));
    }
    if let Some(wb) = w {
        if bx.max_side() <= 2e-3 * (1.0 + bx.center().norm()) {
            match extract_by_moments(f, bx, wb, out) {
                Ok(true) => return Ok(()),
                Ok(false) => {} // covering circle sees foreign zeros: split on
                Err(e) => return Err(BoxError::Fatal(e)),
            }
        }
    }

    'fractions: for frac in JITTER {
        // Vet both proposed split lines before walking any child contour: a
        // zero sitting on a line would split its winding between the
        // adjacent children in a way no consistency check can see.
        let mx = bx.lo.0 + frac * (bx.hi.0 - bx.lo.0);
        let my = bx.lo.1 + frac * (bx.hi.1 - bx.lo.1);
        let horiz = (Complex64::new(bx.lo.0, my), Complex64::new(bx.hi.0, my));
        let vert = (Complex64::new(mx, bx.lo.1), Complex64::new(mx, bx.hi.1));
        for (a, b) in [horiz, vert] {
            match line_is_clear(f, a, b) {
                Ok(true) => {}
                Ok(false) => continue 'fractions,
                Err(e) => return Err(BoxError::Fatal(e)),
            }
        }
        let kids = bx.split(frac);
        let mut winds: [Option<i64>; 4] = [None; 4];
        let mut skipped = false;
        for (k, kid) in kids.iter().enumerate() {
            // Boxes clear of the closed disk (plus the boundary band) hold
            // no zero we report, so their contours are never walked.
            if kid.min_dist_origin() > radius * (1.0 + 1e-6) {
                skipped = true;
                continue;
            }
            match winding_box(f, kid) {
                Ok(wk) if wk >= 0 => winds[k] = Some(wk),
                Ok(_) => {
                    return Err(BoxError::Fatal(Error::Degenerate(
                        "negative box winding: poles inside the region".into(),
                    )))
                }
                Err(WindError::Eval(e)) => return Err(BoxError::Fatal(e)),
                Err(_) => continue 'fractions,
            }
        }
        // With no skipped child the children must account for every zero of
        // the parent; a shortfall means one slipped through a split line
        // undetected, so the split is retried elsewhere.
        if let (Some(wp), false) = (w, skipped) {
            let sum: i64 = winds.iter().map(|x| x.unwrap_or(0)).sum();
            if sum != wp {
                continue 'fractions;
            }
        }
        let mark = out.len();
        for (k, kid) in kids.iter().enumerate() {
            if let Some(wk) = winds[k] {
                if wk > 0 {
                    match gather(f, kid, Some(wk), radius, depth + 1, out, budget) {
                        Ok(()) => {}
                        Err(BoxError::Retry) => {
                            out.truncate(mark);
                            continue 'fractions;
                        }
                        fatal => return fatal,
                    }
                }
            }
        }
        return Ok(());
    }
    Err(BoxError::Retry)
}

/// Contour moments around a terminal box: power sums of the enclosed zeros
/// feed Newton's identities, whose monic polynomial is solved for the
/// individual locations. Returns false when the smallest circle covering the
/// box also covers foreign zeros, in which case the box must shrink first.
fn extract_by_moments(
    f: &dyn AnalyticFn,
    bx: &BoxRegion,
    wb: i64,
    out: &mut Vec<(Complex64, usize)>,
) -> Result<bool> {
    let c = bx.center();
    let mut rho = bx.circumradius() * 1.05;
    for _ in 0..6 {
        match winding_circle(f, c, rho, 128) {
            Err(WindError::Eval(e)) => return Err(e),
            Err(_) => rho *= 1.083,
            Ok(w) if w == wb => {
                let n = wb as usize;
                let s = circle_moments(f, c, rho, n)?;
                if (s[0] - Complex64::new(wb as f64, 0.0)).norm() > 1e-5 {
                    return Err(Error::Degenerate(format!(
                        "contour moment s0 = {} disagrees with winding {wb}",
                        s[0]
                    )));
                }
                // Newton's identities: e_k from power sums.
                let mut e = vec![czero(); n + 1];
                e[0] = Complex64::new(1.0, 0.0);
                for k in 1..=n {
                    let mut acc = czero();
                    for i in 1..=k {
                        let term = e[k - i] * s[i];
                        acc += if i % 2 == 1 { term } else { -term };
                    }
                    e[k] = acc / k as f64;
                }
                let roots = if n == 1 {
                    vec![s[1]]
                } else {
                    // p(w) = sum_k (-1)^k e_k w^{n-k}, ascending order.
                    let mut coeffs = vec![czero(); n + 1];
                    for k in 0..=n {
                        let ek = e[k];
                        coeffs[n - k] = if k % 2 == 0 { ek } else { -ek };
                    }
                    aberth(&coeffs)?
                };
                for r in roots {
                    out.push((c + r, 1));
                }
                return Ok(true);
            }
            Ok(_) => return Ok(false),
        }
    }
    Ok(false)
}

/// Power-sum moments s_0..s_n of the zeros inside `|z - c| = rho` by
/// trapezoid doubling on the circle (spectral for this analytic integrand).
fn circle_moments(f: &dyn AnalyticFn, c: Complex64, rho: f64, n: usize) -> Result<Vec<Complex64>> {
    let eval_ring = |count: usize, offset: f64| -> Result<Vec<Complex64>> {
        let mut sums = vec![czero(); n + 1];
        for j in 0..count {
            let theta = TAU * (j as f64 + offset) / count as f64;
            let e = Complex64::from_polar(rho, theta);
            let z = c + e;
            let jet = f.eval_jet(z, 1)?;
            let g = jet.value();
            let dg = jet.derivative_value(1);
            if g.norm() < VALUE_FLOOR || !g.is_finite() {
                return Err(Error::Degenerate(format!(
                    "moment contour at {z} lies on a zero despite the winding check"
                )));
            }
            let base = dg / g * e;
            let mut pw = Complex64::new(1.0, 0.0);
            for s in sums.iter_mut() {
                *s += base * pw;
                pw *= e;
            }
        }
        Ok(sums.into_iter().map(|s| s / count as f64).collect())
    };

    let mut count = 128usize;
    let mut est = eval_ring(count, 0.0)?;
    for _ in 0..8 {
        let mid = eval_ring(count, 0.5)?;
        let refined: Vec<Complex64> = est
            .iter()
            .zip(&mid)
            .map(|(a, b)| (a + b) * 0.5)
            .collect();
        let scale = 1.0 + refined.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let diff = refined
            .iter()
            .zip(&est)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        est = refined;
        count *= 2;
        if diff < 1e-10 * scale {
            return Ok(est);
        }
    }
    Err(Error::Accuracy {
        achieved: f64::NAN,
        wanted: 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Ascending-coefficient polynomial evaluated through jets; used to
    /// drive the winding route on functions whose coefficients we control.
    struct Poly(Vec<Complex64>);

    impl AnalyticFn for Poly {
        fn eval_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
            let zj = Jet::variable(z, order);
            let mut acc = Jet::constant(*self.0.last().unwrap(), order);
            for c in self.0.iter().rev().skip(1) {
                acc = acc * zj.clone() + Jet::constant(*c, order);
            }
            Ok(acc)
        }
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn expect_zeros(list: &ZeroList, want: &[(Complex64, usize)], tol: f64) {
        assert_eq!(list.len(), want.len(), "zero count mismatch: {list:?}");
        let mut remaining: Vec<Zero> = list.entries().to_vec();
        for &(loc, mult) in want {
            let idx = remaining
                .iter()
                .position(|z| (z.location - loc).norm() <= tol && z.multiplicity == mult);
            match idx {
                Some(i) => {
                    remaining.remove(i);
                }
                None => panic!("no zero near {loc} with multiplicity {mult} (tol {tol}) in {list:?}"),
            }
        }
    }

    #[test]
    fn poly_route_simple_and_double() {
        let f = Expr::parse("(z - 1)^2 * (z + 3)").unwrap();
        let zl = count_zeros(&f, 5.0).unwrap();
        expect_zeros(&zl, &[(re(-3.0), 1), (re(1.0), 2)], 1e-7);
        assert_eq!(zl.total_multiplicity(), 3);
    }

    #[test]
    fn origin_deflation_is_exact() {
        let f = Expr::parse("z^3 * (z - 2)").unwrap();
        let zl = count_zeros(&f, 3.0).unwrap();
        expect_zeros(&zl, &[(re(0.0), 3), (re(2.0), 1)], 1e-10);
        let origin = zl.iter().find(|z| z.multiplicity == 3).unwrap();
        assert_eq!(origin.location, re(0.0));
    }

    #[test]
    fn radius_filters_roots() {
        let f = Expr::parse("(z - 1) * (z - 10)").unwrap();
        let zl = count_zeros(&f, 5.0).unwrap();
        expect_zeros(&zl, &[(re(1.0), 1)], 1e-10);
        let none = count_zeros(&Expr::parse("z^2 + 100").unwrap(), 3.0).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn boundary_zero_is_reported_not_guessed() {
        let f = Expr::parse("(z - 2) * (z - 0.5)").unwrap();
        let err = count_zeros(&f, 2.0).unwrap_err();
        assert!(matches!(err, Error::BoundaryZero { .. }), "got {err:?}");
    }

    #[test]
    fn identically_zero_is_rejected() {
        let f = Expr::parse("0 * z").unwrap();
        assert!(matches!(
            count_zeros(&f, 2.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn quintuple_root_recovers_multiplicity() {
        // The solver scatters a 5-fold root over a disk of radius about
        // eps^(1/5); winding-driven merging must reassemble it.
        let f = Expr::parse("(z - 1)^5").unwrap();
        let zl = count_zeros(&f, 3.0).unwrap();
        expect_zeros(&zl, &[(re(1.0), 5)], 5e-3);
    }

    #[test]
    fn close_pair_stays_resolved() {
        let f = Expr::parse("(z - 1) * (z - 1 - 1e-4)").unwrap();
        let zl = count_zeros(&f, 2.0).unwrap();
        expect_zeros(&zl, &[(re(1.0), 1), (re(1.0 + 1e-4), 1)], 1e-9);
    }

    #[test]
    fn dual_routes_agree_on_polynomials() {
        for src in [
            "(z - 1)^2 * (z + 3)",
            "z^3 * (z - 2)",
            "z^5 - 1",
            "(z - 1) * (z - 1 - 1e-4)",
        ] {
            let f = Expr::parse(src).unwrap();
            let a = count_zeros_with(&f, 4.5, Route::Polynomial).unwrap();
            let b = count_zeros_with(&f, 4.5, Route::Winding).unwrap();
            assert_eq!(a.len(), b.len(), "{src}");
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.multiplicity, y.multiplicity, "{src}");
                assert!(
                    (x.location - y.location).norm() < 1e-6,
                    "{src}: {} vs {}",
                    x.location,
                    y.location
                );
            }
        }
    }

    #[test]
    fn winding_route_exp_minus_one() {
        let f = Expr::parse("exp(z) - 1").unwrap();
        let zl = count_zeros(&f, 7.0).unwrap();
        expect_zeros(
            &zl,
            &[
                (Complex64::new(0.0, -TAU), 1),
                (re(0.0), 1),
                (Complex64::new(0.0, TAU), 1),
            ],
            1e-9,
        );
    }

    #[test]
    fn winding_route_sine() {
        let f = Expr::parse("(exp(i*z) - exp((0 - 1) * i * z)) / (2 * i)").unwrap();
        let zl = count_zeros(&f, 10.0).unwrap();
        let want: Vec<(Complex64, usize)> = (-3..=3).map(|k| (re(k as f64 * PI), 1)).collect();
        expect_zeros(&zl, &want, 1e-9);
    }

    #[test]
    fn winding_route_double_zeros() {
        let f = Expr::parse("(exp(z) - 1)^2").unwrap();
        let zl = count_zeros(&f, 7.0).unwrap();
        expect_zeros(
            &zl,
            &[
                (Complex64::new(0.0, -TAU), 2),
                (re(0.0), 2),
                (Complex64::new(0.0, TAU), 2),
            ],
            1e-6,
        );
        assert_eq!(zl.total_multiplicity(), 6);
    }

    #[test]
    fn jetfn_wronskian_zeros() {
        // det [[z^2, e^z], [2z, e^z]] = e^z (z^2 - 2z): zeros at 0 and 2.
        let f = JetFn(|z: Complex64, order: usize| {
            let zj = Jet::variable(z, order);
            let z2 = zj.clone() * zj.clone();
            let ez = zj.clone().exp();
            let two_z = Jet::constant(re(2.0), order) * zj;
            Ok(z2 * ez.clone() - ez * two_z)
        });
        let zl = count_zeros(&f, 3.0).unwrap();
        expect_zeros(&zl, &[(re(0.0), 1), (re(2.0), 1)], 1e-9);
    }

    #[test]
    fn seeded_random_polynomials_agree_across_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _case in 0..20 {
            // Roots on a small lattice, repeats allowed so multiplicities occur.
            let degree = rng.gen_range(1..=5);
            let mut roots = Vec::new();
            let mut coeffs = vec![Complex64::one()];
            for _ in 0..degree {
                let root = Complex64::new(
                    rng.gen_range(-2..=2) as f64,
                    rng.gen_range(-1..=1) as f64,
                );
                // Cap every multiplicity at 3 to stay well inside what f64
                // can resolve without the quintic-scale location loss.
                if roots.iter().filter(|&&r| r == root).count() >= 3 {
                    continue;
                }
                roots.push(root);
                // coeffs *= (z - root)
                let mut next = vec![czero(); coeffs.len() + 1];
                for (k, &c) in coeffs.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * root;
                }
                coeffs = next;
            }
            if roots.is_empty() {
                continue;
            }
            let f = Poly(coeffs);
            let radius = 3.7; // every lattice root is well inside
            let a = count_zeros_with(&f, radius, Route::Winding).unwrap();
            // Independent truth straight from the constructed roots.
            let mut want: Vec<(Complex64, usize)> = Vec::new();
            for &r in &roots {
                match want.iter_mut().find(|(w, _)| *w == r) {
                    Some((_, m)) => *m += 1,
                    None => want.push((r, 1)),
                }
            }
            let tol = match want.iter().map(|&(_, m)| m).max().unwrap() {
                1 => 1e-8,
                2 => 1e-6,
                _ => 5e-4,
            };
            expect_zeros(&a, &want, tol);
        }
    }

    #[test]
    fn rejects_bad_radius() {
        let f = Expr::parse("z").unwrap();
        assert!(count_zeros(&f, 0.0).is_err());
        assert!(count_zeros(&f, -1.0).is_err());
        assert!(count_zeros(&f, f64::INFINITY).is_err());
    }
}
