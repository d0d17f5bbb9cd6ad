//! Jacobian sections of lifted polyvector fields along a holomorphic curve.
//!
//! A meromorphic vector field on projective n-space restricts to the affine
//! chart as n rational components in `w1..wn`. Given q = n - 1 such fields
//! and a homogeneous section t of O(p) clearing their poles, the lift along
//! a curve f is the polyvector
//!
//! ```text
//! phi(z) = t(f(z)) * X_1(f(z)) ^ ... ^ X_q(f(z))
//! ```
//!
//! with jet coefficients. Pairing the lift against the curve tangent yields
//! the Jacobian scalar
//!
//! ```text
//! W = sum_lam sign(comp(lam), lam) * phi_lam * f'_{comp(lam)}
//! ```
//!
//! which is also the top coefficient of the wedge `z_f ^ phi`; both routes
//! are implemented and cross-checked, since they exercise disjoint sign
//! machinery in the exterior kernel. The zero divisor of W is the
//! ramification locus of the pair (f, phi), and its counting function
//! enters the flat-residual identity
//!
//! ```text
//! (1/2) avg_{|z|=r} log xi  =  T(r, O(-n-1)) - T(r, O(p)) + N_ram(r) + O(1)
//! ```
//!
//! where `xi = n! * det G * |W|^2 * |sigma|^2` is the density of the
//! Jacobian section against the Euclidean area form, G the Fubini-Study
//! metric matrix in the chart, and `|sigma|^2 = 1 / (c_t^2 (1+s)^p)` the
//! O(p) metric factor normalized by the coefficient norm c_t of t
//! (s = sum |f_j|^2). Every metric constant folds into the O(1), so the
//! numerical check asserts flatness of the residual, not its value.
//!
//! Point norms (`g_ratio`, the effective multi-index search) are computed
//! in a unitary coframe at f(z): the Hermitian square root of G has the
//! closed form `P = a I + b conj(w) w^T` with `a = (1+s)^{-1/2}` and
//! `b = ((1+s)^{-1} - a)/s`, and frame components of tangent vectors are
//! plain matrix images `P v`. In that frame the Cauchy-Schwarz inequality
//! gives `g <= |phi|` with no constants.

use crate::curve::{Divisor, ProjectiveCurve};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::exterior::{enumerate_multiindices, perm_sign, ExteriorElement, MultiIndex};
use crate::growth::{GrowthTable, RGrid};
use crate::jet::Jet;
use crate::nevanlinna::{characteristic_unit, count_zeros_logged, counting_table};
use crate::quad::{circle_average_logged, QuadLog, QuadOpts};
use crate::zeros::{JetFn, ZeroList};
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar magnitudes below this floor count as vanishing for effectivity
/// certificates and the effective multi-index search.
pub const EFFECTIVITY_FLOOR: f64 = 1e-12;

/// Grid radii where |ln T(r)| sits below this floor are reported as
/// exceptional by the normalized inequality report: the normalization
/// changes sign at T = 1 and the quotient is meaningless in that band.
pub const LOG_T_FLOOR: f64 = 1e-3;

/// Growth of max |t * X| across a tenfold step toward a located pole that
/// convicts the section of failing to clear it. A cleared pole gives a
/// bounded ratio near 1; an uncleared pole of order k scales like 10^k.
const POLE_GROWTH_FACTOR: f64 = 3.0;

pub(crate) fn chart_var_index(name: &str, n: usize) -> Result<usize> {
    let idx: Option<usize> = name.strip_prefix('w').and_then(|d| d.parse().ok());
    match idx {
        Some(j) if (1..=n).contains(&j) => Ok(j),
        _ => Err(Error::Domain(format!(
            "chart expressions may only use variables w1..w{n}, found `{name}`"
        ))),
    }
}

pub(crate) fn reject_transcendental(e: &Expr) -> Result<()> {
    match e {
        Expr::Exp(_) | Expr::Log(_) => Err(Error::Domain(
            "vector field components must be rational in the chart variables".into(),
        )),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            reject_transcendental(a)?;
            reject_transcendental(b)
        }
        Expr::Pow(a, _) | Expr::Neg(a) => reject_transcendental(a),
        Expr::Var(_) | Expr::Const(_) => Ok(()),
    }
}

/// Syntactic pole candidates: denominators of divisions and bases of
/// negative powers, skipping constant ones.
fn collect_denominators(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Div(a, b) => {
            collect_denominators(a, out);
            collect_denominators(b, out);
            if b.as_constant().is_none() {
                out.push((**b).clone());
            }
        }
        Expr::Pow(a, k) => {
            collect_denominators(a, out);
            if *k < 0 && a.as_constant().is_none() {
                out.push((**a).clone());
            }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            collect_denominators(a, out);
            collect_denominators(b, out);
        }
        Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) => collect_denominators(a, out),
        Expr::Var(_) | Expr::Const(_) => {}
    }
}

/// A meromorphic vector field on the affine chart of projective n-space:
/// n rational components in the chart variables `w1..wn`. The ambient
/// dimension is the component count.
#[derive(Debug, Clone)]
pub struct MeromorphicVectorField {
    components: Vec<Expr>,
}

impl MeromorphicVectorField {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain(
                "a vector field needs at least one component".into(),
            ));
        }
        let n = components.len();
        for c in &components {
            reject_transcendental(c)?;
            for v in c.variables() {
                chart_var_index(&v, n)?;
            }
        }
        let vanishes = components
            .iter()
            .all(|c| matches!(c.as_constant(), Some(v) if v.norm() == 0.0));
        if vanishes {
            return Err(Error::Domain(
                "vector field has no nonzero component".into(),
            ));
        }
        Ok(MeromorphicVectorField { components })
    }

    pub fn parse(sources: &[&str]) -> Result<Self> {
        Self::new(
            sources
                .iter()
                .map(|s| Expr::parse(s))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Ambient chart dimension.
    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Components evaluated at chart jets `w` (length n); `at` labels
    /// singular-point errors with the curve parameter.
    pub fn eval(&self, w: &[Jet], at: Complex64) -> Result<Vec<Jet>> {
        if w.len() != self.components.len() {
            return Err(Error::Domain(format!(
                "field over {} chart variables evaluated at {} jets",
                self.components.len(),
                w.len()
            )));
        }
        let bind = |name: &str| {
            chart_var_index(name, w.len())
                .ok()
                .map(|j| w[j - 1].clone())
        };
        self.components.iter().map(|c| c.eval_jet(&bind, at)).collect()
    }
}

/// A nonzero section t of O(p): a homogeneous polynomial in `w0..wn` whose
/// multiples clear the poles of the fields it is paired with. Construction
/// certifies homogeneity through the shared divisor machinery; the
/// pole-clearing certificate runs when the section is paired with fields.
#[derive(Debug, Clone)]
pub struct PoleSection {
    section: Divisor,
}

impl PoleSection {
    pub fn new(poly: Expr, n: usize) -> Result<Self> {
        Ok(PoleSection {
            section: Divisor::new(poly, n)?,
        })
    }

    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Self::new(Expr::parse(src)?, n)
    }

    /// The constant section 1 of the trivial bundle (p = 0).
    pub fn one(n: usize) -> Self {
        PoleSection {
            section: Divisor::new(Expr::Const(Complex64::ONE), n)
                .expect("the constant section is a valid divisor"),
        }
    }

    pub fn n(&self) -> usize {
        self.section.n()
    }

    /// The degree p of E = O(p).
    pub fn degree(&self) -> usize {
        self.section.degree()
    }

    /// Sum of |coefficients|; normalizes the section metric.
    pub fn coeff_norm(&self) -> f64 {
        self.section.coeff_norm()
    }

    pub fn divisor(&self) -> &Divisor {
        &self.section
    }

    /// Chart representative t(1, w1, ..., wn) at chart jets.
    pub fn chart_jet(&self, w: &[Jet], at: Complex64) -> Result<Jet> {
        if w.len() != self.section.n() {
            return Err(Error::Domain(format!(
                "section over P^{} evaluated at {} chart jets",
                self.section.n(),
                w.len()
            )));
        }
        let order = w.iter().map(Jet::order).max().unwrap_or(0);
        let bind = |name: &str| -> Option<Jet> {
            let j: usize = name.strip_prefix('w')?.parse().ok()?;
            if j == 0 {
                Some(Jet::constant(Complex64::ONE, order))
            } else if j <= w.len() {
                Some(w[j - 1].clone())
            } else {
                None
            }
        };
        self.section.poly().eval_jet(&bind, at)
    }

    /// Chart value t(1, w).
    pub fn chart_value(&self, w: &[Complex64]) -> Result<Complex64> {
        let mut coords = Vec::with_capacity(w.len() + 1);
        coords.push(Complex64::ONE);
        coords.extend_from_slice(w);
        self.section.eval_at_values(&coords)
    }

    /// Numerically certify that this section clears every pole of the
    /// fields. Two sweeps: a broad random sweep requiring finite products
    /// t(w) * X(w) on a thousand chart points, and a targeted sweep that
    /// locates a zero of each syntactic denominator by one-variable Newton
    /// and convicts the pair when |t * X| still grows across a tenfold
    /// step toward the pole.
    pub fn verify_clears(&self, fields: &[MeromorphicVectorField]) -> Result<()> {
        let n = self.section.n();
        for field in fields {
            if field.n() != n {
                return Err(Error::Domain(format!(
                    "section over P^{} paired with a field over {} chart variables",
                    n,
                    field.n()
                )));
            }
        }
        let items: Vec<(String, &Expr)> = fields
            .iter()
            .enumerate()
            .flat_map(|(fi, field)| {
                field
                    .components()
                    .iter()
                    .enumerate()
                    .map(move |(a, comp)| (format!("component {} of field {fi}", a + 1), comp))
            })
            .collect();
        self.verify_clears_exprs(&items)
    }

    /// Expression-level clearing certificate shared by vector fields and
    /// Christoffel tables: each labeled expression in the chart variables
    /// must have every pole absorbed by this section.
    pub(crate) fn verify_clears_exprs(&self, items: &[(String, &Expr)]) -> Result<()> {
        if items.is_empty() {
            return Ok(());
        }
        let n = self.section.n();
        let mut rng = ChaCha8Rng::seed_from_u64(0x7a5e_55e0);
        let eval_at = |expr: &Expr, w: &[Complex64]| -> Result<Complex64> {
            let jets: Vec<Jet> = w.iter().map(|&c| Jet::from_coeffs(vec![c])).collect();
            let bind = |name: &str| {
                chart_var_index(name, n)
                    .ok()
                    .map(|j| jets[j - 1].clone())
            };
            Ok(expr.eval_jet(&bind, Complex64::ZERO)?.value())
        };

        let mut clean = 0usize;
        let mut attempts = 0usize;
        'sweep: while clean < 1000 {
            attempts += 1;
            if attempts > 5000 {
                return Err(Error::Degenerate(
                    "chart evaluation failed on a substantial share of random points; \
                     the pole set is not a thin subset of the chart"
                        .into(),
                ));
            }
            let w: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let t = self.chart_value(&w)?;
            for (label, expr) in items {
                let Ok(value) = eval_at(expr, &w) else {
                    // The random point landed on a pole; resample.
                    continue 'sweep;
                };
                if !(t * value).is_finite() {
                    return Err(Error::Degenerate(format!(
                        "t * ({label}) is not finite at the random chart point {w:?}"
                    )));
                }
            }
            clean += 1;
        }

        for (label, expr) in items {
            let mut dens = Vec::new();
            collect_denominators(expr, &mut dens);
            for den in &dens {
                let Some((w_pole, j)) = locate_denominator_zero(den, n, &mut rng) else {
                    continue;
                };
                let magnitude = |eps: f64| -> Result<f64> {
                    let mut w = w_pole.clone();
                    w[j - 1] += Complex64::new(eps, 0.0);
                    let t = self.chart_value(&w)?;
                    Ok((t * eval_at(expr, &w)?).norm())
                };
                let coarse = magnitude(1e-6)?;
                let fine = magnitude(1e-7)?;
                if !fine.is_finite() || fine > POLE_GROWTH_FACTOR * coarse + 1e-9 {
                    return Err(Error::Degenerate(format!(
                        "section of degree {} does not clear the poles of {label} \
                         near the chart point {:?}: the cleared magnitude grows from \
                         {:.3e} to {:.3e} across a tenfold step toward the pole",
                        self.degree(),
                        w_pole,
                        coarse,
                        fine
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Find a chart point where `den` vanishes by Newton iteration in one
/// coordinate, the others frozen at random values. Returns the point and
/// the varied coordinate (1-based), or `None` when no zero is reachable.
fn locate_denominator_zero(
    den: &Expr,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<Complex64>, usize)> {
    let vars: Vec<usize> = den
        .variables()
        .iter()
        .filter_map(|v| chart_var_index(v, n).ok())
        .collect();
    if vars.is_empty() {
        return None;
    }
    'attempts: for _ in 0..40 {
        let j = vars[rng.gen_range(0..vars.len())];
        let mut w: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
            .collect();
        let mut zeta = w[j - 1];
        // Convergence is judged on the step, not the residual: at a zero
        // of order m the residual scales like step^m, and a loose residual
        // would leave the located point off the pole by more than the
        // ratio-test offsets.
        for _ in 0..200 {
            let bind = |name: &str| -> Option<Jet> {
                let k = chart_var_index(name, n).ok()?;
                if k == j {
                    Some(Jet::variable(zeta, 1))
                } else {
                    Some(Jet::from_coeffs(vec![w[k - 1]]))
                }
            };
            let Ok(jet) = den.eval_jet(&bind, zeta) else {
                continue 'attempts;
            };
            let (h, dh) = (jet.value(), jet.coeff(1));
            if h.norm() < 1e-30 {
                w[j - 1] = zeta;
                return Some((w, j));
            }
            if dh.norm() < 1e-300 {
                continue 'attempts;
            }
            let step = h / dh;
            if !step.is_finite() || step.norm() > 10.0 {
                continue 'attempts;
            }
            zeta -= step;
            if step.norm() < 1e-9 * (1.0 + zeta.norm()) {
                w[j - 1] = zeta;
                return Some((w, j));
            }
        }
    }
    None
}

/// A lift specification: q vector fields and a pole-clearing section. The
/// constructor certifies dimensions and pole clearing; evaluation along a
/// curve produces the degree-q polyvector with jet coefficients.
#[derive(Debug, Clone)]
pub struct HolomorphicField {
    fields: Vec<MeromorphicVectorField>,
    section: PoleSection,
}

impl HolomorphicField {
    pub fn new(fields: Vec<MeromorphicVectorField>, section: PoleSection) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Domain("the lift needs at least one field".into()));
        }
        let n = section.n();
        if fields.len() > n {
            return Err(Error::Domain(format!(
                "cannot wedge {} fields over a chart of dimension {n}",
                fields.len()
            )));
        }
        section.verify_clears(&fields)?;
        Ok(HolomorphicField { fields, section })
    }

    /// Ambient chart dimension.
    pub fn n(&self) -> usize {
        self.section.n()
    }

    /// Polyvector degree q (the field count).
    pub fn q(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[MeromorphicVectorField] {
        &self.fields
    }

    pub fn section(&self) -> &PoleSection {
        &self.section
    }

    /// The lift phi(z) with jet coefficients of the given order.
    pub fn eval(&self, f: &ProjectiveCurve, z: Complex64, order: usize) -> Result<ExteriorElement<Jet>> {
        let w = f.affine_jets(z, order)?;
        lift_from_jets(&self.fields, &self.section, &w, z)
    }
}

fn lift_from_jets<'a>(
    fields: impl IntoIterator<Item = &'a MeromorphicVectorField>,
    section: &PoleSection,
    w: &[Jet],
    at: Complex64,
) -> Result<ExteriorElement<Jet>> {
    let n = w.len();
    let mut acc: Option<ExteriorElement<Jet>> = None;
    for field in fields {
        let comps = field.eval(w, at)?;
        let el = degree_one(n, comps)?;
        acc = Some(match acc {
            None => el,
            Some(prev) => prev.wedge(&el)?,
        });
    }
    let el = acc.ok_or_else(|| Error::Domain("the lift needs at least one field".into()))?;
    let t = section.chart_jet(w, at)?;
    Ok(el.scale(&t))
}

pub(crate) fn degree_one<S: crate::exterior::Scalar>(
    n: usize,
    comps: Vec<S>,
) -> Result<ExteriorElement<S>> {
    ExteriorElement::from_coeffs(
        n,
        1,
        comps
            .into_iter()
            .enumerate()
            .map(|(a, c)| (MultiIndex::new(vec![a + 1], n).expect("singleton index"), c)),
    )
}

/// Evaluate the lift `t(f) X_1(f) ^ ... ^ X_q(f)` at z with jet
/// coefficients of the given order.
pub fn lift_field(
    fields: &[MeromorphicVectorField],
    t: &PoleSection,
    f: &ProjectiveCurve,
    z: Complex64,
    order: usize,
) -> Result<ExteriorElement<Jet>> {
    let w = f.affine_jets(z, order)?;
    lift_from_jets(fields, t, &w, z)
}

/// The curve tangent as a degree-1 element with jet coefficients: the
/// wedge route pairs this against the lift.
pub fn tangent_element(f: &ProjectiveCurve, z: Complex64, order: usize) -> Result<ExteriorElement<Jet>> {
    let w = f.affine_jets(z, order + 1)?;
    let n = w.len();
    degree_one(n, w.iter().map(Jet::differentiate).collect())
}

/// Formula route for the Jacobian scalar of a raw degree-(n-1) element:
/// the signed sum pairing each lift coefficient against the complementary
/// tangent component. Linear in both arguments.
pub fn jacobian_scalar_of_element(tangent: &[Jet], phi: &ExteriorElement<Jet>) -> Result<Jet> {
    let n = tangent.len();
    if phi.ambient() != n || phi.degree() + 1 != n {
        return Err(Error::Domain(format!(
            "the Jacobian scalar needs a degree-{} element over ambient {n}, \
             got degree {} over ambient {}",
            n - 1,
            phi.degree(),
            phi.ambient()
        )));
    }
    let mut acc = Jet::zero();
    for (lam, coeff) in phi.iter() {
        let comp = lam.complement();
        let sign = perm_sign(&comp, lam)?;
        let term = coeff.clone() * tangent[comp.entries()[0] - 1].clone();
        acc = if sign > 0 { acc + term } else { acc - term };
    }
    Ok(acc)
}

/// The Jacobian scalar W(z) as a jet of the given order, by the signed
/// coefficient sum.
pub fn jacobian_scalar(
    f: &ProjectiveCurve,
    phi: &HolomorphicField,
    z: Complex64,
    order: usize,
) -> Result<Jet> {
    let w = f.affine_jets(z, order + 1)?;
    let fprime: Vec<Jet> = w.iter().map(Jet::differentiate).collect();
    let el = lift_from_jets(phi.fields(), phi.section(), &w, z)?;
    jacobian_scalar_of_element(&fprime, &el)
}

/// The Jacobian scalar by the independent wedge route: top coefficient of
/// `z_f ^ phi` assembled through the exterior kernel.
pub fn wedge_scalar(
    f: &ProjectiveCurve,
    phi: &HolomorphicField,
    z: Complex64,
    order: usize,
) -> Result<Jet> {
    let w = f.affine_jets(z, order + 1)?;
    let n = w.len();
    let tangent = degree_one(n, w.iter().map(Jet::differentiate).collect())?;
    let el = lift_from_jets(phi.fields(), phi.section(), &w, z)?;
    tangent.wedge(&el)?.top_coefficient()
}

/// A point certifying that the Jacobian scalar is not identically zero.
#[derive(Debug, Clone, Copy)]
pub struct EffectivityWitness {
    pub at: Complex64,
    pub magnitude: f64,
}

/// Default sample points for effectivity scans; spread out and away from
/// common symmetry loci (axes, unit circle, origin).
pub fn effectivity_probes() -> Vec<Complex64> {
    vec![
        Complex64::new(0.37, 0.24),
        Complex64::new(-0.81, 0.55),
        Complex64::new(1.43, -0.92),
        Complex64::new(-1.27, -1.66),
        Complex64::new(2.35, 1.08),
    ]
}

/// Scan the samples for a point where the Jacobian scalar is visibly
/// nonzero. `Some(witness)` certifies effectivity; `None` is an
/// inconclusive negative (every sampled scalar sat below the floor).
pub fn effectivity_test(
    f: &ProjectiveCurve,
    phi: &HolomorphicField,
    samples: &[Complex64],
) -> Result<Option<EffectivityWitness>> {
    if samples.is_empty() {
        return Err(Error::Domain(
            "effectivity needs at least one sample point".into(),
        ));
    }
    for &z in samples {
        let magnitude = jacobian_scalar(f, phi, z, 0)?.value().norm();
        if magnitude > EFFECTIVITY_FLOOR {
            return Ok(Some(EffectivityWitness { at: z, magnitude }));
        }
    }
    Ok(None)
}

/// Frame data of the curve at one point: chart jets, the squared chart
/// norm s, the unitary-frame tangent image, and its squared norm u (the
/// Fubini-Study pullback density times pi).
struct FramePoint {
    w: Vec<Jet>,
    values: Vec<Complex64>,
    s: f64,
    framed_tangent: Vec<Complex64>,
    u: f64,
}

fn frame_point(f: &ProjectiveCurve, z: Complex64) -> Result<FramePoint> {
    let w = f.affine_jets(z, 1)?;
    let values: Vec<Complex64> = w.iter().map(Jet::value).collect();
    let derivs: Vec<Complex64> = w.iter().map(|j| j.derivative_value(1)).collect();
    let s: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    let framed_tangent = apply_fs_frame(&values, s, &derivs);
    let u: f64 = framed_tangent.iter().map(|c| c.norm_sqr()).sum();
    Ok(FramePoint {
        w,
        values,
        s,
        framed_tangent,
        u,
    })
}

/// Image of a chart vector under the unitary coframe matrix
/// `P = a I + b w w^H`, the Hermitian square root of the Fubini-Study
/// metric matrix `G = I/(1+s) - w w^H/(1+s)^2` at w.
fn apply_fs_frame(wvals: &[Complex64], s: f64, v: &[Complex64]) -> Vec<Complex64> {
    let a = 1.0 / (1.0 + s).sqrt();
    // b is (1/(1+s) - a)/s, with the s -> 0 limit -1/2 patched in; the
    // subtraction loses all digits there while the limit error is O(s).
    let b = if s < 1e-12 {
        -0.5
    } else {
        (1.0 / (1.0 + s) - a) / s
    };
    let dot: Complex64 = wvals.iter().zip(v).map(|(wj, vj)| wj.conj() * vj).sum();
    v.iter()
        .zip(wvals)
        .map(|(vj, wj)| a * vj + b * wj * dot)
        .collect()
}

/// Signed pairing of the framed lift against the framed tangent, plus the
/// squared frame norm of the lift (without the section metric factor).
fn framed_pairing<'a>(
    fp: &FramePoint,
    fields: impl IntoIterator<Item = &'a MeromorphicVectorField>,
    section: &PoleSection,
    at: Complex64,
) -> Result<(Complex64, f64)> {
    let n = fp.values.len();
    let mut acc: Option<ExteriorElement<Complex64>> = None;
    for field in fields {
        let comps = field.eval(&fp.w, at)?;
        let vals: Vec<Complex64> = comps.iter().map(Jet::value).collect();
        let el = degree_one(n, apply_fs_frame(&fp.values, fp.s, &vals))?;
        acc = Some(match acc {
            None => el,
            Some(prev) => prev.wedge(&el)?,
        });
    }
    let el = acc.ok_or_else(|| Error::Domain("the lift needs at least one field".into()))?;
    let t = section.chart_jet(&fp.w, at)?.value();
    let el = el.scale(&t);
    if el.degree() + 1 != n {
        return Err(Error::Domain(format!(
            "the frame pairing needs degree {} over ambient {n}, got {}",
            n - 1,
            el.degree()
        )));
    }
    let mut paired = Complex64::ZERO;
    let mut norm_sq = 0.0;
    for (lam, coeff) in el.iter() {
        norm_sq += coeff.norm_sqr();
        let comp = lam.complement();
        let sign = perm_sign(&comp, lam)? as f64;
        paired += sign * coeff * fp.framed_tangent[comp.entries()[0] - 1];
    }
    Ok((paired, norm_sq))
}

/// Search over q-element subsets of the fields (q = n - 1) for the one
/// whose framed lift pairs most efficiently against the tangent frame at
/// the probe: the score is the dual-frame minor `|S| / |phi_frame|`, the
/// component of the framed tangent along the direction dual to the lift.
/// Candidates whose raw pairing sits below the effectivity floor are
/// ineligible, and ties resolve to the lexicographically smallest
/// multi-index. Returns the winner and its minor magnitude.
pub fn find_effective_multiindex(
    f: &ProjectiveCurve,
    fields: &[MeromorphicVectorField],
    t: &PoleSection,
    probe: Complex64,
) -> Result<(MultiIndex, f64)> {
    let n = f.n();
    if n < 2 {
        return Err(Error::Domain(
            "the multi-index search needs chart dimension at least 2".into(),
        ));
    }
    let q = n - 1;
    if fields.len() < q {
        return Err(Error::Domain(format!(
            "need at least {q} fields to lift a degree-{q} polyvector, got {}",
            fields.len()
        )));
    }
    let fp = frame_point(f, probe)?;
    if fp.u <= 1e-28 * (1.0 + fp.s) {
        return Err(Error::DegenerateProbe {
            at: probe.to_string(),
        });
    }
    let mut best: Option<(MultiIndex, f64)> = None;
    for idx in enumerate_multiindices(fields.len(), q)? {
        let subset = idx.entries().iter().map(|&k| &fields[k - 1]);
        let (paired, norm_sq) = framed_pairing(&fp, subset, t, probe)?;
        if paired.norm() <= EFFECTIVITY_FLOOR || norm_sq <= 0.0 {
            continue;
        }
        let minor = paired.norm() / norm_sq.sqrt();
        let better = match &best {
            None => true,
            Some((_, m)) => minor > m * (1.0 + 1e-12),
        };
        if better {
            best = Some((idx, minor));
        }
    }
    best.ok_or(Error::DegenerateProbe {
        at: probe.to_string(),
    })
}

/// The two sides of the pointwise Schwarz bound: `g` is the density ratio
/// of the Jacobian section against the pulled-back Fubini-Study area, and
/// `phi_norm` is the lift norm in the induced metric; `g <= phi_norm`
/// always, with equality when the lift aligns with the tangent frame.
#[derive(Debug, Clone, Copy)]
pub struct GRatio {
    pub g: f64,
    pub phi_norm: f64,
}

pub fn g_ratio(f: &ProjectiveCurve, phi: &HolomorphicField, z: Complex64) -> Result<GRatio> {
    let n = f.n();
    if phi.n() != n || phi.q() + 1 != n {
        return Err(Error::Domain(format!(
            "g ratio needs {} fields over a chart of dimension {n}",
            n - 1
        )));
    }
    let fp = frame_point(f, z)?;
    if fp.u <= 1e-28 * (1.0 + fp.s) {
        return Err(Error::StationaryPoint { at: z.to_string() });
    }
    let (paired, norm_sq) = framed_pairing(&fp, phi.fields(), phi.section(), z)?;
    let p = phi.section().degree() as f64;
    let section_norm = 1.0 / (phi.section().coeff_norm() * (1.0 + fp.s).powf(p / 2.0));
    Ok(GRatio {
        g: paired.norm() * section_norm / fp.u.sqrt(),
        phi_norm: norm_sq.sqrt() * section_norm,
    })
}

/// log xi at z, where xi is the density of the Jacobian section against
/// the Euclidean area form:
///
/// ```text
/// log xi = ln n! + 2 ln|W| - 2 ln c_t - (n + 1 + p) ln(1 + s)
/// ```
///
/// using det G = (1+s)^{-(n+1)} for the Fubini-Study metric matrix in the
/// chart. Errors as a singular point where W vanishes, so circle averages
/// can apply the standard perturbation policy.
pub fn log_xi(f: &ProjectiveCurve, phi: &HolomorphicField, z: Complex64) -> Result<f64> {
    let wmag = jacobian_scalar(f, phi, z, 0)?.value().norm();
    if wmag < crate::jet::SINGULARITY_TOLERANCE {
        return Err(Error::singular("Jacobian scalar W", z));
    }
    let values = f.values(z)?;
    let f0 = values[0];
    if f0.norm() < crate::curve::CHART_TOLERANCE {
        return Err(Error::singular("chart denominator F0", z));
    }
    let s: f64 = values[1..].iter().map(|v| (v / f0).norm_sqr()).sum();
    let n = f.n();
    let p = phi.section().degree() as f64;
    let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    Ok(ln_fact + 2.0 * wmag.ln()
        - 2.0 * phi.section().coeff_norm().ln()
        - (n as f64 + 1.0 + p) * (1.0 + s).ln())
}

fn ensure_effective(f: &ProjectiveCurve, phi: &HolomorphicField) -> Result<()> {
    match effectivity_test(f, phi, &effectivity_probes())? {
        Some(_) => Ok(()),
        None => Err(Error::Degenerate(
            "the lifted field pairs to an identically vanishing Jacobian scalar; \
             the ramification divisor is undefined"
                .into(),
        )),
    }
}

/// Ramification data: the counting table N(r, (W)), the zero list behind
/// it, and the quadrature log of the count.
#[derive(Debug, Clone)]
pub struct RamificationTables {
    pub counting: GrowthTable,
    pub zeros: ZeroList,
    pub log: QuadLog,
}

/// N(r, zeros of the Jacobian scalar) over the grid. Requires an
/// effectivity certificate first: counting zeros of the zero function is
/// undefined.
pub fn ramification(
    f: &ProjectiveCurve,
    phi: &HolomorphicField,
    grid: &RGrid,
) -> Result<RamificationTables> {
    ensure_effective(f, phi)?;
    let scalar = JetFn(|z, order| jacobian_scalar(f, phi, z, order));
    let mut log = QuadLog::default();
    let zeros = count_zeros_logged(&scalar, grid.max_radius(), "ramification scalar", &mut log)?;
    let counting = counting_table("N_ram", &zeros, grid)?;
    Ok(RamificationTables {
        counting,
        zeros,
        log,
    })
}

/// All columns of the flat-residual identity check.
#[derive(Debug, Clone)]
pub struct SmtIdentityTables {
    /// Half the circle average of log xi.
    pub lhs: GrowthTable,
    /// T(r, O(-n-1)): the canonical-bundle characteristic, -(n+1) T_1(r).
    pub canonical: GrowthTable,
    /// T(r, O(p)) for the section bundle, p T_1(r).
    pub section: GrowthTable,
    /// N(r, (W)).
    pub ramification: GrowthTable,
    /// lhs - [canonical - section + ramification]; flat when every piece
    /// is computed consistently.
    pub residual: GrowthTable,
    pub zeros: ZeroList,
    pub log: QuadLog,
}

/// Verify the identity tying the circle average of log xi to the
/// characteristics and the ramification term. The residual column absorbs
/// every metric constant, so it must be flat in r; its value is
/// meaningless.
pub fn smt_identity_residual(
    f: &ProjectiveCurve,
    phi: &HolomorphicField,
    grid: &RGrid,
    opts: &QuadOpts,
) -> Result<SmtIdentityTables> {
    let n = f.n();
    if phi.n() != n || phi.q() + 1 != n {
        return Err(Error::Domain(format!(
            "the identity needs {} fields over a chart of dimension {n}",
            n - 1
        )));
    }
    ensure_effective(f, phi)?;
    let mut log = QuadLog::default();

    let mut integrand = |z: Complex64| log_xi(f, phi, z);
    let lhs = GrowthTable::tabulate("half_avg_log_xi", grid, |r| {
        Ok(0.5
            * circle_average_logged(
                &mut integrand,
                r,
                opts.circle_tol,
                "identity integrand log xi",
                &mut log,
            )?)
    })?;

    let unit = characteristic_unit(f, grid, opts)?;
    let canonical = unit.map("T_canonical", |v| -((n as f64) + 1.0) * v);
    let section = unit.map("T_section", |v| phi.section().degree() as f64 * v);

    let ram = ramification(f, phi, grid)?;
    log.perturbations.extend(ram.log.perturbations.iter().cloned());
    log.notes.extend(ram.log.notes.iter().cloned());

    let rhs = canonical
        .zip_with(&section, "rhs", |k, e| k - e)?
        .zip_with(&ram.counting, "rhs", |x, nr| x + nr)?;
    let residual = lhs.zip_with(&rhs, "residual", |l, r| l - r)?;

    Ok(SmtIdentityTables {
        lhs,
        canonical,
        section,
        ramification: ram.counting,
        residual,
        zeros: ram.zeros,
        log,
    })
}

/// The inequality-side report: the degeneracy combination
/// `T(r, O(-n-1)) + N_ram(r) - T(r, O(p))` and its normalizations by
/// ln T_1(r) and by max(ln+ T_1(r), floor). Radii where |ln T_1| sits
/// inside [`LOG_T_FLOOR`] are listed as exceptional and excluded from the
/// reported bound; their normalized values use the sign-preserving floored
/// denominator so the CSV column stays finite.
#[derive(Debug, Clone)]
pub struct SmtInequalityReport {
    pub lhs: GrowthTable,
    pub normalized: GrowthTable,
    pub normalized_plus: GrowthTable,
    /// max of `normalized` over non-exceptional radii; -inf when every
    /// radius is exceptional.
    pub bound: f64,
    pub exceptional: Vec<f64>,
    /// Log-measure sum of grid segments owned by exceptional radii.
    pub exceptional_log_measure: f64,
    /// ln(r_max / r_min).
    pub grid_log_measure: f64,
    pub zeros: ZeroList,
    pub log: QuadLog,
}

pub fn smt_inequality_report(
    f: &ProjectiveCurve,
    phi: &HolomorphicField,
    grid: &RGrid,
    opts: &QuadOpts,
) -> Result<SmtInequalityReport> {
    let n = f.n() as f64;
    let p = phi.section().degree() as f64;
    let unit = characteristic_unit(f, grid, opts)?;
    let ram = ramification(f, phi, grid)?;
    let lhs = unit.zip_with(&ram.counting, "degeneracy_lhs", |t1, nr| {
        -(n + 1.0) * t1 + nr - p * t1
    })?;
    let norm = normalize_by_log_t(&unit, &lhs, grid)?;
    Ok(SmtInequalityReport {
        lhs,
        normalized: norm.normalized,
        normalized_plus: norm.normalized_plus,
        bound: norm.bound,
        exceptional: norm.exceptional,
        exceptional_log_measure: norm.exceptional_log_measure,
        grid_log_measure: norm.grid_log_measure,
        zeros: ram.zeros,
        log: ram.log,
    })
}

pub(crate) struct NormalizedByLogT {
    pub normalized: GrowthTable,
    pub normalized_plus: GrowthTable,
    pub bound: f64,
    pub exceptional: Vec<f64>,
    pub exceptional_log_measure: f64,
    pub grid_log_measure: f64,
}

/// Normalize a growth column by ln T_1(r), flagging the radii where the
/// denominator degenerates. Shared by the degeneracy and connection
/// inequality reports.
pub(crate) fn normalize_by_log_t(
    unit: &GrowthTable,
    lhs: &GrowthTable,
    grid: &RGrid,
) -> Result<NormalizedByLogT> {
    let radii: Vec<f64> = grid.iter().collect();
    let mut exceptional = Vec::new();
    let mut normalized = Vec::with_capacity(radii.len());
    let mut normalized_plus = Vec::with_capacity(radii.len());
    let mut bound = f64::NEG_INFINITY;
    for (k, ((_, t1), (_, l))) in unit.rows().zip(lhs.rows()).enumerate() {
        let den = if t1 > 0.0 { t1.ln() } else { f64::NEG_INFINITY };
        let in_band = !den.is_finite() || den.abs() < LOG_T_FLOOR;
        let floored = if den.is_finite() && den.abs() >= LOG_T_FLOOR {
            den
        } else if den < 0.0 {
            -LOG_T_FLOOR
        } else {
            LOG_T_FLOOR
        };
        let value = l / floored;
        normalized.push(value);
        let plus = if t1 > 1.0 { t1.ln() } else { 0.0 };
        normalized_plus.push(l / plus.max(LOG_T_FLOOR));
        if in_band {
            exceptional.push(radii[k]);
        } else {
            bound = bound.max(value);
        }
    }
    let owned = |r: f64| -> f64 {
        match radii.iter().position(|&x| x == r) {
            Some(k) if k + 1 < radii.len() => (radii[k + 1] / radii[k]).ln(),
            _ => 0.0,
        }
    };
    let exceptional_log_measure = exceptional.iter().fold(0.0, |acc, &r| acc + owned(r));
    let grid_log_measure = (grid.max_radius() / radii[0]).ln();
    Ok(NormalizedByLogT {
        normalized: GrowthTable::new("lhs_over_log_T", grid.clone(), normalized)?,
        normalized_plus: GrowthTable::new("lhs_over_log_plus_T", grid.clone(), normalized_plus)?,
        bound,
        exceptional,
        exceptional_log_measure,
        grid_log_measure,
    })
}

/// Max deviation of Phi(f_1, ..., f_n) over the samples from its value at
/// the first sample. A near-zero deviation certifies that the curve lies
/// on one level set of Phi.
pub fn first_integral_check(
    f: &ProjectiveCurve,
    phi: &Expr,
    samples: &[Complex64],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain(
            "the first-integral check needs at least one sample".into(),
        ));
    }
    let n = f.n();
    for v in phi.variables() {
        chart_var_index(&v, n)?;
    }
    let mut base: Option<Complex64> = None;
    let mut worst = 0.0f64;
    for &z in samples {
        let w = f.affine_jets(z, 0)?;
        let bind = |name: &str| {
            chart_var_index(name, n)
                .ok()
                .map(|j| w[j - 1].clone())
        };
        let value = phi.eval_jet(&bind, z)?.value();
        match base {
            None => base = Some(value),
            Some(c) => worst = worst.max((value - c).norm()),
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nevanlinna::fs_pullback_density;
    use crate::quad::circle_average;
    use crate::zeros::count_zeros;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const JET_TOLERANCE: f64 = 1e-11;
    const FLATNESS_TOLERANCE: f64 = 1e-5;
    const ORACLE_TOLERANCE: f64 = 2e-6;
    const SCHWARZ_SLACK: f64 = 1e-9;

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

    fn field(components: &[&str]) -> MeromorphicVectorField {
        MeromorphicVectorField::parse(components).expect("test field")
    }

    fn lifted(fields: &[&[&str]], section: PoleSection) -> HolomorphicField {
        HolomorphicField::new(fields.iter().map(|f| field(f)).collect(), section)
            .expect("test lift")
    }

    fn sample_points() -> Vec<Complex64> {
        vec![c(0.45, 0.3), c(-0.7, 0.9), c(1.2, -0.4), c(-1.1, -0.8)]
    }

    /// Circle average of log |F| over |z| = 1 for a projective curve, the
    /// additive constant of the direct characteristic route.
    fn base_circle_constant(f: &ProjectiveCurve) -> f64 {
        let mut integrand = |z: Complex64| {
            let norm2: f64 = f.values(z)?.iter().map(|v| v.norm_sqr()).sum();
            Ok(0.5 * norm2.ln())
        };
        circle_average(&mut integrand, 1.0, 1e-10).expect("base circle average")
    }

    #[test]
    fn constant_field_lift_is_a_basis_coefficient() {
        let f = chart_curve(&["z", "exp(z)"]);
        let phi = lifted(&[&["0", "1"]], PoleSection::one(2));
        let el = phi.eval(&f, c(0.7, -0.2), 2).unwrap();
        let e2 = MultiIndex::new(vec![2], 2).unwrap();
        let e1 = MultiIndex::new(vec![1], 2).unwrap();
        let coeff = el.coeff(&e2);
        assert_relative_eq!(coeff.value().re, 1.0, epsilon = 1e-15);
        assert!(coeff.value().im.abs() < 1e-15);
        assert!(coeff.coeff(1).norm() < 1e-15);
        assert!(el.coeff(&e1).is_zero());
    }

    #[test]
    fn coordinate_field_lift_tracks_the_curve_component() {
        let f = chart_curve(&["z", "exp(z)"]);
        let phi = lifted(&[&["w1", "0"]], PoleSection::one(2));
        let el = phi.eval(&f, c(1.0, 0.0), 1).unwrap();
        let e1 = MultiIndex::new(vec![1], 2).unwrap();
        let coeff = el.coeff(&e1);
        assert_relative_eq!(coeff.value().re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(coeff.coeff(1).re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn repeated_wedge_factor_vanishes() {
        let f = chart_curve(&["z", "exp(z)"]);
        let phi = lifted(&[&["1", "0"], &["1", "0"]], PoleSection::one(2));
        let el = phi.eval(&f, c(0.4, 0.1), 1).unwrap();
        assert!(el.is_zero());
    }

    #[test]
    fn jacobian_scalar_matches_hand_determinants() {
        let f = chart_curve(&["z", "exp(z)"]);
        let d2 = lifted(&[&["0", "1"]], PoleSection::one(2));
        let d1 = lifted(&[&["1", "0"]], PoleSection::one(2));
        for z in sample_points() {
            // W = f1' phi_2 - f2' phi_1 in the plane chart.
            let w2 = jacobian_scalar(&f, &d2, z, 2).unwrap();
            assert_relative_eq!(w2.value().re, 1.0, epsilon = 1e-14);
            assert!(w2.coeff(1).norm() < 1e-14);
            let w1 = jacobian_scalar(&f, &d1, z, 2).unwrap();
            let expect = -z.exp();
            assert_relative_eq!(w1.value().re, expect.re, epsilon = 1e-12);
            assert_relative_eq!(w1.value().im, expect.im, epsilon = 1e-12);
            assert_relative_eq!(w1.coeff(1).re, expect.re, epsilon = 1e-12);
        }
        let g = chart_curve(&["z^2", "exp(z)"]);
        let w = jacobian_scalar(&g, &d2, c(0.9, -0.5), 1).unwrap();
        assert_relative_eq!(w.value().re, 1.8, epsilon = 1e-13);
        assert_relative_eq!(w.value().im, -1.0, epsilon = 1e-13);
        assert_relative_eq!(w.coeff(1).re, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn wedge_and_formula_routes_agree_on_jets() {
        let f2 = chart_curve(&["z^2", "exp(z)"]);
        let rational = lifted(&[&["w2 / w1", "w1"]], PoleSection::parse("w1", 2).unwrap());
        for z in [c(0.8, 0.0), c(-0.6, 0.9), c(1.7, -0.3)] {
            let a = jacobian_scalar(&f2, &rational, z, 3).unwrap();
            let b = wedge_scalar(&f2, &rational, z, 3).unwrap();
            for k in 0..=3 {
                let scale = a.coeff(k).norm().max(1.0);
                assert!(
                    (a.coeff(k) - b.coeff(k)).norm() < JET_TOLERANCE * scale,
                    "routes disagree at order {k}: {:?} vs {:?}",
                    a.coeff(k),
                    b.coeff(k)
                );
            }
        }

        let f3 = chart_curve(&["z", "z^2", "exp(z)"]);
        let pair = lifted(
            &[&["1", "0", "w3"], &["0", "1", "w1"]],
            PoleSection::one(3),
        );
        for z in [c(0.5, 0.4), c(-1.2, 0.3), c(0.0, -0.9)] {
            let a = jacobian_scalar(&f3, &pair, z, 2).unwrap();
            let b = wedge_scalar(&f3, &pair, z, 2).unwrap();
            // Hand expansion of the 3x3 determinant: W = -2 z^2.
            let expect = -2.0 * z * z;
            assert_relative_eq!(a.value().re, expect.re, epsilon = 1e-12);
            assert_relative_eq!(a.value().im, expect.im, epsilon = 1e-12);
            assert_relative_eq!(a.coeff(1).re, -4.0 * z.re, epsilon = 1e-12);
            for k in 0..=2 {
                assert!((a.coeff(k) - b.coeff(k)).norm() < JET_TOLERANCE);
            }
        }
    }

    #[test]
    fn scalar_is_linear_in_the_element() {
        let f = chart_curve(&["z^2", "exp(z)"]);
        let z = c(0.35, -0.6);
        let w = f.affine_jets(z, 3).unwrap();
        let tangent: Vec<Jet> = w.iter().map(Jet::differentiate).collect();
        let one = PoleSection::one(2);
        let el1 = lift_from_jets([&field(&["w2", "1"])].into_iter(), &one, &w, z).unwrap();
        let el2 = lift_from_jets([&field(&["1", "w1 + w2"])].into_iter(), &one, &w, z).unwrap();
        let (a, b) = (c(1.3, -0.7), c(-0.4, 2.1));
        let combo = el1
            .scale(&Jet::constant(a, 2))
            .add(&el2.scale(&Jet::constant(b, 2)))
            .unwrap();
        let lhs = jacobian_scalar_of_element(&tangent, &combo).unwrap();
        let s1 = jacobian_scalar_of_element(&tangent, &el1).unwrap();
        let s2 = jacobian_scalar_of_element(&tangent, &el2).unwrap();
        let rhs = Jet::constant(a, 2) * s1 + Jet::constant(b, 2) * s2;
        for k in 0..=2 {
            assert!((lhs.coeff(k) - rhs.coeff(k)).norm() < 1e-12 * (1.0 + rhs.coeff(k).norm()));
        }
    }

    #[test]
    fn tangent_directions_pair_to_zero() {
        // The exponential curve is an integral curve of X = (w1, 2 w2), so
        // the lift of X is everywhere tangent and the scalar vanishes.
        let f = chart_curve(&["exp(z)", "exp(2 * z)"]);
        let phi = lifted(&[&["w1", "2 * w2"]], PoleSection::one(2));
        for z in sample_points() {
            let w = jacobian_scalar(&f, &phi, z, 3).unwrap();
            let scale: f64 = f
                .affine_jets(z, 1)
                .unwrap()
                .iter()
                .map(|j| j.value().norm())
                .product();
            for k in 0..=3 {
                assert!(
                    w.coeff(k).norm() <= 1e-10 * scale.max(1.0),
                    "tangent scalar coefficient {k} = {:?}",
                    w.coeff(k)
                );
            }
        }
        assert!(effectivity_test(&f, &phi, &sample_points())
            .unwrap()
            .is_none());

        // A line parametrized linearly: the lift of d1 + 2 d2 is tangent.
        let line = chart_curve(&["z", "2 * z"]);
        let along = lifted(&[&["1", "2"]], PoleSection::one(2));
        assert!(effectivity_test(&line, &along, &sample_points())
            .unwrap()
            .is_none());
    }

    #[test]
    fn effectivity_witness_on_a_generic_pair() {
        let f = chart_curve(&["z", "exp(z)"]);
        let phi = lifted(&[&["0", "1"]], PoleSection::one(2));
        let samples = sample_points();
        let witness = effectivity_test(&f, &phi, &samples).unwrap().unwrap();
        assert_eq!(witness.at, samples[0]);
        assert_relative_eq!(witness.magnitude, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn multiindex_search_prefers_the_dominant_frame_minor() {
        let fields = [field(&["1", "0"]), field(&["0", "1"])];
        let t = PoleSection::one(2);

        // At z = 0 the chart minors tie at 1, but the unitary frame scales
        // the slow component up: (z, e^z) keeps the second field, the
        // swapped curve keeps the first.
        let f = chart_curve(&["z", "exp(z)"]);
        let (idx, mag) = find_effective_multiindex(&f, &fields, &t, Complex64::ZERO).unwrap();
        assert_eq!(idx.entries(), &[2]);
        assert!(mag > 0.5);

        let g = chart_curve(&["exp(z)", "z"]);
        let (idx, _) = find_effective_multiindex(&g, &fields, &t, Complex64::ZERO).unwrap();
        assert_eq!(idx.entries(), &[1]);

        // Ties resolve to the lexicographically smallest index: duplicate
        // fields pair with identical magnitudes.
        let dup = [field(&["0", "1"]), field(&["0", "1"])];
        let (idx, _) = find_effective_multiindex(&f, &dup, &t, Complex64::ZERO).unwrap();
        assert_eq!(idx.entries(), &[1]);

        // A stationary probe degenerates every candidate.
        let cusp = chart_curve(&["z^2", "z^3"]);
        match find_effective_multiindex(&cusp, &fields, &t, Complex64::ZERO) {
            Err(Error::DegenerateProbe { .. }) => {}
            other => panic!("expected a degenerate probe, got {other:?}"),
        }
    }

    #[test]
    fn g_ratio_closed_form_at_the_origin() {
        // f = (z, e^z) at z = 0: w = (0, 1), s = 1, frame P = diag(1/sqrt 2)
        // + rank-one correction; the hand computation gives g = 1/sqrt 6
        // and |phi| = 1/2 for the constant field d2.
        let f = chart_curve(&["z", "exp(z)"]);
        let phi = lifted(&[&["0", "1"]], PoleSection::one(2));
        let gr = g_ratio(&f, &phi, Complex64::ZERO).unwrap();
        assert_relative_eq!(gr.g, (1.0f64 / 6.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(gr.phi_norm, 0.5, epsilon = 1e-12);
        assert!(gr.g <= gr.phi_norm + SCHWARZ_SLACK);
    }

    #[test]
    fn schwarz_bound_holds_at_random_points() {
        use rand::Rng;
        let f1 = chart_curve(&["z", "exp(z)"]);
        let phi1 = lifted(&[&["0", "1"]], PoleSection::one(2));
        let f2 = chart_curve(&["z^2", "exp(z)"]);
        let phi2 = lifted(&[&["w2 / w1", "w1"]], PoleSection::parse("w1", 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut nontrivial = 0usize;
        for _ in 0..300 {
            let z = c(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
            for (f, phi) in [(&f1, &phi1), (&f2, &phi2)] {
                if z.norm() < 0.05 {
                    continue;
                }
                let gr = g_ratio(f, phi, z).unwrap();
                assert!(
                    gr.g <= gr.phi_norm + SCHWARZ_SLACK,
                    "bound violated at {z}: g = {}, |phi| = {}",
                    gr.g,
                    gr.phi_norm
                );
                if gr.g > 0.01 * gr.phi_norm {
                    nontrivial += 1;
                }
            }
        }
        assert!(nontrivial > 100, "the bound was only tested on trivial points");
        // The three-point example set from the plane pencil.
        for z in [Complex64::ZERO, c(1.0, 0.0), c(0.0, 1.0)] {
            let gr = g_ratio(&f1, &phi1, z).unwrap();
            assert!(gr.g <= gr.phi_norm + SCHWARZ_SLACK);
        }
    }

    #[test]
    fn xi_ties_the_chart_frame_and_density_routes_together() {
        // exp(log xi) = n! g^2 u with u = pi * (Fubini-Study density):
        // three independently coded paths through the same geometry.
        let f1 = chart_curve(&["z", "exp(z)"]);
        let phi1 = lifted(&[&["0", "1"]], PoleSection::one(2));
        let f2 = chart_curve(&["z^2", "exp(z)"]);
        let phi2 = lifted(&[&["w2 / w1", "w1"]], PoleSection::parse("w1", 2).unwrap());
        for (f, phi) in [(&f1, &phi1), (&f2, &phi2)] {
            for z in [c(0.9, 0.4), c(-1.3, 0.7), c(0.5, -1.1), c(2.0, 0.3)] {
                let xi = log_xi(f, phi, z).unwrap().exp();
                let gr = g_ratio(f, phi, z).unwrap();
                let u = PI * fs_pullback_density(f, z).unwrap();
                assert_relative_eq!(xi, 2.0 * gr.g * gr.g * u, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pole_clearing_is_certified_by_the_ratio_test() {
        let under = HolomorphicField::new(
            vec![field(&["w2 / w1^2", "1"])],
            PoleSection::parse("w1", 2).unwrap(),
        );
        match under {
            Err(Error::Degenerate(msg)) => assert!(msg.contains("clear")),
            other => panic!("expected a pole-clearing conviction, got {other:?}"),
        }
        HolomorphicField::new(
            vec![field(&["w2 / w1^2", "1"])],
            PoleSection::parse("w1^2", 2).unwrap(),
        )
        .expect("a quadratic section clears a double pole");
    }

    #[test]
    fn ramification_matches_closed_forms() {
        let grid = RGrid::from_radii(vec![1.5, 3.0, 6.0]).unwrap();
        let d2 = lifted(&[&["0", "1"]], PoleSection::one(2));

        let flat = ramification(&chart_curve(&["z", "exp(z)"]), &d2, &grid).unwrap();
        assert!(flat.zeros.is_empty());
        assert!(flat.counting.max_abs() < 1e-12);

        let simple = ramification(&chart_curve(&["z^2", "exp(z)"]), &d2, &grid).unwrap();
        assert_eq!(simple.zeros.len(), 1);
        for (r, v) in simple.counting.rows() {
            assert_relative_eq!(v, r.ln(), epsilon = 1e-9);
        }

        let shifted = ramification(&chart_curve(&["(z - 2)^2", "exp(z)"]), &d2, &grid).unwrap();
        let expect = |r: f64| if r > 2.0 { (r / 2.0).ln() } else { 0.0 };
        for (r, v) in shifted.counting.rows() {
            assert_relative_eq!(v, expect(r), epsilon = 1e-9);
        }

        let line = chart_curve(&["z", "2 * z"]);
        let along = lifted(&[&["1", "2"]], PoleSection::one(2));
        assert!(matches!(
            ramification(&line, &along, &grid),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn dual_route_zero_lists_agree_for_a_rational_lift() {
        // W = 2 z^5 - e^{2z} for this pair; both scalar routes must report
        // the same zero list through the full contour machinery.
        let f = chart_curve(&["z^2", "exp(z)"]);
        let phi = lifted(&[&["w2 / w1", "w1"]], PoleSection::parse("w1", 2).unwrap());
        let formula = JetFn(|z, order| jacobian_scalar(&f, &phi, z, order));
        let wedge = JetFn(|z, order| wedge_scalar(&f, &phi, z, order));
        let za = count_zeros(&formula, 2.0).unwrap();
        let zb = count_zeros(&wedge, 2.0).unwrap();
        assert_eq!(za.len(), zb.len());
        let mut a: Vec<_> = za.iter().collect();
        let mut b: Vec<_> = zb.iter().collect();
        let key = |z: &crate::zeros::Zero| (z.location.re, z.location.im);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.multiplicity, y.multiplicity);
            assert!((x.location - y.location).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_residual_is_flat_and_matches_the_hand_constant() {
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let opts = QuadOpts::default();
        let d2 = lifted(&[&["0", "1"]], PoleSection::one(2));

        // For (z, e^z) with the constant field: W = 1, so the residual is
        // exactly (1/2) ln 2 - 3 c_1 with c_1 the base circle constant.
        let f = chart_curve(&["z", "exp(z)"]);
        let tables = smt_identity_residual(&f, &d2, &grid, &opts).unwrap();
        assert!(tables.residual.spread() < FLATNESS_TOLERANCE);
        let predicted = 0.5 * 2.0f64.ln() - 3.0 * base_circle_constant(&f);
        for (_, v) in tables.residual.rows() {
            assert_relative_eq!(v, predicted, epsilon = ORACLE_TOLERANCE);
        }
        assert!(tables.zeros.is_empty());

        // For (z^2, e^z): W = 2z adds log r to both sides, leaving
        // (3/2) ln 2 - 3 c_1.
        let g = chart_curve(&["z^2", "exp(z)"]);
        let tables = smt_identity_residual(&g, &d2, &grid, &opts).unwrap();
        assert!(tables.residual.spread() < FLATNESS_TOLERANCE);
        let predicted = 1.5 * 2.0f64.ln() - 3.0 * base_circle_constant(&g);
        for (_, v) in tables.residual.rows() {
            assert_relative_eq!(v, predicted, epsilon = ORACLE_TOLERANCE);
        }
        assert_eq!(tables.zeros.len(), 1);
        for ((_, nr), (r, _)) in tables.ramification.rows().zip(tables.residual.rows()) {
            assert_relative_eq!(nr, r.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn inequality_report_is_bounded_off_the_exceptional_band() {
        let grid = RGrid::geometric(2.0, 2, 8).unwrap();
        let opts = QuadOpts::default();
        let f = chart_curve(&["z", "exp(z)"]);
        let phi = lifted(&[&["0", "1"]], PoleSection::one(2));
        let report = smt_inequality_report(&f, &phi, &grid, &opts).unwrap();
        assert!(report.bound.is_finite());
        assert!(report.exceptional_log_measure <= 0.05 * report.grid_log_measure);
        assert_eq!(report.normalized.values().len(), grid.len());
        for (_, v) in report.normalized_plus.rows() {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn first_integral_examples() {
        let parabola = chart_curve(&["z", "z^2"]);
        let phi = Expr::parse("w2 - w1^2").unwrap();
        let samples = [Complex64::ZERO, c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)];
        let dev = first_integral_check(&parabola, &phi, &samples).unwrap();
        assert!(dev <= 1e-15, "deviation {dev}");

        let expcurve = chart_curve(&["exp(z)", "exp(2 * z)"]);
        let ratio = Expr::parse("w2 / w1^2").unwrap();
        let dev = first_integral_check(&expcurve, &ratio, &samples).unwrap();
        assert!(dev <= 1e-12, "deviation {dev}");

        let transcendental = chart_curve(&["z", "exp(z)"]);
        let dev = first_integral_check(&transcendental, &phi, &samples[..3]).unwrap();
        assert!(dev > 1.0, "deviation {dev}");
    }

    #[test]
    fn constructors_reject_malformed_inputs() {
        assert!(MeromorphicVectorField::parse(&["w3", "1"]).is_err());
        assert!(MeromorphicVectorField::parse(&["exp(w1)", "0"]).is_err());
        assert!(MeromorphicVectorField::parse(&["0", "0"]).is_err());
        assert!(MeromorphicVectorField::parse(&["z", "1"]).is_err());
        assert!(HolomorphicField::new(
            vec![field(&["0", "1"])],
            PoleSection::one(3)
        )
        .is_err());
        assert!(HolomorphicField::new(
            vec![
                field(&["1", "0"]),
                field(&["0", "1"]),
                field(&["1", "1"])
            ],
            PoleSection::one(2)
        )
        .is_err());
        // Sections must be homogeneous and nonzero.
        assert!(PoleSection::parse("w0 + w1^2", 2).is_err());
        assert!(PoleSection::parse("0", 2).is_err());
    }

    #[test]
    fn g_ratio_reports_stationary_points() {
        let cusp = chart_curve(&["z^2", "z^3"]);
        let phi = lifted(&[&["0", "1"]], PoleSection::one(2));
        match g_ratio(&cusp, &phi, Complex64::ZERO) {
            Err(Error::StationaryPoint { .. }) => {}
            other => panic!("expected a stationary point, got {other:?}"),
        }
    }
}
