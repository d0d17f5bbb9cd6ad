//! Projective curves and divisors.
//!
//! A curve into projective n-space is carried by n+1 component expressions
//! in `z` — a reduced representation: the components must never vanish
//! simultaneously, which is checked at every evaluation rather than
//! symbolically. A divisor is a homogeneous polynomial in `w0..wn`; its
//! degree and coefficient norm are extracted once at construction by exact
//! monomial expansion, so downstream code can rely on them.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Below this squared norm the components count as simultaneously vanishing
/// and the representation is rejected as non-reduced.
pub const REDUCED_FLOOR: f64 = 1e-280;

/// Affine-chart denominator threshold: |F0| below this means the point left
/// the chart, and chart-dependent quantities refuse to evaluate there.
pub const CHART_TOLERANCE: f64 = 1e-12;

/// A holomorphic curve into projective n-space, given by n+1 homogeneous
/// component expressions in the variable `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveCurve {
    components: Vec<Expr>,
}

impl ProjectiveCurve {
    pub fn new(components: Vec<Expr>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Degenerate(format!(
                "a projective curve needs at least 2 components, got {}",
                components.len()
            )));
        }
        for (j, c) in components.iter().enumerate() {
            for v in c.variables() {
                if v != "z" {
                    return Err(Error::Domain(format!(
                        "curve component {j} uses variable `{v}`; only `z` is allowed"
                    )));
                }
            }
        }
        Ok(ProjectiveCurve { components })
    }

    /// Parse each component from text.
    pub fn parse(sources: &[&str]) -> Result<Self> {
        let components = sources
            .iter()
            .map(|s| Expr::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    /// Build from affine chart components (f1, ..., fn) by prepending the
    /// constant 1, so the curve never leaves the chart.
    pub fn from_affine(affine: Vec<Expr>) -> Result<Self> {
        let mut components = vec![Expr::constant(Complex64::ONE)];
        components.extend(affine);
        Self::new(components)
    }

    /// Target dimension n (one less than the component count).
    pub fn n(&self) -> usize {
        self.components.len() - 1
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &Expr {
        &self.components[j]
    }

    /// All components reduce to constants (a constant curve).
    pub fn is_constant(&self) -> bool {
        self.components.iter().all(|c| c.as_constant().is_some())
    }

    /// Jets of all components at `z`, with the reducedness check: the
    /// components must not vanish simultaneously at any evaluated point.
    pub fn jets(&self, z: Complex64, order: usize) -> Result<Vec<Jet>> {
        let jets = self
            .components
            .iter()
            .map(|c| c.jet_at(z, order))
            .collect::<Result<Vec<_>>>()?;
        let norm2: f64 = jets.iter().map(|j| j.value().norm_sqr()).sum();
        if !(norm2 > REDUCED_FLOOR) {
            return Err(Error::Degenerate(format!(
                "non-reduced representation: all components vanish at z = {z}"
            )));
        }
        Ok(jets)
    }

    /// Component values at `z` (order-0 jets), reducedness checked.
    pub fn values(&self, z: Complex64) -> Result<Vec<Complex64>> {
        Ok(self.jets(z, 0)?.into_iter().map(|j| j.value()).collect())
    }

    /// Affine chart components f_j = F_j / F_0 as jets, for j = 1..=n.
    /// Errors when the point has left the chart (|F_0| below tolerance).
    pub fn affine_jets(&self, z: Complex64, order: usize) -> Result<Vec<Jet>> {
        let jets = self.jets(z, order)?;
        let f0 = &jets[0];
        if f0.value().norm() < CHART_TOLERANCE {
            return Err(Error::singular("chart denominator F0", z));
        }
        jets[1..]
            .iter()
            .map(|fj| {
                fj.try_div(f0)
                    .map_err(|_| Error::singular("chart denominator F0", z))
            })
            .collect()
    }

    /// Precompose every component with exp: the curve z -> f(e^z). The
    /// composition turns any nonconstant curve transcendental while
    /// preserving its image, which is how experiments drop growth-order
    /// hypotheses without changing the geometry.
    pub fn precompose_exp(&self) -> ProjectiveCurve {
        let sub = |name: &str| (name == "z").then(|| Expr::Exp(Box::new(Expr::var("z"))));
        ProjectiveCurve {
            components: self.components.iter().map(|c| c.substitute(&sub)).collect(),
        }
    }

    /// Evaluate the reducedness invariant on a batch of sample points.
    pub fn check_reduced_on(&self, samples: &[Complex64]) -> Result<()> {
        for &z in samples {
            self.jets(z, 0)?;
        }
        Ok(())
    }
}

/// A divisor on projective n-space: the zero set of a homogeneous
/// polynomial Q in w0..wn. Construction expands Q into monomials to verify
/// homogeneity and to read off the degree and the coefficient norm
/// c_Q = sum of |coefficients|, which normalizes the section metric
/// ‖s_D([x])‖ = |Q(x)| / (c_Q ‖x‖^d) to at most 1.
#[derive(Debug, Clone)]
pub struct Divisor {
    poly: Expr,
    n: usize,
    degree: usize,
    coeff_norm: f64,
}

impl Divisor {
    pub fn new(poly: Expr, n: usize) -> Result<Self> {
        let terms = expand_poly(&poly, n)?;
        if terms.is_empty() {
            return Err(Error::Domain(
                "divisor polynomial is identically zero".into(),
            ));
        }
        let mut degrees = terms.keys().map(|e| e.iter().sum::<u32>());
        let degree = degrees.next().expect("nonempty term map");
        if let Some(other) = degrees.find(|&d| d != degree) {
            return Err(Error::Domain(format!(
                "divisor polynomial is not homogeneous: degrees {degree} and {other} both appear"
            )));
        }
        let coeff_norm = terms.values().map(|c| c.norm()).sum();
        Ok(Divisor {
            poly,
            n,
            degree: degree as usize,
            coeff_norm,
        })
    }

    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Self::new(Expr::parse(src)?, n)
    }

    /// Ambient dimension n (variables w0..wn).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// c_Q = sum of |coefficients| of the expanded polynomial.
    pub fn coeff_norm(&self) -> f64 {
        self.coeff_norm
    }

    pub fn poly(&self) -> &Expr {
        &self.poly
    }

    /// The composite Q(F0(z), ..., Fn(z)) as an expression in `z`.
    pub fn compose(&self, f: &ProjectiveCurve) -> Result<Expr> {
        if f.n() != self.n {
            return Err(Error::Domain(format!(
                "divisor lives in P^{} but the curve maps into P^{}",
                self.n,
                f.n()
            )));
        }
        let sub = |name: &str| {
            var_index(name, self.n)
                .ok()
                .flatten()
                .map(|j| f.component(j).clone())
        };
        Ok(self.poly.substitute(&sub))
    }

    /// Evaluate Q at given values of (w0, ..., wn).
    pub fn eval_at_values(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.n + 1 {
            return Err(Error::Domain(format!(
                "divisor in P^{} needs {} coordinates, got {}",
                self.n,
                self.n + 1,
                w.len()
            )));
        }
        let bind = |name: &str| {
            var_index(name, self.n)
                .ok()
                .flatten()
                .map(|j| Jet::from_coeffs(vec![w[j]]))
        };
        Ok(self.poly.eval_jet(&bind, Complex64::ZERO)?.value())
    }

    /// Product divisor Q1 * Q2 (divisor addition); degree and coefficient
    /// norm are recomputed from the expanded product, not multiplied.
    pub fn product(&self, other: &Divisor) -> Result<Divisor> {
        if self.n != other.n {
            return Err(Error::Domain(
                "cannot multiply divisors over different ambient spaces".into(),
            ));
        }
        Divisor::new(
            Expr::Mul(Box::new(self.poly.clone()), Box::new(other.poly.clone())),
            self.n,
        )
    }
}

/// Parse `w<k>`; returns Ok(None) for indices beyond n so unknown names can
/// be reported uniformly by the caller.
fn var_index(name: &str, n: usize) -> Result<Option<usize>> {
    let Some(digits) = name.strip_prefix('w') else {
        return Err(Error::Domain(format!(
            "divisor polynomial uses variable `{name}`; only w0..w{n} are allowed"
        )));
    };
    let j: usize = digits.parse().map_err(|_| {
        Error::Domain(format!(
            "divisor polynomial uses variable `{name}`; only w0..w{n} are allowed"
        ))
    })?;
    Ok((j <= n).then_some(j))
}

type Terms = BTreeMap<Vec<u32>, Complex64>;

/// Exact monomial expansion of a polynomial expression in w0..wn. Division
/// is allowed only by constants; exp/log/negative powers are rejected.
fn expand_poly(e: &Expr, n: usize) -> Result<Terms> {
    const TERM_CAP: usize = 20_000;
    let out = match e {
        Expr::Var(name) => {
            let j = var_index(name, n)?.ok_or_else(|| {
                Error::Domain(format!(
                    "divisor polynomial variable `{name}` exceeds the ambient index {n}"
                ))
            })?;
            let mut exps = vec![0u32; n + 1];
            exps[j] = 1;
            BTreeMap::from([(exps, Complex64::ONE)])
        }
        Expr::Const(c) => {
            if *c == Complex64::ZERO {
                BTreeMap::new()
            } else {
                BTreeMap::from([(vec![0u32; n + 1], *c)])
            }
        }
        Expr::Add(a, b) => merge(expand_poly(a, n)?, expand_poly(b, n)?, Complex64::ONE),
        Expr::Sub(a, b) => merge(expand_poly(a, n)?, expand_poly(b, n)?, -Complex64::ONE),
        Expr::Mul(a, b) => multiply(&expand_poly(a, n)?, &expand_poly(b, n)?)?,
        Expr::Div(a, b) => {
            let num = expand_poly(a, n)?;
            let den = b.as_constant().ok_or_else(|| {
                Error::Domain("divisor polynomial may only divide by constants".into())
            })?;
            if den.norm() < crate::jet::SINGULARITY_TOLERANCE {
                return Err(Error::Domain(
                    "divisor polynomial divides by zero".into(),
                ));
            }
            num.into_iter().map(|(e, c)| (e, c / den)).collect()
        }
        Expr::Pow(a, k) => {
            if *k < 0 {
                return Err(Error::Domain(
                    "divisor polynomial cannot contain negative powers".into(),
                ));
            }
            let base = expand_poly(a, n)?;
            let mut acc: Terms = BTreeMap::from([(vec![0u32; n + 1], Complex64::ONE)]);
            for _ in 0..*k {
                acc = multiply(&acc, &base)?;
            }
            acc
        }
        Expr::Neg(a) => expand_poly(a, n)?
            .into_iter()
            .map(|(e, c)| (e, -c))
            .collect(),
        Expr::Exp(_) | Expr::Log(_) => {
            return Err(Error::Domain(
                "divisor polynomial cannot contain exp or log".into(),
            ));
        }
    };
    if out.len() > TERM_CAP {
        return Err(Error::Domain(
            "divisor polynomial expansion exceeds the term cap".into(),
        ));
    }
    Ok(prune(out))
}

fn merge(mut a: Terms, b: Terms, sign: Complex64) -> Terms {
    for (e, c) in b {
        *a.entry(e).or_insert(Complex64::ZERO) += sign * c;
    }
    prune(a)
}

fn multiply(a: &Terms, b: &Terms) -> Result<Terms> {
    let mut out: Terms = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(Complex64::ZERO) += ca * cb;
        }
    }
    Ok(prune(out))
}

fn prune(terms: Terms) -> Terms {
    terms
        .into_iter()
        .filter(|(_, c)| *c != Complex64::ZERO)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curve(sources: &[&str]) -> ProjectiveCurve {
        ProjectiveCurve::parse(sources).unwrap()
    }

    #[test]
    fn curve_jets_carry_values_and_derivatives() {
        let f = curve(&["1", "z", "exp(z)"]);
        assert_eq!(f.n(), 2);
        let jets = f.jets(Complex64::ZERO, 2).unwrap();
        assert_eq!(jets[0].value(), Complex64::ONE);
        assert_eq!(jets[1].derivative_value(1), Complex64::ONE);
        assert_relative_eq!(jets[2].derivative_value(2).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn non_reduced_representation_is_rejected_at_the_common_zero() {
        let f = curve(&["z", "z^2"]);
        assert!(matches!(
            f.jets(Complex64::ZERO, 1),
            Err(Error::Degenerate(_))
        ));
        // Away from the common zero the same curve evaluates fine.
        assert!(f.jets(Complex64::ONE, 1).is_ok());
    }

    #[test]
    fn curve_components_must_use_only_z() {
        assert!(matches!(
            ProjectiveCurve::parse(&["1", "w1"]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn affine_chart_divides_by_the_first_component() {
        let f = curve(&["2", "2*z", "2*exp(z)"]);
        let jets = f.affine_jets(Complex64::ONE, 1).unwrap();
        assert_relative_eq!(jets[0].value().re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(jets[1].value().re, 1.0f64.exp(), epsilon = 1e-12);

        let g = curve(&["z", "1"]);
        assert!(matches!(
            g.affine_jets(Complex64::ZERO, 1),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn from_affine_prepends_one() {
        let f = ProjectiveCurve::from_affine(vec![
            Expr::parse("z").unwrap(),
            Expr::parse("exp(z)").unwrap(),
        ])
        .unwrap();
        assert_eq!(f.n(), 2);
        assert_eq!(f.component(0).as_constant(), Some(Complex64::ONE));
    }

    #[test]
    fn precompose_exp_substitutes_the_variable() {
        let f = curve(&["1", "z"]).precompose_exp();
        let v = f.values(Complex64::ONE).unwrap();
        assert_relative_eq!(v[1].re, 1.0f64.exp(), epsilon = 1e-15);
        assert!(!f.is_constant());
        assert!(curve(&["2", "3"]).is_constant());
    }

    #[test]
    fn divisor_reads_degree_and_coefficient_norm() {
        let d = Divisor::parse("2*w0*w1 - 3*w2^2", 2).unwrap();
        assert_eq!(d.degree(), 2);
        assert_relative_eq!(d.coeff_norm(), 5.0, epsilon = 1e-15);

        let line = Divisor::parse("w1", 2).unwrap();
        assert_eq!(line.degree(), 1);
        assert_relative_eq!(line.coeff_norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn divisor_rejects_inhomogeneous_zero_and_transcendental_input() {
        assert!(matches!(
            Divisor::parse("w0 + w1^2", 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Divisor::parse("w1 - w1", 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Divisor::parse("exp(w1)", 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(Divisor::parse("w5", 1), Err(Error::Domain(_))));
    }

    #[test]
    fn compose_substitutes_curve_components() {
        let f = curve(&["1", "z", "exp(z)"]);
        let d = Divisor::parse("w2 - w1", 2).unwrap();
        let g = d.compose(&f).unwrap();
        let v = g.value_at(Complex64::ZERO).unwrap();
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-15); // e^0 - 0

        let wrong = Divisor::parse("w1", 1).unwrap();
        assert!(wrong.compose(&f).is_err());
    }

    #[test]
    fn product_divisor_recomputes_invariants() {
        let a = Divisor::parse("w1", 1).unwrap();
        let b = Divisor::parse("w1 - w0", 1).unwrap();
        let p = a.product(&b).unwrap();
        assert_eq!(p.degree(), 2);
        // w1^2 - w0*w1: coefficient norm 2, not the product of norms.
        assert_relative_eq!(p.coeff_norm(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn eval_at_values_matches_direct_substitution() {
        let d = Divisor::parse("w0^2 + 2*w1*w2", 2).unwrap();
        let w = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(2.0, 0.0),
        ];
        let v = d.eval_at_values(&w).unwrap();
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(v.im, 4.0, epsilon = 1e-15);
    }
}
