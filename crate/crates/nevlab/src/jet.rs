//! Truncated power-series jets.
//!
//! A [`Jet`] stores the Taylor coefficients `c_0 .. c_K` of an analytic
//! function at a base point; arithmetic propagates them exactly (Cauchy
//! convolution for products, recursive solves for quotients, `exp` and `log`).
//! The j-th derivative at the base point is `j! * c_j`.
//!
//! Two compact encodings keep the type closed under ring operations:
//! an empty coefficient vector is the canonical zero (additive identity,
//! absorbing under multiplication), and a length-1 jet behaves as a constant
//! that broadcasts against jets of any order. Jets of different orders
//! otherwise truncate to the shorter one.

use num_complex::Complex64;
use num_traits::{One, Zero};

/// Coefficient magnitudes below this are treated as an exact hit on a
/// singularity when they appear where an inverse or logarithm is needed.
pub const SINGULARITY_TOLERANCE: f64 = 1e-300;

/// Raised by the fallible jet operations; the expression evaluator attaches
/// the offending subexpression before surfacing it as a crate error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetSingular {
    DivisionByZero,
    LogOfZero,
}

/// Truncated Taylor expansion with complex coefficients, low order first.
#[derive(Debug, Clone)]
pub struct Jet {
    coeffs: Vec<Complex64>,
}

impl Jet {
    /// Jet of the constant `c`, carried to `order` explicitly.
    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; order + 1];
        coeffs[0] = c;
        Jet { coeffs }
    }

    /// Jet of the identity function `z` expanded at `z0`.
    pub fn variable(z0: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; order + 1];
        coeffs[0] = z0;
        if order >= 1 {
            coeffs[1] = Complex64::ONE;
        }
        Jet { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Jet { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Highest tracked order; the canonical zero reports order 0.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Value of the underlying function at the base point (`c_0`).
    pub fn value(&self) -> Complex64 {
        self.coeffs.first().copied().unwrap_or(Complex64::ZERO)
    }

    /// Taylor coefficient `c_j`, zero when beyond the tracked order of a
    /// constant-like jet.
    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or(Complex64::ZERO)
    }

    /// `j`-th derivative at the base point, `j! * c_j`.
    ///
    /// Panics in debug builds when `j` exceeds the tracked order of a
    /// non-constant jet; callers are expected to request enough order.
    pub fn derivative_value(&self, j: usize) -> Complex64 {
        debug_assert!(
            j < self.coeffs.len() || self.coeffs.len() <= 1,
            "derivative order {j} beyond tracked order {}",
            self.order()
        );
        let mut fact = 1.0;
        for k in 2..=j {
            fact *= k as f64;
        }
        self.coeff(j) * fact
    }

    /// Jet of the derivative function: drops one order.
    ///
    /// The canonical zero and constants differentiate to zero; for a genuine
    /// order-0 jet the derivative is unknown, which is a caller bug.
    pub fn differentiate(&self) -> Jet {
        if self.coeffs.len() <= 1 {
            return Jet { coeffs: Vec::new() };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c * j as f64)
            .collect();
        Jet { coeffs }
    }

    fn is_constant_like(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Working length for a binary operation under the broadcast rules.
    fn combine_len(&self, other: &Jet) -> usize {
        match (self.coeffs.len(), other.coeffs.len()) {
            (0, n) | (n, 0) => n,
            (1, n) | (n, 1) => n,
            (a, b) => a.min(b),
        }
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Jet) -> Jet {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Jet { coeffs: Vec::new() };
        }
        let len = self.combine_len(other);
        let mut coeffs = vec![Complex64::ZERO; len];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for i in 0..=k {
                acc += self.coeff(i) * other.coeff(k - i);
            }
            *c = acc;
        }
        Jet { coeffs }
    }

    /// Series quotient `self / other`; fails when the divisor's value is an
    /// exact zero (modulus below [`SINGULARITY_TOLERANCE`]).
    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetSingular> {
        if other.value().norm() < SINGULARITY_TOLERANCE {
            return Err(JetSingular::DivisionByZero);
        }
        if self.coeffs.is_empty() {
            return Ok(Jet { coeffs: Vec::new() });
        }
        let len = self.combine_len(other);
        let b0 = other.value();
        let mut coeffs = vec![Complex64::ZERO; len];
        for k in 0..len {
            let mut acc = self.coeff(k);
            for j in 0..k {
                acc -= coeffs[j] * other.coeff(k - j);
            }
            coeffs[k] = acc / b0;
        }
        Ok(Jet { coeffs })
    }

    /// Integer power. Negative exponents go through [`Jet::try_div`] and can
    /// fail on a zero base value; `a^0` is the constant one at `a`'s order.
    pub fn powi(&self, exp: i32) -> Result<Jet, JetSingular> {
        if exp == 0 {
            let order = self.order();
            return Ok(Jet::constant(Complex64::ONE, order));
        }
        let mut base = self.clone();
        let mut e = exp.unsigned_abs();
        let mut acc: Option<Jet> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        let pos = acc.expect("nonzero exponent");
        if exp > 0 {
            Ok(pos)
        } else {
            let one = Jet::constant(Complex64::ONE, pos.order());
            one.try_div(&pos)
        }
    }

    /// Series exponential: `e_0 = exp(c_0)`, then
    /// `k * e_k = sum_{j=1..=k} j * c_j * e_{k-j}`.
    pub fn exp(&self) -> Jet {
        if self.coeffs.is_empty() {
            // exp(0) as an order-0 constant.
            return Jet::from_coeffs(vec![Complex64::ONE]);
        }
        let len = self.coeffs.len();
        let mut out = vec![Complex64::ZERO; len];
        out[0] = self.value().exp();
        for k in 1..len {
            let mut acc = Complex64::ZERO;
            for j in 1..=k {
                acc += self.coeff(j) * j as f64 * out[k - j];
            }
            out[k] = acc / k as f64;
        }
        Jet { coeffs: out }
    }

    /// Series logarithm (principal branch at the base value):
    /// `l_k = (c_k - (1/k) * sum_{j=1..k} j * l_j * c_{k-j}) / c_0`.
    pub fn ln(&self) -> Result<Jet, JetSingular> {
        let a0 = self.value();
        if a0.norm() < SINGULARITY_TOLERANCE {
            return Err(JetSingular::LogOfZero);
        }
        let len = self.coeffs.len().max(1);
        let mut out = vec![Complex64::ZERO; len];
        out[0] = a0.ln();
        for k in 1..len {
            let mut acc = self.coeff(k);
            for j in 1..k {
                acc -= out[j] * j as f64 * self.coeff(k - j) / k as f64;
            }
            out[k] = acc / a0;
        }
        Ok(Jet { coeffs: out })
    }

    /// Complex conjugate jet of the conjugate-reparametrized function; only
    /// meaningful value-wise, used for Hermitian pairings of order-1 data.
    pub fn conj_value(&self) -> Complex64 {
        self.value().conj()
    }

    fn trimmed(&self) -> &[Complex64] {
        let mut end = self.coeffs.len();
        while end > 0 && self.coeffs[end - 1] == Complex64::ZERO {
            end -= 1;
        }
        &self.coeffs[..end]
    }
}

impl PartialEq for Jet {
    /// Equality after trimming trailing zero coefficients, so the canonical
    /// zero, `constant(0, k)`, and `[0, 0]` all compare equal.
    fn eq(&self, other: &Self) -> bool {
        self.trimmed() == other.trimmed()
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        if self.coeffs.is_empty() {
            return rhs;
        }
        if rhs.coeffs.is_empty() {
            return self;
        }
        if self.is_constant_like() {
            let mut out = rhs;
            out.coeffs[0] += self.value();
            return out;
        }
        if rhs.is_constant_like() {
            let mut out = self;
            out.coeffs[0] += rhs.value();
            return out;
        }
        let len = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect();
        Jet { coeffs }
    }
}

impl std::ops::Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl std::ops::Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        Jet::mul(&self, &rhs)
    }
}

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in &mut self.coeffs {
            *c = -*c;
        }
        self
    }
}

impl Zero for Jet {
    fn zero() -> Self {
        Jet { coeffs: Vec::new() }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::ZERO)
    }
}

impl One for Jet {
    fn one() -> Self {
        Jet {
            coeffs: vec![Complex64::ONE],
        }
    }
}
