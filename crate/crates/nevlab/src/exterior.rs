//! Sparse exterior algebra over an abstract scalar ring.
//!
//! Multi-indices are strictly increasing sequences in `{1, ..., n}`;
//! elements of exterior powers are sparse maps from multi-indices to
//! scalars. The scalar type only needs ring structure, so the same kernel
//! runs on complex floats, jets, and exact rationals (the latter pin down
//! the sign conventions in tests with no rounding to hide behind).
//!
//! Pairing convention: basis covectors pair against basis polyvectors by
//! the Kronecker delta on increasing indices, `(e*_lam)(e_mu) = delta`.
//! The interior product of a top covariant element `alpha` with a degree-q
//! polyvector `xi = sum_lam xi_lam e_lam` is declared by the coefficient
//! formula
//!
//! ```text
//! alpha . xi = sum_lam sign(comp(lam), lam) * xi_lam * alpha_top * e*_comp(lam)
//! ```
//!
//! where `comp(lam)` is the increasing complement and `sign(mu, lam)` the
//! parity of the concatenation `(mu, lam)` as a permutation of `1..=n`.
//! Under this convention the pairing identity reads
//! `theta(alpha . xi) = (theta ^ xi)(alpha)` for every degree-(n-q)
//! polyvector `theta`, which the test suite checks exactly.

use crate::error::{Error, Result};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Scalar ring for exterior coefficients.
pub trait Scalar:
    Clone
    + PartialEq
    + Zero
    + One
    + std::ops::Neg<Output = Self>
    + std::ops::Sub<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + std::ops::Neg<Output = T>
        + std::ops::Sub<Output = T>
{
}

/// Strictly increasing multi-index with entries in `1..=ambient`.
/// The empty index (degree 0) is valid; it arises as the complement of the
/// full index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    entries: Vec<usize>,
    ambient: usize,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>, ambient: usize) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::Domain("ambient dimension must be positive".into()));
        }
        for pair in entries.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Domain(format!(
                    "multi-index entries must strictly increase, got {entries:?}"
                )));
            }
        }
        if let (Some(first), Some(last)) = (entries.first(), entries.last()) {
            if *first < 1 || *last > ambient {
                return Err(Error::Domain(format!(
                    "multi-index entries {entries:?} out of range 1..={ambient}"
                )));
            }
        }
        Ok(MultiIndex { entries, ambient })
    }

    /// The full index `(1, 2, ..., n)`.
    pub fn full(ambient: usize) -> Self {
        MultiIndex {
            entries: (1..=ambient).collect(),
            ambient,
        }
    }

    pub fn empty(ambient: usize) -> Self {
        MultiIndex {
            entries: Vec::new(),
            ambient,
        }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn degree(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, value: usize) -> bool {
        self.entries.binary_search(&value).is_ok()
    }

    /// Ordered complement within `1..=ambient`.
    pub fn complement(&self) -> MultiIndex {
        let mut out = Vec::with_capacity(self.ambient - self.entries.len());
        let mut iter = self.entries.iter().copied().peekable();
        for v in 1..=self.ambient {
            if iter.peek() == Some(&v) {
                iter.next();
            } else {
                out.push(v);
            }
        }
        MultiIndex {
            entries: out,
            ambient: self.ambient,
        }
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All degree-`k` multi-indices in `1..=n`, lexicographic. Requires
/// `1 <= k <= n`.
pub fn enumerate_multiindices(n: usize, k: usize) -> Result<Vec<MultiIndex>> {
    if k < 1 || k > n {
        return Err(Error::Domain(format!(
            "degree {k} out of range 1..={n} for multi-index enumeration"
        )));
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (1..=k).collect();
    loop {
        out.push(MultiIndex {
            entries: current.clone(),
            ambient: n,
        });
        // Advance to the next combination in lexicographic order.
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if current[pos] < n - (k - 1 - pos) {
                current[pos] += 1;
                for j in pos + 1..k {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return Ok(out);
            }
        }
        if k == 0 {
            return Ok(out);
        }
    }
}

/// Parity of the concatenation `(mu, lambda)` read as a permutation of
/// `1..=n`: +1 for even, -1 for odd. Errors when the concatenation is not
/// a permutation. Computed by cycle decomposition; the tests cross-check
/// against a brute-force inversion count.
pub fn perm_sign(mu: &MultiIndex, lambda: &MultiIndex) -> Result<i32> {
    if mu.ambient != lambda.ambient {
        return Err(Error::Domain(format!(
            "ambient mismatch {} vs {}",
            mu.ambient, lambda.ambient
        )));
    }
    let n = mu.ambient;
    if mu.degree() + lambda.degree() != n {
        return Err(Error::Domain(format!(
            "concatenation of {mu} and {lambda} is not a permutation of 1..={n}"
        )));
    }
    let mut perm = Vec::with_capacity(n);
    perm.extend_from_slice(&mu.entries);
    perm.extend_from_slice(&lambda.entries);
    let mut seen = vec![false; n + 1];
    for &v in &perm {
        if v < 1 || v > n || seen[v] {
            return Err(Error::Domain(format!(
                "concatenation of {mu} and {lambda} is not a permutation of 1..={n}"
            )));
        }
        seen[v] = true;
    }
    // Parity = (-1)^(n - number of cycles).
    let mut visited = vec![false; n];
    let mut cycles = 0;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut at = start;
        while !visited[at] {
            visited[at] = true;
            at = perm[at] - 1;
        }
    }
    Ok(if (n - cycles) % 2 == 0 { 1 } else { -1 })
}

/// Sparse element of the `degree`-th exterior power over `ambient`
/// dimensions. Absent coefficients are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorElement<S: Scalar> {
    ambient: usize,
    degree: usize,
    coeffs: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> ExteriorElement<S> {
    pub fn zero(ambient: usize, degree: usize) -> Self {
        ExteriorElement {
            ambient,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// The basis element `e_lam` with coefficient one.
    pub fn basis(index: MultiIndex) -> Self {
        let mut coeffs = BTreeMap::new();
        let (ambient, degree) = (index.ambient(), index.degree());
        coeffs.insert(index, S::one());
        ExteriorElement {
            ambient,
            degree,
            coeffs,
        }
    }

    pub fn from_coeffs(
        ambient: usize,
        degree: usize,
        entries: impl IntoIterator<Item = (MultiIndex, S)>,
    ) -> Result<Self> {
        let mut el = ExteriorElement::zero(ambient, degree);
        for (idx, s) in entries {
            if idx.ambient() != ambient || idx.degree() != degree {
                return Err(Error::Domain(format!(
                    "index {idx} does not live in degree {degree} over ambient {ambient}"
                )));
            }
            el.accumulate(idx, s);
        }
        Ok(el)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, index: &MultiIndex) -> S {
        self.coeffs.get(index).cloned().unwrap_or_else(S::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|s| s.is_zero())
    }

    fn accumulate(&mut self, index: MultiIndex, value: S) {
        if value.is_zero() {
            return;
        }
        match self.coeffs.remove(&index) {
            None => {
                self.coeffs.insert(index, value);
            }
            Some(old) => {
                let sum = old + value;
                if !sum.is_zero() {
                    self.coeffs.insert(index, sum);
                }
            }
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = ExteriorElement::zero(self.ambient, self.degree);
        for (idx, v) in &self.coeffs {
            out.accumulate(idx.clone(), s.clone() * v.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient || self.degree != other.degree {
            return Err(Error::Domain(
                "cannot add exterior elements of different shape".into(),
            ));
        }
        let mut out = self.clone();
        for (idx, v) in &other.coeffs {
            out.accumulate(idx.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = ExteriorElement::zero(self.ambient, self.degree);
        for (idx, v) in &self.coeffs {
            out.accumulate(idx.clone(), -v.clone());
        }
        out
    }

    /// Wedge product. Bilinear, associative, graded anticommutative.
    /// When the degrees sum past the ambient dimension the result is the
    /// zero element of that (nominal) degree.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::Domain(format!(
                "ambient mismatch {} vs {} in wedge",
                self.ambient, other.ambient
            )));
        }
        let degree = self.degree + other.degree;
        let mut out = ExteriorElement::zero(self.ambient, degree);
        if degree > self.ambient {
            return Ok(out);
        }
        for (li, lv) in &self.coeffs {
            for (ri, rv) in &other.coeffs {
                if let Some((merged, sign)) = merge_indices(li, ri) {
                    let prod = lv.clone() * rv.clone();
                    let signed = if sign > 0 { prod } else { -prod };
                    out.accumulate(merged, signed);
                }
            }
        }
        Ok(out)
    }

    /// Coefficient on the full index of a top-degree element.
    pub fn top_coefficient(&self) -> Result<S> {
        if self.degree != self.ambient {
            return Err(Error::Domain(format!(
                "top coefficient requested from degree {} over ambient {}",
                self.degree, self.ambient
            )));
        }
        Ok(self.coeff(&MultiIndex::full(self.ambient)))
    }

    /// Delta pairing of two same-degree elements (covariant against
    /// contravariant): sum over matching increasing indices.
    pub fn pair(&self, other: &Self) -> Result<S> {
        if self.ambient != other.ambient || self.degree != other.degree {
            return Err(Error::Domain(
                "pairing requires matching ambient and degree".into(),
            ));
        }
        let mut acc = S::zero();
        for (idx, v) in &self.coeffs {
            if let Some(w) = other.coeffs.get(idx) {
                acc = acc + v.clone() * w.clone();
            }
        }
        Ok(acc)
    }
}

/// Merge two disjoint increasing index sets; returns the merged index and
/// the sign of the permutation sorting the concatenation, or `None` when
/// the sets intersect.
fn merge_indices(a: &MultiIndex, b: &MultiIndex) -> Option<(MultiIndex, i32)> {
    let mut merged = Vec::with_capacity(a.entries.len() + b.entries.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.entries.len() && j < b.entries.len() {
        if a.entries[i] == b.entries[j] {
            return None;
        }
        if a.entries[i] < b.entries[j] {
            merged.push(a.entries[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining entries of a.
            inversions += a.entries.len() - i;
            merged.push(b.entries[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&a.entries[i..]);
    merged.extend_from_slice(&b.entries[j..]);
    let sign = if inversions % 2 == 0 { 1 } else { -1 };
    Some((
        MultiIndex {
            entries: merged,
            ambient: a.ambient,
        },
        sign,
    ))
}

/// Interior product of a top-degree covariant element against a degree-q
/// polyvector, per the convention in the module docs. The result is
/// covariant of degree `n - q`.
pub fn interior_product<S: Scalar>(
    alpha: &ExteriorElement<S>,
    xi: &ExteriorElement<S>,
) -> Result<ExteriorElement<S>> {
    if alpha.ambient() != xi.ambient() {
        return Err(Error::Domain(format!(
            "ambient mismatch {} vs {} in interior product",
            alpha.ambient(),
            xi.ambient()
        )));
    }
    let n = alpha.ambient();
    if alpha.degree() != n {
        return Err(Error::Domain(format!(
            "interior product needs a top-degree covariant element, got degree {}",
            alpha.degree()
        )));
    }
    if xi.degree() > n {
        return Err(Error::Domain(format!(
            "polyvector degree {} exceeds ambient {n}",
            xi.degree()
        )));
    }
    let alpha_top = alpha.top_coefficient()?;
    let mut out = ExteriorElement::zero(n, n - xi.degree());
    for (lam, v) in xi.iter() {
        let comp = lam.complement();
        let sign = perm_sign(&comp, lam)?;
        let term = v.clone() * alpha_top.clone();
        out.accumulate(comp, if sign > 0 { term } else { -term });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(entries: &[usize], n: usize) -> MultiIndex {
        MultiIndex::new(entries.to_vec(), n).unwrap()
    }

    fn rat(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    // Brute-force oracles, deliberately different algorithms from the
    // production code.

    fn sign_by_inversions(mu: &MultiIndex, lambda: &MultiIndex) -> i32 {
        let mut seq: Vec<usize> = mu.entries().to_vec();
        seq.extend_from_slice(lambda.entries());
        let mut inv = 0;
        for i in 0..seq.len() {
            for j in i + 1..seq.len() {
                if seq[i] > seq[j] {
                    inv += 1;
                }
            }
        }
        if inv % 2 == 0 {
            1
        } else {
            -1
        }
    }

    fn complement_by_set_difference(idx: &MultiIndex) -> Vec<usize> {
        let held: std::collections::HashSet<usize> = idx.entries().iter().copied().collect();
        (1..=idx.ambient()).filter(|v| !held.contains(v)).collect()
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let got = enumerate_multiindices(3, 2).unwrap();
        let want = [vec![1, 2], vec![1, 3], vec![2, 3]];
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want.iter()) {
            assert_eq!(g.entries(), w.as_slice());
        }
        assert!(enumerate_multiindices(3, 0).is_err());
        assert!(enumerate_multiindices(3, 4).is_err());
    }

    #[test]
    fn enumeration_counts_match_binomials() {
        fn binom(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
        }
        for n in 1..=8 {
            for k in 1..=n {
                assert_eq!(enumerate_multiindices(n, k).unwrap().len(), binom(n, k));
            }
        }
    }

    #[test]
    fn complement_matches_set_difference_oracle() {
        for n in 1..=8usize {
            for k in 1..=n {
                for idx in enumerate_multiindices(n, k).unwrap() {
                    assert_eq!(idx.complement().entries(), complement_by_set_difference(&idx));
                }
            }
        }
    }

    #[test]
    fn perm_sign_matches_inversion_oracle() {
        for n in 1..=8usize {
            for k in 1..=n {
                for lam in enumerate_multiindices(n, k).unwrap() {
                    let comp = lam.complement();
                    assert_eq!(
                        perm_sign(&comp, &lam).unwrap(),
                        sign_by_inversions(&comp, &lam),
                        "n={n} lambda={lam}"
                    );
                    if k < n {
                        assert_eq!(
                            perm_sign(&lam, &comp).unwrap(),
                            sign_by_inversions(&lam, &comp)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn perm_sign_rejects_non_permutations() {
        let mu = mi(&[1, 2], 4);
        let lam = mi(&[2, 3], 4);
        assert!(perm_sign(&mu, &lam).is_err());
        let short = mi(&[1], 4);
        assert!(perm_sign(&mu, &short).is_err());
    }

    #[test]
    fn spec_sign_example() {
        // complement of (2,4) in n=4 is (1,3); concatenated (1,3,2,4) is odd.
        let lam = mi(&[2, 4], 4);
        let comp = lam.complement();
        assert_eq!(comp.entries(), &[1, 3]);
        assert_eq!(perm_sign(&comp, &lam).unwrap(), -1);
    }

    #[test]
    fn invalid_multiindices_are_rejected() {
        assert!(MultiIndex::new(vec![2, 2], 3).is_err());
        assert!(MultiIndex::new(vec![3, 1], 3).is_err());
        assert!(MultiIndex::new(vec![0, 1], 3).is_err());
        assert!(MultiIndex::new(vec![1, 4], 3).is_err());
    }

    #[test]
    fn wedge_basics() {
        let e1 = ExteriorElement::<BigRational>::basis(mi(&[1], 2));
        let e2 = ExteriorElement::<BigRational>::basis(mi(&[2], 2));
        let w12 = e1.wedge(&e2).unwrap();
        assert_eq!(w12.coeff(&mi(&[1, 2], 2)), rat(1, 1));
        let w21 = e2.wedge(&e1).unwrap();
        assert_eq!(w21.coeff(&mi(&[1, 2], 2)), rat(-1, 1));
        assert!(e1.wedge(&e1).unwrap().is_zero());
    }

    #[test]
    fn wedge_past_top_degree_is_zero() {
        let a = ExteriorElement::<BigRational>::basis(mi(&[1, 2], 3));
        let b = ExteriorElement::<BigRational>::basis(mi(&[2, 3], 3));
        let w = a.wedge(&b).unwrap();
        assert_eq!(w.degree(), 4);
        assert!(w.is_zero());
    }

    fn random_element(
        rng: &mut ChaCha8Rng,
        n: usize,
        degree: usize,
    ) -> ExteriorElement<BigRational> {
        let mut el = ExteriorElement::zero(n, degree);
        for idx in enumerate_multiindices(n, degree).unwrap() {
            if rng.gen_bool(0.7) {
                let num = rng.gen_range(-9i64..=9);
                let den = rng.gen_range(1i64..=9);
                el = el
                    .add(&ExteriorElement::from_coeffs(n, degree, [(idx, rat(num, den))]).unwrap())
                    .unwrap();
            }
        }
        el
    }

    #[test]
    fn wedge_is_bilinear_and_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2usize..=5);
            let p = rng.gen_range(1usize..=n.min(2));
            let q = rng.gen_range(1usize..=(n - p).max(1)).min(n - p).max(1);
            if p + q > n {
                continue;
            }
            let a = random_element(&mut rng, n, p);
            let b = random_element(&mut rng, n, q);
            let c = random_element(&mut rng, n, q);
            let s = rat(rng.gen_range(-5i64..=5), rng.gen_range(1i64..=5));

            // Bilinearity in the right slot.
            let lhs = a.wedge(&b.scale(&s).add(&c).unwrap()).unwrap();
            let rhs = a.wedge(&b).unwrap().scale(&s).add(&a.wedge(&c).unwrap()).unwrap();
            assert_eq!(lhs, rhs);

            // Graded anticommutativity.
            let ab = a.wedge(&b).unwrap();
            let ba = b.wedge(&a).unwrap();
            let expect = if (p * q) % 2 == 0 { ba.clone() } else { ba.neg() };
            assert_eq!(ab, expect);

            // Associativity with a third factor when it fits.
            if p + 2 * q <= n {
                let d = random_element(&mut rng, n, q);
                let left = a.wedge(&b).unwrap().wedge(&d).unwrap();
                let right = a.wedge(&b.wedge(&d).unwrap()).unwrap();
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn interior_product_spec_cases() {
        // alpha = e*_1 ^ e*_2 over n = 2, xi = e_2 -> + e*_1.
        let alpha = ExteriorElement::<BigRational>::basis(MultiIndex::full(2));
        let xi = ExteriorElement::basis(mi(&[2], 2));
        let got = interior_product(&alpha, &xi).unwrap();
        assert_eq!(got.coeff(&mi(&[1], 2)), rat(1, 1));
        assert_eq!(got.degree(), 1);

        // Full contraction returns the top coefficient on the empty index.
        let full = ExteriorElement::basis(MultiIndex::full(2));
        let got = interior_product(&alpha, &full).unwrap();
        assert_eq!(got.degree(), 0);
        assert_eq!(got.coeff(&MultiIndex::empty(2)), rat(1, 1));
    }

    #[test]
    fn pairing_identity_exhaustive_small() {
        // theta(alpha . xi) = (theta ^ xi)(alpha) for all basis choices.
        for n in 2..=5usize {
            for q in 1..=n {
                let alpha = ExteriorElement::<BigRational>::basis(MultiIndex::full(n));
                for lam in enumerate_multiindices(n, q).unwrap() {
                    let xi = ExteriorElement::basis(lam.clone());
                    let contracted = interior_product(&alpha, &xi).unwrap();
                    let thetas: Vec<ExteriorElement<BigRational>> = if q == n {
                        vec![ExteriorElement::basis(MultiIndex::empty(n))]
                    } else {
                        enumerate_multiindices(n, n - q)
                            .unwrap()
                            .into_iter()
                            .map(ExteriorElement::basis)
                            .collect()
                    };
                    for theta in thetas {
                        let lhs = contracted.pair(&theta).unwrap();
                        let top = theta.wedge(&xi).unwrap();
                        let rhs = top.pair(&alpha).unwrap();
                        assert_eq!(lhs, rhs, "n={n} lambda={lam}");
                    }
                }
            }
        }
    }
}
