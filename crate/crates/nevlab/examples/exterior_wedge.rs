//! Exterior algebra with exact signs: multi-indices, permutation signs by
//! cycle parity, wedges with inversion counting, and the complement
//! pairing e_lambda ^ e_complement = sign * e_full.
//!
//! Run with: cargo run --release --example exterior_wedge

use nevlab::error::Result;
use nevlab::exterior::{enumerate_multiindices, perm_sign, ExteriorElement, MultiIndex};
use num_complex::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn main() -> Result<()> {
    println!("increasing multi-indices of degree 2 in ambient 4:");
    for idx in enumerate_multiindices(4, 2)? {
        let comp = idx.complement();
        let sign = perm_sign(&idx, &comp)?;
        println!(
            "  {:?} with complement {:?}: e ^ e_comp = {sign:+} e_full",
            idx.entries(),
            comp.entries()
        );
    }

    let a = ExteriorElement::from_coeffs(
        3,
        1,
        vec![
            (MultiIndex::new(vec![1], 3)?, c(1.0)),
            (MultiIndex::new(vec![2], 3)?, c(2.0)),
        ],
    )?;
    let b = ExteriorElement::from_coeffs(
        3,
        1,
        vec![
            (MultiIndex::new(vec![2], 3)?, c(1.0)),
            (MultiIndex::new(vec![3], 3)?, c(3.0)),
        ],
    )?;
    let product = a.wedge(&b)?;
    println!("\n(e1 + 2 e2) ^ (e2 + 3 e3):");
    for (index, coeff) in product.iter() {
        println!("  e_{:?}: {}", index.entries(), coeff.re);
    }

    let repeated = a.wedge(&a)?;
    println!("\n(e1 + 2 e2) ^ (e1 + 2 e2) is zero: {}", repeated.is_zero());
    Ok(())
}
