//! The Jacobian-section machinery: a meromorphic vector field list with a
//! pole-clearing section defines a scalar W whose nonvanishing certifies
//! effectivity, and the dual-frame minor search picks the multi-index
//! that pairs best with the framed tangent.
//!
//! Run with: cargo run --release --example jacobian_sections

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::jacobian::{
    effectivity_probes, effectivity_test, find_effective_multiindex, jacobian_scalar,
    wedge_scalar, HolomorphicField, MeromorphicVectorField, PoleSection,
};
use num_complex::Complex64;

fn main() -> Result<()> {
    let curve = ProjectiveCurve::parse(&["1", "z", "exp(z)"])?;
    let fields = vec![MeromorphicVectorField::parse(&["0", "1"])?];
    let section = PoleSection::one(2);
    let lift = HolomorphicField::new(fields.clone(), section.clone())?;

    println!("curve (1 : z : e^z) with the coordinate field in direction 2");
    println!("|W| at the standard probes:");
    for &z in &effectivity_probes() {
        let w = jacobian_scalar(&curve, &lift, z, 0)?.value();
        println!(
            "  z = {:>16}: |W| = {:.6}",
            format!("{:.2} + {:.2}i", z.re, z.im),
            w.norm()
        );
    }
    match effectivity_test(&curve, &lift, &effectivity_probes())? {
        Some(witness) => println!(
            "effective: |W| = {:.6} at z = {:.2} + {:.2}i",
            witness.magnitude, witness.at.re, witness.at.im
        ),
        None => println!("inconclusive: every probe sat below the floor"),
    }

    let probe = Complex64::new(0.0, 0.0);
    let (lambda, minor) = find_effective_multiindex(&curve, &fields, &section, probe)?;
    println!(
        "\ndual-frame minor search at z = 0 picks lambda = {:?} (minor {minor:.6})",
        lambda.entries()
    );

    let formula = jacobian_scalar(&curve, &lift, probe, 0)?.value();
    let wedge = wedge_scalar(&curve, &lift, probe, 0)?.value();
    println!("formula route W(0) = {:.12} + {:.12}i", formula.re, formula.im);
    println!("wedge route   W(0) = {:.12} + {:.12}i", wedge.re, wedge.im);
    Ok(())
}
