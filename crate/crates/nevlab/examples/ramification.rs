//! Ramification bookkeeping: the Jacobian scalar is computed by two
//! independent routes (alternating-sum formula and wedge product), their
//! zero lists must agree, and the log-weighted count is N_ram(r).
//!
//! Run with: cargo run --release --example ramification

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::growth::RGrid;
use nevlab::jacobian::{
    jacobian_scalar, ramification, wedge_scalar, HolomorphicField, MeromorphicVectorField,
    PoleSection,
};
use nevlab::nevanlinna::count_zeros_logged;
use nevlab::quad::QuadLog;
use nevlab::zeros::JetFn;

fn main() -> Result<()> {
    let curve = ProjectiveCurve::parse(&["1", "z^2", "exp(z)"])?;
    let lift = HolomorphicField::new(
        vec![MeromorphicVectorField::parse(&["0", "1"])?],
        PoleSection::one(2),
    )?;
    let grid = RGrid::geometric(2.0, 1, 5)?;

    let mut log = QuadLog::default();
    let formula = JetFn(|z, order| jacobian_scalar(&curve, &lift, z, order));
    let wedge = JetFn(|z, order| wedge_scalar(&curve, &lift, z, order));
    let by_formula = count_zeros_logged(&formula, grid.max_radius(), "formula route", &mut log)?;
    let by_wedge = count_zeros_logged(&wedge, grid.max_radius(), "wedge route", &mut log)?;

    println!("curve (1 : z^2 : e^z), coordinate field: W = 2z up to sign");
    println!("formula route zeros:");
    for z in by_formula.iter() {
        println!("  {:+.9} {:+.9}i  multiplicity {}", z.location.re, z.location.im, z.multiplicity);
    }
    println!("wedge route zeros:");
    for z in by_wedge.iter() {
        println!("  {:+.9} {:+.9}i  multiplicity {}", z.location.re, z.location.im, z.multiplicity);
    }

    let tables = ramification(&curve, &lift, &grid)?;
    println!("\n{:>10} {:>14} {:>14}", "r", "N_ram(r)", "log r");
    for (r, n) in tables.counting.rows() {
        println!("{r:>10.3} {n:>14.8} {:>14.8}", r.ln());
    }
    Ok(())
}
