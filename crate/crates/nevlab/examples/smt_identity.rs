//! The second-main-theorem identity: the circle average of log xi ties
//! the canonical and section characteristics to the ramification count,
//! so the residual column of the identity report is flat in r.
//!
//! Run with: cargo run --release --example smt_identity

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::growth::RGrid;
use nevlab::jacobian::{smt_identity_residual, HolomorphicField, MeromorphicVectorField, PoleSection};
use nevlab::quad::QuadOpts;

fn main() -> Result<()> {
    let curve = ProjectiveCurve::parse(&["1", "z^2", "exp(z)"])?;
    let lift = HolomorphicField::new(
        vec![MeromorphicVectorField::parse(&["0", "1"])?],
        PoleSection::one(2),
    )?;
    let grid = RGrid::geometric(2.0, 2, 12)?;
    let tables = smt_identity_residual(&curve, &lift, &grid, &QuadOpts::default())?;

    println!("curve (1 : z^2 : e^z), coordinate field, Jacobian scalar 2z");
    println!(
        "{:>10} {:>16} {:>14} {:>12} {:>16}",
        "r", "avg log xi / 2", "N_ram", "-(n+1+p) T", "residual"
    );
    for (((r, lhs), (_, n_ram)), ((_, canonical), (_, residual))) in tables
        .lhs
        .rows()
        .zip(tables.ramification.rows())
        .zip(tables.canonical.rows().zip(tables.residual.rows()))
    {
        println!("{r:>10.3} {lhs:>16.8} {n_ram:>14.8} {canonical:>12.6} {residual:>16.12}");
    }
    println!("\nresidual spread = {:.3e}", tables.residual.spread());
    println!(
        "Jacobian scalar zeros: {:?}",
        tables
            .zeros
            .iter()
            .map(|z| (z.location, z.multiplicity))
            .collect::<Vec<_>>()
    );
    Ok(())
}
