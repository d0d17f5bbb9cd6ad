//! First Main Theorem balance sheet: tabulate T, m, N for a curve against
//! a divisor and watch the residual T - m - N sit at a constant.
//!
//! Run with: cargo run --release --example fmt_flatness

use nevlab::curve::{Divisor, ProjectiveCurve};
use nevlab::error::Result;
use nevlab::growth::RGrid;
use nevlab::nevanlinna::fmt_tables;
use nevlab::quad::QuadOpts;

fn main() -> Result<()> {
    let curve = ProjectiveCurve::parse(&["1", "z", "exp(z)"])?;
    let divisor = Divisor::parse("w0 + 2 * w1 - w2", 2)?;
    let grid = RGrid::standard();
    let tables = fmt_tables(&curve, &divisor, &grid, &QuadOpts::default())?;

    println!("curve (1 : z : e^z) against the hyperplane w0 + 2 w1 - w2 = 0");
    println!("{:>10} {:>14} {:>14} {:>14} {:>16}", "r", "T", "m", "N", "T - m - N");
    for (((r, t), (_, m)), ((_, n), (_, residual))) in tables
        .characteristic
        .rows()
        .zip(tables.proximity.rows())
        .zip(tables.counting.rows().zip(tables.residual.rows()))
    {
        println!("{r:>10.3} {t:>14.8} {m:>14.8} {n:>14.8} {residual:>16.12}");
    }
    println!("\nresidual spread = {:.3e}", tables.residual.spread());
    for p in &tables.log.perturbations {
        println!("perturbed radius: {} -> {}", p.requested, p.used);
    }
    Ok(())
}
