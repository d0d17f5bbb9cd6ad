//! Zero counting behind the counting function N(r): polynomials go
//! through companion-matrix roots, transcendental functions through
//! contour winding plus refinement, and both feed the same log-weighted
//! counting table.
//!
//! Run with: cargo run --release --example zero_counting

use nevlab::error::Result;
use nevlab::expr::Expr;
use nevlab::growth::RGrid;
use nevlab::nevanlinna::{count_zeros_logged, counting_table};
use nevlab::quad::QuadLog;

fn main() -> Result<()> {
    let functions = ["z^3 - 1", "exp(z) - 1", "exp(z) - z - 1"];
    let grid = RGrid::geometric(2.0, 2, 8)?;
    let radius = grid.max_radius();

    for src in functions {
        let g = Expr::parse(src)?;
        let mut log = QuadLog::default();
        let zeros = count_zeros_logged(&g, radius, src, &mut log)?;
        println!("g = {src}: {} zero(s) inside |z| < {radius}", zeros.len());
        for z in zeros.iter() {
            println!(
                "  z = {:>24} multiplicity {}",
                format!("{:.6} + {:.6}i", z.location.re, z.location.im),
                z.multiplicity
            );
        }
        let table = counting_table("N", &zeros, &grid)?;
        println!("{:>10} {:>14}", "r", "N(r)");
        for (r, n) in table.rows() {
            println!("{r:>10.3} {n:>14.8}");
        }
        for p in &log.perturbations {
            println!("  perturbed: {} -> {}", p.requested, p.used);
        }
        println!();
    }
    Ok(())
}
