//! Degree recovery from growth: for a polynomial curve of degree d the
//! characteristic satisfies T(r) ~ d log r, so T(r) / log r converges
//! to the degree. The origin-normalized (Cartan) table carries no base
//! constant, so the ratio is already within a fraction of a percent by
//! r = 1000.
//!
//! Run with: cargo run --release --example degree_growth

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::growth::RGrid;
use nevlab::nevanlinna::characteristic_cartan;
use nevlab::quad::QuadOpts;

fn main() -> Result<()> {
    let curves = [
        ("line (1 : z)", vec!["1", "z"], 1.0),
        ("conic (1 : z : z^2)", vec!["1", "z", "z^2"], 2.0),
        ("twisted cubic (1 : z : z^2 : z^3)", vec!["1", "z", "z^2", "z^3"], 3.0),
    ];
    let grid = RGrid::geometric(10.0, 2, 6)?;

    for (label, components, degree) in curves {
        let curve = ProjectiveCurve::parse(&components)?;
        let table = characteristic_cartan(&curve, &grid, &QuadOpts::default())?;
        println!("{label}: expected degree {degree}");
        println!("{:>14} {:>14} {:>12}", "r", "T(r)", "T / log r");
        for (r, t) in table.rows() {
            println!("{r:>14.1} {t:>14.6} {:>12.6}", t / r.ln());
        }
        println!();
    }
    Ok(())
}
