//! Jensen's formula on annuli: the difference of circle averages of
//! log |g| equals the log-weighted zero count between the circles, so
//! the residual vanishes for any function analytic on the annulus.
//!
//! Run with: cargo run --release --example jensen_residual

use nevlab::error::Result;
use nevlab::expr::Expr;
use nevlab::nevanlinna::jensen_check;
use nevlab::quad::QuadOpts;

fn main() -> Result<()> {
    let functions = [
        "z^4 - 3 * z^2 + 2",
        "z^3 + z + 1",
        "exp(z)",
        "exp(z) - 4",
    ];
    let opts = QuadOpts::default();

    for src in functions {
        let g = Expr::parse(src)?;
        println!("g = {src}");
        println!("{:>8} {:>14}", "r", "residual");
        for r in [2.0, 4.0, 8.0, 16.0] {
            let residual = jensen_check(&g, 0.5, r, &opts)?;
            println!("{r:>8.1} {residual:>14.3e}");
        }
        println!();
    }
    Ok(())
}
