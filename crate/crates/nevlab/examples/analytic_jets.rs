//! Jets as truncated Taylor expansions: expression evaluation produces
//! exact derivative data of any order, with no finite differences and no
//! symbolic blowup.
//!
//! Run with: cargo run --release --example analytic_jets

use nevlab::error::Result;
use nevlab::expr::Expr;
use num_complex::Complex64;

fn main() -> Result<()> {
    let f = Expr::parse("exp(z) / (1 + z^2)")?;
    let z0 = Complex64::new(0.5, 0.25);
    let jet = f.jet_at(z0, 6)?;

    println!("f(z) = exp(z) / (1 + z^2) at z0 = 0.5 + 0.25i");
    println!("{:>4} {:>42}", "j", "f^(j)(z0)");
    for j in 0..=jet.order() {
        let d = jet.derivative_value(j);
        println!("{j:>4} {:>42}", format!("{:.12} + {:.12}i", d.re, d.im));
    }

    // Differentiating the jet shifts the coefficients; the result matches
    // the jet of the symbolic derivative evaluated at the same point.
    let shifted = jet.differentiate();
    let symbolic = f.derivative("z").jet_at(z0, 5)?;
    let gap = shifted
        .coeffs()
        .iter()
        .zip(symbolic.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    println!("\nmax coefficient gap between jet shift and symbolic derivative: {gap:.3e}");
    Ok(())
}
