//! Rational first integrals and algebraic degeneracy: a curve lying on a
//! level set of Phi has zero deviation; a transcendental curve with no
//! such relation shows order-one deviation immediately.
//!
//! Run with: cargo run --release --example first_integral

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::expr::Expr;
use nevlab::jacobian::first_integral_check;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let phi = Expr::parse("w2 - w1^2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<Complex64> = (0..200)
        .map(|_| Complex64::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)))
        .collect();

    let cases = [
        ("parabola (1 : z : z^2)", vec!["1", "z", "z^2"]),
        ("exponential (1 : z : e^z)", vec!["1", "z", "exp(z)"]),
        ("reparametrized parabola (1 : z^3 : z^6)", vec!["1", "z^3", "z^6"]),
    ];
    println!("candidate first integral Phi = w2 - w1^2");
    for (label, components) in cases {
        let curve = ProjectiveCurve::parse(&components)?;
        let deviation = first_integral_check(&curve, &phi, &samples)?;
        let verdict = if deviation < 1e-10 {
            "degenerate (lies on a level set)"
        } else {
            "nondegenerate"
        };
        println!("{label:>38}: deviation = {deviation:.3e} -> {verdict}");
    }
    Ok(())
}
