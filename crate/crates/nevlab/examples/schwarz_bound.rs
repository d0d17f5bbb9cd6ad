//! The pointwise Schwarz bound g <= |phi|: the framed-minor quotient g is
//! dominated by the metric norm of the lifted field wherever the curve is
//! immersed.
//!
//! Run with: cargo run --release --example schwarz_bound

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::jacobian::{g_ratio, HolomorphicField, MeromorphicVectorField, PoleSection};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let curve = ProjectiveCurve::parse(&["1", "z", "exp(z)"])?;
    let lift = HolomorphicField::new(
        vec![MeromorphicVectorField::parse(&["0", "1"])?],
        PoleSection::one(2),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_margin = f64::INFINITY;
    println!("{:>24} {:>12} {:>12} {:>12}", "z", "g", "|phi|", "margin");
    for _ in 0..12 {
        let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let ratio = g_ratio(&curve, &lift, z)?;
        let margin = ratio.phi_norm - ratio.g;
        worst_margin = worst_margin.min(margin);
        println!(
            "{:>24} {:>12.6} {:>12.6} {:>12.6}",
            format!("{:.3} + {:.3}i", z.re, z.im),
            ratio.g,
            ratio.phi_norm,
            margin
        );
    }
    println!("\nworst margin |phi| - g = {worst_margin:.6} (nonnegative = bound holds)");
    Ok(())
}
