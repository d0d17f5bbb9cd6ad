//! Growth-rate diagnostic: circle integrals of a density against its own
//! characteristic, with Borel-type flags on segments where T grows faster
//! than T (log T)^(1 + delta).
//!
//! Run with: cargo run --release --example calculus_diagnostic

use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::growth::RGrid;
use nevlab::nevanlinna::{calculus_lemma_diagnostic, fs_pullback_density, CalculusDiagnostic};
use nevlab::quad::QuadOpts;

fn print_report(diagnostic: &CalculusDiagnostic) {
    println!(
        "{:>10} {:>16} {:>16} {:>10}",
        "r", "circle integral", "T(r)", "ratio"
    );
    for row in &diagnostic.rows {
        println!(
            "{:>10.3} {:>16.8} {:>16.8} {:>10.4}",
            row.r, row.circle_integral, row.characteristic, row.ratio
        );
    }
    println!(
        "segments above the Borel bound: {} (measure {:.4} of {:.4})",
        diagnostic.violating.len(),
        diagnostic.exceptional_measure,
        diagnostic.grid_span
    );
    for segment in &diagnostic.violating {
        println!(
            "  [{:.3}, {:.3}]: slope {:.4} > bound {:.4}",
            segment.lo, segment.hi, segment.slope, segment.bound
        );
    }
}

fn main() -> Result<()> {
    let grid = RGrid::geometric(2.0, 2, 8)?;
    let radii: Vec<f64> = grid.iter().collect();
    let opts = QuadOpts::default();

    // Geometric density: the Fubini-Study pullback of a curve of finite
    // area. Its circle integrals never exceed 1, so log+ kills the
    // numerator and the ratio column is identically zero.
    let curve = ProjectiveCurve::parse(&["1", "z", "exp(z)"])?;
    let bounded = calculus_lemma_diagnostic(
        |z| fs_pullback_density(&curve, z),
        &radii,
        0.1,
        &opts,
    )?;
    println!("Fubini-Study density of (1 : z : e^z)  (circle integrals < 1)");
    print_report(&bounded);

    // Polynomial-order density: circle integrals of |z|^2 equal r^2, so
    // the ratio settles near 1/2 while the steep early segments trip the
    // Borel flag -- the finite exceptional set the lemma allows.
    let growing = calculus_lemma_diagnostic(
        |z| Ok(z.norm_sqr()),
        &radii,
        0.1,
        &opts,
    )?;
    println!("\ndensity |z|^2  (polynomial order)");
    print_report(&growing);
    Ok(())
}
