//! Covariant jets along a meromorphic connection: Christoffel tables with
//! poles are cleared by a section t, autoparallel curves have vanishing
//! covariant Wronskian, and the membership report shows how close the
//! curve runs to the pole divisor.
//!
//! Run with: cargo run --release --example autoparallel_connection

use nevlab::connection::{
    autoparallel_wronskian, covariant_jets, pole_membership, MeromorphicConnection,
};
use nevlab::curve::ProjectiveCurve;
use nevlab::error::Result;
use nevlab::expr::Expr;
use nevlab::jacobian::{effectivity_probes, PoleSection};
use num_complex::Complex64;

fn main() -> Result<()> {
    let line = ProjectiveCurve::parse(&["1", "z", "1 + 2 * z"])?;
    let flat = MeromorphicConnection::flat(2);
    println!("flat connection on the line (1 : z : 1 + 2z): |W| at probes");
    for &z in &effectivity_probes() {
        let w = autoparallel_wronskian(&line, &flat, z)?;
        println!("  z = {:>16}: |W| = {:.3e}", format!("{:.2} + {:.2}i", z.re, z.im), w.norm());
    }

    // A rational Christoffel table: Gamma^2_(1,1) = 1 / w1 has a pole on
    // w1 = 0, cleared by the section t = w1.
    let connection = MeromorphicConnection::new(
        PoleSection::new(Expr::parse("w1")?, 2)?,
        vec![((2, 1, 1), Expr::parse("1 / w1")?)],
    )?;
    let curve = ProjectiveCurve::parse(&["1", "z", "exp(z)"])?;
    let z0 = Complex64::new(0.7, -0.3);
    let jets = covariant_jets(&curve, &connection, 3, z0)?;
    println!("\ncovariant jets of (1 : z : e^z) along Gamma^2_(1,1) = 1/w1, t = w1, at z = 0.7 - 0.3i:");
    for (k, row) in jets.iter().enumerate() {
        let rendered: Vec<String> = row.iter().map(|v| format!("{:.6} + {:.6}i", v.re, v.im)).collect();
        println!("  f^({}) = [{}]", k + 1, rendered.join(", "));
    }
    let w = autoparallel_wronskian(&curve, &connection, z0)?;
    println!("covariant Wronskian at z0: {:.6} + {:.6}i (nonzero: not autoparallel)", w.re, w.im);

    println!("\npole membership |t(f(z))| at probes (nonzero: curve avoids the pole divisor):");
    for sample in pole_membership(&curve, &connection, &effectivity_probes())? {
        println!(
            "  z = {:>16}: |t(f(z))| = {:.6}",
            format!("{:.2} + {:.2}i", sample.at.re, sample.at.im),
            sample.section_magnitude
        );
    }
    Ok(())
}
