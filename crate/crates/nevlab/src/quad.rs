//! Quadrature policies shared by the analytic modules.
//!
//! Circle integrals use the composite trapezoid rule on `2^j` uniformly
//! spaced angles, doubling until successive estimates agree (spectrally
//! accurate for the periodic analytic integrands that arise here). Area
//! integrals are taken in polar form with adaptive Gauss-Legendre panels in
//! the radius; the outer `dt/t` integrals run adaptive Simpson in `log t`.
//!
//! Integrands report singular nodes through `Error::SingularPoint`; the
//! logged circle average retries on a radius perturbed by a relative 1e-6
//! and records the perturbation, so no node is ever silently dropped.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Stop refining circle integrals when successive estimates differ by less
/// than this (absolute).
pub const CIRCLE_TOLERANCE: f64 = 1e-8;

/// Hard cap on circle refinement: at most `2^16` angular nodes.
pub const CIRCLE_MAX_DOUBLINGS: u32 = 16;

/// Relative radius bump used when an integrand is singular on a node.
pub const RADIUS_PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    /// Absolute tolerance for circle averages.
    pub circle_tol: f64,
    /// Absolute tolerance for area and radial integrals.
    pub area_tol: f64,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts {
            circle_tol: CIRCLE_TOLERANCE,
            area_tol: 1e-8,
        }
    }
}

/// One radius adjustment made to dodge a singular quadrature node.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub context: String,
    pub requested: f64,
    pub used: f64,
}

/// Bookkeeping for every quadrature accommodation in a pipeline run;
/// reports surface it so nothing is dropped silently.
#[derive(Debug, Clone, Default)]
pub struct QuadLog {
    pub perturbations: Vec<Perturbation>,
    pub notes: Vec<String>,
}

impl QuadLog {
    pub fn is_clean(&self) -> bool {
        self.perturbations.is_empty() && self.notes.is_empty()
    }
}

/// Mean of `f` over the circle `|z| = r` by trapezoid doubling.
///
/// Returns the first `Error::SingularPoint` hit by the integrand; use
/// [`circle_average_logged`] for the perturb-and-record policy.
pub fn circle_average<F>(f: &mut F, r: f64, tol: f64) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<f64>,
{
    let eval_ring = |f: &mut F, count: usize, offset: f64| -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..count {
            let theta = 2.0 * PI * (k as f64 + offset) / count as f64;
            let z = Complex64::from_polar(r, theta);
            acc += f(z)?;
        }
        Ok(acc / count as f64)
    };

    let start_j = 6u32; // 64 nodes
    let mut nodes = 1usize << start_j;
    let mut estimate = eval_ring(f, nodes, 0.0)?;
    for _ in start_j..CIRCLE_MAX_DOUBLINGS {
        // Midpoint ring reuses nothing but costs the same as the nodes it
        // adds; the trapezoid mean of 2N nodes is the average of both rings.
        let midpoints = eval_ring(f, nodes, 0.5)?;
        let refined = 0.5 * (estimate + midpoints);
        let done = (refined - estimate).abs() < tol;
        estimate = refined;
        nodes *= 2;
        if done {
            return Ok(estimate);
        }
    }
    // Ran to the cap; one more agreement check before giving up.
    let midpoints = eval_ring(f, nodes, 0.5)?;
    let refined = 0.5 * (estimate + midpoints);
    if (refined - estimate).abs() < 10.0 * tol {
        Ok(refined)
    } else {
        Err(Error::Accuracy {
            achieved: (refined - estimate).abs(),
            wanted: tol,
        })
    }
}

/// Circle average with the node-skip policy: on a singular node the radius
/// is bumped by a relative 1e-6 (up to 8 times) and the event is recorded.
pub fn circle_average_logged<F>(
    f: &mut F,
    r: f64,
    tol: f64,
    context: &str,
    log: &mut QuadLog,
) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<f64>,
{
    let mut radius = r;
    for _attempt in 0..8 {
        match circle_average(f, radius, tol) {
            Err(Error::SingularPoint { .. }) => {
                let next = radius * (1.0 + RADIUS_PERTURBATION);
                log.perturbations.push(Perturbation {
                    context: context.to_string(),
                    requested: r,
                    used: next,
                });
                radius = next;
            }
            other => return other,
        }
    }
    Err(Error::Degenerate(format!(
        "circle average at r = {r} stayed singular after 8 radius perturbations ({context})"
    )))
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre recurrence.
fn gl_rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<[(Vec<f64>, Vec<f64>); 2]> = OnceLock::new();
    let rules = RULES.get_or_init(|| [compute_gl(16), compute_gl(32)]);
    match n {
        16 => &rules[0],
        32 => &rules[1],
        _ => unreachable!("only 16- and 32-point rules are provisioned"),
    }
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Chebyshev-style initial guess, then Newton on P_n.
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = pj;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gl_panel<F>(f: &mut F, a: f64, b: f64, n: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (nodes, weights) = gl_rule(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

/// Adaptive Gauss-Legendre on [a, b]: 16- vs 32-point comparison, bisecting
/// panels that disagree beyond the tolerance.
pub fn integrate_adaptive_gl<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    fn rec<F>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let coarse = gl_panel(f, a, b, 16)?;
        let fine = gl_panel(f, a, b, 32)?;
        if (fine - coarse).abs() <= tol || depth >= 28 {
            if depth >= 28 && (fine - coarse).abs() > 10.0 * tol.max(1e-12) {
                return Err(Error::Accuracy {
                    achieved: (fine - coarse).abs(),
                    wanted: tol,
                });
            }
            return Ok(fine);
        }
        let mid = 0.5 * (a + b);
        let left = rec(f, a, mid, 0.5 * tol, depth + 1)?;
        let right = rec(f, mid, b, 0.5 * tol, depth + 1)?;
        Ok(left + right)
    }
    if a == b {
        return Ok(0.0);
    }
    rec(f, a, b, tol, 0)
}

/// Adaptive Simpson on [a, b] (used on log-radius axes).
pub fn integrate_adaptive_simpson<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec<F>(
        f: &mut F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let lm = 0.5 * (a + 0.5 * (a + b));
        let rm = 0.5 * (0.5 * (a + b) + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let mid = 0.5 * (a + b);
        let left = simpson(fa, flm, fm, a, mid);
        let right = simpson(fm, frm, fb, mid, b);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol || depth >= 24 {
            if depth >= 24 && err.abs() > 150.0 * tol.max(1e-12) {
                return Err(Error::Accuracy {
                    achieved: err.abs() / 15.0,
                    wanted: tol,
                });
            }
            return Ok(left + right + err / 15.0);
        }
        let l = rec(f, a, mid, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = rec(f, mid, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let fm = f(0.5 * (a + b))?;
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, 0)
}
