//! Radius grids and growth tables.
//!
//! Every asymptotic quantity in this crate is reported as a function of the
//! outer radius `r` sampled on a shared geometric grid, so tables from one
//! pipeline line up column-by-column with tables from another.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// A strictly increasing grid of radii, all > 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RGrid {
    radii: Vec<f64>,
}

impl RGrid {
    /// The default laboratory grid: `r = 2^{k/2}` for `k = 2..=14`,
    /// i.e. thirteen radii from 2 to 128.
    pub fn standard() -> Self {
        RGrid {
            radii: (2..=14).map(|k| 2f64.powf(k as f64 / 2.0)).collect(),
        }
    }

    /// Geometric grid `r = base^{k/2}` for `k = k_lo..=k_hi`.
    pub fn geometric(base: f64, k_lo: i32, k_hi: i32) -> Result<Self> {
        if !(base > 1.0) {
            return Err(Error::Domain(format!("grid base must exceed 1, got {base}")));
        }
        if k_lo > k_hi {
            return Err(Error::Domain(format!(
                "grid range is empty: k_lo = {k_lo} > k_hi = {k_hi}"
            )));
        }
        let radii: Vec<f64> = (k_lo..=k_hi).map(|k| base.powf(k as f64 / 2.0)).collect();
        Self::from_radii(radii)
    }

    pub fn from_radii(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::Domain("radius grid is empty".into()));
        }
        if radii[0] <= 1.0 {
            return Err(Error::Domain(format!(
                "radius grid must start above 1, got {}",
                radii[0]
            )));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("radius grid must be strictly increasing".into()));
        }
        Ok(RGrid { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().expect("grid is nonempty")
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.radii.iter().copied()
    }
}

/// One labeled column of values over a radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTable {
    label: String,
    grid: RGrid,
    values: Vec<f64>,
}

impl GrowthTable {
    pub fn new(label: impl Into<String>, grid: RGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "growth table has {} values for {} radii",
                values.len(),
                grid.len()
            )));
        }
        Ok(GrowthTable {
            label: label.into(),
            grid,
            values,
        })
    }

    /// Evaluate `f` at every grid radius.
    pub fn tabulate<F>(label: impl Into<String>, grid: &RGrid, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = grid.iter().map(|r| f(r)).collect::<Result<Vec<_>>>()?;
        GrowthTable::new(label, grid.clone(), values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &RGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().zip(self.values.iter().copied())
    }

    /// max - min over the column; the flatness statistic for residuals.
    pub fn spread(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise combination of two columns over the same grid.
    pub fn zip_with<F>(&self, other: &GrowthTable, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        if self.grid != other.grid {
            return Err(Error::Domain(format!(
                "cannot combine tables `{}` and `{}`: grids differ",
                self.label, other.label
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GrowthTable::new(label, self.grid.clone(), values)
    }

    pub fn map<F>(&self, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        GrowthTable {
            label: label.into(),
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// CSV with header `r,<label>`, one row per radius, full double
    /// precision (round-trips through parsing).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "r,{}", self.label);
        for (r, v) in self.rows() {
            let _ = writeln!(out, "{:.17e},{:.17e}", r, v);
        }
        out
    }
}

/// CSV for several columns over one shared grid: header `r,<l1>,<l2>,...`.
pub fn tables_to_csv(tables: &[&GrowthTable]) -> Result<String> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Domain("no tables to serialize".into()))?;
    for t in &tables[1..] {
        if t.grid != first.grid {
            return Err(Error::Domain(format!(
                "cannot serialize tables together: `{}` is on a different grid than `{}`",
                t.label, first.label
            )));
        }
    }
    let mut out = String::from("r");
    for t in tables {
        let _ = write!(out, ",{}", t.label);
    }
    out.push('\n');
    for (row, r) in first.grid.iter().enumerate() {
        let _ = write!(out, "{:.17e}", r);
        for t in tables {
            let _ = write!(out, ",{:.17e}", t.values[row]);
        }
        out.push('\n');
    }
    Ok(out)
}
