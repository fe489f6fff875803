//! Distances between two density curves.

use thiserror::Error;

use crate::io::DensityTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("density grids do not overlap")]
    DisjointGrids,
    #[error("malformed density table: {0}")]
    MalformedCsv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    Linf,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Metric::L1),
            "linf" => Ok(Metric::Linf),
            other => Err(format!("unknown metric `{other}` (expected l1 or linf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub metric: Metric,
    pub value: f64,
    /// Common grid: `lo, lo + dx, ...`, `points` values.
    pub lo: f64,
    pub hi: f64,
    pub dx: f64,
    pub points: usize,
}

/// Piecewise-linear interpolation of a strictly ascending table.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

fn spacing(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Interpolates both curves onto a uniform grid spanning the intersection of
/// their ranges, with the finer of their two spacings, and measures the
/// distance there. L1 uses the trapezoid rule, so a constant offset `c`
/// gives exactly `c * (hi - lo)`.
pub fn compare(a: &DensityTable, b: &DensityTable, metric: Metric) -> Result<CompareReport, CompareError> {
    for t in [a, b] {
        if t.rows.len() < 2 {
            return Err(CompareError::MalformedCsv("need at least two rows".into()));
        }
        if t.rows.iter().any(|r| !r.x.is_finite()) {
            return Err(CompareError::MalformedCsv("non-finite x".into()));
        }
    }
    let (ax, ay) = (a.xs(), a.rhos());
    let (bx, by) = (b.xs(), b.rhos());
    let lo = ax[0].max(bx[0]);
    let hi = ax[ax.len() - 1].min(bx[bx.len() - 1]);
    if !(hi > lo) {
        return Err(CompareError::DisjointGrids);
    }
    let dx = spacing(&ax).min(spacing(&bx));
    let points = (((hi - lo) / dx) * (1.0 + 1e-12)).floor() as usize + 1;
    let diff: Vec<f64> = (0..points)
        .map(|i| {
            let x = (lo + i as f64 * dx).min(hi);
            (interpolate(&ax, &ay, x) - interpolate(&bx, &by, x)).abs()
        })
        .collect();
    let value = match metric {
        Metric::Linf => diff.iter().copied().fold(0.0, f64::max),
        Metric::L1 => crate::grid::trapezoid(&diff, dx),
    };
    Ok(CompareReport { metric, value, lo, hi, dx, points })
}
