//! Analytic spectrum of the random regular edge/triangle network, where every
//! node belongs to exactly one single edge and one triangle.
//!
//! With one message value per motif kind the message equations close into a
//! quadratic for the edge message `mu`:
//!
//! ```text
//! z mu^2 - (z^2 - z - 1) mu + (z - 1) = 0
//! ```
//!
//! The continuous density lives on two bands mirrored about `x = 1/2`, and
//! there are atoms at `x = -2` and `x = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::Grid;
use crate::io::DensityTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("eta sequence must hold at least two positive, strictly decreasing values")]
    InvalidEtaSequence,
    #[error("peak weight at x = {location} did not settle (uncertainty {uncertainty:e})")]
    NonConvergentExtrapolation { location: f64, uncertainty: f64 },
}

/// Locations of the two atoms.
pub const PEAK_LOCATIONS: [f64; 2] = [-2.0, 0.0];
/// Broadening sequence used by [`peak_weights`] callers that have no preference.
pub const DEFAULT_PEAK_ETAS: [f64; 3] = [1e-3, 1e-4, 1e-5];

fn quad_b(z: Complex64) -> Complex64 {
    z * z - z - 1.0
}

/// `z^4 - 2 z^3 - 5 z^2 + 6 z + 1`, equal to `[(z - 1/2)^2 - 13/4]^2 - 8`.
fn discriminant(z: Complex64) -> Complex64 {
    (((z - 2.0) * z - 5.0) * z + 6.0) * z + 1.0
}

/// Both roots of the quadratic, computed without cancellation.
fn mu_roots(z: Complex64) -> [Complex64; 2] {
    let b = quad_b(z);
    let sq = discriminant(z).sqrt();
    let big = if (b + sq).norm() >= (b - sq).norm() { b + sq } else { b - sq };
    let c = z - 1.0;
    // roots are big / 2z and 2c / big (product c / z)
    [big / (2.0 * z), 2.0 * c / big]
}

fn rho_from_mu(mu: Complex64) -> Complex64 {
    1.0 / (PI * (mu - mu.inv()))
}

/// Edge message on the physical branch: of the two roots, the one whose
/// density `(1/pi) / (mu - 1/mu)` has the larger imaginary part (the other has
/// `Im rho <= 0`). This root behaves as `1/z` for large `|z|`.
///
/// Panics unless `Im z > 0`.
pub fn mu_regular(z: Complex64) -> Complex64 {
    assert!(z.im > 0.0, "mu_regular needs Im z > 0, got {z}");
    let [a, b] = mu_roots(z);
    let (ra, rb) = (rho_from_mu(a), rho_from_mu(b));
    match ra.im.partial_cmp(&rb.im) {
        Some(std::cmp::Ordering::Greater) => a,
        Some(std::cmp::Ordering::Less) => b,
        _ => {
            if a.norm() <= b.norm() {
                a
            } else {
                b
            }
        }
    }
}

/// Complex density from the expanded closed form
/// `(z^2 - z - 1 +- (2z - 1) sqrt(D)) / (2 pi (z^4 - 2z^3 - 5z^2 + 6z))`,
/// taking the sign that gives the larger `Im rho`.
///
/// Panics unless `Im z > 0`.
pub fn rho_regular_complex(z: Complex64) -> Complex64 {
    assert!(z.im > 0.0, "rho_regular_complex needs Im z > 0, got {z}");
    let b = quad_b(z);
    let s = (2.0 * z - 1.0) * discriminant(z).sqrt();
    let den = 2.0 * PI * (((z - 2.0) * z - 5.0) * z + 6.0) * z;
    let plus = (b + s) / den;
    let minus = (b - s) / den;
    if plus.im >= minus.im {
        plus
    } else {
        minus
    }
}

/// The same density via `(1/pi) / (mu - 1/mu)` with `mu = mu_regular(z)`.
pub fn rho_regular_via_mu(z: Complex64) -> Complex64 {
    rho_from_mu(mu_regular(z))
}

/// Continuous part of the density on the real line (atoms excluded):
///
/// `rho(x) = (1/pi) |x - 1/2| sqrt(8 - t^2) / (9 - t^2)`, `t = (x - 1/2)^2 - 13/4`,
/// and zero where `8 - t^2 <= 0`.
pub fn rho_regular_real(x: f64) -> f64 {
    let s = x - 0.5;
    let t = s * s - 13.0 / 4.0;
    let rad = 8.0 - t * t;
    if rad <= 0.0 {
        return 0.0;
    }
    s.abs() * rad.sqrt() / (PI * (9.0 - t * t))
}

/// Band edges `(1 +- sqrt(13 +- 8 sqrt 2)) / 2`, ascending.
pub fn band_edges() -> [f64; 4] {
    let outer = (13.0 + 8.0 * 2f64.sqrt()).sqrt();
    let inner = (13.0 - 8.0 * 2f64.sqrt()).sqrt();
    [0.5 * (1.0 - outer), 0.5 * (1.0 - inner), 0.5 * (1.0 + inner), 0.5 * (1.0 + outer)]
}

/// True strictly inside one of the two bands.
pub fn in_band(x: f64) -> bool {
    let [a, b, c, d] = band_edges();
    (x > a && x < b) || (x > c && x < d)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PeakWeights {
    pub locations: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_uncertainty: Vec<f64>,
}

/// Estimates the mass of the atoms at `x = -2` and `x = 0`.
///
/// For each `eta` the broadened mass is `pi * eta * Im rho(x0 + i eta)`; the
/// `eta -> 0` limit is taken by linear (Richardson) extrapolation on
/// consecutive pairs. The reported uncertainty is the spread of the last two
/// extrapolants (or, with two etas, the size of the last correction).
pub fn peak_weights(etas: &[f64]) -> Result<PeakWeights, ClosedFormError> {
    if etas.len() < 2 || etas.iter().any(|&e| !(e > 0.0 && e.is_finite())) || etas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ClosedFormError::InvalidEtaSequence);
    }
    let mut weights = Vec::new();
    let mut uncertainty = Vec::new();
    for &x0 in &PEAK_LOCATIONS {
        let raw: Vec<f64> = etas.iter().map(|&e| PI * e * rho_regular_complex(Complex64::new(x0, e)).im).collect();
        let extrap: Vec<f64> = (0..etas.len() - 1)
            .map(|k| {
                let (e1, e2) = (etas[k], etas[k + 1]);
                raw[k + 1] - (raw[k] - raw[k + 1]) * e2 / (e1 - e2)
            })
            .collect();
        let w = *extrap.last().expect("at least one pair");
        let u = if extrap.len() >= 2 { (w - extrap[extrap.len() - 2]).abs() } else { (w - raw[raw.len() - 1]).abs() };
        if !w.is_finite() || !u.is_finite() || u > 1e-2 * w.abs().max(1e-4) {
            return Err(ClosedFormError::NonConvergentExtrapolation { location: x0, uncertainty: u });
        }
        weights.push(w);
        uncertainty.push(u);
    }
    Ok(PeakWeights { locations: PEAK_LOCATIONS.to_vec(), weights, weight_uncertainty: uncertainty })
}

/// Exact density on a grid: the continuous part when `eta` is `None`,
/// otherwise `Im rho(x + i eta)`, which includes the broadened atoms.
pub fn regular_density(grid: &Grid, eta: Option<f64>) -> DensityTable {
    let rho = grid.points().map(|x| match eta {
        Some(e) => rho_regular_complex(Complex64::new(x, e)).im,
        None => rho_regular_real(x),
    });
    DensityTable::from_curve(grid.points(), rho)
}
