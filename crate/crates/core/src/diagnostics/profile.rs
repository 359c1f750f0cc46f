use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of dyadic radii in a profile.
pub const DYADIC_LEVELS: usize = 6;

/// Values below this are left out of power-law fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// `r_j = r_max 2^{-j}`, `j = 0..DYADIC_LEVELS`.
pub fn dyadic_radii(r_max: f64) -> Vec<f64> {
    (0..DYADIC_LEVELS).map(|j| r_max * 0.5f64.powi(j as i32)).collect()
}

/// Values of a radial quantity and their fit `value ~ prefactor r^exponent`.
#[derive(Clone, Debug, Serialize)]
pub struct RadialProfile {
    pub name: String,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `NaN` when fewer than two values are above the fit floor.
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
    pub fitted_points: usize,
}

impl RadialProfile {
    pub fn new(name: &str, center: &[f64], radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::Config(format!("{} radii for {} values", radii.len(), values.len())));
        }
        if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Config("profile radii must be positive and strictly decreasing".into()));
        }
        let (exponent, prefactor, fit_residual, fitted_points) = power_fit(&radii, &values);
        Ok(Self {
            name: name.into(),
            center: center.to_vec(),
            radii,
            values,
            exponent,
            prefactor,
            fit_residual,
            fitted_points,
        })
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Non-decreasing in `r` (values ordered by decreasing radius), up to `tol` relative.
    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + tol * w[0].abs().max(w[1].abs()))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,value")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(out, "{r:.17e},{v:.17e}")?;
        }
        Ok(())
    }
}

/// Least squares of `log |v|` against `log r`.
pub fn power_fit(radii: &[f64], values: &[f64]) -> (f64, f64, f64, usize) {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(_, v)| v.abs() >= FIT_FLOOR && v.is_finite())
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return (f64::NAN, f64::NAN, f64::NAN, n);
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let res = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / nf).sqrt();
    (slope, icpt.exp(), res, n)
}
