//! Gait deviation indices: FGDI/sFGDI, the MAP profile, GVS/GPS, GDI/sGDI,
//! the Overall Abnormality index, approximation error and stability tables.

mod approximation;
mod fgdi;
mod gdi;
mod gps;
mod oa;
mod stability;

pub use approximation::{fpca_approximation_error, oa_approximation_error, ApproximationError};
pub use fgdi::{fgdi, fgdi_with_reference, map_profile, map_profile_from_models, sfgdi, MapProfile};
pub use gdi::{gdi, gdi_stacked, BasisSource, GdiFeatureBasis, GdiResult, GDI_FEATURES, GDI_GRID_POINTS};
pub use gps::{gvs, gvs_gps, healthy_mean_curves, GaitProfile};
pub use oa::{fit_oa, oa, OaModel};
pub use stability::{stability_multivariate, stability_per_joint, StabilityRow, StabilityTable};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

/// Distances below this are replaced by it before taking the log, and the
/// subject is flagged.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// `log` of each subject's Euclidean distance to the healthy mean row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDistance {
    pub values: Vec<f64>,
    /// True where the distance was floored at [`DISTANCE_FLOOR`].
    pub clamped: Vec<bool>,
}

pub(crate) fn check_mask(mask: &[bool], n: usize, min_healthy: usize) -> Result<Vec<usize>> {
    if mask.len() != n {
        return Err(GaitError::arg(format!(
            "healthy mask has {} entries for {n} subjects",
            mask.len()
        )));
    }
    let idx: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    if idx.len() < min_healthy {
        return Err(GaitError::arg(format!(
            "at least {min_healthy} healthy subject(s) required, found {}",
            idx.len()
        )));
    }
    Ok(idx)
}

/// Column means over the rows flagged healthy.
pub(crate) fn healthy_row_mean(m: &DMatrix<f64>, healthy: &[usize]) -> Vec<f64> {
    let nh = healthy.len() as f64;
    (0..m.ncols())
        .map(|c| healthy.iter().map(|&i| m[(i, c)]).sum::<f64>() / nh)
        .collect()
}

pub fn log_distance_to_healthy(rows: &DMatrix<f64>, mask: &[bool]) -> Result<LogDistance> {
    log_distance_with_reference(rows, mask, rows)
}

/// Log distance of each row of `target` to the mean of the healthy rows of
/// `reference`.
pub fn log_distance_with_reference(
    reference: &DMatrix<f64>,
    mask: &[bool],
    target: &DMatrix<f64>,
) -> Result<LogDistance> {
    let healthy = check_mask(mask, reference.nrows(), 1)?;
    if reference.ncols() != target.ncols() {
        return Err(GaitError::arg(format!(
            "reference has {} columns, target has {}",
            reference.ncols(),
            target.ncols()
        )));
    }
    let centre = healthy_row_mean(reference, &healthy);
    let mut values = Vec::with_capacity(target.nrows());
    let mut clamped = Vec::with_capacity(target.nrows());
    for i in 0..target.nrows() {
        let d = (0..target.ncols())
            .map(|c| (target[(i, c)] - centre[c]).powi(2))
            .sum::<f64>()
            .sqrt();
        let floor = d < DISTANCE_FLOOR;
        clamped.push(floor);
        values.push(d.max(DISTANCE_FLOOR).ln());
    }
    Ok(LogDistance { values, clamped })
}

/// Mean and sample standard deviation (divisor `n - 1`) over healthy entries.
pub fn healthy_mean_sd(values: &[f64], mask: &[bool]) -> Result<(f64, f64)> {
    let healthy = check_mask(mask, values.len(), 2)?;
    let nh = healthy.len() as f64;
    let mean = healthy.iter().map(|&i| values[i]).sum::<f64>() / nh;
    let var = healthy.iter().map(|&i| (values[i] - mean).powi(2)).sum::<f64>() / (nh - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(GaitError::degenerate(
            "healthy reference values have zero spread; cannot standardise",
        ));
    }
    Ok((mean, sd))
}

/// `(v - mean_H) / sd_H` for every entry.
pub fn standardize_by_healthy(values: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    standardize_with_reference(values, mask, values)
}

/// Standardise `target` by the healthy moments of `reference`.
pub fn standardize_with_reference(reference: &[f64], mask: &[bool], target: &[f64]) -> Result<Vec<f64>> {
    let (mean, sd) = healthy_mean_sd(reference, mask)?;
    Ok(target.iter().map(|v| (v - mean) / sd).collect())
}

/// Min-max rescale to [0, 1], used when indices on different scales are
/// plotted together.
pub fn rescale_unit(values: &[f64]) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !(hi > lo) {
        return Err(GaitError::degenerate(
            "cannot rescale an empty or constant vector",
        ));
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}
