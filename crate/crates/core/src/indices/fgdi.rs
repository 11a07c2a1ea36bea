use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    log_distance_to_healthy, log_distance_with_reference, standardize_by_healthy, standardize_with_reference,
    LogDistance,
};
use crate::cohort::{curve_matrix, Cohort};
use crate::error::{GaitError, Result};
use crate::fpca::{fit_univariate_fpca, FpcaModel, Smoothing};
use crate::variable::{VariableId, VariableSet};

/// Log distance of each score row to the healthy mean score row.
pub fn fgdi(scores: &DMatrix<f64>, healthy: &[bool]) -> Result<LogDistance> {
    if scores.ncols() == 0 {
        return Err(GaitError::arg("score matrix has no columns"));
    }
    log_distance_to_healthy(scores, healthy)
}

/// FGDI of `target` score rows against the healthy rows of `reference`,
/// plus the matching sFGDI (standardised by the reference healthy FGDI).
pub fn fgdi_with_reference(
    reference: &DMatrix<f64>,
    healthy: &[bool],
    target: &DMatrix<f64>,
) -> Result<(LogDistance, Vec<f64>)> {
    let ref_fgdi = fgdi(reference, healthy)?;
    let f = log_distance_with_reference(reference, healthy, target)?;
    let z = standardize_with_reference(&ref_fgdi.values, healthy, &f.values)?;
    Ok((f, z))
}

/// FGDI expressed in healthy standard deviations.
pub fn sfgdi(fgdi: &[f64], healthy: &[bool]) -> Result<Vec<f64>> {
    standardize_by_healthy(fgdi, healthy)
}

/// Per-variable sFGDI for every subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapProfile {
    pub variables: Vec<VariableId>,
    /// One entry per variable, each of length N.
    pub fgdi: Vec<Vec<f64>>,
    pub sfgdi: Vec<Vec<f64>>,
    pub clamped: Vec<Vec<bool>>,
    pub components: Vec<usize>,
}

impl MapProfile {
    /// `(variable, sFGDI)` pairs for subject `i`.
    pub fn subject(&self, i: usize) -> Vec<(VariableId, f64)> {
        self.variables
            .iter()
            .zip(&self.sfgdi)
            .map(|(v, col)| (*v, col[i]))
            .collect()
    }
}

/// Fit one FPCA per member of `set` and compute its sFGDI.
pub fn map_profile(
    cohort: &Cohort,
    set: &VariableSet,
    omega: f64,
    smoothing: Smoothing,
) -> Result<MapProfile> {
    cohort.select(set)?;
    let grid = cohort.grid();
    let models = set
        .members()
        .par_iter()
        .map(|&v| {
            let mut m = fit_univariate_fpca(&curve_matrix(cohort, v), grid, omega, smoothing)?;
            m.variable = Some(v);
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<DMatrix<f64>> = models.iter().map(|m| m.score_matrix()).collect();
    map_profile_from_models(&models, &cohort.healthy_mask(), &scores)
}

/// MAP profile of the subjects behind `scores` (one matrix per model),
/// referenced to the healthy training subjects of each model.
pub fn map_profile_from_models(
    models: &[FpcaModel],
    training_healthy: &[bool],
    scores: &[DMatrix<f64>],
) -> Result<MapProfile> {
    if models.len() != scores.len() {
        return Err(GaitError::arg("one score matrix per model is required"));
    }
    let mut out = MapProfile {
        variables: Vec::new(),
        fgdi: Vec::new(),
        sfgdi: Vec::new(),
        clamped: Vec::new(),
        components: Vec::new(),
    };
    for (m, s) in models.iter().zip(scores) {
        let v = m
            .variable
            .ok_or_else(|| GaitError::arg("MAP profile needs models tagged with a variable"))?;
        let (f, z) = fgdi_with_reference(&m.score_matrix(), training_healthy, s)?;
        out.sfgdi.push(z);
        out.variables.push(v);
        out.fgdi.push(f.values);
        out.clamped.push(f.clamped);
        out.components.push(m.n_components());
    }
    Ok(out)
}
