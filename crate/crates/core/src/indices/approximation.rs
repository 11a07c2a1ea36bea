use serde::{Deserialize, Serialize};

use super::oa::OaModel;
use crate::cohort::Cohort;
use crate::error::{GaitError, Result};
use crate::fpca::{rmse, FpcaModel};
use crate::variable::{VariableId, VariableSet};

/// Per-curve reconstruction RMSE (degrees) and its per-subject mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationError {
    pub variables: Vec<VariableId>,
    /// N rows, one entry per variable.
    pub per_variable: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl ApproximationError {
    pub fn overall_mean(&self) -> f64 {
        self.mean.iter().sum::<f64>() / self.mean.len() as f64
    }
}

fn finish(variables: Vec<VariableId>, per_variable: Vec<Vec<f64>>) -> ApproximationError {
    let mean = per_variable
        .iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect();
    ApproximationError {
        variables,
        per_variable,
        mean,
    }
}

/// Reconstruct every curve from all retained components of its variable's model.
pub fn fpca_approximation_error(cohort: &Cohort, models: &[FpcaModel]) -> Result<ApproximationError> {
    let variables = models
        .iter()
        .map(|m| {
            m.variable
                .ok_or_else(|| GaitError::arg("approximation error needs models tagged with a variable"))
        })
        .collect::<Result<Vec<_>>>()?;
    for v in &variables {
        cohort.select(&VariableSet::single(*v))?;
    }
    let mut rows = Vec::with_capacity(cohort.len());
    for s in cohort.subjects() {
        let mut row = Vec::with_capacity(models.len());
        for (m, v) in models.iter().zip(&variables) {
            let curve = &s.curves[v].values;
            let scores = m.project(curve)?;
            let approx = m.reconstruct_from_scores(&scores, m.n_components())?;
            row.push(rmse(curve, &approx)?);
        }
        rows.push(row);
    }
    Ok(finish(variables, rows))
}

/// Reconstruct every stacked vector from the retained OA components.
pub fn oa_approximation_error(cohort: &Cohort, model: &OaModel) -> Result<ApproximationError> {
    let t = cohort.grid().num_points();
    if t != model.grid_points {
        return Err(GaitError::arg(format!(
            "model was fitted on {} samples per curve, cohort has {t}",
            model.grid_points
        )));
    }
    let set_members = model.variables.clone();
    let mut rows = Vec::with_capacity(cohort.len());
    for s in cohort.subjects() {
        let mut stacked = Vec::with_capacity(t * set_members.len());
        for v in &set_members {
            let c = s
                .curve(*v)
                .ok_or_else(|| GaitError::data(format!("subject `{}` has no curve for {v}", s.subject_id)))?;
            stacked.extend_from_slice(c);
        }
        let approx = model.reconstruct(&stacked)?;
        let row = (0..set_members.len())
            .map(|u| rmse(&stacked[u * t..(u + 1) * t], &approx[u * t..(u + 1) * t]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(finish(set_members, rows))
}
