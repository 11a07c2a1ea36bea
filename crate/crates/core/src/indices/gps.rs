use serde::{Deserialize, Serialize};

use super::check_mask;
use crate::cohort::Cohort;
use crate::error::Result;
use crate::variable::{VariableId, VariableSet};

/// Gait Variable Scores and the Gait Profile Score over one variable set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitProfile {
    pub variables: Vec<VariableId>,
    /// N rows, one entry per variable.
    pub gvs: Vec<Vec<f64>>,
    pub gps: Vec<f64>,
}

/// Pointwise mean of the healthy curves for each variable.
pub fn healthy_mean_curves(cohort: &Cohort, variables: &[VariableId]) -> Result<Vec<Vec<f64>>> {
    let mask = cohort.healthy_mask();
    let healthy = check_mask(&mask, cohort.len(), 1)?;
    let t = cohort.grid().num_points();
    let nh = healthy.len() as f64;
    let subjects = cohort.subjects();
    Ok(variables
        .iter()
        .map(|v| {
            (0..t)
                .map(|l| {
                    healthy
                        .iter()
                        .map(|&i| subjects[i].curves[v].values[l])
                        .sum::<f64>()
                        / nh
                })
                .collect()
        })
        .collect())
}

/// RMS difference between a curve and a reference curve over the grid.
pub fn gvs(curve: &[f64], reference: &[f64]) -> f64 {
    let ss: f64 = curve.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    (ss / curve.len() as f64).sqrt()
}

pub fn gvs_gps(cohort: &Cohort, set: &VariableSet) -> Result<GaitProfile> {
    cohort.select(set)?;
    let vars = set.members().to_vec();
    let refs = healthy_mean_curves(cohort, &vars)?;
    let mut all_gvs = Vec::with_capacity(cohort.len());
    let mut all_gps = Vec::with_capacity(cohort.len());
    for s in cohort.subjects() {
        let row: Vec<f64> = vars
            .iter()
            .zip(&refs)
            .map(|(v, r)| gvs(&s.curves[v].values, r))
            .collect();
        let gps = (row.iter().map(|g| g * g).sum::<f64>() / row.len() as f64).sqrt();
        all_gvs.push(row);
        all_gps.push(gps);
    }
    Ok(GaitProfile {
        variables: vars,
        gvs: all_gvs,
        gps: all_gps,
    })
}
