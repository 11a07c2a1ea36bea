use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::check_mask;
use crate::cohort::Cohort;
use crate::error::{GaitError, Result};
use crate::linalg::{argmax_abs, sym_eigen_desc};
use crate::variable::{VariableId, VariableSet};

/// Eigenvalues at or above this (of the healthy correlation matrix) are kept.
const KAISER_CUTOFF: f64 = 1.0 - 1e-10;

/// Principal components of the healthy subjects' standardised stacked
/// curves, with the healthy score moments used to score abnormality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OaModel {
    pub variables: Vec<VariableId>,
    pub grid_points: usize,
    pub column_mean: Vec<f64>,
    /// Healthy column standard deviations; zero-variance columns use 1.
    pub column_scale: Vec<f64>,
    pub zero_variance_columns: usize,
    /// K unit vectors of length M.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub healthy_score_mean: Vec<f64>,
    pub healthy_score_sd: Vec<f64>,
}

fn stacked_rows(cohort: &Cohort, set: &VariableSet) -> Result<Vec<Vec<f64>>> {
    let view = cohort.select(set)?;
    Ok((0..cohort.len()).map(|i| view.stacked(i)).collect())
}

pub fn fit_oa(cohort: &Cohort, set: &VariableSet) -> Result<OaModel> {
    let rows = stacked_rows(cohort, set)?;
    let healthy = check_mask(&cohort.healthy_mask(), cohort.len(), 2)?;
    let m = rows.first().map_or(0, Vec::len);
    let nh = healthy.len();

    let mut column_mean = vec![0.0; m];
    for &i in &healthy {
        for (acc, v) in column_mean.iter_mut().zip(&rows[i]) {
            *acc += v;
        }
    }
    column_mean.iter_mut().for_each(|v| *v /= nh as f64);
    let mut zero_variance_columns = 0;
    let column_scale: Vec<f64> = (0..m)
        .map(|c| {
            let ss: f64 = healthy
                .iter()
                .map(|&i| (rows[i][c] - column_mean[c]).powi(2))
                .sum();
            let sd = (ss / (nh - 1) as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                zero_variance_columns += 1;
                1.0
            }
        })
        .collect();
    if zero_variance_columns > 0 {
        log::warn!("{zero_variance_columns} stacked column(s) have zero healthy variance; left unscaled");
    }

    let g = DMatrix::from_fn(nh, m, |r, c| {
        (rows[healthy[r]][c] - column_mean[c]) / column_scale[c]
    });
    // the N_H x N_H Gram matrix shares its nonzero spectrum with the M x M
    // correlation matrix
    let gram = (&g * g.transpose()) / (nh - 1) as f64;
    let eig = sym_eigen_desc(&gram);
    let kept = eig.values.iter().take_while(|&&v| v >= KAISER_CUTOFF).count();
    if kept == 0 {
        return Err(GaitError::degenerate(
            "healthy correlation matrix has no eigenvalue >= 1",
        ));
    }

    let mut components = Vec::with_capacity(kept);
    let mut healthy_score_mean = Vec::with_capacity(kept);
    let mut healthy_score_sd = Vec::with_capacity(kept);
    for k in 0..kept {
        let u = eig.vectors.column(k);
        let norm = ((nh - 1) as f64 * eig.values[k]).sqrt();
        let mut r: Vec<f64> = (g.transpose() * u).iter().map(|v| v / norm).collect();
        let pivot = argmax_abs(r.iter().copied());
        if r[pivot] < 0.0 {
            r.iter_mut().for_each(|v| *v = -*v);
        }
        let scores: Vec<f64> = (0..nh).map(|i| (0..m).map(|c| g[(i, c)] * r[c]).sum()).collect();
        let mean = scores.iter().sum::<f64>() / nh as f64;
        let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nh - 1) as f64).sqrt();
        components.push(r);
        healthy_score_mean.push(mean);
        healthy_score_sd.push(sd);
    }

    Ok(OaModel {
        variables: set.members().to_vec(),
        grid_points: cohort.grid().num_points(),
        column_mean,
        column_scale,
        zero_variance_columns,
        components,
        eigenvalues: eig.values[..kept].to_vec(),
        healthy_score_mean,
        healthy_score_sd,
    })
}

impl OaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    fn check_len(&self, stacked: &[f64]) -> Result<()> {
        if stacked.len() != self.column_mean.len() {
            return Err(GaitError::arg(format!(
                "stacked vector has {} entries, model expects {}",
                stacked.len(),
                self.column_mean.len()
            )));
        }
        Ok(())
    }

    /// Principal component scores of a stacked vector.
    pub fn project(&self, stacked: &[f64]) -> Result<Vec<f64>> {
        self.check_len(stacked)?;
        let z: Vec<f64> = stacked
            .iter()
            .zip(&self.column_mean)
            .zip(&self.column_scale)
            .map(|((q, mu), s)| (q - mu) / s)
            .collect();
        Ok(self
            .components
            .iter()
            .map(|r| z.iter().zip(r).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Mean absolute standardised component score.
    pub fn abnormality(&self, stacked: &[f64]) -> Result<f64> {
        let s = self.project(stacked)?;
        let total: f64 = s
            .iter()
            .zip(&self.healthy_score_mean)
            .zip(&self.healthy_score_sd)
            .map(|((s, m), sd)| ((s - m) / sd).abs())
            .sum();
        Ok(total / s.len() as f64)
    }

    /// Back-transform of the retained components to the original units.
    pub fn reconstruct(&self, stacked: &[f64]) -> Result<Vec<f64>> {
        let s = self.project(stacked)?;
        let mut z = vec![0.0; stacked.len()];
        for (sk, r) in s.iter().zip(&self.components) {
            for (zi, ri) in z.iter_mut().zip(r) {
                *zi += sk * ri;
            }
        }
        Ok(z.iter()
            .zip(&self.column_mean)
            .zip(&self.column_scale)
            .map(|((z, mu), s)| mu + s * z)
            .collect())
    }
}

/// Overall Abnormality of every subject, reference fitted on the healthy subjects.
pub fn oa(cohort: &Cohort, set: &VariableSet) -> Result<Vec<f64>> {
    let model = fit_oa(cohort, set)?;
    let rows = stacked_rows(cohort, set)?;
    rows.iter().map(|r| model.abnormality(r)).collect()
}
