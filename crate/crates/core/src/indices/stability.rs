use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fgdi::fgdi;
use crate::cohort::{curve_matrix, Cohort};
use crate::error::{GaitError, Result};
use crate::fpca::{fit_fpca, fit_univariate_fpca, Smoothing, Truncation};
use crate::mfpca::{fit_mfpca, fit_mfpca_with, stack_scores};
use crate::variable::{VariableId, VariableSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<VariableId>,
    pub optimal_components: usize,
    /// One entry per offset; `None` where the offset leaves the admissible range.
    pub deltas: Vec<Option<f64>>,
}

/// `100 * mean(FGDI at the PVE-chosen count - FGDI at count + offset)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub offsets: Vec<i32>,
    pub rows: Vec<StabilityRow>,
    pub warnings: Vec<String>,
}

impl StabilityTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["variable".to_string(), "components".to_string()];
        header.extend(self.offsets.iter().map(|o| format!("delta_{o:+}")));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.label.clone(), r.optimal_components.to_string()];
            rec.extend(
                r.deltas
                    .iter()
                    .map(|d| d.map_or(String::new(), |v| v.to_string())),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_offsets(offsets: &[i32]) -> Result<()> {
    if offsets.is_empty() {
        return Err(GaitError::arg("at least one offset is required"));
    }
    Ok(())
}

/// Fitted count the widest offset can need.
fn widest(optimal: usize, available: usize, offsets: &[i32]) -> usize {
    let max_off = offsets.iter().copied().max().unwrap_or(0).max(0) as usize;
    (optimal + max_off).min(available).max(optimal)
}

/// Deltas from a score matrix whose leading columns are the truncations.
fn deltas_from_scores(
    scores: &DMatrix<f64>,
    healthy: &[bool],
    optimal: usize,
    offsets: &[i32],
    available: usize,
    label: &str,
    warnings: &mut Vec<String>,
) -> Result<Vec<Option<f64>>> {
    let base = fgdi(&scores.columns(0, optimal).into_owned(), healthy)?.values;
    let n = base.len() as f64;
    offsets
        .iter()
        .map(|&off| {
            let k = optimal as i64 + off as i64;
            if k < 1 || k as usize > available {
                warnings.push(format!(
                    "{label}: offset {off:+} gives {k} components, outside 1..={available}; skipped"
                ));
                return Ok(None);
            }
            if off == 0 {
                return Ok(Some(0.0));
            }
            let other = fgdi(&scores.columns(0, k as usize).into_owned(), healthy)?.values;
            let d: f64 = base.iter().zip(&other).map(|(a, b)| a - b).sum::<f64>() / n;
            Ok(Some(100.0 * d))
        })
        .collect()
}

/// One row per variable of `set`, varying the univariate component count.
pub fn stability_per_joint(
    cohort: &Cohort,
    set: &VariableSet,
    omega: f64,
    offsets: &[i32],
    smoothing: Smoothing,
) -> Result<StabilityTable> {
    check_offsets(offsets)?;
    cohort.select(set)?;
    let grid = cohort.grid();
    let healthy = cohort.healthy_mask();
    let rows = set
        .members()
        .par_iter()
        .map(|&v| {
            let curves = curve_matrix(cohort, v);
            let opt = fit_univariate_fpca(&curves, grid, omega, smoothing)?;
            let k_opt = opt.n_components();
            let wide = widest(k_opt, opt.available_components, offsets);
            let model = if wide == k_opt {
                opt.clone()
            } else {
                fit_fpca(&curves, grid, Truncation::Components(wide), smoothing)?
            };
            let mut warnings = Vec::new();
            let label = v.to_string();
            let deltas = deltas_from_scores(
                &model.score_matrix(),
                &healthy,
                k_opt,
                offsets,
                opt.available_components,
                &label,
                &mut warnings,
            )?;
            Ok((
                StabilityRow {
                    label,
                    variable: Some(v),
                    optimal_components: k_opt,
                    deltas,
                },
                warnings,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = StabilityTable {
        offsets: offsets.to_vec(),
        rows: Vec::with_capacity(rows.len()),
        warnings: Vec::new(),
    };
    for (row, w) in rows {
        table.rows.push(row);
        table.warnings.extend(w);
    }
    for w in &table.warnings {
        log::warn!("{w}");
    }
    Ok(table)
}

/// A single row varying the multivariate component count W with every
/// univariate count held at its PVE choice.
pub fn stability_multivariate(
    cohort: &Cohort,
    set: &VariableSet,
    omega: f64,
    offsets: &[i32],
    smoothing: Smoothing,
) -> Result<StabilityTable> {
    check_offsets(offsets)?;
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
    let stack = stack_scores(&models)?;
    let opt = fit_mfpca(&stack, omega)?;
    let w_opt = opt.n_components();
    let wide = widest(w_opt, opt.available_components, offsets);
    let model = if wide == w_opt {
        opt.clone()
    } else {
        fit_mfpca_with(&stack, Truncation::Components(wide))?
    };
    let label = "multivariate".to_string();
    let mut warnings = Vec::new();
    let deltas = deltas_from_scores(
        &model.mscore_matrix(),
        &cohort.healthy_mask(),
        w_opt,
        offsets,
        opt.available_components,
        &label,
        &mut warnings,
    )?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(StabilityTable {
        offsets: offsets.to_vec(),
        rows: vec![StabilityRow {
            label,
            variable: None,
            optimal_components: w_opt,
            deltas,
        }],
        warnings,
    })
}
