//! Fit the per-variable FPCA models and the multivariate combinations a
//! caller asks for, and project cohorts onto them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{curve_matrix, Cohort};
use crate::error::{GaitError, Result};
use crate::fpca::{check_omega, fit_univariate_fpca, FpcaModel, Smoothing};
use crate::grid::GridSpec;
use crate::mfpca::{fit_mfpca, stack_scores, MfpcaModel};
use crate::variable::{Side, VariableId, VariableSet};

pub const MODEL_FORMAT: &str = "gaitdex-pipeline/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Multivariate over the 15-variable set.
    Combined,
    /// Multivariate over the nine left-leg variables.
    Left,
    /// Multivariate over the nine right-leg variables.
    Right,
    /// One univariate index per variable of the 15-variable set.
    PerJoint,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Combined, Mode::Left, Mode::Right, Mode::PerJoint];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Combined => "combined",
            Mode::Left => "left",
            Mode::Right => "right",
            Mode::PerJoint => "per_joint",
        }
    }

    pub fn variable_set(self, pelvis_side: Side) -> VariableSet {
        match self {
            Mode::Combined | Mode::PerJoint => VariableSet::combined15(pelvis_side),
            Mode::Left => VariableSet::leg9(Side::Left),
            Mode::Right => VariableSet::leg9(Side::Right),
        }
    }

    pub fn is_multivariate(self) -> bool {
        self != Mode::PerJoint
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = GaitError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "combined" => Ok(Mode::Combined),
            "left" => Ok(Mode::Left),
            "right" => Ok(Mode::Right),
            "per_joint" | "perjoint" => Ok(Mode::PerJoint),
            other => Err(GaitError::arg(format!(
                "unknown mode `{other}` (expected combined, left, right or per_joint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub omega: f64,
    pub modes: Vec<Mode>,
    pub pelvis_side: Side,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            omega: 0.99,
            modes: Mode::ALL.to_vec(),
            pelvis_side: Side::Left,
            smoothing: Smoothing::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    pub mode: Mode,
    pub variables: Vec<VariableId>,
    /// One model per variable, in `variables` order.
    pub fpca: Vec<FpcaModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfpca: Option<MfpcaModel>,
}

impl ModeFit {
    pub fn fpca_for(&self, v: VariableId) -> Option<&FpcaModel> {
        self.variables.iter().position(|&x| x == v).map(|i| &self.fpca[i])
    }

    /// Total retained univariate components, K+.
    pub fn total_components(&self) -> usize {
        self.fpca.iter().map(FpcaModel::n_components).sum()
    }

    /// Per-variable N x K_u score matrices of `cohort`.
    pub fn variable_scores(&self, cohort: &Cohort) -> Result<Vec<DMatrix<f64>>> {
        self.variables
            .iter()
            .zip(&self.fpca)
            .map(|(v, m)| {
                let rows = cohort
                    .subjects()
                    .iter()
                    .map(|s| {
                        let c = s.curve(*v).ok_or_else(|| {
                            GaitError::data(format!("subject `{}` has no curve for {v}", s.subject_id))
                        })?;
                        m.project(c)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DMatrix::from_fn(rows.len(), m.n_components(), |i, c| rows[i][c]))
            })
            .collect()
    }

    /// N x W multivariate scores of `cohort`. Only for multivariate modes.
    pub fn multivariate_scores(&self, cohort: &Cohort) -> Result<DMatrix<f64>> {
        let mf = self
            .mfpca
            .as_ref()
            .ok_or_else(|| GaitError::arg(format!("mode {} has no multivariate model", self.mode)))?;
        let per_var = self.variable_scores(cohort)?;
        let rows = (0..cohort.len())
            .map(|i| {
                let row: Vec<f64> = per_var
                    .iter()
                    .flat_map(|m| m.row(i).iter().copied().collect::<Vec<_>>())
                    .collect();
                mf.project(&row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(rows.len(), mf.n_components(), |i, c| rows[i][c]))
    }

    /// Scores of the training cohort: mscores for multivariate modes.
    pub fn training_multivariate_scores(&self) -> Option<DMatrix<f64>> {
        self.mfpca.as_ref().map(MfpcaModel::mscore_matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub format: String,
    pub grid: GridSpec,
    pub omega: f64,
    pub pelvis_side: Side,
    pub smoothing: Smoothing,
    pub subject_ids: Vec<String>,
    pub healthy: Vec<bool>,
    pub modes: Vec<ModeFit>,
}

pub fn fit_pipeline(cohort: &Cohort, config: &PipelineConfig) -> Result<PipelineModel> {
    check_omega(config.omega)?;
    if config.modes.is_empty() {
        return Err(GaitError::arg("no modes requested"));
    }
    let mut modes = config.modes.clone();
    modes.sort();
    modes.dedup();

    let mut needed: Vec<VariableId> = Vec::new();
    for m in &modes {
        let set = m.variable_set(config.pelvis_side);
        cohort.select(&set)?;
        needed.extend(set.members());
    }
    needed.sort();
    needed.dedup();

    let grid = cohort.grid();
    let fitted: BTreeMap<VariableId, FpcaModel> = needed
        .par_iter()
        .map(|&v| {
            let mut m = fit_univariate_fpca(&curve_matrix(cohort, v), grid, config.omega, config.smoothing)
                .map_err(|e| match e {
                GaitError::Degenerate(msg) => GaitError::Degenerate(format!("{v}: {msg}")),
                other => other,
            })?;
            m.variable = Some(v);
            Ok((v, m))
        })
        .collect::<Result<_>>()?;

    let mode_fits = modes
        .iter()
        .map(|&mode| {
            let set = mode.variable_set(config.pelvis_side);
            let fpca: Vec<FpcaModel> = set.members().iter().map(|v| fitted[v].clone()).collect();
            let mfpca = if mode.is_multivariate() {
                Some(fit_mfpca(&stack_scores(&fpca)?, config.omega)?)
            } else {
                None
            };
            Ok(ModeFit {
                mode,
                variables: set.members().to_vec(),
                fpca,
                mfpca,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PipelineModel {
        format: MODEL_FORMAT.to_string(),
        grid,
        omega: config.omega,
        pelvis_side: config.pelvis_side,
        smoothing: config.smoothing,
        subject_ids: cohort.subjects().iter().map(|s| s.subject_id.clone()).collect(),
        healthy: cohort.healthy_mask(),
        modes: mode_fits,
    })
}

impl PipelineModel {
    pub fn mode(&self, mode: Mode) -> Option<&ModeFit> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn fitted_modes(&self) -> Vec<Mode> {
        self.modes.iter().map(|m| m.mode).collect()
    }

    /// One line per mode, e.g. `combined: W=50 (K+=99)`.
    pub fn summary(&self) -> Vec<String> {
        self.modes
            .iter()
            .map(|m| match &m.mfpca {
                Some(mf) => format!(
                    "{}: W={} (K+={})",
                    m.mode,
                    mf.n_components(),
                    m.total_components()
                ),
                None => {
                    let ks: Vec<String> = m
                        .variables
                        .iter()
                        .zip(&m.fpca)
                        .map(|(v, f)| format!("{v}={}", f.n_components()))
                        .collect();
                    format!("{}: {}", m.mode, ks.join(" "))
                }
            })
            .collect()
    }

    /// Reject cohorts sampled on another grid.
    pub fn check_grid(&self, cohort: &Cohort) -> Result<()> {
        if cohort.grid() != self.grid {
            return Err(GaitError::arg(format!(
                "cohort has {} samples per curve, model was fitted on {}",
                cohort.grid().num_points(),
                self.grid.num_points()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: PipelineModel = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT {
            return Err(GaitError::parse(format!(
                "unsupported model format `{}` (expected {MODEL_FORMAT})",
                m.format
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
