//! Score-based multivariate FPCA: stack per-variable scores and run an
//! eigen-analysis of their joint covariance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};
use crate::fpca::{check_omega, FpcaModel, Truncation, EIGEN_REL_TOL};
use crate::linalg::{argmax_abs, pve_truncation, sym_eigen_desc};
use crate::variable::VariableId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<VariableId>,
    /// Half-open column range `[start, end)`.
    pub start: usize,
    pub end: usize,
}

/// The N x K+ matrix of concatenated univariate scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreStack {
    /// N rows of length K+.
    pub matrix: Vec<Vec<f64>>,
    pub blocks: Vec<ScoreBlock>,
    pub k_plus: usize,
}

impl ScoreStack {
    pub fn n_subjects(&self) -> usize {
        self.matrix.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.matrix.len(), self.k_plus, |i, c| self.matrix[i][c])
    }

    pub fn block(&self, variable: VariableId) -> Option<&ScoreBlock> {
        self.blocks.iter().find(|b| b.variable == Some(variable))
    }

    /// Build a stack directly from a score matrix, as a single block.
    pub fn from_matrix(matrix: &DMatrix<f64>) -> Self {
        ScoreStack {
            matrix: matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            blocks: vec![ScoreBlock {
                variable: None,
                start: 0,
                end: matrix.ncols(),
            }],
            k_plus: matrix.ncols(),
        }
    }

    /// Concatenate already-projected per-variable score rows into one row.
    pub fn stack_row(&self, per_block: &[Vec<f64>]) -> Result<Vec<f64>> {
        if per_block.len() != self.blocks.len() {
            return Err(GaitError::arg("one score vector per block is required"));
        }
        let mut row = Vec::with_capacity(self.k_plus);
        for (b, s) in self.blocks.iter().zip(per_block) {
            if s.len() != b.end - b.start {
                return Err(GaitError::arg("score vector length does not match its block"));
            }
            row.extend_from_slice(s);
        }
        Ok(row)
    }
}

/// Concatenate the score matrices of `models`, laid out in canonical
/// variable order (models without a variable keep their relative order and
/// come first).
pub fn stack_scores(models: &[FpcaModel]) -> Result<ScoreStack> {
    let first = models
        .first()
        .ok_or_else(|| GaitError::arg("no models to stack"))?;
    let n = first.n_subjects();
    if let Some(m) = models.iter().find(|m| m.n_subjects() != n) {
        return Err(GaitError::arg(format!(
            "models disagree on subject count: {n} vs {}",
            m.n_subjects()
        )));
    }
    let mut order: Vec<&FpcaModel> = models.iter().collect();
    order.sort_by_key(|m| m.variable);

    let mut blocks = Vec::with_capacity(order.len());
    let mut start = 0;
    for m in &order {
        let end = start + m.n_components();
        blocks.push(ScoreBlock {
            variable: m.variable,
            start,
            end,
        });
        start = end;
    }
    let matrix = (0..n)
        .map(|i| order.iter().flat_map(|m| m.scores[i].iter().copied()).collect())
        .collect();
    Ok(ScoreStack {
        matrix,
        blocks,
        k_plus: start,
    })
}

/// `Xi' Xi / (N - 1)`.
pub fn joint_covariance(stack: &ScoreStack) -> Result<DMatrix<f64>> {
    let n = stack.n_subjects();
    if n < 2 {
        return Err(GaitError::arg(format!(
            "joint covariance needs at least 2 subjects, got {n}"
        )));
    }
    let xi = stack.to_matrix();
    let z = xi.transpose() * &xi / (n - 1) as f64;
    // exact symmetry: products accumulate in different orders above/below the diagonal
    Ok((&z + z.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfpcaModel {
    pub source: ScoreStack,
    /// W unit vectors of length K+.
    pub eigenvectors: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// `((N-1) nu_w)^{1/2} (kappa_w' Xi' Xi kappa_w)^{-1/2}` per component.
    pub prefactors: Vec<f64>,
    /// N rows of length W.
    pub mscores: Vec<Vec<f64>>,
    /// Cumulative PVE, length W.
    pub pve: Vec<f64>,
    pub omega: f64,
    pub available_components: usize,
}

pub fn fit_mfpca(stack: &ScoreStack, omega: f64) -> Result<MfpcaModel> {
    fit_mfpca_with(stack, Truncation::Pve(omega))
}

pub fn fit_mfpca_with(stack: &ScoreStack, truncation: Truncation) -> Result<MfpcaModel> {
    let omega = match truncation {
        Truncation::Pve(omega) => {
            check_omega(omega)?;
            omega
        }
        Truncation::Components(0) => return Err(GaitError::arg("at least one component must be retained")),
        Truncation::Components(_) => f64::NAN,
    };
    let n = stack.n_subjects();
    let z = joint_covariance(stack)?;
    let trace: f64 = z.diagonal().iter().sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(GaitError::degenerate(
            "joint score covariance is numerically zero",
        ));
    }
    let eig = sym_eigen_desc(&z);
    let positive: Vec<f64> = eig
        .values
        .iter()
        .copied()
        .take_while(|&v| v > EIGEN_REL_TOL * trace)
        .collect();
    let available = positive.len();
    let (pve_w, cum) = pve_truncation(&positive, if omega.is_nan() { 1.0 } else { omega });

    let w = match truncation {
        Truncation::Pve(_) => {
            let k_plus = stack.k_plus;
            if k_plus >= 2 && pve_w >= k_plus {
                log::warn!(
                    "omega = {omega} needs all {k_plus} components; keeping {} so that W < K+",
                    k_plus - 1
                );
                k_plus - 1
            } else {
                pve_w
            }
        }
        Truncation::Components(w) if w > available => {
            return Err(GaitError::arg(format!(
                "requested {w} components but only {available} have positive variance"
            )))
        }
        Truncation::Components(w) => w,
    };
    let omega = if omega.is_nan() { cum[w - 1] } else { omega };

    let xi = stack.to_matrix();
    let xtx = xi.transpose() * &xi;
    let mut eigenvectors = Vec::with_capacity(w);
    let mut prefactors = Vec::with_capacity(w);
    for c in 0..w {
        let mut kappa: Vec<f64> = eig.vectors.column(c).iter().copied().collect();
        let pivot = argmax_abs(kappa.iter().copied());
        if kappa[pivot] < 0.0 {
            kappa.iter_mut().for_each(|x| *x = -*x);
        }
        let k = nalgebra::DVector::from_column_slice(&kappa);
        let quad = (k.transpose() * &xtx * &k)[(0, 0)];
        let prefactor = ((n - 1) as f64 * positive[c]).sqrt() / quad.sqrt();
        eigenvectors.push(kappa);
        prefactors.push(prefactor);
    }

    let mut model = MfpcaModel {
        source: stack.clone(),
        eigenvectors,
        eigenvalues: positive[..w].to_vec(),
        prefactors,
        mscores: Vec::new(),
        pve: cum[..w].to_vec(),
        omega,
        available_components: available,
    };
    model.mscores = stack.matrix.iter().map(|row| model.project_row(row)).collect();
    Ok(model)
}

impl MfpcaModel {
    pub fn n_components(&self) -> usize {
        self.eigenvectors.len()
    }

    pub fn mscore_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.mscores.len(), self.n_components(), |i, c| self.mscores[i][c])
    }

    fn project_row(&self, row: &[f64]) -> Vec<f64> {
        self.eigenvectors
            .iter()
            .zip(&self.prefactors)
            .map(|(kappa, pf)| pf * row.iter().zip(kappa).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Multivariate scores for a stacked score row `Xi_i` (length K+).
    pub fn project(&self, stacked_row: &[f64]) -> Result<Vec<f64>> {
        if stacked_row.len() != self.source.k_plus {
            return Err(GaitError::arg(format!(
                "stacked row has {} entries, model expects K+ = {}",
                stacked_row.len(),
                self.source.k_plus
            )));
        }
        Ok(self.project_row(stacked_row))
    }

    /// `Xi kappa_w` without the prefactor; equals the mscores for unit-norm
    /// eigenvectors.
    pub fn simplified_scores(&self) -> DMatrix<f64> {
        let xi = self.source.to_matrix();
        let kappa = DMatrix::from_fn(self.source.k_plus, self.n_components(), |r, c| {
            self.eigenvectors[c][r]
        });
        xi * kappa
    }
}
