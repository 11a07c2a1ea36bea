//! Univariate functional PCA on a dense common grid, Karhunen-Loeve
//! reconstruction and reconstruction error.
//!
//! The covariance surface is estimated on the grid and discretized with
//! trapezoidal weights `w` on a unit-length cycle. The eigenproblem solved is
//! `W^{1/2} C W^{1/2} v = lambda v`, and eigenfunctions are `phi = W^{-1/2} v`,
//! so that `sum_l w_l phi_j(t_l) phi_k(t_l) = delta_jk`.
//!
//! Scores are plain quadrature inner products of the centered curves with the
//! eigenfunctions (no conditional-expectation shrinkage).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};
use crate::grid::GridSpec;
use crate::linalg::{argmax_abs, pve_truncation, sym_eigen_desc};
use crate::variable::VariableId;

/// Tag stored with every model describing the eigenfunction sign rule.
pub const SIGN_CONVENTION: &str = "max_abs_positive_earliest";

/// Relative cutoff below which eigenvalues are treated as zero.
pub(crate) const EIGEN_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Raw sample covariance on the grid.
    #[default]
    None,
    /// Covariance surface smoothed with a second-difference roughness penalty,
    /// penalty weight chosen by generalized cross-validation.
    Penalized,
}

/// How many components to retain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest count whose cumulative PVE reaches the threshold.
    Pve(f64),
    /// Exactly this many (must not exceed the positive spectrum).
    Components(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    ExactGrid,
    Penalized { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<VariableId>,
    pub grid: GridSpec,
    pub mean: Vec<f64>,
    /// K rows of length T.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub noise_variance: f64,
    /// N rows of length K.
    pub scores: Vec<Vec<f64>>,
    /// Cumulative proportion of variance explained, length K.
    pub pve: Vec<f64>,
    pub omega: f64,
    /// Size of the positive eigenvalue spectrum; the largest admissible K.
    pub available_components: usize,
    pub sign_convention: String,
    pub estimator: Estimator,
}

/// Pointwise mean over all rows and the centered rows.
pub fn center(curves: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = curves.nrows();
    if n < 2 {
        return Err(GaitError::arg(format!(
            "centering needs at least 2 curves, got {n}"
        )));
    }
    let mean: Vec<f64> = curves
        .column_iter()
        .map(|col| col.iter().sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, curves.ncols(), |i, l| curves[(i, l)] - mean[l]);
    Ok((mean, centered))
}

/// Fit with the cumulative-PVE truncation rule.
pub fn fit_univariate_fpca(
    curves: &DMatrix<f64>,
    grid: GridSpec,
    omega: f64,
    smoothing: Smoothing,
) -> Result<FpcaModel> {
    fit_fpca(curves, grid, Truncation::Pve(omega), smoothing)
}

pub fn fit_fpca(
    curves: &DMatrix<f64>,
    grid: GridSpec,
    truncation: Truncation,
    smoothing: Smoothing,
) -> Result<FpcaModel> {
    let t = grid.num_points();
    if curves.ncols() != t {
        return Err(GaitError::arg(format!(
            "curves have {} samples, grid has {t}",
            curves.ncols()
        )));
    }
    let omega = match truncation {
        Truncation::Pve(omega) => {
            check_omega(omega)?;
            omega
        }
        Truncation::Components(k) if k == 0 => {
            return Err(GaitError::arg("at least one component must be retained"))
        }
        Truncation::Components(_) => f64::NAN,
    };
    let n = curves.nrows();
    let (mean, centered) = center(curves)?;

    let weights = grid.quadrature_weights();
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();

    let mut cov = centered.transpose() * &centered / (n - 1) as f64;
    let (estimator, noise_from_smoothing) = match smoothing {
        Smoothing::None => (Estimator::ExactGrid, None),
        Smoothing::Penalized => {
            let (smoothed, lambda) = smooth_covariance(&cov);
            let noise = (0..t).map(|l| cov[(l, l)] - smoothed[(l, l)]).sum::<f64>() / t as f64;
            cov = smoothed;
            (Estimator::Penalized { lambda }, Some(noise.max(0.0)))
        }
    };

    let weighted = DMatrix::from_fn(t, t, |a, b| sqrt_w[a] * cov[(a, b)] * sqrt_w[b]);
    let trace: f64 = weighted.diagonal().iter().sum();
    let second_moment: f64 = curves
        .column_iter()
        .zip(&weights)
        .map(|(col, w)| w * col.iter().map(|x| x * x).sum::<f64>() / n as f64)
        .sum();
    if !(trace > 1e-24 * second_moment.max(f64::MIN_POSITIVE)) {
        return Err(GaitError::degenerate(
            "all curves are identical: the covariance surface is zero",
        ));
    }

    let eig = sym_eigen_desc(&weighted);
    let positive: Vec<f64> = eig
        .values
        .iter()
        .copied()
        .take_while(|&v| v > EIGEN_REL_TOL * trace)
        .collect();
    let available = positive.len();
    let (k, cum) = pve_truncation(&positive, if omega.is_nan() { 1.0 } else { omega });
    let k = match truncation {
        Truncation::Pve(_) => k,
        Truncation::Components(k) if k > available => {
            return Err(GaitError::arg(format!(
                "requested {k} components but only {available} have positive variance"
            )))
        }
        Truncation::Components(k) => k,
    };
    // fixed-count fits record the PVE they actually reach
    let omega = if omega.is_nan() { cum[k - 1] } else { omega };

    let eigenfunctions: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut phi: Vec<f64> = (0..t).map(|l| eig.vectors[(l, c)] / sqrt_w[l]).collect();
            let pivot = argmax_abs(phi.iter().copied());
            if phi[pivot] < 0.0 {
                phi.iter_mut().for_each(|x| *x = -*x);
            }
            phi
        })
        .collect();

    let noise_variance = noise_from_smoothing.unwrap_or_else(|| {
        // residual eigenvalues are in quadrature units; an interior weight is
        // 1/(T-1), so rescale to per-sample variance
        let residual = &positive[k..];
        if residual.is_empty() {
            0.0
        } else {
            residual.iter().sum::<f64>() / residual.len() as f64 * (t - 1) as f64
        }
    });

    let mut model = FpcaModel {
        variable: None,
        grid,
        mean,
        eigenfunctions,
        eigenvalues: positive[..k].to_vec(),
        noise_variance,
        scores: Vec::new(),
        pve: cum[..k].to_vec(),
        omega,
        available_components: available,
        sign_convention: SIGN_CONVENTION.to_string(),
        estimator,
    };
    model.scores = (0..n)
        .map(|i| model.project_centered(centered.row(i).iter().copied()))
        .collect();
    Ok(model)
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(GaitError::arg(format!("omega must lie in (0, 1], got {omega}")));
    }
    Ok(())
}

impl FpcaModel {
    pub fn n_components(&self) -> usize {
        self.eigenfunctions.len()
    }

    pub fn n_subjects(&self) -> usize {
        self.scores.len()
    }

    /// Scores as an N x K matrix.
    pub fn score_matrix(&self) -> DMatrix<f64> {
        let k = self.n_components();
        DMatrix::from_fn(self.scores.len(), k, |i, c| self.scores[i][c])
    }

    fn project_centered(&self, centered: impl Iterator<Item = f64>) -> Vec<f64> {
        let w = self.grid.quadrature_weights();
        let x: Vec<f64> = centered.zip(&w).map(|(v, w)| v * w).collect();
        self.eigenfunctions
            .iter()
            .map(|phi| x.iter().zip(phi).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Scores of a (possibly new) curve on this model's eigenfunctions.
    pub fn project(&self, curve: &[f64]) -> Result<Vec<f64>> {
        if curve.len() != self.mean.len() {
            return Err(GaitError::arg(format!(
                "curve has {} samples, model grid has {}",
                curve.len(),
                self.mean.len()
            )));
        }
        Ok(self.project_centered(curve.iter().zip(&self.mean).map(|(x, m)| x - m)))
    }

    /// Karhunen-Loeve approximation of subject `subject` from its leading
    /// `num_components` scores.
    pub fn reconstruct(&self, subject: usize, num_components: usize) -> Result<Vec<f64>> {
        let scores = self.scores.get(subject).ok_or_else(|| {
            GaitError::arg(format!(
                "subject index {subject} out of range (N = {})",
                self.scores.len()
            ))
        })?;
        self.reconstruct_from_scores(scores, num_components)
    }

    pub fn reconstruct_from_scores(&self, scores: &[f64], num_components: usize) -> Result<Vec<f64>> {
        if num_components == 0 || num_components > self.n_components() {
            return Err(GaitError::arg(format!(
                "num_components must be in 1..={}, got {num_components}",
                self.n_components()
            )));
        }
        if scores.len() < num_components {
            return Err(GaitError::arg("score vector shorter than num_components"));
        }
        let mut out = self.mean.clone();
        for (xi, phi) in scores.iter().zip(&self.eigenfunctions).take(num_components) {
            for (o, p) in out.iter_mut().zip(phi) {
                *o += xi * p;
            }
        }
        Ok(out)
    }
}

/// Root mean square difference over grid points.
pub fn rmse(observed: &[f64], approx: &[f64]) -> Result<f64> {
    if observed.len() != approx.len() {
        return Err(GaitError::arg(format!(
            "rmse length mismatch: {} vs {}",
            observed.len(),
            approx.len()
        )));
    }
    if observed.is_empty() {
        return Err(GaitError::arg("rmse of empty vectors"));
    }
    let ss: f64 = observed.iter().zip(approx).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss / observed.len() as f64).sqrt())
}

/// RMSE over the cycle in the quadrature norm, `sqrt(sum_l w_l (a_l - b_l)^2)`
/// with the weights summing to one. Karhunen-Loeve truncation error decays
/// monotonically in this norm; the plain grid [`rmse`] need not.
pub fn quadrature_rmse(observed: &[f64], approx: &[f64], grid: GridSpec) -> Result<f64> {
    if observed.len() != approx.len() || observed.len() != grid.num_points() {
        return Err(GaitError::arg(format!(
            "quadrature_rmse length mismatch: {} vs {} on a {}-point grid",
            observed.len(),
            approx.len(),
            grid.num_points()
        )));
    }
    let ss: f64 = grid
        .quadrature_weights()
        .iter()
        .zip(observed.iter().zip(approx))
        .map(|(w, (a, b))| w * (a - b).powi(2))
        .sum();
    Ok(ss.sqrt())
}

/// Mean of per-variable RMSEs for one subject.
pub fn mean_rmse<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (obs, approx) in pairs {
        sum += rmse(obs, approx)?;
        count += 1;
    }
    if count == 0 {
        return Err(GaitError::arg("no variables to average"));
    }
    Ok(sum / count as f64)
}

/// Tensor-product Whittaker smoothing of a covariance surface,
/// `S C S` with `S = (I + lambda D'D)^{-1}` and `D` the second-difference
/// operator. Lambda minimizes the GCV score of applying `S` to the centered
/// curves themselves, which is computable from `C` alone. Returns the
/// smoothed surface and the selected lambda.
fn smooth_covariance(cov: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let t = cov.nrows();
    if t < 3 {
        return (cov.clone(), 0.0);
    }
    let mut d = DMatrix::zeros(t - 2, t);
    for r in 0..t - 2 {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    let penalty = d.transpose() * d;
    let eig = sym_eigen_desc(&penalty);
    let q = &eig.vectors;
    let rotated = q.transpose() * cov * q;
    let tf = t as f64;

    let mut best = (f64::INFINITY, 0.0, Vec::new());
    for step in 0..=48 {
        let lambda = 10f64.powf(-6.0 + 0.25 * step as f64);
        let s: Vec<f64> = eig
            .values
            .iter()
            .map(|&e| 1.0 / (1.0 + lambda * e.max(0.0)))
            .collect();
        let tr: f64 = s.iter().sum();
        // mean squared residual per sample, up to the constant (N-1)/N
        let rss: f64 = (0..t)
            .map(|a| rotated[(a, a)] * (1.0 - s[a]).powi(2))
            .sum::<f64>()
            / tf;
        let denom = 1.0 - tr / tf;
        let gcv = rss / (denom * denom);
        if gcv < best.0 {
            best = (gcv, lambda, s);
        }
    }
    let (_, lambda, s) = best;
    let smoothed_rot = DMatrix::from_fn(t, t, |a, b| rotated[(a, b)] * s[a] * s[b]);
    (q * smoothed_rot * q.transpose(), lambda)
}
