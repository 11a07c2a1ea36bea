use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// Eigenvectors are the columns of `vectors`.
#[derive(Debug, Clone)]
pub(crate) struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with descending order. Equal eigenvalues keep
/// the order the solver produced them in.
pub(crate) fn sym_eigen_desc(m: &DMatrix<f64>) -> SortedEigen {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    SortedEigen { values, vectors }
}

/// Index of the entry with the largest magnitude; earliest index wins ties.
pub(crate) fn argmax_abs(v: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, x) in v.into_iter().enumerate() {
        if x.abs() > best_abs {
            best = i;
            best_abs = x.abs();
        }
    }
    best
}

/// Number of leading eigenvalues needed for the cumulative proportion of
/// `positive` to reach `omega`. `positive` must be sorted descending and
/// strictly positive. Returns the cumulative proportions as well.
pub(crate) fn pve_truncation(positive: &[f64], omega: f64) -> (usize, Vec<f64>) {
    let total: f64 = positive.iter().sum();
    let mut cum = Vec::with_capacity(positive.len());
    let mut acc = 0.0;
    for &v in positive {
        acc += v;
        cum.push(acc / total);
    }
    if let Some(last) = cum.last_mut() {
        // the full spectrum explains everything by definition
        *last = 1.0;
    }
    let k = cum
        .iter()
        .position(|&c| c >= omega - 1e-12)
        .map_or(positive.len(), |i| i + 1);
    (k, cum)
}
