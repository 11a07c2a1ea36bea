use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use super::{log_distance_to_healthy, standardize_by_healthy, LogDistance};
use crate::cohort::Cohort;
use crate::error::{GaitError, Result};
use crate::linalg::argmax_abs;
use crate::variable::{Joint, Side, VariableSet};

/// Number of gait features in the published basis.
pub const GDI_FEATURES: usize = 15;
/// Samples per variable the published basis was built on.
pub const GDI_GRID_POINTS: usize = 51;

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    PublishedSupplement,
    SurrogateSvd,
}

impl BasisSource {
    pub fn tag(self) -> &'static str {
        match self {
            BasisSource::PublishedSupplement => "published_supplement",
            BasisSource::SurrogateSvd => "surrogate_svd",
        }
    }
}

/// Orthonormal columns spanning the gait-feature space; rows follow the nine
/// joints of one side in canonical order, each sampled on `grid_points`.
#[derive(Debug, Clone, PartialEq)]
pub struct GdiFeatureBasis {
    matrix: DMatrix<f64>,
    source: BasisSource,
}

impl GdiFeatureBasis {
    pub fn from_matrix(matrix: DMatrix<f64>, source: BasisSource) -> Result<Self> {
        let rows = matrix.nrows();
        if rows == 0 || rows % Joint::ALL.len() != 0 || rows / Joint::ALL.len() < 2 {
            return Err(GaitError::data(format!(
                "feature basis has {rows} rows; expected 9 variables x T samples"
            )));
        }
        if matrix.ncols() == 0 || matrix.ncols() > rows {
            return Err(GaitError::data(format!(
                "feature basis has {} columns for {rows} rows",
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(GaitError::data("feature basis contains non-finite entries"));
        }
        let gram = matrix.transpose() * &matrix;
        let worst = (0..gram.nrows())
            .flat_map(|r| (0..gram.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| (gram[(r, c)] - if r == c { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if worst > ORTHONORMAL_TOL {
            return Err(GaitError::data(format!(
                "feature basis columns are not orthonormal (max |F'F - I| = {worst:.3e})"
            )));
        }
        Ok(GdiFeatureBasis { matrix, source })
    }

    /// Headerless CSV, one row per stacked sample, one column per feature.
    pub fn read_csv<R: Read>(reader: R, source: BasisSource) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        let mut ncols = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            match ncols {
                None => ncols = Some(rec.len()),
                Some(c) if c != rec.len() => {
                    return Err(GaitError::data(format!(
                        "feature basis line {} has {} fields, expected {c}",
                        line + 1,
                        rec.len()
                    )))
                }
                _ => {}
            }
            for (col, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    GaitError::parse(format!(
                        "feature basis line {}, column {}: `{field}` is not a number",
                        line + 1,
                        col + 1
                    ))
                })?;
                values.push(v);
            }
        }
        let ncols = ncols.ok_or_else(|| GaitError::data("feature basis file is empty"))?;
        let nrows = values.len() / ncols;
        Self::from_matrix(DMatrix::from_row_slice(nrows, ncols, &values), source)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), BasisSource::PublishedSupplement)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for r in 0..self.matrix.nrows() {
            w.write_record(self.matrix.row(r).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Leading left singular vectors of the healthy subjects' stacked
    /// 9-variable vectors, pooled over every side fully present in the
    /// cohort. When the healthy data have fewer than `n_features`
    /// non-negligible directions, the basis is completed with coordinate
    /// directions by Gram-Schmidt.
    pub fn surrogate(cohort: &Cohort, n_features: usize) -> Result<Self> {
        let t = cohort.grid().num_points();
        let m = Joint::ALL.len() * t;
        if n_features == 0 || n_features > m {
            return Err(GaitError::arg(format!(
                "n_features must be in 1..={m}, got {n_features}"
            )));
        }
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for side in Side::BOTH {
            if cohort.select(&VariableSet::leg9(side)).is_err() {
                continue;
            }
            let stacked = gdi_stacked(cohort, side)?;
            for (i, s) in cohort.subjects().iter().enumerate() {
                if s.healthy {
                    columns.push(stacked.row(i).iter().copied().collect());
                }
            }
        }
        if columns.is_empty() {
            return Err(GaitError::data(
                "surrogate feature basis needs healthy subjects with all nine variables of a side",
            ));
        }
        let g = DMatrix::from_fn(m, columns.len(), |r, c| columns[c][r]);
        let svd = SVD::new(g, true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let smax = svd.singular_values[order[0]];

        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n_features);
        for &c in &order {
            if basis.len() == n_features || svd.singular_values[c] <= 1e-10 * smax {
                break;
            }
            let mut v = u.column(c).into_owned();
            let pivot = argmax_abs(v.iter().copied());
            if v[pivot] < 0.0 {
                v.neg_mut();
            }
            basis.push(v);
        }
        if basis.len() < n_features {
            log::warn!(
                "healthy data span only {} feature directions; completing to {n_features}",
                basis.len()
            );
            let mut e = 0;
            while basis.len() < n_features && e < m {
                let mut v = DVector::zeros(m);
                v[e] = 1.0;
                e += 1;
                for _ in 0..2 {
                    for b in &basis {
                        let proj = b.dot(&v);
                        v -= b * proj;
                    }
                }
                let norm = v.norm();
                if norm > 1e-6 {
                    basis.push(v / norm);
                }
            }
        }
        let matrix = DMatrix::from_columns(&basis);
        Self::from_matrix(matrix, BasisSource::SurrogateSvd)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }

    /// Samples per variable the basis expects.
    pub fn grid_points(&self) -> usize {
        self.matrix.nrows() / Joint::ALL.len()
    }
}

/// N x 9T matrix of one side's nine curves, concatenated in canonical joint order.
pub fn gdi_stacked(cohort: &Cohort, side: Side) -> Result<DMatrix<f64>> {
    let set = VariableSet::leg9(side);
    let view = cohort.select(&set)?;
    let t = cohort.grid().num_points();
    let rows: Vec<Vec<f64>> = (0..cohort.len()).map(|i| view.stacked(i)).collect();
    Ok(DMatrix::from_fn(cohort.len(), Joint::ALL.len() * t, |i, c| {
        rows[i][c]
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdiResult {
    pub side: Side,
    /// `log` distance of the feature vector to the healthy mean.
    pub gdi: LogDistance,
    /// `100 - 10 z` with `z` the healthy-standardised log distance.
    pub sgdi: Vec<f64>,
    pub basis_source: BasisSource,
}

pub fn gdi(cohort: &Cohort, side: Side, basis: &GdiFeatureBasis) -> Result<GdiResult> {
    let t = cohort.grid().num_points();
    if basis.grid_points() != t {
        return Err(GaitError::arg(format!(
            "feature basis expects {} samples per curve, cohort has {t}; resample first",
            basis.grid_points()
        )));
    }
    let q = gdi_stacked(cohort, side)?;
    let features = q * basis.matrix();
    let mask = cohort.healthy_mask();
    let gdi = log_distance_to_healthy(&features, &mask)?;
    let z = standardize_by_healthy(&gdi.values, &mask)?;
    Ok(GdiResult {
        side,
        sgdi: z.iter().map(|z| 100.0 - 10.0 * z).collect(),
        gdi,
        basis_source: basis.source(),
    })
}
