//! Cohorts of cycle-normalized kinematic curves.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};
use crate::grid::GridSpec;
use crate::variable::{Side, VariableId, VariableSet};

/// One variable's angle trajectory (degrees) over the gait cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicCurve {
    pub variable: VariableId,
    pub values: Vec<f64>,
}

/// Optional clinical descriptors; every field may be absent independently.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hoehn_yahr: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freezer: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updrs_ii: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updrs_iii: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_level: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amputated_side: Option<Side>,
}

impl ClinicalMetadata {
    pub fn is_empty(&self) -> bool {
        *self == ClinicalMetadata::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub healthy: bool,
    pub curves: BTreeMap<VariableId, KinematicCurve>,
    pub metadata: ClinicalMetadata,
}

impl SubjectRecord {
    pub fn new(subject_id: impl Into<String>, healthy: bool) -> Self {
        SubjectRecord {
            subject_id: subject_id.into(),
            healthy,
            curves: BTreeMap::new(),
            metadata: ClinicalMetadata::default(),
        }
    }

    pub fn with_curve(mut self, variable: VariableId, values: Vec<f64>) -> Self {
        self.curves.insert(variable, KinematicCurve { variable, values });
        self
    }

    pub fn curve(&self, variable: VariableId) -> Option<&[f64]> {
        self.curves.get(&variable).map(|c| c.values.as_slice())
    }
}

/// An immutable, validated collection of subjects sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    grid: GridSpec,
    subjects: Vec<SubjectRecord>,
}

impl Cohort {
    pub fn new(grid: GridSpec, subjects: Vec<SubjectRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &subjects {
            if !seen.insert(s.subject_id.as_str()) {
                return Err(GaitError::data(format!(
                    "duplicate subject_id `{}`",
                    s.subject_id
                )));
            }
            for (var, curve) in &s.curves {
                if curve.variable != *var {
                    return Err(GaitError::data(format!(
                        "subject `{}`: curve keyed {var} is labelled {}",
                        s.subject_id, curve.variable
                    )));
                }
                if curve.values.len() != grid.num_points() {
                    return Err(GaitError::data(format!(
                        "subject `{}`, {var}: {} samples but the grid has {}",
                        s.subject_id,
                        curve.values.len(),
                        grid.num_points()
                    )));
                }
                if let Some(l) = curve.values.iter().position(|v| !v.is_finite()) {
                    return Err(GaitError::data(format!(
                        "subject `{}`, {var}, t{l:03}: non-finite angle",
                        s.subject_id
                    )));
                }
            }
        }
        Ok(Cohort { grid, subjects })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn healthy_mask(&self) -> Vec<bool> {
        self.subjects.iter().map(|s| s.healthy).collect()
    }

    pub fn n_healthy(&self) -> usize {
        self.subjects.iter().filter(|s| s.healthy).count()
    }

    pub fn subject_index(&self, subject_id: &str) -> Option<usize> {
        self.subjects.iter().position(|s| s.subject_id == subject_id)
    }

    pub fn subject(&self, subject_id: &str) -> Option<&SubjectRecord> {
        self.subjects.iter().find(|s| s.subject_id == subject_id)
    }

    /// Variables present for every subject, in canonical order.
    pub fn common_variables(&self) -> Vec<VariableId> {
        VariableId::all()
            .into_iter()
            .filter(|v| self.subjects.iter().all(|s| s.curves.contains_key(v)))
            .collect()
    }

    /// Restrict to the members of `set`. Every subject must carry every member.
    pub fn select(&self, set: &VariableSet) -> Result<CohortView<'_>> {
        for s in &self.subjects {
            for v in set.members() {
                if !s.curves.contains_key(v) {
                    return Err(GaitError::data(format!(
                        "subject `{}` has no curve for {v}",
                        s.subject_id
                    )));
                }
            }
        }
        Ok(CohortView {
            cohort: self,
            members: set.members().to_vec(),
        })
    }

    /// A new cohort holding only the subjects at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Cohort> {
        let subjects = indices
            .iter()
            .map(|&i| {
                self.subjects
                    .get(i)
                    .cloned()
                    .ok_or_else(|| GaitError::arg(format!("subject index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Cohort::new(self.grid, subjects)
    }

    /// Linearly interpolate every curve onto an equally spaced grid of
    /// `target_points` samples. Endpoints are kept exactly, and target samples
    /// that coincide with source samples are copied bit-for-bit.
    pub fn resample(&self, target_points: usize) -> Result<Cohort> {
        if target_points < 2 {
            return Err(GaitError::arg(format!(
                "resample target must be at least 2 points, got {target_points}"
            )));
        }
        let target = GridSpec::new(target_points)?;
        let src_n = self.grid.num_points();
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let curves = s
                    .curves
                    .iter()
                    .map(|(&v, c)| {
                        let values = resample_curve(&c.values, src_n, target_points);
                        (v, KinematicCurve { variable: v, values })
                    })
                    .collect();
                SubjectRecord { curves, ..s.clone() }
            })
            .collect();
        Ok(Cohort {
            grid: target,
            subjects,
        })
    }
}

/// Sample `target` equally spaced points from a curve on `src` equally spaced
/// points. Source positions are tracked as exact rationals `l*(src-1)/(target-1)`.
fn resample_curve(values: &[f64], src: usize, target: usize) -> Vec<f64> {
    let num_scale = src - 1;
    let den = target - 1;
    (0..target)
        .map(|l| {
            let num = l * num_scale;
            let idx = num / den;
            let rem = num % den;
            if rem == 0 {
                values[idx]
            } else {
                let frac = rem as f64 / den as f64;
                values[idx] + (values[idx + 1] - values[idx]) * frac
            }
        })
        .collect()
}

/// A borrowed restriction of a cohort to an ordered variable set.
#[derive(Debug, Clone)]
pub struct CohortView<'a> {
    cohort: &'a Cohort,
    members: Vec<VariableId>,
}

impl<'a> CohortView<'a> {
    pub fn cohort(&self) -> &'a Cohort {
        self.cohort
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.cohort.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cohort.is_empty()
    }

    pub fn curve(&self, subject: usize, variable: VariableId) -> Option<&'a [f64]> {
        if !self.members.contains(&variable) {
            return None;
        }
        self.cohort.subjects.get(subject)?.curve(variable)
    }

    /// N x T matrix of one member variable (row = subject).
    pub fn matrix(&self, variable: VariableId) -> Result<DMatrix<f64>> {
        if !self.members.contains(&variable) {
            return Err(GaitError::arg(format!("{variable} is not in the selected set")));
        }
        Ok(curve_matrix(self.cohort, variable))
    }

    /// Concatenation of the member curves for one subject, in member order.
    pub fn stacked(&self, subject: usize) -> Vec<f64> {
        let s = &self.cohort.subjects[subject];
        self.members
            .iter()
            .flat_map(|v| s.curves[v].values.iter().copied())
            .collect()
    }
}

/// N x T matrix of `variable`; callers have already checked presence.
pub(crate) fn curve_matrix(cohort: &Cohort, variable: VariableId) -> DMatrix<f64> {
    let t = cohort.grid.num_points();
    DMatrix::from_fn(cohort.len(), t, |i, l| {
        cohort.subjects[i].curves[&variable].values[l]
    })
}
