//! Per-subject index reports and their flat CSV form.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cohort::{ClinicalMetadata, Cohort};
use crate::error::{GaitError, Result};
use crate::indices::{
    fgdi_with_reference, gdi, gvs, gvs_gps, healthy_mean_curves, map_profile_from_models, oa, BasisSource,
    GdiFeatureBasis,
};
use crate::pipeline::{Mode, PipelineModel};
use crate::stats::kendall_tau;
use crate::variable::{Side, VariableSet};

/// Which index families to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSelection {
    pub fgdi: bool,
    pub gdi: bool,
    pub gps: bool,
    pub oa: bool,
}

impl IndexSelection {
    pub fn all() -> Self {
        IndexSelection {
            fgdi: true,
            gdi: true,
            gps: true,
            oa: true,
        }
    }
}

impl Default for IndexSelection {
    fn default() -> Self {
        Self::all()
    }
}

impl FromStr for IndexSelection {
    type Err = GaitError;

    /// Comma-separated list such as `fgdi,gps`.
    fn from_str(s: &str) -> Result<Self> {
        let mut sel = IndexSelection {
            fgdi: false,
            gdi: false,
            gps: false,
            oa: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "fgdi" | "sfgdi" => sel.fgdi = true,
                "gdi" | "sgdi" => sel.gdi = true,
                "gps" | "gvs" => sel.gps = true,
                "oa" => sel.oa = true,
                "all" => sel = IndexSelection::all(),
                other => {
                    return Err(GaitError::arg(format!(
                        "unknown index `{other}` (expected fgdi, gdi, gps, oa)"
                    )))
                }
            }
        }
        if sel
            == (IndexSelection {
                fgdi: false,
                gdi: false,
                gps: false,
                oa: false,
            })
        {
            return Err(GaitError::arg("no indices requested"));
        }
        Ok(sel)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOptions {
    pub indices: IndexSelection,
    /// Required when `indices.gdi` is set.
    pub gdi_basis: Option<GdiFeatureBasis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject_id: String,
    pub healthy: bool,
    #[serde(default, skip_serializing_if = "ClinicalMetadata::is_empty")]
    pub metadata: ClinicalMetadata,
    /// Keyed by mode name.
    #[serde(default)]
    pub fgdi: BTreeMap<String, f64>,
    #[serde(default)]
    pub sfgdi: BTreeMap<String, f64>,
    /// Keyed by side name.
    #[serde(default)]
    pub gdi: BTreeMap<String, f64>,
    #[serde(default)]
    pub sgdi: BTreeMap<String, f64>,
    /// Keyed by variable-set name (`combined`, `left`, `right`).
    #[serde(default)]
    pub gps: BTreeMap<String, f64>,
    #[serde(default)]
    pub oa: BTreeMap<String, f64>,
    /// Keyed by variable (`L_knee_flexion`).
    #[serde(default)]
    pub gvs: BTreeMap<String, f64>,
    /// Per-variable sFGDI, keyed by variable.
    #[serde(default)]
    pub map: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl SubjectReport {
    fn new(subject_id: &str, healthy: bool, metadata: ClinicalMetadata) -> Self {
        SubjectReport {
            subject_id: subject_id.to_string(),
            healthy,
            metadata,
            fgdi: BTreeMap::new(),
            sfgdi: BTreeMap::new(),
            gdi: BTreeMap::new(),
            sgdi: BTreeMap::new(),
            gps: BTreeMap::new(),
            oa: BTreeMap::new(),
            gvs: BTreeMap::new(),
            map: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    fn families(&self) -> [(&'static str, &BTreeMap<String, f64>); 8] {
        [
            ("fgdi", &self.fgdi),
            ("sfgdi", &self.sfgdi),
            ("gdi", &self.gdi),
            ("sgdi", &self.sgdi),
            ("gps", &self.gps),
            ("oa", &self.oa),
            ("gvs", &self.gvs),
            ("map", &self.map),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub omega: f64,
    pub pelvis_side: Side,
    pub modes: Vec<Mode>,
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gdi_basis: Option<BasisSource>,
    #[serde(default)]
    pub notices: Vec<String>,
    pub subjects: Vec<SubjectReport>,
}

/// Variable sets the curve-based reference indices (GPS, OA) are computed on.
fn reference_sets(model: &PipelineModel) -> Vec<(&'static str, VariableSet)> {
    let mut out = Vec::new();
    let has = |m| model.mode(m).is_some();
    if has(Mode::Combined) || has(Mode::PerJoint) {
        out.push(("combined", VariableSet::combined15(model.pelvis_side)));
    }
    if has(Mode::Left) {
        out.push(("left", VariableSet::leg9(Side::Left)));
    }
    if has(Mode::Right) {
        out.push(("right", VariableSet::leg9(Side::Right)));
    }
    out
}

/// Score `cohort` with a fitted pipeline. FGDI-family values use the model's
/// healthy training subjects as reference; GPS, OA and GDI use the healthy
/// subjects of `cohort` itself.
pub fn score_cohort(model: &PipelineModel, cohort: &Cohort, options: &ScoreOptions) -> Result<IndexReport> {
    model.check_grid(cohort)?;
    let sel = options.indices;
    let mut notices = Vec::new();
    let mut subjects: Vec<SubjectReport> = cohort
        .subjects()
        .iter()
        .map(|s| SubjectReport::new(&s.subject_id, s.healthy, s.metadata.clone()))
        .collect();

    if sel.fgdi {
        for mf in &model.modes {
            if let Some(train) = mf.training_multivariate_scores() {
                let target = mf.multivariate_scores(cohort)?;
                let (f, z) = fgdi_with_reference(&train, &model.healthy, &target)?;
                for (i, r) in subjects.iter_mut().enumerate() {
                    r.fgdi.insert(mf.mode.name().into(), f.values[i]);
                    r.sfgdi.insert(mf.mode.name().into(), z[i]);
                    if f.clamped[i] {
                        r.flags.push(format!("fgdi_clamped:{}", mf.mode));
                    }
                }
            } else {
                let scores = mf.variable_scores(cohort)?;
                let profile = map_profile_from_models(&mf.fpca, &model.healthy, &scores)?;
                for (u, v) in profile.variables.iter().enumerate() {
                    for (i, r) in subjects.iter_mut().enumerate() {
                        r.map.insert(v.to_string(), profile.sfgdi[u][i]);
                        if profile.clamped[u][i] {
                            r.flags.push(format!("map_clamped:{v}"));
                        }
                    }
                }
            }
        }
    }

    let local_reference = cohort.n_healthy() >= 2;
    if (sel.gps || sel.oa || sel.gdi) && !local_reference {
        notices.push("GPS, OA and GDI need at least 2 healthy subjects in the scored cohort; skipped".into());
    }

    if sel.gps && local_reference {
        let mut gvs_vars = BTreeSet::new();
        for (key, set) in reference_sets(model) {
            let g = gvs_gps(cohort, &set)?;
            for (i, r) in subjects.iter_mut().enumerate() {
                r.gps.insert(key.into(), g.gps[i]);
            }
            gvs_vars.extend(set.members().iter().copied());
        }
        let vars: Vec<_> = gvs_vars.into_iter().collect();
        let refs = healthy_mean_curves(cohort, &vars)?;
        for (r, s) in subjects.iter_mut().zip(cohort.subjects()) {
            for (v, m) in vars.iter().zip(&refs) {
                r.gvs.insert(v.to_string(), gvs(&s.curves[v].values, m));
            }
        }
    }

    if sel.oa && local_reference {
        for (key, set) in reference_sets(model) {
            let values = oa(cohort, &set)?;
            for (r, v) in subjects.iter_mut().zip(values) {
                r.oa.insert(key.into(), v);
            }
        }
    }

    let mut basis_source = None;
    if sel.gdi && local_reference {
        let basis = options
            .gdi_basis
            .as_ref()
            .ok_or_else(|| GaitError::arg("GDI requested but no feature basis supplied"))?;
        basis_source = Some(basis.source());
        if basis.source() == BasisSource::SurrogateSvd {
            notices.push("GDI uses a surrogate feature basis, not the published one".into());
        }
        let target = basis.grid_points();
        let resampled;
        let gdi_cohort = if cohort.grid().num_points() == target {
            cohort
        } else {
            notices.push(format!(
                "curves resampled from {} to {target} points for GDI",
                cohort.grid().num_points()
            ));
            resampled = cohort.resample(target)?;
            &resampled
        };
        for side in Side::BOTH {
            if gdi_cohort.select(&VariableSet::leg9(side)).is_err() {
                notices.push(format!("GDI {} skipped: side not fully present", side.name()));
                continue;
            }
            let g = gdi(gdi_cohort, side, basis)?;
            for (i, r) in subjects.iter_mut().enumerate() {
                r.gdi.insert(side.name().into(), g.gdi.values[i]);
                r.sgdi.insert(side.name().into(), g.sgdi[i]);
                if g.gdi.clamped[i] {
                    r.flags.push(format!("gdi_clamped:{}", side.name()));
                }
            }
        }
    }

    Ok(IndexReport {
        omega: model.omega,
        pelvis_side: model.pelvis_side,
        modes: model.fitted_modes(),
        grid_points: model.grid.num_points(),
        gdi_basis: basis_source,
        notices,
        subjects,
    })
}

impl IndexReport {
    pub fn subject(&self, subject_id: &str) -> Option<&SubjectReport> {
        self.subjects.iter().find(|s| s.subject_id == subject_id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per subject, one column per `family_key` value.
    pub fn to_table(&self) -> ReportTable {
        let mut names: Vec<String> = Vec::new();
        let mut seen = BTreeSet::new();
        for family in ["fgdi", "sfgdi", "gdi", "sgdi", "gps", "oa", "gvs", "map"] {
            let keys: BTreeSet<&String> = self
                .subjects
                .iter()
                .flat_map(|s| {
                    s.families()
                        .into_iter()
                        .find(|(f, _)| *f == family)
                        .map(|(_, m)| m.keys().collect::<Vec<_>>())
                        .unwrap_or_default()
                })
                .collect();
            for k in keys {
                let name = format!("{family}_{k}");
                if seen.insert(name.clone()) {
                    names.push(name);
                }
            }
        }
        let columns = names
            .iter()
            .map(|name| {
                let (family, key) = name.split_once('_').expect("family prefix");
                let values = self
                    .subjects
                    .iter()
                    .map(|s| {
                        s.families()
                            .into_iter()
                            .find(|(f, _)| *f == family)
                            .and_then(|(_, m)| m.get(key).copied())
                    })
                    .collect();
                (name.clone(), values)
            })
            .collect();
        ReportTable {
            subject_ids: self.subjects.iter().map(|s| s.subject_id.clone()).collect(),
            healthy: self.subjects.iter().map(|s| s.healthy).collect(),
            columns,
            flags: self.subjects.iter().map(|s| s.flags.join(";")).collect(),
        }
    }
}

/// Flat per-subject table of index values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub subject_ids: Vec<String>,
    pub healthy: Vec<bool>,
    pub columns: Vec<(String, Vec<Option<f64>>)>,
    pub flags: Vec<String>,
}

impl ReportTable {
    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject_id".to_string(), "healthy".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        header.push("flags".into());
        w.write_record(&header)?;
        for i in 0..self.subject_ids.len() {
            let mut rec = vec![
                self.subject_ids[i].clone(),
                if self.healthy[i] { "1" } else { "0" }.to_string(),
            ];
            rec.extend(
                self.columns
                    .iter()
                    .map(|(_, v)| v[i].map_or(String::new(), |x| x.to_string())),
            );
            rec.push(self.flags[i].clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let pos = |name: &str| headers.iter().position(|h| h == name);
        let id_col =
            pos("subject_id").ok_or_else(|| GaitError::parse("report CSV has no subject_id column"))?;
        let healthy_col = pos("healthy");
        let flags_col = pos("flags");
        let value_cols: Vec<usize> = (0..headers.len())
            .filter(|&c| c != id_col && Some(c) != healthy_col && Some(c) != flags_col)
            .collect();
        let mut table = ReportTable {
            subject_ids: Vec::new(),
            healthy: Vec::new(),
            columns: value_cols
                .iter()
                .map(|&c| (headers[c].to_string(), Vec::new()))
                .collect(),
            flags: Vec::new(),
        };
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            table
                .subject_ids
                .push(rec.get(id_col).unwrap_or_default().to_string());
            let healthy = healthy_col
                .and_then(|c| rec.get(c))
                .map(|v| matches!(v, "1" | "true" | "TRUE" | "True"))
                .unwrap_or(false);
            table.healthy.push(healthy);
            table
                .flags
                .push(flags_col.and_then(|c| rec.get(c)).unwrap_or_default().to_string());
            for (slot, &c) in table.columns.iter_mut().zip(&value_cols) {
                let field = rec.get(c).unwrap_or_default();
                let v = if field.is_empty() {
                    None
                } else {
                    Some(field.parse::<f64>().map_err(|_| {
                        GaitError::parse(format!(
                            "report line {}, column `{}`: `{field}` is not a number",
                            line + 2,
                            slot.0
                        ))
                    })?)
                };
                slot.1.push(v);
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnComparison {
    pub column: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kendall_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Kendall's tau between matching columns of two tables, over subjects
/// present in both with values in both.
pub fn compare_tables(a: &ReportTable, b: &ReportTable) -> Vec<ColumnComparison> {
    let index_b: BTreeMap<&str, usize> = b
        .subject_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut out = Vec::new();
    for (name, col_a) in &a.columns {
        let Some(col_b) = b.column(name) else { continue };
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, id) in a.subject_ids.iter().enumerate() {
            if let (Some(&j), Some(va)) = (index_b.get(id.as_str()), col_a[i]) {
                if let Some(vb) = col_b[j] {
                    x.push(va);
                    y.push(vb);
                }
            }
        }
        let (tau, note) = match kendall_tau(&x, &y) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        };
        out.push(ColumnComparison {
            column: name.clone(),
            n: x.len(),
            kendall_tau: tau,
            note,
        });
    }
    out
}

/// Kendall's tau for one pair of columns of the same table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPair {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub kendall_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Pairwise Kendall's tau between the index columns of one table, over
/// subjects with values in both columns. Per-variable families (`gvs_*`,
/// `map_*`) are left out unless named explicitly in `columns`.
pub fn correlate_columns(table: &ReportTable, columns: Option<&[String]>) -> Vec<ColumnPair> {
    let names: Vec<&str> = match columns {
        Some(c) => c
            .iter()
            .map(String::as_str)
            .filter(|c| table.column(c).is_some())
            .collect(),
        None => table
            .columns
            .iter()
            .map(|(n, _)| n.as_str())
            .filter(|n| !n.starts_with("gvs_") && !n.starts_with("map_"))
            .collect(),
    };
    let mut out = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (ca, cb) = (table.column(a).unwrap(), table.column(b).unwrap());
            let (x, y): (Vec<f64>, Vec<f64>) = ca
                .iter()
                .zip(cb)
                .filter_map(|(u, v)| Some(((*u)?, (*v)?)))
                .unzip();
            let (tau, note) = match kendall_tau(&x, &y) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(ColumnPair {
                a: a.to_string(),
                b: b.to_string(),
                n: x.len(),
                kendall_tau: tau,
                note,
            });
        }
    }
    out
}
