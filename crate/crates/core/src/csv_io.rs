//! Wide CSV reader/writer for cohorts and their clinical metadata.
//!
//! Kinematics: one row per subject-variable,
//! `subject_id,healthy,side,variable,t000,...,t{T-1}`.
//! Metadata: `subject_id,hoehn_yahr,freezer,updrs_ii,updrs_iii,k_level,amputated_side`
//! with empty cells meaning "absent".

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::cohort::{ClinicalMetadata, Cohort, KinematicCurve, SubjectRecord};
use crate::error::{GaitError, Result};
use crate::grid::GridSpec;
use crate::variable::{Joint, Side, VariableId};

const FIXED_COLUMNS: [&str; 4] = ["subject_id", "healthy", "side", "variable"];
const METADATA_COLUMNS: [&str; 7] = [
    "subject_id",
    "hoehn_yahr",
    "freezer",
    "updrs_ii",
    "updrs_iii",
    "k_level",
    "amputated_side",
];

pub fn load_cohort(path: impl AsRef<Path>) -> Result<Cohort> {
    let file = File::open(path.as_ref())?;
    read_cohort(file)
}

/// Load kinematics and attach the metadata file's fields by subject id.
pub fn load_cohort_with_metadata(path: impl AsRef<Path>, metadata: impl AsRef<Path>) -> Result<Cohort> {
    let cohort = load_cohort(path)?;
    let meta = read_metadata(File::open(metadata.as_ref())?)?;
    attach_metadata(cohort, meta)
}

pub fn read_cohort<R: Read>(reader: R) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let num_points = parse_header(&header)?;
    let grid = GridSpec::new(num_points)
        .map_err(|_| GaitError::parse("header needs at least two sample columns t000,t001"))?;

    let mut order: Vec<String> = Vec::new();
    let mut records: HashMap<String, SubjectRecord> = HashMap::new();

    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // header is line 1
        let line = row + 2;
        if rec.len() != header.len() {
            return Err(GaitError::data(format!(
                "line {line}: {} columns, header declares {} (T = {num_points})",
                rec.len(),
                header.len()
            )));
        }
        let subject_id = rec[0].to_string();
        if subject_id.is_empty() {
            return Err(GaitError::parse(format!("line {line}: empty subject_id")));
        }
        let healthy = match &rec[1] {
            "1" => true,
            "0" => false,
            other => {
                return Err(GaitError::parse(format!(
                    "line {line}, column healthy: expected 0 or 1, got `{other}`"
                )))
            }
        };
        let side: Side = match &rec[2] {
            "L" => Side::Left,
            "R" => Side::Right,
            other => {
                return Err(GaitError::parse(format!(
                    "line {line}, column side: expected L or R, got `{other}`"
                )))
            }
        };
        let joint: Joint = rec[3]
            .parse()
            .map_err(|e: GaitError| GaitError::parse(format!("line {line}, column variable: {e}")))?;
        let variable = VariableId::new(side, joint);

        let mut values = Vec::with_capacity(num_points);
        for l in 0..num_points {
            let cell = &rec[4 + l];
            let v: f64 = cell.parse().map_err(|_| {
                GaitError::parse(format!(
                    "line {line} (subject `{subject_id}`, {variable}), column {}: `{cell}` is not a number",
                    &header[4 + l]
                ))
            })?;
            if !v.is_finite() {
                return Err(GaitError::data(format!(
                    "line {line} (subject `{subject_id}`, {variable}), column {}: non-finite angle `{cell}`",
                    &header[4 + l]
                )));
            }
            values.push(v);
        }

        let entry = records.entry(subject_id.clone()).or_insert_with(|| {
            order.push(subject_id.clone());
            SubjectRecord::new(subject_id.clone(), healthy)
        });
        if entry.healthy != healthy {
            return Err(GaitError::data(format!(
                "line {line}: subject `{subject_id}` has conflicting healthy flags"
            )));
        }
        if entry.curves.contains_key(&variable) {
            return Err(GaitError::data(format!(
                "line {line}: duplicate subject_id/variable pair `{subject_id}` {variable}"
            )));
        }
        entry.curves.insert(variable, KinematicCurve { variable, values });
    }

    let subjects = order
        .into_iter()
        .map(|id| records.remove(&id).expect("recorded id"))
        .collect();
    Cohort::new(grid, subjects)
}

fn parse_header(header: &csv::StringRecord) -> Result<usize> {
    if header.len() < FIXED_COLUMNS.len() {
        return Err(GaitError::parse(format!(
            "header has {} columns; expected {} followed by t000..",
            header.len(),
            FIXED_COLUMNS.join(",")
        )));
    }
    for (i, want) in FIXED_COLUMNS.iter().enumerate() {
        if &header[i] != *want {
            return Err(GaitError::parse(format!(
                "header column {} is `{}`, expected `{want}`",
                i + 1,
                &header[i]
            )));
        }
    }
    let samples = header.len() - FIXED_COLUMNS.len();
    for l in 0..samples {
        let name = &header[FIXED_COLUMNS.len() + l];
        let ok = name
            .strip_prefix('t')
            .and_then(|d| d.parse::<usize>().ok())
            .is_some_and(|idx| idx == l);
        if !ok {
            return Err(GaitError::parse(format!(
                "header column `{name}` should be t{l:03}"
            )));
        }
    }
    Ok(samples)
}

pub fn read_metadata<R: Read>(reader: R) -> Result<HashMap<String, ClinicalMetadata>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != METADATA_COLUMNS {
        return Err(GaitError::parse(format!(
            "metadata header must be `{}`",
            METADATA_COLUMNS.join(",")
        )));
    }
    let mut out = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let id = rec[0].to_string();
        let cell = |i: usize| -> Option<&str> {
            let c = &rec[i];
            (!c.is_empty()).then_some(c)
        };
        let int = |i: usize| -> Result<Option<i64>> {
            cell(i)
                .map(|c| {
                    c.parse::<i64>().map_err(|_| {
                        GaitError::parse(format!(
                            "metadata line {line}, column {}: `{c}` is not an integer",
                            METADATA_COLUMNS[i]
                        ))
                    })
                })
                .transpose()
        };
        let ranged = |i: usize, lo: i64, hi: i64| -> Result<Option<u8>> {
            match int(i)? {
                Some(v) if !(lo..=hi).contains(&v) => Err(GaitError::data(format!(
                    "metadata line {line}, column {}: {v} outside {lo}..={hi}",
                    METADATA_COLUMNS[i]
                ))),
                v => Ok(v.map(|v| v as u8)),
            }
        };
        let freezer = match cell(2) {
            None => None,
            Some("1") | Some("true") | Some("TRUE") => Some(true),
            Some("0") | Some("false") | Some("FALSE") => Some(false),
            Some(other) => {
                return Err(GaitError::parse(format!(
                    "metadata line {line}, column freezer: `{other}` is not 0/1"
                )))
            }
        };
        let amputated_side = cell(6).map(str::parse::<Side>).transpose()?;
        let meta = ClinicalMetadata {
            hoehn_yahr: ranged(1, 1, 4)?,
            freezer,
            updrs_ii: int(3)?.map(|v| v as i32),
            updrs_iii: int(4)?.map(|v| v as i32),
            k_level: ranged(5, 0, 4)?,
            amputated_side,
        };
        if out.insert(id.clone(), meta).is_some() {
            return Err(GaitError::data(format!(
                "metadata line {line}: duplicate subject_id `{id}`"
            )));
        }
    }
    Ok(out)
}

pub fn attach_metadata(cohort: Cohort, mut meta: HashMap<String, ClinicalMetadata>) -> Result<Cohort> {
    let grid = cohort.grid();
    let mut subjects = cohort.subjects().to_vec();
    for s in &mut subjects {
        if let Some(m) = meta.remove(&s.subject_id) {
            s.metadata = m;
        }
    }
    if let Some(id) = meta.keys().min() {
        return Err(GaitError::data(format!(
            "metadata names subject `{id}` which is not in the cohort"
        )));
    }
    Cohort::new(grid, subjects)
}

pub fn save_cohort(cohort: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_cohort(cohort, file)
}

/// Rows follow subject order, then canonical variable order. Floats use the
/// shortest representation that parses back to the same bits.
pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let t = cohort.grid().num_points();
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..t).map(|l| format!("t{l:03}")));
    w.write_record(&header)?;
    for s in cohort.subjects() {
        for (v, curve) in &s.curves {
            let mut row = vec![
                s.subject_id.clone(),
                if s.healthy { "1" } else { "0" }.to_string(),
                v.side.letter().to_string(),
                v.joint.token().to_string(),
            ];
            row.extend(curve.values.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a metadata row for every subject that carries at least one field.
pub fn write_metadata<W: Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METADATA_COLUMNS)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for s in cohort.subjects().iter().filter(|s| !s.metadata.is_empty()) {
        let m = &s.metadata;
        w.write_record([
            s.subject_id.clone(),
            opt(m.hoehn_yahr.map(|v| v.to_string())),
            opt(m.freezer.map(|v| if v { "1" } else { "0" }.to_string())),
            opt(m.updrs_ii.map(|v| v.to_string())),
            opt(m.updrs_iii.map(|v| v.to_string())),
            opt(m.k_level.map(|v| v.to_string())),
            opt(m.amputated_side.map(|v| v.letter().to_string())),
        ])?;
    }
    w.flush()?;
    Ok(())
}
