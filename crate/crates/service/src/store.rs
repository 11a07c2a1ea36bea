//! Cohort and model store: an in-memory map in front of an optional
//! content-addressed directory.
//!
//! Layout under the data directory:
//! `blobs/<sha256>.{csv,json}` hold cohort CSVs, pipeline models and reports;
//! `cohorts/<id>.json` and `models/<id>.json` are small records naming blobs.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use gaitdex::cohort::Cohort;
use gaitdex::csv_io::{attach_metadata, read_cohort, read_metadata, write_cohort, write_metadata};
use gaitdex::pipeline::PipelineModel;
use gaitdex::report::IndexReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ErrorBody;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub omega: f64,
    pub modes: Vec<gaitdex::pipeline::Mode>,
    pub pelvis_side: gaitdex::variable::Side,
    pub indices: gaitdex::report::IndexSelection,
}

#[derive(Debug)]
pub struct StoredCohort {
    pub id: String,
    pub cohort: Cohort,
}

#[derive(Debug)]
pub struct FittedModel {
    pub pipeline: PipelineModel,
    pub report: IndexReport,
}

#[derive(Debug, Clone)]
pub enum ModelStatus {
    Pending,
    Ready(Arc<FittedModel>),
    Failed(ErrorBody),
}

impl ModelStatus {
    pub fn name(&self) -> &'static str {
        match self {
            ModelStatus::Pending => "pending",
            ModelStatus::Ready(_) => "ready",
            ModelStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelEntry {
    pub id: String,
    pub cohort_id: String,
    pub params: FitParams,
    pub status: ModelStatus,
}

#[derive(Serialize, Deserialize)]
struct CohortRecord {
    cohort_id: String,
    curves: String,
    metadata: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    model_id: String,
    cohort_id: String,
    params: FitParams,
    pipeline: Option<String>,
    report: Option<String>,
    error: Option<ErrorBody>,
}

#[derive(Debug, Default)]
pub struct Store {
    dir: Option<PathBuf>,
    cohorts: RwLock<HashMap<String, Arc<StoredCohort>>>,
    models: RwLock<HashMap<String, ModelEntry>>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Write via a temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

fn invalid(e: impl ToString) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

impl Store {
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Open (creating if needed) a store rooted at `dir` and load every
    /// completed entry it holds.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        for sub in ["blobs", "cohorts", "models"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        let store = Store {
            dir: Some(dir),
            ..Store::default()
        };
        store.load()?;
        Ok(store)
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn blob_path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join("blobs").join(name))
    }

    fn put_blob(&self, bytes: &[u8], ext: &str) -> io::Result<Option<String>> {
        let Some(_) = &self.dir else { return Ok(None) };
        let name = format!("{}.{ext}", sha256_hex(bytes));
        let path = self.blob_path(&name).unwrap();
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(Some(name))
    }

    fn get_blob(&self, name: &str) -> io::Result<Vec<u8>> {
        let path = self
            .blob_path(name)
            .ok_or_else(|| invalid("store has no directory"))?;
        let bytes = fs::read(&path)?;
        let expected = name.split('.').next().unwrap_or_default();
        if sha256_hex(&bytes) != expected {
            return Err(invalid(format!("blob {name} does not match its hash")));
        }
        Ok(bytes)
    }

    fn load(&self) -> io::Result<()> {
        let dir = self.dir.clone().unwrap();
        for entry in fs::read_dir(dir.join("cohorts"))? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let rec: CohortRecord = serde_json::from_slice(&fs::read(&path)?).map_err(invalid)?;
            let mut cohort = read_cohort(&self.get_blob(&rec.curves)?[..]).map_err(invalid)?;
            if let Some(m) = &rec.metadata {
                let meta = read_metadata(&self.get_blob(m)?[..]).map_err(invalid)?;
                cohort = attach_metadata(cohort, meta).map_err(invalid)?;
            }
            self.cohorts.write().unwrap().insert(
                rec.cohort_id.clone(),
                Arc::new(StoredCohort {
                    id: rec.cohort_id,
                    cohort,
                }),
            );
        }
        for entry in fs::read_dir(dir.join("models"))? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let rec: ModelRecord = serde_json::from_slice(&fs::read(&path)?).map_err(invalid)?;
            let status = match (&rec.pipeline, &rec.report, rec.error) {
                (Some(p), Some(r), _) => {
                    let pipeline =
                        PipelineModel::from_json(std::str::from_utf8(&self.get_blob(p)?).map_err(invalid)?)
                            .map_err(invalid)?;
                    let report =
                        IndexReport::from_json(std::str::from_utf8(&self.get_blob(r)?).map_err(invalid)?)
                            .map_err(invalid)?;
                    ModelStatus::Ready(Arc::new(FittedModel { pipeline, report }))
                }
                (_, _, Some(e)) => ModelStatus::Failed(e),
                _ => continue,
            };
            self.models.write().unwrap().insert(
                rec.model_id.clone(),
                ModelEntry {
                    id: rec.model_id,
                    cohort_id: rec.cohort_id,
                    params: rec.params,
                    status,
                },
            );
        }
        Ok(())
    }

    pub fn insert_cohort(&self, cohort: Cohort) -> io::Result<Arc<StoredCohort>> {
        let id = new_id();
        if let Some(dir) = &self.dir {
            let mut curves = Vec::new();
            write_cohort(&cohort, &mut curves).map_err(invalid)?;
            let curves = self.put_blob(&curves, "csv")?.unwrap();
            let metadata = if cohort.subjects().iter().any(|s| !s.metadata.is_empty()) {
                let mut meta = Vec::new();
                write_metadata(&cohort, &mut meta).map_err(invalid)?;
                self.put_blob(&meta, "csv")?
            } else {
                None
            };
            let rec = CohortRecord {
                cohort_id: id.clone(),
                curves,
                metadata,
            };
            write_atomic(
                &dir.join("cohorts").join(format!("{id}.json")),
                &serde_json::to_vec_pretty(&rec).map_err(invalid)?,
            )?;
        }
        let stored = Arc::new(StoredCohort {
            id: id.clone(),
            cohort,
        });
        self.cohorts.write().unwrap().insert(id, stored.clone());
        Ok(stored)
    }

    pub fn cohort(&self, id: &str) -> Option<Arc<StoredCohort>> {
        self.cohorts.read().unwrap().get(id).cloned()
    }

    pub fn model(&self, id: &str) -> Option<ModelEntry> {
        self.models.read().unwrap().get(id).cloned()
    }

    /// Register a fit that has not finished yet; returns its model id.
    pub fn insert_pending(&self, cohort_id: &str, params: FitParams) -> String {
        let id = new_id();
        self.models.write().unwrap().insert(
            id.clone(),
            ModelEntry {
                id: id.clone(),
                cohort_id: cohort_id.to_string(),
                params,
                status: ModelStatus::Pending,
            },
        );
        id
    }

    /// Record the outcome of a pending fit. Completed entries are never
    /// overwritten.
    pub fn complete(&self, id: &str, outcome: Result<FittedModel, ErrorBody>) -> io::Result<()> {
        let entry = self
            .model(id)
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("no model {id}")))?;
        if !matches!(entry.status, ModelStatus::Pending) {
            return Err(invalid(format!("model {id} already completed")));
        }
        let status = match outcome {
            Ok(m) => ModelStatus::Ready(Arc::new(m)),
            Err(e) => ModelStatus::Failed(e),
        };
        if let Some(dir) = &self.dir {
            let mut rec = ModelRecord {
                model_id: id.to_string(),
                cohort_id: entry.cohort_id.clone(),
                params: entry.params.clone(),
                pipeline: None,
                report: None,
                error: None,
            };
            match &status {
                ModelStatus::Ready(m) => {
                    rec.pipeline =
                        self.put_blob(m.pipeline.to_json().map_err(invalid)?.as_bytes(), "json")?;
                    rec.report = self.put_blob(m.report.to_json().map_err(invalid)?.as_bytes(), "json")?;
                }
                ModelStatus::Failed(e) => rec.error = Some(e.clone()),
                ModelStatus::Pending => unreachable!(),
            }
            write_atomic(
                &dir.join("models").join(format!("{id}.json")),
                &serde_json::to_vec_pretty(&rec).map_err(invalid)?,
            )?;
        }
        self.models.write().unwrap().get_mut(id).unwrap().status = status;
        Ok(())
    }
}
