//! Filesystem job store: `<root>/jobs/<id>/` holds `job.json` plus every
//! artifact. Ids are content digests, so resubmitting the same photo with
//! the same options lands on the existing job.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use meshpress_core::{PipelineConfig, PrintStrategy, RenderMode};
use sha2::{Digest, Sha256};

use crate::job::{IllegalTransition, JobState, PrintJob};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no job {0}")]
    NotFound(String),
    #[error(transparent)]
    Transition(#[from] IllegalTransition),
    #[error("job store io: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt job record: {0}")]
    Corrupt(#[from] serde_json::Error),
}

pub fn job_id(
    input: &[u8],
    cfg: &PipelineConfig,
    mode: RenderMode,
    strategy: PrintStrategy,
    stylize: bool,
) -> String {
    let mut h = Sha256::new();
    h.update(Sha256::digest(input));
    h.update(cfg.canonical().as_bytes());
    h.update(format!("\nmode={mode}\nstrategy={strategy}\nstylize={stylize}\n").as_bytes());
    hex::encode(h.finalize())[..24].to_string()
}

#[derive(Debug)]
pub struct JobStore {
    root: PathBuf,
    jobs: Mutex<HashMap<String, PrintJob>>,
}

impl JobStore {
    /// Opens (creating if needed) a store and loads any persisted jobs.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let jobs_dir = root.join("jobs");
        fs::create_dir_all(&jobs_dir)?;
        let mut jobs = HashMap::new();
        for entry in fs::read_dir(&jobs_dir)? {
            let record = entry?.path().join("job.json");
            if record.is_file() {
                let job: PrintJob = serde_json::from_slice(&fs::read(&record)?)?;
                jobs.insert(job.id.clone(), job);
            }
        }
        Ok(Self {
            root,
            jobs: Mutex::new(jobs),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn job_dir(&self, id: &str) -> PathBuf {
        self.root.join("jobs").join(id)
    }

    /// Path of an artifact, refusing names that would escape the job directory.
    pub fn artifact_path(&self, id: &str, name: &str) -> Option<PathBuf> {
        let safe = |s: &str| {
            !s.is_empty()
                && s.chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_')
                && !s.starts_with('.')
        };
        (safe(id) && safe(name)).then(|| self.job_dir(id).join(name))
    }

    /// Inserts a new job and writes its input image. Returns the existing
    /// record and `false` when the id is already known.
    pub fn insert(&self, job: PrintJob, input: &[u8]) -> Result<(PrintJob, bool), StoreError> {
        let mut jobs = self.jobs.lock().expect("job store poisoned");
        if let Some(existing) = jobs.get(&job.id) {
            return Ok((existing.clone(), false));
        }
        let dir = self.job_dir(&job.id);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(&job.artifacts.input), input)?;
        self.persist(&job)?;
        jobs.insert(job.id.clone(), job.clone());
        Ok((job, true))
    }

    pub fn get(&self, id: &str) -> Option<PrintJob> {
        self.jobs
            .lock()
            .expect("job store poisoned")
            .get(id)
            .cloned()
    }

    pub fn list(&self) -> Vec<PrintJob> {
        let mut all: Vec<_> = self
            .jobs
            .lock()
            .expect("job store poisoned")
            .values()
            .cloned()
            .collect();
        all.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        all
    }

    /// Applies `edit` and then moves the job to `to`, atomically with
    /// respect to other store users.
    pub fn transition(
        &self,
        id: &str,
        to: JobState,
        edit: impl FnOnce(&mut PrintJob),
    ) -> Result<PrintJob, StoreError> {
        self.update(id, |job| {
            if !job.state.can_transition_to(to) {
                return Err(IllegalTransition {
                    from: job.state,
                    to,
                }
                .into());
            }
            edit(job);
            job.transition(to)?;
            Ok(())
        })
    }

    /// Runs `f` on the job under the store lock and persists the result if
    /// `f` succeeds.
    pub fn update(
        &self,
        id: &str,
        f: impl FnOnce(&mut PrintJob) -> Result<(), StoreError>,
    ) -> Result<PrintJob, StoreError> {
        let mut jobs = self.jobs.lock().expect("job store poisoned");
        let job = jobs
            .get_mut(id)
            .ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        let mut draft = job.clone();
        f(&mut draft)?;
        self.persist(&draft)?;
        *job = draft.clone();
        Ok(draft)
    }

    fn persist(&self, job: &PrintJob) -> Result<(), StoreError> {
        let dir = self.job_dir(&job.id);
        let tmp = dir.join("job.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(job)?)?;
        fs::rename(tmp, dir.join("job.json"))?;
        Ok(())
    }
}
