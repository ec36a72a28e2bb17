//! Job orchestration: accepting uploads, running the pipeline on a worker
//! pool, and sending finished jobs to the printer.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Duration;

use meshpress_core::render::is_encode_error;
use meshpress_core::{
    pack_raster, render, render_error_stencil, Channel, PipelineConfig, PrintStrategy, RasterImage,
    RenderMode,
};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, Semaphore};
use tracing::{info, warn};

use crate::job::{ErrorCode, FrameRecord, JobError, JobState, PrintJob, PrintPlanExecution};
use crate::printer::PrinterSession;
use crate::settings::Settings;
use crate::store::{job_id, JobStore, StoreError};
use crate::stylizer::{stylize, StylizeError, StylizerContract};

/// Size of the stencil carrying an error code: one 58 mm thermal line width.
pub const ERROR_STENCIL_WIDTH: u32 = 384;
pub const ERROR_STENCIL_HEIGHT: u32 = 24;

/// Test hooks for forcing failure paths.
#[derive(Debug, Clone, Default)]
pub struct Faults {
    /// Panic inside the separation stage.
    pub separation_panic: bool,
}

/// Options accompanying an upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobOptions {
    pub mode: RenderMode,
    pub strategy: PrintStrategy,
    pub stylize: bool,
    /// Keys overriding the service's pipeline config.
    pub config: serde_json::Value,
}

impl Default for JobOptions {
    fn default() -> Self {
        Self {
            mode: RenderMode::FourColor,
            strategy: PrintStrategy::Cmyk,
            stylize: false,
            config: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SubmitError {
    #[error("{0}")]
    BadImage(String),
    #[error("{0}")]
    BadConfig(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, thiserror::Error)]
pub enum PrintError {
    #[error("no job {0}")]
    NotFound(String),
    #[error("job is {0:?}, not Ready")]
    NotReady(JobState),
    #[error("printer write failed: {}", .0.error.as_ref().map(|e| e.message.as_str()).unwrap_or(""))]
    Device(PrintPlanExecution),
    #[error("job is {0:?}; only Failed jobs carry an error stencil")]
    NoErrorStencil(JobState),
    #[error("printer write failed: {0}")]
    DeviceWrite(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub struct AppState {
    pub store: JobStore,
    pub base_config: PipelineConfig,
    pub stylizer: Option<StylizerContract>,
    pub strict_stylize: bool,
    pub printer: PrinterSession,
    pub faults: Faults,
    http: reqwest::Client,
    queue: mpsc::UnboundedSender<String>,
}

/// Handle to a running job service. Cheap to clone.
#[derive(Clone)]
pub struct Service {
    state: Arc<AppState>,
}

impl Service {
    /// Opens the job store and starts the worker pool. Must be called from
    /// within a tokio runtime.
    pub fn start(
        settings: &Settings,
        printer: PrinterSession,
        faults: Faults,
    ) -> Result<Self, StoreError> {
        let store = JobStore::open(&settings.service.data_dir)?;
        let stylizer = settings.service.stylizer_url.as_ref().map(|url| {
            StylizerContract::new(url.clone())
                .with_timeout(Duration::from_millis(settings.service.stylizer_timeout_ms))
        });
        let (tx, rx) = mpsc::unbounded_channel();
        let state = Arc::new(AppState {
            store,
            base_config: settings.pipeline.clone(),
            stylizer,
            strict_stylize: settings.service.strict_stylize,
            printer,
            faults,
            http: reqwest::Client::new(),
            queue: tx,
        });
        tokio::spawn(dispatch(state.clone(), rx, settings.service.workers.max(1)));
        let service = Self { state };
        service.recover()?;
        Ok(service)
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    pub fn store(&self) -> &JobStore {
        &self.state.store
    }

    /// Resumes whatever a previous process left unfinished.
    fn recover(&self) -> Result<(), StoreError> {
        for job in self.state.store.list() {
            match job.state {
                JobState::Received => {
                    let _ = self.state.queue.send(job.id);
                }
                JobState::Stylizing | JobState::Separating => {
                    fail_job(
                        &self.state,
                        &job.id,
                        ErrorCode::Separate,
                        "interrupted by restart".into(),
                    )?;
                }
                JobState::Printing => {
                    self.state
                        .store
                        .transition(&job.id, JobState::Ready, |_| {})?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Validates and records an upload, scheduling its pipeline. The flag is
    /// false when an identical job already existed.
    pub fn submit(
        &self,
        png: &[u8],
        options: &JobOptions,
    ) -> Result<(PrintJob, bool), SubmitError> {
        RasterImage::from_png(png).map_err(|e| SubmitError::BadImage(e.to_string()))?;
        let cfg = self
            .state
            .base_config
            .with_overrides(&options.config)
            .map_err(|e| SubmitError::BadConfig(e.to_string()))?;
        let id = job_id(png, &cfg, options.mode, options.strategy, options.stylize);
        let job = PrintJob::new(id, options.mode, options.strategy, options.stylize, cfg);
        let (job, fresh) = self.state.store.insert(job, png)?;
        if fresh {
            info!(job = %job.id, mode = %job.mode, "job received");
            let _ = self.state.queue.send(job.id.clone());
        }
        Ok((job, fresh))
    }

    pub async fn print(&self, id: &str) -> Result<PrintPlanExecution, PrintError> {
        print_job(&self.state, id).await
    }

    /// Sends a Failed job's error-code stencil. The job stays Failed.
    pub async fn print_error(&self, id: &str) -> Result<FrameRecord, PrintError> {
        let job = self
            .state
            .store
            .get(id)
            .ok_or_else(|| PrintError::NotFound(id.to_string()))?;
        let name = match (&job.state, &job.artifacts.error_frame) {
            (JobState::Failed, Some(name)) => name.clone(),
            _ => return Err(PrintError::NoErrorStencil(job.state)),
        };
        let path = self.state.store.job_dir(id).join(name);
        let mut lease = self.state.printer.acquire().await;
        let report = tokio::task::spawn_blocking(move || {
            let bytes = std::fs::read(path)?;
            let report = lease.send(&[(Channel::K, bytes)]);
            match report.error {
                Some(e) => Err(e),
                None => Ok(report.frames),
            }
        })
        .await
        .map_err(|e| StoreError::Io(std::io::Error::other(e.to_string())))?;
        match report {
            Ok(mut frames) => Ok(frames.remove(0)),
            Err(e) => Err(PrintError::DeviceWrite(e.to_string())),
        }
    }

    /// Polls until the job leaves the pipeline stages or `timeout` passes.
    pub async fn wait_settled(&self, id: &str, timeout: Duration) -> Option<PrintJob> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let job = self.state.store.get(id)?;
            if !matches!(
                job.state,
                JobState::Received | JobState::Stylizing | JobState::Separating
            ) {
                return Some(job);
            }
            if tokio::time::Instant::now() >= deadline {
                return Some(job);
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    }
}

async fn dispatch(state: Arc<AppState>, mut rx: mpsc::UnboundedReceiver<String>, workers: usize) {
    let limit = Arc::new(Semaphore::new(workers));
    while let Some(id) = rx.recv().await {
        let permit = limit
            .clone()
            .acquire_owned()
            .await
            .expect("semaphore never closes");
        let state = state.clone();
        tokio::spawn(async move {
            if let Err(e) = run_pipeline(&state, &id).await {
                warn!(job = %id, error = %e, "pipeline bookkeeping failed");
            }
            drop(permit);
        });
    }
}

/// Takes a `Received` job through stylization (if requested), separation
/// and encoding, leaving it `Ready` or `Failed`.
pub async fn run_pipeline(state: &AppState, id: &str) -> Result<PrintJob, StoreError> {
    let job = state
        .store
        .get(id)
        .ok_or_else(|| StoreError::NotFound(id.to_string()))?;
    if job.state != JobState::Received {
        return Ok(job);
    }
    let dir = state.store.job_dir(id);
    let input = tokio::fs::read(dir.join(&job.artifacts.input)).await?;
    let original = match RasterImage::from_png(&input) {
        Ok(img) => img,
        Err(e) => return fail_job(state, id, ErrorCode::Separate, e.to_string()),
    };

    let mut source = original;
    let mut fallback = false;
    let mut stylized_name = None;
    if job.stylize {
        state.store.transition(id, JobState::Stylizing, |_| {})?;
        let dims = (source.width(), source.height());
        let outcome = match &state.stylizer {
            Some(contract) => stylize(&state.http, contract, input.clone(), dims).await,
            None => Err(StylizeError::NotConfigured),
        };
        match outcome {
            Ok(styled) => {
                let png = styled
                    .to_png()
                    .map_err(|e| std::io::Error::other(e.to_string()))?;
                tokio::fs::write(dir.join("stylized.png"), png).await?;
                stylized_name = Some("stylized.png".to_string());
                source = styled;
            }
            Err(e) if state.strict_stylize => {
                return fail_job(state, id, ErrorCode::Stylize, e.to_string());
            }
            Err(e) => {
                warn!(job = %id, error = %e, "stylizer failed, continuing with the original photo");
                fallback = true;
            }
        }
    }

    state.store.transition(id, JobState::Separating, |j| {
        j.stylizer_fallback = fallback;
        j.artifacts.stylized = stylized_name;
    })?;

    let cfg = job.config.clone();
    let (mode, strategy) = (job.mode, job.strategy);
    let faults = state.faults.clone();
    let out_dir = dir.clone();
    let result = tokio::task::spawn_blocking(move || {
        catch_unwind(AssertUnwindSafe(|| {
            if faults.separation_panic {
                panic!("injected separation fault");
            }
            let out = render(&source, mode, strategy, &cfg)?;
            out.write_to(&out_dir, true)
                .map_err(|e| meshpress_core::Error::Encode(e.to_string()))?;
            Ok::<_, meshpress_core::Error>(out)
        }))
    })
    .await;

    match result {
        Ok(Ok(Ok(out))) => {
            let (stencils, frames) = crate::job::Artifacts::separated();
            let done = state.store.transition(id, JobState::Ready, |j| {
                j.artifacts.stencils = stencils;
                j.artifacts.frames = frames;
                j.artifacts.plan = Some("plan.json".into());
                j.plan = Some(out.summary.clone());
            })?;
            info!(job = %id, "job ready");
            Ok(done)
        }
        Ok(Ok(Err(e))) => {
            let code = if is_encode_error(&e) {
                ErrorCode::Encode
            } else {
                ErrorCode::Separate
            };
            fail_job(state, id, code, e.to_string())
        }
        Ok(Err(panic)) => fail_job(state, id, ErrorCode::Separate, panic_message(&panic)),
        Err(join) => fail_job(state, id, ErrorCode::Separate, join.to_string()),
    }
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "pipeline panicked".into())
}

/// Marks the job failed and leaves a printable stencil spelling the code.
fn fail_job(
    state: &AppState,
    id: &str,
    code: ErrorCode,
    message: String,
) -> Result<PrintJob, StoreError> {
    warn!(job = %id, code = %code, %message, "job failed");
    let dir = state.store.job_dir(id);
    let stencil = render_error_stencil(code.as_str(), ERROR_STENCIL_WIDTH, ERROR_STENCIL_HEIGHT)
        .expect("error codes fit the error stencil");
    let mut error_stencil = None;
    let mut error_frame = None;
    if let Ok(png) = stencil.to_png() {
        std::fs::write(dir.join("error.png"), png)?;
        error_stencil = Some("error.png".to_string());
    }
    if let Ok(frame) = pack_raster(&stencil) {
        std::fs::write(dir.join("error.escpos"), frame.bytes())?;
        error_frame = Some("error.escpos".to_string());
    }
    state.store.transition(id, JobState::Failed, |j| {
        j.error = Some(JobError { code, message });
        j.artifacts.error_stencil = error_stencil;
        j.artifacts.error_frame = error_frame;
    })
}

/// Sends a `Ready` job's frames in plan order. A device failure puts the job
/// back to `Ready`; the next attempt resends every layer.
pub async fn print_job(state: &AppState, id: &str) -> Result<PrintPlanExecution, PrintError> {
    let job = state
        .store
        .get(id)
        .ok_or_else(|| PrintError::NotFound(id.to_string()))?;
    if job.state != JobState::Ready {
        return Err(PrintError::NotReady(job.state));
    }
    let mut lease = state.printer.acquire().await;
    let job = match state
        .store
        .transition(id, JobState::Printing, |j| j.print_attempts += 1)
    {
        Ok(job) => job,
        Err(StoreError::Transition(t)) => return Err(PrintError::NotReady(t.from)),
        Err(e) => return Err(e.into()),
    };
    let order = job.plan.as_ref().map(|p| p.order).unwrap_or(Channel::ALL);
    let dir = state.store.job_dir(id);

    // The lease travels with the blocking write and is only released after
    // the job has left Printing, so one session never has two jobs Printing.
    let (lease, frames, err) = tokio::task::spawn_blocking(move || {
        let mut frames = Vec::new();
        for ch in order {
            match std::fs::read(dir.join(format!("{ch}.escpos"))) {
                Ok(bytes) => frames.push((ch, bytes)),
                Err(e) => return (lease, Vec::new(), Some(e)),
            }
        }
        let report = lease.send(&frames);
        (lease, report.frames, report.error)
    })
    .await
    .map_err(|e| StoreError::Io(std::io::Error::other(e.to_string())))?;

    let execution = PrintPlanExecution {
        job_id: id.to_string(),
        order,
        completed: err.is_none(),
        error: err.as_ref().map(|e| JobError {
            code: ErrorCode::Device,
            message: e.to_string(),
        }),
        frames,
    };
    let next = if execution.completed {
        JobState::Done
    } else {
        JobState::Ready
    };
    let recorded = execution.clone();
    state
        .store
        .transition(id, next, |j| j.last_print = Some(recorded))?;
    drop(lease);
    if execution.completed {
        info!(job = %id, "printed");
        Ok(execution)
    } else {
        warn!(job = %id, "printer write failed; job is Ready for a full resend");
        Err(PrintError::Device(execution))
    }
}
