//! Print job records and their state machine.
//!
//! ```text
//! Received -> [Stylizing ->] Separating -> Ready -> Printing -> Done
//!                                            ^---------'  (device failure)
//! any state before Done -> Failed
//! ```

use chrono::{DateTime, Utc};
use meshpress_core::{Channel, PipelineConfig, PlanSummary, PrintStrategy, RenderMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobState {
    Received,
    Stylizing,
    Separating,
    Ready,
    Printing,
    Done,
    Failed,
}

impl JobState {
    pub fn can_transition_to(self, next: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, next),
            (Received, Stylizing)
                | (Received, Separating)
                | (Stylizing, Separating)
                | (Separating, Ready)
                | (Ready, Printing)
                | (Printing, Done)
                | (Printing, Ready)
                | (Received | Stylizing | Separating | Ready | Printing, Failed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    /// Stylizer contract violated and fallback disabled.
    #[serde(rename = "E-STY")]
    Stylize,
    /// Separation failed or panicked.
    #[serde(rename = "E-SEP")]
    Separate,
    /// Raster or preview encoding failed.
    #[serde(rename = "E-ENC")]
    Encode,
    /// Printer device write failed.
    #[serde(rename = "E-DEV")]
    Device,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Stylize => "E-STY",
            ErrorCode::Separate => "E-SEP",
            ErrorCode::Encode => "E-ENC",
            ErrorCode::Device => "E-DEV",
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobError {
    pub code: ErrorCode,
    pub message: String,
}

/// File names inside the job directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifacts {
    pub input: String,
    pub stylized: Option<String>,
    /// `{c,m,y,k}.png`, in C, M, Y, K order once separated.
    pub stencils: Vec<String>,
    /// `{c,m,y,k}.escpos`, in C, M, Y, K order once separated.
    pub frames: Vec<String>,
    pub plan: Option<String>,
    pub error_stencil: Option<String>,
    pub error_frame: Option<String>,
}

impl Artifacts {
    pub fn separated() -> (Vec<String>, Vec<String>) {
        (
            Channel::ALL.iter().map(|c| format!("{c}.png")).collect(),
            Channel::ALL.iter().map(|c| format!("{c}.escpos")).collect(),
        )
    }

    /// Every file name this record points at.
    pub fn all(&self) -> Vec<&str> {
        let mut names = vec![self.input.as_str()];
        names.extend(self.stylized.as_deref());
        names.extend(self.stencils.iter().map(String::as_str));
        names.extend(self.frames.iter().map(String::as_str));
        names.extend(self.plan.as_deref());
        names.extend(self.error_stencil.as_deref());
        names.extend(self.error_frame.as_deref());
        names
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub state: JobState,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub layer: Channel,
    pub bytes: usize,
    pub duration_ms: u64,
}

/// What one print attempt actually sent to the device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintPlanExecution {
    pub job_id: String,
    pub order: [Channel; 4],
    pub frames: Vec<FrameRecord>,
    pub completed: bool,
    pub error: Option<JobError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrintJob {
    pub id: String,
    pub state: JobState,
    pub mode: RenderMode,
    pub strategy: PrintStrategy,
    pub stylize: bool,
    pub stylizer_fallback: bool,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub artifacts: Artifacts,
    pub plan: Option<PlanSummary>,
    pub error: Option<JobError>,
    pub history: Vec<Transition>,
    pub last_print: Option<PrintPlanExecution>,
    pub print_attempts: u32,
}

#[derive(Debug, thiserror::Error)]
#[error("illegal job transition {from:?} -> {to:?}")]
pub struct IllegalTransition {
    pub from: JobState,
    pub to: JobState,
}

impl PrintJob {
    pub fn new(
        id: String,
        mode: RenderMode,
        strategy: PrintStrategy,
        stylize: bool,
        config: PipelineConfig,
    ) -> Self {
        let now = Utc::now();
        Self {
            id,
            state: JobState::Received,
            mode,
            strategy,
            stylize,
            stylizer_fallback: false,
            created_at: now,
            updated_at: now,
            config_hash: config.hash(),
            config,
            artifacts: Artifacts {
                input: "input.png".into(),
                ..Default::default()
            },
            plan: None,
            error: None,
            history: vec![Transition {
                state: JobState::Received,
                at: now,
            }],
            last_print: None,
            print_attempts: 0,
        }
    }

    pub fn transition(&mut self, to: JobState) -> Result<(), IllegalTransition> {
        if !self.state.can_transition_to(to) {
            return Err(IllegalTransition {
                from: self.state,
                to,
            });
        }
        let now = Utc::now();
        self.state = to;
        self.updated_at = now;
        self.history.push(Transition { state: to, at: now });
        Ok(())
    }

    /// Checks that `history` only walks allowed edges from `Received`.
    pub fn history_is_valid(&self) -> bool {
        let mut states = self.history.iter().map(|t| t.state);
        if states.next() != Some(JobState::Received) {
            return false;
        }
        let mut prev = JobState::Received;
        for s in states {
            if !prev.can_transition_to(s) {
                return false;
            }
            prev = s;
        }
        prev == self.state
    }
}
