//! Printer devices and the session that serializes writes to them.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use meshpress_core::protocol::FEED_COMMAND;
use meshpress_core::Channel;
use tokio::sync::{Mutex, OwnedMutexGuard};

use crate::job::FrameRecord;

/// A byte sink that accepts whole frames.
pub trait PrinterDevice: Send {
    /// Writes one complete frame followed by a feed command.
    fn write_frame(&mut self, frame: &[u8]) -> io::Result<()>;

    fn describe(&self) -> String;
}

/// A character device such as `/dev/usb/lp0`, opened per print.
#[derive(Debug)]
pub struct CharDevice {
    path: PathBuf,
    file: Option<File>,
}

impl CharDevice {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            file: None,
        }
    }
}

impl PrinterDevice for CharDevice {
    fn write_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        if self.file.is_none() {
            self.file = Some(OpenOptions::new().write(true).open(&self.path)?);
        }
        let file = self.file.as_mut().expect("opened above");
        let res = file
            .write_all(frame)
            .and_then(|_| file.write_all(&FEED_COMMAND))
            .and_then(|_| file.flush());
        if res.is_err() {
            // reopen on the next attempt
            self.file = None;
        }
        res
    }

    fn describe(&self) -> String {
        self.path.display().to_string()
    }
}

/// Appends the raw printer stream to a file, for tests and offline printing.
#[derive(Debug)]
pub struct CaptureDevice {
    path: PathBuf,
}

impl CaptureDevice {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl PrinterDevice for CaptureDevice {
    fn write_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        if let Some(parent) = self.path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let mut buf = Vec::with_capacity(frame.len() + FEED_COMMAND.len());
        buf.extend_from_slice(frame);
        buf.extend_from_slice(&FEED_COMMAND);
        f.write_all(&buf)
    }

    fn describe(&self) -> String {
        format!("capture:{}", self.path.display())
    }
}

/// Parses a `printer_device` setting: `capture:<file>` or a device path.
pub fn open_device(spec: &str) -> Box<dyn PrinterDevice> {
    match spec.strip_prefix("capture:") {
        Some(path) => Box::new(CaptureDevice::new(path)),
        None => Box::new(CharDevice::new(spec)),
    }
}

/// Exclusive owner of one physical printer.
#[derive(Clone)]
pub struct PrinterSession {
    device: Arc<Mutex<Box<dyn PrinterDevice>>>,
}

impl std::fmt::Debug for PrinterSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrinterSession").finish_non_exhaustive()
    }
}

pub struct PrinterLease(OwnedMutexGuard<Box<dyn PrinterDevice>>);

/// Outcome of sending a plan's frames: what went out, and the first error.
#[derive(Debug)]
pub struct SendReport {
    pub frames: Vec<FrameRecord>,
    pub error: Option<io::Error>,
}

impl PrinterSession {
    pub fn new(device: Box<dyn PrinterDevice>) -> Self {
        Self {
            device: Arc::new(Mutex::new(device)),
        }
    }

    /// Waits until no other print holds the device.
    pub async fn acquire(&self) -> PrinterLease {
        PrinterLease(self.device.clone().lock_owned().await)
    }

    pub fn try_acquire(&self) -> Option<PrinterLease> {
        self.device.clone().try_lock_owned().ok().map(PrinterLease)
    }
}

impl PrinterLease {
    /// Writes frames in order, one at a time, stopping at the first failure.
    pub fn send(&mut self, frames: &[(Channel, Vec<u8>)]) -> SendReport {
        let mut sent = Vec::new();
        for (layer, bytes) in frames {
            let started = Instant::now();
            if let Err(e) = self.0.write_frame(bytes) {
                return SendReport {
                    frames: sent,
                    error: Some(e),
                };
            }
            sent.push(FrameRecord {
                layer: *layer,
                bytes: bytes.len(),
                duration_ms: started.elapsed().as_millis() as u64,
            });
        }
        SendReport {
            frames: sent,
            error: None,
        }
    }

    pub fn describe(&self) -> String {
        self.0.describe()
    }
}
