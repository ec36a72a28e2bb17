//! Helpers shared by the integration tests: fixtures, the CLI binary and an
//! in-process service on an ephemeral port.
#![allow(dead_code)]

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use meshpress::job::{JobState, PrintJob};
use meshpress::printer::{open_device, PrinterDevice, PrinterSession};
use meshpress::service::{Faults, Service};
use meshpress::settings::Settings;
use meshpress_core::{PrintStrategy, RasterImage, RenderMode};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub const FIXTURES: &[&str] = &[
    "all_white",
    "all_black",
    "half_cyan",
    "brown_portrait",
    "gradient",
    "color_blocks",
    "alpha_disc",
];

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join("inputs").join(format!("{name}.png"))
}

pub fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn png(img: &RasterImage) -> Vec<u8> {
    img.to_png().expect("encode png")
}

/// Runs the `meshpress` binary.
pub fn meshpress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshpress"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn meshpress")
}

/// `meshpress separate` with frames, returning the exit code.
pub fn cli_separate(
    input: &Path,
    out: &Path,
    mode: RenderMode,
    strategy: PrintStrategy,
    extra: &[&str],
) -> i32 {
    let mode = mode.to_string();
    let strategy = strategy.to_string();
    let mut args = vec![
        "separate",
        input.to_str().unwrap(),
        "--mode",
        &mode,
        "--strategy",
        &strategy,
        "--out",
        out.to_str().unwrap(),
        "--emit-frames",
    ];
    args.extend_from_slice(extra);
    let output = meshpress(&args);
    output.status.code().expect("exit code")
}

/// Frames the device has accepted, in order.
#[derive(Clone, Default)]
pub struct Recorded(pub Arc<Mutex<Vec<Vec<u8>>>>);

impl Recorded {
    pub fn frames(&self) -> Vec<Vec<u8>> {
        self.0.lock().unwrap().clone()
    }
}

/// In-memory device that can fail chosen writes and be slowed down.
pub struct FlakyDevice {
    pub recorded: Recorded,
    /// 1-based indices (over the device's lifetime) of writes that fail.
    pub fail_on: Vec<usize>,
    pub fail_all: Arc<Mutex<bool>>,
    pub delay: Duration,
    calls: usize,
}

impl FlakyDevice {
    pub fn new(recorded: Recorded) -> Self {
        Self {
            recorded,
            fail_on: Vec::new(),
            fail_all: Arc::new(Mutex::new(false)),
            delay: Duration::ZERO,
            calls: 0,
        }
    }
}

impl PrinterDevice for FlakyDevice {
    fn write_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        self.calls += 1;
        std::thread::sleep(self.delay);
        if self.fail_on.contains(&self.calls) || *self.fail_all.lock().unwrap() {
            return Err(io::Error::new(
                io::ErrorKind::BrokenPipe,
                "printer unplugged",
            ));
        }
        self.recorded.0.lock().unwrap().push(frame.to_vec());
        Ok(())
    }

    fn describe(&self) -> String {
        "flaky".into()
    }
}

pub struct TestServer {
    pub base: String,
    pub service: Service,
    pub data: tempfile::TempDir,
    _server: AbortOnDrop,
}

pub struct AbortOnDrop(pub JoinHandle<()>);

impl Drop for AbortOnDrop {
    fn drop(&mut self) {
        self.0.abort();
    }
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub fn capture_path(data: &Path) -> PathBuf {
        data.join("printer.bin")
    }
}

pub fn settings(data: &Path) -> Settings {
    let mut s = Settings::default();
    s.service.data_dir = data.to_path_buf();
    s.service.printer_device = format!("capture:{}", TestServer::capture_path(data).display());
    s
}

pub async fn start_server(
    settings: Settings,
    device: Option<Box<dyn PrinterDevice>>,
    faults: Faults,
) -> TestServer {
    let data = tempfile::tempdir().unwrap();
    start_server_in(data, settings, device, faults).await
}

/// Starts a service whose data directory is `data` (the settings' data dir
/// is replaced).
pub async fn start_server_in(
    data: tempfile::TempDir,
    mut settings: Settings,
    device: Option<Box<dyn PrinterDevice>>,
    faults: Faults,
) -> TestServer {
    settings.service.data_dir = data.path().to_path_buf();
    if settings
        .service
        .printer_device
        .starts_with("capture:meshpress-data")
    {
        settings.service.printer_device = format!(
            "capture:{}",
            TestServer::capture_path(data.path()).display()
        );
    }
    let device = device.unwrap_or_else(|| open_device(&settings.service.printer_device));
    let service =
        Service::start(&settings, PrinterSession::new(device), faults).expect("service starts");
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = meshpress::api::router(service.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    TestServer {
        base: format!("http://{addr}"),
        service,
        data,
        _server: AbortOnDrop(server),
    }
}

/// Serves the stub stylizer; abort the handle to take it down.
pub async fn start_stylizer() -> (String, JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = tokio::spawn(async move {
        axum::serve(listener, meshpress::stylizer::stub_router())
            .await
            .unwrap();
    });
    (format!("http://{addr}/stylize"), handle)
}

/// An address nothing listens on.
pub async fn dead_endpoint() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/stylize")
}

pub async fn submit(
    client: &reqwest::Client,
    server: &TestServer,
    png: Vec<u8>,
    options: serde_json::Value,
) -> reqwest::Response {
    let form = reqwest::multipart::Form::new()
        .part(
            "image",
            reqwest::multipart::Part::bytes(png).file_name("in.png"),
        )
        .text("options", options.to_string());
    client
        .post(server.url("/v1/jobs"))
        .multipart(form)
        .send()
        .await
        .expect("submit")
}

pub async fn get_job(client: &reqwest::Client, server: &TestServer, id: &str) -> PrintJob {
    client
        .get(server.url(&format!("/v1/jobs/{id}")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap()
}

/// Polls the API until the job has left the pipeline stages.
pub async fn wait_settled(client: &reqwest::Client, server: &TestServer, id: &str) -> PrintJob {
    let deadline = tokio::time::Instant::now() + Duration::from_secs(30);
    loop {
        let job = get_job(client, server, id).await;
        if !matches!(
            job.state,
            JobState::Received | JobState::Stylizing | JobState::Separating
        ) {
            return job;
        }
        assert!(
            tokio::time::Instant::now() < deadline,
            "job {id} stuck in {:?}",
            job.state
        );
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

pub async fn fetch(client: &reqwest::Client, server: &TestServer, path: &str) -> (u16, Vec<u8>) {
    let resp = client.get(server.url(path)).send().await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.bytes().await.unwrap().to_vec())
}
