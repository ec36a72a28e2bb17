//! The image-to-image stylization stage.
//!
//! Contract: `POST <endpoint>` with a PNG body; a healthy stylizer answers
//! 200 with a PNG of the same dimensions. Anything else (non-200, timeout,
//! undecodable body, different size) is a stylizer failure.

use std::time::Duration;

use axum::body::Bytes;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use meshpress_core::RasterImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StylizerContract {
    pub endpoint: String,
    pub timeout: Duration,
}

impl StylizerContract {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(10_000);

    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Self::DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StylizeError {
    #[error("stylizer timed out after {0:?}")]
    Timeout(Duration),
    #[error("stylizer unreachable: {0}")]
    Transport(String),
    #[error("stylizer answered {0}")]
    Status(u16),
    #[error("stylizer returned an undecodable image: {0}")]
    BadBody(String),
    #[error("stylizer changed dimensions from {expected:?} to {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("no stylizer endpoint configured")]
    NotConfigured,
}

/// Sends `png` through the stylizer and checks the reply against `expected`
/// dimensions.
pub async fn stylize(
    client: &reqwest::Client,
    contract: &StylizerContract,
    png: Vec<u8>,
    expected: (u32, u32),
) -> Result<RasterImage, StylizeError> {
    let response = client
        .post(&contract.endpoint)
        .header(header::CONTENT_TYPE, "image/png")
        .timeout(contract.timeout)
        .body(png)
        .send()
        .await
        .map_err(|e| classify_transport(e, contract.timeout))?;
    if response.status() != reqwest::StatusCode::OK {
        return Err(StylizeError::Status(response.status().as_u16()));
    }
    let body = response
        .bytes()
        .await
        .map_err(|e| classify_transport(e, contract.timeout))?;
    let img = RasterImage::from_png(&body).map_err(|e| StylizeError::BadBody(e.to_string()))?;
    let actual = (img.width(), img.height());
    if actual != expected {
        return Err(StylizeError::DimensionMismatch { expected, actual });
    }
    Ok(img)
}

fn classify_transport(e: reqwest::Error, timeout: Duration) -> StylizeError {
    if e.is_timeout() {
        StylizeError::Timeout(timeout)
    } else {
        StylizeError::Transport(e.to_string())
    }
}

/// Four-level posterization per channel: `floor(v / 64) * 85`.
pub fn posterize(img: &RasterImage) -> RasterImage {
    img.map_pixels(|p| p.map(posterize_level))
}

pub fn posterize_level(v: u8) -> u8 {
    (v / 64) * 85
}

/// Deterministic stand-in for the diffusion stylizer.
pub fn stub_stylizer(png: &[u8]) -> Result<Vec<u8>, meshpress_core::Error> {
    posterize(&RasterImage::from_png(png)?).to_png()
}

/// Router serving the stub at `POST /stylize`.
pub fn stub_router() -> Router {
    Router::new().route("/stylize", post(stylize_handler))
}

async fn stylize_handler(body: Bytes) -> Response {
    match tokio::task::spawn_blocking(move || stub_stylizer(&body)).await {
        Ok(Ok(png)) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
        Ok(Err(e)) => (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}
