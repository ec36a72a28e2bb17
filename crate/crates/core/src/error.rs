use thiserror::Error;

use crate::stencil::RenderMode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
    #[error("image is {width}x{height}; the maximum dimension is {max}")]
    ImageTooLarge { width: u32, height: u32, max: u32 },
    #[error("expected {expected} pixels for the stated dimensions, got {actual}")]
    PixelCount { expected: usize, actual: usize },
    #[error("could not decode image: {0}")]
    Decode(String),
    #[error("could not encode png: {0}")]
    Encode(String),
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("stencil layers disagree on dimensions")]
    LayerDimensions,
    #[error("contour trim needs a four-colour set, got {0:?}")]
    WrongMode(RenderMode),
    #[error("stencil of width {width} does not fit in a raster frame")]
    StencilTooWide { width: u32 },
    #[error("{width}x{height} is too small for fiducials (needs {needed}x{needed})")]
    ImageTooSmall {
        width: u32,
        height: u32,
        needed: u32,
    },
    #[error("text {text:?} needs at least {min_width}x8 pixels, got {width}x{height}")]
    TextTooLong {
        text: String,
        min_width: u32,
        width: u32,
        height: u32,
    },
    #[error("malformed raster frame: {0}")]
    MalformedFrame(&'static str),
}
