//! Turns a photograph into four 1-bit silkscreen stencils (C, M, Y, K) and
//! encodes them as thermal-printer raster frames.
//!
//! Convention used everywhere: a set stencil bit is *open mesh*, the cell
//! ink passes through and the printer burns a dot. Previews render open
//! cells black.
//!
//! ```
//! use meshpress_core::{render, PipelineConfig, PrintStrategy, RasterImage, RenderMode};
//!
//! let img = RasterImage::filled(64, 64, [0, 255, 255]).unwrap();
//! let out = render(&img, RenderMode::FourColor, PrintStrategy::Cmyk, &PipelineConfig::default()).unwrap();
//! assert_eq!(out.summary.open_bits.c, 64 * 64);
//! ```

pub mod config;
pub mod error;
pub mod fiducial;
pub mod font;
pub mod modes;
pub mod protocol;
pub mod raster;
pub mod render;
pub mod separation;
pub mod stencil;

pub use config::{DitherMatrix, PipelineConfig};
pub use error::{Error, Result};
pub use fiducial::{add_fiducials, fiducial_layout, register};
pub use font::render_error_stencil;
pub use modes::{contour_trim, outside_mask, silhouette, RegionMask};
pub use protocol::{
    pack_raster, plan_from_counts, plan_order, split_stream, PrintPlan, PrintStrategy, RasterFrame,
};
pub use raster::{ink_cmy, luma, RasterImage, Rgb, MAX_DIMENSION};
pub use render::{render, OpenBits, PlanSummary, RenderOutput};
pub use separation::{
    classify, color_correct, dither, separate, ClassifiedImage, InkTag, PixelClass, BAYER8,
};
pub use stencil::{BitStencil, Channel, Fiducial, RenderMode, StencilSet};
