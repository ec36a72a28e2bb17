//! The offline pipeline end to end: one image in, every print artifact out.
//! The CLI and the job service both go through [`render`], which is what
//! makes their outputs byte-identical.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::modes::{contour_trim, silhouette};
use crate::protocol::{pack_raster, plan_order, PrintPlan, PrintStrategy, RasterFrame};
use crate::raster::RasterImage;
use crate::separation::separate;
use crate::stencil::{Channel, RenderMode, StencilSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenBits {
    pub c: usize,
    pub m: usize,
    pub y: usize,
    pub k: usize,
}

impl From<[usize; 4]> for OpenBits {
    fn from([c, m, y, k]: [usize; 4]) -> Self {
        Self { c, m, y, k }
    }
}

impl OpenBits {
    pub fn get(&self, ch: Channel) -> usize {
        match ch {
            Channel::C => self.c,
            Channel::M => self.m,
            Channel::Y => self.y,
            Channel::K => self.k,
        }
    }
}

/// Contents of `plan.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub order: [Channel; 4],
    pub strategy: PrintStrategy,
    pub mode: RenderMode,
    pub width: u32,
    pub height: u32,
    pub registered: bool,
    pub open_bits: OpenBits,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub set: StencilSet,
    pub plan: PrintPlan,
    /// Indexed by [`Channel::index`].
    pub frames: [RasterFrame; 4],
    pub stencil_pngs: [Vec<u8>; 4],
    pub summary: PlanSummary,
}

pub fn stencils(img: &RasterImage, mode: RenderMode, cfg: &PipelineConfig) -> Result<StencilSet> {
    match mode {
        RenderMode::FourColor => separate(img, cfg),
        RenderMode::ContourTrim => contour_trim(&separate(img, cfg)?),
        RenderMode::Silhouette => silhouette(img, cfg),
    }
}

pub fn render(
    img: &RasterImage,
    mode: RenderMode,
    strategy: PrintStrategy,
    cfg: &PipelineConfig,
) -> Result<RenderOutput> {
    let set = stencils(img, mode, cfg)?;
    encode(set, strategy)
}

/// Packs, previews and plans an already separated set.
pub fn encode(set: StencilSet, strategy: PrintStrategy) -> Result<RenderOutput> {
    let frames = [
        pack_raster(set.layer(Channel::C))?,
        pack_raster(set.layer(Channel::M))?,
        pack_raster(set.layer(Channel::Y))?,
        pack_raster(set.layer(Channel::K))?,
    ];
    let stencil_pngs = [
        set.layer(Channel::C).to_png()?,
        set.layer(Channel::M).to_png()?,
        set.layer(Channel::Y).to_png()?,
        set.layer(Channel::K).to_png()?,
    ];
    let plan = plan_order(&set, strategy);
    let summary = PlanSummary {
        order: plan.order,
        strategy,
        mode: set.mode,
        width: set.width(),
        height: set.height(),
        registered: set.registered,
        open_bits: set.open_counts().into(),
        config_hash: set.config_hash.clone(),
    };
    Ok(RenderOutput {
        set,
        plan,
        frames,
        stencil_pngs,
        summary,
    })
}

impl RenderOutput {
    pub fn frame(&self, ch: Channel) -> &RasterFrame {
        &self.frames[ch.index()]
    }

    pub fn stencil_png(&self, ch: Channel) -> &[u8] {
        &self.stencil_pngs[ch.index()]
    }

    pub fn plan_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.summary).expect("summary serializes");
        out.push(b'\n');
        out
    }

    /// Writes `{c,m,y,k}.png`, `plan.json` and, with `frames`, `{c,m,y,k}.escpos`.
    pub fn write_to(&self, dir: &Path, frames: bool) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for ch in Channel::ALL {
            fs::write(dir.join(format!("{ch}.png")), self.stencil_png(ch))?;
            if frames {
                fs::write(dir.join(format!("{ch}.escpos")), self.frame(ch).bytes())?;
            }
        }
        fs::write(dir.join("plan.json"), self.plan_json())
    }
}

/// True for errors raised while encoding output rather than separating.
pub fn is_encode_error(err: &Error) -> bool {
    matches!(err, Error::Encode(_) | Error::StencilTooWide { .. })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_modes_render() {
        let img = RasterImage::from_fn(40, 40, |x, y| {
            if x == 10 || y == 10 || x == 30 || y == 30 {
                [0, 0, 0]
            } else if x < 20 {
                [0, 255, 255]
            } else {
                [255, 255, 255]
            }
        })
        .unwrap();
        let cfg = PipelineConfig {
            fiducial_margin: 1,
            fiducial_side: 2,
            ..Default::default()
        };
        for mode in [
            RenderMode::FourColor,
            RenderMode::ContourTrim,
            RenderMode::Silhouette,
        ] {
            let out = render(&img, mode, PrintStrategy::AreaDescBlackLast, &cfg).unwrap();
            assert_eq!(out.set.mode, mode);
            assert!(out.set.registered);
            assert_eq!(out.plan.order[3], Channel::K);
            let json: PlanSummary = serde_json::from_slice(&out.plan_json()).unwrap();
            assert_eq!(json, out.summary);
            for ch in Channel::ALL {
                assert_eq!(json.open_bits.get(ch), out.set.layer(ch).open_count());
            }
        }
        let four = render(&img, RenderMode::FourColor, PrintStrategy::Cmyk, &cfg).unwrap();
        let trim = render(&img, RenderMode::ContourTrim, PrintStrategy::Cmyk, &cfg).unwrap();
        assert!(trim.summary.open_bits.c < four.summary.open_bits.c);
        assert_eq!(trim.summary.open_bits.k, four.summary.open_bits.k);
    }
}
