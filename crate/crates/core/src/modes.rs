//! Post-print modes: trimming colour outside the black contours, and the
//! single-mask silhouette.

use std::collections::VecDeque;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fiducial::{register, restamp};
use crate::raster::RasterImage;
use crate::separation::object_mask;
use crate::stencil::{BitStencil, Channel, RenderMode, StencilSet};

/// Pixels reachable from the frame border without crossing an open K cell
/// (4-connected). A set bit means "outside".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask(BitStencil);

impl RegionMask {
    pub fn is_outside(&self, x: u32, y: u32) -> bool {
        self.0.get(x, y)
    }

    pub fn outside_count(&self) -> usize {
        self.0.open_count()
    }

    pub fn as_stencil(&self) -> &BitStencil {
        &self.0
    }
}

pub fn outside_mask(k_layer: &BitStencil) -> RegionMask {
    let (w, h) = (k_layer.width() as usize, k_layer.height() as usize);
    let blocked = k_layer.bits();
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();

    let mut seed = |i: usize, outside: &mut [bool]| {
        if !blocked[i] && !outside[i] {
            outside[i] = true;
            queue.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, &mut outside);
        seed((h - 1) * w + x, &mut outside);
    }
    for y in 0..h {
        seed(y * w, &mut outside);
        seed(y * w + w - 1, &mut outside);
    }

    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let neighbours = [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ];
        for n in neighbours.into_iter().flatten() {
            if !blocked[n] && !outside[n] {
                outside[n] = true;
                queue.push_back(n);
            }
        }
    }

    RegionMask(
        BitStencil::from_bits(k_layer.width(), k_layer.height(), outside)
            .expect("mask matches K dimensions"),
    )
}

/// Clears C, M and Y wherever the K contours do not enclose them.
pub fn contour_trim(set: &StencilSet) -> Result<StencilSet> {
    if set.mode != RenderMode::FourColor {
        return Err(Error::WrongMode(set.mode));
    }
    let mask = outside_mask(set.layer(Channel::K));
    let mut out = set.clone();
    for ch in [Channel::C, Channel::M, Channel::Y] {
        let layer = out.layer_mut(ch);
        for y in 0..layer.height() {
            for x in 0..layer.width() {
                if mask.is_outside(x, y) {
                    layer.set(x, y, false);
                }
            }
        }
    }
    restamp(&mut out);
    out.mode = RenderMode::ContourTrim;
    Ok(out)
}

/// Every layer carries the same object mask (all non-white classes).
pub fn silhouette(img: &RasterImage, cfg: &PipelineConfig) -> Result<StencilSet> {
    let mask = object_mask(img, cfg)?;
    let set = StencilSet::new(
        [mask.clone(), mask.clone(), mask.clone(), mask],
        RenderMode::Silhouette,
        cfg.hash(),
    )?;
    Ok(register(set, cfg))
}
