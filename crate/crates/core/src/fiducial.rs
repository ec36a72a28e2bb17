//! Corner registration squares, opened identically on all four layers.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::stencil::{Channel, Fiducial, StencilSet};

/// Geometry of the four corner squares for a `width` x `height` stencil.
pub fn fiducial_layout(width: u32, height: u32, cfg: &PipelineConfig) -> Result<Vec<Fiducial>> {
    let margin = cfg.fiducial_margin;
    let side = cfg.fiducial_side;
    let needed = 2 * (margin + side);
    if width < needed || height < needed {
        return Err(Error::ImageTooSmall {
            width,
            height,
            needed,
        });
    }
    let far_x = width - margin - side;
    let far_y = height - margin - side;
    Ok([
        (margin, margin),
        (far_x, margin),
        (margin, far_y),
        (far_x, far_y),
    ]
    .into_iter()
    .map(|(x, y)| Fiducial { x, y, side })
    .collect())
}

pub(crate) fn stamp(set: &mut StencilSet, fiducials: &[Fiducial]) {
    for ch in Channel::ALL {
        let layer = set.layer_mut(ch);
        for f in fiducials {
            for y in f.y..f.y + f.side {
                for x in f.x..f.x + f.side {
                    layer.set(x, y, true);
                }
            }
        }
    }
}

/// Opens the corner squares on every layer. Fails with `ImageTooSmall` when
/// the stencil cannot hold them.
pub fn add_fiducials(set: &StencilSet, cfg: &PipelineConfig) -> Result<StencilSet> {
    let fiducials = fiducial_layout(set.width(), set.height(), cfg)?;
    let mut out = set.clone();
    stamp(&mut out, &fiducials);
    for f in fiducials {
        if !out.fiducials.contains(&f) {
            out.fiducials.push(f);
        }
    }
    out.registered = true;
    Ok(out)
}

/// Like [`add_fiducials`], but an undersized set is returned unchanged and
/// flagged unregistered.
pub fn register(set: StencilSet, cfg: &PipelineConfig) -> StencilSet {
    match add_fiducials(&set, cfg) {
        Ok(stamped) => stamped,
        Err(_) => {
            let mut set = set;
            set.registered = false;
            set
        }
    }
}

/// Re-opens the squares a set already records, e.g. after a mode pass.
pub(crate) fn restamp(set: &mut StencilSet) {
    let fiducials = set.fiducials.clone();
    stamp(set, &fiducials);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{BitStencil, RenderMode};

    fn empty(w: u32, h: u32) -> StencilSet {
        let l = BitStencil::closed(w, h).unwrap();
        StencilSet::new(
            [l.clone(), l.clone(), l.clone(), l],
            RenderMode::FourColor,
            String::new(),
        )
        .unwrap()
    }

    #[test]
    fn corners_on_64() {
        let out = add_fiducials(&empty(64, 64), &PipelineConfig::default()).unwrap();
        assert!(out.registered);
        assert_eq!(out.fiducials.len(), 4);
        for ch in Channel::ALL {
            let layer = out.layer(ch);
            assert_eq!(layer.open_count(), 4 * 36);
            for (x, y) in [(8, 8), (13, 13), (50, 8), (55, 13), (8, 55), (55, 55)] {
                assert!(layer.get(x, y), "{ch} ({x},{y})");
            }
            for (x, y) in [(7, 8), (14, 8), (49, 50), (56, 56)] {
                assert!(!layer.get(x, y), "{ch} ({x},{y})");
            }
        }
    }

    #[test]
    fn idempotent() {
        let cfg = PipelineConfig::default();
        let once = add_fiducials(&empty(64, 40), &cfg).unwrap();
        let twice = add_fiducials(&once, &cfg).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn too_small() {
        let cfg = PipelineConfig::default();
        let err = add_fiducials(&empty(20, 20), &cfg).unwrap_err();
        assert!(matches!(err, Error::ImageTooSmall { needed: 28, .. }));
        // exactly at the limit fits
        assert!(add_fiducials(&empty(28, 28), &cfg).is_ok());

        let set = register(empty(20, 20), &cfg);
        assert!(!set.registered);
        assert!(set.fiducials.is_empty());
        assert_eq!(set.open_counts(), [0; 4]);
    }
}
