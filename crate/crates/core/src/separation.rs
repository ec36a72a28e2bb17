//! Colour correction, per-pixel ink classification and ordered dithering.
//!
//! Overlap prevention is structural: every pixel is assigned at most one
//! ink before any halftoning happens, so the dithered layers are disjoint
//! by construction. Black is decided first (solid below `theta_k`, dithered
//! for neutral greys) and CMY only see what is left.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fiducial::register;
use crate::raster::{ink_chroma, luma, RasterImage, Rgb, MAX_DIMENSION};
use crate::stencil::{BitStencil, Channel, RenderMode, StencilSet};

/// 8x8 Bayer index matrix, indexed `[y % 8][x % 8]`.
pub const BAYER8: [[u8; 8]; 8] = [
    [0, 32, 8, 40, 2, 34, 10, 42],
    [48, 16, 56, 24, 50, 18, 58, 26],
    [12, 44, 4, 36, 14, 46, 6, 38],
    [60, 28, 52, 20, 62, 30, 54, 22],
    [3, 35, 11, 43, 1, 33, 9, 41],
    [51, 19, 59, 27, 49, 17, 57, 25],
    [15, 47, 7, 39, 13, 45, 5, 37],
    [63, 31, 55, 23, 61, 29, 53, 21],
];

/// Threshold in (0, 1) for the cell at `(x, y)`: `(v + 0.5) / 64`.
#[inline]
pub fn bayer_threshold(x: u32, y: u32) -> f64 {
    (BAYER8[(y & 7) as usize][(x & 7) as usize] as f64 + 0.5) / 64.0
}

/// HSV triple: hue in degrees (`None` for greys), saturation and value in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub hue: Option<f64>,
    pub sat: f64,
    pub val: f64,
}

pub fn rgb_to_hsv(p: Rgb) -> Hsv {
    let [r, g, b] = p.map(|v| v as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let val = max / 255.0;
    if delta == 0.0 {
        return Hsv {
            hue: None,
            sat: 0.0,
            val,
        };
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    Hsv {
        hue: Some(sector * 60.0),
        sat: delta / max,
        val,
    }
}

/// Back to RGB8, rounding half up.
pub fn hsv_to_rgb(hsv: Hsv) -> Rgb {
    let v = hsv.val;
    let Some(h) = hsv.hue else {
        return [quantize(v); 3];
    };
    let chroma = v * hsv.sat;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = chroma * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = v - chroma;
    [quantize(r + m), quantize(g + m), quantize(b + m)]
}

fn quantize(f: f64) -> u8 {
    (f * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn is_background(hsv: &Hsv, cfg: &PipelineConfig) -> bool {
    let [lo, hi] = cfg.bg_hue_range;
    match hsv.hue {
        Some(h) => h >= lo && h <= hi && hsv.sat <= cfg.bg_sat_max && hsv.val >= cfg.bg_val_min,
        None => false,
    }
}

/// Whitens the brown background band and boosts saturation everywhere else.
pub fn color_correct(img: &RasterImage, cfg: &PipelineConfig) -> RasterImage {
    img.map_pixels(|p| {
        let hsv = rgb_to_hsv(p);
        if is_background(&hsv, cfg) {
            return [255; 3];
        }
        if hsv.hue.is_none() {
            return p;
        }
        hsv_to_rgb(Hsv {
            sat: (hsv.sat * cfg.sat_gain).min(1.0),
            ..hsv
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InkTag {
    None,
    Ink(Channel),
}

/// The single ink a pixel receives, with its coverage.
///
/// `tag == None` exactly when `density == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelClass {
    tag: InkTag,
    density: f64,
}

impl PixelClass {
    pub const NONE: PixelClass = PixelClass {
        tag: InkTag::None,
        density: 0.0,
    };

    /// Coverage is clamped to [0, 1]; zero coverage collapses to `NONE`.
    pub fn ink(channel: Channel, density: f64) -> Self {
        let density = if density.is_nan() {
            0.0
        } else {
            density.clamp(0.0, 1.0)
        };
        if density == 0.0 {
            return Self::NONE;
        }
        Self {
            tag: InkTag::Ink(channel),
            density,
        }
    }

    pub fn tag(&self) -> InkTag {
        self.tag
    }

    pub fn channel(&self) -> Option<Channel> {
        match self.tag {
            InkTag::Ink(ch) => Some(ch),
            InkTag::None => None,
        }
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn is_none(&self) -> bool {
        self.tag == InkTag::None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedImage {
    width: u32,
    height: u32,
    classes: Vec<PixelClass>,
}

impl ClassifiedImage {
    pub fn new(width: u32, height: u32, classes: Vec<PixelClass>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if classes.len() != expected {
            return Err(Error::PixelCount {
                expected,
                actual: classes.len(),
            });
        }
        Ok(Self {
            width,
            height,
            classes,
        })
    }

    pub fn uniform(width: u32, height: u32, class: PixelClass) -> Self {
        Self {
            width,
            height,
            classes: vec![class; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn classes(&self) -> &[PixelClass] {
        &self.classes
    }

    pub fn get(&self, x: u32, y: u32) -> PixelClass {
        self.classes[y as usize * self.width as usize + x as usize]
    }
}

/// Classification of one (already colour-corrected) pixel. Rules apply in
/// order: paper white, solid black, neutral grey shading, strongest CMY ink.
pub fn classify_pixel(p: Rgb, cfg: &PipelineConfig) -> PixelClass {
    let l = luma(p);
    let neutral = ink_chroma(p) < cfg.tau_neutral;
    if l >= cfg.theta_white && neutral {
        return PixelClass::NONE;
    }
    if l < cfg.theta_k {
        return PixelClass::ink(Channel::K, 1.0);
    }
    if neutral {
        return PixelClass::ink(Channel::K, 1.0 - l);
    }
    // The strongest ink sits on the darkest RGB channel; the first minimum
    // wins so ties resolve C, then M, then Y.
    let (idx, &min) = p
        .iter()
        .enumerate()
        .min_by_key(|&(i, &v)| (v, i))
        .expect("three channels");
    let ink = (255 - min) as f64 / 255.0;
    if ink < cfg.tau_ink {
        return PixelClass::NONE;
    }
    PixelClass::ink([Channel::C, Channel::M, Channel::Y][idx], ink)
}

pub fn classify(img: &RasterImage, cfg: &PipelineConfig) -> ClassifiedImage {
    ClassifiedImage {
        width: img.width(),
        height: img.height(),
        classes: img
            .pixels()
            .iter()
            .map(|&p| classify_pixel(p, cfg))
            .collect(),
    }
}

/// Halftones one channel: a cell opens when it belongs to `channel` and its
/// density exceeds the Bayer threshold at that position.
pub fn dither(cls: &ClassifiedImage, channel: Channel, _cfg: &PipelineConfig) -> BitStencil {
    let mut bits = Vec::with_capacity(cls.classes.len());
    for y in 0..cls.height {
        let row = &cls.classes[y as usize * cls.width as usize..][..cls.width as usize];
        for (x, class) in row.iter().enumerate() {
            bits.push(
                class.channel() == Some(channel) && class.density > bayer_threshold(x as u32, y),
            );
        }
    }
    BitStencil::from_bits(cls.width, cls.height, bits)
        .expect("classified image has valid dimensions")
}

fn check_size(img: &RasterImage) -> Result<()> {
    if img.width() > MAX_DIMENSION || img.height() > MAX_DIMENSION {
        return Err(Error::ImageTooLarge {
            width: img.width(),
            height: img.height(),
            max: MAX_DIMENSION,
        });
    }
    Ok(())
}

/// Colour correction, classification, and dithering of all four
/// channels, with fiducials stamped when the image is large enough.
pub fn separate(img: &RasterImage, cfg: &PipelineConfig) -> Result<StencilSet> {
    check_size(img)?;
    cfg.validate()?;
    let classes = classify(&color_correct(img, cfg), cfg);
    let layers = Channel::ALL.map(|ch| dither(&classes, ch, cfg));
    let set = StencilSet::new(layers, RenderMode::FourColor, cfg.hash())?;
    Ok(register(set, cfg))
}

pub(crate) fn object_mask(img: &RasterImage, cfg: &PipelineConfig) -> Result<BitStencil> {
    check_size(img)?;
    cfg.validate()?;
    let classes = classify(&color_correct(img, cfg), cfg);
    BitStencil::from_bits(
        img.width(),
        img.height(),
        classes.classes().iter().map(|c| !c.is_none()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PipelineConfig {
        PipelineConfig::default()
    }

    fn one(p: Rgb) -> RasterImage {
        RasterImage::filled(1, 1, p).unwrap()
    }

    #[test]
    fn hsv_of_brown_sample() {
        let hsv = rgb_to_hsv([200, 170, 120]);
        assert!((hsv.hue.unwrap() - 37.5).abs() < 1e-9);
        assert!((hsv.sat - 0.4).abs() < 1e-9);
        assert!((hsv.val - 200.0 / 255.0).abs() < 1e-9);
    }

    #[test]
    fn hsv_round_trips_every_sixteenth_level() {
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(17) {
                for b in (0..=255).step_by(17) {
                    let p = [r as u8, g as u8, b as u8];
                    assert_eq!(hsv_to_rgb(rgb_to_hsv(p)), p);
                }
            }
        }
    }

    #[test]
    fn color_correct_examples() {
        let white = RasterImage::filled(3, 2, [255; 3]).unwrap();
        assert_eq!(color_correct(&white, &cfg()), white);
        assert_eq!(
            color_correct(&one([200, 170, 120]), &cfg()).pixel(0, 0),
            [255; 3]
        );
        assert_eq!(
            color_correct(&one([255, 0, 0]), &cfg()).pixel(0, 0),
            [255, 0, 0]
        );
    }

    #[test]
    fn greys_are_never_background() {
        let c = PipelineConfig {
            bg_hue_range: [0.0, 360.0],
            bg_sat_max: 1.0,
            bg_val_min: 0.0,
            ..cfg()
        };
        for v in [0u8, 90, 200, 255] {
            assert_eq!(color_correct(&one([v; 3]), &c).pixel(0, 0), [v; 3]);
        }
    }

    #[test]
    fn saturation_is_boosted_outside_background() {
        // hue 210 (blue-ish), S = 0.5 -> 0.65
        let out = color_correct(&one([100, 150, 200]), &cfg()).pixel(0, 0);
        let hsv = rgb_to_hsv(out);
        assert!((hsv.sat - 0.65).abs() < 0.01, "{out:?}");
        assert_eq!(out[2], 200);
    }

    #[test]
    fn classify_examples() {
        let c = cfg();
        assert!(classify_pixel([255; 3], &c).is_none());

        let k = classify_pixel([0; 3], &c);
        assert_eq!((k.channel(), k.density()), (Some(Channel::K), 1.0));

        let grey = classify_pixel([128; 3], &c);
        assert_eq!(grey.channel(), Some(Channel::K));
        assert!((grey.density() - 0.498).abs() < 0.002);

        let blue = classify_pixel([120, 120, 255], &c);
        assert_eq!(blue.channel(), Some(Channel::C));
        assert!((blue.density() - 0.529).abs() < 0.002);
    }

    #[test]
    fn classify_tie_breaks_and_ink_floor() {
        let c = cfg();
        // M and Y tie
        assert_eq!(
            classify_pixel([255, 100, 100], &c).channel(),
            Some(Channel::M)
        );
        // C and Y tie
        assert_eq!(
            classify_pixel([100, 255, 100], &c).channel(),
            Some(Channel::C)
        );
        assert_eq!(
            classify_pixel([200, 200, 0], &c).channel(),
            Some(Channel::Y)
        );
        // saturated red is darker than theta_k and prints black
        assert_eq!(classify_pixel([255, 0, 0], &c).channel(), Some(Channel::K));
        // pale tint: chroma 0.098 is not neutral, but ink 0.098 < tau_ink
        let pale = classify_pixel([255, 230, 255], &c);
        assert!(pale.is_none());
    }

    #[test]
    fn zero_ink_floor_never_yields_inked_zero_density() {
        let c = PipelineConfig {
            tau_ink: 0.0,
            tau_neutral: 0.0,
            ..cfg()
        };
        let p = classify_pixel([255; 3], &c);
        assert!(p.is_none());
        assert_eq!(p.density(), 0.0);
    }

    #[test]
    fn pixel_class_invariant() {
        assert!(PixelClass::ink(Channel::C, 0.0).is_none());
        assert_eq!(PixelClass::ink(Channel::M, 1.5).density(), 1.0);
        assert!(PixelClass::ink(Channel::Y, f64::NAN).is_none());
    }

    #[test]
    fn dither_examples() {
        let c = cfg();
        let count = |d: f64, w: u32, h: u32| {
            dither(
                &ClassifiedImage::uniform(w, h, PixelClass::ink(Channel::C, d)),
                Channel::C,
                &c,
            )
            .open_count()
        };
        assert_eq!(count(0.0, 13, 9), 0);
        assert_eq!(count(1.0, 8, 8), 64);
        assert_eq!(count(0.5, 8, 8), 32);
        assert_eq!(count(0.25, 8, 8), 16);
        let other = ClassifiedImage::uniform(8, 8, PixelClass::ink(Channel::M, 1.0));
        assert_eq!(dither(&other, Channel::C, &c).open_count(), 0);
    }

    #[test]
    fn bayer_is_a_permutation() {
        let mut seen = [false; 64];
        for row in BAYER8 {
            for v in row {
                assert!(!seen[v as usize]);
                seen[v as usize] = true;
            }
        }
    }

    #[test]
    fn separate_rejects_bad_config() {
        let img = RasterImage::filled(4, 4, [255; 3]).unwrap();
        let bad = PipelineConfig {
            theta_k: 0.99,
            ..cfg()
        };
        assert!(matches!(separate(&img, &bad), Err(Error::Config(_))));
    }
}
