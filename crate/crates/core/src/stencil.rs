//! 1-bit stencil layers. Throughout the crate a set bit means *open mesh*:
//! ink passes through and the thermal printer burns a dot there.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::check_dimensions;

/// One ink layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    C,
    M,
    Y,
    K,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::C, Channel::M, Channel::Y, Channel::K];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::C => "c",
            Channel::M => "m",
            Channel::Y => "y",
            Channel::K => "k",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Channel::C),
            "m" => Ok(Channel::M),
            "y" => Ok(Channel::Y),
            "k" => Ok(Channel::K),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitStencil {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BitStencil {
    pub fn closed(width: u32, height: u32) -> Result<Self> {
        check_dimensions(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        })
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        check_dimensions(width, height)?;
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::PixelCount {
                expected,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        check_dimensions(width, height)?;
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::from_bits(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[self.offset(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, open: bool) {
        let i = self.offset(x, y);
        self.bits[i] = open;
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    pub fn open_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dimensions(&self, other: &BitStencil) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Encodes as a 1-bit greyscale PNG with open cells black.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let row_bytes = (self.width as usize).div_ceil(8);
        let mut data = vec![0u8; row_bytes * self.height as usize];
        for (y, row) in self.bits.chunks(self.width as usize).enumerate() {
            let dst = &mut data[y * row_bytes..(y + 1) * row_bytes];
            for (x, &open) in row.iter().enumerate() {
                // grey 0 = black = open; closed cells (and row padding) are white
                if !open {
                    dst[x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.width, self.height);
            encoder.set_color(png::ColorType::Grayscale);
            encoder.set_depth(png::BitDepth::One);
            let mut writer = encoder
                .write_header()
                .map_err(|e| Error::Encode(e.to_string()))?;
            writer
                .write_image_data(&data)
                .map_err(|e| Error::Encode(e.to_string()))?;
        }
        Ok(out)
    }

    /// Decodes a stencil preview. Any dark pixel (luma < 128) reads as open.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| Error::Decode(e.to_string()))?
            .into_luma8();
        let (w, h) = img.dimensions();
        Self::from_bits(w, h, img.pixels().map(|p| p.0[0] < 128).collect())
    }
}

/// Post-processing applied to the separated layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[serde(rename = "fourcolor")]
    FourColor,
    #[serde(rename = "trim")]
    ContourTrim,
    Silhouette,
}

impl RenderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RenderMode::FourColor => "fourcolor",
            RenderMode::ContourTrim => "trim",
            RenderMode::Silhouette => "silhouette",
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fourcolor" => Ok(RenderMode::FourColor),
            "trim" => Ok(RenderMode::ContourTrim),
            "silhouette" => Ok(RenderMode::Silhouette),
            other => Err(format!(
                "unknown mode {other:?} (expected fourcolor, trim or silhouette)"
            )),
        }
    }
}

/// A solid registration square, top-left corner plus side length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fiducial {
    pub x: u32,
    pub y: u32,
    pub side: u32,
}

impl Fiducial {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.side && y >= self.y && y < self.y + self.side
    }
}

/// The four layers of one print, indexed by [`Channel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StencilSet {
    layers: [BitStencil; 4],
    pub mode: RenderMode,
    pub fiducials: Vec<Fiducial>,
    /// False when the image was too small to carry fiducials.
    pub registered: bool,
    pub config_hash: String,
}

impl StencilSet {
    pub fn new(layers: [BitStencil; 4], mode: RenderMode, config_hash: String) -> Result<Self> {
        if layers.iter().any(|l| !l.same_dimensions(&layers[0])) {
            return Err(Error::LayerDimensions);
        }
        Ok(Self {
            layers,
            mode,
            fiducials: Vec::new(),
            registered: false,
            config_hash,
        })
    }

    pub fn layer(&self, ch: Channel) -> &BitStencil {
        &self.layers[ch.index()]
    }

    pub(crate) fn layer_mut(&mut self, ch: Channel) -> &mut BitStencil {
        &mut self.layers[ch.index()]
    }

    pub fn layers(&self) -> &[BitStencil; 4] {
        &self.layers
    }

    pub fn width(&self) -> u32 {
        self.layers[0].width()
    }

    pub fn height(&self) -> u32 {
        self.layers[0].height()
    }

    pub fn open_counts(&self) -> [usize; 4] {
        Channel::ALL.map(|ch| self.layer(ch).open_count())
    }

    pub fn is_fiducial(&self, x: u32, y: u32) -> bool {
        self.fiducials.iter().any(|f| f.contains(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_keeps_bits_and_marks_open_black() {
        let s = BitStencil::from_fn(11, 3, |x, y| (x + y) % 3 == 0).unwrap();
        let png = s.to_png().unwrap();
        assert_eq!(BitStencil::from_png(&png).unwrap(), s);

        let grey = image::load_from_memory(&png).unwrap().into_luma8();
        assert_eq!(grey.get_pixel(0, 0).0[0], 0);
        assert_eq!(grey.get_pixel(1, 0).0[0], 255);
    }

    #[test]
    fn layers_must_agree() {
        let a = BitStencil::closed(4, 4).unwrap();
        let b = BitStencil::closed(4, 5).unwrap();
        let err = StencilSet::new(
            [a.clone(), a.clone(), a, b],
            RenderMode::FourColor,
            String::new(),
        );
        assert!(matches!(err, Err(Error::LayerDimensions)));
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "trim".parse::<RenderMode>().unwrap(),
            RenderMode::ContourTrim
        );
        assert_eq!("K".parse::<Channel>().unwrap(), Channel::K);
        assert!("sepia".parse::<RenderMode>().is_err());
        assert_eq!(
            serde_json::to_string(&RenderMode::FourColor).unwrap(),
            "\"fourcolor\""
        );
    }
}
