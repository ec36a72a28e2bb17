//! Continuous-tone RGB images and the per-pixel colour measures the
//! separation stage is built on.

use std::io::Cursor;

use image::{DynamicImage, ImageDecoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// Largest accepted width or height. Larger inputs are rejected, never resampled.
pub const MAX_DIMENSION: u32 = 4096;

pub type Rgb = [u8; 3];

/// Row-major RGB8 pixel grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

pub(crate) fn check_dimensions(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(Error::ImageTooLarge {
            width,
            height,
            max: MAX_DIMENSION,
        });
    }
    Ok(())
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        check_dimensions(width, height)?;
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::PixelCount {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Result<Self> {
        check_dimensions(width, height)?;
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Result<Self> {
        check_dimensions(width, height)?;
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Applies `f` to every pixel, keeping the dimensions.
    pub fn map_pixels(&self, f: impl Fn(Rgb) -> Rgb) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Decodes a PNG. Transparent pixels are composited over white and the
    /// EXIF orientation tag, when present, is applied.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
        let mut decoder = reader
            .into_decoder()
            .map_err(|e| Error::Decode(e.to_string()))?;
        let (width, height) = decoder.dimensions();
        // Reject on the header alone so oversized uploads are never inflated.
        check_dimensions(width, height)?;
        let orientation = decoder
            .orientation()
            .map_err(|e| Error::Decode(e.to_string()))?;
        let mut img =
            DynamicImage::from_decoder(decoder).map_err(|e| Error::Decode(e.to_string()))?;
        img.apply_orientation(orientation);

        let rgba = img.into_rgba8();
        let (width, height) = rgba.dimensions();
        let pixels = rgba
            .pixels()
            .map(|p| {
                let [r, g, b, a] = p.0;
                [over_white(r, a), over_white(g, a), over_white(b, a)]
            })
            .collect();
        Self::new(width, height, pixels)
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.width, self.height);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder
                .write_header()
                .map_err(|e| Error::Encode(e.to_string()))?;
            writer
                .write_image_data(self.pixels.as_flattened())
                .map_err(|e| Error::Encode(e.to_string()))?;
        }
        Ok(out)
    }
}

fn over_white(c: u8, a: u8) -> u8 {
    let (c, a) = (c as u32, a as u32);
    ((c * a + 255 * (255 - a) + 127) / 255) as u8
}

/// Rec. 709 luma in [0, 1].
pub fn luma(p: Rgb) -> f64 {
    0.2126 * p[0] as f64 / 255.0 + 0.7152 * p[1] as f64 / 255.0 + 0.0722 * p[2] as f64 / 255.0
}

/// Complementary ink fractions `(c, m, y)`, no undercolour removal.
pub fn ink_cmy(p: Rgb) -> (f64, f64, f64) {
    let ink = |v: u8| (255 - v) as f64 / 255.0;
    (ink(p[0]), ink(p[1]), ink(p[2]))
}

/// Spread between the strongest and weakest ink, i.e. how far from neutral
/// grey the pixel sits.
pub fn ink_chroma(p: Rgb) -> f64 {
    let max = p.iter().max().copied().unwrap_or(0);
    let min = p.iter().min().copied().unwrap_or(0);
    (max - min) as f64 / 255.0
}
