//! ESC/POS `GS v 0` raster frames and print ordering.
//!
//! Frame layout, all multi-byte values little-endian:
//!
//! ```text
//! 1D 76 30 00 | xL xH (bytes per row) | yL yH (rows) | rows...
//! ```
//!
//! Rows run top to bottom, packed MSB-first (leftmost pixel is bit 7), pad
//! bits zero. A 1 bit prints a dot, i.e. an open mesh cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{BitStencil, Channel, StencilSet};

pub const RASTER_HEADER: [u8; 4] = [0x1D, 0x76, 0x30, 0x00];
pub const HEADER_LEN: usize = 8;

/// `ESC d n`: print and feed `n` lines. Sent after every frame.
pub const FEED_LINES: u8 = 4;
pub const FEED_COMMAND: [u8; 3] = [0x1B, 0x64, FEED_LINES];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterFrame {
    bytes: Vec<u8>,
}

impl RasterFrame {
    /// Wraps raw bytes after checking that the header and length agree.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let (row_bytes, rows) = parse_header(&bytes)?;
        if bytes.len() != HEADER_LEN + row_bytes * rows {
            return Err(Error::MalformedFrame("length does not match header"));
        }
        Ok(Self { bytes })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Decodes the frame back to a stencil of the given pixel width. The
    /// wire format only carries whole bytes per row, so the caller supplies
    /// the width; pad bits must be zero.
    pub fn unpack(&self, width: u32) -> Result<BitStencil> {
        let (row_bytes, rows) = parse_header(&self.bytes)?;
        if row_bytes != (width as usize).div_ceil(8) {
            return Err(Error::MalformedFrame("width does not match bytes per row"));
        }
        let data = &self.bytes[HEADER_LEN..];
        let mut bits = Vec::with_capacity(width as usize * rows);
        for row in data.chunks(row_bytes.max(1)).take(rows) {
            for x in 0..row_bytes * 8 {
                let bit = row[x / 8] & (0x80 >> (x % 8)) != 0;
                if x < width as usize {
                    bits.push(bit);
                } else if bit {
                    return Err(Error::MalformedFrame("non-zero pad bits"));
                }
            }
        }
        BitStencil::from_bits(width, rows as u32, bits)
    }

    /// Width rounded up to a whole byte, as carried by the header.
    pub fn padded_width(&self) -> u32 {
        u16::from_le_bytes([self.bytes[4], self.bytes[5]]) as u32 * 8
    }

    pub fn height(&self) -> u32 {
        u16::from_le_bytes([self.bytes[6], self.bytes[7]]) as u32
    }
}

fn parse_header(bytes: &[u8]) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedFrame("shorter than the header"));
    }
    if bytes[..4] != RASTER_HEADER {
        return Err(Error::MalformedFrame("missing GS v 0 prefix"));
    }
    let row_bytes = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let rows = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    Ok((row_bytes, rows))
}

pub fn pack_raster(s: &BitStencil) -> Result<RasterFrame> {
    let row_bytes = (s.width() as usize).div_ceil(8);
    let row_field =
        u16::try_from(row_bytes).map_err(|_| Error::StencilTooWide { width: s.width() })?;
    let rows = u16::try_from(s.height()).map_err(|_| Error::StencilTooWide { width: s.width() })?;

    let mut bytes = Vec::with_capacity(HEADER_LEN + row_bytes * rows as usize);
    bytes.extend_from_slice(&RASTER_HEADER);
    bytes.extend_from_slice(&row_field.to_le_bytes());
    bytes.extend_from_slice(&rows.to_le_bytes());
    for row in s.bits().chunks(s.width() as usize) {
        let start = bytes.len();
        bytes.resize(start + row_bytes, 0);
        for (x, _) in row.iter().enumerate().filter(|(_, &open)| open) {
            bytes[start + x / 8] |= 0x80 >> (x % 8);
        }
    }
    Ok(RasterFrame { bytes })
}

/// Splits a printer byte stream (frames, each followed by a feed command)
/// back into frames. Used to inspect capture files.
pub fn split_stream(mut stream: &[u8]) -> Result<Vec<RasterFrame>> {
    let mut frames = Vec::new();
    while !stream.is_empty() {
        let (row_bytes, rows) = parse_header(stream)?;
        let end = HEADER_LEN + row_bytes * rows;
        if stream.len() < end {
            return Err(Error::MalformedFrame("truncated frame"));
        }
        frames.push(RasterFrame {
            bytes: stream[..end].to_vec(),
        });
        stream = &stream[end..];
        if stream.starts_with(&FEED_COMMAND) {
            stream = &stream[FEED_COMMAND.len()..];
        }
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrintStrategy {
    /// Always C, M, Y, K.
    Cmyk,
    /// C/M/Y by open area, largest first; K always last.
    #[serde(rename = "area")]
    AreaDescBlackLast,
}

impl PrintStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            PrintStrategy::Cmyk => "cmyk",
            PrintStrategy::AreaDescBlackLast => "area",
        }
    }
}

impl std::fmt::Display for PrintStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PrintStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cmyk" => Ok(PrintStrategy::Cmyk),
            "area" => Ok(PrintStrategy::AreaDescBlackLast),
            other => Err(format!(
                "unknown strategy {other:?} (expected cmyk or area)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintPlan {
    pub order: [Channel; 4],
    pub strategy: PrintStrategy,
}

pub fn plan_order(set: &StencilSet, strategy: PrintStrategy) -> PrintPlan {
    plan_from_counts(set.open_counts(), strategy)
}

/// Ordering from open-bit counts indexed C, M, Y, K.
pub fn plan_from_counts(counts: [usize; 4], strategy: PrintStrategy) -> PrintPlan {
    let order = match strategy {
        PrintStrategy::Cmyk => Channel::ALL,
        PrintStrategy::AreaDescBlackLast => {
            let mut colors = [Channel::C, Channel::M, Channel::Y];
            // stable sort keeps C, M, Y order among equal areas
            colors.sort_by(|a, b| counts[b.index()].cmp(&counts[a.index()]));
            [colors[0], colors[1], colors[2], Channel::K]
        }
    };
    PrintPlan { order, strategy }
}
