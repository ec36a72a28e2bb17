//! Built-in 5x7 bitmap font for printing error codes as a stencil.

use crate::error::{Error, Result};
use crate::stencil::BitStencil;

pub const GLYPH_WIDTH: u32 = 5;
pub const GLYPH_HEIGHT: u32 = 7;
/// Horizontal advance per character: glyph plus one column of spacing.
pub const ADVANCE: u32 = GLYPH_WIDTH + 1;
pub const MAX_CODE_LEN: usize = 16;

/// Row masks, top row first; bit 4 is the leftmost column.
const FONT: &[(char, [u8; 7])] = &[
    (' ', [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00]),
    ('0', [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E]),
    ('1', [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('2', [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F]),
    ('3', [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E]),
    ('4', [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02]),
    ('5', [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E]),
    ('6', [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E]),
    ('7', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08]),
    ('8', [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E]),
    ('9', [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C]),
    ('A', [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('B', [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E]),
    ('C', [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E]),
    ('D', [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C]),
    ('E', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F]),
    ('F', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10]),
    ('G', [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F]),
    ('H', [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('I', [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('J', [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C]),
    ('K', [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11]),
    ('L', [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F]),
    ('M', [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11]),
    ('N', [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11]),
    ('O', [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('P', [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10]),
    ('Q', [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D]),
    ('R', [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11]),
    ('S', [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E]),
    ('T', [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04]),
    ('U', [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('V', [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04]),
    ('W', [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A]),
    ('X', [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11]),
    ('Y', [0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04]),
    ('Z', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F]),
    ('-', [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00]),
    ('_', [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F]),
    ('.', [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C]),
    (':', [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00]),
    ('/', [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00]),
    ('!', [0x04, 0x04, 0x04, 0x04, 0x04, 0x00, 0x04]),
    ('?', [0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04]),
    ('#', [0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A]),
    ('+', [0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00]),
];

/// Glyph rows for `c`. Lowercase maps to uppercase; anything without a
/// glyph renders as `?`.
pub fn glyph(c: char) -> [u8; 7] {
    let c = c.to_ascii_uppercase();
    FONT.iter()
        .find(|(g, _)| *g == c)
        .or_else(|| FONT.iter().find(|(g, _)| *g == '?'))
        .map(|(_, rows)| *rows)
        .expect("font has a fallback glyph")
}

pub fn has_glyph(c: char) -> bool {
    let c = c.to_ascii_uppercase();
    FONT.iter().any(|(g, _)| *g == c)
}

/// Renders `code` centred on a closed stencil; glyph dots are open.
pub fn render_error_stencil(code: &str, width: u32, height: u32) -> Result<BitStencil> {
    let len = code.chars().count();
    let min_width = ADVANCE * len as u32;
    if len > MAX_CODE_LEN || width < min_width || height < GLYPH_HEIGHT + 1 {
        return Err(Error::TextTooLong {
            text: code.to_string(),
            min_width: min_width.max(1),
            width,
            height,
        });
    }
    let mut out = BitStencil::closed(width, height)?;
    if len == 0 {
        return Ok(out);
    }
    let text_width = min_width - 1;
    let x0 = (width - text_width) / 2;
    let y0 = (height - GLYPH_HEIGHT) / 2;
    for (i, c) in code.chars().enumerate() {
        let gx = x0 + i as u32 * ADVANCE;
        for (row, mask) in glyph(c).iter().enumerate() {
            for col in 0..GLYPH_WIDTH {
                if mask & (0x10 >> col) != 0 {
                    out.set(gx + col, y0 + row as u32, true);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dots(c: char) -> usize {
        glyph(c).iter().map(|r| r.count_ones() as usize).sum()
    }

    #[test]
    fn empty_code_is_blank() {
        assert_eq!(render_error_stencil("", 8, 8).unwrap().open_count(), 0);
    }

    #[test]
    fn dot_count_is_sum_of_glyphs() {
        let s = render_error_stencil("E01", 64, 16).unwrap();
        assert_eq!(s.open_count(), dots('E') + dots('0') + dots('1'));
    }

    #[test]
    fn deterministic_and_centred() {
        let a = render_error_stencil("E-SEP", 40, 9).unwrap();
        assert_eq!(a, render_error_stencil("E-SEP", 40, 9).unwrap());
        // 29 px of text in 40 -> starts at column 5; 7 rows in 9 -> row 1
        let cols: Vec<u32> = (0..40).filter(|&x| (0..9).any(|y| a.get(x, y))).collect();
        assert_eq!((cols[0], *cols.last().unwrap()), (5, 33));
        assert!((0..40).all(|x| !a.get(x, 0) && !a.get(x, 8)));
    }

    #[test]
    fn size_limits() {
        assert!(render_error_stencil("ABC", 17, 8).is_err());
        assert!(render_error_stencil("ABC", 18, 8).is_ok());
        assert!(render_error_stencil("A", 6, 7).is_err());
        assert!(render_error_stencil(&"A".repeat(17), 400, 8).is_err());
    }

    #[test]
    fn unknown_characters_fall_back() {
        assert_eq!(glyph('~'), glyph('?'));
        assert_eq!(glyph('e'), glyph('E'));
        assert!(has_glyph('-') && !has_glyph('~'));
    }
}
