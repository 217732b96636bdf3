//! Binary PGM (`P5`) with 8- or 16-bit samples.

use super::RasterImage;
use crate::error::{Error, Result};

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(start, format!("{what} does not fit in 64 bits")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(magic) if magic[0] == b'P' => {
            return Err(Error::format(
                0,
                format!("unsupported magic {:?}, only P5 is read", String::from_utf8_lossy(magic)),
            ))
        }
        _ => return Err(Error::format(0, "missing P5 magic")),
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::format(2, "expected whitespace after magic"));
    }
    let width_at = cur.pos;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = {
        cur.skip_whitespace_and_comments();
        cur.pos
    };
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(width_at, "image dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(Error::format(cur.pos, "expected single whitespace before raster")),
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: cur.pos + 1,
    })
}

/// Decodes a binary PGM; intensities are divided by maxval and row 0 is the
/// top of the image.
pub fn read_pgm(bytes: &[u8]) -> Result<RasterImage> {
    let h = parse_header(bytes)?;
    let bytes_per_sample = if h.maxval > 255 { 2 } else { 1 };
    let count = h
        .width
        .checked_mul(h.height)
        .ok_or_else(|| Error::format(3, "image dimensions overflow"))?;
    let needed = count * bytes_per_sample;
    let payload = &bytes[h.data_start..];
    if payload.len() < needed {
        return Err(Error::format(
            bytes.len(),
            format!("truncated raster: {needed} bytes expected, {} present", payload.len()),
        ));
    }
    let scale = h.maxval as f64;
    let mut pixels = Vec::with_capacity(count);
    for i in 0..count {
        let offset = h.data_start + i * bytes_per_sample;
        let value = if bytes_per_sample == 1 {
            payload[i] as u32
        } else {
            u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as u32
        };
        if value > h.maxval {
            return Err(Error::format(offset, format!("sample {value} exceeds maxval {}", h.maxval)));
        }
        pixels.push(value as f64 / scale);
    }
    RasterImage::new(h.width, h.height, pixels)
}

fn encode(image: &RasterImage, maxval: u32) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    let scale = maxval as f64;
    for &p in image.pixels() {
        let q = (p * scale).round() as u32;
        if maxval > 255 {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

/// 8-bit encoding (maxval 255).
pub fn write_pgm(image: &RasterImage) -> Vec<u8> {
    encode(image, 255)
}

/// 16-bit big-endian encoding (maxval 65535).
pub fn write_pgm16(image: &RasterImage) -> Vec<u8> {
    encode(image, 65535)
}
