//! Image, mask and `.ffm` codecs.
//!
//! Readers accept 8-bit grayscale PGM (binary `P5` or ASCII `P2`, maxval 255) and
//! 8-bit grayscale PNG. The format is sniffed from the leading bytes, not the
//! file extension.
//!
//! `.ffm` layout, all little-endian:
//!
//! ```text
//! b"FFM1" | width: u32 | height: u32 | width * height f32 values, row-major
//! ```

use std::fs;
use std::io::Cursor;
use std::path::Path;

use fracseg_core::{BinaryMask, FloatMap, GrayImage, Grid};
use thiserror::Error;

pub const FFM_MAGIC: &[u8; 4] = b"FFM1";
const FFM_HEADER_LEN: usize = 12;
const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("mask contains value {0}; only 0 and 255 are allowed")]
    NotBinaryMask(u8),
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("value {0} cannot be stored")]
    OutOfRange(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn corrupt(msg: impl Into<String>) -> IoError {
    IoError::CorruptFile(msg.into())
}

/// Decoded 8-bit grayscale raster.
struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_image(&fs::read(path)?)
}

pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    let r = decode_raster(bytes)?;
    GrayImage::from_u8(r.width, r.height, &r.data).map_err(|e| corrupt(e.to_string()))
}

/// Reads a mask stored as 0/255; 255 becomes foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    decode_mask(&fs::read(path)?)
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let r = decode_raster(bytes)?;
    if let Some(&v) = r.data.iter().find(|&&v| v != 0 && v != 255) {
        return Err(IoError::NotBinaryMask(v));
    }
    let data = r.data.into_iter().map(|v| u8::from(v == 255)).collect();
    BinaryMask::new(r.width, r.height, data).map_err(|e| corrupt(e.to_string()))
}

fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    match bytes {
        [b'P', b'5', ..] | [b'P', b'2', ..] => decode_pgm(bytes),
        _ if bytes.starts_with(PNG_SIGNATURE) => decode_png(bytes),
        [b'P', b'1'..=b'7', ..] => Err(IoError::UnsupportedFormat("only grayscale PGM (P2/P5) is supported".into())),
        _ => Err(IoError::UnsupportedFormat("expected PGM or PNG".into())),
    }
}

/// Whitespace/comment-aware tokenizer over a PGM header.
struct PgmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmHeader<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(format!("bad PGM {what}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Raster> {
    let ascii = bytes[1] == b'2';
    let mut hdr = PgmHeader { bytes, pos: 2 };
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval = hdr.number("maxval")?;
    if maxval != 255 {
        return Err(IoError::UnsupportedFormat(format!("PGM maxval {maxval}; only 255 is supported")));
    }
    let len = width.checked_mul(height).ok_or_else(|| corrupt("PGM dimensions overflow"))?;
    if len == 0 {
        return Err(corrupt("PGM has zero area"));
    }
    let data = if ascii {
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let v = hdr.number("sample")?;
            data.push(u8::try_from(v).map_err(|_| corrupt(format!("PGM sample {v} exceeds maxval")))?);
        }
        data
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        if !bytes.get(hdr.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(corrupt("PGM header not terminated"));
        }
        let body = &bytes[hdr.pos + 1..];
        if body.len() < len {
            return Err(corrupt(format!("PGM raster has {} of {len} bytes", body.len())));
        }
        body[..len].to_vec()
    };
    Ok(Raster { width, height, data })
}

fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| corrupt(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(IoError::UnsupportedFormat(format!("PNG color type {:?}; only grayscale", info.color_type)));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(IoError::UnsupportedFormat(format!("PNG bit depth {:?}; only 8-bit", info.bit_depth)));
    }
    let size = reader.output_buffer_size().ok_or_else(|| corrupt("PNG too large"))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| corrupt(e.to_string()))?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let stride = frame.line_size;
    let mut data = Vec::with_capacity(width * height);
    for row in buf.chunks(stride).take(height) {
        data.extend_from_slice(&row[..width]);
    }
    Ok(Raster { width, height, data })
}

fn encode_png(width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Result<Vec<u8>> {
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| IoError::UnsupportedFormat("image too large for PNG".into()));
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, to_u32(width)?, to_u32(height)?);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(depth);
    let mut writer = encoder.write_header().map_err(|e| IoError::Io(e.into()))?;
    writer.write_image_data(data).map_err(|e| IoError::Io(e.into()))?;
    writer.finish().map_err(|e| IoError::Io(e.into()))?;
    Ok(out)
}

/// Writes a mask as an 8-bit grayscale PNG with foreground 255.
pub fn write_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = mask.as_slice().iter().map(|&v| v * 255).collect();
    fs::write(path, encode_png(mask.width(), mask.height(), png::BitDepth::Eight, &data)?)?;
    Ok(())
}

/// Writes an 8-bit grayscale PNG.
pub fn write_image_png(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let data = image
        .as_slice()
        .iter()
        .map(|&v| u8::try_from(v).map_err(|_| IoError::OutOfRange(f64::from(v))))
        .collect::<Result<Vec<u8>>>()?;
    fs::write(path, encode_png(image.width(), image.height(), png::BitDepth::Eight, &data)?)?;
    Ok(())
}

/// 16-bit quantization used by [`export_png16`]: `round(v * 65535)`.
pub fn quantize16(v: f64) -> Result<u16> {
    if !(0.0..=1.0).contains(&v) {
        return Err(IoError::OutOfRange(v));
    }
    Ok((v * 65535.0).round() as u16)
}

pub fn encode_png16(map: &FloatMap) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(map.len() * 2);
    for &v in map.as_slice() {
        data.extend_from_slice(&quantize16(v)?.to_be_bytes());
    }
    encode_png(map.width(), map.height(), png::BitDepth::Sixteen, &data)
}

/// Exports a `[0, 1]` map as a 16-bit grayscale PNG for viewing.
pub fn export_png16(map: &FloatMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_png16(map)?)?;
    Ok(())
}

/// Serializes a map to `.ffm` bytes. Values are stored as `f32`; values that are
/// not finite in `f32` are rejected.
pub fn encode_ffm(map: &FloatMap) -> Result<Vec<u8>> {
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| IoError::OutOfRange(v as f64));
    let mut out = Vec::with_capacity(FFM_HEADER_LEN + 4 * map.len());
    out.extend_from_slice(FFM_MAGIC);
    out.extend_from_slice(&to_u32(map.width())?.to_le_bytes());
    out.extend_from_slice(&to_u32(map.height())?.to_le_bytes());
    for &v in map.as_slice() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(IoError::OutOfRange(v));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_ffm(bytes: &[u8]) -> Result<FloatMap> {
    if bytes.len() < FFM_HEADER_LEN {
        return Err(corrupt(format!("{} bytes is shorter than the .ffm header", bytes.len())));
    }
    if &bytes[..4] != FFM_MAGIC {
        return Err(corrupt("bad .ffm magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (width, height) = (word(4), word(8));
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(FFM_HEADER_LEN))
        .ok_or_else(|| corrupt("dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(corrupt(format!("{width}x{height} map needs {expected} bytes, found {}", bytes.len())));
    }
    let data = bytes[FFM_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| {
            let v = f32::from_le_bytes(c.try_into().expect("4 bytes"));
            if v.is_finite() {
                Ok(f64::from(v))
            } else {
                Err(corrupt("non-finite payload value"))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Grid::from_vec(width, height, data).map_err(|e| corrupt(e.to_string()))
}

pub fn write_ffm(map: &FloatMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_ffm(map)?)?;
    Ok(())
}

pub fn read_ffm(path: impl AsRef<Path>) -> Result<FloatMap> {
    decode_ffm(&fs::read(path)?)
}
