//! Binary PGM (`P5`) and PPM (`P6`) with `maxval = 255`.
//!
//! Frames decode to intensities `byte / 255` in channel-planar order and
//! encode with clamping to `[0, 1]` and round-half-up quantization.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{FrameBuffer, SegmentationMask};

/// Either kind of payload [`write_pnm`] accepts.
pub enum PnmImage<'a> {
    Frame(&'a FrameBuffer),
    Mask(&'a SegmentationMask),
}

/// Raw decoded netpbm payload.
pub(crate) struct RawPnm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub bytes: Vec<u8>,
}

pub(crate) fn decode_raw(path: &Path, buf: &[u8]) -> Result<RawPnm> {
    let fail = |msg: String| Error::format(path, msg);

    let channels = match buf.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(other) => {
            return Err(fail(format!(
                "unsupported netpbm magic number {:?} (expected P5 or P6)",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(fail("file too short for a netpbm header".into())),
    };

    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (slot, name) in fields.iter_mut().zip(["width", "height", "maxval"]) {
        // whitespace and comments
        loop {
            match buf.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while buf.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while buf.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(fail(format!("malformed header: missing {name}")));
        }
        *slot = std::str::from_utf8(&buf[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fail(format!("malformed header: bad {name}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(fail(format!(
            "unsupported maxval {maxval} (only 255 is supported)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(fail(format!("empty image {width}×{height}")));
    }
    match buf.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(fail("malformed header: no whitespace after maxval".into())),
    }

    let expected = width * height * channels;
    let payload = &buf[pos..];
    if payload.len() < expected {
        return Err(fail(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    Ok(RawPnm {
        width,
        height,
        channels,
        bytes: payload[..expected].to_vec(),
    })
}

/// Decodes an in-memory P5/P6 image. `path` is only used in error messages.
pub fn decode_pnm(path: &Path, buf: &[u8]) -> Result<FrameBuffer> {
    let raw = decode_raw(path, buf)?;
    let n = raw.width * raw.height;
    let mut data = vec![0.0; n * raw.channels];
    for (i, px) in raw.bytes.chunks_exact(raw.channels).enumerate() {
        for (c, b) in px.iter().enumerate() {
            data[c * n + i] = *b as f64 / 255.0;
        }
    }
    FrameBuffer::new(raw.width, raw.height, raw.channels, data)
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<FrameBuffer> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(path, &buf)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn header(magic: &str, width: usize, height: usize) -> Vec<u8> {
    format!("{magic}\n{width} {height}\n255\n").into_bytes()
}

pub fn encode_frame(frame: &FrameBuffer) -> Vec<u8> {
    let channels = frame.channels();
    let n = frame.width() * frame.height();
    let mut out = header(
        if channels == 1 { "P5" } else { "P6" },
        frame.width(),
        frame.height(),
    );
    out.reserve(n * channels);
    for i in 0..n {
        for c in 0..channels {
            out.push(quantize(frame.data()[c * n + i]));
        }
    }
    out
}

/// Masks become P5 with foreground 255 and background 0.
pub fn encode_mask(mask: &SegmentationMask) -> Vec<u8> {
    let mut out = header("P5", mask.width(), mask.height());
    out.extend(mask.labels().iter().map(|l| if *l { 255u8 } else { 0 }));
    out
}

pub fn write_pnm(image: PnmImage<'_>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match image {
        PnmImage::Frame(f) => encode_frame(f),
        PnmImage::Mask(m) => encode_mask(m),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_frame(frame: &FrameBuffer, path: impl AsRef<Path>) -> Result<()> {
    write_pnm(PnmImage::Frame(frame), path)
}

pub fn write_mask(mask: &SegmentationMask, path: impl AsRef<Path>) -> Result<()> {
    write_pnm(PnmImage::Mask(mask), path)
}
