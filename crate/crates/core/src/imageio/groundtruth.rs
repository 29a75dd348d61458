//! Ground-truth label images in the public change-detection convention:
//! gray 0 background, 50 shadow, 85 outside the region of interest,
//! 170 unknown (motion boundary), 255 foreground.

use std::fs;
use std::path::Path;

use super::pnm::decode_raw;
use crate::error::{ensure_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GtLabel {
    Background,
    Shadow,
    OutsideRoi,
    Unknown,
    Foreground,
}

impl GtLabel {
    pub fn from_gray(value: u8) -> Option<Self> {
        match value {
            0 => Some(GtLabel::Background),
            50 => Some(GtLabel::Shadow),
            85 => Some(GtLabel::OutsideRoi),
            170 => Some(GtLabel::Unknown),
            255 => Some(GtLabel::Foreground),
            _ => None,
        }
    }

    pub fn gray(self) -> u8 {
        match self {
            GtLabel::Background => 0,
            GtLabel::Shadow => 50,
            GtLabel::OutsideRoi => 85,
            GtLabel::Unknown => 170,
            GtLabel::Foreground => 255,
        }
    }

    /// Ground truth for scoring: `Some(true)` foreground, `Some(false)`
    /// background (shadow included), `None` excluded from scoring.
    pub fn truth(self) -> Option<bool> {
        match self {
            GtLabel::Background | GtLabel::Shadow => Some(false),
            GtLabel::Foreground => Some(true),
            GtLabel::OutsideRoi | GtLabel::Unknown => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruthFrame {
    width: usize,
    height: usize,
    labels: Vec<GtLabel>,
}

impl GroundTruthFrame {
    pub fn new(width: usize, height: usize, labels: Vec<GtLabel>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "empty ground truth {width}×{height}"
            )));
        }
        ensure_len(labels.len(), width * height, "ground-truth labels")?;
        Ok(GroundTruthFrame {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[GtLabel] {
        &self.labels
    }

    /// Decodes a P5 image; `path` is used in error messages only.
    pub fn decode(path: &Path, buf: &[u8]) -> Result<Self> {
        let raw = decode_raw(path, buf)?;
        if raw.channels != 1 {
            return Err(Error::format(
                path,
                "ground truth must be a P5 (grayscale) image",
            ));
        }
        let labels = raw
            .bytes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                GtLabel::from_gray(*b).ok_or_else(|| {
                    Error::format(
                        path,
                        format!(
                            "unexpected ground-truth gray value {b} at pixel ({}, {})",
                            i % raw.width,
                            i / raw.width
                        ),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GroundTruthFrame::new(raw.width, raw.height, labels)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.labels.iter().map(|l| l.gray()));
        out
    }
}

pub fn read_groundtruth(path: impl AsRef<Path>) -> Result<GroundTruthFrame> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    GroundTruthFrame::decode(path, &buf)
}
