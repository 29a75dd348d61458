//! Numbered frame sequences on disk.
//!
//! The default layout follows the change-detection benchmark:
//! `<root>/input/in000001.ppm`, `<root>/groundtruth/gt000001.pgm` and an
//! optional `<root>/temporalROI.txt` holding the first and last evaluated
//! frame numbers.

use std::fs;
use std::path::{Path, PathBuf};

use super::groundtruth::{read_groundtruth, GroundTruthFrame};
use super::pnm::read_pnm;
use crate::error::{Error, Result};
use crate::pipeline::FrameBuffer;

/// A file-name template with a single printf-style index field, e.g.
/// `in%06d.ppm`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramePattern {
    prefix: String,
    suffix: String,
    width: usize,
}

impl FramePattern {
    pub fn parse(template: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "frame pattern {template:?} needs exactly one %d or %0Nd field"
            ))
        };
        let start = template.find('%').ok_or_else(bad)?;
        let rest = &template[start + 1..];
        let d = rest.find('d').ok_or_else(bad)?;
        let spec = &rest[..d];
        let width = if spec.is_empty() {
            0
        } else {
            spec.trim_start_matches('0')
                .parse::<usize>()
                .map_err(|_| bad())?
        };
        let suffix = &rest[d + 1..];
        if suffix.contains('%') {
            return Err(bad());
        }
        Ok(FramePattern {
            prefix: template[..start].to_string(),
            suffix: suffix.to_string(),
            width,
        })
    }

    pub fn render(&self, index: u64) -> String {
        format!(
            "{}{:0width$}{}",
            self.prefix,
            index,
            self.suffix,
            width = self.width
        )
    }

    /// Index encoded in `name`, if it matches this pattern.
    pub fn index_of(&self, name: &str) -> Option<u64> {
        let digits = name
            .strip_prefix(&self.prefix)?
            .strip_suffix(&self.suffix)?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if self.width > 0 && digits.len() < self.width {
            return None;
        }
        digits.parse().ok()
    }
}

impl std::fmt::Display for FramePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.width > 0 {
            write!(f, "{}%0{}d{}", self.prefix, self.width, self.suffix)
        } else {
            write!(f, "{}%d{}", self.prefix, self.suffix)
        }
    }
}

/// Where a sequence lives and which frames are read and scored.
///
/// Frames `first_frame ..= eval_range.1` are read; ground truth is attached
/// to frames inside `eval_range` only.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub input_dir: PathBuf,
    pub groundtruth_dir: Option<PathBuf>,
    pub first_frame: u64,
    pub eval_range: (u64, u64),
    pub input_pattern: FramePattern,
    pub groundtruth_pattern: FramePattern,
}

impl SequenceSpec {
    pub fn new(
        input_dir: impl Into<PathBuf>,
        first_frame: u64,
        eval_range: (u64, u64),
    ) -> Result<Self> {
        let spec = SequenceSpec {
            input_dir: input_dir.into(),
            groundtruth_dir: None,
            first_frame,
            eval_range,
            input_pattern: FramePattern::parse("in%06d.ppm")?,
            groundtruth_pattern: FramePattern::parse("gt%06d.pgm")?,
        };
        spec.check_ranges()?;
        Ok(spec)
    }

    pub fn with_groundtruth(mut self, dir: impl Into<PathBuf>) -> Self {
        self.groundtruth_dir = Some(dir.into());
        self
    }

    fn check_ranges(&self) -> Result<()> {
        let (first, last) = self.eval_range;
        if first > last {
            return Err(Error::InvalidParameter(format!(
                "empty evaluation range {first}..={last}"
            )));
        }
        if self.first_frame > first {
            return Err(Error::InvalidParameter(format!(
                "first frame {} lies after the evaluation start {first}",
                self.first_frame
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_ranges()?;
        if !self.input_dir.is_dir() {
            return Err(Error::InvalidParameter(format!(
                "input directory {} does not exist",
                self.input_dir.display()
            )));
        }
        if let Some(gt) = &self.groundtruth_dir {
            if !gt.is_dir() {
                return Err(Error::InvalidParameter(format!(
                    "ground-truth directory {} does not exist",
                    gt.display()
                )));
            }
        }
        Ok(())
    }

    /// Frames read before evaluation starts.
    pub fn training_frames(&self) -> u64 {
        self.eval_range.0 - self.first_frame
    }

    pub fn frame_count(&self) -> u64 {
        self.eval_range.1 - self.first_frame + 1
    }

    pub fn frame_path(&self, index: u64) -> PathBuf {
        self.input_dir.join(self.input_pattern.render(index))
    }

    pub fn groundtruth_path(&self, index: u64) -> Option<PathBuf> {
        self.groundtruth_dir
            .as_ref()
            .map(|d| d.join(self.groundtruth_pattern.render(index)))
    }

    /// A short display name: the sequence root for the benchmark layout,
    /// otherwise the input directory's own name.
    pub fn name(&self) -> String {
        let dir = if self.input_dir.file_name().is_some_and(|n| n == "input") {
            self.input_dir.parent().unwrap_or(&self.input_dir)
        } else {
            &self.input_dir
        };
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string())
    }
}

/// Builds a [`SequenceSpec`] for a directory in the benchmark layout, or for
/// a bare directory of numbered frames.
///
/// Without `temporalROI.txt` the whole contiguous run of frames starting at
/// the lowest index is evaluated.
pub fn discover_sequence(root: &Path, input_pattern: &FramePattern) -> Result<SequenceSpec> {
    if !root.is_dir() {
        return Err(Error::InvalidParameter(format!(
            "sequence directory {} does not exist",
            root.display()
        )));
    }
    let input_dir = if root.join("input").is_dir() {
        root.join("input")
    } else {
        root.to_path_buf()
    };

    let mut indices: Vec<u64> = fs::read_dir(&input_dir)
        .map_err(|e| Error::io(&input_dir, e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| input_pattern.index_of(&entry.file_name().to_string_lossy()))
        .collect();
    indices.sort_unstable();
    let Some(&first_frame) = indices.first() else {
        return Err(Error::InvalidParameter(format!(
            "no frames matching {input_pattern} in {}",
            input_dir.display()
        )));
    };
    let mut last = first_frame;
    for &i in &indices[1..] {
        if i != last + 1 {
            break;
        }
        last = i;
    }

    let roi_file = root.join("temporalROI.txt");
    let eval_range = if roi_file.is_file() {
        let text = fs::read_to_string(&roi_file).map_err(|e| Error::io(&roi_file, e))?;
        let nums: Vec<u64> = text
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(&roi_file, "expected two frame numbers"))?;
        match nums[..] {
            [a, b] => (a, b),
            _ => return Err(Error::format(&roi_file, "expected two frame numbers")),
        }
    } else {
        (first_frame, last)
    };

    let mut spec = SequenceSpec::new(input_dir, first_frame.min(eval_range.0), eval_range)?;
    spec.input_pattern = input_pattern.clone();
    let gt = root.join("groundtruth");
    if gt.is_dir() {
        spec = spec.with_groundtruth(gt);
    }
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct SequenceItem {
    pub index: u64,
    pub frame: FrameBuffer,
    pub truth: Option<GroundTruthFrame>,
}

/// Streaming reader; decodes one frame per call to `next`.
pub struct SequenceReader {
    spec: SequenceSpec,
    next: u64,
}

impl SequenceReader {
    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    fn read(&self, index: u64) -> Result<SequenceItem> {
        let path = self.spec.frame_path(index);
        if !path.is_file() {
            return Err(Error::MissingFrame { index, path });
        }
        let frame = read_pnm(&path)?;
        let (first, last) = self.spec.eval_range;
        let truth = match self.spec.groundtruth_path(index) {
            Some(gt) if (first..=last).contains(&index) => {
                if !gt.is_file() {
                    return Err(Error::MissingFrame { index, path: gt });
                }
                Some(read_groundtruth(&gt)?)
            }
            _ => None,
        };
        Ok(SequenceItem {
            index,
            frame,
            truth,
        })
    }
}

impl Iterator for SequenceReader {
    type Item = Result<SequenceItem>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next > self.spec.eval_range.1 {
            return None;
        }
        let index = self.next;
        let item = self.read(index).map_err(|e| e.at_frame(index));
        // Stop after the first failure.
        self.next = if item.is_ok() { index + 1 } else { u64::MAX };
        Some(item)
    }
}

pub fn open_sequence(spec: &SequenceSpec) -> Result<SequenceReader> {
    spec.validate()?;
    Ok(SequenceReader {
        spec: spec.clone(),
        next: spec.first_frame,
    })
}
