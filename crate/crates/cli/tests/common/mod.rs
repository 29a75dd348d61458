#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use prost_core::imageio::{write_frame, GtLabel};
use prost_core::{FrameBuffer, GroundTruthFrame};

pub fn prost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prost"))
        .args(args)
        .output()
        .expect("spawn prost")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Static RGB texture with values in [0.2, 0.6].
pub fn textured(w: usize, h: usize) -> FrameBuffer {
    let mut data = vec![0.0; w * h * 3];
    for c in 0..3 {
        for y in 0..h {
            for x in 0..w {
                data[c * w * h + y * w + x] = 0.2 + 0.1 * ((x + 2 * y + c) % 5) as f64;
            }
        }
    }
    FrameBuffer::new(w, h, 3, data).unwrap()
}

/// `frame` with a solid square of `value` at `(x0, y0)`.
pub fn with_block(
    frame: &FrameBuffer,
    x0: usize,
    y0: usize,
    size: usize,
    value: f64,
) -> FrameBuffer {
    let (w, h) = (frame.width(), frame.height());
    let mut out = frame.clone();
    let data = out.data_mut();
    for c in 0..frame.channels() {
        for y in y0..(y0 + size).min(h) {
            for x in x0..(x0 + size).min(w) {
                data[c * w * h + y * w + x] = value;
            }
        }
    }
    out
}

/// Ground truth marking the same square as foreground.
pub fn block_truth(w: usize, h: usize, block: Option<(usize, usize, usize)>) -> GroundTruthFrame {
    let mut labels = vec![GtLabel::Background; w * h];
    if let Some((x0, y0, size)) = block {
        for y in y0..(y0 + size).min(h) {
            for x in x0..(x0 + size).min(w) {
                labels[y * w + x] = GtLabel::Foreground;
            }
        }
    }
    GroundTruthFrame::new(w, h, labels).unwrap()
}

/// Writes a sequence in the benchmark layout, frames numbered from 1.
pub fn write_sequence(
    root: &Path,
    frames: &[FrameBuffer],
    truths: Option<&[GroundTruthFrame]>,
    roi: Option<(u64, u64)>,
) {
    let input = root.join("input");
    std::fs::create_dir_all(&input).unwrap();
    for (i, f) in frames.iter().enumerate() {
        write_frame(f, input.join(format!("in{:06}.ppm", i + 1))).unwrap();
    }
    if let Some(truths) = truths {
        let gt = root.join("groundtruth");
        std::fs::create_dir_all(&gt).unwrap();
        for (i, t) in truths.iter().enumerate() {
            std::fs::write(gt.join(format!("gt{:06}.pgm", i + 1)), t.encode()).unwrap();
        }
    }
    if let Some((a, b)) = roi {
        std::fs::write(root.join("temporalROI.txt"), format!("{a} {b}\n")).unwrap();
    }
}

/// Static textured scene with a bright square in the frames listed.
pub fn block_sequence(
    root: &Path,
    n: usize,
    w: usize,
    h: usize,
    block_frames: &[usize],
    roi: (u64, u64),
) {
    let bg = textured(w, h);
    let block = (w / 4, h / 4, w / 2);
    let frames: Vec<FrameBuffer> = (1..=n)
        .map(|i| {
            if block_frames.contains(&i) {
                with_block(&bg, block.0, block.1, block.2, 1.0)
            } else {
                bg.clone()
            }
        })
        .collect();
    let truths: Vec<GroundTruthFrame> = (1..=n)
        .map(|i| block_truth(w, h, block_frames.contains(&i).then_some(block)))
        .collect();
    write_sequence(root, &frames, Some(&truths), Some(roi));
}

pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}
