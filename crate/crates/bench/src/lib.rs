//! Shared fixtures for the benchmarks.

use nalgebra::DVector;
use prost_core::manifold::random_orthonormal;
use prost_core::pipeline::FrameDims;
use prost_core::{FrameBuffer, LpConfig, PixelWeights, ProstParams, SubspaceBasis};

/// Working resolution of the benchmark configuration.
pub const WIDTH: usize = 160;
pub const HEIGHT: usize = 120;

pub fn rgb_dims() -> FrameDims {
    FrameDims::new(WIDTH, HEIGHT, 3).expect("valid dimensions")
}

pub fn benchmark_params() -> ProstParams {
    ProstParams::benchmark(100).expect("valid parameters")
}

/// Deterministic textured scene with a bright square whose position depends
/// on `shift`.
pub fn scene(dims: FrameDims, shift: usize) -> FrameBuffer {
    let (w, h, n) = (dims.width, dims.height, dims.pixels());
    let mut data = vec![0.0; dims.len()];
    for c in 0..dims.channels {
        for y in 0..h {
            for x in 0..w {
                let block = (x + w - shift % w) % w < w / 6 && (h / 3..h / 2).contains(&y);
                data[c * n + y * w + x] = if block {
                    0.95
                } else {
                    0.2 + 0.1 * ((x + 2 * y + c) % 5) as f64
                };
            }
        }
    }
    FrameBuffer::new(w, h, dims.channels, data).expect("consistent buffer")
}

/// Basis, frame vector, coordinates, weights and cost settings for the
/// per-frame kernels.
pub struct KernelFixture {
    pub basis: SubspaceBasis,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub weights: PixelWeights,
    pub lp: LpConfig,
}

pub fn kernel_fixture(m: usize, k: usize) -> KernelFixture {
    let basis = random_orthonormal(m, k, 7).expect("k < m");
    let x = DVector::from_fn(m, |i, _| ((i * 37 % 101) as f64 / 101.0) - 0.5);
    let y = DVector::from_fn(k, |j, _| 0.1 * (j as f64 + 1.0));
    KernelFixture {
        basis,
        x,
        y,
        weights: PixelWeights::ones(m),
        lp: benchmark_params().lp,
    }
}
