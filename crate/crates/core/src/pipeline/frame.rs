use nalgebra::DVector;

use crate::error::{ensure_finite, Error, Result};

/// Width, height and channel count of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FrameDims {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl FrameDims {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty frame {width}×{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Dimension(format!(
                "frames have 1 or 3 channels, got {channels}"
            )));
        }
        Ok(FrameDims {
            width,
            height,
            channels,
        })
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Length of the vectorized frame.
    pub fn len(&self) -> usize {
        self.pixels() * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A vectorized image in channel-planar order: the whole red plane, then
/// green, then blue. Each plane is row-major. Intensities are nominally in
/// `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffer {
    dims: FrameDims,
    data: Vec<f64>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let dims = FrameDims::new(width, height, channels)?;
        crate::error::ensure_len(data.len(), dims.len(), "frame data")?;
        Ok(FrameBuffer { dims, data })
    }

    pub fn filled(dims: FrameDims, value: f64) -> Self {
        FrameBuffer {
            dims,
            data: vec![value; dims.len()],
        }
    }

    pub fn from_vector(dims: FrameDims, v: &DVector<f64>) -> Result<Self> {
        crate::error::ensure_len(v.len(), dims.len(), "frame vector")?;
        Ok(FrameBuffer {
            dims,
            data: v.as_slice().to_vec(),
        })
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn channels(&self) -> usize {
        self.dims.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.dims.pixels();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn ensure_finite(&self) -> Result<()> {
        ensure_finite(&self.data, "frame")
    }

    /// Luma (ITU-R BT.601 weights) of a colour frame; grayscale frames are
    /// returned unchanged.
    pub fn to_grayscale(&self) -> FrameBuffer {
        if self.dims.channels == 1 {
            return self.clone();
        }
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let data = r
            .iter()
            .zip(g)
            .zip(b)
            .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
            .collect();
        FrameBuffer {
            dims: FrameDims {
                channels: 1,
                ..self.dims
            },
            data,
        }
    }
}

/// Bilinear resampling per channel with pixel-centre alignment and clamped
/// edges. A frame already at the target size is returned as-is.
pub fn resample(frame: &FrameBuffer, out_w: usize, out_h: usize) -> Result<FrameBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Dimension(format!(
            "resample target {out_w}×{out_h} is empty"
        )));
    }
    let src = frame.dims;
    if src.width == out_w && src.height == out_h {
        return Ok(frame.clone());
    }

    let axis = |out: usize, len: usize| -> Vec<(usize, usize, f64)> {
        let scale = len as f64 / out as f64;
        (0..out)
            .map(|o| {
                let pos = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(len - 1);
                (lo, hi, pos - lo as f64)
            })
            .collect()
    };
    let xs = axis(out_w, src.width);
    let ys = axis(out_h, src.height);

    let mut data = Vec::with_capacity(out_w * out_h * src.channels);
    for c in 0..src.channels {
        let plane = frame.plane(c);
        let at = |x: usize, y: usize| plane[y * src.width + x];
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                // `a + f·(b − a)` keeps constant regions exactly constant.
                let top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
                let bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
                data.push(top + fy * (bottom - top));
            }
        }
    }
    FrameBuffer::new(out_w, out_h, src.channels, data)
}
