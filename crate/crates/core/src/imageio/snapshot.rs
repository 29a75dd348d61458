//! Tracker snapshot files for pause/resume.
//!
//! Layout, all integers `u64` and all scalars `f64`, little-endian:
//!
//! ```text
//! "PROSTSNAP1"
//! m, k, channels, frame_index, params_hash, steps_since_qr
//! basis        m·k scalars, row-major
//! y            k scalars
//! weights      m scalars
//! has_preproc  one byte (0 or 1), and if 1:
//!   frames_seen, frozen (one byte),
//!   pooled_count, pooled_mean, pooled_m2, std,
//!   mean       m scalars
//! ```

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::cost::PixelWeights;
use crate::error::{Error, Result};
use crate::manifold::SubspaceBasis;
use crate::pipeline::PreprocStats;
use crate::tracker::{ProstParams, TrackerState};

pub const SNAPSHOT_MAGIC: &[u8; 10] = b"PROSTSNAP1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state: TrackerState,
    /// [`ProstParams::hash`] of the parameters the state was produced with.
    pub params_hash: u64,
}

impl Snapshot {
    pub fn matches(&self, params: &ProstParams) -> bool {
        self.params_hash == params.hash()
    }
}

pub fn encode_snapshot(state: &TrackerState, params: &ProstParams) -> Vec<u8> {
    let (m, k) = (state.basis.ambient_dim(), state.basis.dim());
    let mut out = Vec::with_capacity(64 + 8 * (m * k + k + 2 * m));
    out.extend_from_slice(SNAPSHOT_MAGIC);
    let header = [
        m as u64,
        k as u64,
        state.channels as u64,
        state.frame_index,
        params.hash(),
        state.basis.steps_since_qr() as u64,
    ];
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let u = state.basis.as_matrix();
    for i in 0..m {
        for j in 0..k {
            out.extend_from_slice(&u[(i, j)].to_le_bytes());
        }
    }
    for v in state.y.iter().chain(state.weights.as_slice()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match &state.preproc {
        None => out.push(0),
        Some(stats) => {
            out.push(1);
            out.extend_from_slice(&stats.frames_seen().to_le_bytes());
            out.push(stats.is_frozen() as u8);
            let (count, mean, m2, std) = stats.raw_parts();
            for v in [count, mean, m2, std] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for v in stats.mean().iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Cursor<'a> {
    path: &'a Path,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::format(self.path, "truncated snapshot"));
        };
        let bytes = &self.buf[self.pos..end];
        self.pos = end;
        Ok(bytes)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::format(self.path, format!("invalid flag byte {b}"))),
        }
    }
}

pub fn decode_snapshot(path: &Path, buf: &[u8]) -> Result<Snapshot> {
    let mut cur = Cursor { path, buf, pos: 0 };
    if cur.take(SNAPSHOT_MAGIC.len()).ok() != Some(&SNAPSHOT_MAGIC[..]) {
        return Err(Error::format(path, "not a snapshot file (bad magic)"));
    }
    let to_usize = |v: u64| {
        usize::try_from(v)
            .ok()
            .filter(|v| *v <= (1 << 32))
            .ok_or_else(|| Error::format(path, "implausible snapshot dimensions"))
    };
    let m = to_usize(cur.u64()?)?;
    let k = to_usize(cur.u64()?)?;
    let channels = to_usize(cur.u64()?)?;
    let frame_index = cur.u64()?;
    let params_hash = cur.u64()?;
    let steps_since_qr = u32::try_from(cur.u64()?)
        .ok()
        .filter(|s| *s < crate::manifold::REORTHONORMALIZE_EVERY)
        .ok_or_else(|| Error::format(path, "invalid geodesic step counter"))?;

    let rows = cur.f64s(
        m.checked_mul(k)
            .ok_or_else(|| Error::format(path, "overflow"))?,
    )?;
    let basis = DMatrix::from_row_slice(m, k, &rows);
    let y = DVector::from_vec(cur.f64s(k)?);
    let weights = PixelWeights::from_values(DVector::from_vec(cur.f64s(m)?))?;

    let preproc = if cur.flag()? {
        let frames_seen = cur.u64()?;
        let frozen = cur.flag()?;
        let raw = (cur.f64()?, cur.f64()?, cur.f64()?, cur.f64()?);
        let mean = DVector::from_vec(cur.f64s(m)?);
        Some(PreprocStats::from_raw_parts(mean, frames_seen, raw, frozen))
    } else {
        None
    };
    if cur.pos != buf.len() {
        return Err(Error::format(path, "trailing bytes after snapshot"));
    }

    let basis = if k == 0 || k >= m {
        return Err(Error::format(path, format!("invalid basis shape {m}×{k}")));
    } else {
        SubspaceBasis::from_parts_unchecked(basis, steps_since_qr)
    };
    if basis.orthonormality_defect() > crate::manifold::ORTHONORMALITY_TOL {
        return Err(Error::format(path, "snapshot basis is not orthonormal"));
    }
    let state = TrackerState {
        basis,
        y,
        weights,
        frame_index,
        channels: 1,
        preproc,
    }
    .with_channels(channels)?;
    Ok(Snapshot { state, params_hash })
}

pub fn save_snapshot(
    path: impl AsRef<Path>,
    state: &TrackerState,
    params: &ProstParams,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_snapshot(state, params)).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::LpConfig;
    use crate::fit::CgOptions;
    use crate::pipeline::FrameBuffer;
    use crate::tracker::bootstrap;

    fn params() -> ProstParams {
        ProstParams {
            k: 3,
            lp: LpConfig::new(0.5, 0.05).unwrap(),
            delta: 0.35,
            omega: 0.01,
            t_init: 0.01,
            t_min: 0.001,
            tau: 0.01,
            cg: CgOptions::default(),
        }
    }

    #[test]
    fn round_trip_with_and_without_preproc() {
        let p = params();
        let mut state = bootstrap(24, &p, 3).unwrap().with_channels(3).unwrap();
        for i in 0..5 {
            let x = DVector::from_fn(24, |j, _| ((i * 24 + j) as f64).sin());
            state.process_frame(&x, &p).unwrap();
        }
        let bytes = encode_snapshot(&state, &p);
        assert!(bytes.starts_with(b"PROSTSNAP1"));
        let snap = decode_snapshot(Path::new("s"), &bytes).unwrap();
        assert_eq!(snap.state, state);
        assert!(state.basis.steps_since_qr() > 0);
        assert_eq!(
            snap.state.basis.steps_since_qr(),
            state.basis.steps_since_qr()
        );
        assert!(snap.matches(&p));

        let mut stats = PreprocStats::new(24);
        stats
            .update(&FrameBuffer::new(8, 1, 3, (0..24).map(|v| v as f64 / 24.0).collect()).unwrap())
            .unwrap();
        stats.freeze().unwrap();
        state.preproc = Some(stats);
        let snap = decode_snapshot(Path::new("s"), &encode_snapshot(&state, &p)).unwrap();
        assert_eq!(snap.state, state);
    }

    #[test]
    fn corrupt_files_rejected() {
        let p = params();
        let state = bootstrap(10, &p, 1).unwrap();
        let bytes = encode_snapshot(&state, &p);
        assert!(decode_snapshot(Path::new("s"), &bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshot(Path::new("s"), &bad).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_snapshot(Path::new("s"), &extra).is_err());
    }

    #[test]
    fn hash_changes_with_params() {
        let p = params();
        let mut q = p;
        q.delta = 0.3;
        let snap = decode_snapshot(
            Path::new("s"),
            &encode_snapshot(&bootstrap(10, &p, 1).unwrap(), &p),
        )
        .unwrap();
        assert!(!snap.matches(&q));
    }
}
