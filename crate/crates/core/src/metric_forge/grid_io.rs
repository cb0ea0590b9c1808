//! Binary grid files: a fixed header, three little-endian `f64` component
//! arrays in row-major order, and a trailing SHA-256 of everything before it.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::grid::{GridMeta, MetricGrid};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GEPSGRID";
pub const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

pub fn encode_grid(grid: &MetricGrid) -> Vec<u8> {
    let (n_r, n_theta) = grid.dims();
    let m = grid.meta();
    let mut out = Vec::with_capacity(128 + 24 * n_r * n_theta + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for x in [
        m.epsilon,
        m.amplitude,
        m.flatness,
        m.delta,
        m.blend_start,
        m.blend_end,
        m.tail_rate,
    ] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&(n_r as u32).to_le_bytes());
    out.extend_from_slice(&(n_theta as u32).to_le_bytes());
    for x in [grid.r_min(), grid.dr(), grid.dtheta()] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for comp in grid.components() {
        for x in comp {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(Error::Malformed("unexpected end of header".into()));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_grid(bytes: &[u8]) -> Result<MetricGrid> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Malformed("missing magic".into()));
    }
    let mut rd = Reader {
        buf: bytes,
        pos: MAGIC.len(),
    };
    let version = rd.u32()?;
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    if bytes.len() < CHECKSUM_LEN {
        return Err(Error::Checksum);
    }
    let (body, tail) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != tail {
        return Err(Error::Checksum);
    }
    let mut rd = Reader {
        buf: body,
        pos: MAGIC.len() + 4,
    };
    let meta = GridMeta {
        epsilon: rd.f64()?,
        amplitude: rd.f64()?,
        flatness: rd.f64()?,
        delta: rd.f64()?,
        blend_start: rd.f64()?,
        blend_end: rd.f64()?,
        tail_rate: rd.f64()?,
    };
    let n_r = rd.u32()? as usize;
    let n_theta = rd.u32()? as usize;
    let r_min = rd.f64()?;
    let dr = rd.f64()?;
    let dtheta = rd.f64()?;
    if (dtheta * n_theta as f64 - crate::TAU).abs() > 1e-12 {
        return Err(Error::Malformed(format!(
            "azimuthal spacing {dtheta} inconsistent with {n_theta} nodes"
        )));
    }
    let count = n_r
        .checked_mul(n_theta)
        .ok_or_else(|| Error::Malformed("grid dimensions overflow".into()))?;
    if body.len() - rd.pos != 3 * 8 * count {
        return Err(Error::Malformed(format!(
            "payload of {} bytes does not hold a {n_r}×{n_theta} grid",
            body.len() - rd.pos
        )));
    }
    let mut comp = || -> Result<Vec<f64>> { (0..count).map(|_| rd.f64()).collect() };
    let comps = [comp()?, comp()?, comp()?];
    MetricGrid::new(meta, n_r, n_theta, r_min, dr, comps)
}

pub fn export_grid(grid: &MetricGrid, path: &Path) -> Result<()> {
    fs::write(path, encode_grid(grid))?;
    Ok(())
}

pub fn import_grid(path: &Path) -> Result<MetricGrid> {
    decode_grid(&fs::read(path)?)
}
