//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `HYPO` |
//! | 4     | format version (`u32`) |
//! | 16    | `n, N_t, N_x, N_v` (`u32` each) |
//! | 24    | `L_t, L_x, L_v` (`f64` each) |
//! | a     | one representation byte per axis (0 physical, 1 frequency) |
//! | 16·m  | samples as interleaved `(re, im)` `f64` pairs, row-major |
//!
//! A phase-space field (no time axis) has `a = 2n` flag bytes, a full field
//! `a = 1 + 2n`; readers tell them apart by the total length.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{AxisKind, GridSpec, Layout, Rep, DEFAULT_MEMORY_BUDGET};

pub const MAGIC: &[u8; 4] = b"HYPO";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 16 + 24;

pub fn encode(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + field.reps().len() + 16 * field.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [
        g.n(),
        g.len(AxisKind::T),
        g.len(AxisKind::X),
        g.len(AxisKind::V),
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for l in [AxisKind::T, AxisKind::X, AxisKind::V] {
        out.extend_from_slice(&g.box_len(l).to_le_bytes());
    }
    out.extend(field.reps().iter().map(|r| r.flag()));
    for z in field.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let dims: Vec<usize> = (0..4).map(|i| u32_at(bytes, 8 + 4 * i) as usize).collect();
    let lens: Vec<f64> = (0..3).map(|i| f64_at(bytes, 24 + 8 * i)).collect();
    let grid = GridSpec::with_budget(
        dims[0],
        dims[1],
        dims[2],
        dims[3],
        lens[0],
        lens[1],
        lens[2],
        DEFAULT_MEMORY_BUDGET.max(bytes.len() / 16),
    )?;
    let body = bytes.len() - HEADER_LEN;
    let layout = [Layout::Full, Layout::Phase]
        .into_iter()
        .find(|&l| grid.axes(l).len() + 16 * grid.layout_len(l) == body)
        .ok_or_else(|| Error::Format(format!("body of {body} bytes matches no layout")))?;
    let axes = grid.axes(layout).len();
    let rep = bytes[HEADER_LEN..HEADER_LEN + axes]
        .iter()
        .map(|&b| Rep::from_flag(b).ok_or_else(|| Error::Format(format!("bad rep flag {b}"))))
        .collect::<Result<Vec<_>>>()?;
    let data = bytes[HEADER_LEN + axes..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Field::from_data(Arc::new(grid), layout, rep, data)
}

pub fn write(field: &Field, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&encode(field))?;
    file.flush()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_bit_exact() {
        let g = Arc::new(GridSpec::new(1, 4, 4, 6, 1.0, 2.0, 3.0).unwrap());
        let mut f = Field::zeros(g, Layout::Full, Rep::Physical);
        f.data_mut()[1] = Complex64::new(1.5, -2.0);
        let bytes = encode(&f);
        assert_eq!(&bytes[..4], b"HYPO");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &[6, 0, 0, 0]);
        assert_eq!(&bytes[32..40], &2.0f64.to_le_bytes());
        assert_eq!(&bytes[48..51], &[0, 0, 0]);
        assert_eq!(&bytes[51 + 16..51 + 24], &1.5f64.to_le_bytes());
        assert_eq!(bytes.len(), 51 + 16 * 96);
    }

    #[test]
    fn phase_layout_decodes() {
        let g = Arc::new(GridSpec::new(2, 4, 4, 4, 1.0, 1.0, 1.0).unwrap());
        let f = Field::from_fn(g, Layout::Phase, |_, x, v| Complex64::new(x[0] + v[1], x[1]));
        let f = f.with_rep(&[AxisKind::X], Rep::Frequency);
        let back = decode(&encode(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_corruption() {
        let g = Arc::new(GridSpec::new(1, 4, 4, 4, 1.0, 1.0, 1.0).unwrap());
        let f = Field::zeros(g, Layout::Full, Rep::Physical);
        let mut bytes = encode(&f);
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
        let mut bytes = encode(&f);
        bytes.pop();
        assert!(decode(&bytes).is_err());
        let mut bytes = encode(&f);
        bytes[48] = 7;
        assert!(decode(&bytes).is_err());
    }
}
