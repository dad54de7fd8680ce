//! Binary dump of a [`TaylorTable`].
//!
//! Little-endian layout:
//!
//! ```text
//! magic    8 bytes  b"NSTAYLOR"
//! version  u32      1
//! N        u32      truncation bound
//! P_max    u32      highest stored order
//! flags    u32      bit 0: series froze on overflow
//! failed   u32      order that overflowed (0 unless bit 0 set)
//! alpha    f64
//! body     for p in 0..=P_max, for each mode in row-major (n, m) order:
//!          C.re C.im D.re D.im as f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{SeriesStatus, TaylorTable};
use crate::error::{Error, Result};
use crate::lattice::ModeLattice;
use crate::state::SpectralState;

const MAGIC: &[u8; 8] = b"NSTAYLOR";
const VERSION: u32 = 1;
const FLAG_OVERFLOW: u32 = 1;

pub fn encode_table(table: &TaylorTable) -> Vec<u8> {
    let lattice = table.lattice();
    let mut out = Vec::with_capacity(36 + table.orders().len() * lattice.len() * 32);
    out.extend_from_slice(MAGIC);
    let (flags, failed) = match table.status() {
        SeriesStatus::Complete => (0, 0),
        SeriesStatus::DivergedOverflow { failed_order } => (FLAG_OVERFLOW, failed_order as u32),
    };
    for word in [VERSION, lattice.bound() as u32, table.p_max() as u32, flags, failed] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    out.extend_from_slice(&table.alpha().to_le_bytes());
    for slice in table.orders() {
        for (c, d) in slice.c_slice().iter().zip(slice.d_slice()) {
            for x in [c.re, c.im, d.re, d.im] {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_table(bytes: &[u8]) -> Result<TaylorTable> {
    let mut cur = bytes;
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic).map_err(|_| Error::InvalidDump("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::InvalidDump("bad magic".into()));
    }
    let mut word = || -> Result<u32> {
        let mut b = [0u8; 4];
        cur.read_exact(&mut b).map_err(|_| Error::InvalidDump("truncated header".into()))?;
        Ok(u32::from_le_bytes(b))
    };
    let version = word()?;
    if version != VERSION {
        return Err(Error::InvalidDump(format!("unsupported version {version}")));
    }
    let bound = word()? as usize;
    let p_max = word()? as usize;
    let flags = word()?;
    let failed = word()? as usize;
    let mut b8 = [0u8; 8];
    cur.read_exact(&mut b8).map_err(|_| Error::InvalidDump("truncated header".into()))?;
    let alpha = f64::from_le_bytes(b8);

    let lattice = ModeLattice::new(bound).map_err(|e| Error::InvalidDump(e.to_string()))?;
    let expected = (p_max + 1) * lattice.len() * 32;
    if cur.len() != expected {
        return Err(Error::InvalidDump(format!("body holds {} bytes, expected {expected}", cur.len())));
    }
    let values: Vec<f64> = cur.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut orders = Vec::with_capacity(p_max + 1);
    for block in values.chunks_exact(lattice.len() * 4) {
        let mut c = Vec::with_capacity(lattice.len());
        let mut d = Vec::with_capacity(lattice.len());
        for q in block.chunks_exact(4) {
            c.push(Complex64::new(q[0], q[1]));
            d.push(Complex64::new(q[2], q[3]));
        }
        orders.push(SpectralState::from_raw(lattice, c, d)?);
    }
    let status = if flags & FLAG_OVERFLOW != 0 {
        SeriesStatus::DivergedOverflow { failed_order: failed }
    } else {
        SeriesStatus::Complete
    };
    Ok(TaylorTable::from_parts(alpha, orders, status))
}

pub fn write_table(table: &TaylorTable, path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.into(), source };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(&encode_table(table)).map_err(io)
}

pub fn read_table(path: &Path) -> Result<TaylorTable> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
    decode_table(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taylor::{build_series, ConvolutionMethod};
    use rand::SeedableRng;

    #[test]
    fn dump_roundtrip_is_bit_exact() {
        let lattice = ModeLattice::new(3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let ic = crate::state::random_state(lattice, 2, 0.05, &mut rng);
        let table = build_series(ic, 1e-3, 6, ConvolutionMethod::Direct).unwrap();
        let back = decode_table(&encode_table(&table)).unwrap();
        assert_eq!(back.alpha(), table.alpha());
        assert_eq!(back.status(), table.status());
        assert_eq!(back.orders(), table.orders());
    }

    #[test]
    fn corrupt_dumps_are_rejected() {
        assert!(decode_table(b"NOTATABLE").is_err());
        let lattice = ModeLattice::new(1).unwrap();
        let table = TaylorTable::new(SpectralState::zeros(lattice), 0.0).unwrap();
        let mut bytes = encode_table(&table);
        bytes.pop();
        assert!(matches!(decode_table(&bytes), Err(Error::InvalidDump(_))));
    }
}
