//! Binary matrix dump: 8-byte magic, `u32` rows, `u32` cols (little-endian),
//! then row-major `(f64 re, f64 im)` pairs.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DUMP_MAGIC: [u8; 8] = *b"QDBGRN01";

pub fn write_matrix_dump<W: Write>(mut w: W, m: &DMatrix<Complex64>) -> Result<()> {
    let rows = u32::try_from(m.nrows()).map_err(|_| Error::arg("rows", "exceeds u32"))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| Error::arg("cols", "exceeds u32"))?;
    let mut buf = Vec::with_capacity(16 + 16 * m.len());
    buf.extend_from_slice(&DUMP_MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix_dump<R: Read>(mut r: R) -> Result<DMatrix<Complex64>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if header[..8] != DUMP_MAGIC {
        return Err(Error::arg("dump", "bad magic"));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut body = vec![0u8; rows * cols * 16];
    r.read_exact(&mut body)?;
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        Complex64::new(f(k), f(k + 1))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = DMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 + 0.5, -(j as f64)));
        let mut buf = Vec::new();
        write_matrix_dump(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 16);
        assert_eq!(&buf[..8], b"QDBGRN01");
        assert_eq!(read_matrix_dump(&buf[..]).unwrap(), m);
    }
}
