//! Debug dump of square matrices: an 8-byte little-endian `u64` size N
//! followed by N*N little-endian `f64` values in row-major order.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn write_matrix<W: Write>(mut out: W, m: &DMatrix<f64>) -> std::io::Result<()> {
    assert!(m.is_square(), "only square matrices are dumped");
    let n = m.nrows();
    out.write_all(&(n as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(n * 8);
    for i in 0..n {
        buf.clear();
        for j in 0..n {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()
}

pub fn read_matrix<R: Read>(mut input: R) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::MatrixFormat(e.to_string()))?;
    if bytes.len() < 8 {
        return Err(Error::MatrixFormat("missing size header".into()));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if n.checked_mul(n).and_then(|c| c.checked_mul(8)) != Some(body.len()) {
        return Err(Error::MatrixFormat(format!(
            "header says {n}x{n} but body has {} bytes",
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(n, n, &values))
}
