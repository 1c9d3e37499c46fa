//! File formats.
//!
//! * `SLRM` matrices: the 4 magic bytes `SLRM`, `u32` rows, `u32` cols (both
//!   little-endian), then `rows * cols` row-major `f64` little-endian values.
//! * `SLRB` masks: magic `SLRB`, `u32` rows, `u32` cols, then
//!   `ceil(rows * cols / 8)` bytes; bit `k` (LSB first within each byte) is
//!   the row-major entry `k = i * cols + j`.
//! * Frame streams: repeated records of a `u32` length `n` followed by `n`
//!   little-endian `f64` values.
//! * CSV matrices: one matrix row per line, comma separated, no header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"SLRM";
pub const MASK_MAGIC: &[u8; 4] = b"SLRB";

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<(usize, usize)> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head)?;
    if &head[..4] != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&head[..4])
        )));
    }
    let rows = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    Ok((rows, cols))
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], rows: usize, cols: usize) -> Result<()> {
    let rows = u32::try_from(rows).map_err(|_| Error::Format("too many rows".into()))?;
    let cols = u32::try_from(cols).map_err(|_| Error::Format("too many columns".into()))?;
    w.write_all(magic)?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    Ok(())
}

pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    write_header(w, MATRIX_MAGIC, m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<DMatrix<f64>> {
    let (rows, cols) = read_header(r, MATRIX_MAGIC)?;
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated matrix payload: {e}")))?;
    let vals: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &vals))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    read_matrix(&mut BufReader::new(File::open(path)?))
}

/// Row-major boolean mask as a packed bitset.
pub fn write_mask<W: Write>(w: &mut W, rows: usize, cols: usize, bits: &[bool]) -> Result<()> {
    if bits.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "mask has {} entries, expected {rows}x{cols}",
            bits.len()
        )));
    }
    write_header(w, MASK_MAGIC, rows, cols)?;
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (k, &b) in bits.iter().enumerate() {
        if b {
            bytes[k / 8] |= 1 << (k % 8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Returns `(rows, cols, row-major bits)`.
pub fn read_mask<R: Read>(r: &mut R) -> Result<(usize, usize, Vec<bool>)> {
    let (rows, cols) = read_header(r, MASK_MAGIC)?;
    let len = rows * cols;
    let mut bytes = vec![0u8; len.div_ceil(8)];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated mask payload: {e}")))?;
    let bits = (0..len).map(|k| bytes[k / 8] >> (k % 8) & 1 == 1).collect();
    Ok((rows, cols, bits))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &DVector<f64>) -> Result<()> {
    let n = u32::try_from(frame.len()).map_err(|_| Error::Format("frame too long".into()))?;
    w.write_all(&n.to_le_bytes())?;
    for x in frame.iter() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Next frame, or `None` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<DVector<f64>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let n = u32::from_le_bytes(len) as usize;
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated frame: {e}")))?;
    Ok(Some(DVector::from_iterator(
        n,
        buf.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
    )))
}

pub fn write_matrix_csv<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.row_iter() {
        wtr.write_record(row.iter().map(|x| format!("{x:?}")))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut vals = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(Error::Format(format!(
                    "row {rows} has {} fields, expected {c}",
                    rec.len()
                )))
            }
            _ => {}
        }
        for field in rec.iter() {
            vals.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number {field:?}: {e}")))?,
            );
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slrm_layout_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"SLRM");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &3u32.to_le_bytes());
        // row-major: second value is m[(0, 1)]
        assert_eq!(&buf[20..28], &2.0f64.to_le_bytes());
        assert_eq!(buf.len(), 12 + 6 * 8);
    }

    #[test]
    fn bad_magic_and_truncation_are_rejected() {
        let mut bad = b"XXXX".to_vec();
        bad.extend_from_slice(&[0; 8]);
        assert!(matches!(read_matrix(&mut bad.as_slice()), Err(Error::Format(_))));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &DMatrix::from_element(2, 2, 1.0)).unwrap();
        buf.truncate(20);
        assert!(matches!(read_matrix(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn frame_stream_ends_cleanly() {
        let mut buf = Vec::new();
        write_frame(&mut buf, &DVector::from_vec(vec![1.5, -2.0])).unwrap();
        write_frame(&mut buf, &DVector::from_vec(vec![3.0, 4.0])).unwrap();
        let mut r = buf.as_slice();
        assert_eq!(read_frame(&mut r).unwrap().unwrap()[0], 1.5);
        assert_eq!(read_frame(&mut r).unwrap().unwrap()[1], 4.0);
        assert!(read_frame(&mut r).unwrap().is_none());
    }

    proptest! {
        #[test]
        fn matrix_formats_roundtrip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let m = DMatrix::from_fn(rows, cols, |i, j| {
                let h = seed.wrapping_mul(6364136223846793005).wrapping_add((i * 31 + j) as u64);
                (h >> 11) as f64 / (1u64 << 40) as f64 - 1000.0
            });
            let mut bin = Vec::new();
            write_matrix(&mut bin, &m).unwrap();
            prop_assert_eq!(read_matrix(&mut bin.as_slice()).unwrap(), m.clone());
            let mut text = Vec::new();
            write_matrix_csv(&mut text, &m).unwrap();
            prop_assert_eq!(read_matrix_csv(text.as_slice()).unwrap(), m);
        }

        #[test]
        fn mask_roundtrip(bits in proptest::collection::vec(any::<bool>(), 1..64), cols in 1usize..5) {
            let rows = bits.len() / cols;
            prop_assume!(rows > 0);
            let bits = &bits[..rows * cols];
            let mut buf = Vec::new();
            write_mask(&mut buf, rows, cols, bits).unwrap();
            let (r2, c2, b2) = read_mask(&mut buf.as_slice()).unwrap();
            prop_assert_eq!((r2, c2), (rows, cols));
            prop_assert_eq!(b2, bits.to_vec());
        }
    }
}
