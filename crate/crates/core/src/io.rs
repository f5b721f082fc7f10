//! Binary files: `QMAT1` matrices and `QSKT1` sketch checkpoints.
//!
//! `QMAT1`: magic `QMAT1\0`, u64 rows, u64 cols, then the w, x, y, z planes,
//! each row-major little-endian f64.
//!
//! `QSKT1`: magic `QSKT1\0`, the Omega and Psi spec records (u8 kind tag,
//! u64 rows, u64 cols, u64 seed, f64 density), u64 r, s, l, then Y and W as
//! `QMAT1` records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::quaternion::QMatrix;
use crate::sketching::{MatrixSource, SketchSizes, SketchState, TestMatrix, TestMatrixKind, TestMatrixSpec};

pub const QMAT_MAGIC: &[u8; 6] = b"QMAT1\0";
pub const QSKT_MAGIC: &[u8; 6] = b"QSKT1\0";
const QMAT_HEADER: u64 = 6 + 16;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => format_err(format!("truncated file while reading {what}")),
        _ => Error::Io(e),
    })
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, out: &mut [f64], what: &str) -> Result<()> {
    let mut buf = vec![0u8; out.len() * 8];
    read_exact_or(r, &mut buf, what)?;
    for (v, c) in out.iter_mut().zip(buf.chunks_exact(8)) {
        *v = f64::from_le_bytes(c.try_into().unwrap());
    }
    Ok(())
}

fn check_magic<R: Read>(r: &mut R, magic: &[u8; 6]) -> Result<()> {
    let mut b = [0u8; 6];
    read_exact_or(r, &mut b, "magic")?;
    if &b != magic {
        return Err(format_err(format!("bad magic, expected {:?}", String::from_utf8_lossy(&magic[..5]))));
    }
    Ok(())
}

fn dims<R: Read>(r: &mut R) -> Result<(usize, usize)> {
    let m = read_u64(r, "row count")?;
    let n = read_u64(r, "column count")?;
    let (m, n) = (usize::try_from(m), usize::try_from(n));
    match (m, n) {
        (Ok(m), Ok(n)) if m.checked_mul(n).and_then(|k| k.checked_mul(32)).is_some() => Ok((m, n)),
        _ => Err(format_err("matrix dimensions overflow")),
    }
}

/// Writes one `QMAT1` record.
pub fn write_qmat<W: Write>(w: &mut W, a: &QMatrix) -> Result<()> {
    w.write_all(QMAT_MAGIC)?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for plane in a.planes() {
        let mut buf = Vec::with_capacity(plane.len() * 8);
        for v in plane {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads one `QMAT1` record.
pub fn read_qmat<R: Read>(r: &mut R) -> Result<QMatrix> {
    check_magic(r, QMAT_MAGIC)?;
    let (m, n) = dims(r)?;
    let mut a = QMatrix::zeros(m, n);
    for (p, plane) in a.planes_mut().into_iter().enumerate() {
        read_f64s(r, plane, &format!("plane {p}"))?;
    }
    Ok(a)
}

pub fn save_qmat(path: impl AsRef<Path>, a: &QMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_qmat(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn load_qmat(path: impl AsRef<Path>) -> Result<QMatrix> {
    read_qmat(&mut BufReader::new(File::open(path)?))
}

/// Row-block reader over a seekable `QMAT1` stream.
pub struct QmatReader<R> {
    inner: R,
    rows: usize,
    cols: usize,
    blocks_read: usize,
}

impl QmatReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read + Seek> QmatReader<R> {
    /// Reads the header and checks that the payload is complete.
    pub fn new(mut inner: R) -> Result<Self> {
        check_magic(&mut inner, QMAT_MAGIC)?;
        let (rows, cols) = dims(&mut inner)?;
        let end = inner.seek(SeekFrom::End(0))?;
        if end < QMAT_HEADER + 32 * (rows * cols) as u64 {
            return Err(format_err("truncated file: payload shorter than header declares"));
        }
        Ok(QmatReader { inner, rows, cols, blocks_read: 0 })
    }

    /// Number of row blocks served so far.
    pub fn blocks_read(&self) -> usize {
        self.blocks_read
    }
}

impl<R: Read + Seek> MatrixSource for QmatReader<R> {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn read_rows(&mut self, r0: usize, r1: usize) -> Result<QMatrix> {
        if r0 > r1 || r1 > self.rows {
            return Err(Error::Shape(format!("rows {r0}..{r1} outside 0..{}", self.rows)));
        }
        let (m, n) = (self.rows as u64, self.cols as u64);
        let mut a = QMatrix::zeros(r1 - r0, self.cols);
        for (p, plane) in a.planes_mut().into_iter().enumerate() {
            let off = QMAT_HEADER + 8 * (p as u64 * m * n + r0 as u64 * n);
            self.inner.seek(SeekFrom::Start(off))?;
            read_f64s(&mut self.inner, plane, &format!("plane {p}"))?;
        }
        self.blocks_read += 1;
        Ok(a)
    }
}

fn write_spec<W: Write>(w: &mut W, s: &TestMatrixSpec) -> Result<()> {
    w.write_all(&[s.kind.tag()])?;
    for v in [s.rows as u64, s.cols as u64, s.seed] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&s.kind.density().to_le_bytes())?;
    Ok(())
}

fn read_spec<R: Read>(r: &mut R) -> Result<TestMatrixSpec> {
    let mut tag = [0u8; 1];
    read_exact_or(r, &mut tag, "spec kind")?;
    let (rows, cols) = dims(r)?;
    let seed = read_u64(r, "spec seed")?;
    let mut d = [0.0];
    read_f64s(r, &mut d, "spec density")?;
    let kind = TestMatrixKind::from_tag(tag[0], d[0]).map_err(|e| format_err(e.to_string()))?;
    Ok(TestMatrixSpec { kind, rows, cols, seed })
}

/// Writes a checkpoint; only spec-backed test matrices can be stored.
pub fn write_sketch<W: Write>(w: &mut W, st: &SketchState) -> Result<()> {
    let (Some(om), Some(psi)) = (st.omega_spec(), st.psi_spec()) else {
        return Err(Error::Parameter("checkpoints need seeded test matrices, not explicit ones".into()));
    };
    w.write_all(QSKT_MAGIC)?;
    write_spec(w, om)?;
    write_spec(w, psi)?;
    for v in [st.sizes.r, st.sizes.s, st.sizes.l] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    write_qmat(w, &st.y)?;
    write_qmat(w, &st.w)?;
    Ok(())
}

pub fn read_sketch<R: Read>(r: &mut R) -> Result<SketchState> {
    check_magic(r, QSKT_MAGIC)?;
    let om = read_spec(r)?;
    let psi = read_spec(r)?;
    let mut rsl = [0usize; 3];
    for v in rsl.iter_mut() {
        *v = read_u64(r, "sketch sizes")? as usize;
    }
    let sizes = SketchSizes::new(rsl[0], rsl[1], rsl[2]).map_err(|e| format_err(e.to_string()))?;
    let y = read_qmat(r)?;
    let w = read_qmat(r)?;
    let (m, n) = (y.rows(), w.cols());
    let consistent = om.rows == n
        && om.cols == sizes.s
        && psi.rows == sizes.l
        && psi.cols == m
        && y.cols() == sizes.s
        && w.rows() == sizes.l;
    if !consistent {
        return Err(format_err("checkpoint dimensions are inconsistent"));
    }
    Ok(SketchState { y, w, omega: TestMatrix::Spec(om), psi: TestMatrix::Spec(psi), sizes })
}

pub fn save_sketch(path: impl AsRef<Path>, st: &SketchState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_sketch(&mut w, st)?;
    w.flush()?;
    Ok(())
}

pub fn load_sketch(path: impl AsRef<Path>) -> Result<SketchState> {
    read_sketch(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn qmat_round_trip_and_truncation() {
        let a = TestMatrixSpec::gaussian(3, 2, 5).generate();
        let mut buf = Vec::new();
        write_qmat(&mut buf, &a).unwrap();
        assert_eq!(buf.len(), 22 + 3 * 2 * 32);
        assert_eq!(read_qmat(&mut Cursor::new(&buf)).unwrap(), a);
        buf.pop();
        assert!(matches!(read_qmat(&mut Cursor::new(&buf)), Err(Error::Format(_))));
        assert!(QmatReader::new(Cursor::new(&buf)).is_err());
    }

    #[test]
    fn row_blocks_from_file() {
        let a = TestMatrixSpec::gaussian(5, 3, 9).generate();
        let mut buf = Vec::new();
        write_qmat(&mut buf, &a).unwrap();
        let mut r = QmatReader::new(Cursor::new(buf)).unwrap();
        assert_eq!(r.read_rows(1, 4).unwrap(), a.row_block(1, 4));
        assert_eq!(r.blocks_read(), 1);
    }
}
