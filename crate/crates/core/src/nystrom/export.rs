//! Binary and CSV matrix export.
//!
//! Binary layout: 8-byte magic, dimension (u64), operator tag (u64), a
//! reserved u64, then row-major little-endian f64 data.

use super::{NystromError, OperatorMatrix, OperatorTag};
use faer::Mat;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"ENPMAT01";

/// Largest dimension written as CSV.
pub const CSV_LIMIT: usize = 1200;

pub fn write_binary(path: &Path, op: &OperatorMatrix) -> Result<(), NystromError> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = op.dim();
    w.write_all(MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&op.tag.code().to_le_bytes())?;
    w.write_all(&0u64.to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            w.write_all(&op.matrix[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<(OperatorTag, Mat<f64>), NystromError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(NystromError::Shape("bad magic".into()));
    }
    let word = |k: usize| u64::from_le_bytes(header[8 * k..8 * k + 8].try_into().unwrap());
    let n = word(1) as usize;
    let tag = OperatorTag::from_code(word(2)).ok_or_else(|| NystromError::Shape(format!("unknown tag {}", word(2))))?;
    let mut data = vec![0u8; n * n * 8];
    r.read_exact(&mut data)?;
    let m = Mat::from_fn(n, n, |i, j| {
        let k = 8 * (i * n + j);
        f64::from_le_bytes(data[k..k + 8].try_into().unwrap())
    });
    Ok((tag, m))
}

pub fn write_csv(path: &Path, op: &OperatorMatrix) -> Result<(), NystromError> {
    let n = op.dim();
    if n > CSV_LIMIT {
        return Err(NystromError::Config(format!("CSV export is limited to dimension {CSV_LIMIT}, got {n}")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..n {
        let line: Vec<String> = (0..n).map(|j| format!("{:e}", op.matrix[(i, j)])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let m = Mat::from_fn(6, 6, |i, j| (i as f64) - 0.5 * j as f64);
        let op = OperatorMatrix { tag: OperatorTag::S, matrix: m.clone(), weights: vec![1.0; 2], params: None, resolution: 8 };
        let dir = std::env::temp_dir().join(format!("enp-export-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("m.bin");
        write_binary(&p, &op).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 32 + 36 * 8);
        let (tag, back) = read_binary(&p).unwrap();
        assert_eq!(tag, OperatorTag::S);
        assert_eq!(back, m);
        write_csv(&dir.join("m.csv"), &op).unwrap();
        let text = std::fs::read_to_string(dir.join("m.csv")).unwrap();
        assert_eq!(text.lines().count(), 6);
        std::fs::remove_dir_all(&dir).ok();
    }
}
