//! Binary container for a gap matrix. All fields little-endian:
//!
//! | offset | size      | field                                      |
//! |--------|-----------|--------------------------------------------|
//! | 0      | 8         | magic `b"GIBCMAT\0"`                       |
//! | 8      | 4         | `u32` format version (1)                   |
//! | 12     | 4         | `u32` M (collocation points)               |
//! | 16     | 4         | `u32` N (kernel truncation)                |
//! | 20     | 8         | `f64` ρ                                    |
//! | 28     | 32        | `f64` Re η, Im η, Re γ, Im γ               |
//! | 60     | 1         | `u8` noise present (0 or 1)                |
//! | 61     | 8         | `f64` δ (0 when absent)                    |
//! | 69     | 8         | `u64` seed (0 when absent)                 |
//! | 77     | 16 M²     | entries row-major, each `f64` Re then Im   |
//!
//! The file holds only deterministic content, so equal inputs give
//! byte-identical files.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{AnnulusConfig, ImpedancePair};
use crate::operator::{CMatrix, GapMatrix, NoiseSpec};

pub const MAGIC: &[u8; 8] = b"GIBCMAT\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 77;

pub fn encode(a: &GapMatrix) -> Vec<u8> {
    let m = a.size();
    let cfg = a.config();
    let imp = a.impedance();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * m * m);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.kernel_truncation as u32).to_le_bytes());
    for v in [cfg.rho, imp.eta.re, imp.eta.im, imp.gamma.re, imp.gamma.im] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let (flag, delta, seed) = match a.noise() {
        Some(n) => (1u8, n.delta, n.seed),
        None => (0u8, 0.0, 0),
    };
    out.push(flag);
    out.extend_from_slice(&delta.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    for i in 0..m {
        for j in 0..m {
            let v = a.entries()[(i, j)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("container truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(buf: &[u8]) -> Result<GapMatrix> {
    let mut r = Reader { buf, pos: 0 };
    if &r.take::<8>()? != MAGIC {
        return Err(Error::Format("not a gap-matrix container (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let m = r.u32()? as usize;
    let n = r.u32()? as usize;
    let expected = HEADER_LEN + 16 * m * m;
    if buf.len() != expected {
        return Err(Error::Format(format!(
            "container length {} does not match M = {m} (expected {expected})",
            buf.len()
        )));
    }
    let rho = r.f64()?;
    let eta = Complex64::new(r.f64()?, r.f64()?);
    let gamma = Complex64::new(r.f64()?, r.f64()?);
    let flag = r.take::<1>()?[0];
    let delta = r.f64()?;
    let seed = r.u64()?;
    let noise = match flag {
        0 => None,
        1 => Some(NoiseSpec::new(delta, seed)?),
        other => return Err(Error::Format(format!("bad noise flag {other}"))),
    };
    let config = AnnulusConfig::new(rho, n, m)?;
    let imp = ImpedancePair::new_unchecked(eta, gamma);
    let mut entries = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            entries[(i, j)] = Complex64::new(r.f64()?, r.f64()?);
        }
    }
    GapMatrix::from_parts(entries, config, imp, noise)
}

pub fn save(a: &GapMatrix, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode(a))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<GapMatrix> {
    let buf = std::fs::read(path)?;
    decode(&buf).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{apply_noise, assemble_gap_matrix};

    fn sample() -> GapMatrix {
        let cfg = AnnulusConfig::new(0.5, 6, 16).unwrap();
        let imp = ImpedancePair::new(Complex64::new(5.0, 2.0), Complex64::new(10.0, 1.0)).unwrap();
        assemble_gap_matrix(&cfg, &imp).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        for a in [sample(), apply_noise(&sample(), NoiseSpec::new(0.02, 99).unwrap())] {
            let bytes = encode(&a);
            assert_eq!(bytes.len(), HEADER_LEN + 16 * 16 * 16);
            let b = decode(&bytes).unwrap();
            assert_eq!(a, b);
            assert_eq!(encode(&b), bytes);
        }
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        save(&sample(), &path).unwrap();
        assert_eq!(load(&path).unwrap(), sample());
        assert!(load(&dir.path().join("missing.bin")).is_err());
    }

    #[test]
    fn corrupt_containers_are_rejected() {
        let bytes = encode(&sample());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(decode(&bytes[..20]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[60] = 7;
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut bad = bytes;
        bad[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&bad).is_err());
    }
}
