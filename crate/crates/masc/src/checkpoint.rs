//! Binary parameter container.
//!
//! Layout (little-endian): magic `MASCCKPT`, u32 version, u32 config length
//! and config JSON, u32 tensor count, then per tensor a u32 name length, the
//! name, a u32 rank, u64 dims and f64 data; a SHA-256 of everything before it
//! closes the file.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::MascConfig;
use crate::params::Params;
use crate::MascError;

const MAGIC: &[u8; 8] = b"MASCCKPT";
const VERSION: u32 = 1;

fn bad(m: impl Into<String>) -> MascError {
    MascError::Checkpoint(m.into())
}

pub fn to_bytes(cfg: &MascConfig, p: &Params) -> Vec<u8> {
    let mut b = Vec::with_capacity(p.scalar_count() * 8 + 4096);
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    let json = serde_json::to_vec(cfg).expect("config serialises");
    b.extend_from_slice(&(json.len() as u32).to_le_bytes());
    b.extend_from_slice(&json);
    let all = p.all();
    b.extend_from_slice(&(all.len() as u32).to_le_bytes());
    for t in all {
        b.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        b.extend_from_slice(t.name.as_bytes());
        b.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            b.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &t.data {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&b);
    b.extend_from_slice(&digest);
    b
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MascError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.b.len()).ok_or_else(|| bad("truncated"))?;
        let s = &self.b[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, MascError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, MascError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<(MascConfig, Params), MascError> {
    if bytes.len() < MAGIC.len() + 32 {
        return Err(bad("file too short"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(bad("checksum mismatch"));
    }
    let mut r = Reader { b: body, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let len = r.u32()? as usize;
    let cfg: MascConfig = serde_json::from_slice(r.take(len)?).map_err(|e| bad(format!("config: {e}")))?;
    cfg.validate()?;
    // shapes come from a zero-sized template so large tables are not initialised twice
    let mut p = Params::init(&MascConfig { table_size: 2, ..cfg.clone() });
    for t in &mut p.memory.tables {
        t.shape[0] = cfg.table_size;
    }
    let count = r.u32()? as usize;
    let mut slots = p.all_mut();
    if count != slots.len() {
        return Err(bad(format!("expected {} tensors, found {count}", slots.len())));
    }
    for t in slots.iter_mut() {
        let nlen = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(nlen)?).map_err(|_| bad("tensor name is not UTF-8"))?;
        if name != t.name {
            return Err(bad(format!("expected tensor {}, found {name}", t.name)));
        }
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
        if shape != t.shape {
            return Err(bad(format!("tensor {name}: shape {shape:?}, expected {:?}", t.shape)));
        }
        let n: usize = shape.iter().product();
        let raw = r.take(n * 8)?;
        t.data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    }
    if r.pos != body.len() {
        return Err(bad("trailing bytes"));
    }
    Ok((cfg, p))
}

pub fn save(path: &Path, cfg: &MascConfig, p: &Params) -> Result<(), MascError> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&to_bytes(cfg, p))?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(MascConfig, Params), MascError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MascConfig {
        MascConfig { d_model: 8, n_heads: 2, d_ff: 8, table_size: 10, slot_dim: 2, ..MascConfig::default() }
    }

    #[test]
    fn round_trip() {
        let cfg = small();
        let p = Params::init(&cfg);
        let (c2, p2) = from_bytes(&to_bytes(&cfg, &p)).unwrap();
        assert_eq!(c2, cfg);
        assert_eq!(p2, p);
    }

    #[test]
    fn corruption_is_detected() {
        let cfg = small();
        let mut b = to_bytes(&cfg, &Params::init(&cfg));
        let mid = b.len() / 2;
        b[mid] ^= 1;
        assert!(matches!(from_bytes(&b), Err(MascError::Checkpoint(_))));
        assert!(from_bytes(&b[..20]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let cfg = small();
        let p = Params::init(&cfg);
        save(&path, &cfg, &p).unwrap();
        assert_eq!(load(&path).unwrap().1, p);
    }
}
