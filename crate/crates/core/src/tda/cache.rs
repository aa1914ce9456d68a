//! Binary diagram cache.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic    8 bytes  "TOPOPD01"
//! key      u64      fingerprint of the settings that produced the diagrams
//! records  u64
//! per record:
//!   id       u64
//!   count    u32
//!   count x (dim f64, birth f64, death f64)
//!   count x channel u32
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagram::PersistenceDiagram;
use super::reduction::PersistencePair;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TOPOPD01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedDiagram {
    pub id: u64,
    pub diagram: PersistenceDiagram,
}

pub fn encode(key: u64, records: &[CachedDiagram]) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&key.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for rec in records {
        buf.extend_from_slice(&rec.id.to_le_bytes());
        buf.extend_from_slice(&(rec.diagram.pairs.len() as u32).to_le_bytes());
        for p in &rec.diagram.pairs {
            buf.extend_from_slice(&(p.dim as f64).to_le_bytes());
            buf.extend_from_slice(&p.birth.to_le_bytes());
            buf.extend_from_slice(&p.death.to_le_bytes());
        }
        for &c in &rec.diagram.channels {
            buf.extend_from_slice(&(c as u32).to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let chunk = self.bytes.get(self.pos..self.pos + N)?;
        self.pos += N;
        chunk.try_into().ok()
    }

    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

/// Returns the settings key and the records, or a description of what is wrong.
pub fn decode(bytes: &[u8]) -> std::result::Result<(u64, Vec<CachedDiagram>), String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take::<8>().as_ref() != Some(MAGIC) {
        return Err("bad magic".into());
    }
    let key = r.u64().ok_or("truncated header")?;
    let declared = r.u64().ok_or("truncated header")? as usize;
    let mut records = Vec::new();
    while r.pos < bytes.len() {
        let id = r.u64().ok_or("truncated record id")?;
        let count = r.u32().ok_or("truncated record count")? as usize;
        let mut pairs = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let (dim, birth, death) = match (r.f64(), r.f64(), r.f64()) {
                (Some(d), Some(b), Some(e)) => (d, b, e),
                _ => return Err(format!("truncated pairs in record {id}")),
            };
            if dim != 0.0 && dim != 1.0 {
                return Err(format!("invalid homology dimension {dim} in record {id}"));
            }
            pairs.push(PersistencePair { dim: dim as usize, birth, death });
        }
        let channels = (0..count)
            .map(|_| r.u32().map(|c| c as usize))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format!("truncated channels in record {id}"))?;
        records.push(CachedDiagram { id, diagram: PersistenceDiagram { pairs, channels } });
    }
    if records.len() != declared {
        return Err(format!("header declares {declared} records, found {}", records.len()));
    }
    Ok((key, records))
}

pub fn write_cache(path: &Path, key: u64, records: &[CachedDiagram]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(key, records)).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: &Path) -> Result<(u64, Vec<CachedDiagram>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::CorruptCache { path: path.to_path_buf(), msg })
}

/// Human-readable dump of the same records.
pub fn write_json_dump(path: &Path, records: &[CachedDiagram]) -> Result<()> {
    let text = serde_json::to_string_pretty(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
