//! `MORAGDB1` database files.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u8` part tag,
//! `u32` dim, `u32` count, then per record: `u16` id length + UTF-8 id,
//! `u32` frame length, `u16` path length + UTF-8 motion path, `u16` text
//! length + UTF-8 source text, `dim` `f32` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DatabaseEntry, IndexError, Part, PartDatabase};

pub const MAGIC: &[u8; 8] = b"MORAGDB1";
pub const VERSION: u32 = 1;

fn put_str(w: &mut impl Write, s: &str, what: &str) -> Result<(), IndexError> {
    let len = u16::try_from(s.len()).map_err(|_| IndexError::Format(format!("{what} longer than 65535 bytes")))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_database(w: &mut impl Write, db: &PartDatabase) -> Result<(), IndexError> {
    let count = u32::try_from(db.len()).map_err(|_| IndexError::Format("too many entries".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[db.part().tag()])?;
    w.write_all(&(db.dim() as u32).to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    for e in db.entries() {
        put_str(w, &e.id, "id")?;
        w.write_all(&e.length.to_le_bytes())?;
        put_str(w, &e.motion_ref, "motion path")?;
        put_str(w, &e.source_text, "source text")?;
        for v in &e.embedding {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            IndexError::Corrupt(format!(
                "truncated: wanted {n} bytes at offset {}, file is {}",
                self.pos,
                self.bytes.len()
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let n = self.u16()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| IndexError::Corrupt(format!("invalid UTF-8 at offset {}", self.pos)))
    }
}

pub fn parse_database(bytes: &[u8]) -> Result<PartDatabase, IndexError> {
    if bytes.is_empty() {
        return Err(IndexError::Corrupt("empty file".into()));
    }
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(IndexError::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(IndexError::Format(format!("unsupported version {version}")));
    }
    let tag = c.take(1)?[0];
    let part = Part::from_tag(tag).ok_or_else(|| IndexError::Format(format!("unknown part tag {tag}")))?;
    let dim = c.u32()? as usize;
    let count = c.u32()? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id = c.string()?;
        let length = c.u32()?;
        let motion_ref = c.string()?;
        let source_text = c.string()?;
        let raw = c.take(dim.checked_mul(4).ok_or_else(|| IndexError::Corrupt("dim overflow".into()))?)?;
        let embedding = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        entries.push(DatabaseEntry { id, part, embedding, motion_ref, length, source_text });
    }
    if c.pos != bytes.len() {
        return Err(IndexError::Corrupt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    PartDatabase::build(part, entries)
}

pub fn read_database(r: &mut impl Read) -> Result<PartDatabase, IndexError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_database(&bytes)
}

pub fn save(db: &PartDatabase, path: impl AsRef<Path>) -> Result<(), IndexError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_database(&mut w, db)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<PartDatabase, IndexError> {
    read_database(&mut BufReader::new(File::open(path)?))
}
