//! JSON-lines manifests and raw vector tables.
//!
//! A manifest line is `{"id", "part", "frames", "text", "motion_path"}`; row
//! `i` of the companion vectors file (headerless little-endian `f32`,
//! row-major) is the embedding of line `i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatabaseEntry, IndexError, Part, PartDatabase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLine {
    pub id: String,
    pub part: Part,
    pub frames: u32,
    pub text: String,
    pub motion_path: String,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestLine>, IndexError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec =
            serde_json::from_str(&line).map_err(|e| IndexError::Format(format!("manifest line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_manifest(path: impl AsRef<Path>, lines: &[ManifestLine]) -> Result<(), IndexError> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in lines {
        serde_json::to_writer(&mut w, l).map_err(|e| IndexError::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn manifest_of(db: &PartDatabase) -> Vec<ManifestLine> {
    db.entries()
        .iter()
        .map(|e| ManifestLine {
            id: e.id.clone(),
            part: e.part,
            frames: e.length,
            text: e.source_text.clone(),
            motion_path: e.motion_ref.clone(),
        })
        .collect()
}

/// Read a headerless `f32` table with `rows` rows. With `dim` set the file
/// must hold exactly `rows * dim` values; otherwise the width is inferred.
pub fn read_vectors(path: impl AsRef<Path>, rows: usize, dim: Option<usize>) -> Result<Vec<Vec<f32>>, IndexError> {
    let bytes = std::fs::read(path)?;
    parse_vectors(&bytes, rows, dim)
}

pub fn parse_vectors(bytes: &[u8], rows: usize, dim: Option<usize>) -> Result<Vec<Vec<f32>>, IndexError> {
    if let Some(d) = dim {
        if d == 0 || bytes.len() != rows * d * 4 {
            return Err(IndexError::Shape(format!(
                "{} bytes, expected {rows} rows of {d} f32 values ({} bytes)",
                bytes.len(),
                rows * d * 4
            )));
        }
    }
    if rows == 0 {
        return Err(IndexError::Shape("vector table needs at least one row".into()));
    }
    if !bytes.len().is_multiple_of(4) || !(bytes.len() / 4).is_multiple_of(rows) || bytes.is_empty() {
        return Err(IndexError::Shape(format!("{} bytes cannot hold {rows} rows of little-endian f32", bytes.len())));
    }
    let dim = bytes.len() / 4 / rows;
    Ok(bytes
        .chunks_exact(dim * 4)
        .map(|row| row.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect())
        .collect())
}

pub fn write_vectors(path: impl AsRef<Path>, rows: &[Vec<f32>]) -> Result<(), IndexError> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in rows.iter().flatten() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Zip a manifest with its vectors into a database for `part`.
pub fn build_from_manifest(
    part: Part,
    manifest: Vec<ManifestLine>,
    vectors: Vec<Vec<f32>>,
) -> Result<PartDatabase, IndexError> {
    if manifest.len() != vectors.len() {
        return Err(IndexError::Shape(format!("{} manifest lines vs {} vectors", manifest.len(), vectors.len())));
    }
    let entries = manifest
        .into_iter()
        .zip(vectors)
        .map(|(m, embedding)| {
            if m.part != part {
                return Err(IndexError::Build(format!(
                    "manifest entry {:?} is tagged {}, expected {part}",
                    m.id, m.part
                )));
            }
            Ok(DatabaseEntry {
                id: m.id,
                part,
                embedding,
                motion_ref: m.motion_path,
                length: m.frames,
                source_text: m.text,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    PartDatabase::build(part, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_build() {
        let dir = tempfile::tempdir().unwrap();
        let lines: Vec<ManifestLine> = (0..3)
            .map(|i| ManifestLine {
                id: format!("00000{i}"),
                part: Part::Torso,
                frames: 30 + i,
                text: format!("text {i}"),
                motion_path: format!("m/{i}.mo"),
            })
            .collect();
        let mp = dir.path().join("m.jsonl");
        write_manifest(&mp, &lines).unwrap();
        assert_eq!(read_manifest(&mp).unwrap(), lines);
        let vecs: Vec<Vec<f32>> = (0..3).map(|i| vec![i as f32 + 1.0, 0.5, -0.25]).collect();
        let vp = dir.path().join("v.f32");
        write_vectors(&vp, &vecs).unwrap();
        let back = read_vectors(&vp, 3, None).unwrap();
        assert_eq!(back, vecs);
        let db = build_from_manifest(Part::Torso, lines.clone(), back).unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(manifest_of(&db), lines);
        assert!(matches!(build_from_manifest(Part::Hands, lines.clone(), vecs.clone()), Err(IndexError::Build(_))));
        assert!(matches!(build_from_manifest(Part::Torso, lines, vecs[..2].to_vec()), Err(IndexError::Shape(_))));
    }

    #[test]
    fn vector_table_shape_errors() {
        assert!(parse_vectors(&[0u8; 10], 1, None).is_err());
        assert!(parse_vectors(&[0u8; 12], 2, None).is_err());
        assert_eq!(parse_vectors(&[0u8; 16], 2, None).unwrap().len(), 2);
        assert_eq!(parse_vectors(&[0u8; 16], 2, Some(2)).unwrap()[0].len(), 2);
        assert!(parse_vectors(&[0u8; 16], 1, Some(2)).is_err());
    }

    #[test]
    fn unknown_manifest_fields_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mp = dir.path().join("m.jsonl");
        std::fs::write(&mp, r#"{"id":"1","part":"legs","frames":3,"text":"t","motion_path":"p","extra":1}"#).unwrap();
        assert!(matches!(read_manifest(&mp), Err(IndexError::Format(_))));
    }
}
