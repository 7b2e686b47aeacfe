//! Text-similarity matrix files: `N * N` little-endian `f32`, row-major, no
//! header. Rows must be symmetric with a unit diagonal.

use std::path::Path;

use super::ContrastiveError;

pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

fn io_err(path: &Path, e: impl std::fmt::Display) -> ContrastiveError {
    ContrastiveError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Parse and validate. With `n` set the matrix must be exactly `n x n`.
pub fn parse_text_sims(bytes: &[u8], n: Option<usize>) -> Result<Vec<Vec<f64>>, ContrastiveError> {
    if !bytes.len().is_multiple_of(4) {
        return Err(ContrastiveError::Shape(format!("{} bytes is not a whole number of f32 values", bytes.len())));
    }
    let values: Vec<f64> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    let side = (values.len() as f64).sqrt().round() as usize;
    if side == 0 || side * side != values.len() {
        return Err(ContrastiveError::Shape(format!("{} values do not form a square matrix", values.len())));
    }
    if let Some(n) = n.filter(|&n| n != side) {
        return Err(ContrastiveError::Shape(format!("similarity matrix is {side} x {side}, expected {n} x {n}")));
    }
    let rows: Vec<Vec<f64>> = values.chunks_exact(side).map(<[f64]>::to_vec).collect();
    for i in 0..side {
        if (rows[i][i] - 1.0).abs() > SYMMETRY_TOLERANCE {
            return Err(ContrastiveError::Shape(format!("diagonal entry {i} is {}, expected 1", rows[i][i])));
        }
        for j in 0..side {
            let v = rows[i][j];
            if !v.is_finite() || !(-1.0 - SYMMETRY_TOLERANCE..=1.0 + SYMMETRY_TOLERANCE).contains(&v) {
                return Err(ContrastiveError::Shape(format!("entry ({i}, {j}) = {v} outside [-1, 1]")));
            }
            if (v - rows[j][i]).abs() > SYMMETRY_TOLERANCE {
                return Err(ContrastiveError::Shape(format!("not symmetric at ({i}, {j}): {v} vs {}", rows[j][i])));
            }
        }
    }
    Ok(rows)
}

pub fn read_text_sims(path: impl AsRef<Path>, n: Option<usize>) -> Result<Vec<Vec<f64>>, ContrastiveError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    parse_text_sims(&bytes, n)
}

pub fn text_sims_bytes(rows: &[Vec<f64>]) -> Vec<u8> {
    rows.iter().flatten().flat_map(|v| (*v as f32).to_le_bytes()).collect()
}

pub fn write_text_sims(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<(), ContrastiveError> {
    let path = path.as_ref();
    std::fs::write(path, text_sims_bytes(rows)).map_err(|e| io_err(path, e))
}
