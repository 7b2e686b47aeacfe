//! `MORAGMO1` motion files.
//!
//! Header: 8-byte magic, then little-endian `u32` version (1), frames, row
//! width and fps; followed by `frames * width` little-endian `f32` values in
//! row-major order. Width 263 marks a feature sequence; width 196 a joint
//! motion laid out as `[root_translation(3), root_heading(1),
//! joint_positions(66), joint_rotations(126)]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::features::layout;
use super::{FeatureSequence, JointMotion, MotionError, Rot6, Vec3, NUM_JOINTS, NUM_ROT_JOINTS};

pub const MAGIC: &[u8; 8] = b"MORAGMO1";
pub const VERSION: u32 = 1;
pub const JOINT_WIDTH: usize = 3 + 1 + NUM_JOINTS * 3 + NUM_ROT_JOINTS * 6;
pub const FEATURE_WIDTH: usize = layout::WIDTH;
const HEADER_LEN: usize = 8 + 4 * 4;

/// Contents of a motion file.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionFile {
    Joints(JointMotion),
    Features { fps: u32, features: FeatureSequence },
}

fn fps_to_u32(fps: f64) -> Result<u32, MotionError> {
    let r = fps.round();
    if (fps - r).abs() > 1e-6 || r < 1.0 || r > u32::MAX as f64 {
        return Err(MotionError::Format(format!("fps {fps} is not a positive integer")));
    }
    Ok(r as u32)
}

fn write_header(w: &mut impl Write, frames: usize, width: usize, fps: u32) -> Result<(), MotionError> {
    let frames = u32::try_from(frames).map_err(|_| MotionError::Format("too many frames".into()))?;
    w.write_all(MAGIC)?;
    for v in [VERSION, frames, width as u32, fps] {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn put(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&(v as f32).to_le_bytes())
}

pub fn write_joint_motion(w: &mut impl Write, m: &JointMotion) -> Result<(), MotionError> {
    write_header(w, m.frames(), JOINT_WIDTH, fps_to_u32(m.fps)?)?;
    for t in 0..m.frames() {
        for v in m.root_translation[t] {
            put(w, v)?;
        }
        put(w, m.root_heading[t])?;
        for v in m.joint_positions[t].iter().flatten() {
            put(w, *v)?;
        }
        for v in m.joint_rotations[t].iter().flatten() {
            put(w, *v)?;
        }
    }
    Ok(())
}

pub fn write_features(w: &mut impl Write, f: &FeatureSequence, fps: u32) -> Result<(), MotionError> {
    if fps == 0 {
        return Err(MotionError::Format("fps must be positive".into()));
    }
    write_header(w, f.frames(), FEATURE_WIDTH, fps)?;
    for v in f.as_flat() {
        put(w, *v)?;
    }
    Ok(())
}

pub fn joint_motion_bytes(m: &JointMotion) -> Result<Vec<u8>, MotionError> {
    let mut buf = Vec::with_capacity(HEADER_LEN + m.frames() * JOINT_WIDTH * 4);
    write_joint_motion(&mut buf, m)?;
    Ok(buf)
}

pub fn read_motion(r: &mut impl Read) -> Result<MotionFile, MotionError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_motion(&bytes)
}

pub fn parse_motion(bytes: &[u8]) -> Result<MotionFile, MotionError> {
    if bytes.len() < HEADER_LEN {
        return Err(MotionError::Corrupt(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(MotionError::Format("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let (version, frames, width, fps) = (word(0), word(1) as usize, word(2) as usize, word(3));
    if version != VERSION {
        return Err(MotionError::Format(format!("unsupported version {version}")));
    }
    if width != JOINT_WIDTH && width != FEATURE_WIDTH {
        return Err(MotionError::Format(format!("unknown row width {width}")));
    }
    if fps == 0 {
        return Err(MotionError::Format("fps must be positive".into()));
    }
    let expected = frames
        .checked_mul(width)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| MotionError::Corrupt("size overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(MotionError::Corrupt(format!("expected {expected} payload bytes, found {}", body.len())));
    }
    let values: Vec<f64> = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    if width == FEATURE_WIDTH {
        return Ok(MotionFile::Features { fps, features: FeatureSequence::from_flat(values)? });
    }
    let mut root_translation = Vec::with_capacity(frames);
    let mut root_heading = Vec::with_capacity(frames);
    let mut joint_positions = Vec::with_capacity(frames);
    let mut joint_rotations = Vec::with_capacity(frames);
    for row in values.chunks_exact(JOINT_WIDTH) {
        root_translation.push([row[0], row[1], row[2]] as Vec3);
        root_heading.push(row[3]);
        let mut pos = [[0.0; 3]; NUM_JOINTS];
        for (j, c) in row[4..4 + NUM_JOINTS * 3].chunks_exact(3).enumerate() {
            pos[j] = [c[0], c[1], c[2]];
        }
        let mut rot = [[0.0; 6]; NUM_ROT_JOINTS];
        for (j, c) in row[4 + NUM_JOINTS * 3..].chunks_exact(6).enumerate() {
            rot[j] = <Rot6>::try_from(c).unwrap();
        }
        joint_positions.push(pos);
        joint_rotations.push(rot);
    }
    let m = JointMotion::new(fps as f64, root_translation, root_heading, joint_positions, joint_rotations)?;
    Ok(MotionFile::Joints(m))
}

pub fn save_joint_motion(path: impl AsRef<Path>, m: &JointMotion) -> Result<(), MotionError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_joint_motion(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn save_features(path: impl AsRef<Path>, f: &FeatureSequence, fps: u32) -> Result<(), MotionError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_features(&mut w, f, fps)?;
    w.flush()?;
    Ok(())
}

pub fn load_motion(path: impl AsRef<Path>) -> Result<MotionFile, MotionError> {
    read_motion(&mut BufReader::new(File::open(path)?))
}

/// Load a file that must hold a joint motion.
pub fn load_joint_motion(path: impl AsRef<Path>) -> Result<JointMotion, MotionError> {
    match load_motion(path)? {
        MotionFile::Joints(m) => Ok(m),
        MotionFile::Features { .. } => Err(MotionError::Format("expected a joint motion, found features".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::encode_features;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f32_exact(m: &JointMotion) -> JointMotion {
        // Round every value through f32 so the file round trip is exact.
        let bytes = joint_motion_bytes(m).unwrap();
        match parse_motion(&bytes).unwrap() {
            MotionFile::Joints(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn joint_width_is_196() {
        assert_eq!(JOINT_WIDTH, 196);
    }

    #[test]
    fn joint_round_trip_is_stable_after_first_quantization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = f32_exact(&synth::random_motion(&mut rng, 7, 20.0));
        assert_eq!(f32_exact(&m), m);
        let bytes = joint_motion_bytes(&m).unwrap();
        assert_eq!(bytes.len(), 24 + 7 * 196 * 4);
        assert_eq!(&bytes[..8], b"MORAGMO1");
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 196);
    }

    #[test]
    fn features_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = synth::random_motion(&mut rng, 6, 20.0);
        let f = encode_features(&m).unwrap();
        let mut buf = Vec::new();
        write_features(&mut buf, &f, 20).unwrap();
        match parse_motion(&buf).unwrap() {
            MotionFile::Features { fps, features } => {
                assert_eq!(fps, 20);
                assert_eq!(features.frames(), 5);
                for (a, b) in features.as_flat().iter().zip(f.as_flat()) {
                    assert_eq!(*a, *b as f32 as f64);
                }
            }
            _ => panic!("expected features"),
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(parse_motion(&[]), Err(MotionError::Corrupt(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = synth::random_motion(&mut rng, 3, 20.0);
        let good = joint_motion_bytes(&m).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(parse_motion(&bad), Err(MotionError::Format(_))));
        let mut bad = good.clone();
        bad[8] = 2;
        assert!(matches!(parse_motion(&bad), Err(MotionError::Format(_))));
        assert!(matches!(parse_motion(&good[..good.len() - 3]), Err(MotionError::Corrupt(_))));
        let mut frac = m.clone();
        frac.fps = 29.97;
        assert!(matches!(joint_motion_bytes(&frac), Err(MotionError::Format(_))));
    }
}
