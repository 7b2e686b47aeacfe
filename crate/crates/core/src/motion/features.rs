use super::{
    compute_foot_contacts, integrate_root, rot6_is_valid, rotate_y3, JointMotion, MotionError, Rot6, Vec3,
    DEFAULT_CONTACT_THRESHOLD, IDENTITY_6D, NUM_JOINTS, NUM_ROT_JOINTS,
};

/// Per-frame feature row layout: `[ra | rx rz | ry | jp | jv | jr | cf]`.
pub mod layout {
    pub const WIDTH: usize = 263;
    pub const ROOT_ANGULAR: usize = 0;
    pub const ROOT_VEL_X: usize = 1;
    pub const ROOT_VEL_Z: usize = 2;
    pub const ROOT_HEIGHT: usize = 3;
    /// Local positions of joints 1..22 (21 x 3).
    pub const POSITIONS: std::ops::Range<usize> = 4..67;
    /// Local velocities of all 22 joints (22 x 3).
    pub const VELOCITIES: std::ops::Range<usize> = 67..133;
    /// 6D rotations of joints 1..22 (21 x 6).
    pub const ROTATIONS: std::ops::Range<usize> = 133..259;
    /// Foot contacts: left ankle, left foot, right ankle, right foot.
    pub const CONTACTS: std::ops::Range<usize> = 259..263;
    /// Start offsets of every slice after the first.
    pub const BOUNDARIES: [usize; 6] = [1, 3, 4, 67, 133, 259];
}

use layout::*;

/// `frames x 263` row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    data: Vec<f64>,
}

impl FeatureSequence {
    pub fn from_rows(rows: Vec<[f64; WIDTH]>) -> Result<Self, MotionError> {
        Self::from_flat(rows.into_iter().flatten().collect())
    }

    pub fn from_flat(data: Vec<f64>) -> Result<Self, MotionError> {
        if data.is_empty() || !data.len().is_multiple_of(WIDTH) {
            return Err(MotionError::MalformedFeature(format!(
                "flat length {} is not a positive multiple of {WIDTH}",
                data.len()
            )));
        }
        let seq = Self { data };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(MotionError::MalformedFeature(format!(
                "non-finite entry at row {}, column {}",
                i / WIDTH,
                i % WIDTH
            )));
        }
        for (t, row) in self.rows().enumerate() {
            if row[CONTACTS].iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(MotionError::MalformedFeature(format!("row {t}: foot contact outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.data.len() / WIDTH
    }

    pub fn width(&self) -> usize {
        WIDTH
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * WIDTH..(t + 1) * WIDTH]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(WIDTH)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Column `c` across all frames.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    /// Mean feature row, a fixed-size summary of the whole sequence.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut out = vec![0.0; WIDTH];
        for r in self.rows() {
            for (o, v) in out.iter_mut().zip(r) {
                *o += v;
            }
        }
        let n = self.frames() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// [`encode_features_with`] at the default contact threshold.
pub fn encode_features(m: &JointMotion) -> Result<FeatureSequence, MotionError> {
    encode_features_with(m, DEFAULT_CONTACT_THRESHOLD)
}

/// Convert a skeletal motion into `frames - 1` feature rows.
///
/// Velocities are forward differences per frame, expressed in the root's
/// heading frame at the earlier of the two frames; the final frame only
/// contributes as the endpoint of the last difference.
pub fn encode_features_with(m: &JointMotion, contact_threshold: f64) -> Result<FeatureSequence, MotionError> {
    m.validate()?;
    let frames = m.frames();
    if frames < 2 {
        return Err(MotionError::InsufficientFrames { needed: 2, got: frames });
    }
    let contacts = compute_foot_contacts(m, contact_threshold)?;
    let mut data = Vec::with_capacity((frames - 1) * WIDTH);
    for t in 0..frames - 1 {
        let h = m.root_heading[t];
        let r0 = m.root_translation[t];
        let r1 = m.root_translation[t + 1];
        let local = rotate_y3(-h, [r1[0] - r0[0], 0.0, r1[2] - r0[2]]);
        data.push(m.root_heading[t + 1] - h);
        data.push(local[0]);
        data.push(local[2]);
        data.push(r0[1]);
        for p in &m.joint_positions[t][1..] {
            data.extend_from_slice(p);
        }
        for j in 0..NUM_JOINTS {
            let a = m.world_position(t, j);
            let b = m.world_position(t + 1, j);
            let v = rotate_y3(-h, [b[0] - a[0], b[1] - a[1], b[2] - a[2]]);
            data.extend_from_slice(&v);
        }
        for r in &m.joint_rotations[t] {
            data.extend_from_slice(r);
        }
        data.extend_from_slice(&contacts[t]);
    }
    debug_assert_eq!(data.len(), (frames - 1) * WIDTH);
    Ok(FeatureSequence { data })
}

/// Rebuild a skeletal motion from features.
///
/// The root is integrated from the origin with heading 0, so the result
/// matches the encoded motion up to a rigid planar transform. Joint
/// velocities and contacts are ignored (they are implied by the rest). A 6D
/// rotation row whose columns are zero or parallel, which a valid motion
/// never produces, decodes to the identity rotation.
pub fn decode_features(f: &FeatureSequence, fps: f64) -> Result<JointMotion, MotionError> {
    f.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(MotionError::InvalidConfig(format!("fps must be positive, got {fps}")));
    }
    let root =
        integrate_root(&f.column(ROOT_ANGULAR), &f.column(ROOT_VEL_X), &f.column(ROOT_VEL_Z), &f.column(ROOT_HEIGHT))?;
    let mut joint_positions = Vec::with_capacity(f.frames());
    let mut joint_rotations = Vec::with_capacity(f.frames());
    for row in f.rows() {
        let mut pos = [[0.0; 3]; NUM_JOINTS];
        for (j, chunk) in row[POSITIONS].chunks_exact(3).enumerate() {
            pos[j + 1] = [chunk[0], chunk[1], chunk[2]];
        }
        let mut rot: [Rot6; NUM_ROT_JOINTS] = [IDENTITY_6D; NUM_ROT_JOINTS];
        for (r, chunk) in row[ROTATIONS].chunks_exact(6).enumerate() {
            let candidate: Rot6 = chunk.try_into().expect("chunk of six");
            if rot6_is_valid(&candidate) {
                rot[r] = candidate;
            }
        }
        joint_positions.push(pos);
        joint_rotations.push(rot);
    }
    let root_translation: Vec<Vec3> = root.position;
    JointMotion::new(fps, root_translation, root.heading, joint_positions, joint_rotations)
}
