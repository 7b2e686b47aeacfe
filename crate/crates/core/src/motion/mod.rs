//! Skeletal motion and the 263-wide per-frame feature representation.
//!
//! A [`JointMotion`] is the unit of composition: a 22-joint SMPL-subset
//! skeleton with a world-frame root trajectory, root-relative joint
//! positions expressed in the heading-aligned root frame, and 6D rotations
//! for the 21 non-root joints. A [`FeatureSequence`] is the flattened,
//! velocity-based form fed to downstream models; [`encode_features`] and
//! [`decode_features`] convert between the two.

mod contacts;
mod features;
pub mod io;
mod root;

pub use contacts::{compute_foot_contacts, DEFAULT_CONTACT_THRESHOLD};
pub use features::{decode_features, encode_features, encode_features_with, layout, FeatureSequence};
pub use root::{integrate_root, RootTrajectory};

use thiserror::Error;

pub const NUM_JOINTS: usize = 22;
/// Joints carrying a rotation row (all but the pelvis).
pub const NUM_ROT_JOINTS: usize = NUM_JOINTS - 1;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
];

pub const PELVIS: usize = 0;
pub const LEFT_ANKLE: usize = 7;
pub const RIGHT_ANKLE: usize = 8;
pub const LEFT_FOOT: usize = 10;
pub const RIGHT_FOOT: usize = 11;

/// Identity rotation in 6D form (first two columns of I).
pub const IDENTITY_6D: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

pub type Vec3 = [f64; 3];
pub type Rot6 = [f64; 6];

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("insufficient frames: need at least {needed}, got {got}")]
    InsufficientFrames { needed: usize, got: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("degenerate 6D rotation at frame {frame}, joint {joint}")]
    DegenerateRotation { frame: usize, joint: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trim target {target} out of range 1..={frames}")]
    Range { target: usize, frames: usize },
    #[error("malformed feature sequence: {0}")]
    MalformedFeature(String),
    #[error("motion file format error: {0}")]
    Format(String),
    #[error("motion file corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Full-body motion: per-frame root trajectory plus joint data.
///
/// Joint positions are root-relative and expressed in the root's
/// heading-aligned frame, so the pelvis entry is always the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMotion {
    pub(crate) fps: f64,
    pub(crate) root_translation: Vec<Vec3>,
    pub(crate) root_heading: Vec<f64>,
    pub(crate) joint_positions: Vec<[Vec3; NUM_JOINTS]>,
    pub(crate) joint_rotations: Vec<[Rot6; NUM_ROT_JOINTS]>,
}

const PELVIS_TOLERANCE: f64 = 1e-6;

impl JointMotion {
    pub fn new(
        fps: f64,
        root_translation: Vec<Vec3>,
        root_heading: Vec<f64>,
        joint_positions: Vec<[Vec3; NUM_JOINTS]>,
        joint_rotations: Vec<[Rot6; NUM_ROT_JOINTS]>,
    ) -> Result<Self, MotionError> {
        let m = Self { fps, root_translation, root_heading, joint_positions, joint_rotations };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        let n = self.root_translation.len();
        if n == 0 {
            return Err(MotionError::InsufficientFrames { needed: 1, got: 0 });
        }
        if self.root_heading.len() != n || self.joint_positions.len() != n || self.joint_rotations.len() != n {
            return Err(MotionError::Shape(format!(
                "per-frame field lengths differ: translation {n}, heading {}, positions {}, rotations {}",
                self.root_heading.len(),
                self.joint_positions.len(),
                self.joint_rotations.len()
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(MotionError::InvalidConfig(format!("fps must be positive, got {}", self.fps)));
        }
        if !self.root_translation.iter().flatten().all(|v| v.is_finite()) {
            return Err(MotionError::NonFinite("root_translation".into()));
        }
        if !self.root_heading.iter().all(|v| v.is_finite()) {
            return Err(MotionError::NonFinite("root_heading".into()));
        }
        if !self.joint_positions.iter().flatten().flatten().all(|v| v.is_finite()) {
            return Err(MotionError::NonFinite("joint_positions".into()));
        }
        if !self.joint_rotations.iter().flatten().flatten().all(|v| v.is_finite()) {
            return Err(MotionError::NonFinite("joint_rotations".into()));
        }
        for (t, frame) in self.joint_positions.iter().enumerate() {
            if frame[PELVIS].iter().any(|v| v.abs() > PELVIS_TOLERANCE) {
                return Err(MotionError::Shape(format!(
                    "frame {t}: pelvis must sit at the root-relative origin, got {:?}",
                    frame[PELVIS]
                )));
            }
        }
        for (t, frame) in self.joint_rotations.iter().enumerate() {
            for (r, rot) in frame.iter().enumerate() {
                if !rot6_is_valid(rot) {
                    return Err(MotionError::DegenerateRotation { frame: t, joint: r + 1 });
                }
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.root_translation.len()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn root_translation(&self) -> &[Vec3] {
        &self.root_translation
    }

    pub fn root_heading(&self) -> &[f64] {
        &self.root_heading
    }

    pub fn joint_positions(&self) -> &[[Vec3; NUM_JOINTS]] {
        &self.joint_positions
    }

    /// Rotation rows for joints `1..22`; row `r` belongs to joint `r + 1`.
    pub fn joint_rotations(&self) -> &[[Rot6; NUM_ROT_JOINTS]] {
        &self.joint_rotations
    }

    /// World-frame position of joint `j` at frame `t`.
    pub fn world_position(&self, t: usize, j: usize) -> Vec3 {
        let local = self.joint_positions[t][j];
        let [x, z] = rotate_y(self.root_heading[t], [local[0], local[2]]);
        let root = self.root_translation[t];
        [root[0] + x, root[1] + local[1], root[2] + z]
    }

    /// First `target` frames.
    pub fn trim(&self, target: usize) -> Result<JointMotion, MotionError> {
        self.window(0, target)
    }

    /// Frames `start..start + len`, all fields sliced together.
    pub fn window(&self, start: usize, len: usize) -> Result<JointMotion, MotionError> {
        let frames = self.frames();
        if len == 0 || start + len > frames {
            return Err(MotionError::Range { target: len, frames: frames.saturating_sub(start) });
        }
        let r = start..start + len;
        Ok(JointMotion {
            fps: self.fps,
            root_translation: self.root_translation[r.clone()].to_vec(),
            root_heading: self.root_heading[r.clone()].to_vec(),
            joint_positions: self.joint_positions[r.clone()].to_vec(),
            joint_rotations: self.joint_rotations[r].to_vec(),
        })
    }
}

/// Free-function form of [`JointMotion::trim`].
pub fn trim(m: &JointMotion, target: usize) -> Result<JointMotion, MotionError> {
    m.trim(target)
}

/// Rotate a planar `(x, z)` vector about +Y by `angle` radians.
#[inline]
pub fn rotate_y(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

#[inline]
fn rotate_y3(angle: f64, v: Vec3) -> Vec3 {
    let [x, z] = rotate_y(angle, [v[0], v[2]]);
    [x, v[1], z]
}

/// Both 6D columns non-zero and non-parallel, so Gram-Schmidt is defined.
pub fn rot6_is_valid(r: &Rot6) -> bool {
    let a = [r[0], r[1], r[2]];
    let b = [r[3], r[4], r[5]];
    let na = norm3(a);
    let nb = norm3(b);
    if !(na > 1e-9 && nb > 1e-9) {
        return false;
    }
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    norm3(cross) > 1e-6 * na * nb
}

#[inline]
fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
