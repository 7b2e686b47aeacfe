use super::{JointMotion, MotionError, LEFT_ANKLE, LEFT_FOOT, RIGHT_ANKLE, RIGHT_FOOT};

/// Squared per-frame displacement below which a foot joint counts as planted.
pub const DEFAULT_CONTACT_THRESHOLD: f64 = 2e-3;

/// Contact columns in feature order.
pub const CONTACT_JOINTS: [usize; 4] = [LEFT_ANKLE, LEFT_FOOT, RIGHT_ANKLE, RIGHT_FOOT];

/// Binary foot contacts, one row per forward difference (`frames - 1` rows).
///
/// Entry `(t, c)` is 1 iff the squared world displacement of contact joint
/// `c` between frames `t` and `t + 1` is strictly below the threshold.
pub fn compute_foot_contacts(m: &JointMotion, velocity_threshold: f64) -> Result<Vec<[f64; 4]>, MotionError> {
    if !(velocity_threshold.is_finite() && velocity_threshold > 0.0) {
        return Err(MotionError::InvalidConfig(format!(
            "contact threshold must be positive, got {velocity_threshold}"
        )));
    }
    let frames = m.frames();
    if frames < 2 {
        return Err(MotionError::InsufficientFrames { needed: 2, got: frames });
    }
    Ok((0..frames - 1)
        .map(|t| {
            let mut row = [0.0; 4];
            for (c, &j) in CONTACT_JOINTS.iter().enumerate() {
                let a = m.world_position(t, j);
                let b = m.world_position(t + 1, j);
                let sq: f64 = (0..3).map(|k| (b[k] - a[k]).powi(2)).sum();
                row[c] = if sq < velocity_threshold { 1.0 } else { 0.0 };
            }
            row
        })
        .collect())
}
