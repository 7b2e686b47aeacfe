use super::{rotate_y, MotionError, Vec3};

/// Root heading and world position recovered from per-frame velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct RootTrajectory {
    pub heading: Vec<f64>,
    pub position: Vec<Vec3>,
}

impl RootTrajectory {
    pub fn len(&self) -> usize {
        self.heading.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heading.is_empty()
    }
}

/// Integrate root angular velocity, local planar velocity and height into a
/// world trajectory anchored at the origin with heading 0.
///
/// Velocities are per-frame increments. The planar step taken between frames
/// `t - 1` and `t` is `(vx[t-1], vz[t-1])` rotated by `heading[t-1]`; the
/// last velocity sample is therefore unused.
pub fn integrate_root(
    angular: &[f64],
    vel_x: &[f64],
    vel_z: &[f64],
    height: &[f64],
) -> Result<RootTrajectory, MotionError> {
    let len = angular.len();
    if vel_x.len() != len || vel_z.len() != len || height.len() != len {
        return Err(MotionError::Shape(format!(
            "root channel lengths differ: angular {len}, x {}, z {}, height {}",
            vel_x.len(),
            vel_z.len(),
            height.len()
        )));
    }
    if len == 0 {
        return Err(MotionError::InsufficientFrames { needed: 1, got: 0 });
    }
    let mut heading = Vec::with_capacity(len);
    let mut position = Vec::with_capacity(len);
    heading.push(0.0);
    position.push([0.0, height[0], 0.0]);
    for t in 1..len {
        let prev_h = heading[t - 1];
        let prev_p: Vec3 = position[t - 1];
        let [dx, dz] = rotate_y(prev_h, [vel_x[t - 1], vel_z[t - 1]]);
        heading.push(prev_h + angular[t - 1]);
        position.push([prev_p[0] + dx, height[t], prev_p[2] + dz]);
    }
    Ok(RootTrajectory { heading, position })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary() {
        let z = vec![0.0; 5];
        let tr = integrate_root(&z, &z, &z, &[0.9; 5]).unwrap();
        for t in 0..5 {
            assert_eq!(tr.position[t], [0.0, 0.9, 0.0]);
            assert_eq!(tr.heading[t], 0.0);
        }
    }

    #[test]
    fn constant_forward_velocity_sums() {
        let l = 11;
        let c = 0.25;
        let z = vec![0.0; l];
        let tr = integrate_root(&z, &vec![c; l], &z, &z).unwrap();
        // (L - 1) * c, closed form
        assert!((tr.position[l - 1][0] - (l as f64 - 1.0) * c).abs() < 1e-12);
        assert_eq!(tr.position[l - 1][2], 0.0);
    }

    #[test]
    fn length_mismatch() {
        let r = integrate_root(&[0.0; 3], &[0.0; 2], &[0.0; 3], &[0.0; 3]);
        assert!(matches!(r, Err(MotionError::Shape(_))));
        assert!(matches!(integrate_root(&[], &[], &[], &[]), Err(MotionError::InsufficientFrames { .. })));
    }
}
