//! Small rotation and vector helpers shared by the dynamics and control code.

use nalgebra::{Matrix3, Vector3};

/// Skew-symmetric (hat) matrix such that `hat(a) * b == a.cross(&b)`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Vee map, inverse of [`hat`] for skew-symmetric matrices.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Re-orthonormalize a rotation matrix with modified Gram-Schmidt.
///
/// Integration drifts R away from SO(3) by O(dt^2) per step; this pulls it
/// back while preserving the z-column direction last (thrust axis priority
/// is irrelevant at these drift levels, column order just fixes convention).
pub fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = r.column(0).normalize();
    let mut c1 = r.column(1) - c0 * r.column(1).dot(&c0);
    c1.normalize_mut();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

/// Rotation angle (rad) between two rotation matrices.
pub fn rotation_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = a.transpose() * b;
    let c = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    c.acos()
}

/// Axis-angle vector of a rotation matrix (matrix logarithm).
pub fn log_so3(r: &Matrix3<f64>) -> Vector3<f64> {
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = c.acos();
    if angle < 1e-10 {
        // First-order: R ~ I + hat(w)
        return vee(&(r - Matrix3::identity()));
    }
    let w = vee(&(r - r.transpose()));
    w * (angle / (2.0 * angle.sin()))
}

/// Rotation matrix from an axis-angle vector (matrix exponential).
pub fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let angle = w.norm();
    if angle < 1e-12 {
        return Matrix3::identity() + hat(w);
    }
    let k = hat(&(w / angle));
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    } else if x <= -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    }
    x
}

/// Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0.
pub fn quat_from_matrix(r: &Matrix3<f64>) -> [f64; 4] {
    let q = nalgebra::UnitQuaternion::from_matrix(r);
    let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
    [q.w, q.i, q.j, q.k]
}

/// Rotation matrix from a unit quaternion (w, x, y, z).
pub fn matrix_from_quat(q: &[f64; 4]) -> Matrix3<f64> {
    nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]))
        .to_rotation_matrix()
        .into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hat_vee_roundtrip() {
        let v = Vector3::new(0.3, -1.2, 2.5);
        assert_relative_eq!(vee(&hat(&v)), v);
        let a = Vector3::new(1.0, 2.0, 3.0);
        assert_relative_eq!(hat(&v) * a, v.cross(&a));
    }

    #[test]
    fn exp_log_roundtrip() {
        let w = Vector3::new(0.2, -0.4, 0.9);
        let r = exp_so3(&w);
        assert_relative_eq!(log_so3(&r), w, epsilon = 1e-12);
        assert_relative_eq!((r.transpose() * r - Matrix3::identity()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn orthonormalize_restores_so3() {
        let w = Vector3::new(0.1, 0.7, -0.3);
        let mut r = exp_so3(&w);
        // inject drift
        r[(0, 0)] += 1e-6;
        r[(2, 1)] -= 2e-6;
        let fixed = orthonormalize(&r);
        assert!((fixed.transpose() * fixed - Matrix3::identity()).norm() < 1e-14);
        assert!(rotation_distance(&fixed, &exp_so3(&w)) < 1e-5);
    }

    #[test]
    fn quat_matrix_roundtrip() {
        let r = exp_so3(&Vector3::new(-0.6, 0.2, 1.1));
        let q = quat_from_matrix(&r);
        assert_relative_eq!(matrix_from_quat(&q), r, epsilon = 1e-12);
        assert!(q[0] >= 0.0);
    }
}
