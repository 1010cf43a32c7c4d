//! Rodrigues (axis-angle) parametrization of rotations.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

const SMALL_ANGLE: f64 = 1e-8;

pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Exponential map: the rotation by `‖ω‖` radians about `ω / ‖ω‖`.
pub fn rodrigues_to_matrix(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(omega);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Inverse of [`rodrigues_to_matrix`]; the returned angle lies in `[0, π]`.
///
/// Goes through a unit quaternion so the near-π case stays accurate.
pub fn matrix_to_rodrigues(rotation: &Matrix3<f64>) -> Vector3<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*rotation));
    q.scaled_axis()
}

/// Left Jacobian of SO(3): `exp(ω + δ) ≈ exp(J_l(ω) δ) exp(ω)`.
pub fn left_jacobian(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(omega);
    let (a, b) = if theta < SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        ((1.0 - theta.cos()) / theta2, (theta - theta.sin()) / (theta2 * theta))
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Maps `ω` to the equivalent vector with norm in `[0, π]`.
pub fn wrap_rodrigues(omega: &Vector3<f64>) -> Vector3<f64> {
    let theta = omega.norm();
    if theta <= std::f64::consts::PI {
        return *omega;
    }
    let wrapped = theta.rem_euclid(2.0 * std::f64::consts::PI);
    let unit = omega / theta;
    if wrapped <= std::f64::consts::PI {
        unit * wrapped
    } else {
        unit * (wrapped - 2.0 * std::f64::consts::PI)
    }
}

/// Closest rotation in Frobenius norm, with the reflection case folded back
/// onto SO(3) by flipping the last right singular vector.
pub fn project_to_so3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let mut v_t = svd.v_t.unwrap();
    let s = svd.singular_values;
    // nalgebra does not sort singular values; the flip belongs to the smallest
    let smallest = s.imin();
    let r = u * v_t;
    if r.determinant() < 0.0 {
        v_t.row_mut(smallest).neg_mut();
        return u * v_t;
    }
    r
}
