//! Tangent space of a bearing vector on the unit sphere.
//!
//! Residuals and covariances of a unit vector live in the 2D plane
//! orthogonal to it; [`NullspaceBasis`] spans that plane and the functions
//! here move vectors and covariances between the 3D and reduced 2D forms.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};

/// Orthonormal basis `[r s]` of the orthogonal complement of a unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullspaceBasis {
    pub r: Vector3<f64>,
    pub s: Vector3<f64>,
}

impl NullspaceBasis {
    /// The 3x2 matrix `[r s]`.
    pub fn matrix(&self) -> Matrix3x2<f64> {
        Matrix3x2::from_columns(&[self.r, self.s])
    }

    /// Rotates the basis by `angle` within its own plane.
    pub fn rotated(&self, angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Self { r: self.r * cos + self.s * sin, s: self.s * cos - self.r * sin }
    }

    /// `a·r + b·s`.
    pub fn lift_vector(&self, reduced: &Vector2<f64>) -> Vector3<f64> {
        self.r * reduced.x + self.s * reduced.y
    }
}

/// Closed-form tangent basis of the unit vector `v`.
///
/// Starts from the canonical axis least aligned with `v`, removes its `v`
/// component and completes with `s = v × r`, so `det([r s v]) = +1`. The
/// sign of `r` is fixed so that its largest-magnitude component is positive.
pub fn nullspace(v: &Vector3<f64>) -> NullspaceBasis {
    let mut axis = 0;
    for k in 1..3 {
        if v[k].abs() < v[axis].abs() {
            axis = k;
        }
    }
    let mut r = -v * v[axis];
    r[axis] += 1.0;
    r.normalize_mut();

    let mut largest = 0;
    for k in 1..3 {
        if r[k].abs() > r[largest].abs() {
            largest = k;
        }
    }
    if r[largest] < 0.0 {
        r = -r;
    }
    let s = v.cross(&r).normalize();
    NullspaceBasis { r, s }
}

/// Tangent coordinates `(rᵀw, sᵀw)`.
pub fn reduce_vector(basis: &NullspaceBasis, w: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(basis.r.dot(w), basis.s.dot(w))
}

/// `Jᵀ Σ J` with `J = [r s]`.
pub fn reduce_covariance(basis: &NullspaceBasis, cov: &Matrix3<f64>) -> Matrix2<f64> {
    let j = basis.matrix();
    let m = j.transpose() * cov * j;
    (m + m.transpose()) * 0.5
}

/// `J Q Jᵀ` with `J = [r s]`; the result has the bearing vector in its kernel.
pub fn lift_covariance(basis: &NullspaceBasis, q: &Matrix2<f64>) -> Matrix3<f64> {
    let j = basis.matrix();
    let m = j * q * j.transpose();
    (m + m.transpose()) * 0.5
}
