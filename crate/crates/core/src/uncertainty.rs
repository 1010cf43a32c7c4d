//! Pose covariance, variance factor and the sequential covariance feedback
//! that turns a solved frame into observation covariances for the next one.

use nalgebra::{Matrix2, Matrix3, Matrix6, Vector2, Vector3, Vector6};

use crate::camera::BearingObservation;
use crate::solver::{normal_equations, residual, residual_jacobian, Correspondence, Pose};
use crate::tangent::{lift_covariance, nullspace, reduce_covariance};
use crate::{Error, Result};

/// Eigenvalue floor applied to fed-back reduced covariances.
pub const FEEDBACK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub planar: bool,
    pub gn_iterations: usize,
    /// Weighted cost `rᵀPr` at the returned pose.
    pub weighted_cost: f64,
    /// Weighted cost of the linear initialization.
    pub linear_cost: f64,
    /// `2I - 6`
    pub redundancy: usize,
    /// Largest over second-smallest eigenvalue of the linear normal matrix.
    pub condition: f64,
}

/// Estimated pose and its uncertainty.
///
/// Parameters are ordered as the Rodrigues vector followed by the
/// translation; the first three `sigmas` are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSolution {
    pub pose: Pose,
    /// Cofactor `(JᵀPJ)⁻¹` of `(ω, t)`.
    pub covariance: Matrix6<f64>,
    pub sigma0_sq: f64,
    pub sigmas: Vector6<f64>,
    pub diagnostics: Diagnostics,
}

/// `(JᵀPJ)⁻¹` at `pose`, `J` being the stacked tangent residual Jacobians.
pub fn pose_covariance(corrs: &[Correspondence], pose: &Pose, use_covariance: bool) -> Result<Matrix6<f64>> {
    let (normal, _, _) = normal_equations(corrs, &pose.rodrigues(), &pose.translation, use_covariance);
    let inv = normal.cholesky().ok_or(Error::SingularNormalMatrix)?.inverse();
    Ok((inv + inv.transpose()) * 0.5)
}

pub fn stacked_residuals(corrs: &[Correspondence], pose: &Pose) -> Vec<Vector2<f64>> {
    corrs.iter().map(|c| residual(c, pose)).collect()
}

/// `σ₀² = rᵀPr / (2I - 6)`
pub fn variance_factor(residuals: &[Vector2<f64>], weights: &[Matrix2<f64>]) -> Result<f64> {
    let points = residuals.len();
    if 2 * points <= 6 {
        return Err(Error::ZeroRedundancy { points });
    }
    let weighted: f64 = residuals.iter().zip(weights).map(|(e, w)| (e.transpose() * w * e)[0]).sum();
    Ok(weighted / (2 * points - 6) as f64)
}

/// `σ₀ · sqrt(diag Σ)`
pub fn internal_sigmas(covariance: &Matrix6<f64>, sigma0_sq: f64) -> Vector6<f64> {
    let sigma0 = sigma0_sq.max(0.0).sqrt();
    covariance.diagonal().map(|d| sigma0 * d.max(0.0).sqrt())
}

/// Per-point observation cofactors `Jᵢ Σ Jᵢᵀ`, lifted back to 3x3 bearing
/// covariances.
///
/// Only the 2x2 diagonal blocks of the full cofactor matrix are formed.
/// Each block has its eigenvalues floored at [`FEEDBACK_FLOOR`] before
/// lifting so the result stays usable as a weight.
pub fn observation_cofactor_feedback(
    corrs: &[Correspondence],
    pose: &Pose,
    sigma_params: &Matrix6<f64>,
) -> Vec<Matrix3<f64>> {
    let omega = pose.rodrigues();
    corrs
        .iter()
        .map(|c| {
            let (_, jac) = residual_jacobian(c, &omega, &pose.translation);
            let q = jac * sigma_params * jac.transpose();
            let q = floor_eigenvalues(&((q + q.transpose()) * 0.5), FEEDBACK_FLOOR);
            lift_covariance(&c.obs.basis, &q)
        })
        .collect()
}

fn floor_eigenvalues(m: &Matrix2<f64>, floor: f64) -> Matrix2<f64> {
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.min() >= floor {
        return *m;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    eig.eigenvectors * Matrix2::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Bearing observation for a new measurement `v` of a feature whose
/// covariance comes from a previous frame's feedback.
///
/// The fed-back covariance is re-projected onto the tangent plane of `v`.
pub fn observation_with_prior(v: &Vector3<f64>, prior: &Matrix3<f64>) -> Result<BearingObservation> {
    let proj = Matrix3::identity() - v * v.transpose();
    let cov = proj * prior * proj;
    let cov = (cov + cov.transpose()) * 0.5;
    let basis = nullspace(v);
    debug_assert!(reduce_covariance(&basis, &cov).iter().all(|x| x.is_finite()));
    BearingObservation::with_basis(*v, cov, basis)
}
