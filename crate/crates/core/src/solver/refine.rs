use nalgebra::{Matrix2x6, Matrix3, Matrix6, Vector2, Vector3, Vector6};

use super::{Correspondence, Pose, SolverOptions};
use crate::rotation::{left_jacobian, matrix_to_rodrigues, rodrigues_to_matrix, skew, wrap_rodrigues};
use crate::{Error, Result};

/// Relative cost difference below which two iterates count as equally good;
/// ties go to the later iterate.
pub const COST_TIE: f64 = 1e-12;

/// Outcome of [`refine_gauss_newton`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    /// Lowest-cost iterate seen, possibly the initial pose.
    pub pose: Pose,
    pub iterations: usize,
    pub cost: f64,
    pub initial_cost: f64,
}

impl Refinement {
    /// False when no step improved on the initial pose.
    pub fn improved(&self) -> bool {
        self.cost < self.initial_cost
    }
}

/// Tangent-space residual of the spherically normalized predicted direction.
pub fn residual(corr: &Correspondence, pose: &Pose) -> Vector2<f64> {
    let n = pose.transform(&corr.point).normalize();
    Vector2::new(corr.obs.basis.r.dot(&n), corr.obs.basis.s.dot(&n))
}

/// Residual and its 2x6 Jacobian with respect to `(ω, t)`.
pub fn residual_jacobian(
    corr: &Correspondence,
    omega: &Vector3<f64>,
    t: &Vector3<f64>,
) -> (Vector2<f64>, Matrix2x6<f64>) {
    let rot = rodrigues_to_matrix(omega);
    linearize(corr, &rot, &left_jacobian(omega), t)
}

fn linearize(
    corr: &Correspondence,
    rot: &Matrix3<f64>,
    jl: &Matrix3<f64>,
    t: &Vector3<f64>,
) -> (Vector2<f64>, Matrix2x6<f64>) {
    let rp = rot * corr.point;
    let q = rp + t;
    let norm = q.norm();
    let n = q / norm;
    let basis = corr.obs.basis.matrix();
    let e = basis.tr_mul(&n);
    // d(q/|q|)/dq = (I - n nᵀ) / |q|
    let de_dq = (basis.transpose() - e * n.transpose()) / norm;
    let dq_domega = -skew(&rp) * jl;
    let mut jac = Matrix2x6::zeros();
    jac.fixed_view_mut::<2, 3>(0, 0).copy_from(&(de_dq * dq_domega));
    jac.fixed_view_mut::<2, 3>(0, 3).copy_from(&de_dq);
    (e, jac)
}

/// `Σ eᵢᵀ Pᵢ eᵢ`
pub fn weighted_cost(corrs: &[Correspondence], pose: &Pose, use_covariance: bool) -> f64 {
    corrs
        .iter()
        .map(|c| {
            let e = residual(c, pose);
            (e.transpose() * c.weight(use_covariance) * e)[0]
        })
        .sum()
}

/// Gauss-Newton normal matrix `JᵀPJ`, gradient `JᵀPe` and cost at `(ω, t)`.
pub fn normal_equations(
    corrs: &[Correspondence],
    omega: &Vector3<f64>,
    t: &Vector3<f64>,
    use_covariance: bool,
) -> (Matrix6<f64>, Vector6<f64>, f64) {
    let rot = rodrigues_to_matrix(omega);
    let jl = left_jacobian(omega);
    let mut normal = Matrix6::zeros();
    let mut gradient = Vector6::zeros();
    let mut cost = 0.0;
    for c in corrs {
        let (e, jac) = linearize(c, &rot, &jl, t);
        let w = c.weight(use_covariance);
        let wj = w * jac;
        normal += jac.transpose() * wj;
        gradient += wj.tr_mul(&e);
        cost += (e.transpose() * w * e)[0];
    }
    (normal, gradient, cost)
}

/// Weighted Gauss-Newton over the Rodrigues vector and translation.
///
/// Runs at most `opts.max_gn_iterations` steps, stopping early once the step
/// norm falls below `opts.gn_tolerance`, and returns the lowest-cost iterate.
/// Costs within [`COST_TIE`] of the best are resolved in favour of the later
/// iterate, and the result never costs more than `init`.
pub fn refine_gauss_newton(corrs: &[Correspondence], init: &Pose, opts: &SolverOptions) -> Result<Refinement> {
    let use_cov = opts.use_covariance;
    let initial_cost = weighted_cost(corrs, init, use_cov);
    let mut best = Refinement { pose: *init, iterations: 0, cost: initial_cost, initial_cost };

    let mut omega = matrix_to_rodrigues(&init.rotation);
    let mut t = init.translation;
    for it in 0..opts.max_gn_iterations {
        let (normal, gradient, _) = normal_equations(corrs, &omega, &t, use_cov);
        let step = normal.cholesky().ok_or(Error::SingularNormalMatrix)?.solve(&(-gradient));
        if !step.iter().all(|x| x.is_finite()) {
            return Err(Error::SingularNormalMatrix);
        }
        omega = wrap_rodrigues(&(omega + step.fixed_rows::<3>(0)));
        t += step.fixed_rows::<3>(3);
        best.iterations = it + 1;

        let pose = Pose::from_rodrigues(&omega, t);
        let cost = weighted_cost(corrs, &pose, use_cov);
        if cost <= best.cost + COST_TIE * best.cost && cost <= initial_cost {
            best.pose = pose;
            best.cost = cost;
        }
        if step.norm() < opts.gn_tolerance {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{noise_free_scene, noisy_scene};

    #[test]
    fn ground_truth_is_stationary() {
        let (gt, corrs) = noise_free_scene(10, false, 31);
        let refined = refine_gauss_newton(&corrs, &gt, &SolverOptions::default()).unwrap();
        assert!((refined.pose.rotation - gt.rotation).amax() < 1e-12);
        assert!((refined.pose.translation - gt.translation).amax() < 1e-12);
    }

    #[test]
    fn cost_never_exceeds_initial() {
        let (gt, corrs) = noisy_scene(30, 2.0, 32);
        let init =
            Pose::new(gt.rotation * rodrigues_to_matrix(&Vector3::new(0.02, -0.01, 0.015)), gt.translation * 1.05);
        let refined = refine_gauss_newton(&corrs, &init, &SolverOptions::default()).unwrap();
        assert!(refined.cost <= refined.initial_cost);
        assert!(refined.improved());
        assert!(refined.cost <= weighted_cost(&corrs, &gt, true));
    }

    #[test]
    fn converged_gradient_vanishes() {
        let (gt, corrs) = noisy_scene(40, 1.5, 33);
        let opts = SolverOptions { max_gn_iterations: 50, gn_tolerance: 1e-15, ..SolverOptions::default() };
        let refined = refine_gauss_newton(&corrs, &gt, &opts).unwrap();
        let omega = matrix_to_rodrigues(&refined.pose.rotation);
        let (_, gradient, cost) = normal_equations(&corrs, &omega, &refined.pose.translation, true);
        assert!(gradient.norm() < 1e-8 * (1.0 + cost), "{} vs {}", gradient.norm(), cost);
    }

    #[test]
    fn degenerate_geometry_is_singular() {
        let (gt, corrs) = noise_free_scene(6, false, 34);
        let single = vec![corrs[0]; 6];
        assert_eq!(refine_gauss_newton(&single, &gt, &SolverOptions::default()), Err(Error::SingularNormalMatrix));
    }

    #[test]
    fn zero_iterations_returns_init() {
        let (gt, corrs) = noisy_scene(10, 1.0, 35);
        let opts = SolverOptions { max_gn_iterations: 0, ..SolverOptions::default() };
        let refined = refine_gauss_newton(&corrs, &gt, &opts).unwrap();
        assert_eq!(refined.pose, gt);
        assert_eq!(refined.iterations, 0);
    }
}
