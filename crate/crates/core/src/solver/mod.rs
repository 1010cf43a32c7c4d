//! Maximum-likelihood PnP: weighted homogeneous linear estimate in the
//! tangent spaces of the bearing vectors, followed by Gauss-Newton
//! refinement over Rodrigues rotation and translation.

mod linear;
mod planar;
mod refine;

pub use linear::{build_system, linear_estimate, solve_linear, LinearEstimate, LinearSystem};
pub use planar::{detect_planarity, PlanarFrame, Planarity};
pub use refine::{
    normal_equations, refine_gauss_newton, residual, residual_jacobian, weighted_cost, Refinement, COST_TIE,
};

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::camera::BearingObservation;
use crate::rotation;
use crate::uncertainty::{self, Diagnostics, PoseSolution};
use crate::{Error, Result};

/// Smallest number of correspondences accepted by [`solve`].
pub const MIN_POINTS: usize = 6;

/// World-to-camera rigid transform: `λ v = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_rodrigues(omega: &Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(rotation::rodrigues_to_matrix(omega), translation)
    }

    pub fn rodrigues(&self) -> Vector3<f64> {
        rotation::matrix_to_rodrigues(&self.rotation)
    }

    /// World point to camera frame.
    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self::new(self.rotation * other.rotation, self.rotation * other.translation + self.translation)
    }
}

/// A world point and the bearing under which it was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub point: Vector3<f64>,
    pub obs: BearingObservation,
}

impl Correspondence {
    pub fn new(point: Vector3<f64>, obs: BearingObservation) -> Self {
        Self { point, obs }
    }

    /// Block of the stochastic model for this point.
    pub fn weight(&self, use_covariance: bool) -> Matrix2<f64> {
        if use_covariance {
            self.obs.information()
        } else {
            Matrix2::identity()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_gn_iterations: usize,
    /// Refinement stops once the parameter step norm drops below this.
    pub gn_tolerance: f64,
    /// Smallest-to-largest eigenvalue ratio of the point scatter below which
    /// the configuration is treated as planar.
    pub planar_eigen_threshold: f64,
    /// Weight with the inverse reduced covariances; identity otherwise.
    pub use_covariance: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_gn_iterations: 5, gn_tolerance: 1e-10, planar_eigen_threshold: 1e-10, use_covariance: true }
    }
}

impl SolverOptions {
    pub fn unweighted() -> Self {
        Self { use_covariance: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gn_tolerance > 0.0) || !(self.planar_eigen_threshold > 0.0) {
            return Err(Error::InvalidInput("solver thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Full pipeline: planarity test, linear estimate, Gauss-Newton refinement
/// and pose uncertainty.
pub fn solve(corrs: &[Correspondence], opts: &SolverOptions) -> Result<PoseSolution> {
    opts.validate()?;
    if corrs.len() < MIN_POINTS {
        return Err(Error::TooFewPoints { required: MIN_POINTS, got: corrs.len() });
    }
    let points: Vec<_> = corrs.iter().map(|c| c.point).collect();
    let planarity = detect_planarity(&points, opts.planar_eigen_threshold)?;
    let system = build_system(corrs, &planarity, opts.use_covariance);
    let linear = linear_estimate(&system)?;
    let refined = refine_gauss_newton(corrs, &linear.pose, opts)?;

    let covariance = uncertainty::pose_covariance(corrs, &refined.pose, opts.use_covariance)?;
    let residuals = uncertainty::stacked_residuals(corrs, &refined.pose);
    let weights: Vec<_> = corrs.iter().map(|c| c.weight(opts.use_covariance)).collect();
    let sigma0_sq = uncertainty::variance_factor(&residuals, &weights)?;
    let sigmas = uncertainty::internal_sigmas(&covariance, sigma0_sq);

    Ok(PoseSolution {
        pose: refined.pose,
        covariance,
        sigma0_sq,
        sigmas,
        diagnostics: Diagnostics {
            planar: planarity.is_planar(),
            gn_iterations: refined.iterations,
            weighted_cost: refined.cost,
            linear_cost: refined.initial_cost,
            redundancy: 2 * corrs.len() - 6,
            condition: linear.condition,
        },
    })
}

/// Anything that turns correspondences into a pose solution.
pub trait PoseSolver {
    fn name(&self) -> &str;
    fn solve(&self, corrs: &[Correspondence]) -> Result<PoseSolution>;
}

/// The full estimator with a fixed option set.
#[derive(Debug, Clone)]
pub struct Mlpnp {
    pub name: String,
    pub options: SolverOptions,
}

impl Mlpnp {
    /// Covariance-weighted estimator.
    pub fn weighted() -> Self {
        Self { name: "mlpnp".into(), options: SolverOptions::default() }
    }

    /// Same pipeline with identity weights.
    pub fn unweighted() -> Self {
        Self { name: "mlpnp-identity".into(), options: SolverOptions::unweighted() }
    }
}

impl PoseSolver for Mlpnp {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, corrs: &[Correspondence]) -> Result<PoseSolution> {
        solve(corrs, &self.options)
    }
}
