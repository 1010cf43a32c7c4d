//! Observation model: pixels to normalized image points to bearing vectors,
//! with first-order covariance propagation at each stage.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::solver::Pose;
use crate::tangent::{self, NullspaceBasis};
use crate::{Error, Result};

/// Reduced covariances whose smallest eigenvalue falls below this are rejected.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-14;

/// A pixel measurement and its 2x2 covariance (pixels²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageObservation {
    pub pixel: Vector2<f64>,
    pub covariance: Matrix2<f64>,
}

impl ImageObservation {
    pub fn new(pixel: Vector2<f64>, covariance: Matrix2<f64>) -> Self {
        Self { pixel, covariance }
    }

    pub fn isotropic(pixel: Vector2<f64>, sigma: f64) -> Self {
        Self::new(pixel, Matrix2::identity() * (sigma * sigma))
    }
}

/// Homogeneous point on the normalized image plane (third component 1)
/// with its rank-2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint {
    pub x: Vector3<f64>,
    pub covariance: Matrix3<f64>,
}

/// A central camera model: maps pixels onto the normalized image plane and
/// camera-frame points back into pixels.
///
/// The solver only consumes [`BearingObservation`]s, so any central model
/// that provides these three maps can feed it.
pub trait CameraModel {
    /// Normalized homogeneous point for a pixel.
    fn unproject(&self, pixel: &Vector2<f64>) -> Vector3<f64>;

    /// Jacobian of [`CameraModel::unproject`] with respect to the pixel.
    fn unproject_jacobian(&self, pixel: &Vector2<f64>) -> Matrix3x2<f64>;

    /// Pixel of a camera-frame point.
    fn project(&self, point: &Vector3<f64>) -> Result<Vector2<f64>>;

    fn project_forward(&self, obs: &ImageObservation) -> NormalizedPoint {
        let jac = self.unproject_jacobian(&obs.pixel);
        NormalizedPoint { x: self.unproject(&obs.pixel), covariance: jac * obs.covariance * jac.transpose() }
    }
}

/// Ideal pinhole camera with a single focal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    pub focal: f64,
    pub principal_point: Vector2<f64>,
}

impl PinholeCamera {
    pub fn new(focal: f64, principal_point: Vector2<f64>) -> Result<Self> {
        if !(focal > 0.0 && focal.is_finite()) {
            return Err(Error::InvalidInput(format!("focal length must be positive, got {focal}")));
        }
        Ok(Self { focal, principal_point })
    }
}

impl Default for PinholeCamera {
    fn default() -> Self {
        Self { focal: 800.0, principal_point: Vector2::zeros() }
    }
}

impl CameraModel for PinholeCamera {
    fn unproject(&self, pixel: &Vector2<f64>) -> Vector3<f64> {
        let xy = (pixel - self.principal_point) / self.focal;
        Vector3::new(xy.x, xy.y, 1.0)
    }

    fn unproject_jacobian(&self, _pixel: &Vector2<f64>) -> Matrix3x2<f64> {
        let k = 1.0 / self.focal;
        Matrix3x2::new(k, 0.0, 0.0, k, 0.0, 0.0)
    }

    fn project(&self, point: &Vector3<f64>) -> Result<Vector2<f64>> {
        if point.z <= 0.0 {
            return Err(Error::BehindCamera { depth: point.z });
        }
        Ok(Vector2::new(point.x / point.z, point.y / point.z) * self.focal + self.principal_point)
    }
}

/// Unit bearing vector with its singular 3x3 covariance, tangent basis and
/// reduced (nonsingular) 2x2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingObservation {
    pub v: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub basis: NullspaceBasis,
    pub reduced_covariance: Matrix2<f64>,
}

impl BearingObservation {
    /// Builds an observation from a unit vector and its 3x3 covariance using
    /// the canonical tangent basis.
    pub fn from_covariance(v: Vector3<f64>, covariance: Matrix3<f64>) -> Result<Self> {
        Self::with_basis(v, covariance, tangent::nullspace(&v))
    }

    /// Same as [`BearingObservation::from_covariance`] with a caller-chosen
    /// tangent basis.
    pub fn with_basis(v: Vector3<f64>, covariance: Matrix3<f64>, basis: NullspaceBasis) -> Result<Self> {
        let reduced_covariance = tangent::reduce_covariance(&basis, &covariance);
        let min_eigenvalue = reduced_covariance.symmetric_eigenvalues().min();
        if !(min_eigenvalue >= DEGENERATE_EIGENVALUE) {
            return Err(Error::DegenerateCovariance { min_eigenvalue });
        }
        Ok(Self { v, covariance, basis, reduced_covariance })
    }

    /// Inverse reduced covariance, the per-point block of the stochastic model.
    pub fn information(&self) -> Matrix2<f64> {
        // positive definite by construction
        self.reduced_covariance.try_inverse().unwrap_or_else(Matrix2::zeros)
    }

    /// Copy with every covariance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { covariance: self.covariance * factor, reduced_covariance: self.reduced_covariance * factor, ..*self }
    }
}

/// Spherical normalization with covariance propagation through
/// `J = (I - v vᵀ) / ‖x‖`.
pub fn to_bearing(np: &NormalizedPoint) -> Result<BearingObservation> {
    let norm = np.x.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
    }
    let v = np.x / norm;
    let jac = (Matrix3::identity() - v * v.transpose()) / norm;
    let covariance = jac * np.covariance * jac.transpose();
    BearingObservation::from_covariance(v, covariance)
}

/// Full pipeline from a pixel measurement to a bearing observation.
pub fn observe<C: CameraModel + ?Sized>(cam: &C, obs: &ImageObservation) -> Result<BearingObservation> {
    to_bearing(&cam.project_forward(obs))
}

/// Projects a world point through `pose` and perturbs the pixel with
/// isotropic Gaussian noise of standard deviation `noise_sigma`.
pub fn synthesize_observation<C, R>(
    cam: &C,
    p_world: &Vector3<f64>,
    pose: &Pose,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<ImageObservation>
where
    C: CameraModel + ?Sized,
    R: Rng + ?Sized,
{
    let p_cam = pose.transform(p_world);
    let mut pixel = cam.project(&p_cam)?;
    if noise_sigma > 0.0 {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        pixel += Vector2::new(dx, dy) * noise_sigma;
    }
    Ok(ImageObservation::isotropic(pixel, noise_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam() -> PinholeCamera {
        PinholeCamera::default()
    }

    #[test]
    fn principal_point_projection() {
        let np = cam().project_forward(&ImageObservation::new(Vector2::zeros(), Matrix2::identity()));
        assert_eq!(np.x, Vector3::new(0.0, 0.0, 1.0));
        let s = 1.0 / (800.0 * 800.0);
        assert_relative_eq!(np.covariance, Matrix3::from_diagonal(&Vector3::new(s, s, 0.0)), epsilon = 1e-20);
    }

    #[test]
    fn zero_covariance_propagates_to_zero() {
        let np = cam().project_forward(&ImageObservation::new(Vector2::new(800.0, 0.0), Matrix2::zeros()));
        assert_eq!(np.x, Vector3::new(1.0, 0.0, 1.0));
        assert_eq!(np.covariance, Matrix3::zeros());
    }

    #[test]
    fn anisotropic_covariance() {
        let obs = ImageObservation::new(Vector2::new(400.0, -800.0), Matrix2::new(4.0, 0.0, 0.0, 1.0));
        let np = cam().project_forward(&obs);
        assert_relative_eq!(np.x, Vector3::new(0.5, -1.0, 1.0));
        let f2 = 800.0 * 800.0;
        let expected = Matrix3::from_diagonal(&Vector3::new(4.0 / f2, 1.0 / f2, 0.0));
        assert_relative_eq!(np.covariance, expected, epsilon = 1e-20);
        assert!(np.covariance.row(2).iter().all(|&e| e == 0.0));
    }

    #[test]
    fn unprojection_roundtrip() {
        let c = PinholeCamera::new(650.0, Vector2::new(320.5, 240.25)).unwrap();
        let pixel = Vector2::new(17.125, 455.75);
        let x = c.unproject(&pixel);
        let back = Vector2::new(x.x, x.y) * c.focal + c.principal_point;
        assert_relative_eq!(back, pixel, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_focal() {
        assert!(PinholeCamera::new(0.0, Vector2::zeros()).is_err());
        assert!(PinholeCamera::new(-1.0, Vector2::zeros()).is_err());
    }

    #[test]
    fn bearing_on_axis_keeps_covariance() {
        let s = 2.5e-6;
        let np = NormalizedPoint {
            x: Vector3::new(0.0, 0.0, 1.0),
            covariance: Matrix3::from_diagonal(&Vector3::new(s, s, 0.0)),
        };
        let b = to_bearing(&np).unwrap();
        assert_eq!(b.v, Vector3::z());
        assert_relative_eq!(b.covariance, np.covariance, epsilon = 1e-22);
        assert_relative_eq!(b.covariance * b.v, Vector3::zeros(), epsilon = 1e-22);
    }

    #[test]
    fn bearing_invariants() {
        let np = cam()
            .project_forward(&ImageObservation::new(Vector2::new(-300.0, 120.0), Matrix2::new(2.0, 0.3, 0.3, 1.0)));
        let b = to_bearing(&np).unwrap();
        assert_relative_eq!(b.v.norm(), 1.0, epsilon = 1e-12);
        let eig = b.covariance.symmetric_eigenvalues();
        assert!(eig.min().abs() < 1e-12 * eig.max());
        assert_relative_eq!(b.covariance * b.v, Vector3::zeros(), epsilon = 1e-20);
        let n = b.basis.matrix();
        assert_relative_eq!(n.transpose() * n, Matrix2::identity(), epsilon = 1e-12);
        assert_relative_eq!(n.transpose() * b.v, Vector2::zeros(), epsilon = 1e-12);
        assert!(b.reduced_covariance.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn zero_covariance_is_degenerate() {
        let obs = ImageObservation::new(Vector2::new(10.0, 20.0), Matrix2::zeros());
        assert!(matches!(observe(&cam(), &obs), Err(Error::DegenerateCovariance { .. })));
    }

    #[test]
    fn synthesis_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = PinholeCamera::new(800.0, Vector2::new(12.0, -3.0)).unwrap();
        let obs = synthesize_observation(&c, &Vector3::new(0.0, 0.0, 5.0), &Pose::identity(), 0.0, &mut rng).unwrap();
        assert_eq!(obs.pixel, c.principal_point);

        let obs =
            synthesize_observation(&cam(), &Vector3::new(2.0, 2.0, 4.0), &Pose::identity(), 0.0, &mut rng).unwrap();
        assert_eq!(obs.pixel, Vector2::new(400.0, 400.0));
        assert_eq!(obs.covariance, Matrix2::zeros());
    }

    #[test]
    fn synthesis_behind_camera() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = synthesize_observation(&cam(), &Vector3::new(0.0, 0.0, -1.0), &Pose::identity(), 1.0, &mut rng);
        assert!(matches!(r, Err(Error::BehindCamera { .. })));
    }

    #[test]
    fn synthesis_noise_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = Vector3::new(0.3, -0.2, 5.0);
        let clean = cam().project(&p).unwrap();
        let n = 100_000;
        let mut sum_sq = Vector2::zeros();
        for _ in 0..n {
            let obs = synthesize_observation(&cam(), &p, &Pose::identity(), 2.0, &mut rng).unwrap();
            let d = obs.pixel - clean;
            sum_sq += d.component_mul(&d);
        }
        let std = (sum_sq / n as f64).map(f64::sqrt);
        assert!((std.x - 2.0).abs() < 0.04 && (std.y - 2.0).abs() < 0.04, "{std}");
    }
}
