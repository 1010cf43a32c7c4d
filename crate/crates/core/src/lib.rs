//! Maximum-likelihood Perspective-n-Point.
//!
//! Estimates the pose of a calibrated central camera from world points and
//! their uncertain image observations. Pixel covariances are propagated to
//! bearing vectors and reduced to the tangent space of each bearing, which
//! gives a nonsingular stochastic model for a weighted homogeneous linear
//! estimate and a Gauss-Newton refinement. The result carries the pose
//! covariance, variance factor and internal standard deviations.
//!
//! ```
//! use mlpnp::experiment::{generate_scene, NoiseModel, SceneConfig};
//! use mlpnp::{solve, SolverOptions};
//!
//! let cfg = SceneConfig { n_points: 20, noise: NoiseModel::Uniform(1.0), ..Default::default() };
//! let scene = generate_scene(&cfg, 0).unwrap();
//! let sol = solve(&scene.correspondences, &SolverOptions::default()).unwrap();
//! assert!(sol.sigma0_sq > 0.0);
//! ```

pub mod camera;
mod error;
pub mod experiment;
pub mod rotation;
pub mod solver;
pub mod tangent;
pub mod uncertainty;

#[cfg(test)]
mod testing;

pub use camera::{BearingObservation, CameraModel, ImageObservation, NormalizedPoint, PinholeCamera};
pub use error::{Error, Result};
pub use solver::{solve, Correspondence, Mlpnp, Pose, PoseSolver, SolverOptions};
pub use tangent::NullspaceBasis;
pub use uncertainty::{Diagnostics, PoseSolution};
