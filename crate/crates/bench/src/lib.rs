//! Fixtures shared by the criterion benchmarks.

use mlpnp::experiment::{generate_scene, NoiseModel, SceneConfig};
use mlpnp::{Correspondence, Pose};

/// Point counts swept by the scaling benchmarks.
pub const SIZES: [usize; 5] = [10, 50, 100, 200, 1000];

pub struct Fixture {
    pub ground_truth: Pose,
    pub correspondences: Vec<Correspondence>,
}

/// Seeded synthetic scene with one pixel of isotropic noise.
pub fn fixture(n_points: usize, planar: bool) -> Fixture {
    let cfg = SceneConfig { n_points, planar, noise: NoiseModel::Uniform(1.0), seed: 42, ..Default::default() };
    let scene = generate_scene(&cfg, 0).expect("benchmark scene");
    Fixture { ground_truth: scene.ground_truth, correspondences: scene.correspondences }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_solvable() {
        for n in SIZES {
            for planar in [false, true] {
                let f = fixture(n, planar);
                assert_eq!(f.correspondences.len(), n);
                assert!(mlpnp::solve(&f.correspondences, &Default::default()).is_ok());
            }
        }
    }
}
