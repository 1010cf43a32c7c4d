use crate::experiment::{generate_scene, rotation_error_deg, translation_error_pct, NoiseModel, SceneConfig};
use crate::solver::{Correspondence, Pose};

pub fn noise_free_scene(n: usize, planar: bool, seed: u64) -> (Pose, Vec<Correspondence>) {
    noisy(n, planar, 0.0, seed)
}

pub fn noisy_scene(n: usize, sigma: f64, seed: u64) -> (Pose, Vec<Correspondence>) {
    noisy(n, false, sigma, seed)
}

fn noisy(n: usize, planar: bool, sigma: f64, seed: u64) -> (Pose, Vec<Correspondence>) {
    let cfg = SceneConfig { n_points: n, planar, noise: NoiseModel::Uniform(sigma), seed, ..Default::default() };
    let scene = generate_scene(&cfg, 0).unwrap();
    (scene.ground_truth, scene.correspondences)
}

pub fn pose_errors(gt: &Pose, est: &Pose) -> (f64, f64) {
    (rotation_error_deg(&gt.rotation, &est.rotation), translation_error_pct(&gt.translation, &est.translation).unwrap())
}
