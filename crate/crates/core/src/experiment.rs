//! Synthetic experiment protocol: random scenes in front of a virtual
//! pinhole camera, pixel noise regimes, pose error metrics and seeded,
//! reproducible trial aggregation.

use std::time::Instant;

use nalgebra::{Matrix2, Matrix3, UnitQuaternion, Vector2, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::camera::{observe, CameraModel, ImageObservation, PinholeCamera};
use crate::rotation::{matrix_to_rodrigues, rodrigues_to_matrix};
use crate::solver::{Correspondence, Pose, PoseSolver};
use crate::uncertainty::{observation_cofactor_feedback, observation_with_prior, PoseSolution};
use crate::{solver, Error, Result, SolverOptions};

/// Pixel noise applied to the synthetic features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Every feature gets the same standard deviation.
    Uniform(f64),
    /// Ten equally sized groups at `k · σ_max / 10` for `k = 1..=10`.
    MixedDeciles(f64),
    /// Each feature draws its own `σ ~ U(0, σ_max)`.
    PerPointUniform(f64),
}

impl NoiseModel {
    /// The configured σ or σ_max.
    pub fn parameter(&self) -> f64 {
        match *self {
            NoiseModel::Uniform(s) | NoiseModel::MixedDeciles(s) | NoiseModel::PerPointUniform(s) => s,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Uniform(_) => "uniform",
            NoiseModel::MixedDeciles(_) => "mixed_deciles",
            NoiseModel::PerPointUniform(_) => "per_point_uniform",
        }
    }

    pub fn with_parameter(&self, sigma: f64) -> Self {
        match self {
            NoiseModel::Uniform(_) => NoiseModel::Uniform(sigma),
            NoiseModel::MixedDeciles(_) => NoiseModel::MixedDeciles(sigma),
            NoiseModel::PerPointUniform(_) => NoiseModel::PerPointUniform(sigma),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            NoiseModel::Uniform(s) => vec![s; n],
            NoiseModel::MixedDeciles(s) => (0..n).map(|i| s * ((i % 10) + 1) as f64 / 10.0).collect(),
            NoiseModel::PerPointUniform(s) => (0..n).map(|_| s * rng.random::<f64>()).collect(),
        }
    }
}

/// Pixel covariance handed to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatedCovariance {
    /// The covariance the noise was drawn from.
    Generating,
    /// Unit pixel covariance regardless of the actual noise.
    Identity,
}

/// Axis-aligned camera-frame region the points are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self { min: Vector3::new(-2.0, -2.0, 4.0), max: Vector3::new(2.0, 2.0, 8.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub n_points: usize,
    pub noise: NoiseModel,
    /// Put every world point on the plane `z = 0`.
    pub planar: bool,
    pub focal: f64,
    pub bounds: SamplingBox,
    pub seed: u64,
    pub stated: StatedCovariance,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_points: 50,
            noise: NoiseModel::Uniform(1.0),
            planar: false,
            focal: 800.0,
            bounds: SamplingBox::default(),
            seed: 0,
            stated: StatedCovariance::Generating,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < solver::MIN_POINTS {
            return Err(Error::InvalidInput(format!("n_points must be at least 6, got {}", self.n_points)));
        }
        let sigma = self.noise.parameter();
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("noise sigma must be non-negative, got {sigma}")));
        }
        if !(self.focal > 0.0) {
            return Err(Error::InvalidInput("focal length must be positive".into()));
        }
        let b = &self.bounds;
        if (0..3).any(|k| !(b.min[k] <= b.max[k])) || !(b.min.z > 0.0) {
            return Err(Error::InvalidInput("sampling box must be ordered and in front of the camera".into()));
        }
        Ok(())
    }

    pub fn camera(&self) -> PinholeCamera {
        PinholeCamera { focal: self.focal, principal_point: Vector2::zeros() }
    }
}

/// Noise-free part of a scene: pose, world points and per-feature noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub ground_truth: Pose,
    pub world_points: Vec<Vector3<f64>>,
    pub noise_sigmas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub ground_truth: Pose,
    pub world_points: Vec<Vector3<f64>>,
    /// Noisy pixels with the covariance handed to the solver.
    pub observations: Vec<ImageObservation>,
    pub correspondences: Vec<Correspondence>,
    pub noise_sigmas: Vec<f64>,
}

/// Independent, reproducible random stream for one trial.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Uniformly distributed rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        if quat.norm() > 1e-9 {
            return *UnitQuaternion::from_quaternion(quat).to_rotation_matrix().matrix();
        }
    }
}

fn sample_in_box<R: Rng + ?Sized>(b: &SamplingBox, rng: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|k, _| if b.max[k] > b.min[k] { rng.random_range(b.min[k]..b.max[k]) } else { b.min[k] })
}

pub fn generate_geometry<R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> Result<Geometry> {
    cfg.validate()?;
    let n = cfg.n_points;
    let cam_points: Vec<_> = (0..n).map(|_| sample_in_box(&cfg.bounds, rng)).collect();
    let translation = cam_points.iter().sum::<Vector3<f64>>() / n as f64;
    let rotation = random_rotation(rng);
    let ground_truth = Pose::new(rotation, translation);
    let to_world = ground_truth.inverse();

    let mut world_points: Vec<_> = cam_points.iter().map(|p| to_world.transform(p)).collect();
    if cfg.planar {
        for p in &mut world_points {
            p.z = 0.0;
            // keep the point strictly in front of the camera
            while ground_truth.transform(p).z < 0.1 * cfg.bounds.min.z {
                let q = to_world.transform(&sample_in_box(&cfg.bounds, rng));
                *p = Vector3::new(q.x, q.y, 0.0);
            }
        }
    }
    let noise_sigmas = cfg.noise.draw(n, rng);
    Ok(Geometry { ground_truth, world_points, noise_sigmas })
}

/// Pixel observations of `geometry` from `pose` with fresh noise.
pub fn observe_geometry<R: Rng + ?Sized>(
    cfg: &SceneConfig,
    pose: &Pose,
    world_points: &[Vector3<f64>],
    noise_sigmas: &[f64],
    rng: &mut R,
) -> Result<(Vec<ImageObservation>, Vec<Correspondence>)> {
    let cam = cfg.camera();
    let mut observations = Vec::with_capacity(world_points.len());
    let mut correspondences = Vec::with_capacity(world_points.len());
    for (p, &sigma) in world_points.iter().zip(noise_sigmas) {
        let clean = cam.project(&pose.transform(p))?;
        let noise = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * sigma;
        let pixel = clean + noise;
        let stated = match cfg.stated {
            StatedCovariance::Generating => Matrix2::identity() * (sigma * sigma),
            StatedCovariance::Identity => Matrix2::identity(),
        };
        let mut obs = ImageObservation::new(pixel, stated);
        let bearing = match observe(&cam, &obs) {
            Ok(b) => b,
            // zero or vanishing stated noise: fall back to unit pixel covariance
            Err(Error::DegenerateCovariance { .. }) => {
                obs.covariance = Matrix2::identity();
                observe(&cam, &obs)?
            }
            Err(e) => return Err(e),
        };
        observations.push(obs);
        correspondences.push(Correspondence::new(*p, bearing));
    }
    Ok((observations, correspondences))
}

/// Scene for one trial; a pure function of `(cfg.seed, trial_index)`.
pub fn generate_scene(cfg: &SceneConfig, trial_index: u64) -> Result<Scene> {
    let mut rng = trial_rng(cfg.seed, trial_index);
    let geometry = generate_geometry(cfg, &mut rng)?;
    let (observations, correspondences) =
        observe_geometry(cfg, &geometry.ground_truth, &geometry.world_points, &geometry.noise_sigmas, &mut rng)?;
    Ok(Scene {
        ground_truth: geometry.ground_truth,
        world_points: geometry.world_points,
        observations,
        correspondences,
        noise_sigmas: geometry.noise_sigmas,
    })
}

/// Largest angle between corresponding columns, in degrees.
///
/// The angle `arccos(aᵀb)` is evaluated as `atan2(‖a × b‖, aᵀb)`, which
/// keeps full precision for nearly parallel columns where `acos` bottoms
/// out around 1e-6 degrees.
pub fn rotation_error_deg(r_gt: &Matrix3<f64>, r: &Matrix3<f64>) -> f64 {
    (0..3)
        .map(|k| {
            let (a, b) = (r_gt.column(k), r.column(k));
            a.cross(&b).norm().atan2(a.dot(&b)).to_degrees()
        })
        .fold(0.0, f64::max)
}

/// `‖t_gt - t‖ / ‖t‖ · 100`; the denominator is the estimate.
pub fn translation_error_pct(t_gt: &Vector3<f64>, t: &Vector3<f64>) -> Result<f64> {
    let norm = t.norm();
    if norm == 0.0 {
        return Err(Error::ZeroEstimate);
    }
    Ok((t_gt - t).norm() / norm * 100.0)
}

/// Rodrigues vector of `rotation` on the branch closest to `reference`.
pub fn rodrigues_near(rotation: &Matrix3<f64>, reference: &Vector3<f64>) -> Vector3<f64> {
    let omega = matrix_to_rodrigues(rotation);
    let theta = omega.norm();
    if theta == 0.0 {
        return omega;
    }
    let alt = omega - omega / theta * (2.0 * std::f64::consts::PI);
    if (alt - reference).norm() < (omega - reference).norm() {
        alt
    } else {
        omega
    }
}

/// Estimated minus true parameters `(ω, t)`.
pub fn parameter_error(gt: &Pose, est: &Pose) -> Vector6<f64> {
    let omega_gt = gt.rodrigues();
    let d = rodrigues_near(&est.rotation, &omega_gt) - omega_gt;
    let dt = est.translation - gt.translation;
    Vector6::new(d.x, d.y, d.z, dt.x, dt.y, dt.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub rot_err_deg: f64,
    pub trans_err_pct: f64,
    /// Wall-clock seconds of the solve call.
    pub runtime: f64,
    pub sigma0_sq: f64,
    pub internal_sigmas: Vector6<f64>,
    /// Estimated minus true `(ω, t)`.
    pub parameter_error: Vector6<f64>,
    pub planar: bool,
    pub gn_iterations: usize,
}

impl TrialResult {
    fn from_solution(gt: &Pose, sol: &PoseSolution, runtime: f64) -> Result<Self> {
        Ok(Self {
            rot_err_deg: rotation_error_deg(&gt.rotation, &sol.pose.rotation),
            trans_err_pct: translation_error_pct(&gt.translation, &sol.pose.translation)?,
            runtime,
            sigma0_sq: sol.sigma0_sq,
            internal_sigmas: sol.sigmas,
            parameter_error: parameter_error(gt, &sol.pose),
            planar: sol.diagnostics.planar,
            gn_iterations: sol.diagnostics.gn_iterations,
        })
    }
}

/// Solves one scene and scores the result.
pub fn run_trial(solver: &dyn PoseSolver, scene: &Scene) -> Result<TrialResult> {
    let start = Instant::now();
    let sol = solver.solve(&scene.correspondences)?;
    let runtime = start.elapsed().as_secs_f64();
    TrialResult::from_solution(&scene.ground_truth, &sol, runtime)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub solver: String,
    pub trial: u64,
    pub outcome: std::result::Result<TrialResult, Error>,
}

/// Per-solver aggregate over the trials every solver completed.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: String,
    /// Trials included in the means.
    pub trials: usize,
    /// Trials this solver failed on.
    pub failures: usize,
    pub mean_rot_err_deg: f64,
    pub mean_trans_err_pct: f64,
    pub mean_sigma0_sq: f64,
    /// Median of block means of the solve time, seconds.
    pub runtime: f64,
    /// Root mean square of the internal sigmas.
    pub internal_sigmas: Vector6<f64>,
    /// Root mean square of the parameter errors.
    pub external_sigmas: Vector6<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: SceneConfig,
    pub trials: usize,
    /// Trial-major: all solvers for trial 0, then trial 1, ...
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SolverSummary>,
}

impl ExperimentReport {
    pub fn summary(&self, solver: &str) -> Option<&SolverSummary> {
        self.summaries.iter().find(|s| s.solver == solver)
    }

    /// Trials every solver completed, in trial order.
    pub fn common_trials(&self) -> Vec<u64> {
        let mut trials: Vec<u64> = self.records.iter().map(|r| r.trial).collect();
        trials.dedup();
        trials
            .into_iter()
            .filter(|t| self.records.iter().filter(|r| r.trial == *t).all(|r| r.outcome.is_ok()))
            .collect()
    }

    /// Successful results of `solver` on the common trials.
    pub fn paired_results(&self, solver: &str) -> Vec<TrialResult> {
        let common = self.common_trials();
        self.records
            .iter()
            .filter(|r| r.solver == solver && common.binary_search(&r.trial).is_ok())
            .filter_map(|r| r.outcome.as_ref().ok().copied())
            .collect()
    }
}

/// Runs `trials` scenes through every solver. Each solver sees the same
/// scene per trial; failures are recorded per trial and excluded pairwise.
pub fn run_experiment(cfg: &SceneConfig, trials: usize, solvers: &[&dyn PoseSolver]) -> Result<ExperimentReport> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let mut records = Vec::with_capacity(trials * solvers.len());
    for trial in 0..trials as u64 {
        let scene = generate_scene(cfg, trial)?;
        for solver in solvers {
            records.push(TrialRecord { solver: solver.name().to_string(), trial, outcome: run_trial(*solver, &scene) });
        }
    }
    let mut report = ExperimentReport { config: cfg.clone(), trials, records, summaries: Vec::new() };
    report.summaries = solvers
        .iter()
        .map(|s| {
            let name = s.name();
            let failures = report.records.iter().filter(|r| r.solver == name && r.outcome.is_err()).count();
            summarize(name, &report.paired_results(name), failures)
        })
        .collect();
    Ok(report)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Median over blocks of the per-block mean.
pub fn median_of_means(samples: &[f64], blocks: usize) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let blocks = blocks.clamp(1, samples.len());
    let size = samples.len().div_ceil(blocks);
    let mut means: Vec<f64> = samples.chunks(size).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    }
}

fn summarize(solver: &str, results: &[TrialResult], failures: usize) -> SolverSummary {
    let rms = |f: &dyn Fn(&TrialResult) -> Vector6<f64>| {
        if results.is_empty() {
            return Vector6::repeat(f64::NAN);
        }
        let sum = results.iter().fold(Vector6::zeros(), |acc, r| {
            let v = f(r);
            acc + v.component_mul(&v)
        });
        (sum / results.len() as f64).map(f64::sqrt)
    };
    let runtimes: Vec<f64> = results.iter().map(|r| r.runtime).collect();
    SolverSummary {
        solver: solver.to_string(),
        trials: results.len(),
        failures,
        mean_rot_err_deg: mean(results.iter().map(|r| r.rot_err_deg)),
        mean_trans_err_pct: mean(results.iter().map(|r| r.trans_err_pct)),
        mean_sigma0_sq: mean(results.iter().map(|r| r.sigma0_sq)),
        runtime: median_of_means(&runtimes, 10),
        internal_sigmas: rms(&|r| r.internal_sigmas),
        external_sigmas: rms(&|r| r.parameter_error),
    }
}

/// One-sided paired t-test of `H1: mean(a - b) < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub n: usize,
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

pub fn paired_less(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput("paired test needs two equally long samples of size >= 2".into()));
    }
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let t = if se > 0.0 {
        m / se
    } else if m < 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(PairedTest { n, mean_difference: m, t_statistic: t, p_value: dist.cdf(t) })
}

/// Internal against external accuracy over repeated noise draws on one
/// fixed geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consistency {
    pub trials: usize,
    /// Mean internal sigmas `σ₀ sqrt(diag Σ)` over the trials.
    pub internal_mean: Vector6<f64>,
    /// Root mean square of the parameter errors against ground truth.
    pub external: Vector6<f64>,
    pub mean_sigma0_sq: f64,
}

impl Consistency {
    /// `internal / external` per component.
    pub fn ratios(&self) -> Vector6<f64> {
        self.internal_mean.component_div(&self.external)
    }
}

/// Draws the geometry of trial 0 once and re-observes it `trials` times with
/// fresh pixel noise.
pub fn run_consistency(cfg: &SceneConfig, trials: usize, options: &SolverOptions) -> Result<Consistency> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let mut rng = trial_rng(cfg.seed, 0);
    let geometry = generate_geometry(cfg, &mut rng)?;
    let gt = geometry.ground_truth;
    let mut internal = Vector6::zeros();
    let mut squared = Vector6::zeros();
    let mut sigma0_sq = 0.0;
    for trial in 1..=trials as u64 {
        let mut rng = trial_rng(cfg.seed, trial);
        let (_, corrs) = observe_geometry(cfg, &gt, &geometry.world_points, &geometry.noise_sigmas, &mut rng)?;
        let sol = solver::solve(&corrs, options)?;
        let err = parameter_error(&gt, &sol.pose);
        internal += sol.sigmas;
        squared += err.component_mul(&err);
        sigma0_sq += sol.sigma0_sq;
    }
    let n = trials as f64;
    Ok(Consistency {
        trials,
        internal_mean: internal / n,
        external: (squared / n).map(f64::sqrt),
        mean_sigma0_sq: sigma0_sq / n,
    })
}

/// Multi-frame covariance feedback experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    pub scene: SceneConfig,
    pub frames: usize,
    pub trials: usize,
    /// Rotation between consecutive frames, degrees.
    pub motion_deg: f64,
    /// Camera displacement between consecutive frames, world units.
    pub motion_translation: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig { stated: StatedCovariance::Identity, ..SceneConfig::default() },
            frames: 2,
            trials: 250,
            motion_deg: 5.0,
            motion_translation: 0.2,
        }
    }
}

/// Mean errors of frame `frame` (0-based) with and without feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSummary {
    pub frame: usize,
    pub trials: usize,
    pub plain_rot_err_deg: f64,
    pub plain_trans_err_pct: f64,
    pub feedback_rot_err_deg: f64,
    pub feedback_trans_err_pct: f64,
}

/// `((rot°, trans%) plain, (rot°, trans%) feedback)` for one frame of one trial.
pub type FramePair = ((f64, f64), (f64, f64));

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub frames: Vec<FrameSummary>,
    /// `[trial][frame]` errors.
    pub paired: Vec<Vec<FramePair>>,
}

fn next_pose<R: Rng + ?Sized>(cfg: &SequenceConfig, prev: &Pose, world: &[Vector3<f64>], rng: &mut R) -> Pose {
    loop {
        let axis = Vector3::<f64>::from_fn(|_, _| rng.sample(StandardNormal)).normalize();
        let dir = Vector3::<f64>::from_fn(|_, _| rng.sample(StandardNormal)).normalize();
        let delta = Pose::new(rodrigues_to_matrix(&(axis * cfg.motion_deg.to_radians())), dir * cfg.motion_translation);
        let pose = delta.compose(prev);
        if world.iter().all(|p| pose.transform(p).z > 0.1 * cfg.scene.bounds.min.z) {
            return pose;
        }
    }
}

/// Runs the sequential protocol: the first frame uses the stated pixel
/// covariance; the feedback variant seeds every later frame with the
/// observation cofactors of its own previous solution, the plain variant
/// keeps the stated covariance. Both variants see identical observations.
pub fn run_sequence(cfg: &SequenceConfig, options: &SolverOptions) -> Result<SequenceReport> {
    cfg.scene.validate()?;
    if cfg.frames == 0 || cfg.trials == 0 {
        return Err(Error::InvalidInput("sequence needs at least one frame and one trial".into()));
    }
    let mut paired = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials as u64 {
        let mut rng = trial_rng(cfg.scene.seed, trial);
        let geometry = generate_geometry(&cfg.scene, &mut rng)?;
        let mut pose = geometry.ground_truth;
        let mut prior: Option<Vec<Matrix3<f64>>> = None;
        let mut rows = Vec::with_capacity(cfg.frames);
        for frame in 0..cfg.frames {
            if frame > 0 {
                pose = next_pose(cfg, &pose, &geometry.world_points, &mut rng);
            }
            let (_, plain_corrs) =
                observe_geometry(&cfg.scene, &pose, &geometry.world_points, &geometry.noise_sigmas, &mut rng)?;
            let plain = solver::solve(&plain_corrs, options)?;

            let feedback_corrs: Vec<Correspondence> = match &prior {
                None => plain_corrs.clone(),
                Some(covs) => plain_corrs
                    .iter()
                    .zip(covs)
                    .map(|(c, cov)| Ok(Correspondence::new(c.point, observation_with_prior(&c.obs.v, cov)?)))
                    .collect::<Result<Vec<_>>>()?,
            };
            let feedback = match prior {
                None => plain,
                Some(_) => solver::solve(&feedback_corrs, options)?,
            };
            prior = Some(observation_cofactor_feedback(&feedback_corrs, &feedback.pose, &feedback.covariance));

            let score = |sol: &PoseSolution| -> Result<(f64, f64)> {
                Ok((
                    rotation_error_deg(&pose.rotation, &sol.pose.rotation),
                    translation_error_pct(&pose.translation, &sol.pose.translation)?,
                ))
            };
            rows.push((score(&plain)?, score(&feedback)?));
        }
        paired.push(rows);
    }

    let frames = (0..cfg.frames)
        .map(|f| FrameSummary {
            frame: f,
            trials: paired.len(),
            plain_rot_err_deg: mean(paired.iter().map(|t| t[f].0 .0)),
            plain_trans_err_pct: mean(paired.iter().map(|t| t[f].0 .1)),
            feedback_rot_err_deg: mean(paired.iter().map(|t| t[f].1 .0)),
            feedback_trans_err_pct: mean(paired.iter().map(|t| t[f].1 .1)),
        })
        .collect();
    Ok(SequenceReport { frames, paired })
}
