//! Flat `key = value` configuration files. Defaults reproduce the synthetic
//! protocol: f = 800 px, box [-2,2]x[-2,2]x[4,8], T = 250, I = 10..200.

use std::collections::BTreeMap;
use std::str::FromStr;

use mlpnp::experiment::{NoiseModel, SamplingBox, SceneConfig, SequenceConfig, StatedCovariance};
use mlpnp::{Mlpnp, SolverOptions};
use nalgebra::Vector3;

use crate::error::{CliError, CliResult};

/// Parsed key/value pairs with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
            };
            let key = k.trim().to_string();
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    fn take<T>(&mut self, key: &str, parse: impl Fn(&str) -> Option<T>) -> CliResult<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => parse(&value)
                .map(Some)
                .ok_or_else(|| CliError::Config(format!("line {line}: invalid value '{value}' for '{key}'"))),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> CliResult<T> {
        Ok(self.take(key, |s| s.parse().ok())?.unwrap_or(default))
    }

    fn finish(self) -> CliResult<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(CliError::Config(format!("line {line}: unknown key '{key}'"))),
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_vec3(s: &str) -> Option<Vector3<f64>> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
    (v.len() == 3).then(|| Vector3::new(v[0], v[1], v[2]))
}

/// `start:end:step` (inclusive) or a comma list; empty means none.
pub fn parse_list<T>(s: &str) -> Option<Vec<T>>
where
    T: FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + Default,
{
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Some(Vec::new());
    }
    if let Some((a, rest)) = s.split_once(':') {
        let (b, step) = rest.split_once(':')?;
        let (a, b, step): (T, T, T) = (a.trim().parse().ok()?, b.trim().parse().ok()?, step.trim().parse().ok()?);
        if !(step > T::default()) || b < a {
            return None;
        }
        let mut out = Vec::new();
        let mut x = a;
        while x <= b {
            out.push(x);
            x = x + step;
        }
        return Some(out);
    }
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

pub fn parse_noise_kind(s: &str) -> Option<NoiseModel> {
    match s {
        "uniform" => Some(NoiseModel::Uniform(0.0)),
        "mixed_deciles" => Some(NoiseModel::MixedDeciles(0.0)),
        "per_point_uniform" => Some(NoiseModel::PerPointUniform(0.0)),
        _ => None,
    }
}

fn parse_stated(s: &str) -> Option<StatedCovariance> {
    match s {
        "generating" => Some(StatedCovariance::Generating),
        "identity" => Some(StatedCovariance::Identity),
        _ => None,
    }
}

pub fn stated_name(s: StatedCovariance) -> &'static str {
    match s {
        StatedCovariance::Generating => "generating",
        StatedCovariance::Identity => "identity",
    }
}

fn solver_options(kv: &mut KeyValues) -> CliResult<SolverOptions> {
    let d = SolverOptions::default();
    let opts = SolverOptions {
        max_gn_iterations: kv.take_or("gn_iterations", d.max_gn_iterations)?,
        gn_tolerance: kv.take_or("gn_tolerance", d.gn_tolerance)?,
        planar_eigen_threshold: kv.take_or("planar_threshold", d.planar_eigen_threshold)?,
        use_covariance: true,
    };
    opts.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(opts)
}

/// Scene keys shared by `bench` and `sequence`.
fn scene_base(kv: &mut KeyValues, default_stated: StatedCovariance) -> CliResult<SceneConfig> {
    let d = SceneConfig::default();
    Ok(SceneConfig {
        seed: kv.take_or("seed", 1)?,
        focal: kv.take_or("focal", d.focal)?,
        planar: kv.take("planar", parse_bool)?.unwrap_or(false),
        bounds: SamplingBox {
            min: kv.take("box_min", parse_vec3)?.unwrap_or(d.bounds.min),
            max: kv.take("box_max", parse_vec3)?.unwrap_or(d.bounds.max),
        },
        stated: kv.take("stated", parse_stated)?.unwrap_or(default_stated),
        ..d
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Weighted,
    Identity,
}

impl SolverChoice {
    pub fn build(self, options: &SolverOptions) -> Mlpnp {
        match self {
            SolverChoice::Weighted => Mlpnp { name: "mlpnp".into(), options: *options },
            SolverChoice::Identity => {
                Mlpnp { name: "mlpnp-identity".into(), options: SolverOptions { use_covariance: false, ..*options } }
            }
        }
    }
}

fn parse_solvers(s: &str) -> Option<Vec<SolverChoice>> {
    s.split(',')
        .map(|x| match x.trim() {
            "mlpnp" => Some(SolverChoice::Weighted),
            "mlpnp-identity" => Some(SolverChoice::Identity),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()
        .filter(|v| !v.is_empty())
}

/// Two sweeps: errors against the number of points at a fixed noise level,
/// and errors against the noise level at a fixed number of points.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Shared scene settings; `n_points` and `noise` are set per sweep step.
    pub scene: SceneConfig,
    pub trials: usize,
    pub points: Vec<usize>,
    pub points_noise: NoiseModel,
    pub sigma_points: usize,
    pub sigma_noise: NoiseModel,
    pub sigma_max: Vec<f64>,
    pub solvers: Vec<SolverChoice>,
    pub options: SolverOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig::from_key_values(KeyValues::default()).expect("defaults are valid")
    }
}

impl BenchConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    fn from_key_values(mut kv: KeyValues) -> CliResult<Self> {
        let scene = scene_base(&mut kv, StatedCovariance::Generating)?;
        let points_kind = kv.take("points_noise", parse_noise_kind)?.unwrap_or(NoiseModel::MixedDeciles(0.0));
        let sigma_kind = kv.take("sigma_noise", parse_noise_kind)?.unwrap_or(NoiseModel::PerPointUniform(0.0));
        let cfg = BenchConfig {
            trials: kv.take_or("trials", 250)?,
            points: kv.take("points", parse_list::<usize>)?.unwrap_or_else(|| (10..=200).step_by(10).collect()),
            points_noise: points_kind.with_parameter(kv.take_or("points_sigma", 10.0)?),
            sigma_points: kv.take_or("sigma_points", 50)?,
            sigma_noise: sigma_kind,
            sigma_max: kv.take("sigma_max", parse_list::<f64>)?.unwrap_or_else(|| (1..=10).map(f64::from).collect()),
            solvers: kv.take("solvers", parse_solvers)?.unwrap_or(vec![SolverChoice::Weighted, SolverChoice::Identity]),
            options: solver_options(&mut kv)?,
            scene,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        for &n in self.points.iter().chain(std::iter::once(&self.sigma_points)) {
            self.scene_for(n, self.points_noise).validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        for &s in self.sigma_max.iter().chain(std::iter::once(&self.points_noise.parameter())) {
            if !(s >= 0.0) {
                return Err(CliError::Config(format!("noise level must be >= 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn scene_for(&self, n_points: usize, noise: NoiseModel) -> SceneConfig {
        SceneConfig { n_points, noise, ..self.scene.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSettings {
    pub sequence: SequenceConfig,
    pub options: SolverOptions,
}

impl Default for SequenceSettings {
    fn default() -> Self {
        SequenceSettings::from_key_values(KeyValues::default()).expect("defaults are valid")
    }
}

impl SequenceSettings {
    pub fn parse(text: &str) -> CliResult<Self> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    fn from_key_values(mut kv: KeyValues) -> CliResult<Self> {
        let d = SequenceConfig::default();
        let mut scene = scene_base(&mut kv, StatedCovariance::Identity)?;
        scene.n_points = kv.take_or("points", 50)?;
        let kind = kv.take("noise", parse_noise_kind)?.unwrap_or(NoiseModel::Uniform(0.0));
        scene.noise = kind.with_parameter(kv.take_or("sigma", 1.0)?);
        let settings = SequenceSettings {
            sequence: SequenceConfig {
                frames: kv.take_or("frames", d.frames)?,
                trials: kv.take_or("trials", d.trials)?,
                motion_deg: kv.take_or("motion_deg", d.motion_deg)?,
                motion_translation: kv.take_or("motion_translation", d.motion_translation)?,
                scene,
            },
            options: solver_options(&mut kv)?,
        };
        kv.finish()?;
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> CliResult<()> {
        let s = &self.sequence;
        s.scene.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if s.frames == 0 || s.trials == 0 {
            return Err(CliError::Config("frames and trials must be at least 1".into()));
        }
        Ok(())
    }
}
