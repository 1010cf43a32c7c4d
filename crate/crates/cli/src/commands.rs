use std::fs;
use std::path::{Path, PathBuf};

use mlpnp::experiment::{
    generate_scene, paired_less, run_experiment, run_sequence, ExperimentReport, FramePair, NoiseModel, SceneConfig,
    SequenceReport,
};
use mlpnp::{solve, Mlpnp, PoseSolution, PoseSolver, SolverOptions};

use crate::config::{stated_name, BenchConfig, SequenceSettings};
use crate::error::{solver_error_kind, CliError, CliResult};
use crate::format::{num, nums, parse_correspondences, render_ground_truth, CorrespondenceFile};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.txt";

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub points: usize,
    pub solution: PoseSolution,
}

impl SolveReport {
    /// `key value...` lines; rotation sigmas in degrees.
    pub fn render(&self) -> String {
        let s = &self.solution;
        let d = &s.diagnostics;
        let rot = s.pose.rotation.transpose();
        let mut out = String::from("status ok\n");
        out += &format!("points {}\n", self.points);
        out += &format!("planar {}\n", d.planar);
        out += &format!("iterations {}\n", d.gn_iterations);
        out += &format!("rotation {}\n", nums(rot.iter().copied()));
        out += &format!("translation {}\n", nums(s.pose.translation.iter().copied()));
        out += &format!("sigma_rotation_deg {}\n", nums(s.sigmas.iter().take(3).map(|x| x.to_degrees())));
        out += &format!("sigma_translation {}\n", nums(s.sigmas.iter().skip(3).copied()));
        out += &format!("sigma0_sq {}\n", num(s.sigma0_sq));
        out += &format!("weighted_cost {}\n", num(d.weighted_cost));
        out
    }
}

pub fn solve_text(text: &str, use_covariance: bool) -> CliResult<SolveReport> {
    let file = parse_correspondences(text)?;
    let corrs = file.correspondences()?;
    let opts = SolverOptions { use_covariance, ..SolverOptions::default() };
    Ok(SolveReport { points: corrs.len(), solution: solve(&corrs, &opts)? })
}

pub fn cmd_solve(input: &Path, use_covariance: bool, output: Option<&Path>) -> CliResult<SolveReport> {
    let report = solve_text(&read(input)?, use_covariance)?;
    if let Some(path) = output {
        write(path, &report.render())?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub scene: SceneConfig,
    pub trial: u64,
    pub output: PathBuf,
}

/// Sidecar path: the output path with its extension replaced by `gt`.
pub fn ground_truth_path(output: &Path) -> PathBuf {
    output.with_extension("gt")
}

/// Writes one synthetic scene and its `.gt` sidecar; returns both paths.
pub fn cmd_generate(opts: &GenerateOptions) -> CliResult<(PathBuf, PathBuf)> {
    let gt_path = ground_truth_path(&opts.output);
    if gt_path == opts.output {
        return Err(CliError::Config("output file must not use the .gt extension".into()));
    }
    let cfg = &opts.scene;
    let scene = generate_scene(cfg, opts.trial)?;
    let file = CorrespondenceFile {
        camera: cfg.camera(),
        points: scene.world_points.clone(),
        observations: scene.observations.clone(),
    };
    write(&opts.output, &file.render())?;
    let meta = [
        ("seed", cfg.seed.to_string()),
        ("trial", opts.trial.to_string()),
        ("noise", format!("{} {}", cfg.noise.name(), num(cfg.noise.parameter()))),
        ("planar", cfg.planar.to_string()),
    ];
    write(&gt_path, &render_ground_truth(&scene.ground_truth, &meta))?;
    Ok((opts.output.clone(), gt_path))
}

/// Writes `manifest.txt` last, through a temporary file and a rename.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: Option<&Path>,
    seed: u64,
    files: &[&str],
) -> CliResult<PathBuf> {
    let mut text = String::from("mlpnp-manifest v1\n");
    text += &format!("tool mlpnp {TOOL_VERSION}\n");
    text += &format!("command {command}\n");
    text += &format!("config {}\n", config.map_or("-".into(), |p| p.display().to_string()));
    text += &format!("seed {seed}\n");
    text += &format!("out_dir {}\n", out_dir.display());
    for f in files {
        text += &format!("file {f}\n");
    }
    let tmp = out_dir.join(format!("{MANIFEST}.tmp"));
    let path = out_dir.join(MANIFEST);
    write(&tmp, &text)?;
    fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// One step of a bench sweep.
#[derive(Debug, Clone)]
pub struct SweepStep {
    /// `points` or `sigma`.
    pub sweep: &'static str,
    pub n_points: usize,
    pub noise: NoiseModel,
    pub report: ExperimentReport,
}

pub fn run_bench(cfg: &BenchConfig) -> CliResult<Vec<SweepStep>> {
    cfg.validate()?;
    let solvers: Vec<Mlpnp> = cfg.solvers.iter().map(|s| s.build(&cfg.options)).collect();
    let refs: Vec<&dyn PoseSolver> = solvers.iter().map(|s| s as &dyn PoseSolver).collect();
    let mut plan: Vec<(&'static str, usize, NoiseModel)> =
        cfg.points.iter().map(|&n| ("points", n, cfg.points_noise)).collect();
    plan.extend(cfg.sigma_max.iter().map(|&s| ("sigma", cfg.sigma_points, cfg.sigma_noise.with_parameter(s))));
    plan.into_iter()
        .map(|(sweep, n_points, noise)| {
            let report = run_experiment(&cfg.scene_for(n_points, noise), cfg.trials, &refs)?;
            Ok(SweepStep { sweep, n_points, noise, report })
        })
        .collect()
}

pub const BENCH_FILES: [&str; 6] =
    ["trials.csv", "summary.csv", "runtime.csv", "error_vs_points.dat", "error_vs_sigma.dat", "runtime_vs_points.dat"];

const SIGMA_COLUMNS: [&str; 6] = ["rx_deg", "ry_deg", "rz_deg", "tx", "ty", "tz"];

fn sigma_cells(v: &nalgebra::Vector6<f64>) -> Vec<String> {
    v.iter().enumerate().map(|(k, &x)| num(if k < 3 { x.to_degrees() } else { x })).collect()
}

fn step_cells(step: &SweepStep, planar: bool) -> Vec<String> {
    vec![
        step.sweep.to_string(),
        step.n_points.to_string(),
        step.noise.name().to_string(),
        num(step.noise.parameter()),
        planar.to_string(),
    ]
}

fn write_trials(path: &Path, steps: &[SweepStep], planar: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sweep", "n_points", "noise_model", "sigma", "planar", "solver", "trial", "status"];
    header.extend(["rot_err_deg", "trans_err_pct", "sigma0_sq"]);
    let sig: Vec<String> = SIGMA_COLUMNS.iter().map(|c| format!("sigma_{c}")).collect();
    header.extend(sig.iter().map(String::as_str));
    header.push("gn_iterations");
    w.write_record(&header)?;
    for step in steps {
        for rec in &step.report.records {
            let mut row = step_cells(step, planar);
            row.extend([rec.solver.clone(), rec.trial.to_string()]);
            match &rec.outcome {
                Ok(t) => {
                    row.push("ok".into());
                    row.extend([num(t.rot_err_deg), num(t.trans_err_pct), num(t.sigma0_sq)]);
                    row.extend(sigma_cells(&t.internal_sigmas));
                    row.push(t.gn_iterations.to_string());
                }
                Err(e) => {
                    row.push(solver_error_kind(e).into());
                    row.extend(std::iter::repeat_n(String::new(), 10));
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn write_summary(path: &Path, steps: &[SweepStep], planar: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> =
        ["sweep", "n_points", "noise_model", "sigma", "planar", "solver", "trials", "failures"]
            .map(String::from)
            .to_vec();
    header.extend(["mean_rot_err_deg", "mean_trans_err_pct", "mean_sigma0_sq"].map(String::from));
    header.extend(SIGMA_COLUMNS.iter().map(|c| format!("internal_{c}")));
    header.extend(SIGMA_COLUMNS.iter().map(|c| format!("external_{c}")));
    w.write_record(&header)?;
    for step in steps {
        for s in &step.report.summaries {
            let mut row = step_cells(step, planar);
            row.extend([s.solver.clone(), s.trials.to_string(), s.failures.to_string()]);
            row.extend([num(s.mean_rot_err_deg), num(s.mean_trans_err_pct), num(s.mean_sigma0_sq)]);
            row.extend(sigma_cells(&s.internal_sigmas));
            row.extend(sigma_cells(&s.external_sigmas));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn write_runtime(path: &Path, steps: &[SweepStep], planar: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep", "n_points", "noise_model", "sigma", "planar", "solver", "trials", "runtime_s"])?;
    for step in steps {
        for s in &step.report.summaries {
            let mut row = step_cells(step, planar);
            row.extend([s.solver.clone(), s.trials.to_string(), num(s.runtime)]);
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Named column of a `.dat` file.
type SummaryField = (&'static str, fn(&mlpnp::experiment::SolverSummary) -> f64);

/// Whitespace-separated columns: the x value, then per solver the listed
/// summary fields.
fn write_dat(
    path: &Path,
    steps: &[&SweepStep],
    x_name: &str,
    x: impl Fn(&SweepStep) -> f64,
    fields: &[SummaryField],
) -> CliResult<()> {
    let solvers: Vec<String> =
        steps.first().map(|s| s.report.summaries.iter().map(|x| x.solver.clone()).collect()).unwrap_or_default();
    let mut text = format!("# {x_name}");
    for s in &solvers {
        for (name, _) in fields {
            text += &format!(" {s}:{name}");
        }
    }
    text.push('\n');
    for step in steps {
        let mut cols = vec![num(x(step))];
        for s in &step.report.summaries {
            cols.extend(fields.iter().map(|(_, f)| num(f(s))));
        }
        text += &cols.join(" ");
        text.push('\n');
    }
    write(path, &text)
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub steps: Vec<SweepStep>,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

impl BenchOutcome {
    /// Human-readable per-step table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<7} {:>5} {:<18} {:>6} {:<15} {:>6} {:>12} {:>12} {:>10} {:>11}\n",
            "sweep", "I", "noise", "sigma", "solver", "trials", "rot_deg", "trans_pct", "sigma0_sq", "runtime_us"
        );
        for step in &self.steps {
            for s in &step.report.summaries {
                out += &format!(
                    "{:<7} {:>5} {:<18} {:>6.2} {:<15} {:>6} {:>12.6} {:>12.6} {:>10.3e} {:>11.2}\n",
                    step.sweep,
                    step.n_points,
                    step.noise.name(),
                    step.noise.parameter(),
                    s.solver,
                    s.trials,
                    s.mean_rot_err_deg,
                    s.mean_trans_err_pct,
                    s.mean_sigma0_sq,
                    s.runtime * 1e6
                );
            }
        }
        out
    }
}

pub fn cmd_bench(cfg: &BenchConfig, out_dir: &Path, config_path: Option<&Path>) -> CliResult<BenchOutcome> {
    let steps = run_bench(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let planar = cfg.scene.planar;
    let path = |name: &str| out_dir.join(name);
    write_trials(&path("trials.csv"), &steps, planar)?;
    write_summary(&path("summary.csv"), &steps, planar)?;
    write_runtime(&path("runtime.csv"), &steps, planar)?;

    let by_points: Vec<&SweepStep> = steps.iter().filter(|s| s.sweep == "points").collect();
    let by_sigma: Vec<&SweepStep> = steps.iter().filter(|s| s.sweep == "sigma").collect();
    let errors: [SummaryField; 2] = [("rot_deg", |s| s.mean_rot_err_deg), ("trans_pct", |s| s.mean_trans_err_pct)];
    write_dat(&path("error_vs_points.dat"), &by_points, "n_points", |s| s.n_points as f64, &errors)?;
    write_dat(&path("error_vs_sigma.dat"), &by_sigma, "sigma_max", |s| s.noise.parameter(), &errors)?;
    write_dat(
        &path("runtime_vs_points.dat"),
        &by_points,
        "n_points",
        |s| s.n_points as f64,
        &[("runtime_s", |s| s.runtime)],
    )?;

    let manifest = write_manifest(out_dir, "bench", config_path, cfg.scene.seed, &BENCH_FILES)?;
    Ok(BenchOutcome { steps, files: BENCH_FILES.iter().map(|f| path(f)).collect(), manifest })
}

/// Per-frame means plus one-sided paired tests of `feedback < plain`.
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub report: SequenceReport,
    /// `(p_rot, p_trans)` per frame.
    pub p_values: Vec<(f64, f64)>,
    pub files: Vec<PathBuf>,
}

impl SequenceOutcome {
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>5} {:>6} {:>12} {:>12} {:>12} {:>12} {:>9} {:>9}\n",
            "frame", "trials", "plain_rot", "plain_trans", "fb_rot", "fb_trans", "p_rot", "p_trans"
        );
        for (f, (p_rot, p_trans)) in self.report.frames.iter().zip(&self.p_values) {
            out += &format!(
                "{:>5} {:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>9.3e} {:>9.3e}\n",
                f.frame,
                f.trials,
                f.plain_rot_err_deg,
                f.plain_trans_err_pct,
                f.feedback_rot_err_deg,
                f.feedback_trans_err_pct,
                p_rot,
                p_trans
            );
        }
        out
    }
}

fn frame_p_values(report: &SequenceReport, frame: usize) -> CliResult<(f64, f64)> {
    let column = |pick: fn(&FramePair) -> f64| -> Vec<f64> { report.paired.iter().map(|t| pick(&t[frame])).collect() };
    if report.paired.len() < 2 {
        return Ok((f64::NAN, f64::NAN));
    }
    let rot = paired_less(&column(|r| r.1 .0), &column(|r| r.0 .0))?;
    let trans = paired_less(&column(|r| r.1 .1), &column(|r| r.0 .1))?;
    Ok((rot.p_value, trans.p_value))
}

pub fn cmd_sequence(
    settings: &SequenceSettings,
    out_dir: Option<&Path>,
    config_path: Option<&Path>,
) -> CliResult<SequenceOutcome> {
    settings.validate()?;
    let report = run_sequence(&settings.sequence, &settings.options)?;
    let p_values = (0..report.frames.len()).map(|f| frame_p_values(&report, f)).collect::<CliResult<Vec<_>>>()?;
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("sequence.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "frame",
            "trials",
            "noise_model",
            "sigma",
            "stated",
            "plain_rot_err_deg",
            "plain_trans_err_pct",
            "feedback_rot_err_deg",
            "feedback_trans_err_pct",
            "p_rot",
            "p_trans",
        ])?;
        let scene = &settings.sequence.scene;
        for (f, (p_rot, p_trans)) in report.frames.iter().zip(&p_values) {
            w.write_record([
                f.frame.to_string(),
                f.trials.to_string(),
                scene.noise.name().to_string(),
                num(scene.noise.parameter()),
                stated_name(scene.stated).to_string(),
                num(f.plain_rot_err_deg),
                num(f.plain_trans_err_pct),
                num(f.feedback_rot_err_deg),
                num(f.feedback_trans_err_pct),
                num(*p_rot),
                num(*p_trans),
            ])?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        write_manifest(dir, "sequence", config_path, scene.seed, &["sequence.csv"])?;
        files.push(path);
    }
    Ok(SequenceOutcome { report, p_values, files })
}
