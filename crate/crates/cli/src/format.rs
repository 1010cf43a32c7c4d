//! Line-oriented correspondence files and ground-truth sidecars.
//!
//! ```text
//! mlpnp v1
//! camera 800 0 0
//! # px py pz  u v  s11 s12 s22
//! 0.1 -0.4 2.0  12.5 -3.25  1 0 1
//! ```

use mlpnp::camera::observe;
use mlpnp::{Correspondence, ImageObservation, PinholeCamera, Pose};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{CliError, CliResult};

pub const HEADER: &str = "mlpnp v1";
pub const GT_HEADER: &str = "mlpnp-gt v1";

/// Full round-trip precision (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn nums(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(num).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceFile {
    pub camera: PinholeCamera,
    pub points: Vec<Vector3<f64>>,
    pub observations: Vec<ImageObservation>,
}

impl CorrespondenceFile {
    /// Bearing correspondences through the file's camera.
    pub fn correspondences(&self) -> mlpnp::Result<Vec<Correspondence>> {
        self.points
            .iter()
            .zip(&self.observations)
            .map(|(p, obs)| Ok(Correspondence::new(*p, observe(&self.camera, obs)?)))
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{HEADER}\n");
        let c = &self.camera;
        out += &format!("camera {}\n", nums([c.focal, c.principal_point.x, c.principal_point.y]));
        out += "# px py pz u v s11 s12 s22\n";
        for (p, o) in self.points.iter().zip(&self.observations) {
            let s = &o.covariance;
            out += &nums([p.x, p.y, p.z, o.pixel.x, o.pixel.y, s[(0, 0)], s[(0, 1)], s[(1, 1)]]);
            out.push('\n');
        }
        out
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { line, message: message.into() }
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_numbers(line: usize, fields: &[&str], expected: usize) -> CliResult<Vec<f64>> {
    if fields.len() != expected {
        return Err(parse_err(line, format!("expected {expected} numbers, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(parse_err(line, format!("invalid number '{f}'"))),
        })
        .collect()
}

pub fn parse_correspondences(text: &str) -> CliResult<CorrespondenceFile> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(parse_err(n, format!("expected header '{HEADER}', found '{other}'"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let mut file =
        CorrespondenceFile { camera: PinholeCamera::default(), points: Vec::new(), observations: Vec::new() };
    let mut camera_seen = false;
    for (n, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "camera" {
            if camera_seen || !file.points.is_empty() {
                return Err(parse_err(n, "camera line must appear once, before the points"));
            }
            let v = parse_numbers(n, &fields[1..], 3)?;
            file.camera =
                PinholeCamera::new(v[0], Vector2::new(v[1], v[2])).map_err(|e| parse_err(n, e.to_string()))?;
            camera_seen = true;
            continue;
        }
        let v = parse_numbers(n, &fields, 8)?;
        let cov = Matrix2::new(v[5], v[6], v[6], v[7]);
        if v[5] < 0.0 || v[7] < 0.0 || v[5] * v[7] - v[6] * v[6] < 0.0 {
            return Err(parse_err(n, "pixel covariance is not positive semi-definite"));
        }
        file.points.push(Vector3::new(v[0], v[1], v[2]));
        file.observations.push(ImageObservation::new(Vector2::new(v[3], v[4]), cov));
    }
    Ok(file)
}

/// Ground-truth sidecar: header, `rotation` (row-major) and `translation`.
/// Any other `key value...` lines are kept as metadata.
pub fn render_ground_truth(pose: &Pose, metadata: &[(&str, String)]) -> String {
    let mut out = format!("{GT_HEADER}\n");
    for (k, v) in metadata {
        out += &format!("{k} {v}\n");
    }
    let r = pose.rotation.transpose();
    out += &format!("rotation {}\n", nums(r.iter().copied()));
    out += &format!("translation {}\n", nums(pose.translation.iter().copied()));
    out
}

pub fn parse_ground_truth(text: &str) -> CliResult<Pose> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, GT_HEADER)) => {}
        Some((n, other)) => return Err(parse_err(n, format!("expected header '{GT_HEADER}', found '{other}'"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let (mut rotation, mut translation) = (None, None);
    for (n, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "rotation" => rotation = Some(Matrix3::from_row_slice(&parse_numbers(n, &fields[1..], 9)?)),
            "translation" => translation = Some(Vector3::from_vec(parse_numbers(n, &fields[1..], 3)?)),
            _ => {}
        }
    }
    let last = text.lines().count().max(1);
    match (rotation, translation) {
        (Some(r), Some(t)) => Ok(Pose::new(r, t)),
        _ => Err(parse_err(last, "missing rotation or translation")),
    }
}
