use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::{Error, Result};

/// Point configuration class, decided from the eigenvalues of the
/// mean-centered scatter matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Planarity {
    Ordinary,
    Planar(PlanarFrame),
}

impl Planarity {
    pub fn is_planar(&self) -> bool {
        matches!(self, Planarity::Planar(_))
    }
}

/// Frame in which the planar points have one constant coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarFrame {
    /// Scatter eigenvectors as columns, largest eigenvalue first, det = +1.
    pub rotation: Matrix3<f64>,
    /// Coordinate of `rotationᵀ (p - centroid)` that is (numerically) zero.
    pub dropped_axis: usize,
    pub centroid: Vector3<f64>,
}

impl PlanarFrame {
    /// `rotationᵀ (p - centroid)`
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.centroid)
    }
}

pub fn detect_planarity(points: &[Vector3<f64>], threshold: f64) -> Result<Planarity> {
    if points.is_empty() {
        return Err(Error::RankDeficient { rank: 0 });
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let scatter = points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - centroid;
        acc + d * d.transpose()
    });

    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let [largest, middle, smallest] = order.map(|k| eig.eigenvalues[k]);

    if !(largest > 0.0) {
        return Err(Error::RankDeficient { rank: 0 });
    }
    if middle / largest < threshold {
        return Err(Error::RankDeficient { rank: 1 });
    }
    if smallest / largest >= threshold {
        return Ok(Planarity::Ordinary);
    }

    let mut rotation = Matrix3::from_columns(&order.map(|k| eig.eigenvectors.column(k).into_owned()));
    if rotation.determinant() < 0.0 {
        rotation.column_mut(2).neg_mut();
    }

    // the constant coordinate is the one with the least spread
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        let q = rotation.transpose() * (p - centroid);
        lo = lo.inf(&q);
        hi = hi.sup(&q);
    }
    let dropped_axis = (hi - lo).imin();

    Ok(Planarity::Planar(PlanarFrame { rotation, dropped_axis, centroid }))
}
