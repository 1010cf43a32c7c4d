use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SymmetricEigen, Vector3};

use super::{Correspondence, Planarity, Pose};
use crate::rotation::project_to_so3;
use crate::{Error, Result};

/// Second-smallest to largest eigenvalue ratio of the unweighted normal
/// matrix `AᵀA` below which an ordinary configuration is rejected.
pub const ILL_CONDITIONED_RATIO: f64 = 1e-8;

/// Homogeneous system `A u = 0` with block-diagonal weights.
///
/// The unknown vector is the row-major rotation followed by the translation,
/// `u = (r11, r12, r13, r21, .., r33, t1, t2, t3)`. For planar configurations
/// the three rotation entries multiplying the constant local coordinate are
/// left out, giving nine unknowns.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    /// `2I × 12` (ordinary) or `2I × 9` (planar).
    pub design: DMatrix<f64>,
    /// Per-point 2x2 blocks of the stochastic model.
    pub weights: Vec<Matrix2<f64>>,
    pub planarity: Planarity,
    /// Indices into the full 12-vector kept as unknowns.
    pub columns: Vec<usize>,
    /// Points as they enter the design matrix (local planar frame if planar).
    pub points: Vec<Vector3<f64>>,
    pub bearings: Vec<Vector3<f64>>,
}

impl LinearSystem {
    pub fn unknowns(&self) -> usize {
        self.columns.len()
    }

    /// `N = Aᵀ P A`, accumulated point by point.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        self.accumulate(|i| self.weights[i])
    }

    /// `AᵀA`: depends on the point geometry only.
    pub fn geometric_normal_matrix(&self) -> DMatrix<f64> {
        self.accumulate(|_| Matrix2::identity())
    }

    fn accumulate(&self, weight: impl Fn(usize) -> Matrix2<f64>) -> DMatrix<f64> {
        let n = self.unknowns();
        let mut normal = DMatrix::zeros(n, n);
        let mut wa = [vec![0.0; n], vec![0.0; n]];
        for i in 0..self.weights.len() {
            let w = weight(i);
            let r0 = self.design.row(2 * i);
            let r1 = self.design.row(2 * i + 1);
            for c in 0..n {
                wa[0][c] = w[(0, 0)] * r0[c] + w[(0, 1)] * r1[c];
                wa[1][c] = w[(1, 0)] * r0[c] + w[(1, 1)] * r1[c];
            }
            for a in 0..n {
                let (ra, sa) = (r0[a], r1[a]);
                if ra == 0.0 && sa == 0.0 {
                    continue;
                }
                for b in a..n {
                    normal[(a, b)] += ra * wa[0][b] + sa * wa[1][b];
                }
            }
        }
        normal.fill_lower_triangle_with_upper_triangle();
        normal
    }
}

pub fn build_system(corrs: &[Correspondence], planarity: &Planarity, use_covariance: bool) -> LinearSystem {
    let columns: Vec<usize> = match planarity {
        Planarity::Ordinary => (0..12).collect(),
        Planarity::Planar(frame) => (0..12).filter(|&c| c >= 9 || c % 3 != frame.dropped_axis).collect(),
    };
    let points: Vec<Vector3<f64>> = match planarity {
        Planarity::Ordinary => corrs.iter().map(|c| c.point).collect(),
        Planarity::Planar(frame) => corrs.iter().map(|c| frame.to_local(&c.point)).collect(),
    };

    let mut design = DMatrix::zeros(2 * corrs.len(), columns.len());
    let mut full = [0.0; 12];
    for (i, (corr, p)) in corrs.iter().zip(&points).enumerate() {
        for (row, axis) in [corr.obs.basis.r, corr.obs.basis.s].iter().enumerate() {
            // axis_j (R_j· p + t_j) summed over j
            for j in 0..3 {
                for k in 0..3 {
                    full[3 * j + k] = axis[j] * p[k];
                }
                full[9 + j] = axis[j];
            }
            for (c, &src) in columns.iter().enumerate() {
                design[(2 * i + row, c)] = full[src];
            }
        }
    }

    LinearSystem {
        design,
        weights: corrs.iter().map(|c| c.weight(use_covariance)).collect(),
        planarity: *planarity,
        columns,
        points,
        bearings: corrs.iter().map(|c| c.obs.v).collect(),
    }
}

/// Linear pose together with the conditioning of the normal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearEstimate {
    pub pose: Pose,
    /// Largest over second-smallest eigenvalue of `N`.
    pub condition: f64,
}

pub fn solve_linear(sys: &LinearSystem) -> Result<Pose> {
    linear_estimate(sys).map(|e| e.pose)
}

pub fn linear_estimate(sys: &LinearSystem) -> Result<LinearEstimate> {
    // degeneracy is judged on the geometry alone; widely spread weights
    // would otherwise flag well-posed scenes
    let mut geometric: Vec<f64> = sys.geometric_normal_matrix().symmetric_eigenvalues().iter().copied().collect();
    geometric.sort_by(f64::total_cmp);
    let ratio = geometric[1] / geometric[geometric.len() - 1];
    if !sys.planarity.is_planar() && !(ratio >= ILL_CONDITIONED_RATIO) {
        return Err(Error::IllConditioned { ratio });
    }

    let eig = SymmetricEigen::new(sys.normal_matrix());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let condition = eig.eigenvalues[*order.last().unwrap()] / eig.eigenvalues[order[1]];

    let solution: DVector<f64> = eig.eigenvectors.column(order[0]).into_owned();
    let mut u = [0.0; 12];
    for (c, &dst) in sys.columns.iter().enumerate() {
        u[dst] = solution[c];
    }
    let mut rot = Matrix3::from_row_slice(&u[..9]);
    let mut trans = Vector3::new(u[9], u[10], u[11]);

    // cheirality: most points must sit in front of the camera
    let positive = sys.points.iter().zip(&sys.bearings).filter(|(p, v)| v.dot(&(rot * *p + trans)) > 0.0).count();
    if 2 * positive < sys.points.len() {
        rot = -rot;
        trans = -trans;
    }

    let pose = match &sys.planarity {
        Planarity::Ordinary => {
            let scale = (rot.column(0).norm() * rot.column(1).norm() * rot.column(2).norm()).cbrt();
            Pose::new(project_to_so3(&rot), trans / scale)
        }
        Planarity::Planar(frame) => {
            let k = frame.dropped_axis;
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let scale = (rot.column(a).norm() * rot.column(b).norm()).sqrt();
            rot /= scale;
            let completed = rot.column(a).cross(&rot.column(b)).normalize();
            rot.set_column(k, &completed);
            let local = Pose::new(project_to_so3(&rot), trans / scale);
            // p_local = R_Sᵀ (p - centroid)
            let rotation = local.rotation * frame.rotation.transpose();
            Pose::new(rotation, local.translation - rotation * frame.centroid)
        }
    };

    Ok(LinearEstimate { pose, condition })
}
