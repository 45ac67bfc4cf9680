use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// Eigen-decomposition of a symmetric 3×3 matrix: values in descending
/// order, `vectors` holding the matching unit eigenvectors as columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricEigen3 {
    pub values: [f64; 3],
    pub vectors: Mat3,
}

impl SymmetricEigen3 {
    pub fn reconstruct(&self) -> Mat3 {
        self.vectors * Mat3::from_diagonal(&Vec3::from(self.values)) * self.vectors.transpose()
    }
}

pub(crate) fn check_symmetric(m: &Mat3) -> Result<()> {
    let asym = (m - m.transpose()).abs().max();
    if !(asym <= 1e-9 * m.abs().max().max(1.0)) {
        return Err(Error::Shape(format!(
            "matrix is not symmetric (max |M - Mᵀ| = {asym:e})"
        )));
    }
    Ok(())
}

/// Eigenvalues of a symmetric 3×3 matrix, largest first.
pub fn eig3_sym(m: &Mat3) -> Result<[f64; 3]> {
    Ok(eig3_sym_vectors(m)?.values)
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes at machine
/// precision.
pub fn eig3_sym_vectors(m: &Mat3) -> Result<SymmetricEigen3> {
    check_symmetric(m)?;
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Mat3::identity();
    let scale = a.norm();

    for _ in 0..64 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off == 0.0 || off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[(k, p)], a[(k, q)]);
                a[(k, p)] = c * akp - s * akq;
                a[(k, q)] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                a[(p, k)] = c * apk - s * aqk;
                a[(q, k)] = s * apk + c * aqk;
            }
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            for k in 0..3 {
                let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                v[(k, p)] = c * vkp - s * vkq;
                v[(k, q)] = s * vkp + c * vkq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    Ok(SymmetricEigen3 {
        values: order.map(|i| a[(i, i)]),
        vectors: Mat3::from_columns(&order.map(|i| v.column(i).into_owned())),
    })
}
