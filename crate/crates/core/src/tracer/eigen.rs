//! Cyclic Jacobi eigen-solver for symmetric 3x3 matrices.

use crate::error::{Error, Result};
use crate::geom::Vec3;

pub type Mat3 = [[f64; 3]; 3];

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Eigenvalues (descending) and matching unit eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricEigen {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

fn off_diagonal_norm(a: &Mat3) -> f64 {
    (2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2])).sqrt()
}

fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn is_symmetric(a: &Mat3) -> bool {
    let scale = a.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..3).all(|i| (0..3).all(|j| (a[i][j] - a[j][i]).abs() <= 1e-12 * scale))
}

pub fn symmetric_eigen(sigma: &Mat3) -> Result<SymmetricEigen> {
    if !is_symmetric(sigma) || sigma.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NotSymmetric);
    }
    let mut a = *sigma;
    let mut v: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let tol = OFF_DIAGONAL_TOL * frobenius(&a).max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            rotate(&mut a, &mut v, p, q, c, s);
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let column = |c: usize| Vec3::new(v[0][c], v[1][c], v[2][c]);
    Ok(SymmetricEigen {
        values: order.map(|i| a[i][i]),
        vectors: order.map(column),
    })
}

/// Applies the Jacobi rotation in the (p, q) plane: A <- J^T A J, V <- V J.
fn rotate(a: &mut Mat3, v: &mut Mat3, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..3 {
        let akp = a[k][p];
        let akq = a[k][q];
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..3 {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

/// Unit eigenvector of the largest eigenvalue, oriented to agree with
/// `previous` (or +x when there is none). When the top eigenvalues are
/// tied within `1e-9 * trace`, the tied eigenvector most parallel to the
/// reference direction wins.
pub fn principal_direction(sigma: &Mat3, previous: Option<Vec3>) -> Result<Vec3> {
    let eig = symmetric_eigen(sigma)?;
    let reference = previous.and_then(Vec3::normalized).unwrap_or(Vec3::X);
    let trace = sigma[0][0] + sigma[1][1] + sigma[2][2];
    let tie = 1e-9 * trace.abs();

    let mut best = eig.vectors[0];
    if eig.values[0] - eig.values[1] < tie || (trace == 0.0 && eig.values[0] == eig.values[1]) {
        let mut best_dot = best.dot(reference).abs();
        for c in 1..3 {
            if eig.values[0] - eig.values[c] > tie {
                break;
            }
            let d = eig.vectors[c].dot(reference).abs();
            if d > best_dot {
                best_dot = d;
                best = eig.vectors[c];
            }
        }
    }
    let best = best.normalized().unwrap_or(Vec3::X);
    Ok(if best.dot(reference) < 0.0 { -best } else { best })
}
