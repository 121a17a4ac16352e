//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`; its largest-magnitude
    /// entry is positive.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub converged: bool,
}

fn off_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    sqrt(s)
}

/// Eigen-decomposes a symmetric matrix. Only the upper triangle is read.
pub fn symmetric_eigen(m: &[Vec<f64>]) -> SymmetricEigen {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if j >= i { m[i][j] } else { m[j][i] }).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut sweeps = 0;
    let mut converged = off_norm(&a) < JACOBI_TOL;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle zeroing a[p][q] (Golub & Van Loan, sym.schur2).
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_norm(&a) < JACOBI_TOL;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep column order.
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..n).map(|r| v[r][col]).collect();
            let mut big = 0;
            for r in 1..n {
                if fabs(vec[r]) > fabs(vec[big]) {
                    big = r;
                }
            }
            if n > 0 && vec[big] < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            vec
        })
        .collect();
    SymmetricEigen { values, vectors, sweeps, converged }
}

/// `Σ_k λ_k v_k v_kᵀ`.
pub fn reconstruct(values: &[f64], vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vectors.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; n]; n];
    for (lam, vk) in values.iter().zip(vectors) {
        for i in 0..n {
            for j in 0..n {
                out[i][j] += lam * vk[i] * vk[j];
            }
        }
    }
    out
}

pub fn frobenius_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            s += (x - y) * (x - y);
        }
    }
    sqrt(s)
}
