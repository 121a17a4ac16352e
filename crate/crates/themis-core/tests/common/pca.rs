use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// B Bᵀ with B n×(n+2) standard normal-ish entries.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let m = rng.random_range(1..=n + 2);
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    (0..n).map(|i| (0..n).map(|j| (0..m).map(|k| b[i][k] * b[j][k]).sum()).collect()).collect()
}

/// Classical Jacobi: rotate away the largest off-diagonal entry each step.
pub fn oracle_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a = m.to_vec();
    for _ in 0..10_000 {
        let (mut p, mut q, mut big) = (0, 1, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big < 1e-14 {
            break;
        }
        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = theta.sin_cos();
        for k in 0..n {
            let (akp, akq) = (a[k][p], a[k][q]);
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..n {
            let (apk, aqk) = (a[p][k], a[q][k]);
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}
