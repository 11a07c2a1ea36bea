//! Test-only reference implementations. Nothing here calls into the library's
//! numerical paths.
#![allow(dead_code)]

use gaitdex::cohort::{Cohort, SubjectRecord};
use gaitdex::grid::GridSpec;
use gaitdex::variable::VariableId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi rotations on a dense symmetric matrix. Returns eigenvalues
/// in descending order and the matching unit eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].partial_cmp(&m[x][x]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (values, vectors)
}

/// Trapezoid weights on [0, 1] with `t` equally spaced nodes.
pub fn trapezoid(t: usize) -> Vec<f64> {
    let h = 1.0 / (t - 1) as f64;
    (0..t)
        .map(|l| if l == 0 || l == t - 1 { h / 2.0 } else { h })
        .collect()
}

/// Flip so the largest-magnitude entry (earliest on ties) is positive.
pub fn sign_fix(v: &mut [f64]) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller, kept local so the oracle does not share the library's sampler
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random smooth curves: a few harmonics with decaying random amplitudes plus noise.
pub fn random_curves(seed: u64, n: usize, t: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let coefs: Vec<(f64, f64)> = (1..=5)
                .map(|h| {
                    let s = 4.0 / h as f64;
                    (s * sample_normal(&mut rng), s * sample_normal(&mut rng))
                })
                .collect();
            let level = 2.0 * sample_normal(&mut rng);
            (0..t)
                .map(|l| {
                    let x = std::f64::consts::TAU * l as f64 / (t - 1) as f64;
                    let mut y = level + 0.05 * sample_normal(&mut rng);
                    for (h, (a, b)) in coefs.iter().enumerate() {
                        let k = (h + 1) as f64;
                        y += a * (k * x).cos() + b * (k * x).sin();
                    }
                    y
                })
                .collect()
        })
        .collect()
}

/// Cohort with the given variables, each filled by `random_curves`. The first
/// `n_healthy` subjects are healthy.
pub fn random_cohort(seed: u64, n: usize, t: usize, n_healthy: usize, vars: &[VariableId]) -> Cohort {
    let per_var: Vec<Vec<Vec<f64>>> = vars
        .iter()
        .enumerate()
        .map(|(k, _)| random_curves(seed.wrapping_mul(31).wrapping_add(k as u64), n, t))
        .collect();
    let subjects = (0..n)
        .map(|i| {
            let mut s = SubjectRecord::new(format!("S{i:03}"), i < n_healthy);
            for (k, v) in vars.iter().enumerate() {
                s = s.with_curve(*v, per_var[k][i].clone());
            }
            s
        })
        .collect();
    Cohort::new(GridSpec::new(t).unwrap(), subjects).unwrap()
}

/// Weighted covariance operator `W^{1/2} C W^{1/2}` of row curves.
pub fn weighted_covariance(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = curves.len();
    let t = curves[0].len();
    let mean: Vec<f64> = (0..t)
        .map(|l| curves.iter().map(|c| c[l]).sum::<f64>() / n as f64)
        .collect();
    let w = trapezoid(t);
    let mut m = vec![vec![0.0; t]; t];
    for a in 0..t {
        for b in 0..t {
            let c: f64 = curves
                .iter()
                .map(|x| (x[a] - mean[a]) * (x[b] - mean[b]))
                .sum::<f64>()
                / (n - 1) as f64;
            m[a][b] = w[a].sqrt() * c * w[b].sqrt();
        }
    }
    (mean, m)
}

/// Kendall tau-b by direct definition over all pairs.
pub fn kendall_by_pairs(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut p, mut tx, mut ty) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let sx = (x[i] - x[j]).signum() * ((x[i] != x[j]) as i32 as f64);
            let sy = (y[i] - y[j]).signum() * ((y[i] != y[j]) as i32 as f64);
            p += sx * sy;
            tx += sx * sx;
            ty += sy * sy;
        }
    }
    p / (tx * ty).sqrt()
}
