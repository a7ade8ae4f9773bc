#![allow(dead_code)]

use lrmar::TimeSeries;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        x
    })
}

/// Random coefficient matrix rescaled to spectral norm `radius`.
pub fn stable_coefficients(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DMatrix<f64> {
    let b = gaussian(rng, n, n);
    let norm = b.clone().svd(false, false).singular_values.max();
    b * (radius / norm)
}

/// `y_t = y_{t-1} B + noise_std * e_t` (row convention) after a burn-in.
pub fn mar1(rng: &mut ChaCha8Rng, b: &DMatrix<f64>, t: usize, noise_std: f64) -> DMatrix<f64> {
    let n = b.nrows();
    let burn = 200;
    let mut y = DMatrix::zeros(t + burn, n);
    for i in 1..t + burn {
        let prev = y.row(i - 1).into_owned();
        let next = prev * b + gaussian(rng, 1, n) * noise_std;
        y.set_row(i, &next);
    }
    y.rows(burn, t).into_owned()
}

pub fn series(data: DMatrix<f64>) -> TimeSeries {
    TimeSeries::new(data).unwrap()
}

pub fn white_noise(seed: u64, t: usize, n: usize) -> TimeSeries {
    series(gaussian(&mut rng(seed), t, n))
}

/// Ordinary least squares `(X'X)^{-1} X'Y`.
pub fn ols(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    (x.tr_mul(x)).lu().solve(&x.tr_mul(y)).unwrap()
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi)
}

/// Plain row-major matrices for oracles that must not share code with the
/// library.
pub mod plain {
    pub type Mat = Vec<Vec<f64>>;

    pub fn zeros(r: usize, c: usize) -> Mat {
        vec![vec![0.0; c]; r]
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = zeros(n, n);
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        m
    }

    pub fn from_na(m: &nalgebra::DMatrix<f64>) -> Mat {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    pub fn mul(a: &Mat, b: &Mat) -> Mat {
        let (r, k, c) = (a.len(), b.len(), b[0].len());
        let mut out = zeros(r, c);
        for i in 0..r {
            for l in 0..k {
                for j in 0..c {
                    out[i][j] += a[i][l] * b[l][j];
                }
            }
        }
        out
    }

    pub fn transpose(a: &Mat) -> Mat {
        (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
    }

    pub fn add(a: &Mat, b: &Mat) -> Mat {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v).collect())
            .collect()
    }

    pub fn scale(a: &Mat, s: f64) -> Mat {
        a.iter().map(|r| r.iter().map(|v| v * s).collect()).collect()
    }

    /// Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(a: &Mat) -> Mat {
        let n = a.len();
        let mut m = a.clone();
        let mut inv = identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            inv.swap(col, pivot);
            let d = m[col][col];
            for j in 0..n {
                m[col][j] /= d;
                inv[col][j] /= d;
            }
            for i in 0..n {
                if i != col {
                    let f = m[i][col];
                    for j in 0..n {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
        inv
    }

    pub fn max_abs_diff(a: &Mat, b: &nalgebra::DMatrix<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((v - b[(i, j)]).abs());
            }
        }
        worst
    }
}
