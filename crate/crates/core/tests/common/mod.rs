//! Closed-form matrices for three sites, written out entry by entry in the
//! order 𝟏, {1}{23}, {12}{3}, {13}{2}, 𝟎.

#![allow(dead_code)]

use nalgebra::DMatrix;

/// Finite-population generator. `literal_first_column` reproduces the
/// misprinted `(N−1)/N · r` in the first column of the middle rows.
pub fn theta3(n: f64, r1: f64, r2: f64, literal_first_column: bool) -> DMatrix<f64> {
    let n2 = n * n;
    let first = |r: f64| {
        if literal_first_column {
            2.0 / n - (n - 1.0) / n * r
        } else {
            2.0 / n - (n - 1.0) / n2 * r
        }
    };
    let mid = |r: f64| {
        [
            first(r),
            -2.0 / n - (n - 1.0) * (n - 1.0) / n2 * r,
            (n - 1.0) / n2 * r,
            (n - 1.0) / n2 * r,
            (n - 1.0) * (n - 2.0) / n2 * r,
        ]
    };
    let rows: [[f64; 5]; 5] = [
        [
            -(n - 1.0) / n * (r1 + r2),
            (n - 1.0) / n * r1,
            (n - 1.0) / n * r2,
            0.0,
            0.0,
        ],
        rot(mid(r2), 1),
        rot(mid(r1), 2),
        rot(mid(r1 + r2), 3),
        [0.0, 2.0 / n, 2.0 / n, 2.0 / n, -6.0 / n],
    ];
    from_rows(&rows)
}

/// Puts the diagonal entry (position 1 of `mid`) at column `k`, keeping the
/// two off-diagonal middle entries in the remaining middle columns.
fn rot(mid: [f64; 5], k: usize) -> [f64; 5] {
    let mut row = [mid[0], 0.0, 0.0, 0.0, mid[4]];
    let mut others = [mid[2], mid[3]].into_iter();
    for (c, slot) in row.iter_mut().enumerate().take(4).skip(1) {
        *slot = if c == k { mid[1] } else { others.next().unwrap() };
    }
    row
}

/// The transform to correlation functions.
pub fn t3(n: f64) -> DMatrix<f64> {
    let a = 1.0 / (n - 2.0);
    let rows: [[f64; 5]; 5] = [
        [1.0, -1.0, -1.0, -1.0, 2.0],
        [a, 1.0 + a, -a, -a, -1.0],
        [a, -a, 1.0 + a, -a, -1.0],
        [a, -a, -a, 1.0 + a, -1.0],
        [1.0 / ((n - 1.0) * (n - 2.0)), a, a, a, 1.0],
    ];
    from_rows(&rows) * ((n - 1.0) * (n - 2.0) / (n * n))
}

/// `T Θ T⁻¹`.
pub fn conjugated3(n: f64, r1: f64, r2: f64) -> DMatrix<f64> {
    let n2 = n * n;
    let s = r1 + r2;
    let c = 2.0 / n - (n - 1.0) / n2 * s;
    let rows: [[f64; 5]; 5] = [
        [-6.0 / n - (n - 1.0) * (n - 2.0) / n2 * s, 0.0, 0.0, 0.0, 0.0],
        [c, -2.0 / n - (n - 1.0) / n * r2, 0.0, 0.0, 0.0],
        [c, 0.0, -2.0 / n - (n - 1.0) / n * r1, 0.0, 0.0],
        [c, 0.0, 0.0, -2.0 / n - (n - 1.0) / n * s, 0.0],
        [-s / n2, 2.0 / n - r2 / n, 2.0 / n - r1 / n, 2.0 / n - s / n, 0.0],
    ];
    from_rows(&rows)
}

/// Diffusion-limit generator.
pub fn theta3_diffusion(p1: f64, p2: f64) -> DMatrix<f64> {
    let rows: [[f64; 5]; 5] = [
        [-(p1 + p2), p1, p2, 0.0, 0.0],
        [2.0, -2.0 - p2, 0.0, 0.0, p2],
        [2.0, 0.0, -2.0 - p1, 0.0, p1],
        [2.0, 0.0, 0.0, -2.0 - p1 - p2, p1 + p2],
        [0.0, 2.0, 2.0, 2.0, -6.0],
    ];
    from_rows(&rows)
}

/// Diffusion-limit `T″ Θ″ T″⁻¹`.
pub fn conjugated3_diffusion(p1: f64, p2: f64) -> DMatrix<f64> {
    let rows: [[f64; 5]; 5] = [
        [-(6.0 + p1 + p2), 0.0, 0.0, 0.0, 0.0],
        [2.0, -(2.0 + p2), 0.0, 0.0, 0.0],
        [2.0, 0.0, -(2.0 + p1), 0.0, 0.0],
        [2.0, 0.0, 0.0, -(2.0 + p1 + p2), 0.0],
        [0.0, 2.0, 2.0, 2.0, 0.0],
    ];
    from_rows(&rows)
}

/// The printed eigenvector matrix of the diffusion limit; its rows are left
/// eigenvectors of [`conjugated3_diffusion`].
pub fn eigvecs3_diffusion(p1: f64, p2: f64) -> DMatrix<f64> {
    let s = p1 + p2;
    let last0 = 4.0 * (p1 * p2 + (2.0 + s) * (6.0 + s))
        / ((2.0 + p1) * (2.0 + p2) * (2.0 + s) * (6.0 + s));
    let rows: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [2.0 / ((2.0 + p2) * (4.0 + p1)), 1.0 / (2.0 + p2), 0.0, 0.0, 0.0],
        [2.0 / ((2.0 + p1) * (4.0 + p2)), 0.0, 1.0 / (2.0 + p1), 0.0, 0.0],
        [1.0 / (2.0 * (2.0 + s)), 0.0, 0.0, 1.0 / (2.0 + s), 0.0],
        [last0, 2.0 / (2.0 + p2), 2.0 / (2.0 + p1), 2.0 / (2.0 + s), 1.0],
    ];
    from_rows(&rows)
}

fn from_rows(rows: &[[f64; 5]; 5]) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| rows[i][j])
}

/// Largest `|a − b|` relative to `max(|b|, floor)`.
pub fn max_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
