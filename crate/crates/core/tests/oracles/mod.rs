//! Independent least-squares oracles used by the integration tests.
//!
//! Every projection is recomputed by parametrizing the target set with real
//! coordinates and solving the dense least-squares problem with a QR
//! factorization; nothing here calls into the code under test.

#![allow(dead_code)]

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use spectral_sdp::{c64, CMat};

/// Nearest point to `target` in the affine family `θ ↦ build(θ)`, `θ ∈ R^p`.
pub fn affine_ls_projection(target: &CMat, p: usize, build: impl Fn(&[f64]) -> CMat) -> CMat {
    let (r, c) = (target.nrows(), target.ncols());
    let zero = vec![0.0; p];
    let offset = build(&zero);
    let rows = 2 * r * c;
    let flatten = |m: &CMat, out: &mut Vec<f64>| {
        for j in 0..c {
            for i in 0..r {
                out.push(m[(i, j)].re);
                out.push(m[(i, j)].im);
            }
        }
    };
    let mut design = Mat::<f64>::zeros(rows, p);
    let mut unit = zero.clone();
    for k in 0..p {
        unit[k] = 1.0;
        let col = &build(&unit) - &offset;
        unit[k] = 0.0;
        let mut flat = Vec::with_capacity(rows);
        flatten(&col, &mut flat);
        for (i, v) in flat.into_iter().enumerate() {
            design[(i, k)] = v;
        }
    }
    let mut rhs_flat = Vec::with_capacity(rows);
    flatten(&(target - &offset), &mut rhs_flat);
    let rhs = Mat::<f64>::from_fn(rows, 1, |i, _| rhs_flat[i]);
    let theta = design.qr().solve_lstsq(&rhs);
    let theta: Vec<f64> = (0..p).map(|i| theta[(i, 0)]).collect();
    build(&theta)
}

/// General complex Toeplitz matrix from `2n−1` complex diagonal values
/// (`θ` holds re/im pairs, diagonal offset `d = i − j` stored at `d + n − 1`).
pub fn toeplitz_from_params(n: usize, theta: &[f64]) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        let d = (i as isize - j as isize + n as isize - 1) as usize;
        c64::new(theta[2 * d], theta[2 * d + 1])
    })
}

pub fn toeplitz_oracle(b: &CMat) -> CMat {
    let n = b.nrows();
    affine_ls_projection(b, 2 * (2 * n - 1), |t| toeplitz_from_params(n, t))
}

/// Hermitian `n×n` from `n²` reals: diagonal, then re/im of the strict upper triangle.
pub fn hermitian_from_params(n: usize, theta: &[f64]) -> CMat {
    let mut out = CMat::zeros(n, n);
    let mut k = n;
    for i in 0..n {
        out[(i, i)] = c64::new(theta[i], 0.0);
        for j in i + 1..n {
            let v = c64::new(theta[k], theta[k + 1]);
            k += 2;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

pub fn hermitian_oracle(a: &CMat) -> CMat {
    let n = a.nrows();
    affine_ls_projection(a, n * n, |t| hermitian_from_params(n, t))
}

/// Hermitian Toeplitz `n×n` from `2n−1` reals: `t_0` real, then re/im of `t_1..t_{n−1}`
/// (first column below the diagonal).
pub fn hermitian_toeplitz_from_params(n: usize, theta: &[f64]) -> CMat {
    let first: Vec<c64> = (0..n)
        .map(|d| if d == 0 { c64::new(theta[0], 0.0) } else { c64::new(theta[2 * d - 1], theta[2 * d]) })
        .collect();
    CMat::from_fn(n, n, |i, j| if i >= j { first[i - j] } else { first[j - i].conj() })
}

/// Projection onto `{[[T1, X], [Xᴴ, T2]] : T1, T2 Hermitian Toeplitz, X = obs on T}`.
/// `toeplitz = false` frees `T1`, `T2` to any Hermitian matrices.
pub fn feasible_oracle(a: &CMat, observed: &[(usize, usize, c64)], toeplitz: bool) -> CMat {
    let n = a.nrows() / 2;
    let is_obs = |j: usize, k: usize| observed.iter().any(|&(a, b, _)| (a, b) == (j, k));
    let free: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .filter(|&(j, k)| !is_obs(j, k))
        .collect();
    let block_params = if toeplitz { 2 * n - 1 } else { n * n };
    let p = 2 * block_params + 2 * free.len();
    let build = |t: &[f64]| {
        let (t1, rest) = t.split_at(block_params);
        let (t2, x) = rest.split_at(block_params);
        let (b1, b2) = if toeplitz {
            (hermitian_toeplitz_from_params(n, t1), hermitian_toeplitz_from_params(n, t2))
        } else {
            (hermitian_from_params(n, t1), hermitian_from_params(n, t2))
        };
        let mut xm = CMat::zeros(n, n);
        for &(j, k, v) in observed {
            xm[(j, k)] = v;
        }
        for (idx, &(j, k)) in free.iter().enumerate() {
            xm[(j, k)] = c64::new(x[2 * idx], x[2 * idx + 1]);
        }
        CMat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => b1[(i, j)],
            (true, false) => xm[(i, j - n)],
            (false, true) => xm[(j, i - n)].conj(),
            (false, false) => b2[(i - n, j - n)],
        })
    };
    affine_ls_projection(a, p, build)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}
