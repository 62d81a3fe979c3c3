//! Structure-enforcing maps used by the ADMM iteration.
//!
//! The `2n×2n` iterate is viewed in `n×n` blocks
//!
//! ```text
//! [[TL, TR],
//!  [BL, BR]]
//! ```
//!
//! where `TL`/`BR` play the role of the Toeplitz blocks `T1`/`T2` and `TR` is the
//! signal estimate `X`.

use std::fmt;
use std::str::FromStr;

use faer::{MatMut, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_square, fro_norm, hermitian_defect, hermitian_eigen};
use crate::signal::ObservationSet;
use crate::{c64, CMat};

/// Which constraint set the `N` block lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Diagonal blocks constrained to be Toeplitz.
    #[default]
    Toeplitz,
    /// Diagonal blocks free: nuclear-norm completion.
    Nuclear,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Toeplitz => "toeplitz",
            Variant::Nuclear => "nuclear",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "toeplitz" => Ok(Variant::Toeplitz),
            "nuclear" => Ok(Variant::Nuclear),
            other => Err(invalid(format!("unknown variant '{other}' (expected toeplitz|nuclear)"))),
        }
    }
}

/// A `2n×2n` matrix with named `n×n` block views.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix2n {
    n: usize,
    data: CMat,
}

impl BlockMatrix2n {
    pub fn new(data: CMat) -> Result<Self> {
        let size = check_square(data.as_ref(), "block matrix")?;
        if size % 2 != 0 {
            return Err(invalid(format!("block matrix must have even size, got {size}")));
        }
        Ok(Self { n: size / 2, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tl(&self) -> MatRef<'_, c64> {
        self.data.as_ref().submatrix(0, 0, self.n, self.n)
    }

    pub fn tr(&self) -> MatRef<'_, c64> {
        self.data.as_ref().submatrix(0, self.n, self.n, self.n)
    }

    pub fn bl(&self) -> MatRef<'_, c64> {
        self.data.as_ref().submatrix(self.n, 0, self.n, self.n)
    }

    pub fn br(&self) -> MatRef<'_, c64> {
        self.data.as_ref().submatrix(self.n, self.n, self.n, self.n)
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn into_inner(self) -> CMat {
        self.data
    }
}

/// `(A + Aᴴ)/2`.
pub fn symmetrize(a: MatRef<'_, c64>) -> Result<CMat> {
    let n = check_square(a, "matrix")?;
    let mut out = CMat::zeros(n, n);
    symmetrize_into(a, out.as_mut());
    Ok(out)
}

fn symmetrize_into(a: MatRef<'_, c64>, mut out: MatMut<'_, c64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in j..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
}

/// `argmin_{M ⪰ 0} trace(M) + (ρ/2)‖M − A‖²_F`.
///
/// Eigendecomposes `A − I/ρ` and clips negative eigenvalues. Only the lower
/// triangle of `A` is read, so callers symmetrize first.
pub fn psd_trace_prox(a: MatRef<'_, c64>, rho: f64) -> Result<CMat> {
    let n = check_square(a, "matrix")?;
    if rho.is_nan() || rho <= 0.0 {
        return Err(invalid(format!("rho must be positive, got {rho}")));
    }
    let (values, vectors) = hermitian_eigen(a)?;
    let shift = 1.0 / rho;
    let keep: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| (l - shift > 0.0).then_some((i, (l - shift).sqrt())))
        .collect();
    if keep.is_empty() {
        return Ok(CMat::zeros(n, n));
    }
    let w = CMat::from_fn(n, keep.len(), |i, c| {
        let (col, scale) = keep[c];
        vectors[(i, col)] * scale
    });
    let prod = &w * w.adjoint();
    let mut out = CMat::zeros(n, n);
    symmetrize_into(prod.as_ref(), out.as_mut());
    Ok(out)
}

/// Replaces every diagonal of `b` by its mean: the Frobenius projection onto
/// the Toeplitz subspace.
pub fn toeplitz_project(b: MatRef<'_, c64>) -> Result<CMat> {
    let n = check_square(b, "matrix")?;
    let mut out = CMat::zeros(n, n);
    toeplitz_project_into(b, out.as_mut());
    Ok(out)
}

fn toeplitz_project_into(b: MatRef<'_, c64>, mut out: MatMut<'_, c64>) {
    let n = b.nrows();
    // Entries are walked from the top of each diagonal, so diagonals d and -d of
    // a Hermitian input sum to exact conjugates.
    for d in 0..n {
        let len = n - d;
        let (mut lower, mut upper) = (c64::new(0.0, 0.0), c64::new(0.0, 0.0));
        for t in 0..len {
            lower += b[(d + t, t)];
            upper += b[(t, d + t)];
        }
        let (lower, upper) = (lower / len as f64, upper / len as f64);
        for t in 0..len {
            out[(d + t, t)] = lower;
            out[(t, d + t)] = upper;
        }
    }
}

/// Overwrites the observed positions of `x` with the observed values.
pub fn data_consistency(x: MatRef<'_, c64>, obs: &ObservationSet) -> Result<CMat> {
    let n = check_square(x, "signal block")?;
    if obs.n() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}x{n} observations"),
            got: format!("{0}x{0}", obs.n()),
        });
    }
    let mut out = x.to_owned();
    for (j, k, v) in obs.iter() {
        out[(j, k)] = v;
    }
    Ok(out)
}

/// Nearest point (Frobenius) to `symmetrize(a)` in the feasible affine set:
/// Hermitian, `TR` consistent with the observations, and Toeplitz `TL`/`BR`
/// when `variant` is [`Variant::Toeplitz`].
pub fn feasible_project(
    a: MatRef<'_, c64>,
    obs: &ObservationSet,
    variant: Variant,
) -> Result<BlockMatrix2n> {
    let size = check_square(a, "block matrix")?;
    if size % 2 != 0 || size / 2 != obs.n() {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0}", 2 * obs.n()),
            got: format!("{size}x{size}"),
        });
    }
    let n = size / 2;
    let mut out = CMat::zeros(size, size);
    symmetrize_into(a, out.as_mut());
    if variant == Variant::Toeplitz {
        let tl = out.as_ref().submatrix(0, 0, n, n).to_owned();
        toeplitz_project_into(tl.as_ref(), out.as_mut().submatrix_mut(0, 0, n, n));
        let br = out.as_ref().submatrix(n, n, n, n).to_owned();
        toeplitz_project_into(br.as_ref(), out.as_mut().submatrix_mut(n, n, n, n));
    }
    for (j, k, v) in obs.iter() {
        out[(j, n + k)] = v;
    }
    for k in 0..n {
        for j in 0..n {
            out[(n + k, j)] = out[(j, n + k)].conj();
        }
    }
    Ok(BlockMatrix2n { n, data: out })
}

/// How far a `2n×2n` matrix is from the feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// `‖N − Nᴴ‖_F / max(‖N‖_F, 1)`.
    pub hermitian_defect: f64,
    /// Largest deviation of a `TL`/`BR` entry from the first entry of its diagonal
    /// (zero for the nuclear variant).
    pub toeplitz_defect: f64,
    /// Observed positions whose `TR` value differs bitwise from the observation.
    pub data_mismatches: usize,
}

impl FeasibilityReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.hermitian_defect <= tol && self.toeplitz_defect <= tol && self.data_mismatches == 0
    }
}

fn toeplitz_defect(b: MatRef<'_, c64>) -> f64 {
    let n = b.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let head = if i >= j { b[(i - j, 0)] } else { b[(0, j - i)] };
            worst = worst.max((b[(i, j)] - head).norm());
        }
    }
    worst
}

pub fn feasibility_report(
    a: MatRef<'_, c64>,
    obs: &ObservationSet,
    variant: Variant,
) -> Result<FeasibilityReport> {
    let size = check_square(a, "block matrix")?;
    if size != 2 * obs.n() {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0}", 2 * obs.n()),
            got: format!("{size}x{size}"),
        });
    }
    let n = obs.n();
    let toeplitz = match variant {
        Variant::Toeplitz => toeplitz_defect(a.submatrix(0, 0, n, n))
            .max(toeplitz_defect(a.submatrix(n, n, n, n))),
        Variant::Nuclear => 0.0,
    };
    let data_mismatches = obs
        .iter()
        .filter(|&(j, k, v)| a[(j, n + k)] != v)
        .count();
    Ok(FeasibilityReport {
        hermitian_defect: hermitian_defect(a) / fro_norm(a).max(1.0),
        toeplitz_defect: toeplitz,
        data_mismatches,
    })
}

/// `true` when `a` is Hermitian and Toeplitz-structured to `tol` and matches every observation bitwise.
pub fn is_feasible(a: MatRef<'_, c64>, obs: &ObservationSet, variant: Variant, tol: f64) -> bool {
    feasibility_report(a, obs, variant).is_ok_and(|r| r.is_feasible(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_dist_sq, hermitian_eigenvalues, inner_re, trace_re};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_fn(vals.len(), vals.len(), |i, j| if i == j { cx(vals[i], 0.0) } else { cx(0.0, 0.0) })
    }

    #[test]
    fn symmetrize_examples() {
        let a = CMat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
        let s = symmetrize(a.as_ref()).unwrap();
        assert_eq!(s[(0, 1)], cx(0.5, 0.0));
        assert_eq!(s[(1, 0)], cx(0.5, 0.0));
        assert_eq!(s[(0, 0)], cx(0.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = symmetrize(random_mat(&mut rng, 5, 5).as_ref()).unwrap();
        assert_eq!(symmetrize(h.as_ref()).unwrap(), h);
        assert_eq!(hermitian_defect(h.as_ref()), 0.0);
        assert!(symmetrize(CMat::zeros(2, 3).as_ref()).is_err());
    }

    #[test]
    fn prox_diagonal_examples() {
        let m = psd_trace_prox(diag(&[3.0, -1.0]).as_ref(), 1.0).unwrap();
        assert!(fro_dist_sq(m.as_ref(), diag(&[2.0, 0.0]).as_ref()) < 1e-24);
        let m = psd_trace_prox(diag(&[5.0, 5.0]).as_ref(), 1.0).unwrap();
        assert!(fro_dist_sq(m.as_ref(), diag(&[4.0, 4.0]).as_ref()) < 1e-24);
        assert!(psd_trace_prox(diag(&[1.0]).as_ref(), 0.0).is_err());
    }

    #[test]
    fn prox_beats_random_psd_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = 0.1;
        let a = symmetrize((&random_mat(&mut rng, 3, 3) * faer::Scale(cx(40.0, 0.0))).as_ref()).unwrap();
        let m = psd_trace_prox(a.as_ref(), rho).unwrap();
        let objective = |x: &CMat| trace_re(x.as_ref()) + 0.5 * rho * fro_dist_sq(x.as_ref(), a.as_ref());
        let best = objective(&m);
        for _ in 0..10_000 {
            let g = random_mat(&mut rng, 3, 3);
            let scale: f64 = rng.random::<f64>() * 0.5;
            let cand = &m + &g * g.adjoint() * faer::Scale(cx(scale, 0.0));
            // PSD candidates of the form M + εGGᴴ and a shrink toward zero.
            assert!(objective(&cand) >= best - 1e-9);
            let shrink = &m * faer::Scale(cx(1.0 - scale, 0.0));
            assert!(objective(&shrink) >= best - 1e-9);
        }
    }

    #[test]
    fn prox_spectrum_is_shifted_and_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = symmetrize((&random_mat(&mut rng, 6, 6) * faer::Scale(cx(30.0, 0.0))).as_ref()).unwrap();
            let rho = 0.1 + rng.random::<f64>();
            let m = psd_trace_prox(a.as_ref(), rho).unwrap();
            let mut expect: Vec<f64> = hermitian_eigenvalues(a.as_ref())
                .unwrap()
                .into_iter()
                .map(|l| (l - 1.0 / rho).max(0.0))
                .collect();
            expect.sort_by(f64::total_cmp);
            let got = hermitian_eigenvalues(m.as_ref()).unwrap();
            for (g, e) in got.iter().zip(&expect) {
                assert!((g - e).abs() < 1e-9, "{got:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn toeplitz_examples() {
        let (a, b, c, d) = (cx(1.0, 2.0), cx(3.0, 0.0), cx(-1.0, 1.0), cx(5.0, -2.0));
        let m = CMat::from_fn(2, 2, |i, j| [[a, b], [c, d]][i][j]);
        let t = toeplitz_project(m.as_ref()).unwrap();
        assert_eq!(t[(0, 0)], (a + d) / 2.0);
        assert_eq!(t[(1, 1)], (a + d) / 2.0);
        assert_eq!(t[(0, 1)], b);
        assert_eq!(t[(1, 0)], c);
        assert_eq!(toeplitz_project(t.as_ref()).unwrap(), t);
    }

    #[test]
    fn toeplitz_residual_orthogonal_to_toeplitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..8 {
            let b = random_mat(&mut rng, n, n);
            let p = toeplitz_project(b.as_ref()).unwrap();
            let resid = &b - &p;
            let z = toeplitz_project(random_mat(&mut rng, n, n).as_ref()).unwrap();
            assert!(inner_re(resid.as_ref(), z.as_ref()).abs() < 1e-10);
            let iz = &z * faer::Scale(cx(0.0, 1.0));
            assert!(inner_re(resid.as_ref(), iz.as_ref()).abs() < 1e-10);
        }
    }

    #[test]
    fn data_consistency_examples() {
        let x = CMat::from_fn(3, 3, |i, j| cx(i as f64, j as f64));
        let empty = ObservationSet::empty(3);
        assert_eq!(data_consistency(x.as_ref(), &empty).unwrap(), x);

        let full_vals = CMat::from_fn(3, 3, |i, j| cx(10.0 + i as f64, -(j as f64)));
        let full = ObservationSet::full(full_vals.as_ref());
        assert_eq!(data_consistency(x.as_ref(), &full).unwrap(), full_vals);

        let single = ObservationSet::new(3, vec![(0, 0, cx(7.0, 0.0))]).unwrap();
        let out = data_consistency(CMat::zeros(3, 3).as_ref(), &single).unwrap();
        let nonzero: Vec<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| out[(i, j)] != cx(0.0, 0.0))
            .collect();
        assert_eq!(nonzero, vec![(0, 0)]);
        assert_eq!(out[(0, 0)], cx(7.0, 0.0));
        let twice = data_consistency(out.as_ref(), &single).unwrap();
        assert_eq!(twice, out);

        assert!(data_consistency(CMat::zeros(2, 2).as_ref(), &single).is_err());
    }

    fn observed(n: usize, rng: &mut ChaCha8Rng, m: usize) -> ObservationSet {
        let vals = random_mat(rng, n, n);
        let mut entries = Vec::new();
        for f in rand::seq::index::sample(rng, n * n, m) {
            entries.push((f / n, f % n, vals[(f / n, f % n)]));
        }
        ObservationSet::new(n, entries).unwrap()
    }

    #[test]
    fn feasible_project_fixed_point_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let obs = observed(4, &mut rng, 6);
        let a = random_mat(&mut rng, 8, 8);
        for variant in [Variant::Toeplitz, Variant::Nuclear] {
            let p = feasible_project(a.as_ref(), &obs, variant).unwrap();
            assert!(is_feasible(p.as_ref(), &obs, variant, 1e-12));
            let q = feasible_project(p.as_ref(), &obs, variant).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn nuclear_leaves_diagonal_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let obs = observed(3, &mut rng, 4);
        let a = symmetrize(random_mat(&mut rng, 6, 6).as_ref()).unwrap();
        let p = feasible_project(a.as_ref(), &obs, Variant::Nuclear).unwrap();
        assert_eq!(p.tl(), a.as_ref().submatrix(0, 0, 3, 3));
        assert_eq!(p.br(), a.as_ref().submatrix(3, 3, 3, 3));
        for (j, k, v) in obs.iter() {
            assert_eq!(p.tr()[(j, k)], v);
        }
    }

    #[test]
    fn feasible_project_rejects_bad_shapes() {
        let obs = ObservationSet::empty(3);
        assert!(feasible_project(CMat::zeros(5, 5).as_ref(), &obs, Variant::Toeplitz).is_err());
        assert!(feasible_project(CMat::zeros(8, 8).as_ref(), &obs, Variant::Toeplitz).is_err());
        assert!(BlockMatrix2n::new(CMat::zeros(3, 3)).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("Toeplitz".parse::<Variant>().unwrap(), Variant::Toeplitz);
        assert_eq!("nuclear".parse::<Variant>().unwrap(), Variant::Nuclear);
        assert!("hankel".parse::<Variant>().is_err());
        assert_eq!(Variant::Nuclear.to_string(), "nuclear");
    }
}
