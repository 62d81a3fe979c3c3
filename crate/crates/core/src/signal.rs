//! Spectrally sparse 2D signals: synthesis, evaluation, sampling and comparison.

use std::collections::HashSet;
use std::f64::consts::TAU;

use faer::MatRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::fro_norm;
use crate::{c64, CMat};

/// Default number of rejection-sampling attempts per frequency axis.
pub const DEFAULT_SAMPLING_BUDGET: usize = 100_000;

/// A 2D frequency in cycles per sample, each component in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPair {
    pub f1: f64,
    pub f2: f64,
}

impl FrequencyPair {
    pub fn new(f1: f64, f2: f64) -> Result<Self> {
        let ok = |f: f64| (0.0..1.0).contains(&f);
        if !ok(f1) || !ok(f2) {
            return Err(invalid(format!("frequency ({f1}, {f2}) outside [0,1)^2")));
        }
        Ok(Self { f1, f2 })
    }
}

/// Ground-truth parameters of a superposition of `s` 2D complex sinusoids on an `n×n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    n: usize,
    freqs: Vec<FrequencyPair>,
    coeffs: Vec<c64>,
}

impl SpectralSignal {
    /// Checks `1 ≤ s ≤ n`, equal list lengths and frequency ranges.
    pub fn new(n: usize, freqs: Vec<FrequencyPair>, coeffs: Vec<c64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if freqs.len() != coeffs.len() {
            return Err(invalid(format!(
                "{} frequencies but {} coefficients",
                freqs.len(),
                coeffs.len()
            )));
        }
        if freqs.is_empty() || freqs.len() > n {
            return Err(invalid(format!("need 1 <= s <= n, got s={} n={n}", freqs.len())));
        }
        for f in &freqs {
            FrequencyPair::new(f.f1, f.f2)?;
        }
        Ok(Self { n, freqs, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.freqs.len()
    }

    pub fn freqs(&self) -> &[FrequencyPair] {
        &self.freqs
    }

    pub fn coeffs(&self) -> &[c64] {
        &self.coeffs
    }

    /// The dense `n×n` samples `X★`.
    pub fn dense(&self) -> CMat {
        evaluate_unchecked(&self.freqs, &self.coeffs, self.n)
    }

    /// Per-axis minimum separation of the frequencies.
    pub fn min_separation(&self) -> f64 {
        min_separation(&self.freqs)
    }

    /// The Vandermonde factors `(V1, V2)` with `X★ = V1·diag(c)·V2ᴴ`.
    /// `V2` carries negative exponents so that `V2ᴴ` restores the positive ones.
    pub fn vandermonde_factors(&self) -> (CMat, CMat) {
        let (n, s) = (self.n, self.s());
        let v1 = CMat::from_fn(n, s, |j, p| cis(self.freqs[p].f1 * j as f64));
        let v2 = CMat::from_fn(n, s, |k, p| cis(-self.freqs[p].f2 * k as f64));
        (v1, v2)
    }
}

/// `exp(i·2π·x)`.
#[inline]
pub(crate) fn cis(x: f64) -> c64 {
    let (sin, cos) = (TAU * x).sin_cos();
    c64::new(cos, sin)
}

/// Evaluates `Σ_p c_p exp(i2π(f_p1·j + f_p2·k))` for `0 ≤ j,k < n`.
pub fn evaluate_signal(freqs: &[FrequencyPair], coeffs: &[c64], n: usize) -> Result<CMat> {
    if freqs.len() != coeffs.len() {
        return Err(invalid(format!(
            "{} frequencies but {} coefficients",
            freqs.len(),
            coeffs.len()
        )));
    }
    if freqs.is_empty() {
        return Err(invalid("at least one component is required"));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    Ok(evaluate_unchecked(freqs, coeffs, n))
}

fn evaluate_unchecked(freqs: &[FrequencyPair], coeffs: &[c64], n: usize) -> CMat {
    let mut out = CMat::zeros(n, n);
    let mut row = vec![c64::new(0.0, 0.0); n];
    let mut col = vec![c64::new(0.0, 0.0); n];
    for (f, &c) in freqs.iter().zip(coeffs) {
        for (j, r) in row.iter_mut().enumerate() {
            *r = c * cis(f.f1 * j as f64);
        }
        for (k, v) in col.iter_mut().enumerate() {
            *v = cis(f.f2 * k as f64);
        }
        for k in 0..n {
            for j in 0..n {
                out[(j, k)] += row[j] * col[k];
            }
        }
    }
    out
}

/// `min_{p≠q} min(|f_p1 − f_q1|, |f_p2 − f_q2|)`, plain absolute differences (no wrap-around).
/// Returns `+∞` for fewer than two frequencies.
pub fn min_separation(freqs: &[FrequencyPair]) -> f64 {
    let mut best = f64::INFINITY;
    for (p, a) in freqs.iter().enumerate() {
        for b in &freqs[p + 1..] {
            best = best.min((a.f1 - b.f1).abs()).min((a.f2 - b.f2).abs());
        }
    }
    best
}

fn admissible(n: usize, s: usize) -> bool {
    s >= 1 && (s == 1 || 2 * s <= n)
}

/// Draws `s` values uniformly on `[0,1)` until their minimum pairwise gap is at least `sep`.
fn draw_separated_axis(rng: &mut ChaCha8Rng, s: usize, sep: f64, budget: usize) -> Option<Vec<f64>> {
    let mut sorted = vec![0.0; s];
    for _ in 0..budget {
        let draw: Vec<f64> = (0..s).map(|_| rng.random::<f64>()).collect();
        sorted.copy_from_slice(&draw);
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] >= sep) {
            return Some(draw);
        }
    }
    None
}

/// Random signal with `Δ_min ≥ 1/n`, amplitudes `0.5 + w²` (`w ~ N(0,1)`) and uniform phases.
pub fn synth_random(n: usize, s: usize, seed: u64) -> Result<SpectralSignal> {
    synth_random_with_budget(n, s, seed, DEFAULT_SAMPLING_BUDGET)
}

/// [`synth_random`] with an explicit per-axis rejection budget.
///
/// The separation condition factors into one condition per axis, so each axis is
/// rejection-sampled on its own; the accepted distribution is the same as
/// rejecting whole frequency sets.
pub fn synth_random_with_budget(
    n: usize,
    s: usize,
    seed: u64,
    budget: usize,
) -> Result<SpectralSignal> {
    if n == 0 || !admissible(n, s) {
        return Err(Error::InfeasibleSeparation { n, s });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sep = 1.0 / n as f64;
    let exceeded = || Error::SamplingBudgetExceeded { n, s, attempts: budget };
    let axis1 = draw_separated_axis(&mut rng, s, sep, budget).ok_or_else(exceeded)?;
    let axis2 = draw_separated_axis(&mut rng, s, sep, budget).ok_or_else(exceeded)?;
    let freqs = axis1
        .into_iter()
        .zip(axis2)
        .map(|(f1, f2)| FrequencyPair { f1, f2 })
        .collect();
    let coeffs = (0..s)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            let amplitude = 0.5 + w * w;
            let phase = rng.random::<f64>() * TAU;
            c64::from_polar(amplitude, phase)
        })
        .collect();
    SpectralSignal::new(n, freqs, coeffs)
}

/// A set of distinct observed grid positions with their complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n: usize,
    indices: Vec<(usize, usize)>,
    values: Vec<c64>,
}

impl ObservationSet {
    /// Validates range and distinctness of the indices.
    pub fn new(n: usize, entries: Vec<(usize, usize, c64)>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (j, k, v) in entries {
            if j >= n || k >= n {
                return Err(invalid(format!("index ({j}, {k}) out of range for n={n}")));
            }
            if !seen.insert((j, k)) {
                return Err(invalid(format!("duplicate index ({j}, {k})")));
            }
            indices.push((j, k));
            values.push(v);
        }
        Ok(Self { n, indices, values })
    }

    /// No observed entries.
    pub fn empty(n: usize) -> Self {
        Self { n, indices: Vec::new(), values: Vec::new() }
    }

    /// Every entry of `x` observed.
    pub fn full(x: MatRef<'_, c64>) -> Self {
        let n = x.nrows();
        let mut indices = Vec::with_capacity(n * n);
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                indices.push((j, k));
                values.push(x[(j, k)]);
            }
        }
        Self { n, indices, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&(j, k), &v)| (j, k, v))
    }

    /// Observed entries on a zero `n×n` background.
    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (j, k, v) in self.iter() {
            out[(j, k)] = v;
        }
        out
    }
}

/// Draws `m` distinct entries of the signal uniformly without replacement.
/// Indices come back in row-major order.
pub fn sample_observations(signal: &SpectralSignal, m: usize, seed: u64) -> Result<ObservationSet> {
    let dense = signal.dense();
    sample_from_dense(dense.as_ref(), m, seed)
}

/// [`sample_observations`] on an already evaluated matrix.
pub fn sample_from_dense(dense: MatRef<'_, c64>, m: usize, seed: u64) -> Result<ObservationSet> {
    let n = dense.nrows();
    if m == 0 || m > n * n {
        return Err(invalid(format!("need 1 <= m <= n^2 = {}, got m={m}", n * n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = rand::seq::index::sample(&mut rng, n * n, m).into_vec();
    flat.sort_unstable();
    let indices: Vec<_> = flat.into_iter().map(|f| (f / n, f % n)).collect();
    let values = indices.iter().map(|&(j, k)| dense[(j, k)]).collect();
    Ok(ObservationSet { n, indices, values })
}

/// `‖rec − truth‖_F / ‖truth‖_F`.
pub fn relative_error(rec: MatRef<'_, c64>, truth: MatRef<'_, c64>) -> Result<f64> {
    if rec.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", truth.nrows(), truth.ncols()),
            got: format!("{}x{}", rec.nrows(), rec.ncols()),
        });
    }
    let denom = fro_norm(truth);
    if denom == 0.0 {
        return Err(invalid("reference matrix has zero norm"));
    }
    Ok(fro_norm((rec - truth).as_ref()) / denom)
}
