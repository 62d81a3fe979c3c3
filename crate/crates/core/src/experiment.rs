//! Monte-Carlo experiments: single trials, `(m, s)` phase-transition grids,
//! runtime benchmarks and their CSV/PGM outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admm::{solve, RecoveryResult, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::projections::Variant;
use crate::signal::{sample_observations, synth_random, ObservationSet};

/// Recovery counts as successful at or below this relative Frobenius error.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

/// `(n, m)` rows of the published runtime comparison, all with `s = 5`.
pub const BENCH_SIZES: [(usize, usize); 9] = [
    (15, 80),
    (16, 90),
    (17, 100),
    (18, 110),
    (19, 120),
    (20, 130),
    (21, 140),
    (22, 150),
    (23, 160),
];

/// Published timings in seconds for the rows of [`BENCH_SIZES`]:
/// `(vectorized SDP via CVX, this SDP via CVX, this SDP via ADMM)`.
/// `None` marks a run that crashed.
pub const BENCH_REFERENCE: [(Option<f64>, f64, f64); 9] = [
    (Some(38.52), 0.55, 0.050),
    (Some(60.57), 0.26, 0.059),
    (Some(103.47), 0.29, 0.060),
    (Some(161.27), 0.49, 0.063),
    (Some(239.09), 0.39, 0.064),
    (Some(363.61), 0.43, 0.074),
    (Some(534.03), 0.68, 0.072),
    (Some(850.19), 0.54, 0.076),
    (None, 0.60, 0.087),
];

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable seed for one grid trial.
pub fn trial_seed(base_seed: u64, m: usize, s: usize, trial: usize) -> u64 {
    [m as u64, s as u64, trial as u64]
        .into_iter()
        .fold(mix(base_seed), |acc, v| mix(acc ^ v))
}

/// Seeds for the signal and the observation draw of a trial.
pub fn derive_seeds(seed: u64) -> (u64, u64) {
    (mix(seed ^ 0x5349_474e), mix(seed ^ 0x4f42_5353))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub success: bool,
    pub result: RecoveryResult,
}

/// Synthesizes a signal and `m` observations from `seed`, solves, and scores.
pub fn run_trial(n: usize, s: usize, m: usize, seed: u64, cfg: &SolverConfig) -> Result<TrialOutcome> {
    if m == 0 || m > n * n {
        return Err(invalid(format!("need 1 <= m <= n^2 = {}, got m={m}", n * n)));
    }
    let (sig_seed, obs_seed) = derive_seeds(seed);
    let signal = synth_random(n, s, sig_seed)?;
    let obs: ObservationSet = sample_observations(&signal, m, obs_seed)?;
    let result = solve(&obs, cfg, Some(&signal))?;
    let success = result.rel_error.is_some_and(|e| e <= SUCCESS_THRESHOLD);
    Ok(TrialOutcome { seed, success, result })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseGridSpec {
    pub n: usize,
    pub m_values: Vec<usize>,
    pub s_values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub variant: Variant,
}

impl Default for PhaseGridSpec {
    fn default() -> Self {
        Self {
            n: 50,
            m_values: (1..=25).map(|i| 50 * i).collect(),
            s_values: (1..=20).collect(),
            trials: 20,
            base_seed: 0,
            variant: Variant::Toeplitz,
        }
    }
}

impl PhaseGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 {
            return Err(invalid("n and trials must be at least 1"));
        }
        if self.m_values.is_empty() || self.s_values.is_empty() {
            return Err(invalid("grid axes must be nonempty"));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m == 0 || m > self.n * self.n) {
            return Err(invalid(format!("m={m} outside [1, n^2]")));
        }
        if let Some(&s) = self.s_values.iter().find(|&&s| s == 0 || (s > 1 && 2 * s > self.n)) {
            return Err(Error::InfeasibleSeparation { n: self.n, s });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub m: usize,
    pub s: usize,
    pub successes: usize,
    pub mean_rel_error: f64,
    pub mean_iters: f64,
    pub mean_wall_time: f64,
    /// Trials that aborted with a divergence error (counted as failures).
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGridResult {
    pub spec: PhaseGridSpec,
    /// `counts[i][j]` = successes at `(m_values[i], s_values[j])`.
    pub counts: Vec<Vec<usize>>,
    /// Row-major over `(m, s)`.
    pub cells: Vec<CellStats>,
}

impl PhaseGridResult {
    pub fn count(&self, m: usize, s: usize) -> Option<usize> {
        let i = self.spec.m_values.iter().position(|&v| v == m)?;
        let j = self.spec.s_values.iter().position(|&v| v == s)?;
        Some(self.counts[i][j])
    }

    /// Fraction of adjacent `m` pairs (per `s` column) whose success count does not drop.
    pub fn monotone_fraction(&self) -> f64 {
        let mut total = 0usize;
        let mut ok = 0usize;
        for j in 0..self.spec.s_values.len() {
            for w in self.counts.windows(2) {
                total += 1;
                ok += usize::from(w[1][j] >= w[0][j]);
            }
        }
        if total == 0 {
            1.0
        } else {
            ok as f64 / total as f64
        }
    }
}

/// Fraction of cells where `better` has at least as many successes as `worse`.
pub fn dominance_fraction(better: &PhaseGridResult, worse: &PhaseGridResult) -> Result<f64> {
    if better.spec.m_values != worse.spec.m_values || better.spec.s_values != worse.spec.s_values {
        return Err(invalid("grids have different axes"));
    }
    let cells = better.counts.iter().flatten().zip(worse.counts.iter().flatten());
    let (mut total, mut ok) = (0usize, 0usize);
    for (b, w) in cells {
        total += 1;
        ok += usize::from(b >= w);
    }
    Ok(ok as f64 / total.max(1) as f64)
}

enum TrialRecord {
    Done(TrialOutcome),
    Diverged,
}

fn run_grid_trial(spec: &PhaseGridSpec, cfg: &SolverConfig, job: (usize, usize, usize)) -> Result<TrialRecord> {
    let (mi, si, t) = job;
    let (m, s) = (spec.m_values[mi], spec.s_values[si]);
    let seed = trial_seed(spec.base_seed, m, s, t);
    match run_trial(spec.n, s, m, seed, cfg) {
        Ok(out) => Ok(TrialRecord::Done(out)),
        Err(Error::Diverged { .. }) => Ok(TrialRecord::Diverged),
        Err(e) => Err(e),
    }
}

/// Runs every `(m, s, trial)` combination and aggregates success counts.
///
/// `jobs = Some(k)` runs on a dedicated pool of `k` threads, `None` on the
/// global pool. The variant in `spec` overrides `cfg.variant`.
pub fn run_phase_grid(spec: &PhaseGridSpec, cfg: &SolverConfig) -> Result<PhaseGridResult> {
    run_phase_grid_with_jobs(spec, cfg, None)
}

pub fn run_phase_grid_with_jobs(
    spec: &PhaseGridSpec,
    cfg: &SolverConfig,
    jobs: Option<usize>,
) -> Result<PhaseGridResult> {
    spec.validate()?;
    let cfg = SolverConfig { variant: spec.variant, ..*cfg };
    let (nm, ns, nt) = (spec.m_values.len(), spec.s_values.len(), spec.trials);
    let work: Vec<(usize, usize, usize)> = (0..nm)
        .flat_map(|mi| (0..ns).flat_map(move |si| (0..nt).map(move |t| (mi, si, t))))
        .collect();

    let records = execute(&work, jobs, |job| run_grid_trial(spec, &cfg, job))?;

    let mut counts = vec![vec![0usize; ns]; nm];
    let mut cells = Vec::with_capacity(nm * ns);
    for (cell, chunk) in records.chunks(nt).enumerate() {
        let (mi, si) = (cell / ns, cell % ns);
        let mut stats = CellStats {
            m: spec.m_values[mi],
            s: spec.s_values[si],
            successes: 0,
            mean_rel_error: 0.0,
            mean_iters: 0.0,
            mean_wall_time: 0.0,
            diverged: 0,
        };
        let mut finished = 0usize;
        for rec in chunk {
            match rec {
                TrialRecord::Done(out) => {
                    finished += 1;
                    stats.successes += usize::from(out.success);
                    stats.mean_rel_error += out.result.rel_error.unwrap_or(f64::NAN);
                    stats.mean_iters += out.result.iters as f64;
                    stats.mean_wall_time += out.result.wall_time;
                }
                TrialRecord::Diverged => stats.diverged += 1,
            }
        }
        if finished > 0 {
            let k = finished as f64;
            stats.mean_rel_error /= k;
            stats.mean_iters /= k;
            stats.mean_wall_time /= k;
        } else {
            stats.mean_rel_error = f64::NAN;
        }
        counts[mi][si] = stats.successes;
        cells.push(stats);
    }
    Ok(PhaseGridResult { spec: PhaseGridSpec { variant: cfg.variant, ..spec.clone() }, counts, cells })
}

/// Maps `f` over `work` preserving order, in parallel when available.
#[cfg(feature = "parallel")]
fn execute<J, T, F>(work: &[J], jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    J: Copy + Send + Sync,
    T: Send,
    F: Fn(J) -> Result<T> + Send + Sync,
{
    use rayon::prelude::*;
    let run = || work.par_iter().map(|&j| f(j)).collect::<Result<Vec<T>>>();
    match jobs {
        Some(1) => work.iter().map(|&j| f(j)).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn execute<J, T, F>(work: &[J], _jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    J: Copy,
    F: Fn(J) -> Result<T>,
{
    work.iter().map(|&j| f(j)).collect()
}

/// `(m, successes)` for each level visited by [`locate_boundary`].
pub type Sweep = Vec<(usize, usize)>;

/// Smallest `m` in `m_candidates` (ascending) at which all `trials` succeed.
pub fn locate_boundary(
    n: usize,
    s: usize,
    m_candidates: &[usize],
    trials: usize,
    base_seed: u64,
    cfg: &SolverConfig,
) -> Result<Option<(usize, Sweep)>> {
    let mut sweep = Vec::new();
    for &m in m_candidates {
        let spec = PhaseGridSpec {
            n,
            m_values: vec![m],
            s_values: vec![s],
            trials,
            base_seed,
            variant: cfg.variant,
        };
        let count = run_phase_grid(&spec, cfg)?.counts[0][0];
        sweep.push((m, count));
        if count == trials {
            return Ok(Some((m, sweep)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub seed: u64,
    pub wall_time: f64,
    pub rel_error: f64,
    pub iters: usize,
    pub converged: bool,
    pub success: bool,
}

/// One timed solve per `(n, m)`; the seed of row `i` is `trial_seed(seed, m, s, i)`.
pub fn run_bench(sizes: &[(usize, usize)], s: usize, cfg: &SolverConfig, seed: u64) -> Result<Vec<BenchRow>> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &(n, m))| {
            let row_seed = trial_seed(seed, m, s, i);
            let out = run_trial(n, s, m, row_seed, cfg)?;
            Ok(BenchRow {
                n,
                m,
                s,
                seed: row_seed,
                wall_time: out.result.wall_time,
                rel_error: out.result.rel_error.unwrap_or(f64::NAN),
                iters: out.result.iters,
                converged: out.result.converged,
                success: out.success,
            })
        })
        .collect()
}

/// Bench table as CSV; rows matching the published sizes carry the reference timings.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,m,s,wall_time_s,rel_error,iters,converged,success,reference_admm_s,reference_prior_s\n");
    for r in rows {
        let reference = BENCH_SIZES
            .iter()
            .position(|&nm| nm == (r.n, r.m))
            .map(|i| BENCH_REFERENCE[i]);
        let (admm, prior) = match reference {
            Some((prior, _, admm)) => (
                admm.to_string(),
                prior.map_or_else(|| "crashed".to_string(), |p| p.to_string()),
            ),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{:.6},{:e},{},{},{},{},{}\n",
            r.n, r.m, r.s, r.wall_time, r.rel_error, r.iters, r.converged, r.success, admm, prior
        ));
    }
    out
}

/// Counts matrix as CSV: header row of `s` values, one row per `m`.
pub fn counts_csv(result: &PhaseGridResult) -> String {
    let mut out = String::from("m\\s");
    for s in &result.spec.s_values {
        out.push_str(&format!(",{s}"));
    }
    out.push('\n');
    for (m, row) in result.spec.m_values.iter().zip(&result.counts) {
        out.push_str(&m.to_string());
        for c in row {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

/// Binary PGM (P5): rows are `m` ascending, columns `s` ascending, gray = count/trials.
pub fn phase_pgm(result: &PhaseGridResult) -> Vec<u8> {
    let trials = result.spec.trials;
    let (h, w) = (result.counts.len(), result.spec.s_values.len());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in &result.counts {
        for &c in row {
            // round half up of 255·c/trials
            out.push(((510 * c + trials) / (2 * trials)).min(255) as u8);
        }
    }
    out
}

/// Writes `<path>.csv` and `<path>.pgm`; returns both paths.
pub fn emit_phase_plot(result: &PhaseGridResult, path: &Path) -> Result<(PathBuf, PathBuf)> {
    if result.counts.is_empty() || result.spec.s_values.is_empty() {
        return Err(invalid("empty phase grid"));
    }
    let csv = path.with_extension("csv");
    let pgm = path.with_extension("pgm");
    fs::write(&csv, counts_csv(result))?;
    fs::write(&pgm, phase_pgm(result))?;
    Ok((csv, pgm))
}

/// Per-cell statistics as CSV.
pub fn cells_csv(result: &PhaseGridResult) -> String {
    let mut out = String::from("m,s,successes,trials,mean_rel_error,mean_iters,mean_wall_time_s,diverged\n");
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:.1},{:.6},{}\n",
            c.m, c.s, c.successes, result.spec.trials, c.mean_rel_error, c.mean_iters, c.mean_wall_time, c.diverged
        ));
    }
    out
}
