//! ADMM for the Toeplitz-constrained trace-minimization SDP.
//!
//! The problem is split as
//!
//! ```text
//! minimize trace(M)  s.t.  M ⪰ 0,  N ∈ F,  M − N = 0
//! ```
//!
//! where `F` is the feasible affine set of [`feasible_project`]. Each step runs
//!
//! ```text
//! M ← prox_{trace, M⪰0}(N − U)
//! N ← Π_F(M + U)
//! U ← U + M − N
//! ```
//!
//! and stops once the primal residual `‖M − N‖_F` and the dual residual
//! `ρ‖N_prev − N‖_F` drop below `2n·ε_abs + ε_rel·(scale)`.
//!
//! With `accelerate` set, `(N, U)` are extrapolated with Nesterov momentum and the
//! momentum is dropped whenever the combined residual fails to shrink by
//! `restart_eta`.

use faer::MatRef;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{invalid, Error, Result};
use crate::linalg::{fro_dist_sq, fro_norm, hermitian_defect, hermitian_eigenvalues, trace_re};
use crate::projections::{feasible_project, psd_trace_prox, symmetrize, Variant};
use crate::signal::{relative_error, ObservationSet, SpectralSignal};
use crate::{c64, CMat};

/// Abort when the primal residual grows past this multiple of its first value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// ADMM penalty.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    pub variant: Variant,
    /// Restarted Nesterov acceleration on `(N, U)`.
    pub accelerate: bool,
    /// Required shrink factor of the combined residual between accelerated steps.
    pub restart_eta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            eps_abs: 1e-5,
            eps_rel: 1e-5,
            max_iters: 20_000,
            variant: Variant::Toeplitz,
            accelerate: false,
            restart_eta: 0.999,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.eps_abs.is_nan() || self.eps_abs <= 0.0 || self.eps_rel.is_nan() || self.eps_rel <= 0.0 {
            return Err(invalid("tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.restart_eta > 0.0 && self.restart_eta < 1.0) {
            return Err(invalid(format!("restart_eta must lie in (0,1), got {}", self.restart_eta)));
        }
        Ok(())
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// `trace(M)`.
    pub objective: f64,
    pub r_norm: f64,
    pub s_norm: f64,
}

#[derive(Debug, Clone)]
struct Momentum {
    n_hat: CMat,
    u_hat: CMat,
    alpha: f64,
    c_prev: f64,
    restarts: usize,
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    side: usize,
    /// PSD block.
    pub m: CMat,
    /// Structured (feasible) block.
    pub n: CMat,
    /// Scaled dual variable.
    pub u: CMat,
    pub iter: usize,
    pub r_norm: f64,
    pub s_norm: f64,
    pub history: Vec<IterRecord>,
    first_r: Option<f64>,
    momentum: Option<Momentum>,
}

impl AdmmState {
    /// Side length `n` of the signal (the iterates are `2n×2n`).
    pub fn side(&self) -> usize {
        self.side
    }

    /// The signal estimate: top-right block of `N`.
    pub fn x_estimate(&self) -> CMat {
        self.n.as_ref().submatrix(0, self.side, self.side, self.side).to_owned()
    }

    pub fn objective(&self) -> f64 {
        trace_re(self.m.as_ref())
    }

    /// Number of momentum restarts so far (accelerated runs only).
    pub fn restarts(&self) -> usize {
        self.momentum.as_ref().map_or(0, |mo| mo.restarts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult {
    #[serde(skip)]
    pub x_rec: CMat,
    /// Relative Frobenius error against the ground truth, when one was supplied.
    pub rel_error: Option<f64>,
    pub iters: usize,
    /// Seconds spent in the solve loop.
    pub wall_time: f64,
    pub converged: bool,
    pub final_r: f64,
    pub final_s: f64,
    pub objective: f64,
    /// Index of the iterate `x_rec` was taken from.
    pub returned_iter: usize,
    /// Momentum restarts (accelerated runs).
    pub restarts: usize,
    #[serde(skip)]
    pub history: Vec<IterRecord>,
}

/// `M = U = 0` and `N` the feasible projection of the observations embedded in `TR`.
pub fn init_state(obs: &ObservationSet, cfg: &SolverConfig) -> Result<AdmmState> {
    cfg.validate()?;
    let side = obs.n();
    let size = 2 * side;
    let mut z = CMat::zeros(size, size);
    for (j, k, v) in obs.iter() {
        z[(j, side + k)] = v;
    }
    let n = feasible_project(z.as_ref(), obs, cfg.variant)?.into_inner();
    let u = CMat::zeros(size, size);
    let momentum = cfg.accelerate.then(|| Momentum {
        n_hat: n.clone(),
        u_hat: u.clone(),
        alpha: 1.0,
        c_prev: f64::INFINITY,
        restarts: 0,
    });
    Ok(AdmmState {
        side,
        m: CMat::zeros(size, size),
        n,
        u,
        iter: 0,
        r_norm: 0.0,
        s_norm: 0.0,
        history: Vec::new(),
        first_r: None,
        momentum,
    })
}

/// The M-update: `psd_trace_prox(symmetrize(N − U), ρ)`.
pub fn m_update(n: MatRef<'_, c64>, u: MatRef<'_, c64>, rho: f64) -> Result<CMat> {
    let a = symmetrize((n - u).as_ref())?;
    psd_trace_prox(a.as_ref(), rho)
}

/// One ADMM iteration (accelerated when `cfg.accelerate`).
pub fn admm_step(mut state: AdmmState, obs: &ObservationSet, cfg: &SolverConfig) -> Result<AdmmState> {
    let rho = cfg.rho;
    let iter = state.iter + 1;

    let (n_in, u_in) = match &state.momentum {
        Some(mo) => (&mo.n_hat, &mo.u_hat),
        None => (&state.n, &state.u),
    };
    let m_next = m_update(n_in.as_ref(), u_in.as_ref(), rho)?;
    let n_next = feasible_project((&m_next + u_in).as_ref(), obs, cfg.variant)?.into_inner();
    let u_next = u_in + &m_next - &n_next;

    if !crate::linalg::all_finite(m_next.as_ref()) || !crate::linalg::all_finite(n_next.as_ref()) {
        return Err(Error::Diverged { iter, reason: "non-finite iterate".into() });
    }

    let r_norm = fro_dist_sq(m_next.as_ref(), n_next.as_ref()).sqrt();
    let s_norm = rho * fro_dist_sq(state.n.as_ref(), n_next.as_ref()).sqrt();

    match state.first_r {
        None => state.first_r = Some(r_norm),
        Some(r0) if r0 > 0.0 && r_norm > DIVERGENCE_FACTOR * r0 => {
            return Err(Error::Diverged {
                iter,
                reason: format!("primal residual {r_norm:.3e} exceeds {DIVERGENCE_FACTOR:.0e} x initial {r0:.3e}"),
            });
        }
        Some(_) => {}
    }

    if let Some(mo) = state.momentum.as_mut() {
        // Combined residual ρ‖U − Û‖² + ρ‖N − N̂‖², with U − Û = M − N.
        let c = rho * r_norm * r_norm + rho * fro_dist_sq(n_next.as_ref(), mo.n_hat.as_ref());
        if c < cfg.restart_eta * mo.c_prev {
            let alpha_next = 0.5 * (1.0 + (1.0 + 4.0 * mo.alpha * mo.alpha).sqrt());
            let w = (mo.alpha - 1.0) / alpha_next;
            mo.n_hat = &n_next + (&n_next - &state.n) * faer::Scale(c64::new(w, 0.0));
            mo.u_hat = &u_next + (&u_next - &state.u) * faer::Scale(c64::new(w, 0.0));
            mo.alpha = alpha_next;
            mo.c_prev = c;
        } else {
            mo.alpha = 1.0;
            mo.n_hat = state.n.clone();
            mo.u_hat = state.u.clone();
            mo.c_prev /= cfg.restart_eta;
            mo.restarts += 1;
        }
    }
    state.n = n_next;
    state.u = u_next;
    state.m = m_next;
    state.iter = iter;
    state.r_norm = r_norm;
    state.s_norm = s_norm;
    let objective = state.objective();
    state.history.push(IterRecord { iter, objective, r_norm, s_norm });
    Ok(state)
}

/// Primal and dual stopping thresholds for the given norms.
pub fn stop_thresholds(side: usize, m_norm: f64, n_norm: f64, rho_u_norm: f64, cfg: &SolverConfig) -> (f64, f64) {
    let abs = 2.0 * side as f64 * cfg.eps_abs;
    (abs + cfg.eps_rel * m_norm.max(n_norm), abs + cfg.eps_rel * rho_u_norm)
}

/// Both residual inequalities hold at the current iterate.
pub fn check_stop(state: &AdmmState, cfg: &SolverConfig) -> bool {
    if state.iter == 0 {
        return false;
    }
    let (primal, dual) = stop_thresholds(
        state.side,
        fro_norm(state.m.as_ref()),
        fro_norm(state.n.as_ref()),
        cfg.rho * fro_norm(state.u.as_ref()),
        cfg,
    );
    state.r_norm <= primal && state.s_norm <= dual
}

fn stop_ratio(state: &AdmmState, cfg: &SolverConfig) -> f64 {
    let (primal, dual) = stop_thresholds(
        state.side,
        fro_norm(state.m.as_ref()),
        fro_norm(state.n.as_ref()),
        cfg.rho * fro_norm(state.u.as_ref()),
        cfg,
    );
    (state.r_norm / primal).max(state.s_norm / dual)
}

/// Runs ADMM to convergence or `max_iters`.
///
/// On convergence `x_rec` is the stopping iterate. Otherwise it is the iterate
/// that came closest to satisfying the stopping rule.
pub fn solve(obs: &ObservationSet, cfg: &SolverConfig, truth: Option<&SpectralSignal>) -> Result<RecoveryResult> {
    solve_with(obs, cfg, truth, |_| true)
}

/// [`solve`] with a per-iteration callback; returning `false` stops early
/// (reported as not converged).
pub fn solve_with(
    obs: &ObservationSet,
    cfg: &SolverConfig,
    truth: Option<&SpectralSignal>,
    mut on_iter: impl FnMut(&AdmmState) -> bool,
) -> Result<RecoveryResult> {
    if let Some(t) = truth {
        if t.n() != obs.n() {
            return Err(Error::ShapeMismatch {
                expected: format!("truth of side {}", obs.n()),
                got: format!("side {}", t.n()),
            });
        }
    }
    let start = Instant::now();
    let mut state = init_state(obs, cfg)?;
    let mut converged = false;
    let mut best: Option<(f64, usize, CMat)> = None;
    while state.iter < cfg.max_iters {
        state = admm_step(state, obs, cfg)?;
        if check_stop(&state, cfg) {
            converged = true;
            break;
        }
        let ratio = stop_ratio(&state, cfg);
        if best.as_ref().is_none_or(|(b, _, _)| ratio < *b) {
            best = Some((ratio, state.iter, state.x_estimate()));
        }
        if !on_iter(&state) {
            break;
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    let (x_rec, returned_iter) = match (converged, best) {
        (false, Some((_, it, x))) => (x, it),
        _ => (state.x_estimate(), state.iter),
    };
    let rel_error = truth
        .map(|t| relative_error(x_rec.as_ref(), t.dense().as_ref()))
        .transpose()?;
    Ok(RecoveryResult {
        x_rec,
        rel_error,
        iters: state.iter,
        wall_time,
        converged,
        final_r: state.r_norm,
        final_s: state.s_norm,
        objective: state.objective(),
        returned_iter,
        restarts: state.restarts(),
        history: state.history,
    })
}

/// Number of eigenvalues of a Hermitian (Toeplitz PSD) block above `tol·λ_max`.
pub fn toeplitz_rank_estimate(t: MatRef<'_, c64>, tol: f64) -> Result<usize> {
    crate::linalg::check_square(t, "Toeplitz block")?;
    let scale = fro_norm(t).max(f64::MIN_POSITIVE);
    if hermitian_defect(t) > 1e-10 * scale {
        return Err(invalid("rank estimate requires a Hermitian matrix"));
    }
    let eig = hermitian_eigenvalues(t)?;
    let top = eig.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(eig.iter().filter(|&&l| l > tol * top).count())
}

/// Convergence trace as CSV: `iter,objective,r_norm,s_norm`.
pub fn trace_csv(history: &[IterRecord]) -> String {
    let mut out = String::from("iter,objective,r_norm,s_norm\n");
    for h in history {
        out.push_str(&format!("{},{:e},{:e},{:e}\n", h.iter, h.objective, h.r_norm, h.s_norm));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;
    use crate::projections::is_feasible;
    use crate::signal::{sample_observations, synth_random};

    fn one_entry() -> ObservationSet {
        ObservationSet::new(1, vec![(0, 0, c64::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { rho: 0.0, ..Default::default() },
            SolverConfig { eps_abs: 0.0, ..Default::default() },
            SolverConfig { max_iters: 0, ..Default::default() },
            SolverConfig { restart_eta: 1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn init_empty_and_full() {
        let cfg = SolverConfig::default();
        let st = init_state(&ObservationSet::empty(3), &cfg).unwrap();
        assert_eq!(st.n, CMat::zeros(6, 6));

        let sig = synth_random(4, 1, 0).unwrap();
        let x = sig.dense();
        let obs = ObservationSet::full(x.as_ref());
        let st = init_state(&obs, &cfg).unwrap();
        assert_eq!(st.x_estimate(), x);
        assert_eq!(st.n.as_ref().submatrix(0, 0, 4, 4), CMat::zeros(4, 4).as_ref());
        assert_eq!(st.n.as_ref().submatrix(4, 4, 4, 4), CMat::zeros(4, 4).as_ref());
        assert!(is_feasible(st.n.as_ref(), &obs, cfg.variant, 1e-12));
    }

    #[test]
    fn fixed_point_has_zero_residuals() {
        // N = [[1,1],[1,1]] is optimal for the single-entry problem; the multiplier
        // I + ρU = [[1,−1],[−1,1]] annihilates N, so U is zero off the observed entry.
        let cfg = SolverConfig::default();
        let obs = one_entry();
        let mut st = init_state(&obs, &cfg).unwrap();
        let ones = CMat::from_fn(2, 2, |_, _| c64::new(1.0, 0.0));
        st.n = ones.clone();
        st.m = ones.clone();
        st.u = CMat::from_fn(2, 2, |i, j| if i != j { c64::new(-1.0 / cfg.rho, 0.0) } else { c64::new(0.0, 0.0) });
        let st = admm_step(st, &obs, &cfg).unwrap();
        assert!(st.r_norm < 1e-12, "{}", st.r_norm);
        assert!(st.s_norm < 1e-12, "{}", st.s_norm);
        assert!(fro_dist_sq(st.n.as_ref(), ones.as_ref()) < 1e-24);
    }

    #[test]
    fn micro_sdp_converges_to_closed_form() {
        let cfg = SolverConfig { max_iters: 5000, ..Default::default() };
        let res = solve(&one_entry(), &cfg, None).unwrap();
        assert!(res.converged);
        assert!(res.iters <= 5000);
        assert!((res.objective - 2.0).abs() < 1e-3, "{}", res.objective);
        assert!((res.x_rec[(0, 0)] - c64::new(1.0, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn one_step_postconditions() {
        let cfg = SolverConfig::default();
        let sig = synth_random(10, 2, 4).unwrap();
        let obs = sample_observations(&sig, 40, 5).unwrap();
        let st = admm_step(init_state(&obs, &cfg).unwrap(), &obs, &cfg).unwrap();
        assert!(is_feasible(st.n.as_ref(), &obs, cfg.variant, 1e-12));
        let eig = hermitian_eigenvalues(st.m.as_ref()).unwrap();
        assert!(eig[0] >= -1e-10);
        assert_eq!(st.history.len(), 1);
    }

    #[test]
    fn check_stop_boundaries() {
        let cfg = SolverConfig::default();
        let mut st = init_state(&ObservationSet::empty(2), &cfg).unwrap();
        assert!(!check_stop(&st, &cfg));
        st.iter = 1;
        assert!(check_stop(&st, &cfg));
        st.r_norm = 2.0 * 2.0 * cfg.eps_abs * (1.0 + 1e-9);
        assert!(!check_stop(&st, &cfg));
    }

    #[test]
    fn full_observation_is_exact() {
        let sig = synth_random(8, 2, 8).unwrap();
        let obs = ObservationSet::full(sig.dense().as_ref());
        let res = solve(&obs, &SolverConfig::default(), Some(&sig)).unwrap();
        assert!(res.rel_error.unwrap() <= 1e-6);
    }

    #[test]
    fn accelerated_micro_sdp() {
        let cfg = SolverConfig { accelerate: true, max_iters: 5000, ..Default::default() };
        let res = solve(&one_entry(), &cfg, None).unwrap();
        assert!(res.converged);
        assert!((res.x_rec[(0, 0)] - c64::new(1.0, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn rank_estimate_examples() {
        let eye = CMat::from_fn(4, 4, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        assert_eq!(toeplitz_rank_estimate(eye.as_ref(), 0.5).unwrap(), 4);
        let v: Vec<c64> = (0..6).map(|j| crate::signal::cis(0.23 * j as f64)).collect();
        let t = CMat::from_fn(6, 6, |i, j| v[i] * v[j].conj());
        assert_eq!(toeplitz_rank_estimate(t.as_ref(), 1e-6).unwrap(), 1);
        let skew = CMat::from_fn(2, 2, |i, j| if i < j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        assert!(toeplitz_rank_estimate(skew.as_ref(), 0.1).is_err());
    }

    #[test]
    fn trace_csv_format() {
        let csv = trace_csv(&[IterRecord { iter: 1, objective: 2.0, r_norm: 0.5, s_norm: 0.25 }]);
        assert_eq!(csv, "iter,objective,r_norm,s_norm\n1,2e0,5e-1,2.5e-1\n");
    }
}
