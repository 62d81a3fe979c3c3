//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers/strings and returns a JSON string, so the
//! page needs no generated TypeScript types. Seeds follow the CLI: the signal
//! and the observation draw are both derived from `seed`.

use serde::Serialize;
use spectral_sdp::experiment::derive_seeds;
use spectral_sdp::linalg::singular_values;
use spectral_sdp::{sample_observations, solve, synth_random, CMat, ObservationSet, SolverConfig, SpectralSignal, Variant};
use wasm_bindgen::prelude::*;

/// Largest side the page offers; one solve at this size takes a few seconds in a browser.
pub const MAX_SIDE: usize = 32;

#[derive(Serialize)]
struct Synthesis {
    n: usize,
    s: usize,
    m: usize,
    freqs: Vec<[f64; 2]>,
    /// `|X(j,k)|`, row-major.
    magnitude: Vec<f64>,
    /// 1 where the entry is observed, row-major.
    mask: Vec<u8>,
}

#[derive(Serialize)]
struct Trace {
    objective: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
}

#[derive(Serialize)]
struct Recovery {
    variant: Variant,
    rel_error: f64,
    success: bool,
    iters: usize,
    converged: bool,
    restarts: usize,
    wall_time: f64,
    magnitude: Vec<f64>,
    /// `|X_rec − X|` per entry, row-major.
    error: Vec<f64>,
    /// Leading singular values of the estimate (up to 12).
    singular_values: Vec<f64>,
    trace: Trace,
}

#[derive(Serialize)]
struct Comparison {
    toeplitz: Recovery,
    nuclear: Recovery,
}

fn instance(n: usize, s: usize, m: usize, seed: u64) -> spectral_sdp::Result<(SpectralSignal, ObservationSet)> {
    if n == 0 || n > MAX_SIDE {
        return Err(spectral_sdp::Error::InvalidArgument(format!("n must lie in 1..={MAX_SIDE}")));
    }
    let (sig_seed, obs_seed) = derive_seeds(seed);
    let signal = synth_random(n, s, sig_seed)?;
    let obs = sample_observations(&signal, m, obs_seed)?;
    Ok((signal, obs))
}

fn magnitudes(x: &CMat) -> Vec<f64> {
    (0..x.nrows()).flat_map(|i| (0..x.ncols()).map(move |j| x[(i, j)].norm())).collect()
}

fn run(
    signal: &SpectralSignal,
    obs: &ObservationSet,
    variant: Variant,
    accelerate: bool,
    max_iters: usize,
) -> spectral_sdp::Result<Recovery> {
    let cfg = SolverConfig { variant, accelerate, max_iters, ..SolverConfig::default() };
    let res = solve(obs, &cfg, Some(signal))?;
    let truth = signal.dense();
    let rel_error = res.rel_error.unwrap_or(f64::NAN);
    let diff = &res.x_rec - &truth;
    let mut sv = singular_values(res.x_rec.as_ref())?;
    sv.truncate(12);
    Ok(Recovery {
        variant,
        rel_error,
        success: rel_error <= spectral_sdp::SUCCESS_THRESHOLD,
        iters: res.iters,
        converged: res.converged,
        restarts: res.restarts,
        wall_time: res.wall_time,
        magnitude: magnitudes(&res.x_rec),
        error: magnitudes(&diff),
        singular_values: sv,
        trace: Trace {
            objective: res.history.iter().map(|h| h.objective).collect(),
            r: res.history.iter().map(|h| h.r_norm).collect(),
            s: res.history.iter().map(|h| h.s_norm).collect(),
        },
    })
}

fn to_js<T: Serialize>(r: spectral_sdp::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

pub fn synthesize_json(n: usize, s: usize, m: usize, seed: u64) -> spectral_sdp::Result<String> {
    let (signal, obs) = instance(n, s, m, seed)?;
    let mut mask = vec![0u8; n * n];
    for &(j, k) in obs.indices() {
        mask[j * n + k] = 1;
    }
    let out = Synthesis {
        n,
        s,
        m,
        freqs: signal.freqs().iter().map(|f| [f.f1, f.f2]).collect(),
        magnitude: magnitudes(&signal.dense()),
        mask,
    };
    Ok(serde_json::to_string(&out)?)
}

#[wasm_bindgen]
pub fn synthesize(n: usize, s: usize, m: usize, seed: u64) -> Result<String, JsError> {
    synthesize_json(n, s, m, seed).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn recover(
    n: usize,
    s: usize,
    m: usize,
    seed: u64,
    variant: &str,
    accelerate: bool,
    max_iters: usize,
) -> Result<String, JsError> {
    to_js((|| {
        let variant: Variant = variant.parse()?;
        let (signal, obs) = instance(n, s, m, seed)?;
        run(&signal, &obs, variant, accelerate, max_iters)
    })())
}

/// Both programs on the same instance.
#[wasm_bindgen]
pub fn compare(n: usize, s: usize, m: usize, seed: u64, max_iters: usize) -> Result<String, JsError> {
    to_js((|| {
        let (signal, obs) = instance(n, s, m, seed)?;
        Ok(Comparison {
            toeplitz: run(&signal, &obs, Variant::Toeplitz, false, max_iters)?,
            nuclear: run(&signal, &obs, Variant::Nuclear, false, max_iters)?,
        })
    })())
}
