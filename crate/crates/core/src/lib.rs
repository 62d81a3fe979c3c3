//! Recovery of 2D spectrally sparse signals from partial time-domain samples.
//!
//! A signal `X(j,k) = Σ_p c_p exp(i2π(f_p1·j + f_p2·k))` on an `n×n` grid is
//! recovered from `m` observed entries by solving
//!
//! ```text
//! minimize   ½ trace(T1) + ½ trace(T2)
//! subject to [[T1, X], [Xᴴ, T2]] ⪰ 0,  T1, T2 Toeplitz,  X = X★ on the observed set
//! ```
//!
//! with ADMM on the `2n×2n` block matrix. Dropping the Toeplitz constraint gives
//! the nuclear-norm completion baseline.
//!
//! Modules:
//! - [`signal`]: synthesis, evaluation, sampling and error measurement.
//! - [`projections`]: the PSD trace prox, Toeplitz averaging and data consistency maps.
//! - [`admm`]: the solver loop, stopping rule and optional restarted acceleration.
//! - [`experiment`]: phase-transition grids, runtime benchmarks and their outputs.
//! - [`io`]: JSON and CSV formats.

pub mod admm;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod projections;
pub mod signal;

pub use admm::{
    check_stop, init_state, admm_step, solve, toeplitz_rank_estimate, AdmmState, IterRecord,
    RecoveryResult, SolverConfig,
};
pub use error::{Error, Result};
pub use experiment::{
    emit_phase_plot, run_bench, run_phase_grid, run_trial, BenchRow, PhaseGridResult,
    PhaseGridSpec, TrialOutcome, SUCCESS_THRESHOLD,
};
pub use projections::{
    data_consistency, feasible_project, is_feasible, psd_trace_prox, symmetrize, toeplitz_project,
    Variant,
};
pub use signal::{
    evaluate_signal, min_separation, relative_error, sample_observations, synth_random,
    FrequencyPair, ObservationSet, SpectralSignal,
};

/// Complex scalar used throughout (double precision).
pub use faer::c64;
/// Dense complex matrix type.
pub type CMat = faer::Mat<c64>;
