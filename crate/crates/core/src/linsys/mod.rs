//! Continuous-time state-space kernel.

mod care;
mod freq;
mod interconnect;
mod lyap;
pub mod mat;
mod norm;
mod reduce;
pub mod schur;
mod sim;
mod system;

pub use care::{hamiltonian_residual, ric, solve_care};
pub use freq::{
    eval_at, freq_response, freq_response_at, make_grid, sigma_max, singular_values, FrequencyGrid,
    SigmaCurve,
};
pub use interconnect::{
    append, feedback, lft, parallel, select_by_label, select_channels, series, Interconnection, Signal,
};
pub use lyap::{controllability_gramian, observability_gramian, solve_lyapunov};
pub use norm::{
    hinf_norm, is_hurwitz, is_stable, is_stable_with, spectral_abscissa, HinfNorm, HINF_TOL,
    STABILITY_MARGIN,
};
pub use reduce::{balanced_truncate, hankel_singular_values, Reduction, HSV_RANK_FLOOR};
pub use sim::{default_dt, simulate_step, StepResponse, DEFAULT_HORIZON};
pub use system::{StateSpace, StateSpaceDoc};
