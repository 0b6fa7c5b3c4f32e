//! The two worked applications: a sampled maglev plant and the FitzHugh–Nagumo map.

pub mod fhn;
pub mod maglev;

pub use fhn::{
    fhn_fixed_point, fhn_linearization, fhn_linearize, fhn_perturbation, fhn_search_eo, fhn_simulate, fhn_sweep,
    h_shaper, linear_spectral_radius, oscillation_report, EoSearch, FhnModel, FixedPoint, Linearization, Oscillation,
    OscillationReport, OscillationThresholds, Perturbation, SweepPoint, Trajectory,
};
pub use maglev::{highpass, maglev_upper_bound, maglev_zoh, tau_limit, MaglevBound, MaglevParams, MaglevZoh};
