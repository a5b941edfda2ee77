//! Carrier recovery: pilot-aided frequency tracking, two-stage phase
//! estimation on main channels, hold-based light recovery on secondaries,
//! and the joint schemes that share estimates across the comb.

mod drc;
mod estimators;
mod known;
mod scheme;

pub use drc::{circular_delay, drc_reconstruct, DrcOutput, Regularization};
pub use estimators::{
    coarse_fo_pilots, dd_ml_stage2, dpll_fo, finish_main, main_stage1, optimize_dd_window,
    pa_cpe_stage1, pa_cpr_light, DpllGains, FoTrack, MainRecovery, PhaseEstimateTrack,
    TrackSource,
};
pub use known::{derotate, hold, interp_linear, unwrap, wrap, Burst, KnownSymbols};
pub use scheme::{recover_main, run_scheme, ChannelCpr, CprContext, CprSchemeConfig, Scheme};
