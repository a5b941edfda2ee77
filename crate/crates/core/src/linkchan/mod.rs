//! Optical link: channel multiplexing, AWGN loading, split-step fiber spans,
//! lumped amplification and coherent detection.

mod fiber;
mod field;
mod mux;
mod noise;
mod params;
mod rx;

pub use fiber::{apply_dispersion, converge_step, ssfm_span, walkoff_delay, StepControl, MANAKOV};
pub use field::{db_to_lin, dbm_to_w, dump_field, load_field, w_to_dbm, FieldGrid};
pub use mux::{modulate_mux, ChannelInput, ChannelPlan};
pub use noise::{awgn_load, edfa};
pub use params::{
    beta2_from_d, beta2_l_from_dispersion, dispersion_ps_nm, wavelength_nm_at, AmpParams,
    FiberParams, LinkParams, PLANCK, SPEED_OF_LIGHT,
};
pub use rx::{demux_rx, gaussian_bpf, Bessel3, FieldSpectrum};
