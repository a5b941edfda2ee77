//! Constellations, bit mapping, framing and pulse shaping.

mod constellation;
mod frame;
mod shaping;

pub use constellation::{map_bits, Constellation, Format};
pub use frame::{
    build_frame, header_overhead, header_symbols, pilot_symbols, random_payload_bits,
    FrameLayout, PilotPlan, Slot, SymbolFrame, HEADER_SEED, PAPER_FRAME_LEN, PILOT_SEED,
};
pub use shaping::{
    decimate, filter_circular, matched_filter, resample, rrc_filter, rrc_response, rrc_taps,
};
