//! Receiver DSP: dispersion compensation, frame synchronization and
//! adaptive 2x2 equalization.

mod cdc;
mod mimo;
mod sync;

pub use cdc::{cdc, cdc_beta2l, cdc_memory_taps, cdc_overlap_save};
pub use mimo::{mimo_equalize, run_rde, train_lms, Butterfly, EqualizerConfig};
pub use sync::{align, coarse_fo_4th_power, frame_sync, identify_frame, SyncConfig, SyncResult};
