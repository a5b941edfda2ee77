use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft::C64;

use super::field::{dbm_to_w, FieldGrid};
use super::params::{AmpParams, LinkParams};

fn add_white<R: Rng>(field: &mut FieldGrid, var_per_sample: f64, rng: &mut R) {
    let sigma = (var_per_sample / 2.0).sqrt();
    for p in field.pol.iter_mut() {
        for v in p.iter_mut() {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            *v += C64::new(sigma * a, sigma * b);
        }
    }
}

/// Adds white Gaussian noise so that a carrier at the launch power sees
/// `snr_db` measured over the symbol-rate bandwidth (both polarizations).
pub fn awgn_load<R: Rng>(
    field: &mut FieldGrid,
    snr_db: f64,
    link: &LinkParams,
    rng: &mut R,
) -> Result<()> {
    if snr_db.is_nan() {
        return Err(Error::Parameter("SNR is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(());
    }
    let p_ch = dbm_to_w(link.launch_power_dbm);
    let snr = 10f64.powf(snr_db / 10.0);
    let psd_per_pol = p_ch / (2.0 * snr * link.symbol_rate);
    add_white(field, psd_per_pol * field.sample_rate, rng);
    Ok(())
}

/// Lumped amplifier: power gain plus ASE over the whole grid bandwidth.
pub fn edfa<R: Rng>(
    field: &mut FieldGrid,
    amp: &AmpParams,
    center_freq_hz: f64,
    rng: &mut R,
) -> Result<()> {
    amp.validate()?;
    field.scale(10f64.powf(amp.gain_db / 20.0));
    add_white(field, amp.ase_psd(center_freq_hz) * field.sample_rate, rng);
    Ok(())
}
