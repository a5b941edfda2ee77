//! Root-raised-cosine pulse shaping and band-limited rate conversion.
//!
//! The simulator works on periodic (circular) sequences, so filtering is done
//! by multiplying the whole-sequence spectrum with the analog frequency
//! response. This gives exact band limitation and an exact matched-filter
//! cascade.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::{freq_axis, signed_bin, FftPair, C64};

fn check_roll_off(roll_off: f64) -> Result<()> {
    if !(roll_off > 0.0 && roll_off <= 1.0) {
        return Err(Error::Parameter(format!(
            "roll-off {roll_off} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Amplitude response of the RRC filter at frequency `f`, unity at DC.
pub fn rrc_response(f: f64, symbol_rate: f64, roll_off: f64) -> f64 {
    let f = f.abs();
    let f1 = (1.0 - roll_off) * symbol_rate / 2.0;
    let f2 = (1.0 + roll_off) * symbol_rate / 2.0;
    if f <= f1 {
        1.0
    } else if f >= f2 {
        0.0
    } else {
        (0.5 * (1.0 + (PI / (roll_off * symbol_rate) * (f - f1)).cos())).sqrt()
    }
}

/// Time-domain RRC taps for `span` symbols at `sps` samples per symbol,
/// normalized so that the tap cascade with itself is unity at the center.
pub fn rrc_taps(roll_off: f64, sps: usize, span: usize) -> Result<Vec<f64>> {
    check_roll_off(roll_off)?;
    let n = span * sps + 1;
    let center = (n / 2) as f64;
    let b = roll_off;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - center) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / PI
            } else if (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                    / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let e: f64 = taps.iter().map(|x| x * x).sum();
    for t in taps.iter_mut() {
        *t /= e.sqrt();
    }
    Ok(taps)
}

/// Multiplies the spectrum of a periodic sequence by `h(f)`.
pub fn filter_circular(x: &[C64], sample_rate: f64, h: impl Fn(f64) -> C64) -> Vec<C64> {
    let plan = FftPair::new(x.len());
    let mut buf = x.to_vec();
    plan.forward(&mut buf);
    for (v, f) in buf.iter_mut().zip(freq_axis(x.len(), sample_rate)) {
        *v *= h(f);
    }
    plan.inverse(&mut buf);
    buf
}

/// Upsamples `symbols` by `oversample` and applies RRC shaping. Unit-energy
/// symbols give a unit-power waveform.
pub fn rrc_filter(symbols: &[C64], roll_off: f64, oversample: usize) -> Result<Vec<C64>> {
    check_roll_off(roll_off)?;
    if oversample < 2 {
        return Err(Error::Parameter(format!(
            "oversampling factor {oversample} must be at least 2"
        )));
    }
    let m = symbols.len();
    let n = m * oversample;
    let mut spec = symbols.to_vec();
    FftPair::new(m).forward(&mut spec);
    // spectrum of the zero-stuffed sequence is the symbol spectrum tiled
    let mut out: Vec<C64> = (0..n)
        .map(|k| {
            let f = signed_bin(k, n) as f64 / m as f64; // in units of the symbol rate
            let g = rrc_response(f, 1.0, roll_off) * oversample as f64;
            spec[k % m] * g
        })
        .collect();
    FftPair::new(n).inverse(&mut out);
    Ok(out)
}

/// RRC matched filter at `sps` samples per symbol; sampling the output every
/// `sps` samples recovers the symbols of an [`rrc_filter`] waveform.
pub fn matched_filter(waveform: &[C64], roll_off: f64, sps: usize) -> Result<Vec<C64>> {
    check_roll_off(roll_off)?;
    Ok(filter_circular(waveform, sps as f64, |f| {
        C64::new(rrc_response(f, 1.0, roll_off), 0.0)
    }))
}

/// Every `factor`-th sample starting at `phase`.
pub fn decimate(x: &[C64], factor: usize, phase: usize) -> Vec<C64> {
    x.iter().skip(phase).step_by(factor).copied().collect()
}

/// Band-limited rational resampling of a periodic sequence by spectral
/// truncation or zero padding. `len * to_rate / from_rate` must be an integer.
pub fn resample(waveform: &[C64], from_rate: f64, to_rate: f64) -> Result<Vec<C64>> {
    if !(from_rate > 0.0 && to_rate > 0.0) {
        return Err(Error::Parameter("sample rates must be positive".into()));
    }
    if from_rate == to_rate {
        return Ok(waveform.to_vec());
    }
    let n_in = waveform.len();
    let exact = n_in as f64 * to_rate / from_rate;
    let n_out = exact.round() as usize;
    if (exact - n_out as f64).abs() > 1e-6 || n_out == 0 {
        return Err(Error::Parameter(format!(
            "{n_in} samples at {from_rate} Sa/s do not map to an integer length at {to_rate} Sa/s"
        )));
    }
    let mut spec = waveform.to_vec();
    FftPair::new(n_in).forward(&mut spec);
    let mut out = vec![C64::new(0.0, 0.0); n_out];
    let keep = n_in.min(n_out);
    let lo = -((keep / 2) as i64);
    let hi = lo + keep as i64;
    for k in lo..hi {
        let src = k.rem_euclid(n_in as i64) as usize;
        let dst = k.rem_euclid(n_out as i64) as usize;
        out[dst] = spec[src];
    }
    FftPair::new(n_out).inverse(&mut out);
    let scale = n_out as f64 / n_in as f64;
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}
