use crate::error::{Error, Result};
use crate::fft::{omega_axis, FftPair, C64};
use crate::linkchan::beta2_l_from_dispersion;

/// Frequency-domain chromatic-dispersion compensation of a periodic
/// sequence for accumulated dispersion `ps_nm` at `wavelength_nm`.
pub fn cdc(x: &[C64], sample_rate: f64, ps_nm: f64, wavelength_nm: f64) -> Vec<C64> {
    cdc_beta2l(x, sample_rate, beta2_l_from_dispersion(ps_nm, wavelength_nm))
}

/// Applies `exp(-j beta2 L w^2 / 2)`, the inverse of the fiber's dispersion.
pub fn cdc_beta2l(x: &[C64], sample_rate: f64, beta2_l: f64) -> Vec<C64> {
    let plan = FftPair::new(x.len());
    let mut buf = x.to_vec();
    plan.forward(&mut buf);
    for (v, w) in buf.iter_mut().zip(omega_axis(x.len(), sample_rate)) {
        *v *= C64::from_polar(1.0, -0.5 * beta2_l * w * w);
    }
    plan.inverse(&mut buf);
    buf
}

/// Number of FIR taps needed to span the dispersive memory.
pub fn cdc_memory_taps(sample_rate: f64, bandwidth_hz: f64, beta2_l: f64) -> usize {
    let spread = (beta2_l.abs() * 2.0 * std::f64::consts::PI * bandwidth_hz) * sample_rate;
    spread.ceil() as usize + 1
}

/// Block-wise overlap-save CDC of a periodic sequence with FFT size `fft_len`
/// and an overlap of `overlap` samples (at least the dispersive memory).
pub fn cdc_overlap_save(
    x: &[C64],
    sample_rate: f64,
    beta2_l: f64,
    fft_len: usize,
    overlap: usize,
) -> Result<Vec<C64>> {
    if overlap >= fft_len || overlap % 2 != 0 {
        return Err(Error::Parameter(format!(
            "overlap {overlap} must be even and below the FFT size {fft_len}"
        )));
    }
    let n = x.len();
    let hop = fft_len - overlap;
    let half = overlap / 2;
    let plan = FftPair::new(fft_len);
    let h: Vec<C64> = omega_axis(fft_len, sample_rate)
        .into_iter()
        .map(|w| C64::from_polar(1.0, -0.5 * beta2_l * w * w))
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut start = 0;
    let mut buf = vec![C64::new(0.0, 0.0); fft_len];
    while start < n {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = x[(start + n - half + i) % n];
        }
        plan.forward(&mut buf);
        for (b, g) in buf.iter_mut().zip(&h) {
            *b *= g;
        }
        plan.inverse(&mut buf);
        for i in 0..hop.min(n - start) {
            out[start + i] = buf[half + i];
        }
        start += hop;
    }
    Ok(out)
}
