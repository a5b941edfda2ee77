//! Thin wrapper over `rustfft` with unnormalized forward and normalized
//! inverse transforms, plus frequency-axis helpers.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

/// Cached forward/inverse plan pair for one transform length.
#[derive(Clone)]
pub struct FftPair {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        FftPair {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// X[k] = sum_n x[n] exp(-j 2 pi k n / N), in place.
    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
    }

    /// Inverse transform including the 1/N factor, in place.
    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn fft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    FftPair::new(x.len()).forward(&mut buf);
    buf
}

pub fn ifft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    FftPair::new(x.len()).inverse(&mut buf);
    buf
}

/// Signed bin index of DFT bin `k` for length `n` (0, 1, ..., -2, -1).
#[inline]
pub fn signed_bin(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Frequency in Hz of every DFT bin for a grid sampled at `sample_rate`.
pub fn freq_axis(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n).map(|k| signed_bin(k, n) as f64 * df).collect()
}

/// Angular frequency in rad/s of every DFT bin.
pub fn omega_axis(n: usize, sample_rate: f64) -> Vec<f64> {
    freq_axis(n, sample_rate)
        .into_iter()
        .map(|f| 2.0 * PI * f)
        .collect()
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn mean_power(x: &[C64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

/// ||a - b|| / ||b||.
pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    (num / energy(b)).sqrt()
}
