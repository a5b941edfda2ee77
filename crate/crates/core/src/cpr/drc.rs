//! Dual-reference separation of two delayed phase-noise processes.
//!
//! Each main channel observes `phi_m(n) = P(n - tau_m) + Q(n)` on a common
//! uniform grid, with known per-channel delays (in grid samples) that come
//! from the accumulated dispersion. On the DFT grid the difference of the
//! two mains is `D(w) = P(w) (exp(-j w tau_b) - exp(-j w tau_a))`. Where this
//! comb filter is weak the inversion is damped (see [`Regularization`]) and
//! the damped share of the secondary falls back to a delay-proportional
//! blend of the two mains, which is the exact answer as `w -> 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{signed_bin, FftPair, C64};

/// How weak bins of the comb filter `H` are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularization {
    /// Exact inversion where `|H| >= eps`, blend fallback elsewhere.
    Threshold,
    /// `conj(H) / (|H|^2 + eps^2)`, with the lost share going to the blend.
    #[default]
    Tikhonov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrcOutput {
    /// Reconstructed phase for each requested delay.
    pub phases: Vec<Vec<f64>>,
    /// DFT bins where `|H| < eps`.
    pub regularized: Vec<usize>,
    pub p_spec: Vec<C64>,
    pub q_spec: Vec<C64>,
}

fn delay_phasor(k: usize, n: usize, tau: f64) -> C64 {
    let w = 2.0 * PI * signed_bin(k, n) as f64 / n as f64;
    if 2 * k == n {
        // the Nyquist bin of a real sequence must stay real
        return C64::new((w * tau).cos(), 0.0);
    }
    C64::from_polar(1.0, -w * tau)
}

pub fn drc_reconstruct(
    phi_a: &[f64],
    phi_b: &[f64],
    tau_a: f64,
    tau_b: f64,
    tau_secondary: &[f64],
    eps: f64,
    mode: Regularization,
) -> Result<DrcOutput> {
    let n = phi_a.len();
    if phi_b.len() != n || n < 2 {
        return Err(Error::InputSize(format!(
            "main tracks of length {} and {}",
            n,
            phi_b.len()
        )));
    }
    if (tau_b - tau_a).abs() < 1e-12 {
        return Err(Error::DegenerateGeometry {
            separation: (tau_b - tau_a).abs(),
        });
    }
    let plan = FftPair::new(n);
    let mut fa: Vec<C64> = phi_a.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut fb: Vec<C64> = phi_b.iter().map(|&v| C64::new(v, 0.0)).collect();
    plan.forward(&mut fa);
    plan.forward(&mut fb);
    let mut regularized = Vec::new();
    let mut p_spec = vec![C64::new(0.0, 0.0); n];
    let mut q_spec = vec![C64::new(0.0, 0.0); n];
    let mut blend = vec![0.0; n];
    for k in 0..n {
        let ea = delay_phasor(k, n, tau_a);
        let h = delay_phasor(k, n, tau_b) - ea;
        let h2 = h.norm_sqr();
        if h.norm() < eps || h2 < 1e-24 {
            regularized.push(k);
        }
        if h2 < 1e-24 {
            blend[k] = 1.0;
        } else {
            let keep = match mode {
                Regularization::Threshold => f64::from(h.norm() >= eps),
                Regularization::Tikhonov => h2 / (h2 + eps * eps),
            };
            p_spec[k] = (fb[k] - fa[k]) / h * keep;
            blend[k] = 1.0 - keep;
        }
        q_spec[k] = fa[k] - p_spec[k] * ea;
    }
    let phases = tau_secondary
        .iter()
        .map(|&tau| {
            let w = (tau - tau_a) / (tau_b - tau_a);
            let mut s: Vec<C64> = (0..n)
                .map(|k| p_spec[k] * delay_phasor(k, n, tau) + q_spec[k] + (fb[k] - fa[k]) * (w * blend[k]))
                .collect();
            plan.inverse(&mut s);
            s.into_iter().map(|v| v.re).collect()
        })
        .collect();
    Ok(DrcOutput {
        phases,
        regularized,
        p_spec,
        q_spec,
    })
}

/// Applies a (fractional) circular delay of `tau` samples to a real sequence.
pub fn circular_delay(x: &[f64], tau: f64) -> Vec<f64> {
    let n = x.len();
    let plan = FftPair::new(n);
    let mut s: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    plan.forward(&mut s);
    for (k, v) in s.iter_mut().enumerate() {
        *v *= delay_phasor(k, n, tau);
    }
    plan.inverse(&mut s);
    s.into_iter().map(|v| v.re).collect()
}
