use crate::error::{Error, Result};
use crate::fft::{signed_bin, FftPair, C64};

use super::field::FieldGrid;
use super::mux::ChannelPlan;
use super::params::LinkParams;

/// Gaussian optical band-pass amplitude response with `bw_hz` full 3 dB
/// (power) bandwidth, at `f` from the filter center.
pub fn gaussian_bpf(f: f64, bw_hz: f64) -> f64 {
    let x = f / (bw_hz / 2.0);
    (-std::f64::consts::LN_2 / 2.0 * x * x).exp()
}

fn bessel3_s(s: C64) -> C64 {
    C64::new(15.0, 0.0) / (s * s * s + 6.0 * s * s + 15.0 * s + 15.0)
}

/// Third-order Bessel low-pass with a 3 dB cutoff of `fc_hz`.
#[derive(Debug, Clone, Copy)]
pub struct Bessel3 {
    fc_hz: f64,
    w3: f64,
}

impl Bessel3 {
    pub fn new(fc_hz: f64) -> Self {
        // normalized 3 dB frequency of the prototype
        let (mut lo, mut hi) = (0.5, 4.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if bessel3_s(C64::new(0.0, mid)).norm_sqr() > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Bessel3 {
            fc_hz,
            w3: 0.5 * (lo + hi),
        }
    }

    pub fn response(&self, f: f64) -> C64 {
        bessel3_s(C64::new(0.0, self.w3 * f / self.fc_hz))
    }
}

/// Precomputed spectrum of the received optical field, shared by all channels.
pub struct FieldSpectrum {
    spec: [Vec<C64>; 2],
    sample_rate: f64,
}

impl FieldSpectrum {
    pub fn new(field: &FieldGrid) -> Self {
        let plan = FftPair::new(field.len());
        let spec = field.pol.clone().map(|mut v| {
            plan.forward(&mut v);
            v
        });
        FieldSpectrum {
            spec,
            sample_rate: field.sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.spec[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec[0].is_empty()
    }
}

/// Coherent detection of channel `k`: optical band-pass around the carrier,
/// ideal mixing to baseband, electrical Bessel filter and sampling at the ADC
/// rate. `lo_rotation` (at the ADC rate) is the LO line's phasor; the output
/// is multiplied by its conjugate.
pub fn demux_rx(
    spectrum: &FieldSpectrum,
    plan: &ChannelPlan,
    k: usize,
    lo_rotation: Option<&[C64]>,
    link: &LinkParams,
) -> Result<[Vec<C64>; 2]> {
    if k >= plan.n_channels() {
        return Err(Error::Parameter(format!("no channel {k}")));
    }
    let n = spectrum.len();
    if n != plan.grid_len {
        return Err(Error::InputSize("field length differs from channel plan".into()));
    }
    if link.adc_sps == 0 || link.oversample % link.adc_sps != 0 {
        return Err(Error::Parameter(format!(
            "ADC at {} sps does not divide the {}-sps grid",
            link.adc_sps, link.oversample
        )));
    }
    let m = n / link.oversample * link.adc_sps;
    if let Some(lo) = lo_rotation {
        if lo.len() != m {
            return Err(Error::InputSize(format!(
                "LO rotation of length {} for {m} ADC samples",
                lo.len()
            )));
        }
    }
    let df = spectrum.sample_rate / n as f64;
    let bessel = Bessel3::new(link.elec_bw_hz);
    let h: Vec<C64> = (0..m)
        .map(|i| {
            let f = signed_bin(i, m) as f64 * df;
            bessel.response(f) * gaussian_bpf(f, link.bpf_bw_hz)
        })
        .collect();
    let plan_m = FftPair::new(m);
    let scale = m as f64 / n as f64;
    let centre = plan.bins[k];
    let out = spectrum.spec.clone().map(|s| {
        let mut v: Vec<C64> = (0..m)
            .map(|i| {
                let src = (signed_bin(i, m) + centre).rem_euclid(n as i64) as usize;
                s[src] * h[i] * scale
            })
            .collect();
        plan_m.inverse(&mut v);
        if let Some(lo) = lo_rotation {
            for (a, r) in v.iter_mut().zip(lo) {
                *a *= r.conj();
            }
        }
        v
    });
    Ok(out)
}
