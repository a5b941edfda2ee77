//! Carrier phase trajectories of the transmitter and local-oscillator combs.
//!
//! Every comb line carries the sum of a common Wiener process and one shared
//! line-dependent Wiener process scaled per line; lines placed symmetrically
//! about the comb center get opposite scale factors and are therefore fully
//! anti-correlated in that component. The LO comb additionally carries a
//! frequency offset and a free-spectral-range deviation, which together form
//! a linear frequency ladder referenced to the comb center.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CombSpec {
    pub n_lines: usize,
    pub fsr_hz: f64,
    pub common_lw_hz: f64,
    pub line_lw_hz: f64,
    pub scale_factors: Vec<f64>,
    /// Tx-to-LO frequency offset at the comb center.
    pub fo_hz: f64,
    /// Deviation of the LO line spacing from the nominal FSR.
    pub fsr_dev_hz: f64,
}

impl Default for CombSpec {
    fn default() -> Self {
        CombSpec {
            n_lines: 4,
            fsr_hz: 150e9,
            common_lw_hz: 200e3,
            line_lw_hz: 1e3,
            scale_factors: vec![-2.0, -1.0, 1.0, 2.0],
            fo_hz: 200e6,
            fsr_dev_hz: 1e6,
        }
    }
}

impl CombSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_lines == 0 {
            return Err(Error::Parameter("comb needs at least one line".into()));
        }
        if self.scale_factors.len() != self.n_lines {
            return Err(Error::Parameter(format!(
                "{} scale factors for {} lines",
                self.scale_factors.len(),
                self.n_lines
            )));
        }
        if self.common_lw_hz < 0.0 || self.line_lw_hz < 0.0 {
            return Err(Error::Parameter("negative linewidth".into()));
        }
        Ok(())
    }

    /// Line index relative to the comb center (-1.5, -0.5, 0.5, 1.5 for four lines).
    pub fn k_rel(&self, k: usize) -> f64 {
        k as f64 - (self.n_lines as f64 - 1.0) / 2.0
    }

    /// Nominal line frequency relative to the comb center.
    pub fn line_offset_hz(&self, k: usize) -> f64 {
        self.k_rel(k) * self.fsr_hz
    }

    /// Frequency error of LO line `k` against Tx line `k`.
    pub fn lo_frequency_error_hz(&self, k: usize) -> f64 {
        self.fo_hz + self.k_rel(k) * self.fsr_dev_hz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrack {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub line_index: Option<usize>,
}

impl PhaseTrack {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn zeros(n: usize, sample_rate: f64) -> Self {
        PhaseTrack {
            samples: vec![0.0; n],
            sample_rate,
            line_index: None,
        }
    }

    /// Removes the ramp that joins the last sample back to the first, so the
    /// track can be repeated periodically without a jump. The track must hold
    /// one extra closing sample, which is dropped.
    pub fn close_periodic(mut self) -> Self {
        let n = self.samples.len() - 1;
        let end = self.samples[n];
        for (i, v) in self.samples.iter_mut().enumerate() {
            *v -= end * i as f64 / n as f64;
        }
        self.samples.truncate(n);
        self
    }
}

/// Wiener phase with i.i.d. increments of variance `2 pi linewidth / sample_rate`.
pub fn gen_wiener<R: Rng>(
    linewidth_hz: f64,
    sample_rate: f64,
    n: usize,
    rng: &mut R,
) -> Result<PhaseTrack> {
    if linewidth_hz < 0.0 {
        return Err(Error::Parameter(format!("negative linewidth {linewidth_hz}")));
    }
    if n == 0 || sample_rate <= 0.0 {
        return Err(Error::Parameter("need n >= 1 and a positive sample rate".into()));
    }
    let mut samples = vec![0.0; n];
    if linewidth_hz > 0.0 {
        let sigma = wiener_increment_variance(linewidth_hz, sample_rate).sqrt();
        let mut acc = 0.0;
        for v in samples.iter_mut().skip(1) {
            let z: f64 = rng.sample(StandardNormal);
            acc += sigma * z;
            *v = acc;
        }
    }
    Ok(PhaseTrack {
        samples,
        sample_rate,
        line_index: None,
    })
}

pub fn wiener_increment_variance(linewidth_hz: f64, sample_rate: f64) -> f64 {
    2.0 * PI * linewidth_hz / sample_rate
}

/// Common and line-dependent components and the resulting per-line tracks.
#[derive(Debug, Clone)]
pub struct CombPhases {
    pub common: PhaseTrack,
    pub line_dependent: PhaseTrack,
    pub lines: Vec<PhaseTrack>,
}

/// Per-line phases `phi_k = phi_c + s_k * phi_d`. The two components are
/// drawn from separate generators. With `periodic`, both components are
/// closed into periodic tracks of length `n`.
pub fn gen_comb_phases<R: Rng, S: Rng>(
    spec: &CombSpec,
    sample_rate: f64,
    n: usize,
    common_rng: &mut R,
    line_rng: &mut S,
    periodic: bool,
) -> Result<CombPhases> {
    spec.validate()?;
    let extra = usize::from(periodic);
    let mut common = gen_wiener(spec.common_lw_hz, sample_rate, n + extra, common_rng)?;
    let mut line = gen_wiener(spec.line_lw_hz, sample_rate, n + extra, line_rng)?;
    if periodic {
        common = common.close_periodic();
        line = line.close_periodic();
    }
    let lines = spec
        .scale_factors
        .iter()
        .enumerate()
        .map(|(k, &s)| PhaseTrack {
            samples: common
                .samples
                .iter()
                .zip(&line.samples)
                .map(|(c, d)| c + s * d)
                .collect(),
            sample_rate,
            line_index: Some(k),
        })
        .collect();
    Ok(CombPhases {
        common,
        line_dependent: line,
        lines,
    })
}

/// `exp(j phi_k(t))` for a Tx line; for an LO line the frequency error
/// `fo + k_rel * fsr_dev` is added as a linear phase.
pub fn carrier_rotation(track: &PhaseTrack, line_k: usize, spec: &CombSpec, is_lo: bool) -> Vec<C64> {
    let w = if is_lo {
        2.0 * PI * spec.lo_frequency_error_hz(line_k) / track.sample_rate
    } else {
        0.0
    };
    track
        .samples
        .iter()
        .enumerate()
        .map(|(i, &phi)| C64::from_polar(1.0, phi + w * i as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn zero_linewidth_is_flat() {
        let mut rng = stream_rng(1, Stream::Test(0));
        let t = gen_wiener(0.0, 1e9, 100, &mut rng).unwrap();
        assert!(t.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_linewidth_rejected() {
        let mut rng = stream_rng(1, Stream::Test(0));
        assert!(gen_wiener(-1.0, 1e9, 10, &mut rng).is_err());
    }

    #[test]
    fn increment_variance_formula() {
        let v = wiener_increment_variance(200e3, 135e9);
        assert!((v - 9.308e-6).abs() < 1e-8, "{v}");
    }

    #[test]
    fn sample_variance_matches() {
        let mut rng = stream_rng(5, Stream::Test(1));
        let fs = 135e9;
        let t = gen_wiener(200e3, fs, 1_000_001, &mut rng).unwrap();
        assert_eq!(t.samples[0], 0.0);
        let inc: Vec<f64> = t.samples.windows(2).map(|w| w[1] - w[0]).collect();
        let var = inc.iter().map(|x| x * x).sum::<f64>() / inc.len() as f64;
        let want = wiener_increment_variance(200e3, fs);
        assert!((var / want - 1.0).abs() < 0.03);
    }

    #[test]
    fn zero_line_linewidth_gives_identical_lines() {
        let spec = CombSpec {
            line_lw_hz: 0.0,
            ..CombSpec::default()
        };
        let mut a = stream_rng(3, Stream::Test(2));
        let mut b = stream_rng(3, Stream::Test(3));
        let p = gen_comb_phases(&spec, 1e9, 1000, &mut a, &mut b, false).unwrap();
        for l in &p.lines {
            assert_eq!(l.samples, p.common.samples);
        }
    }

    #[test]
    fn outer_lines_anticorrelated() {
        let spec = CombSpec::default();
        let mut a = stream_rng(3, Stream::Test(2));
        let mut b = stream_rng(3, Stream::Test(3));
        let p = gen_comb_phases(&spec, 1e9, 5000, &mut a, &mut b, false).unwrap();
        let d1: Vec<f64> = (0..5000).map(|i| p.lines[0].samples[i] - p.common.samples[i]).collect();
        let d4: Vec<f64> = (0..5000).map(|i| p.lines[3].samples[i] - p.common.samples[i]).collect();
        let dot: f64 = d1.iter().zip(&d4).map(|(a, b)| a * b).sum();
        let n1: f64 = d1.iter().map(|a| a * a).sum();
        let n4: f64 = d4.iter().map(|a| a * a).sum();
        assert!((dot / (n1 * n4).sqrt() + 1.0).abs() < 1e-12);
        for i in 0..5000 {
            assert!((d1[i] + d4[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_track_is_periodic() {
        let mut rng = stream_rng(9, Stream::Test(4));
        let t = gen_wiener(1e6, 1e9, 1001, &mut rng).unwrap();
        let closing = t.samples[1000];
        let p = t.clone().close_periodic();
        assert_eq!(p.len(), 1000);
        // the step from the last sample back to the first equals the last
        // regular increment minus the closing drift
        let step = p.samples[0] - p.samples[999];
        let want = -(t.samples[1000] - t.samples[999]) + closing / 1000.0;
        assert!((step + want).abs() < 1e-12);
    }

    #[test]
    fn rotation_without_impairments_is_unity() {
        let spec = CombSpec {
            fo_hz: 0.0,
            fsr_dev_hz: 0.0,
            ..CombSpec::default()
        };
        let t = PhaseTrack::zeros(64, 1e9);
        for k in 0..4 {
            for v in carrier_rotation(&t, k, &spec, true) {
                assert!((v - C64::new(1.0, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn lo_frequency_ladder() {
        let spec = CombSpec::default();
        let fs = 1e10;
        let t = PhaseTrack::zeros(1000, fs);
        let slope = |k: usize| {
            let r = carrier_rotation(&t, k, &spec, true);
            (r[1] * r[0].conj()).arg() * fs / (2.0 * PI)
        };
        for k in 0..3 {
            assert!((slope(k + 1) - slope(k) - 1e6).abs() < 1e-3);
        }
        let center = (slope(1) + slope(2)) / 2.0;
        assert!((center - 200e6).abs() < 1e-3);
        let tx = carrier_rotation(&t, 0, &spec, false);
        assert!(tx.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn pure_fo_slope() {
        let spec = CombSpec {
            fsr_dev_hz: 0.0,
            ..CombSpec::default()
        };
        let fs = 1e10;
        let t = PhaseTrack::zeros(100, fs);
        for k in 0..4 {
            let r = carrier_rotation(&t, k, &spec, true);
            let w = (r[1] * r[0].conj()).arg() * fs;
            assert!((w - 2.0 * PI * 2e8).abs() < 1e-3);
        }
    }
}
