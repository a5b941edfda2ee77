//! Achievable-rate metrics and net-rate accounting.

use crate::error::{Error, Result};
use crate::fft::C64;
use crate::sigkit::{header_overhead, Constellation, PilotPlan};

pub const DEFAULT_CODING_GAP: f64 = 0.07;

/// Mean squared error between received and transmitted symbols.
pub fn est_noise_var(received: &[C64], reference: &[C64]) -> Result<f64> {
    if received.len() != reference.len() || received.is_empty() {
        return Err(Error::InputSize(format!(
            "{} received vs {} reference symbols",
            received.len(),
            reference.len()
        )));
    }
    Ok(received
        .iter()
        .zip(reference)
        .map(|(y, x)| (y - x).norm_sqr())
        .sum::<f64>()
        / received.len() as f64)
}

/// Packs MSB-first bit groups into labels.
pub fn labels_from_bits(bits: &[u8], bits_per_symbol: usize) -> Vec<u32> {
    bits.chunks_exact(bits_per_symbol)
        .map(|g| g.iter().fold(0u32, |a, &b| (a << 1) | (b & 1) as u32))
        .collect()
}

/// Generalized mutual information in bits/symbol under bit-metric decoding
/// with a circular Gaussian auxiliary channel of variance `sigma2`.
pub fn gmi(received: &[C64], tx_labels: &[u32], c: &Constellation, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::Parameter(format!("noise variance {sigma2} must be positive")));
    }
    if received.len() != tx_labels.len() || received.is_empty() {
        return Err(Error::InputSize(format!(
            "{} symbols vs {} labels",
            received.len(),
            tx_labels.len()
        )));
    }
    let m = c.bits_per_symbol();
    let pts = c.points();
    let mut metric = vec![0.0f64; pts.len()];
    let mut penalty = 0.0;
    for (&y, &lab) in received.iter().zip(tx_labels) {
        let mut top = f64::MIN;
        for (d, x) in metric.iter_mut().zip(pts) {
            *d = -(y - x).norm_sqr() / sigma2;
            top = top.max(*d);
        }
        let mut all = 0.0;
        let mut same = vec![0.0f64; m];
        for (l, d) in metric.iter().enumerate() {
            let e = (d - top).exp();
            all += e;
            let diff = l as u32 ^ lab;
            for (i, s) in same.iter_mut().enumerate() {
                if (diff >> (m - 1 - i)) & 1 == 0 {
                    *s += e;
                }
            }
        }
        for s in same {
            penalty += (all / s).log2();
        }
    }
    let g = m as f64 - penalty / received.len() as f64;
    Ok(g.clamp(0.0, m as f64))
}

pub fn ngmi(received: &[C64], tx_labels: &[u32], c: &Constellation, sigma2: f64) -> Result<f64> {
    Ok(gmi(received, tx_labels, c, sigma2)? / c.bits_per_symbol() as f64)
}

/// NGMI of a dual-polarization channel: noise variance estimated and GMI
/// evaluated per polarization, then averaged.
pub fn ngmi_dual(
    received: [&[C64]; 2],
    tx_labels: [&[u32]; 2],
    c: &Constellation,
) -> Result<f64> {
    let mut acc = 0.0;
    for p in 0..2 {
        let reference: Vec<C64> = tx_labels[p].iter().map(|&l| c.point(l)).collect();
        let s2 = est_noise_var(received[p], &reference)?.max(1e-12);
        acc += ngmi(received[p], tx_labels[p], c, s2)?;
    }
    Ok(acc / 2.0)
}

/// FEC overhead `(1 - Rc)/Rc` with `Rc = ngmi - gap`.
pub fn fec_oh(ngmi: f64, gap: f64) -> Result<f64> {
    let rc = ngmi - gap;
    if !(rc > 0.0 && rc <= 1.0 + 1e-12) {
        return Err(Error::UnsupportedOperatingPoint { rate: rc });
    }
    Ok((1.0 - rc.min(1.0)) / rc.min(1.0))
}

/// Inverse of [`fec_oh`].
pub fn ngmi_from_fec_oh(oh: f64, gap: f64) -> f64 {
    1.0 / (1.0 + oh) + gap
}

pub fn net_rate(fec_oh: f64, poh: f64) -> f64 {
    1.0 / ((1.0 + fec_oh) * (1.0 + poh))
}

/// Relative gain of `r_net` over the baseline, as a ratio.
pub fn gain(r_net: f64, r_net_baseline: f64) -> f64 {
    r_net / r_net_baseline - 1.0
}

/// Header plus carrier-recovery overhead of one channel. The header term
/// uses `rate_frame_len`, the frame length the rate is quoted for.
pub fn channel_poh(plan: &PilotPlan, rate_frame_len: usize) -> f64 {
    header_overhead(plan.header_len, rate_frame_len) + plan.overhead()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub ngmi: Vec<f64>,
    pub ngmi_mean: f64,
    pub fec_oh: f64,
    pub poh: Vec<f64>,
    pub poh_mean: f64,
    pub r_net: Vec<f64>,
    pub r_net_mean: f64,
}

impl MetricsReport {
    /// NGMI is averaged over channels before the FEC overhead is taken
    /// (one joint code); rates are then averaged over channels.
    pub fn new(ngmi: Vec<f64>, poh: Vec<f64>, gap: f64) -> Result<Self> {
        if ngmi.is_empty() || ngmi.len() != poh.len() {
            return Err(Error::InputSize(format!(
                "{} NGMI values for {} POH values",
                ngmi.len(),
                poh.len()
            )));
        }
        let n = ngmi.len() as f64;
        let ngmi_mean = ngmi.iter().sum::<f64>() / n;
        let oh = fec_oh(ngmi_mean, gap)?;
        let r_net: Vec<f64> = poh.iter().map(|&p| net_rate(oh, p)).collect();
        Ok(MetricsReport {
            ngmi_mean,
            fec_oh: oh,
            poh_mean: poh.iter().sum::<f64>() / n,
            r_net_mean: r_net.iter().sum::<f64>() / n,
            ngmi,
            poh,
            r_net,
        })
    }

    pub fn gain_over(&self, baseline: &MetricsReport) -> f64 {
        gain(self.r_net_mean, baseline.r_net_mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::sigkit::Format;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn awgn_set(c: &Constellation, n: usize, sigma2: f64, seed: u64) -> (Vec<C64>, Vec<u32>) {
        let mut rng = stream_rng(seed, Stream::Test(11));
        let s = (sigma2 / 2.0).sqrt();
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..c.len() as u32)).collect();
        let y = labels
            .iter()
            .map(|&l| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                c.point(l) + C64::new(s * a, s * b)
            })
            .collect();
        (y, labels)
    }

    #[test]
    fn noiseless_limit() {
        let c = Constellation::new(Format::Qam64);
        let labels: Vec<u32> = (0..64).collect();
        let y: Vec<C64> = labels.iter().map(|&l| c.point(l)).collect();
        let g = gmi(&y, &labels, &c, 1e-6).unwrap();
        assert!((g - 6.0).abs() < 1e-9);
    }

    #[test]
    fn independent_input_gives_zero() {
        let c = Constellation::new(Format::Qam16);
        let (y, _) = awgn_set(&c, 50_000, 0.01, 1);
        let mut rng = stream_rng(2, Stream::Test(12));
        let other: Vec<u32> = (0..y.len()).map(|_| rng.random_range(0..16)).collect();
        let ref_pts: Vec<C64> = other.iter().map(|&l| c.point(l)).collect();
        let s2 = est_noise_var(&y, &ref_pts).unwrap();
        assert!(ngmi(&y, &other, &c, s2).unwrap() < 0.01);
    }

    #[test]
    fn noise_var_at_22db() {
        let c = Constellation::new(Format::Qam16);
        let s2 = 10f64.powf(-2.2);
        let (y, l) = awgn_set(&c, 100_000, s2, 3);
        let x: Vec<C64> = l.iter().map(|&v| c.point(v)).collect();
        let e = est_noise_var(&y, &x).unwrap();
        assert!((e / s2 - 1.0).abs() < 0.02);
        assert_eq!(est_noise_var(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_sigma() {
        let c = Constellation::new(Format::Qpsk);
        assert!(gmi(&[C64::new(0.0, 0.0)], &[0], &c, 0.0).is_err());
    }

    #[test]
    fn fec_chain_values() {
        assert!(fec_oh(1.07, 0.07).unwrap().abs() < 1e-12);
        assert!((ngmi_from_fec_oh(0.175, 0.07) - 0.921).abs() < 1e-3);
        assert!((ngmi_from_fec_oh(0.23, 0.07) - 0.883).abs() < 1e-3);
        assert!(matches!(fec_oh(0.05, 0.07), Err(Error::UnsupportedOperatingPoint { .. })));
        let main = channel_poh(&PilotPlan::new(0), 1 << 17);
        assert!((header_overhead(1024, 1 << 17) - 0.007874).abs() < 1e-6);
        assert!((main - 0.04013).abs() < 1e-5);
        let oh = fec_oh(0.921, 0.07).unwrap();
        assert!((net_rate(oh, main) - 0.8182).abs() < 2e-4);
    }

    #[test]
    fn equal_ngmi_pilot_gain() {
        let f = 1 << 17;
        let base = MetricsReport::new(vec![0.9; 4], vec![channel_poh(&PilotPlan::new(0), f); 4], 0.07).unwrap();
        let mut poh = vec![channel_poh(&PilotPlan::new(64), f); 4];
        poh[1] = channel_poh(&PilotPlan::new(0), f);
        let ms1 = MetricsReport::new(vec![0.9; 4], poh, 0.07).unwrap();
        let g = 100.0 * ms1.gain_over(&base);
        assert!((g - 2.2).abs() < 0.1, "{g}");
        assert_eq!(base.gain_over(&base), 0.0);
    }

    #[test]
    fn gmi_monotone_in_sigma() {
        let c = Constellation::new(Format::Qam16);
        let (y, l) = awgn_set(&c, 5000, 0.02, 5);
        let mut last = f64::MAX;
        for k in 1..20 {
            let g = gmi(&y, &l, &c, 0.02 * k as f64).unwrap();
            assert!(g <= last + 1e-12);
            last = g;
        }
    }
}
