use crate::error::{Error, Result};
use crate::fft::{FftPair, C64};
use crate::sigkit::rrc_filter;

use super::field::{dbm_to_w, FieldGrid};
use super::params::LinkParams;

/// Per-channel carrier placement on the composite grid. Offsets are snapped
/// to whole DFT bins so every channel is exactly periodic on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    pub grid_len: usize,
    pub grid_rate: f64,
    pub bins: Vec<i64>,
}

impl ChannelPlan {
    pub fn new(nominal_offsets_hz: &[f64], grid_len: usize, grid_rate: f64) -> Self {
        let df = grid_rate / grid_len as f64;
        ChannelPlan {
            grid_len,
            grid_rate,
            bins: nominal_offsets_hz
                .iter()
                .map(|f| (f / df).round() as i64)
                .collect(),
        }
    }

    pub fn n_channels(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_spacing(&self) -> f64 {
        self.grid_rate / self.grid_len as f64
    }

    pub fn offset_hz(&self, k: usize) -> f64 {
        self.bins[k] as f64 * self.bin_spacing()
    }
}

/// One channel's transmit symbols and optional carrier rotation at the grid
/// rate (phase noise and any frequency ladder already folded in).
pub struct ChannelInput<'a> {
    pub symbols: [&'a [C64]; 2],
    pub rotation: Option<&'a [C64]>,
}

/// RRC-shapes every channel, applies its carrier rotation, shifts it to its
/// slot and sums into one dual-polarization field. Each carrier is launched
/// at `launch_power_dbm`, split evenly over the polarizations.
pub fn modulate_mux(
    channels: &[ChannelInput<'_>],
    plan: &ChannelPlan,
    link: &LinkParams,
) -> Result<FieldGrid> {
    if channels.len() != plan.n_channels() {
        return Err(Error::InputSize(format!(
            "{} channel inputs for {} carriers",
            channels.len(),
            plan.n_channels()
        )));
    }
    let n = plan.grid_len;
    let sps = link.oversample;
    let half_bw = link.symbol_rate * (1.0 + link.roll_off) / 2.0;
    for k in 0..plan.n_channels() {
        let f = plan.offset_hz(k).abs() + half_bw;
        if f >= plan.grid_rate / 2.0 {
            return Err(Error::Configuration(format!(
                "channel {k} occupies up to {f:.4e} Hz, beyond the grid Nyquist frequency {:.4e} Hz",
                plan.grid_rate / 2.0
            )));
        }
    }
    let amp = (dbm_to_w(link.launch_power_dbm) / 2.0).sqrt();
    let fft = FftPair::new(n);
    let mut spec = [vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]];
    for (k, ch) in channels.iter().enumerate() {
        for p in 0..2 {
            let syms = ch.symbols[p];
            if syms.len() * sps != n {
                return Err(Error::InputSize(format!(
                    "channel {k} pol {p}: {} symbols at {sps} sps do not fill a {n}-sample grid",
                    syms.len()
                )));
            }
            let mut w = rrc_filter(syms, link.roll_off, sps)?;
            if let Some(rot) = ch.rotation {
                if rot.len() != n {
                    return Err(Error::InputSize(format!(
                        "rotation of length {} for a {n}-sample grid",
                        rot.len()
                    )));
                }
                for (v, r) in w.iter_mut().zip(rot) {
                    *v *= r;
                }
            }
            fft.forward(&mut w);
            let shift = plan.bins[k].rem_euclid(n as i64) as usize;
            for (i, v) in w.iter().enumerate() {
                spec[p][(i + shift) % n] += v * amp;
            }
        }
    }
    for s in spec.iter_mut() {
        fft.inverse(s);
    }
    Ok(FieldGrid {
        pol: spec,
        sample_rate: plan.grid_rate,
        ref_freq_offset: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::mean_power;
    use crate::linkchan::field::w_to_dbm;

    fn qpsk(n: usize, seed: u64) -> Vec<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut x = seed;
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                C64::new(
                    if x >> 63 == 0 { s } else { -s },
                    if (x >> 62) & 1 == 0 { s } else { -s },
                )
            })
            .collect()
    }

    #[test]
    fn launch_power_per_carrier() {
        let link = LinkParams::default();
        let m = 4096;
        let n = m * link.oversample;
        let plan = ChannelPlan::new(&[-225e9, -75e9, 75e9, 225e9], n, link.grid_rate());
        let syms: Vec<[Vec<C64>; 2]> = (0..4).map(|k| [qpsk(m, k), qpsk(m, k + 10)]).collect();
        let inputs: Vec<ChannelInput> = syms
            .iter()
            .map(|s| ChannelInput {
                symbols: [&s[0], &s[1]],
                rotation: None,
            })
            .collect();
        let f = modulate_mux(&inputs, &plan, &link).unwrap();
        let total = w_to_dbm(mean_power(&f.pol[0]) + mean_power(&f.pol[1]));
        assert!((total - (3.0 + 10.0 * 4f64.log10())).abs() < 0.05, "{total}");
    }

    #[test]
    fn aliasing_rejected() {
        let link = LinkParams {
            oversample: 2,
            ..LinkParams::default()
        };
        let m = 64;
        let plan = ChannelPlan::new(&[225e9], m * 2, link.grid_rate());
        let s = qpsk(m, 1);
        let r = modulate_mux(
            &[ChannelInput {
                symbols: [&s, &s],
                rotation: None,
            }],
            &plan,
            &link,
        );
        assert!(matches!(r, Err(Error::Configuration(_))));
    }

    #[test]
    fn bins_snap() {
        let plan = ChannelPlan::new(&[75e9], 1 << 19, 1.08e12);
        assert!((plan.offset_hz(0) - 75e9).abs() <= plan.bin_spacing() / 2.0);
    }
}
