use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{FftPair, C64};
use crate::sigkit::rrc_filter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncConfig {
    pub segments: usize,
    pub segment_len: usize,
    pub threshold: f64,
    pub roll_off: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            segments: 4,
            segment_len: 256,
            threshold: 0.3,
            roll_off: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// Frame start in samples, reduced modulo the frame length.
    pub offset: usize,
    /// Normalized correlation metric at the peak (1 for a clean copy).
    pub peak: f64,
}

/// Locates the frame header in a periodic dual-polarization sequence at
/// `sps` samples per symbol. The header is split into segments whose
/// correlation magnitudes are summed, which tolerates a residual frequency
/// offset across the header.
pub fn frame_sync(
    rx: &[Vec<C64>; 2],
    header: &[Vec<C64>; 2],
    frame_len: usize,
    sps: usize,
    cfg: &SyncConfig,
) -> Result<SyncResult> {
    let n = rx[0].len();
    if rx[1].len() != n || n % (frame_len * sps) != 0 {
        return Err(Error::InputSize(format!(
            "{n} samples are not a whole number of {frame_len}-symbol frames at {sps} sps"
        )));
    }
    if header[0].len() < cfg.segments * cfg.segment_len {
        return Err(Error::InputSize("header shorter than the sync segments".into()));
    }
    let n_sym = n / sps;
    let plan = FftPair::new(n);
    let rx_spec: Vec<Vec<C64>> = rx
        .iter()
        .map(|v| {
            let mut b = v.clone();
            plan.forward(&mut b);
            b
        })
        .collect();
    // sliding window energy per segment length
    let win = cfg.segment_len * sps;
    let energy: Vec<f64> = {
        let p: Vec<f64> = (0..n).map(|i| rx[0][i].norm_sqr() + rx[1][i].norm_sqr()).collect();
        let mut acc: f64 = p[..win].iter().sum();
        let mut e = Vec::with_capacity(n);
        for i in 0..n {
            e.push(acc.max(1e-300));
            acc += p[(i + win) % n] - p[i];
        }
        e
    };

    let mut metric = vec![0.0f64; n];
    for (q, hq) in header.iter().enumerate() {
        let _ = q;
        for s in 0..cfg.segments {
            let mut sym = vec![C64::new(0.0, 0.0); n_sym];
            let lo = s * cfg.segment_len;
            sym[lo..lo + cfg.segment_len].copy_from_slice(&hq[lo..lo + cfg.segment_len]);
            let mut t = rrc_filter(&sym, cfg.roll_off, sps)?;
            let t_energy: f64 = t.iter().map(|v| v.norm_sqr()).sum();
            plan.forward(&mut t);
            let mut mag2 = vec![0.0f64; n];
            for r in &rx_spec {
                let mut c: Vec<C64> = r.iter().zip(&t).map(|(a, b)| a * b.conj()).collect();
                plan.inverse(&mut c);
                for (m, v) in mag2.iter_mut().zip(&c) {
                    *m += v.norm_sqr();
                }
            }
            let shift = lo * sps;
            for tau in 0..n {
                let e = energy[(tau + shift) % n];
                metric[tau] += (mag2[tau] / (t_energy * e)).sqrt();
            }
        }
    }
    let norm = (cfg.segments * header.len()) as f64;
    let (best, peak) = metric
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &m)| if m > b.1 { (i, m) } else { b });
    let peak = peak / norm;
    if !(peak >= cfg.threshold) {
        return Err(Error::SyncFailure {
            peak,
            threshold: cfg.threshold,
        });
    }
    Ok(SyncResult {
        offset: best % (frame_len * sps),
        peak,
    })
}

/// Resolves which of `n_frames` identical-header frames sits at index 0 of
/// a frame-aligned record, by non-coherent block correlation against a known
/// reference segment of frame 1 starting at sample `start`. Returns the
/// frame index; rotating left by `index * frame_samples` puts frame 1 first.
pub fn identify_frame(
    rx: &[Vec<C64>; 2],
    reference: &[Vec<C64>; 2],
    start: usize,
    frame_samples: usize,
    n_frames: usize,
    block: usize,
) -> Result<usize> {
    let n = rx[0].len();
    let len = reference[0].len();
    if n != frame_samples * n_frames || block == 0 || start + len > frame_samples {
        return Err(Error::InputSize("reference does not fit in one frame".into()));
    }
    let score = |f: usize| -> f64 {
        let base = f * frame_samples + start;
        let mut acc = 0.0;
        for b in (0..len).step_by(block) {
            let end = (b + block).min(len);
            for x in rx {
                for r in reference {
                    let c: C64 = (b..end).map(|i| x[(base + i) % n] * r[i].conj()).sum();
                    acc += c.norm();
                }
            }
        }
        acc
    };
    Ok((0..n_frames)
        .map(|f| (f, score(f)))
        .fold((0, f64::MIN), |b, (f, v)| if v > b.1 { (f, v) } else { b })
        .0)
}

/// Rotates each polarization left by `offset` samples.
pub fn align(rx: &[Vec<C64>; 2], offset: usize) -> [Vec<C64>; 2] {
    rx.clone().map(|mut v| {
        let n = v.len();
        v.rotate_left(offset % n);
        v
    })
}

/// Coarse carrier frequency offset from the fourth-power spectral line,
/// searched within `max_abs_hz`.
pub fn coarse_fo_4th_power(rx: &[Vec<C64>; 2], sample_rate: f64, max_abs_hz: f64) -> f64 {
    let n = rx[0].len();
    let plan = FftPair::new(n);
    let mut power = vec![0.0f64; n];
    for v in rx {
        let mut b: Vec<C64> = v.iter().map(|z| (z * z) * (z * z)).collect();
        plan.forward(&mut b);
        for (p, c) in power.iter_mut().zip(&b) {
            *p += c.norm_sqr();
        }
    }
    let df = sample_rate / n as f64;
    let kmax = ((4.0 * max_abs_hz / df).ceil() as i64).min(n as i64 / 2 - 2);
    let at = |k: i64| power[k.rem_euclid(n as i64) as usize];
    let best = (-kmax..=kmax).fold(0i64, |b, k| if at(k) > at(b) { k } else { b });
    let (l, c, r) = (at(best - 1), at(best), at(best + 1));
    let denom = l - 2.0 * c + r;
    let frac = if denom.abs() > 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    (best as f64 + frac.clamp(-0.5, 0.5)) * df / 4.0
}
