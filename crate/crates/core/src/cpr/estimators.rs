use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::known::{derotate, hold, interp_linear, unwrap, wrap, Burst, KnownSymbols};
use crate::error::{Error, Result};
use crate::fft::{FftPair, C64};
use crate::sigkit::Constellation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackSource {
    PilotInterp,
    Dd,
    Held,
    Reconstructed,
}

/// Per-symbol phase estimate in radians (unwrapped) with the frequency
/// offset estimate in force at each symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimateTrack {
    pub phase: Vec<f64>,
    pub fo_hz: Vec<f64>,
    pub source: TrackSource,
}

impl PhaseEstimateTrack {
    fn phase_only(phase: Vec<f64>, source: TrackSource) -> Self {
        let n = phase.len();
        PhaseEstimateTrack {
            phase,
            fo_hz: vec![0.0; n],
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpllGains {
    /// Proportional gain per burst update.
    pub kp: f64,
    /// Integral gain per burst update, normalized to the burst spacing.
    pub ki: f64,
}

impl Default for DpllGains {
    fn default() -> Self {
        DpllGains { kp: 0.05, ki: 2e-3 }
    }
}

/// Frequency-offset estimate and the phase it integrates to.
#[derive(Debug, Clone, PartialEq)]
pub struct FoTrack {
    pub fo_hz: Vec<f64>,
    /// `sum_{m<n} 2 pi fo(m) / Rs`
    pub phase: Vec<f64>,
}

impl FoTrack {
    pub fn from_fo(fo_hz: Vec<f64>, symbol_rate: f64) -> Self {
        let mut phase = Vec::with_capacity(fo_hz.len());
        let mut acc = 0.0;
        for f in &fo_hz {
            phase.push(acc);
            acc += 2.0 * PI * f / symbol_rate;
        }
        FoTrack { fo_hz, phase }
    }
}

/// Coarse acquisition: peak of the zero-padded DFT of the pilot phasors
/// sampled on the block grid. Unambiguous within half the block rate.
pub fn coarse_fo_pilots(sym: &[Vec<C64>; 2], known: &KnownSymbols, symbol_rate: f64) -> f64 {
    let bl = known.plan().block_len;
    let n_slots = sym[0].len() / bl;
    let len = (4 * n_slots).next_power_of_two();
    let mut q = vec![C64::new(0.0, 0.0); len];
    for (j, v) in q.iter_mut().take(n_slots).enumerate() {
        let i = j * bl;
        for p in 0..2 {
            if let Some(x) = known.value(p, i) {
                *v += sym[p][i] * x.conj();
            }
        }
    }
    FftPair::new(len).forward(&mut q);
    let pw: Vec<f64> = q.iter().map(|v| v.norm_sqr()).collect();
    let best = (0..len).fold(0, |b, k| if pw[k] > pw[b] { k } else { b });
    let l = pw[(best + len - 1) % len];
    let c = pw[best];
    let r = pw[(best + 1) % len];
    let den = l - 2.0 * c + r;
    let frac = if den.abs() > 0.0 { (0.5 * (l - r) / den).clamp(-0.5, 0.5) } else { 0.0 };
    let k = crate::fft::signed_bin(best, len) as f64 + frac;
    k / len as f64 * symbol_rate / bl as f64
}

fn run_loop(
    z: &[C64],
    bursts: &[Burst],
    nu0: f64,
    gains: &DpllGains,
    nu_limit: f64,
) -> Result<Vec<f64>> {
    let mut nu = nu0;
    let mut theta = z[0].arg();
    let mut out = Vec::with_capacity(z.len());
    out.push(nu);
    for b in 1..z.len() {
        let dt = bursts[b].centroid - bursts[b - 1].centroid;
        let pred = theta + nu * dt;
        let e = wrap(z[b].arg() - pred);
        theta = pred + gains.kp * e;
        nu += gains.ki * e / dt;
        if !nu.is_finite() || nu.abs() > nu_limit {
            return Err(Error::LoopDivergence {
                burst: b,
                fo_hz: nu / (2.0 * PI),
            });
        }
        out.push(nu);
    }
    Ok(out)
}

/// Pilot-aided second-order frequency loop updated once per burst. The
/// loop is seeded by [`coarse_fo_pilots`], run once to settle and then
/// rerun from the settled frequency. Returns the FO track and the
/// FO-derotated symbols.
pub fn dpll_fo(
    sym: &[Vec<C64>; 2],
    known: &KnownSymbols,
    gains: &DpllGains,
    symbol_rate: f64,
) -> Result<(FoTrack, [Vec<C64>; 2])> {
    let bursts = known.bursts();
    if bursts.len() < 2 {
        return Err(Error::InputSize("DPLL needs at least two pilot bursts".into()));
    }
    let z: Vec<C64> = bursts.iter().map(|b| known.burst_phasor(sym, b)).collect();
    let nu0 = 2.0 * PI * coarse_fo_pilots(sym, known, symbol_rate) / symbol_rate;
    // twice the pilot rate, in rad/symbol
    let nu_limit = 2.0 * 2.0 * PI / known.plan().block_len as f64;
    let settle = run_loop(&z, &bursts, nu0, gains, nu_limit)?;
    let nu = run_loop(&z, &bursts, *settle.last().unwrap(), gains, nu_limit)?;
    let times: Vec<f64> = bursts.iter().map(|b| b.centroid).collect();
    let fo: Vec<f64> = nu.iter().map(|v| v * symbol_rate / (2.0 * PI)).collect();
    let track = FoTrack::from_fo(interp_linear(&times, &fo, sym[0].len()), symbol_rate);
    let out = derotate(sym, &track.phase);
    Ok((track, out))
}

fn burst_phases(sym: &[Vec<C64>; 2], known: &KnownSymbols) -> (Vec<f64>, Vec<f64>) {
    let bursts = known.bursts();
    let raw: Vec<f64> = bursts.iter().map(|b| known.burst_phasor(sym, b).arg()).collect();
    (bursts.iter().map(|b| b.centroid).collect(), unwrap(&raw))
}

/// Stage 1: joint-polarization ML phase per pilot burst at the burst
/// centroid, unwrapped and linearly interpolated.
pub fn pa_cpe_stage1(sym: &[Vec<C64>; 2], known: &KnownSymbols) -> PhaseEstimateTrack {
    let (t, v) = burst_phases(sym, known);
    PhaseEstimateTrack::phase_only(interp_linear(&t, &v, sym[0].len()), TrackSource::PilotInterp)
}

/// Stage 2: decision-directed ML phase over a centered window
/// `0 < |j - k| <= max(window/2, 1)`. The symbol being corrected is left out
/// of its own estimate so its noise does not leak into the correction.
/// Known symbols are used in place of decisions when `known` is given.
pub fn dd_ml_stage2(
    sym: &[Vec<C64>; 2],
    window: usize,
    c: &Constellation,
    known: Option<&KnownSymbols>,
) -> PhaseEstimateTrack {
    let n = sym[0].len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(C64::new(0.0, 0.0));
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for p in 0..2 {
            let d = known
                .and_then(|k| k.value(p, j))
                .unwrap_or_else(|| c.decide_point(sym[p][j]));
            acc += sym[p][j] * d.conj();
        }
        prefix.push(acc);
    }
    let h = (window / 2).max(1);
    let phase = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(h);
            let hi = (k + h + 1).min(n);
            let own = prefix[k + 1] - prefix[k];
            (prefix[hi] - prefix[lo] - own).arg()
        })
        .collect();
    PhaseEstimateTrack::phase_only(phase, TrackSource::Dd)
}

/// Light pilot-aided CPR: burst estimates held until the next burst.
pub fn pa_cpr_light(sym: &[Vec<C64>; 2], known: &KnownSymbols) -> PhaseEstimateTrack {
    let (t, v) = burst_phases(sym, known);
    PhaseEstimateTrack::phase_only(hold(&t, &v, sym[0].len()), TrackSource::Held)
}

/// Picks the window maximizing `score` over `grid`; ties go to the smaller
/// window. Returns the winner and every score.
pub fn optimize_dd_window<F>(grid: &[usize], mut score: F) -> Result<(usize, Vec<f64>)>
where
    F: FnMut(usize) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::Parameter("empty DD window grid".into()));
    }
    let scores = grid.iter().map(|&w| score(w)).collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for i in 1..grid.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Ok((grid[best], scores))
}

/// Full main-channel recovery: DPLL, then stage 1 and stage 2.
#[derive(Debug, Clone)]
pub struct MainRecovery {
    pub fo: FoTrack,
    /// Phase removed after FO derotation (stage 1 + stage 2).
    pub pn_phase: Vec<f64>,
    pub corrected: [Vec<C64>; 2],
}

impl MainRecovery {
    /// Total phase removed from the equalizer output.
    pub fn total_phase(&self) -> Vec<f64> {
        self.fo.phase.iter().zip(&self.pn_phase).map(|(a, b)| a + b).collect()
    }
}

/// Runs the DPLL and stage 1; stage 2 is applied by [`finish_main`] so the
/// window can be swept without repeating the front half.
pub fn main_stage1(
    sym: &[Vec<C64>; 2],
    known: &KnownSymbols,
    gains: &DpllGains,
    symbol_rate: f64,
) -> Result<(FoTrack, Vec<f64>, [Vec<C64>; 2])> {
    let (fo, derot) = dpll_fo(sym, known, gains, symbol_rate)?;
    let s1 = pa_cpe_stage1(&derot, known);
    let corr = derotate(&derot, &s1.phase);
    Ok((fo, s1.phase, corr))
}

pub fn finish_main(
    fo: FoTrack,
    stage1: &[f64],
    after_stage1: &[Vec<C64>; 2],
    window: usize,
    c: &Constellation,
    known: &KnownSymbols,
) -> MainRecovery {
    let s2 = dd_ml_stage2(after_stage1, window, c, Some(known));
    let corrected = derotate(after_stage1, &s2.phase);
    let pn_phase = stage1.iter().zip(&s2.phase).map(|(a, b)| a + b).collect();
    MainRecovery {
        fo,
        pn_phase,
        corrected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::sigkit::{Format, PilotPlan, Slot};
    use rand::Rng;
    use rand_distr::StandardNormal;

    const RS: f64 = 135e9;

    fn tx(known: &KnownSymbols, c: &Constellation, seed: u64) -> [Vec<C64>; 2] {
        let mut rng = stream_rng(seed, Stream::Test(20));
        [0, 1].map(|p| {
            (0..known.len())
                .map(|n| known.value(p, n).unwrap_or_else(|| c.point(rng.random_range(0..c.len() as u32))))
                .collect()
        })
    }

    fn impair(x: &[Vec<C64>; 2], phase: impl Fn(usize) -> f64, snr_db: f64, seed: u64) -> [Vec<C64>; 2] {
        let mut rng = stream_rng(seed, Stream::Test(21));
        let s = if snr_db.is_finite() { (10f64.powf(-snr_db / 10.0) / 2.0).sqrt() } else { 0.0 };
        x.clone().map(|v| {
            v.iter()
                .enumerate()
                .map(|(n, z)| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    z * C64::from_polar(1.0, phase(n)) + C64::new(s * a, s * b)
                })
                .collect()
        })
    }

    #[test]
    fn dpll_locks_on_200mhz() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 14, 2, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 1);
        let fo = 200e6;
        let y = impair(&x, |n| 2.0 * PI * fo * n as f64 / RS + 0.4, 20.0, 2);
        let (t, _) = dpll_fo(&y, &k, &DpllGains::default(), RS).unwrap();
        let tail = &t.fo_hz[t.fo_hz.len() / 2..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - fo).abs() < 1e6, "{mean}");
    }

    #[test]
    fn dpll_range_and_snr15() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 14, 2, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 3);
        for fo in [-300e6, -120e6, 0.0, 57e6, 300e6] {
            let y = impair(&x, |n| 2.0 * PI * fo * n as f64 / RS, 15.0, 4);
            let (t, _) = dpll_fo(&y, &k, &DpllGains::default(), RS).unwrap();
            let tail = &t.fo_hz[t.fo_hz.len() / 2..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            assert!((mean - fo).abs() < 1e6, "{fo}: {mean}");
        }
    }

    #[test]
    fn stage1_constant_and_ramp() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 12, 2, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 5);
        let y = impair(&x, |_| 0.3, f64::INFINITY, 6);
        let t = pa_cpe_stage1(&y, &k);
        assert!(t.phase.iter().all(|p| (p - 0.3).abs() < 1e-12));
        let y = impair(&x, |n| 1e-3 * n as f64, f64::INFINITY, 6);
        let t = pa_cpe_stage1(&y, &k);
        let b = k.bursts();
        let (lo, hi) = (b[0].centroid as usize + 1, b.last().unwrap().centroid as usize);
        for n in lo..hi {
            assert!((t.phase[n] - 1e-3 * n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn stage1_variance_awgn() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 15, 2, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 7);
        let snr_db = 15.0;
        let y = impair(&x, |_| 0.0, snr_db, 8);
        let (_, v) = burst_phases(&y, &k);
        let var = v.iter().map(|p| p * p).sum::<f64>() / v.len() as f64;
        // 4 pilots on each of 2 polarizations
        let want = 1.0 / (2.0 * 8.0 * 10f64.powf(snr_db / 10.0));
        assert!((var / want - 1.0).abs() < 0.2, "{var} {want}");
    }

    #[test]
    fn stage2_noiseless_exact_and_window_statistics() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 13, 1, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 9);
        let y = impair(&x, |_| 0.05, f64::INFINITY, 10);
        let t = dd_ml_stage2(&y, 16, &c, None);
        assert!(t.phase.iter().all(|p| (p - 0.05).abs() < 1e-12));

        let y = impair(&x, |_| 0.0, 22.0, 11);
        let var = |w| {
            let t = dd_ml_stage2(&y, w, &c, None);
            t.phase.iter().map(|p| p * p).sum::<f64>() / t.phase.len() as f64
        };
        assert!(var(1) / var(32) > 4.0);
    }

    #[test]
    fn light_hold_lag() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 17, 1, PilotPlan::new(64)).unwrap();
        let x = tx(&k, &c, 12);
        let w = 2.0 * PI * 1e6 / RS;
        let y = impair(&x, |n| w * n as f64, f64::INFINITY, 13);
        let t = pa_cpr_light(&y, &k);
        let start = 1024 + 4 * 32;
        let worst = (start..k.len() - 4096)
            .map(|n| (w * n as f64 - t.phase[n]).abs())
            .fold(0.0, f64::max);
        assert!((worst / 0.101 - 1.0).abs() < 0.05, "{worst}");
        // piecewise constant with changes only at burst centroids
        let cents: Vec<usize> = k.bursts().iter().map(|b| b.centroid.ceil() as usize).collect();
        for n in 1..t.phase.len() {
            if t.phase[n] != t.phase[n - 1] {
                assert!(cents.contains(&n));
            }
        }
    }

    #[test]
    fn estimators_equivariant() {
        let c = Constellation::new(Format::Qam64);
        let k = KnownSymbols::new(1 << 12, 1, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 14);
        let a = impair(&x, |n| 1e-4 * n as f64, 25.0, 15);
        let b: [Vec<C64>; 2] = a.clone().map(|v| v.iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect());
        for (ta, tb) in [
            (pa_cpe_stage1(&a, &k), pa_cpe_stage1(&b, &k)),
            (pa_cpr_light(&a, &k), pa_cpr_light(&b, &k)),
        ] {
            for (u, v) in ta.phase.iter().zip(&tb.phase) {
                assert!(wrap(v - u - 0.7).abs() < 1e-9);
            }
        }
        let ka = dd_ml_stage2(&a, 32, &c, Some(&k));
        let kb = dd_ml_stage2(&derotate(&b, &vec![0.7; a[0].len()]), 32, &c, Some(&k));
        for (u, v) in ka.phase.iter().zip(&kb.phase) {
            assert!(wrap(v - u).abs() < 1e-9);
        }
        assert_eq!(k.slot(0), Slot::Header);
    }

    #[test]
    fn window_optimizer_prefers_long_without_pn() {
        let c = Constellation::new(Format::Qam16);
        let k = KnownSymbols::new(1 << 13, 1, PilotPlan::new(0)).unwrap();
        let x = tx(&k, &c, 16);
        let y = impair(&x, |_| 0.0, 14.0, 17);
        let grid = [8, 16, 32, 64, 128, 256];
        let (w, _) = optimize_dd_window(&grid, |w| {
            let t = dd_ml_stage2(&y, w, &c, Some(&k));
            let z = derotate(&y, &t.phase);
            let e: f64 = (0..z[0].len()).map(|n| (z[0][n] - x[0][n]).norm_sqr()).sum();
            Ok(-e)
        })
        .unwrap();
        assert_eq!(w, 256);
    }
}
