use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::C64;
use crate::sigkit::Constellation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EqualizerConfig {
    pub n_taps: usize,
    pub mu_lms: f64,
    pub mu_rde: f64,
    /// Passes of data-aided training over the header.
    pub train_epochs: usize,
    /// Proportional and integral gains of the decision-directed phase
    /// tracker used while training.
    pub pll_kp: f64,
    pub pll_ki: f64,
    /// Output power above which the equalizer is declared diverged.
    pub divergence_power: f64,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        EqualizerConfig {
            n_taps: 31,
            mu_lms: 1e-3,
            mu_rde: 5e-5,
            train_epochs: 4,
            pll_kp: 0.1,
            pll_ki: 0.005,
            divergence_power: 100.0,
        }
    }
}

/// 2x2 butterfly of fractionally spaced FIR filters at 2 samples per symbol.
#[derive(Debug, Clone)]
pub struct Butterfly {
    /// `w[out][in][tap]`
    pub w: [[Vec<C64>; 2]; 2],
}

impl Butterfly {
    pub fn identity(n_taps: usize) -> Self {
        let mut w = [[vec![C64::new(0.0, 0.0); n_taps], vec![C64::new(0.0, 0.0); n_taps]],
            [vec![C64::new(0.0, 0.0); n_taps], vec![C64::new(0.0, 0.0); n_taps]]];
        w[0][0][n_taps / 2] = C64::new(1.0, 0.0);
        w[1][1][n_taps / 2] = C64::new(1.0, 0.0);
        Butterfly { w }
    }

    fn n_taps(&self) -> usize {
        self.w[0][0].len()
    }

    fn gather(&self, x: &[Vec<C64>; 2], k: usize, u: &mut [Vec<C64>; 2]) {
        let n = x[0].len();
        let half = self.n_taps() / 2;
        let base = 2 * k + n - half;
        for q in 0..2 {
            for (t, v) in u[q].iter_mut().enumerate() {
                *v = x[q][(base + t) % n];
            }
        }
    }

    fn output(&self, u: &[Vec<C64>; 2]) -> [C64; 2] {
        let mut y = [C64::new(0.0, 0.0); 2];
        for (p, yp) in y.iter_mut().enumerate() {
            for q in 0..2 {
                *yp += self.w[p][q]
                    .iter()
                    .zip(&u[q])
                    .map(|(a, b)| a * b)
                    .sum::<C64>();
            }
        }
        y
    }

    /// `w[p] += mu * g[p] * conj(u)`
    fn update(&mut self, u: &[Vec<C64>; 2], g: [C64; 2], mu: f64) {
        for p in 0..2 {
            let gp = g[p] * mu;
            for q in 0..2 {
                for (w, x) in self.w[p][q].iter_mut().zip(&u[q]) {
                    *w += gp * x.conj();
                }
            }
        }
    }
}

fn normalize(x: &[Vec<C64>; 2]) -> [Vec<C64>; 2] {
    x.clone().map(|v| {
        let p = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len().max(1) as f64;
        let g = if p > 0.0 { 1.0 / p.sqrt() } else { 1.0 };
        v.into_iter().map(|z| z * g).collect()
    })
}

fn check(y: &[C64; 2], k: usize, cfg: &EqualizerConfig) -> Result<()> {
    let p = y[0].norm_sqr() + y[1].norm_sqr();
    if !p.is_finite() || p > cfg.divergence_power {
        return Err(Error::EqualizerDivergence { symbol: k });
    }
    Ok(())
}

/// Data-aided LMS on the training symbols, with a joint second-order phase
/// tracker seeded from `fo_coarse_hz`.
pub fn train_lms(
    x: &[Vec<C64>; 2],
    eq: &mut Butterfly,
    training: &[Vec<C64>; 2],
    symbol_rate: f64,
    fo_coarse_hz: f64,
    cfg: &EqualizerConfig,
) -> Result<()> {
    let mut u = [vec![C64::new(0.0, 0.0); eq.n_taps()], vec![C64::new(0.0, 0.0); eq.n_taps()]];
    let nu0 = 2.0 * PI * fo_coarse_hz / symbol_rate;
    for _ in 0..cfg.train_epochs {
        let mut theta = 0.0f64;
        let mut nu = nu0;
        for k in 0..training[0].len() {
            eq.gather(x, k, &mut u);
            let y = eq.output(&u);
            check(&y, k, cfg)?;
            let rot = C64::from_polar(1.0, -theta);
            let d = [training[0][k], training[1][k]];
            let z = [y[0] * rot, y[1] * rot];
            let psi = (z[0] * d[0].conj() + z[1] * d[1].conj()).arg();
            let g = [(d[0] - z[0]) * rot.conj(), (d[1] - z[1]) * rot.conj()];
            eq.update(&u, g, cfg.mu_lms);
            nu += cfg.pll_ki * psi;
            theta += nu + cfg.pll_kp * psi;
        }
    }
    Ok(())
}

/// Radius-directed equalization over the whole sequence. Known symbols use
/// their own radius; all others the nearest constellation radius.
pub fn run_rde(
    x: &[Vec<C64>; 2],
    eq: &mut Butterfly,
    n_symbols: usize,
    constellation: &Constellation,
    known_radius: &[Option<[f64; 2]>],
    cfg: &EqualizerConfig,
) -> Result<[Vec<C64>; 2]> {
    let mut u = [vec![C64::new(0.0, 0.0); eq.n_taps()], vec![C64::new(0.0, 0.0); eq.n_taps()]];
    let mut out = [Vec::with_capacity(n_symbols), Vec::with_capacity(n_symbols)];
    for k in 0..n_symbols {
        eq.gather(x, k, &mut u);
        let y = eq.output(&u);
        check(&y, k, cfg)?;
        let mut g = [C64::new(0.0, 0.0); 2];
        for p in 0..2 {
            let r = match known_radius.get(k).copied().flatten() {
                Some(r) => r[p],
                None => constellation.nearest_radius(y[p].norm()),
            };
            g[p] = y[p] * (r * r - y[p].norm_sqr());
            out[p].push(y[p]);
        }
        eq.update(&u, g, cfg.mu_rde);
    }
    Ok(out)
}

/// Full equalizer: normalize, train on the header at the start of `x`, then
/// run RDE over all symbols. `x` holds 2 samples per symbol with frame 1
/// starting at index 0.
pub fn mimo_equalize(
    x: &[Vec<C64>; 2],
    header: &[Vec<C64>; 2],
    constellation: &Constellation,
    known_radius: &[Option<[f64; 2]>],
    symbol_rate: f64,
    fo_coarse_hz: f64,
    cfg: &EqualizerConfig,
) -> Result<[Vec<C64>; 2]> {
    if x[0].len() != x[1].len() || x[0].len() % 2 != 0 {
        return Err(Error::InputSize("equalizer input must be two equal 2-sps streams".into()));
    }
    if cfg.n_taps % 2 == 0 || cfg.n_taps == 0 {
        return Err(Error::Parameter(format!("tap count {} must be odd", cfg.n_taps)));
    }
    let n_symbols = x[0].len() / 2;
    let x = normalize(x);
    let mut eq = Butterfly::identity(cfg.n_taps);
    train_lms(&x, &mut eq, header, symbol_rate, fo_coarse_hz, cfg)?;
    run_rde(&x, &mut eq, n_symbols, constellation, known_radius, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::sigkit::{header_symbols, rrc_filter, Format};
    use rand::Rng;

    #[test]
    fn recovers_rotated_isi_channel() {
        let c = Constellation::new(Format::Qam16);
        let n = 8192;
        let h = header_symbols(1024);
        let mut rng = stream_rng(4, Stream::Test(5));
        let sym: [Vec<C64>; 2] = [0, 1].map(|p| {
            (0..n)
                .map(|k| if k < 1024 { h[p][k] } else { c.point(rng.random_range(0..16)) })
                .collect()
        });
        let w = sym.clone().map(|s| rrc_filter(&s, 0.1, 2).unwrap());
        // polarization rotation plus a small echo
        let (ca, sa) = (0.8f64.cos(), 0.8f64.sin());
        let mut x = [w[0].clone(), w[1].clone()];
        for i in 0..w[0].len() {
            let e = [w[0][(i + w[0].len() - 3) % w[0].len()], w[1][(i + w[0].len() - 3) % w[0].len()]];
            x[0][i] = (w[0][i] + 0.2 * e[0]) * ca - (w[1][i] + 0.2 * e[1]) * sa;
            x[1][i] = (w[0][i] + 0.2 * e[0]) * sa + (w[1][i] + 0.2 * e[1]) * ca;
        }
        let known: Vec<Option<[f64; 2]>> = (0..n)
            .map(|k| (k < 1024).then(|| [h[0][k].norm(), h[1][k].norm()]))
            .collect();
        let y = mimo_equalize(&x, &h, &c, &known, 135e9, 0.0, &EqualizerConfig::default()).unwrap();
        let mut err = 0.0;
        for k in n / 2..n {
            for p in 0..2 {
                err += (y[p][k] - sym[p][k]).norm_sqr();
            }
        }
        let snr = 10.0 * (n as f64 / err).log10();
        assert!(snr > 20.0, "{snr}");
    }

    #[test]
    fn blows_up_with_huge_step() {
        let c = Constellation::new(Format::Qpsk);
        let h = header_symbols(1024);
        let x = h.clone().map(|s| rrc_filter(&s, 0.1, 2).unwrap());
        let cfg = EqualizerConfig {
            mu_lms: 50.0,
            ..EqualizerConfig::default()
        };
        let r = mimo_equalize(&x, &h, &c, &[], 135e9, 0.0, &cfg);
        assert!(matches!(r, Err(Error::EqualizerDivergence { .. })));
    }
}
