use std::fmt;

use serde::{Deserialize, Serialize};

use super::drc::{drc_reconstruct, Regularization};
use super::estimators::{
    finish_main, main_stage1, pa_cpr_light, DpllGains, FoTrack, MainRecovery, PhaseEstimateTrack,
    TrackSource,
};
use super::known::{derotate, interp_linear, KnownSymbols};
use crate::error::{Error, Result};
use crate::fft::C64;
use crate::par::{self, Exec};
use crate::sigkit::{Constellation, PilotPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Independent,
    Ms1,
    Ms2,
    Drc,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Independent, Scheme::Ms1, Scheme::Ms2, Scheme::Drc];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Independent => "independent",
            Scheme::Ms1 => "ms1",
            Scheme::Ms2 => "ms2",
            Scheme::Drc => "drc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independent" | "indep" => Ok(Scheme::Independent),
            "ms1" => Ok(Scheme::Ms1),
            "ms2" => Ok(Scheme::Ms2),
            "drc" => Ok(Scheme::Drc),
            _ => Err(Error::Configuration(format!("unknown scheme '{s}'"))),
        }
    }

    /// Default main channels for `n` channels.
    pub fn default_mains(self, n: usize) -> Vec<usize> {
        match self {
            Scheme::Independent => (0..n).collect(),
            Scheme::Ms1 => vec![(n.max(2) - 1) / 2],
            Scheme::Ms2 | Scheme::Drc => vec![0, n.max(2) - 1],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CprSchemeConfig {
    pub scheme: Scheme,
    pub main_indices: Vec<usize>,
    pub n_r: usize,
    pub dd_window: usize,
    pub dpll: DpllGains,
    pub drc_eps: f64,
    pub drc_regularization: Regularization,
    /// Main-channel delay separation (burst-grid samples) below which DRC
    /// falls back to the nearest-main copy.
    pub drc_min_separation: f64,
}

impl CprSchemeConfig {
    pub fn new(scheme: Scheme, n_r: usize, n_channels: usize) -> Self {
        CprSchemeConfig {
            scheme,
            main_indices: scheme.default_mains(n_channels),
            n_r,
            dd_window: 64,
            dpll: DpllGains::default(),
            drc_eps: 0.5,
            drc_regularization: Regularization::default(),
            drc_min_separation: 4.0,
        }
    }

    pub fn validate(&self, n_channels: usize) -> Result<()> {
        let want = match self.scheme {
            Scheme::Independent => n_channels,
            Scheme::Ms1 => 1,
            Scheme::Ms2 | Scheme::Drc => 2,
        };
        if self.main_indices.len() != want {
            return Err(Error::Configuration(format!(
                "{} needs {want} main channels, got {:?}",
                self.scheme, self.main_indices
            )));
        }
        if self.main_indices.iter().any(|&m| m >= n_channels) {
            return Err(Error::Configuration(format!(
                "main channel out of range: {:?}",
                self.main_indices
            )));
        }
        if self.dd_window == 0 {
            return Err(Error::Parameter("DD window must be positive".into()));
        }
        Ok(())
    }

    pub fn is_main(&self, k: usize) -> bool {
        self.main_indices.contains(&k)
    }

    pub fn plan_for(&self, k: usize) -> PilotPlan {
        if self.is_main(k) {
            PilotPlan::new(0)
        } else {
            PilotPlan::new(self.n_r)
        }
    }

    fn nearest_main(&self, k: usize) -> usize {
        *self
            .main_indices
            .iter()
            .min_by_key(|&&m| (m.abs_diff(k), m))
            .expect("validated")
    }
}

/// Run-level information shared by all channels.
#[derive(Debug, Clone)]
pub struct CprContext<'a> {
    pub symbol_rate: f64,
    pub frame_len: usize,
    pub n_frames: usize,
    pub constellation: &'a Constellation,
    /// Per channel, the delay in symbols with which the walk-off-affected
    /// phase process appears in the data-aligned symbol stream.
    pub pn_delay_symbols: Vec<f64>,
    pub exec: Exec,
}

#[derive(Debug, Clone)]
pub struct ChannelCpr {
    pub corrected: [Vec<C64>; 2],
    pub track: PhaseEstimateTrack,
}

/// Runs the DPLL and both CPE stages on one main channel.
pub fn recover_main(
    sym: &[Vec<C64>; 2],
    cfg: &CprSchemeConfig,
    ctx: &CprContext<'_>,
) -> Result<MainRecovery> {
    let known = KnownSymbols::new(ctx.frame_len, ctx.n_frames, PilotPlan::new(0))?;
    let (fo, s1, after) = main_stage1(sym, &known, &cfg.dpll, ctx.symbol_rate)?;
    Ok(finish_main(fo, &s1, &after, cfg.dd_window, ctx.constellation, &known))
}

fn secondary(
    sym: &[Vec<C64>; 2],
    base_phase: Vec<f64>,
    fo_hz: Vec<f64>,
    known: &KnownSymbols,
    source: TrackSource,
) -> ChannelCpr {
    let derot = derotate(sym, &base_phase);
    let light = pa_cpr_light(&derot, known);
    let corrected = derotate(&derot, &light.phase);
    let phase = base_phase.iter().zip(&light.phase).map(|(a, b)| a + b).collect();
    ChannelCpr {
        corrected,
        track: PhaseEstimateTrack {
            phase,
            fo_hz,
            source,
        },
    }
}

fn main_output(m: &MainRecovery) -> ChannelCpr {
    ChannelCpr {
        corrected: m.corrected.clone(),
        track: PhaseEstimateTrack {
            phase: m.total_phase(),
            fo_hz: m.fo.fo_hz.clone(),
            source: TrackSource::Dd,
        },
    }
}

/// DRC base phases for every secondary, or `None` when the geometry is too
/// close to degenerate and the nearest-main copy should be used instead.
fn drc_bases(
    mains: &[(usize, &MainRecovery)],
    secondaries: &[usize],
    cfg: &CprSchemeConfig,
    ctx: &CprContext<'_>,
) -> Result<Option<Vec<(Vec<f64>, Vec<f64>)>>> {
    let (a, ra) = mains[0];
    let (b, rb) = mains[1];
    let plan = PilotPlan::new(0);
    let cell = plan.burst_blocks * plan.block_len;
    let len = ra.pn_phase.len();
    let n_grid = len / cell;
    let tau = |k: usize| ctx.pn_delay_symbols[k] / cell as f64;
    if (tau(b) - tau(a)).abs() < cfg.drc_min_separation || n_grid < 8 {
        return Ok(None);
    }
    let grid = |v: &[f64]| -> Vec<f64> {
        (0..n_grid)
            .map(|g| v[g * cell..(g + 1) * cell].iter().sum::<f64>() / cell as f64)
            .collect()
    };
    let centre = (n_grid as f64 - 1.0) / 2.0;
    let detrend = |v: Vec<f64>| -> (Vec<f64>, f64) {
        let e = 4.min(n_grid / 2);
        let e0 = v[..e].iter().sum::<f64>() / e as f64;
        let e1 = v[n_grid - e..].iter().sum::<f64>() / e as f64;
        let s = (e1 - e0) / (n_grid - e) as f64;
        (v.iter().enumerate().map(|(g, x)| x - s * (g as f64 - centre)).collect(), s)
    };
    let (pa, sa) = detrend(grid(&ra.pn_phase));
    let (pb, sb) = detrend(grid(&rb.pn_phase));
    let taus: Vec<f64> = secondaries.iter().map(|&k| tau(k)).collect();
    let out = drc_reconstruct(&pa, &pb, tau(a), tau(b), &taus, cfg.drc_eps, cfg.drc_regularization)?;
    let times: Vec<f64> = (0..n_grid)
        .map(|g| (g * cell) as f64 + (cell as f64 - 1.0) / 2.0)
        .collect();
    let bases = secondaries
        .iter()
        .zip(out.phases)
        .map(|(&k, rec)| {
            let w = (k as f64 - a as f64) / (b as f64 - a as f64);
            let s = sa + w * (sb - sa);
            let pn: Vec<f64> = rec
                .iter()
                .enumerate()
                .map(|(g, x)| x + s * (g as f64 - centre))
                .collect();
            let pn = interp_linear(&times, &pn, len);
            let fo: Vec<f64> = ra
                .fo
                .fo_hz
                .iter()
                .zip(&rb.fo.fo_hz)
                .map(|(x, y)| x + w * (y - x))
                .collect();
            let fo = FoTrack::from_fo(fo, ctx.symbol_rate);
            let base = fo.phase.iter().zip(&pn).map(|(p, q)| p + q).collect();
            (base, fo.fo_hz)
        })
        .collect();
    Ok(Some(bases))
}

/// Applies a carrier-recovery scheme to equalized channels. `precomputed`
/// may supply finished main-channel recoveries (indexed by channel) so
/// several schemes can share them.
pub fn run_scheme(
    channels: &[[Vec<C64>; 2]],
    cfg: &CprSchemeConfig,
    ctx: &CprContext<'_>,
    precomputed: Option<&[MainRecovery]>,
) -> Result<Vec<ChannelCpr>> {
    let n = channels.len();
    cfg.validate(n)?;
    if ctx.pn_delay_symbols.len() != n {
        return Err(Error::InputSize("one delay per channel required".into()));
    }
    let owned: Vec<(usize, MainRecovery)>;
    let mains: Vec<(usize, &MainRecovery)> = match precomputed {
        Some(p) if p.len() == n => cfg.main_indices.iter().map(|&k| (k, &p[k])).collect(),
        _ => {
            owned = par::map(ctx.exec, cfg.main_indices.clone(), |k| {
                recover_main(&channels[k], cfg, ctx)
                    .map(|r| (k, r))
                    .map_err(|e| e.context(format!("main channel {k}")))
            })
            .into_iter()
            .collect::<Result<_>>()?;
            owned.iter().map(|(k, r)| (*k, r)).collect()
        }
    };
    let main_of = |k: usize| mains.iter().find(|(m, _)| *m == k).map(|(_, r)| *r);
    let secondaries: Vec<usize> = (0..n).filter(|&k| !cfg.is_main(k)).collect();
    let sparse = KnownSymbols::new(ctx.frame_len, ctx.n_frames, PilotPlan::new(cfg.n_r))?;

    let drc = if cfg.scheme == Scheme::Drc {
        drc_bases(&mains, &secondaries, cfg, ctx)?
    } else {
        None
    };

    let mut out: Vec<Option<ChannelCpr>> = (0..n).map(|_| None).collect();
    for &(k, r) in &mains {
        out[k] = Some(main_output(r));
    }
    let jobs: Vec<(usize, Vec<f64>, Vec<f64>, TrackSource)> = secondaries
        .iter()
        .enumerate()
        .map(|(i, &k)| match &drc {
            Some(b) => (k, b[i].0.clone(), b[i].1.clone(), TrackSource::Reconstructed),
            None => {
                let m = main_of(cfg.nearest_main(k)).expect("main present");
                (k, m.total_phase(), m.fo.fo_hz.clone(), TrackSource::Held)
            }
        })
        .collect();
    let done = par::map(ctx.exec, jobs, |(k, base, fo, src)| {
        (k, secondary(&channels[k], base, fo, &sparse, src))
    });
    for (k, c) in done {
        out[k] = Some(c);
    }
    Ok(out.into_iter().map(|c| c.expect("every channel assigned")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mains() {
        assert_eq!(Scheme::Ms1.default_mains(4), vec![1]);
        assert_eq!(Scheme::Ms2.default_mains(4), vec![0, 3]);
        assert_eq!(Scheme::Drc.default_mains(4), vec![0, 3]);
        assert_eq!(Scheme::Independent.default_mains(4), vec![0, 1, 2, 3]);
        let c = CprSchemeConfig::new(Scheme::Ms2, 64, 4);
        assert_eq!(c.nearest_main(1), 0);
        assert_eq!(c.nearest_main(2), 3);
        assert!(c.validate(4).is_ok());
        let mut bad = c.clone();
        bad.main_indices = vec![0];
        assert!(bad.validate(4).is_err());
    }

    #[test]
    fn scheme_names_roundtrip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()).unwrap(), s);
        }
    }
}
