//! Built-in property checks of the physical models and DSP blocks. Each
//! check is deterministic and reports its measured value.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::config::RunConfig;
use super::pipeline::{front_end, transmit};
use nalgebra::{DMatrix, DVector};
use crate::combsrc::{gen_comb_phases, gen_wiener, wiener_increment_variance, CombSpec};
use crate::cpr::{circular_delay, drc_reconstruct, pa_cpr_light, wrap, KnownSymbols, Regularization};
use crate::error::Result;
use crate::fft::{fft, rel_l2, C64};
use crate::linkchan::{apply_dispersion, ssfm_span, FiberParams, FieldGrid, StepControl};
use crate::metrics::gmi;
use crate::par::Exec;
use crate::rng::{stream_rng, Stream};
use crate::rxdsp::cdc_beta2l;
use crate::sigkit::{decimate, matched_filter, rrc_filter, Constellation, Format, FrameLayout, PilotPlan, Slot};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckResult { name, pass, detail }
    }

    fn from(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((pass, detail)) => CheckResult::new(name, pass, detail),
            Err(e) => CheckResult::new(name, false, format!("error: {e}")),
        }
    }
}

fn test_field(n_sym: usize, sps: usize, seed: u64) -> Result<FieldGrid> {
    let qpsk = Constellation::new(Format::Qam16);
    let mut rng = stream_rng(seed, Stream::Test(100));
    let mut f = FieldGrid::zeros(n_sym * sps, 135e9 * sps as f64);
    for p in 0..2 {
        let s: Vec<C64> = (0..n_sym).map(|_| qpsk.point(rng.random_range(0..16))).collect();
        f.pol[p] = rrc_filter(&s, 0.1, sps)?;
    }
    Ok(f)
}

/// Split-step propagation without loss or nonlinearity against the exact
/// dispersion filter.
pub fn ssfm_linear_limit() -> Result<f64> {
    let mut field = test_field(4096, 8, 1)?;
    let fiber = FiberParams {
        alpha_db_km: 0.0,
        gamma_w_km: 0.0,
        ..FiberParams::default()
    };
    let mut want = field.pol.clone();
    for v in want.iter_mut() {
        apply_dispersion(v, field.sample_rate, fiber.beta2() * fiber.span_m());
    }
    ssfm_span(&mut field, &fiber, &StepControl { step_km: 0.5, exec: Exec::Sequential })?;
    Ok(rel_l2(&field.pol[0], &want[0]).max(rel_l2(&field.pol[1], &want[1])))
}

/// Dispersion over 2400 km followed by compensation.
pub fn cdc_identity() -> Result<f64> {
    let field = test_field(4096, 2, 2)?;
    let fiber = FiberParams::default();
    let b2l = fiber.beta2() * fiber.span_m() * 30.0;
    let mut x = field.pol[0].clone();
    apply_dispersion(&mut x, field.sample_rate, b2l);
    let y = cdc_beta2l(&x, field.sample_rate, b2l);
    Ok(rel_l2(&y, &field.pol[0]))
}

/// Sum of squared increments over `2 pi lw / fs`, with its 99% interval.
pub fn wiener_chi2(n: usize) -> Result<(f64, f64, f64)> {
    let fs = 1080e9;
    let lw = 200e3;
    let t = gen_wiener(lw, fs, n + 1, &mut stream_rng(3, Stream::Test(101)))?;
    let var = wiener_increment_variance(lw, fs);
    let stat: f64 = t.samples.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / var;
    let chi = ChiSquared::new(n as f64).map_err(|e| crate::Error::Numerical(e.to_string()))?;
    Ok((stat, chi_quantile(&chi, n as f64, 0.005), chi_quantile(&chi, n as f64, 0.995)))
}

// inverse_cdf loses accuracy at very high degrees of freedom; bisect the cdf
fn chi_quantile(chi: &ChiSquared, dof: f64, p: f64) -> f64 {
    let w = 12.0 * (2.0 * dof).sqrt();
    let (mut lo, mut hi) = ((dof - w).max(0.0), dof + w);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest `|(phi_1 - phi_c) + (phi_4 - phi_c)|` over a track.
pub fn anticorrelation_residual() -> Result<f64> {
    let spec = CombSpec::default();
    let p = gen_comb_phases(
        &spec,
        270e9,
        100_000,
        &mut stream_rng(4, Stream::Test(102)),
        &mut stream_rng(4, Stream::Test(103)),
        false,
    )?;
    let last = spec.n_lines - 1;
    Ok((0..p.common.len())
        .map(|i| {
            let c = p.common.samples[i];
            ((p.lines[0].samples[i] - c) + (p.lines[last].samples[i] - c)).abs()
        })
        .fold(0.0, f64::max))
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// BMD GMI of a square QAM on the AWGN channel by Gauss-Hermite quadrature
/// over the noise, with no sampling involved.
pub fn gmi_quadrature(c: &Constellation, snr_db: f64, nodes: usize) -> f64 {
    let s2 = 10f64.powf(-snr_db / 10.0);
    let sigma = s2.sqrt();
    let (u, w) = gauss_hermite(nodes);
    let m = c.bits_per_symbol();
    let pts = c.points();
    let mut loss = 0.0;
    for (lx, &x) in pts.iter().enumerate() {
        let mut acc = 0.0;
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in u.iter().enumerate() {
                let y = x + C64::new(sigma * ui, sigma * vj);
                let d: Vec<f64> = pts.iter().map(|&p| -(y - p).norm_sqr() / s2).collect();
                let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = d.iter().map(|v| (v - dmax).exp()).collect();
                let all: f64 = e.iter().sum();
                let mut per = 0.0;
                for b in 0..m {
                    let bit = c.label_bit(lx as u32, b);
                    let same: f64 = e
                        .iter()
                        .enumerate()
                        .filter(|(l, _)| c.label_bit(*l as u32, b) == bit)
                        .map(|(_, v)| v)
                        .sum();
                    per += (all / same).log2();
                }
                acc += w[i] * w[j] * per;
            }
        }
        loss += acc / PI;
    }
    m as f64 - loss / pts.len() as f64
}

/// Library GMI on simulated AWGN samples at the true noise variance.
pub fn gmi_monte_carlo(c: &Constellation, snr_db: f64, n: usize, seed: u64) -> Result<f64> {
    let s2 = 10f64.powf(-snr_db / 10.0);
    let sd = (s2 / 2.0).sqrt();
    let mut rng = stream_rng(seed, Stream::Test(104));
    let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..c.len() as u32)).collect();
    let y: Vec<C64> = labels
        .iter()
        .map(|&l| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            c.point(l) + C64::new(sd * a, sd * b)
        })
        .collect();
    gmi(&y, &labels, c, s2)
}

/// Pilot and non-pilot counts over whole pilot periods of a frame layout.
pub fn poh_counts(n_r: usize) -> Result<(usize, usize)> {
    let plan = PilotPlan::new(n_r);
    let periods = 8;
    let frame_len = plan.header_len + periods * plan.period_symbols();
    let layout = FrameLayout::new(frame_len, plan)?;
    let pilots = layout.count(Slot::Pilot);
    let others = layout.count(Slot::Payload);
    Ok((pilots, others))
}

/// Relative RMS error of DRC secondaries against the exact two-process
/// delay model, measured on the non-regularized bins.
pub fn drc_oracle_error(distance_km: f64, eps: f64, mode: Regularization) -> Result<f64> {
    let rs = 135e9;
    let cell = 128.0;
    let n = 2048;
    let fiber = FiberParams::default();
    let spec = CombSpec::default();
    let b2l = fiber.beta2() * distance_km * 1e3;
    let tau: Vec<f64> = (0..spec.n_lines)
        .map(|k| 2.0 * PI * b2l * spec.line_offset_hz(k) * rs / cell)
        .collect();
    let p = gen_wiener(spec.common_lw_hz, rs / cell, n + 1, &mut stream_rng(6, Stream::Test(105)))?
        .close_periodic()
        .samples;
    let q = gen_wiener(spec.common_lw_hz, rs / cell, n + 1, &mut stream_rng(6, Stream::Test(106)))?
        .close_periodic()
        .samples;
    let obs = |t: f64| -> Vec<f64> {
        circular_delay(&p, t).iter().zip(&q).map(|(a, b)| a + b).collect()
    };
    let last = spec.n_lines - 1;
    let secondaries: Vec<usize> = (1..last).collect();
    let taus: Vec<f64> = secondaries.iter().map(|&k| tau[k]).collect();
    let out = drc_reconstruct(&obs(tau[0]), &obs(tau[last]), tau[0], tau[last], &taus, eps, mode)?;
    let mut err = 0.0;
    let mut tot = 0.0;
    for (i, &k) in secondaries.iter().enumerate() {
        let truth = obs(tau[k]);
        let diff: Vec<C64> = truth.iter().zip(&out.phases[i]).map(|(a, b)| C64::new(a - b, 0.0)).collect();
        let mut de = fft(&diff);
        let mut dt = fft(&truth.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
        for &b in &out.regularized {
            de[b] = C64::new(0.0, 0.0);
            dt[b] = C64::new(0.0, 0.0);
        }
        err += de.iter().map(|v| v.norm_sqr()).sum::<f64>();
        tot += dt.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    Ok((err / tot).sqrt())
}

/// Worst phase error of the hold-based light CPR under a pure residual
/// frequency offset, after the first burst.
pub fn hold_lag(residual_fo_hz: f64, n_r: usize) -> Result<f64> {
    let rs = 135e9;
    let frame_len = 1 << 15;
    let known = KnownSymbols::new(frame_len, 2, PilotPlan::new(n_r))?;
    let qpsk = Constellation::new(Format::Qpsk);
    let mut rng = stream_rng(7, Stream::Test(107));
    let w = 2.0 * PI * residual_fo_hz / rs;
    let sym: [Vec<C64>; 2] = [0, 1].map(|p| {
        (0..known.len())
            .map(|n| {
                let s = known.value(p, n).unwrap_or_else(|| qpsk.point(rng.random_range(0..4)));
                s * C64::from_polar(1.0, w * n as f64)
            })
            .collect()
    });
    let track = pa_cpr_light(&sym, &known);
    let start = known.bursts()[1].positions[0];
    Ok((start..known.len())
        .map(|n| wrap(track.phase[n] - w * n as f64).abs())
        .fold(0.0, f64::max))
}

/// Least-squares 2x2 FIR fit of `target` from `x` (1 sample per symbol,
/// `taps` taps per input). Returns (target energy, residual energy).
pub fn ls_fit_residual(x: &[Vec<C64>; 2], target: &[Vec<C64>; 2], taps: usize) -> (f64, f64) {
    let n = x[0].len();
    let h = taps / 2;
    let dim = 2 * taps;
    let gather = |k: usize| -> DVector<C64> {
        DVector::from_iterator(
            dim,
            (0..2).flat_map(|p| (0..taps).map(move |t| x[p][(k + n + t - h) % n])),
        )
    };
    let range = h..n - h;
    let mut r = DMatrix::<C64>::zeros(dim, dim);
    let mut pv = [DVector::<C64>::zeros(dim), DVector::<C64>::zeros(dim)];
    for k in range.clone() {
        let u = gather(k);
        r += &u * u.adjoint();
        for q in 0..2 {
            pv[q] += &u * target[q][k].conj();
        }
    }
    let lu = r.lu();
    let mut sig = 0.0;
    let mut err = 0.0;
    for q in 0..2 {
        let Some(w) = lu.solve(&pv[q]) else {
            return (1.0, f64::INFINITY);
        };
        for k in range.clone() {
            let y = (w.adjoint() * gather(k))[(0, 0)];
            sig += target[q][k].norm_sqr();
            err += (target[q][k] - y).norm_sqr();
        }
    }
    (sig, err)
}

/// Back-to-back SNR per channel with ideal lasers: full front end, RRC
/// matched filter, symbol-rate sampling and a data-aided least-squares fit
/// to the transmitted symbols (unbiased estimate).
pub fn b2b_snr_db(base: &RunConfig, seed: u64) -> Result<Vec<f64>> {
    let mut cfg = base.clone();
    cfg.comb.common_lw_hz = 0.0;
    cfg.comb.line_lw_hz = 0.0;
    cfg.comb.fo_hz = 0.0;
    cfg.comb.fsr_dev_hz = 0.0;
    cfg.dump_dir.clear();
    let tx = transmit(&cfg, Format::Qam16, seed)?;
    let rx = front_end(&tx.field, &tx, &cfg, 0, Exec::Parallel)?;
    let sps = cfg.link.adc_sps;
    rx.iter()
        .enumerate()
        .map(|(k, (x, _))| {
            let mf = [0, 1].map(|p| {
                matched_filter(&x[p], cfg.link.roll_off, sps).map(|v| decimate(&v, sps, 0))
            });
            let [a, b] = mf;
            let (sig, err) = ls_fit_residual(&[a?, b?], &tx.symbols(k), 15);
            Ok(10.0 * (sig / err - 1.0).log10())
        })
        .collect()
}

/// Runs the whole property suite.
pub fn run_selftest(cfg: &RunConfig) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(CheckResult::from(
        "ssfm_linear_limit",
        ssfm_linear_limit().map(|e| (e < 1e-8, format!("rel L2 {e:.3e} (< 1e-8)"))),
    ));
    out.push(CheckResult::from(
        "cdc_identity",
        cdc_identity().map(|e| (e < 1e-10, format!("rel L2 {e:.3e} (< 1e-10)"))),
    ));
    out.push(CheckResult::from(
        "wiener_increment_variance",
        wiener_chi2(1_000_000).map(|(s, lo, hi)| {
            (s >= lo && s <= hi, format!("chi2 {s:.1} in [{lo:.1}, {hi:.1}]"))
        }),
    ));
    out.push(CheckResult::from(
        "comb_anticorrelation",
        anticorrelation_residual().map(|e| (e < 1e-12, format!("max residual {e:.2e} rad"))),
    ));
    for format in [Format::Qam16, Format::Qam64] {
        let c = Constellation::new(format);
        for snr in [15.0, 22.0, 30.0] {
            let oracle = gmi_quadrature(&c, snr, 24);
            let r = gmi_monte_carlo(&c, snr, 200_000, snr as u64).map(|g| {
                let d = (g - oracle).abs();
                (d < 0.02, format!("{format} {snr} dB: {g:.4} vs {oracle:.4} bits (|d| {d:.4})"))
            });
            out.push(CheckResult::from("gmi_oracle", r));
        }
    }
    for (n_r, den) in [(0, 31), (64, 543)] {
        out.push(CheckResult::from(
            "poh_layout",
            poh_counts(n_r).map(|(p, d)| {
                (p * den == d, format!("n_r={n_r}: {p} pilots / {d} others (1/{den})"))
            }),
        ));
    }
    out.push(CheckResult::from(
        "drc_synthetic_oracle",
        drc_oracle_error(2400.0, cfg.cpr.drc_eps, cfg.cpr.drc_regularization).map(|e| (e < 0.05, format!("relative RMS {e:.2e} (< 0.05)"))),
    ));
    out.push(CheckResult::from(
        "hold_lag",
        hold_lag(1e6, 64).map(|l| {
            (((l / 0.101) - 1.0).abs() <= 0.05, format!("{l:.4} rad (0.101 +- 5%)"))
        }),
    ));
    out.push(CheckResult::from(
        "b2b_snr",
        b2b_snr_db(cfg, 1).map(|s| {
            let txt: Vec<String> = s.iter().map(|v| format!("{v:.3}")).collect();
            (
                s.iter().all(|v| (v - 22.0).abs() <= 0.15),
                format!("per channel [{}] dB (22 +- 0.15)", txt.join(", ")),
            )
        }),
    ));
    out
}
