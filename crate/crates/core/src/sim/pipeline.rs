//! End-to-end link: transmitter, multi-span propagation with taps at the
//! requested distances, receiver DSP and carrier recovery per scheme.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use super::config::RunConfig;
use crate::combsrc::gen_comb_phases;
use crate::cpr::{
    finish_main, main_stage1, optimize_dd_window, run_scheme, CprContext, CprSchemeConfig,
    KnownSymbols, MainRecovery, Scheme,
};
use crate::error::{Error, Result};
use crate::fft::C64;
use crate::linkchan::{
    awgn_load, demux_rx, dump_field, edfa, modulate_mux, ssfm_span, ChannelInput, ChannelPlan,
    FieldGrid, FieldSpectrum, StepControl,
};
use crate::metrics::{channel_poh, labels_from_bits, ngmi_dual, MetricsReport};
use crate::par::{self, Exec};
use crate::rng::{stream_rng, Stream};
use crate::rxdsp::{
    align, cdc_beta2l, coarse_fo_4th_power, frame_sync, identify_frame, mimo_equalize,
};
use crate::sigkit::{
    build_frame, header_symbols, random_payload_bits, matched_filter, rrc_filter, Constellation, FrameLayout, Format,
    PilotPlan, Slot, SymbolFrame,
};

/// Search range of the coarse frequency estimate.
const FO_SEARCH_HZ: f64 = 2e9;
/// Frame identification: reference segment (symbols) and correlation block.
const ID_START: usize = 1024;
const ID_LEN: usize = 4096;
const ID_BLOCK: usize = 32;

/// Launched signal plus everything the receiver needs to score it.
#[derive(Debug, Clone)]
pub struct Transmitted {
    pub format: Format,
    pub seed: u64,
    /// `frames[k][f]`: frame `f` of channel `k`.
    pub frames: Vec<Vec<SymbolFrame>>,
    /// LO phasor of each channel at the ADC rate.
    pub lo_rotation: Vec<Vec<C64>>,
    pub plan: ChannelPlan,
    pub field: FieldGrid,
}

impl Transmitted {
    pub fn n_channels(&self) -> usize {
        self.frames.len()
    }

    /// All frames of channel `k` back to back.
    pub fn symbols(&self, k: usize) -> [Vec<C64>; 2] {
        [0, 1].map(|p| self.frames[k].iter().flat_map(|f| f.pol[p].iter().copied()).collect())
    }
}

pub fn transmit(cfg: &RunConfig, format: Format, seed: u64) -> Result<Transmitted> {
    let c = Constellation::new(format);
    let n_ch = cfg.comb.n_lines;
    let layout = FrameLayout::new(cfg.frame_len, PilotPlan::new(0))?;
    let mut frames = Vec::with_capacity(n_ch);
    for k in 0..n_ch {
        let mut fr = Vec::with_capacity(cfg.n_frames);
        for f in 0..cfg.n_frames {
            let bits = [0, 1].map(|pol| {
                let mut rng = stream_rng(seed, Stream::Payload { channel: k, frame: f, pol });
                random_payload_bits(&layout, &c, &mut rng)
            });
            fr.push(build_frame([&bits[0], &bits[1]], PilotPlan::new(0), &c, cfg.frame_len)?);
        }
        frames.push(fr);
    }

    let link = &cfg.link;
    let n_sym = cfg.frame_len * cfg.n_frames;
    let n_grid = n_sym * link.oversample;
    let n_adc = n_sym * link.adc_sps;
    let fs = link.grid_rate();
    let offsets: Vec<f64> = (0..n_ch).map(|k| cfg.comb.line_offset_hz(k)).collect();
    let plan = ChannelPlan::new(&offsets, n_grid, fs);

    let tx_pn = gen_comb_phases(
        &cfg.comb,
        fs,
        n_grid,
        &mut stream_rng(seed, Stream::TxCommonPhase),
        &mut stream_rng(seed, Stream::TxLinePhase),
        true,
    )?;
    // the Tx/LO frequency ladder rides on the transmitted carrier
    let tx_rot: Vec<Vec<C64>> = (0..n_ch)
        .map(|k| {
            let w = -2.0 * PI * cfg.comb.lo_frequency_error_hz(k) / fs;
            tx_pn.lines[k]
                .samples
                .iter()
                .enumerate()
                .map(|(i, &phi)| C64::from_polar(1.0, phi + w * i as f64))
                .collect()
        })
        .collect();
    let lo_pn = gen_comb_phases(
        &cfg.comb,
        link.adc_rate(),
        n_adc,
        &mut stream_rng(seed, Stream::LoCommonPhase),
        &mut stream_rng(seed, Stream::LoLinePhase),
        true,
    )?;
    let lo_rotation = lo_pn
        .lines
        .iter()
        .map(|t| t.samples.iter().map(|&phi| C64::from_polar(1.0, phi)).collect())
        .collect();

    let syms: Vec<[Vec<C64>; 2]> = (0..n_ch)
        .map(|k| [0, 1].map(|p| frames[k].iter().flat_map(|f| f.pol[p].iter().copied()).collect()))
        .collect();
    let inputs: Vec<ChannelInput<'_>> = (0..n_ch)
        .map(|k| ChannelInput {
            symbols: [&syms[k][0], &syms[k][1]],
            rotation: Some(&tx_rot[k]),
        })
        .collect();
    let mut field = modulate_mux(&inputs, &plan, link)?;
    awgn_load(
        &mut field,
        link.per_stage_snr_db(),
        link,
        &mut stream_rng(seed, Stream::TxNoise),
    )?;
    Ok(Transmitted {
        format,
        seed,
        frames,
        lo_rotation,
        plan,
        field,
    })
}

/// Equalized symbols of one channel (all frames, frame 1 at index 0).
#[derive(Debug, Clone)]
pub struct RxChannel {
    pub symbols: [Vec<C64>; 2],
    pub sync_peak: f64,
    pub fo_coarse_hz: f64,
}

/// Coherent front end for a field that has travelled `spans` spans:
/// receiver noise loading, then per channel demux, CDC and frame sync. The
/// returned 2-sps waveforms start at the first header symbol.
pub fn front_end(
    field: &FieldGrid,
    tx: &Transmitted,
    cfg: &RunConfig,
    spans: usize,
    exec: Exec,
) -> Result<Vec<([Vec<C64>; 2], f64)>> {
    let mut field = field.clone();
    awgn_load(
        &mut field,
        cfg.link.per_stage_snr_db(),
        &cfg.link,
        &mut stream_rng(tx.seed, Stream::RxNoise { tap: spans }),
    )?;
    if !cfg.dump_dir.is_empty() {
        let stem = Path::new(&cfg.dump_dir).join(format!(
            "{}_seed{}_{}km",
            tx.format.name(),
            tx.seed,
            spans as f64 * cfg.fiber.span_km
        ));
        dump_field(&field, &stem)?;
    }
    let spectrum = FieldSpectrum::new(&field);
    drop(field);
    let beta2_l = cfg.fiber.beta2() * cfg.fiber.span_m() * spans as f64;
    let header = header_symbols(1024);
    let adc_rate = cfg.link.adc_rate();
    let sps = cfg.link.adc_sps;
    let id_len = ID_LEN.min(cfg.frame_len - ID_START);
    let reference: Vec<[Vec<C64>; 2]> = (0..tx.n_channels())
        .map(|k| {
            let s = tx.symbols(k);
            let w = [0, 1].map(|p| rrc_filter(&s[p], cfg.link.roll_off, sps));
            let [a, b] = w;
            let (a, b) = (a?, b?);
            let seg = |v: Vec<C64>| v[ID_START * sps..(ID_START + id_len) * sps].to_vec();
            Ok([seg(a), seg(b)])
        })
        .collect::<Result<_>>()?;
    par::map(exec, (0..tx.n_channels()).collect(), |k| {
        let run = || -> Result<([Vec<C64>; 2], f64)> {
            let x = demux_rx(&spectrum, &tx.plan, k, Some(&tx.lo_rotation[k]), &cfg.link)?;
            let x = x.map(|v| cdc_beta2l(&v, adc_rate, beta2_l));
            let sync = frame_sync(&x, &header, cfg.frame_len, cfg.link.adc_sps, &cfg.sync)?;
            let x = align(&x, sync.offset);
            // the header repeats every frame; tell the frames apart by payload
            let fs = cfg.frame_len * sps;
            let f = identify_frame(&x, &reference[k], ID_START * sps, fs, cfg.n_frames, ID_BLOCK * sps)?;
            Ok((align(&x, f * fs), sync.peak))
        };
        run().map_err(|e| e.context(format!("channel {k}")))
    })
    .into_iter()
    .collect()
}

/// Full receiver: [`front_end`], matched filter, coarse FO estimation and
/// the adaptive equalizer.
pub fn receive(
    field: &FieldGrid,
    tx: &Transmitted,
    cfg: &RunConfig,
    spans: usize,
    exec: Exec,
) -> Result<Vec<RxChannel>> {
    let synced = front_end(field, tx, cfg, spans, exec)?;
    let header = header_symbols(1024);
    let c = Constellation::new(tx.format);
    let n_sym = cfg.frame_len * cfg.n_frames;
    let header_len = header[0].len();
    let known_radius: Vec<Option<[f64; 2]>> = (0..n_sym)
        .map(|n| {
            let i = n % cfg.frame_len;
            (i < header_len).then(|| [header[0][i].norm(), header[1][i].norm()])
        })
        .collect();
    let adc_rate = cfg.link.adc_rate();
    par::map(exec, synced.into_iter().enumerate().collect(), |(k, (x, peak))| {
        let [a, b] = x.map(|v| matched_filter(&v, cfg.link.roll_off, cfg.link.adc_sps));
        let x = [a?, b?];
        let fo = coarse_fo_4th_power(&x, adc_rate, FO_SEARCH_HZ);
        mimo_equalize(
            &x,
            &header,
            &c,
            &known_radius,
            cfg.link.symbol_rate,
            fo,
            &cfg.equalizer,
        )
        .map(|y| RxChannel {
            symbols: y,
            sync_peak: peak,
            fo_coarse_hz: fo,
        })
        .map_err(|e| e.context(format!("channel {k}")))
    })
    .into_iter()
    .collect()
}

/// NGMI over the payload of frame `frame`, ignoring its first `skip` symbols.
pub fn frame_ngmi(
    sym: &[Vec<C64>; 2],
    tx: &SymbolFrame,
    frame: usize,
    skip: usize,
    c: &Constellation,
) -> Result<f64> {
    let f = tx.frame_len();
    let base = frame * f;
    let m = c.bits_per_symbol();
    let idx = tx.layout.indices(Slot::Payload);
    let mut rx: [Vec<C64>; 2] = [Vec::new(), Vec::new()];
    let mut lab: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for p in 0..2 {
        let labels = labels_from_bits(&tx.tx_bits[p], m);
        for (j, &i) in idx.iter().enumerate() {
            if i >= skip {
                rx[p].push(sym[p][base + i]);
                lab[p].push(labels[j]);
            }
        }
    }
    ngmi_dual([&rx[0], &rx[1]], [&lab[0], &lab[1]], c)
}

/// Per-channel walk-off of the LO phase in symbols after `spans` spans.
pub fn pn_delay_symbols(cfg: &RunConfig, plan: &ChannelPlan, spans: usize) -> Vec<f64> {
    let beta2_l = cfg.fiber.beta2() * cfg.fiber.span_m() * spans as f64;
    (0..plan.n_channels())
        .map(|k| 2.0 * PI * beta2_l * plan.offset_hz(k) * cfg.link.symbol_rate)
        .collect()
}

/// Result of one scheme at one pilot spacing.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub n_r: usize,
    pub report: Result<MetricsReport>,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub format: Format,
    pub seed: u64,
    pub distance_km: f64,
    pub dd_window: usize,
    /// Window search scores (grid window, mean calibration NGMI); empty when fixed.
    pub window_scores: Vec<(usize, f64)>,
    pub schemes: Vec<SchemeOutcome>,
    pub runtime_s: f64,
}

impl CellOutcome {
    pub fn baseline(&self) -> Option<&MetricsReport> {
        self.schemes
            .iter()
            .find(|s| s.scheme == Scheme::Independent)
            .and_then(|s| s.report.as_ref().ok())
    }
}

/// Carrier recovery and scoring of every scheme on one received cell.
pub fn evaluate(
    rx: &[RxChannel],
    tx: &Transmitted,
    cfg: &RunConfig,
    spans: usize,
    exec: Exec,
) -> Result<(usize, Vec<(usize, f64)>, Vec<SchemeOutcome>)> {
    let c = Constellation::new(tx.format);
    let n_ch = rx.len();
    let channels: Vec<[Vec<C64>; 2]> = rx.iter().map(|r| r.symbols.clone()).collect();
    let ctx = CprContext {
        symbol_rate: cfg.link.symbol_rate,
        frame_len: cfg.frame_len,
        n_frames: cfg.n_frames,
        constellation: &c,
        pn_delay_symbols: pn_delay_symbols(cfg, &tx.plan, spans),
        exec,
    };
    let dense = KnownSymbols::new(cfg.frame_len, cfg.n_frames, PilotPlan::new(0))?;
    let stage1: Vec<_> = par::map(exec, (0..n_ch).collect(), |k| {
        main_stage1(&channels[k], &dense, &cfg.cpr.dpll, cfg.link.symbol_rate)
            .map_err(|e| e.context(format!("channel {k}")))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let finish = |w: usize| -> Vec<MainRecovery> {
        par::map(exec, (0..n_ch).collect(), |k| {
            let (fo, s1, after) = &stage1[k];
            finish_main(fo.clone(), s1, after, w, &c, &dense)
        })
    };
    let (window, scores) = match cfg.cpr.dd_window {
        Some(w) => (w, Vec::new()),
        None => {
            let skip = cfg.cpr.dd_calibration_skip;
            let (w, s) = optimize_dd_window(&cfg.cpr.dd_window_grid, |w| {
                let mut acc = 0.0;
                for (k, m) in finish(w).iter().enumerate() {
                    acc += frame_ngmi(&m.corrected, &tx.frames[k][0], 0, skip, &c)?;
                }
                Ok(acc / n_ch as f64)
            })
            .map_err(|e| e.context("window calibration"))?;
            (w, cfg.cpr.dd_window_grid.iter().copied().zip(s).collect())
        }
    };
    let mains = finish(window);

    let mut outcomes = Vec::new();
    for scheme in cfg.schemes_with_baseline() {
        let n_rs: Vec<usize> = if scheme == Scheme::Independent {
            vec![0]
        } else {
            cfg.n_r.clone()
        };
        for n_r in n_rs {
            let mut sc = CprSchemeConfig::new(scheme, n_r, n_ch);
            sc.dd_window = window;
            sc.dpll = cfg.cpr.dpll;
            sc.drc_eps = cfg.cpr.drc_eps;
            sc.drc_regularization = cfg.cpr.drc_regularization;
            sc.drc_min_separation = cfg.cpr.drc_min_separation;
            let report = (|| {
                let out = run_scheme(&channels, &sc, &ctx, Some(&mains))?;
                let mut ngmi = Vec::with_capacity(n_ch);
                let mut poh = Vec::with_capacity(n_ch);
                for (k, ch) in out.iter().enumerate() {
                    let mf = cfg.metric_frame;
                    ngmi.push(frame_ngmi(&ch.corrected, &tx.frames[k][mf], mf, 0, &c)?);
                    poh.push(channel_poh(&sc.plan_for(k), cfg.rate_frame_len));
                }
                MetricsReport::new(ngmi, poh, cfg.coding_gap)
            })()
            .map_err(|e: Error| e.context(format!("{scheme} n_r={n_r}")));
            outcomes.push(SchemeOutcome {
                scheme,
                n_r,
                report,
            });
        }
    }
    Ok((window, scores, outcomes))
}

/// Simulates one (format, seed) pair and evaluates every requested distance
/// along a single propagation. Each tap's result is independent of which
/// other distances are requested.
pub fn simulate_group(
    cfg: &RunConfig,
    format: Format,
    seed: u64,
    distances_km: &[f64],
    exec: Exec,
) -> Result<Vec<Result<CellOutcome>>> {
    let mut taps: Vec<(usize, f64)> = distances_km
        .iter()
        .map(|&d| cfg.spans_for(d).map(|s| (s, d)))
        .collect::<Result<_>>()?;
    taps.sort_by(|a, b| a.0.cmp(&b.0));
    taps.dedup_by_key(|t| t.0);
    let tx = transmit(cfg, format, seed)?;
    let mut field = tx.field.clone();
    let step = StepControl {
        step_km: cfg.step.step_km,
        exec,
    };
    let f0 = cfg.fiber.center_frequency_hz();
    let mut done = 0usize;
    let mut out = Vec::with_capacity(taps.len());
    for &(spans, distance_km) in &taps {
        let t0 = Instant::now();
        while done < spans {
            ssfm_span(&mut field, &cfg.fiber, &step)?;
            edfa(&mut field, &cfg.amp, f0, &mut stream_rng(seed, Stream::Ase { span: done }))?;
            field.check_finite()?;
            done += 1;
        }
        let cell = receive(&field, &tx, cfg, spans, exec)
            .and_then(|rx| evaluate(&rx, &tx, cfg, spans, exec))
            .map(|(dd_window, window_scores, schemes)| CellOutcome {
                format,
                seed,
                distance_km,
                dd_window,
                window_scores,
                schemes,
                runtime_s: t0.elapsed().as_secs_f64(),
            })
            .map_err(|e| e.context(format!("{format} seed {seed} at {distance_km} km")));
        out.push(cell);
    }
    Ok(out)
}
