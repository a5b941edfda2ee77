//! Cell scheduling and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::config::RunConfig;
use super::output::{failed_rows, gain_svg, rows_from_outcome, sort_rows, write_csv, ResultRow};
use super::pipeline::{simulate_group, CellOutcome};
use crate::error::Result;
use crate::par::{self, Exec};
use crate::sigkit::Format;

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub cells: Vec<CellOutcome>,
    pub errors: Vec<String>,
    pub elapsed_s: f64,
}

/// One propagation: a format and seed with every distance it is scored at.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub format: Format,
    pub seed: u64,
    pub distances_km: Vec<f64>,
}

/// All (format, seed) groups of a sweep.
pub fn sweep_groups(cfg: &RunConfig) -> Vec<Group> {
    let mut out = Vec::new();
    for &format in &cfg.formats {
        let d = cfg.distances_for(format);
        if d.is_empty() {
            continue;
        }
        for &seed in &cfg.seeds {
            out.push(Group {
                format,
                seed,
                distances_km: d.clone(),
            });
        }
    }
    out
}

/// The single cell of `run`, for every configured seed.
pub fn single_groups(cfg: &RunConfig) -> Vec<Group> {
    cfg.seeds
        .iter()
        .map(|&seed| Group {
            format: cfg.format,
            seed,
            distances_km: vec![cfg.distance_km],
        })
        .collect()
}

/// Runs the groups on a pool of `jobs` workers (0 = all cores). Failures
/// become rows with empty metrics; the run continues.
pub fn run_groups(cfg: &RunConfig, groups: Vec<Group>, jobs: usize) -> SweepOutput {
    let t0 = Instant::now();
    let schemes = cfg.schemes_with_baseline();
    let results = par::with_pool(jobs, || {
        par::map(Exec::Parallel, groups, |g| {
            let r = simulate_group(cfg, g.format, g.seed, &g.distances_km, Exec::Parallel);
            (g, r)
        })
    });
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut errors = Vec::new();
    for (g, r) in results {
        match r {
            Ok(list) => {
                let mut spans: Vec<f64> = g.distances_km.clone();
                spans.sort_by(f64::total_cmp);
                spans.dedup();
                for (cell, d) in list.into_iter().zip(spans) {
                    match cell {
                        Ok(c) => {
                            for s in &c.schemes {
                                if let Err(e) = &s.report {
                                    errors.push(format!(
                                        "{} seed {} {} km: {e}",
                                        c.format, c.seed, c.distance_km
                                    ));
                                }
                            }
                            rows.extend(rows_from_outcome(&c, cfg.timings));
                            cells.push(c);
                        }
                        Err(e) => {
                            errors.push(e.to_string());
                            rows.extend(failed_rows(g.format, g.seed, d, &schemes, &cfg.n_r, &e));
                        }
                    }
                }
            }
            Err(e) => {
                errors.push(format!("{} seed {}: {e}", g.format, g.seed));
                for &d in &g.distances_km {
                    rows.extend(failed_rows(g.format, g.seed, d, &schemes, &cfg.n_r, &e));
                }
            }
        }
    }
    sort_rows(&mut rows);
    cells.sort_by(|a, b| {
        a.format
            .cmp(&b.format)
            .then(a.distance_km.total_cmp(&b.distance_km))
            .then(a.seed.cmp(&b.seed))
    });
    SweepOutput {
        rows,
        cells,
        errors,
        elapsed_s: t0.elapsed().as_secs_f64(),
    }
}

pub fn run_single(cfg: &RunConfig, jobs: usize) -> SweepOutput {
    run_groups(cfg, single_groups(cfg), jobs)
}

pub fn run_sweep(cfg: &RunConfig, jobs: usize) -> SweepOutput {
    run_groups(cfg, sweep_groups(cfg), jobs)
}

/// Text report of the window search of every cell.
pub fn window_report(out: &SweepOutput) -> String {
    let mut s = String::new();
    for c in &out.cells {
        let _ = write!(s, "{} seed {} {} km: W* = {}", c.format, c.seed, c.distance_km, c.dd_window);
        for (w, v) in &c.window_scores {
            let _ = write!(s, "  {w}:{v:.5}");
        }
        s.push('\n');
    }
    s
}

pub fn meta_text(cfg: &RunConfig, verb: &str, overrides: &[String], out: &SweepOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tool = combsim {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "verb = {verb}");
    let _ = writeln!(
        s,
        "parallel_feature = {}",
        cfg!(feature = "parallel")
    );
    let _ = writeln!(s, "overrides = {overrides:?}");
    let _ = writeln!(s, "elapsed_s = {:.3}", out.elapsed_s);
    s.push_str("\n[cells]\n");
    for c in &out.cells {
        let _ = writeln!(
            s,
            "{} seed {} {} km: dd_window {} runtime {:.3} s",
            c.format, c.seed, c.distance_km, c.dd_window, c.runtime_s
        );
    }
    s.push_str("\n[errors]\n");
    for e in &out.errors {
        let _ = writeln!(s, "{e}");
    }
    s.push_str("\n[resolved config]\n");
    s.push_str(&cfg.to_toml());
    s
}

/// Writes results.csv, fig2a.svg (16-QAM), fig2b.svg (64-QAM) and meta.txt.
pub fn write_outputs(
    dir: &Path,
    cfg: &RunConfig,
    verb: &str,
    overrides: &[String],
    out: &SweepOutput,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_csv(&out.rows, &mut buf)?;
    fs::write(dir.join("results.csv"), buf)?;
    fs::write(dir.join("fig2a.svg"), gain_svg(&out.rows, Format::Qam16))?;
    fs::write(dir.join("fig2b.svg"), gain_svg(&out.rows, Format::Qam64))?;
    fs::write(dir.join("meta.txt"), meta_text(cfg, verb, overrides, out))?;
    Ok(())
}
