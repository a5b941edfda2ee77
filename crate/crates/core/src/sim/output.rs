//! Result rows, CSV persistence, SVG gain plots and run metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::pipeline::CellOutcome;
use crate::cpr::Scheme;
use crate::error::{Error, Result};
use crate::sigkit::Format;

pub const CSV_COLUMNS: [&str; 12] = [
    "distance_km",
    "format",
    "scheme",
    "n_r",
    "seed",
    "ngmi_mean",
    "fec_oh",
    "poh_mean",
    "r_net",
    "gain_pct",
    "dd_window",
    "runtime_s",
];

/// One (distance, format, scheme, n_r, seed) result. Metric fields are
/// `None` when the cell failed; `error` then holds the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub distance_km: f64,
    pub format: Format,
    pub scheme: Scheme,
    pub n_r: usize,
    pub seed: u64,
    pub ngmi_mean: Option<f64>,
    pub fec_oh: Option<f64>,
    pub poh_mean: Option<f64>,
    pub r_net: Option<f64>,
    pub gain_pct: Option<f64>,
    pub dd_window: Option<usize>,
    pub runtime_s: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn key(&self) -> (Format, u64, Scheme, usize, u64) {
        (self.format, self.distance_km.to_bits(), self.scheme, self.n_r, self.seed)
    }
}

/// Rows of one evaluated cell; gains are against its Independent row.
pub fn rows_from_outcome(cell: &CellOutcome, timings: bool) -> Vec<ResultRow> {
    let base = cell.baseline().cloned();
    cell.schemes
        .iter()
        .map(|s| {
            let mut row = ResultRow {
                distance_km: cell.distance_km,
                format: cell.format,
                scheme: s.scheme,
                n_r: s.n_r,
                seed: cell.seed,
                ngmi_mean: None,
                fec_oh: None,
                poh_mean: None,
                r_net: None,
                gain_pct: None,
                dd_window: Some(cell.dd_window),
                runtime_s: timings.then_some(cell.runtime_s),
                error: None,
            };
            match &s.report {
                Ok(r) => {
                    row.ngmi_mean = Some(r.ngmi_mean);
                    row.fec_oh = Some(r.fec_oh);
                    row.poh_mean = Some(r.poh_mean);
                    row.r_net = Some(r.r_net_mean);
                    row.gain_pct = base.as_ref().map(|b| 100.0 * r.gain_over(b));
                    if base.is_none() {
                        row.error = Some("baseline failed".into());
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

/// Placeholder rows for a cell that failed before carrier recovery.
pub fn failed_rows(
    format: Format,
    seed: u64,
    distance_km: f64,
    schemes: &[Scheme],
    n_r: &[usize],
    error: &Error,
) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for &scheme in schemes {
        let list: Vec<usize> = if scheme == Scheme::Independent { vec![0] } else { n_r.to_vec() };
        for n in list {
            out.push(ResultRow {
                distance_km,
                format,
                scheme,
                n_r: n,
                seed,
                ngmi_mean: None,
                fec_oh: None,
                poh_mean: None,
                r_net: None,
                gain_pct: None,
                dd_window: None,
                runtime_s: None,
                error: Some(error.to_string()),
            });
        }
    }
    out
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.key(), b.key());
        ka.0.cmp(&kb.0)
            .then(a.distance_km.total_cmp(&b.distance_km))
            .then(ka.2.cmp(&kb.2))
            .then(ka.3.cmp(&kb.3))
            .then(ka.4.cmp(&kb.4))
    });
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(CSV_COLUMNS).map_err(io)?;
    for r in rows {
        wr.write_record([
            format!("{}", r.distance_km),
            r.format.name().to_string(),
            r.scheme.name().to_string(),
            r.n_r.to_string(),
            r.seed.to_string(),
            opt(r.ngmi_mean, 6),
            opt(r.fec_oh, 6),
            opt(r.poh_mean, 8),
            opt(r.r_net, 6),
            opt(r.gain_pct, 4),
            r.dd_window.map(|w| w.to_string()).unwrap_or_default(),
            opt(r.runtime_s, 3),
        ])
        .map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct CsvRecord {
    distance_km: f64,
    format: String,
    scheme: String,
    n_r: usize,
    seed: u64,
    ngmi_mean: Option<f64>,
    fec_oh: Option<f64>,
    poh_mean: Option<f64>,
    r_net: Option<f64>,
    gain_pct: Option<f64>,
    dd_window: Option<usize>,
    runtime_s: Option<f64>,
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Io(format!("unexpected CSV header {headers:?}")));
    }
    rd.deserialize::<CsvRecord>()
        .map(|rec| {
            let r = rec.map_err(|e| Error::Io(e.to_string()))?;
            Ok(ResultRow {
                distance_km: r.distance_km,
                format: Format::parse(&r.format)?,
                scheme: Scheme::parse(&r.scheme)?,
                n_r: r.n_r,
                seed: r.seed,
                ngmi_mean: r.ngmi_mean,
                fec_oh: r.fec_oh,
                poh_mean: r.poh_mean,
                r_net: r.r_net,
                gain_pct: r.gain_pct,
                dd_window: r.dd_window,
                runtime_s: r.runtime_s,
                error: None,
            })
        })
        .collect()
}

/// Mean and sample standard deviation of gain over seeds for one curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainStat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(v: &[f64]) -> GainStat {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n.max(1) as f64;
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    GainStat { mean, std, n }
}

/// Gain curves of one format: (scheme, n_r) -> distance -> statistics.
pub type GainCurves = BTreeMap<(Scheme, usize), Vec<(f64, GainStat)>>;

pub fn gain_curves(rows: &[ResultRow], format: Format) -> GainCurves {
    let mut acc: BTreeMap<(Scheme, usize), BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.format == format && r.scheme != Scheme::Independent) {
        if let Some(g) = r.gain_pct {
            acc.entry((r.scheme, r.n_r))
                .or_default()
                .entry(r.distance_km.to_bits())
                .or_insert((r.distance_km, Vec::new()))
                .1
                .push(g);
        }
    }
    acc.into_iter()
        .map(|(k, m)| {
            let mut pts: Vec<(f64, GainStat)> = m.into_values().map(|(d, g)| (d, mean_std(&g))).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (k, pts)
        })
        .collect()
}

fn colour(s: Scheme) -> &'static str {
    match s {
        Scheme::Independent => "#000000",
        Scheme::Ms1 => "#1f77b4",
        Scheme::Ms2 => "#2ca02c",
        Scheme::Drc => "#d62728",
    }
}

/// Gain versus distance with ±1 std error bars, one curve per (scheme, n_r).
pub fn gain_svg(rows: &[ResultRow], format: Format) -> String {
    let curves = gain_curves(rows, format);
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 160.0, 40.0, 55.0);
    let pts = curves.values().flatten();
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = 0.0f64;
    let mut y1 = 0.0f64;
    for (d, s) in pts {
        x0 = x0.min(*d);
        x1 = x1.max(*d);
        y0 = y0.min(s.mean - s.std);
        y1 = y1.max(s.mean + s.std);
    }
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.08).max(0.5);
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{} net rate gain vs distance</text>"#,
        (ml + w - mr) / 2.0,
        format.name()
    );
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    let _ = writeln!(
        s,
        r##"<line x1="{ml}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
        sy(0.0),
        w - mr
    );
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#,
            sx(x),
            h - mb + 16.0,
            x
        );
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#,
            ml - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">distance [km]</text>"#,
        (ml + w - mr) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">gain [%]</text>"#,
        (mt + h - mb) / 2.0
    );
    for (i, ((scheme, n_r), p)) in curves.iter().enumerate() {
        let col = colour(*scheme);
        let dash = if *n_r == 0 { "" } else { r#" stroke-dasharray="6 3""# };
        let path: Vec<String> = p
            .iter()
            .map(|(d, g)| format!("{:.2},{:.2}", sx(*d), sy(g.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="1.5"{dash}/>"#,
            path.join(" ")
        );
        for (d, g) in p {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{col}"/>"#,
                sx(*d),
                sy(g.mean - g.std),
                sy(g.mean + g.std)
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{col}"><title>{} n_r={} {} km: {:.3} ± {:.3} %</title></circle>"#,
                sx(*d),
                sy(g.mean),
                scheme,
                n_r,
                d,
                g.mean,
                g.std
            );
        }
        let ly = mt + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="{col}" stroke-width="1.5"{dash}/><text x="{3:.2}" y="{4:.2}">{scheme} n_r={n_r}</text>"#,
            w - mr + 12.0,
            ly,
            w - mr + 40.0,
            w - mr + 46.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
