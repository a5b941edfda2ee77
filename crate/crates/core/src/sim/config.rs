use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::combsrc::CombSpec;
use crate::cpr::{DpllGains, Regularization, Scheme};
use crate::error::{Error, Result};
use crate::linkchan::{AmpParams, FiberParams, LinkParams};
use crate::rxdsp::{EqualizerConfig, SyncConfig};
use crate::sigkit::{Format, PAPER_FRAME_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Configuration(format!("unknown profile '{s}'"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CprSettings {
    pub dpll: DpllGains,
    pub drc_eps: f64,
    pub drc_regularization: Regularization,
    pub drc_min_separation: f64,
    /// Fixed DD window; when absent the window is calibrated per cell.
    pub dd_window: Option<usize>,
    pub dd_window_grid: Vec<usize>,
    /// Leading symbols of the calibration frame left out of the window search.
    pub dd_calibration_skip: usize,
}

impl Default for CprSettings {
    fn default() -> Self {
        CprSettings {
            dpll: DpllGains::default(),
            drc_eps: 0.5,
            drc_regularization: Regularization::default(),
            drc_min_separation: 4.0,
            dd_window: None,
            dd_window_grid: vec![8, 16, 32, 64, 128, 256],
            dd_calibration_skip: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepSettings {
    pub step_km: f64,
}

impl Default for StepSettings {
    fn default() -> Self {
        StepSettings { step_km: 1.0 }
    }
}

/// One experiment: the physical link, the DSP settings and the grid of
/// cells to evaluate. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    /// Format and distance of a single `run`.
    pub format: Format,
    pub distance_km: f64,
    /// Formats and per-format distance grids of a `sweep`.
    pub formats: Vec<Format>,
    pub distances_km: BTreeMap<String, Vec<f64>>,
    pub schemes: Vec<Scheme>,
    pub n_r: Vec<usize>,
    pub seeds: Vec<u64>,
    pub frame_len: usize,
    pub n_frames: usize,
    /// Frame (0-based) on which rates are measured; the first frame is used
    /// for window calibration.
    pub metric_frame: usize,
    /// Frame length the header overhead is quoted for.
    pub rate_frame_len: usize,
    pub coding_gap: f64,
    /// Write wall-clock time into the CSV (breaks byte-for-byte reproducibility).
    pub timings: bool,
    /// Directory for optical-field dumps at each tap; empty disables.
    pub dump_dir: String,
    pub comb: CombSpec,
    pub fiber: FiberParams,
    pub amp: AmpParams,
    pub link: LinkParams,
    pub sync: SyncConfig,
    pub equalizer: EqualizerConfig,
    pub cpr: CprSettings,
    pub step: StepSettings,
}

fn grid(spans: &[u32], span_km: f64) -> Vec<f64> {
    spans.iter().map(|&s| s as f64 * span_km).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::profile(Profile::Desk)
    }
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        let fiber = FiberParams::default();
        let span = fiber.span_km;
        let mut distances = BTreeMap::new();
        let (frame_len, seeds, step_km) = match profile {
            Profile::Desk => {
                distances.insert(Format::Qam16.name().to_string(), grid(&[5, 10, 15, 19, 24, 27, 30], span));
                distances.insert(Format::Qam64.name().to_string(), grid(&[2, 4, 6, 7, 8, 10], span));
                (1 << 15, vec![1, 2, 3, 4], 1.0)
            }
            Profile::Paper => {
                distances.insert(Format::Qam16.name().to_string(), grid(&(1..=30).collect::<Vec<_>>(), span));
                distances.insert(Format::Qam64.name().to_string(), grid(&(1..=12).collect::<Vec<_>>(), span));
                (PAPER_FRAME_LEN, vec![1, 2], 0.5)
            }
        };
        RunConfig {
            profile,
            format: Format::Qam16,
            distance_km: 800.0,
            formats: vec![Format::Qam16, Format::Qam64],
            distances_km: distances,
            schemes: Scheme::ALL.to_vec(),
            n_r: vec![0, 64],
            seeds,
            frame_len,
            n_frames: 2,
            metric_frame: 1,
            rate_frame_len: PAPER_FRAME_LEN,
            coding_gap: crate::metrics::DEFAULT_CODING_GAP,
            timings: false,
            dump_dir: String::new(),
            comb: CombSpec::default(),
            fiber,
            amp: AmpParams::default(),
            link: LinkParams::default(),
            sync: SyncConfig::default(),
            equalizer: EqualizerConfig::default(),
            cpr: CprSettings::default(),
            step: StepSettings { step_km },
        }
    }

    /// Resolves a configuration: profile defaults, then the optional file,
    /// then `key=value` overrides (dotted keys address nested tables).
    pub fn resolve(profile: Option<Profile>, file: Option<&Path>, sets: &[String]) -> Result<Self> {
        let file_table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Configuration(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let profile = match (profile, file_table.get("profile").and_then(|v| v.as_str())) {
            (Some(p), _) => p,
            (None, Some(s)) => Profile::parse(s)?,
            (None, None) => Profile::Desk,
        };
        let mut table = toml::Table::try_from(RunConfig::profile(profile))
            .map_err(|e| Error::Configuration(e.to_string()))?;
        merge(&mut table, file_table);
        table.insert("profile".into(), toml::Value::String(profile.to_string()));
        for s in sets {
            apply_set(&mut table, s)?;
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Configuration(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.comb.validate()?;
        self.fiber.validate()?;
        self.amp.validate()?;
        if self.comb.n_lines < 2 {
            return Err(Error::Configuration("at least two channels are required".into()));
        }
        if self.n_frames < 2 || self.metric_frame == 0 || self.metric_frame >= self.n_frames {
            return Err(Error::Configuration(
                "need at least two frames; the metric frame must not be the first".into(),
            ));
        }
        if self.frame_len % 128 != 0 || self.frame_len <= 1024 {
            return Err(Error::Configuration(format!(
                "frame length {} must be a multiple of 128 above the header",
                self.frame_len
            )));
        }
        if self.seeds.is_empty() || self.schemes.is_empty() {
            return Err(Error::Configuration("seeds and schemes must be non-empty".into()));
        }
        for d in self.all_distances() {
            self.spans_for(d)?;
        }
        if self.link.oversample % self.link.adc_sps != 0 {
            return Err(Error::Configuration("ADC rate must divide the grid rate".into()));
        }
        Ok(())
    }

    fn all_distances(&self) -> Vec<f64> {
        let mut v = vec![self.distance_km];
        for f in &self.formats {
            v.extend(self.distances_for(*f));
        }
        v
    }

    pub fn distances_for(&self, f: Format) -> Vec<f64> {
        self.distances_km.get(f.name()).cloned().unwrap_or_default()
    }

    /// Whole number of spans for a distance.
    pub fn spans_for(&self, distance_km: f64) -> Result<usize> {
        let s = distance_km / self.fiber.span_km;
        if distance_km < 0.0 || (s - s.round()).abs() > 1e-9 {
            return Err(Error::Configuration(format!(
                "distance {distance_km} km is not a whole number of {} km spans",
                self.fiber.span_km
            )));
        }
        Ok(s.round() as usize)
    }

    /// Schemes to evaluate, with the baseline always included first.
    pub fn schemes_with_baseline(&self) -> Vec<Scheme> {
        let mut v = vec![Scheme::Independent];
        for &s in &self.schemes {
            if !v.contains(&s) {
                v.push(s);
            }
        }
        v
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_set(table: &mut toml::Table, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| Error::Configuration(format!("override '{set}' is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        cur = match cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        {
            toml::Value::Table(t) => t,
            _ => {
                return Err(Error::Configuration(format!("'{part}' in '{key}' is not a table")));
            }
        };
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
