use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fft::{mean_power, C64};

/// Dual-polarization complex baseband field on a uniform, periodic time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub pol: [Vec<C64>; 2],
    pub sample_rate: f64,
    /// Optical frequency of the grid's baseband zero, relative to the comb center.
    pub ref_freq_offset: f64,
}

impl FieldGrid {
    pub fn zeros(n: usize, sample_rate: f64) -> Self {
        FieldGrid {
            pol: [vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]],
            sample_rate,
            ref_freq_offset: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.pol[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.pol[0].is_empty()
    }

    /// Total mean power in watts (both polarizations).
    pub fn power_w(&self) -> f64 {
        mean_power(&self.pol[0]) + mean_power(&self.pol[1])
    }

    pub fn power_dbm(&self) -> f64 {
        w_to_dbm(self.power_w())
    }

    pub fn scale(&mut self, g: f64) {
        for p in self.pol.iter_mut() {
            for v in p.iter_mut() {
                *v *= g;
            }
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self
            .pol
            .iter()
            .any(|p| p.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()))
        {
            return Err(Error::Numerical("non-finite sample in optical field".into()));
        }
        Ok(())
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Writes each polarization as little-endian interleaved `f32` I/Q
/// (`<stem>.x.cf32`, `<stem>.y.cf32`) plus a `<stem>.txt` sidecar holding
/// `sample_rate` and `ref_freq_offset` as `key = value` lines.
pub fn dump_field(field: &FieldGrid, stem: &Path) -> Result<()> {
    for (p, tag) in ["x", "y"].iter().enumerate() {
        let mut w = BufWriter::new(File::create(stem.with_extension(format!("{tag}.cf32")))?);
        for v in &field.pol[p] {
            w.write_all(&(v.re as f32).to_le_bytes())?;
            w.write_all(&(v.im as f32).to_le_bytes())?;
        }
        w.flush()?;
    }
    let mut side = File::create(stem.with_extension("txt"))?;
    writeln!(side, "sample_rate = {:e}", field.sample_rate)?;
    writeln!(side, "ref_freq_offset = {:e}", field.ref_freq_offset)?;
    writeln!(side, "samples = {}", field.len())?;
    writeln!(side, "format = cf32le")?;
    Ok(())
}

pub fn load_field(stem: &Path) -> Result<FieldGrid> {
    let text = std::fs::read_to_string(stem.with_extension("txt"))?;
    let mut sample_rate = None;
    let mut ref_freq_offset = 0.0;
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            let v = v.trim();
            match k.trim() {
                "sample_rate" => sample_rate = v.parse::<f64>().ok(),
                "ref_freq_offset" => ref_freq_offset = v.parse::<f64>().unwrap_or(0.0),
                _ => {}
            }
        }
    }
    let sample_rate =
        sample_rate.ok_or_else(|| Error::Io("sidecar is missing sample_rate".into()))?;
    let mut pol: [Vec<C64>; 2] = [Vec::new(), Vec::new()];
    for (p, tag) in ["x", "y"].iter().enumerate() {
        let mut bytes = Vec::new();
        BufReader::new(File::open(stem.with_extension(format!("{tag}.cf32")))?)
            .read_to_end(&mut bytes)?;
        pol[p] = bytes
            .chunks_exact(8)
            .map(|c| {
                C64::new(
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64,
                    f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64,
                )
            })
            .collect();
    }
    Ok(FieldGrid {
        pol,
        sample_rate,
        ref_freq_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_roundtrip() {
        let dir = std::env::temp_dir().join(format!("combsim-dump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut f = FieldGrid::zeros(16, 1.08e12);
        f.ref_freq_offset = 75e9;
        for (i, v) in f.pol[1].iter_mut().enumerate() {
            *v = C64::new(i as f64 * 0.25, -0.5);
        }
        let stem = dir.join("field");
        dump_field(&f, &stem).unwrap();
        let g = load_field(&stem).unwrap();
        assert_eq!(g, f);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn power_units() {
        assert!((dbm_to_w(3.0) - 1.995e-3).abs() < 1e-6);
        assert!((w_to_dbm(8e-3) - 9.03).abs() < 0.01);
    }
}
