//! Square QAM constellations with per-axis Gray labeling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// 4-QAM, used for the header and carrier-recovery pilots.
    Qpsk,
    Qam16,
    Qam64,
}

impl Format {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Format::Qpsk => 2,
            Format::Qam16 => 4,
            Format::Qam64 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Qpsk => "qpsk",
            Format::Qam16 => "qam16",
            Format::Qam64 => "qam64",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" | "qam4" => Ok(Format::Qpsk),
            "qam16" | "16qam" | "16-qam" => Ok(Format::Qam16),
            "qam64" | "64qam" | "64-qam" => Ok(Format::Qam64),
            other => Err(Error::Parameter(format!("unknown modulation format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Unit-average-energy square QAM alphabet.
///
/// `points[label]` is the point carrying `label`; the upper half of the label
/// bits is the Gray-coded in-phase level and the lower half the quadrature
/// level, so horizontally or vertically adjacent points differ in one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    format: Format,
    points: Vec<C64>,
    levels_per_axis: usize,
    scale: f64,
    radii: Vec<f64>,
}

impl Constellation {
    pub fn new(format: Format) -> Self {
        let m = format.bits_per_symbol();
        let side = 1usize << (m / 2);
        // mean energy of the {±1, ±3, ...}² lattice
        let es = 2.0 * ((side * side) as f64 - 1.0) / 3.0;
        let scale = es.sqrt();
        let half = (m / 2) as u32;
        let mask = (1u32 << half) - 1;
        let points: Vec<C64> = (0..(1u32 << m))
            .map(|label| {
                let i = gray_inverse(label >> half) as f64;
                let q = gray_inverse(label & mask) as f64;
                let lv = |k: f64| (2.0 * k - side as f64 + 1.0) / scale;
                C64::new(lv(i), lv(q))
            })
            .collect();
        let mut radii: Vec<f64> = Vec::new();
        for p in &points {
            let r = p.norm();
            if !radii.iter().any(|&x| (x - r).abs() < 1e-9) {
                radii.push(r);
            }
        }
        radii.sort_by(f64::total_cmp);
        Constellation {
            format,
            points,
            levels_per_axis: side,
            scale,
            radii,
        }
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.format.bits_per_symbol()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, label: u32) -> C64 {
        self.points[label as usize]
    }

    /// Distinct ring radii, ascending.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn nearest_radius(&self, r: f64) -> f64 {
        let mut best = self.radii[0];
        for &x in &self.radii[1..] {
            if (x - r).abs() < (best - r).abs() {
                best = x;
            }
        }
        best
    }

    fn slice_axis(&self, v: f64) -> u32 {
        let side = self.levels_per_axis as f64;
        let k = ((v * self.scale + side - 1.0) / 2.0).round();
        k.clamp(0.0, side - 1.0) as u32
    }

    /// Label of the minimum-distance point.
    pub fn decide(&self, y: C64) -> u32 {
        let half = (self.bits_per_symbol() / 2) as u32;
        (gray(self.slice_axis(y.re)) << half) | gray(self.slice_axis(y.im))
    }

    pub fn decide_point(&self, y: C64) -> C64 {
        self.point(self.decide(y))
    }

    /// Bit `i` (MSB first) of `label`.
    #[inline]
    pub fn label_bit(&self, label: u32, i: usize) -> u8 {
        ((label >> (self.bits_per_symbol() - 1 - i)) & 1) as u8
    }

    /// Maps groups of `m` bits (MSB first, values 0/1) onto symbols.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let m = self.bits_per_symbol();
        if bits.len() % m != 0 {
            return Err(Error::InputSize(format!(
                "{} bits is not a multiple of {m} bits/symbol",
                bits.len()
            )));
        }
        Ok(bits
            .chunks_exact(m)
            .map(|g| {
                let label = g.iter().fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32);
                self.points[label as usize]
            })
            .collect())
    }

    /// Hard-decision demapping back to bits.
    pub fn demap_hard(&self, symbols: &[C64]) -> Vec<u8> {
        let m = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * m);
        for &y in symbols {
            let label = self.decide(y);
            out.extend((0..m).map(|i| self.label_bit(label, i)));
        }
        out
    }
}

/// Convenience wrapper around [`Constellation::map_bits`].
pub fn map_bits(bits: &[u8], spec: &Constellation) -> Result<Vec<C64>> {
    spec.map_bits(bits)
}
