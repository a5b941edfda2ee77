use std::f64::consts::PI;

use crate::error::Result;
use crate::fft::C64;
use crate::sigkit::{header_symbols, pilot_symbols, FrameLayout, PilotPlan, Slot};

/// Pilot symbols averaged together for one phase estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Burst {
    pub positions: Vec<usize>,
    pub centroid: f64,
}

/// Receiver-side knowledge of the transmitted header and pilots over a run
/// of consecutive frames, as seen through one pilot plan.
#[derive(Debug, Clone)]
pub struct KnownSymbols {
    layout: FrameLayout,
    n_frames: usize,
    header: [Vec<C64>; 2],
    pilots: [Vec<C64>; 2],
}

impl KnownSymbols {
    pub fn new(frame_len: usize, n_frames: usize, plan: PilotPlan) -> Result<Self> {
        Ok(KnownSymbols {
            layout: FrameLayout::new(frame_len, plan)?,
            n_frames,
            header: header_symbols(plan.header_len),
            pilots: pilot_symbols(frame_len),
        })
    }

    pub fn plan(&self) -> &PilotPlan {
        self.layout.plan()
    }

    pub fn frame_len(&self) -> usize {
        self.layout.frame_len()
    }

    pub fn len(&self) -> usize {
        self.frame_len() * self.n_frames
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slot(&self, n: usize) -> Slot {
        self.layout.slot(n % self.frame_len())
    }

    pub fn value(&self, pol: usize, n: usize) -> Option<C64> {
        let i = n % self.frame_len();
        match self.layout.slot(i) {
            Slot::Header => Some(self.header[pol][i]),
            Slot::Pilot => Some(self.pilots[pol][i]),
            Slot::Payload => None,
        }
    }

    /// Header symbols of the training sequence.
    pub fn header(&self) -> &[Vec<C64>; 2] {
        &self.header
    }

    /// Pilot bursts over all frames. Header blocks count as pilot-bearing,
    /// using their first symbol, so the dense plan gives a uniform grid.
    pub fn bursts(&self) -> Vec<Burst> {
        let plan = self.plan();
        let f = self.frame_len();
        let bl = plan.block_len;
        let mut out = Vec::new();
        let mut push = |blocks: &[usize], base: usize| {
            let positions: Vec<usize> = blocks.iter().map(|b| base + b * bl).collect();
            let centroid = positions.iter().sum::<usize>() as f64 / positions.len() as f64;
            out.push(Burst { positions, centroid });
        };
        for fr in 0..self.n_frames {
            let base = fr * f;
            let hb: Vec<usize> = (0..plan.header_len / bl).collect();
            for g in hb.chunks(plan.burst_blocks) {
                push(g, base);
            }
            let n_blocks = (f - plan.header_len) / bl;
            let mut run: Vec<usize> = Vec::new();
            for b in 0..n_blocks {
                if plan.block_has_pilot(b) {
                    run.push(b);
                    if run.len() == plan.burst_blocks {
                        push(&run, base + plan.header_len);
                        run.clear();
                    }
                } else if !run.is_empty() {
                    push(&run, base + plan.header_len);
                    run.clear();
                }
            }
            if !run.is_empty() {
                push(&run, base + plan.header_len);
            }
        }
        out
    }

    /// `sum over pols and burst pilots of r * conj(p)`.
    pub fn burst_phasor(&self, sym: &[Vec<C64>; 2], burst: &Burst) -> C64 {
        let mut z = C64::new(0.0, 0.0);
        for (p, s) in sym.iter().enumerate() {
            for &i in &burst.positions {
                if let Some(v) = self.value(p, i) {
                    z += s[i] * v.conj();
                }
            }
        }
        z
    }
}

#[inline]
pub fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

pub fn unwrap(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut last = 0.0;
    for (i, &v) in raw.iter().enumerate() {
        let u = if i == 0 { v } else { last + wrap(v - last) };
        out.push(u);
        last = u;
    }
    out
}

/// Piecewise-linear interpolation onto `0..n`, held constant outside.
pub fn interp_linear(times: &[f64], values: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if times.is_empty() {
        return vec![0.0; n];
    }
    let mut j = 0;
    for k in 0..n {
        let t = k as f64;
        while j + 1 < times.len() && times[j + 1] <= t {
            j += 1;
        }
        let v = if t <= times[0] {
            values[0]
        } else if j + 1 >= times.len() {
            values[times.len() - 1]
        } else {
            let w = (t - times[j]) / (times[j + 1] - times[j]);
            values[j] + w * (values[j + 1] - values[j])
        };
        out.push(v);
    }
    out
}

/// Zero-order hold: each value applies from its time up to the next one.
pub fn hold(times: &[f64], values: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if times.is_empty() {
        return vec![0.0; n];
    }
    let mut j = 0;
    for k in 0..n {
        while j + 1 < times.len() && times[j + 1] <= k as f64 {
            j += 1;
        }
        out.push(values[j]);
    }
    out
}

/// Multiplies every symbol by `exp(-j phase[n])`.
pub fn derotate(sym: &[Vec<C64>; 2], phase: &[f64]) -> [Vec<C64>; 2] {
    sym.clone().map(|v| {
        v.iter()
            .zip(phase)
            .map(|(s, &p)| s * C64::from_polar(1.0, -p))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_bursts_uniform() {
        let k = KnownSymbols::new(1 << 12, 2, PilotPlan::new(0)).unwrap();
        let b = k.bursts();
        assert_eq!(b.len(), 2 * (1 << 12) / 128);
        for w in b.windows(2) {
            assert_eq!(w[1].centroid - w[0].centroid, 128.0);
        }
        assert_eq!(b[0].centroid, 48.0);
    }

    #[test]
    fn sparse_bursts_are_subset() {
        let dense = KnownSymbols::new(1 << 15, 1, PilotPlan::new(0)).unwrap();
        let sparse = KnownSymbols::new(1 << 15, 1, PilotPlan::new(64)).unwrap();
        for b in sparse.bursts() {
            for &i in &b.positions {
                assert_eq!(sparse.value(0, i), dense.value(0, i));
                assert!(sparse.value(1, i).is_some());
            }
        }
        // 8 header bursts plus ceil(992 / 68) payload bursts
        assert_eq!(sparse.bursts().len(), 8 + 15);
    }

    #[test]
    fn interp_and_hold() {
        let t = [2.0, 6.0];
        let v = [1.0, 3.0];
        assert_eq!(interp_linear(&t, &v, 8), vec![1.0, 1.0, 1.0, 1.5, 2.0, 2.5, 3.0, 3.0]);
        assert_eq!(hold(&t, &v, 8), vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn unwrap_recovers_ramp() {
        let ramp: Vec<f64> = (0..100).map(|i| 0.5 * i as f64).collect();
        let w: Vec<f64> = ramp.iter().map(|&x| wrap(x)).collect();
        let u = unwrap(&w);
        for (a, b) in u.iter().zip(&ramp) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
