//! Frame layout: a known QPSK header followed by a payload region divided
//! into 32-symbol blocks, some of which carry one carrier-recovery pilot on
//! their first symbol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::constellation::{Constellation, Format};
use crate::error::{Error, Result};
use crate::fft::C64;

/// Seed of the training header; fixed so every channel and run shares it.
pub const HEADER_SEED: u64 = 0x4845_4144_4552;
/// Seed of the carrier-recovery pilot sequence.
pub const PILOT_SEED: u64 = 0x5049_4c4f_5453;

pub const PAPER_FRAME_LEN: usize = 1 << 17;

/// Pilot distribution: bursts of `burst_blocks` consecutive pilot-bearing
/// blocks separated by `n_r` pilot-free blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotPlan {
    pub block_len: usize,
    pub burst_blocks: usize,
    pub n_r: usize,
    pub header_len: usize,
}

impl Default for PilotPlan {
    fn default() -> Self {
        PilotPlan::new(0)
    }
}

impl PilotPlan {
    pub fn new(n_r: usize) -> Self {
        PilotPlan {
            block_len: 32,
            burst_blocks: 4,
            n_r,
            header_len: 1024,
        }
    }

    pub fn period_blocks(&self) -> usize {
        self.burst_blocks + self.n_r
    }

    pub fn period_symbols(&self) -> usize {
        self.period_blocks() * self.block_len
    }

    /// Whether payload-region block `b` (counted from the end of the header)
    /// carries a pilot.
    pub fn block_has_pilot(&self, b: usize) -> bool {
        b % self.period_blocks() < self.burst_blocks
    }

    /// (pilot symbols, non-pilot symbols) in one period.
    pub fn overhead_counts(&self) -> (usize, usize) {
        (
            self.burst_blocks,
            self.period_symbols() - self.burst_blocks,
        )
    }

    /// Carrier-recovery pilot overhead, pilots over non-pilot symbols.
    pub fn overhead(&self) -> f64 {
        let (p, d) = self.overhead_counts();
        p as f64 / d as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_len == 0 || self.burst_blocks == 0 {
            return Err(Error::Parameter("block_len and burst_blocks must be positive".into()));
        }
        if self.header_len % self.block_len != 0 {
            return Err(Error::Parameter(format!(
                "header length {} is not a whole number of {}-symbol blocks",
                self.header_len, self.block_len
            )));
        }
        Ok(())
    }
}

/// Header pilot overhead `header / (frame - header)`.
pub fn header_overhead(header_len: usize, frame_len: usize) -> f64 {
    header_len as f64 / (frame_len - header_len) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Header,
    Pilot,
    Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    plan: PilotPlan,
    frame_len: usize,
    slots: Vec<Slot>,
}

impl FrameLayout {
    pub fn new(frame_len: usize, plan: PilotPlan) -> Result<Self> {
        plan.validate()?;
        if frame_len <= plan.header_len || frame_len % plan.block_len != 0 {
            return Err(Error::Parameter(format!(
                "frame length {frame_len} must exceed the header and be a multiple of {}",
                plan.block_len
            )));
        }
        let mut slots = vec![Slot::Payload; frame_len];
        slots[..plan.header_len].fill(Slot::Header);
        let n_blocks = (frame_len - plan.header_len) / plan.block_len;
        for b in 0..n_blocks {
            if plan.block_has_pilot(b) {
                slots[plan.header_len + b * plan.block_len] = Slot::Pilot;
            }
        }
        Ok(FrameLayout {
            plan,
            frame_len,
            slots,
        })
    }

    pub fn plan(&self) -> &PilotPlan {
        &self.plan
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, i: usize) -> Slot {
        self.slots[i]
    }

    pub fn indices(&self, kind: Slot) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == kind).then_some(i))
            .collect()
    }

    pub fn count(&self, kind: Slot) -> usize {
        self.slots.iter().filter(|&&s| s == kind).count()
    }

    pub fn payload_len(&self) -> usize {
        self.count(Slot::Payload)
    }
}

fn qpsk_sequence(seed: u64, stream: u64, len: usize) -> Vec<C64> {
    let qpsk = Constellation::new(Format::Qpsk);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len)
        .map(|_| qpsk.point(rng.random_range(0..4u32)))
        .collect()
}

/// Known training header for the two polarizations.
pub fn header_symbols(len: usize) -> [Vec<C64>; 2] {
    [qpsk_sequence(HEADER_SEED, 0, len), qpsk_sequence(HEADER_SEED, 1, len)]
}

/// Known pilot value for every frame position; a pilot slot at position `i`
/// transmits element `i`.
pub fn pilot_symbols(frame_len: usize) -> [Vec<C64>; 2] {
    [
        qpsk_sequence(PILOT_SEED, 0, frame_len),
        qpsk_sequence(PILOT_SEED, 1, frame_len),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub pol: [Vec<C64>; 2],
    pub layout: FrameLayout,
    pub tx_bits: [Vec<u8>; 2],
}

impl SymbolFrame {
    pub fn frame_len(&self) -> usize {
        self.layout.frame_len()
    }
}

/// Uniform random payload bits sized for `layout`.
pub fn random_payload_bits<R: Rng>(
    layout: &FrameLayout,
    constellation: &Constellation,
    rng: &mut R,
) -> Vec<u8> {
    let n = layout.payload_len() * constellation.bits_per_symbol();
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

pub fn build_frame(
    payload_bits: [&[u8]; 2],
    plan: PilotPlan,
    constellation: &Constellation,
    frame_len: usize,
) -> Result<SymbolFrame> {
    let layout = FrameLayout::new(frame_len, plan)?;
    let need = layout.payload_len() * constellation.bits_per_symbol();
    for bits in payload_bits {
        if bits.len() != need {
            return Err(Error::InputSize(format!(
                "payload needs {need} bits, got {}",
                bits.len()
            )));
        }
    }
    let header = header_symbols(plan.header_len);
    let pilots = pilot_symbols(frame_len);
    let mut pol: [Vec<C64>; 2] = [Vec::with_capacity(frame_len), Vec::with_capacity(frame_len)];
    for p in 0..2 {
        let data = constellation.map_bits(payload_bits[p])?;
        let mut next = data.into_iter();
        for (i, slot) in layout.slots().iter().enumerate() {
            let s = match slot {
                Slot::Header => header[p][i],
                Slot::Pilot => pilots[p][i],
                Slot::Payload => next.next().expect("payload sized above"),
            };
            pol[p].push(s);
        }
    }
    Ok(SymbolFrame {
        pol,
        layout,
        tx_bits: [payload_bits[0].to_vec(), payload_bits[1].to_vec()],
    })
}
