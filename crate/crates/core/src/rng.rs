//! Counter-based substreams.
//!
//! Every random quantity of an environment is a pure function of
//! `(seed, replicate, box, generation, kind, index)`, so results do not depend
//! on evaluation order or on how work is split across threads.

use serde::{Deserialize, Serialize};

use crate::geometry::BoxIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MasterSeed(pub u64);

/// Which tape of a box a substream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TapeKind {
    Bits,
    Uniforms,
}

impl TapeKind {
    fn code(self) -> u64 {
        match self {
            TapeKind::Bits => 0x42,
            TapeKind::Uniforms => 0x55,
        }
    }
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One keyed stream of 64-bit words, addressed by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Substream {
    key: u64,
}

impl Substream {
    /// `generation` is 0 for the original tape of a box; resampled tapes use
    /// the resample tag plus one.
    pub fn new(seed: MasterSeed, replicate: u64, bx: &BoxIndex, generation: u64, kind: TapeKind) -> Self {
        let mut h = mix64(seed.0 ^ 0x9E37_79B9_7F4A_7C15);
        h = mix64(h ^ replicate.wrapping_mul(0xD134_2543_DE82_EF95));
        for &c in bx.coords() {
            h = mix64(h ^ (c as u64).wrapping_mul(0xA076_1D64_78BD_642F));
        }
        h = mix64(h ^ generation.wrapping_mul(0xE703_7ED1_A0B4_28DB));
        h = mix64(h ^ kind.code());
        Self { key: h }
    }

    /// A stream keyed by free-form labels, for weights and test fixtures.
    pub fn from_labels(seed: MasterSeed, labels: &[u64]) -> Self {
        let mut h = mix64(seed.0 ^ 0x6A09_E667_F3BC_C909);
        for &l in labels {
            h = mix64(h ^ l.wrapping_mul(0x8E9D_5A8F_6A09_E667));
        }
        Self { key: h }
    }

    #[inline]
    pub fn word(&self, index: u64) -> u64 {
        mix64(self.key ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
    }

    #[inline]
    pub fn unit(&self, index: u64) -> f64 {
        (self.word(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bit `j` (1-based) of the stream read as a bit tape.
    #[inline]
    pub fn bit(&self, j: usize) -> bool {
        let i = (j - 1) as u64;
        (self.word(i / 64) >> (i % 64)) & 1 == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_separate_streams() {
        let b = BoxIndex::new(&[1, 2]);
        let s = Substream::new(MasterSeed(7), 0, &b, 0, TapeKind::Bits);
        assert_eq!(s, Substream::new(MasterSeed(7), 0, &b, 0, TapeKind::Bits));
        assert_ne!(s, Substream::new(MasterSeed(7), 1, &b, 0, TapeKind::Bits));
        assert_ne!(s, Substream::new(MasterSeed(7), 0, &BoxIndex::new(&[2, 1]), 0, TapeKind::Bits));
        assert_ne!(s, Substream::new(MasterSeed(7), 0, &b, 1, TapeKind::Bits));
        assert_ne!(s, Substream::new(MasterSeed(7), 0, &b, 0, TapeKind::Uniforms));
    }

    #[test]
    fn units_are_in_range_and_roughly_uniform() {
        let s = Substream::from_labels(MasterSeed(1), &[3]);
        let n = 100_000;
        let mut sum = 0.0;
        for i in 0..n {
            let u = s.unit(i);
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 9e-4
        assert!((mean - 0.5).abs() < 4e-3, "{mean}");
    }
}
