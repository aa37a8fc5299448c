//! Bernoulli/uniform tapes of a single unit box.
//!
//! The number of points is `D^{-1}(sum_i w_i 2^{-i})` for the Poisson(1) CDF
//! `D`; point `k` sits at the box corner plus the `k`-th uniform.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::BoxIndex;
use crate::rng::{MasterSeed, Substream, TapeKind};

/// Hard cap on the number of bits read while decoding a count.
pub const MAX_TAPE_BITS: usize = 128;

/// Poisson(1) CDF values as 128-bit binary fractions; the last entry saturates.
fn cdf_table() -> &'static [u128] {
    static TABLE: OnceLock<Vec<u128>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let scale = 2f64.powi(128);
        let mut out = Vec::new();
        let mut term = (-1f64).exp();
        let mut cdf = 0.0;
        let mut k = 0u32;
        loop {
            cdf += term;
            k += 1;
            term /= k as f64;
            if cdf >= 1.0 || term == 0.0 {
                out.push(u128::MAX);
                break;
            }
            out.push((cdf * scale) as u128);
        }
        out
    })
}

/// Generalized inverse CDF; `None` stands for t = 1.
fn inverse_cdf(t: Option<u128>) -> usize {
    let table = cdf_table();
    match t {
        None => table.len() - 1,
        Some(t) => table.iter().position(|&d| d >= t).unwrap_or(table.len() - 1),
    }
}

/// Decodes a Poisson(1) count from bits `bit(1), bit(2), ...`, reading only as
/// many as needed. Returns the count and the number of bits read.
pub fn decode_count_with(mut bit: impl FnMut(usize) -> bool) -> Result<(usize, usize)> {
    let mut low: u128 = 0;
    for len in 1..=MAX_TAPE_BITS {
        if bit(len) {
            low |= 1u128 << (128 - len);
        }
        let width = 1u128 << (128 - len);
        let high = low.checked_add(width);
        let k_low = inverse_cdf(Some(low));
        if k_low == inverse_cdf(high) {
            return Ok((k_low, len));
        }
    }
    Err(Error::TapeOverflow(MAX_TAPE_BITS))
}

/// Count encoded by a bit prefix followed by zeros.
pub fn decode_poisson_count(prefix: &[bool]) -> Result<usize> {
    decode_count_with(|j| prefix.get(j - 1).copied().unwrap_or(false)).map(|(k, _)| k)
}

/// Shortest bit prefix (zero-padded) decoding to `count`.
pub fn encode_poisson_count(count: usize) -> Result<Vec<bool>> {
    let table = cdf_table();
    if count >= table.len() - 1 {
        return Err(Error::OutOfRange(format!("count {count}")));
    }
    let lo = if count == 0 { 0 } else { table[count - 1] };
    let hi = table[count];
    let mid = lo / 2 + hi / 2;
    for len in 1..=MAX_TAPE_BITS {
        let bits: Vec<bool> = (1..=len).map(|j| (mid >> (128 - j)) & 1 == 1).collect();
        if let Ok((k, used)) = decode_count_with(|j| bits.get(j - 1).copied().unwrap_or(false)) {
            if k == count && used <= len {
                return Ok(bits);
            }
        }
    }
    Err(Error::TapeOverflow(MAX_TAPE_BITS))
}

type Uniform = SmallVec<[f64; 4]>;

#[derive(Clone, Debug, PartialEq)]
enum TapeSource {
    Keyed { bits: Substream, uniforms: Substream },
    /// Bits past the stored prefix are zero.
    Explicit { bits: Vec<bool>, uniforms: Vec<Uniform> },
}

/// Lazily-extended tapes of one unit box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxTape {
    dim: usize,
    source: TapeSource,
    bit_overrides: BTreeMap<usize, bool>,
    uniform_overrides: BTreeMap<usize, Uniform>,
    count: usize,
    depth: usize,
}

impl BoxTape {
    pub fn keyed(seed: MasterSeed, replicate: u64, bx: &BoxIndex, generation: u64) -> Result<Self> {
        let source = TapeSource::Keyed {
            bits: Substream::new(seed, replicate, bx, generation, TapeKind::Bits),
            uniforms: Substream::new(seed, replicate, bx, generation, TapeKind::Uniforms),
        };
        Self::build(bx.dim(), source)
    }

    /// A tape with an explicit bit prefix and uniform list.
    pub fn explicit(dim: usize, bits: Vec<bool>, uniforms: Vec<Vec<f64>>) -> Result<Self> {
        for u in &uniforms {
            if u.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
            }
            if u.iter().any(|x| !(0.0..1.0).contains(x)) {
                return Err(Error::Malformed(format!("uniform {u:?} outside [0,1)")));
            }
        }
        let source = TapeSource::Explicit {
            bits,
            uniforms: uniforms.into_iter().map(SmallVec::from_vec).collect(),
        };
        Self::build(dim, source)
    }

    /// An explicit tape realizing exactly the given uniforms.
    pub fn with_uniforms(dim: usize, uniforms: Vec<Vec<f64>>) -> Result<Self> {
        let bits = encode_poisson_count(uniforms.len())?;
        Self::explicit(dim, bits, uniforms)
    }

    fn build(dim: usize, source: TapeSource) -> Result<Self> {
        let mut tape = Self {
            dim,
            source,
            bit_overrides: BTreeMap::new(),
            uniform_overrides: BTreeMap::new(),
            count: 0,
            depth: 0,
        };
        tape.redecode()?;
        Ok(tape)
    }

    fn redecode(&mut self) -> Result<()> {
        let (count, depth) = decode_count_with(|j| self.bit(j))?;
        if let TapeSource::Explicit { uniforms, .. } = &self.source {
            if count > uniforms.len() {
                return Err(Error::Malformed(format!(
                    "explicit tape decodes to {count} points but lists {} uniforms",
                    uniforms.len()
                )));
            }
        }
        self.count = count;
        self.depth = depth;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bit `j` of the tape, 1-based.
    pub fn bit(&self, j: usize) -> bool {
        if let Some(&b) = self.bit_overrides.get(&j) {
            return b;
        }
        match &self.source {
            TapeSource::Keyed { bits, .. } => bits.bit(j),
            TapeSource::Explicit { bits, .. } => bits.get(j - 1).copied().unwrap_or(false),
        }
    }

    /// The `k`-th uniform (0-based) in `[0,1)^d`.
    pub fn uniform(&self, k: usize) -> Uniform {
        if let Some(u) = self.uniform_overrides.get(&k) {
            return u.clone();
        }
        match &self.source {
            TapeSource::Keyed { uniforms, .. } => {
                let base = (k * self.dim) as u64;
                (0..self.dim as u64).map(|a| uniforms.unit(base + a)).collect()
            }
            TapeSource::Explicit { uniforms, .. } => uniforms[k].clone(),
        }
    }

    /// Decoded Poisson(1) count.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of bits needed to pin down the count.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Bits up to the stabilization depth and past every override.
    pub fn bit_prefix(&self) -> Vec<bool> {
        let last = self.bit_overrides.keys().next_back().copied().unwrap_or(0);
        (1..=self.depth.max(last)).map(|j| self.bit(j)).collect()
    }

    pub fn with_bit(&self, j: usize, value: bool) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidParameter("bit positions are 1-based".into()));
        }
        let mut t = self.clone();
        if self.bit(j) == value {
            return Ok(t);
        }
        t.bit_overrides.insert(j, value);
        t.redecode()?;
        Ok(t)
    }

    pub fn with_uniform(&self, k: usize, u: &[f64]) -> Result<Self> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        let mut t = self.clone();
        t.uniform_overrides.insert(k, SmallVec::from_slice(u));
        Ok(t)
    }
}

/// Length of the initial run of ones on the bit tape.
pub fn leading_ones(tape: &BoxTape) -> usize {
    let mut j = 1;
    while tape.bit(j) {
        j += 1;
    }
    j - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_examples() {
        assert_eq!(decode_poisson_count(&[]).unwrap(), 0);
        assert_eq!(decode_poisson_count(&[true]).unwrap(), 1);
        assert_eq!(decode_poisson_count(&[true, true, true]).unwrap(), 2);
        // flipping the first bit of 0.25 gives 0.75
        assert_eq!(decode_poisson_count(&[false, true]).unwrap(), 0);
        assert_eq!(decode_poisson_count(&[true, true]).unwrap(), 2);
    }

    #[test]
    fn cdf_table_matches_poisson() {
        let t = cdf_table();
        let d0 = t[0] as f64 / 2f64.powi(128);
        let d1 = t[1] as f64 / 2f64.powi(128);
        let d2 = t[2] as f64 / 2f64.powi(128);
        assert!((d0 - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((d1 - 0.735_758_882_342_884_6).abs() < 1e-15);
        assert!((d2 - 0.919_698_602_928_605_7).abs() < 1e-15);
        assert_eq!(*t.last().unwrap(), u128::MAX);
    }

    #[test]
    fn encode_round_trips() {
        for k in 0..12 {
            let bits = encode_poisson_count(k).unwrap();
            assert_eq!(decode_poisson_count(&bits).unwrap(), k);
        }
    }

    #[test]
    fn leading_ones_examples() {
        let t = BoxTape::explicit(2, vec![false], vec![]).unwrap();
        assert_eq!(leading_ones(&t), 0);
        let t = BoxTape::explicit(2, vec![true, true, false], vec![vec![0.1, 0.1]; 3]).unwrap();
        assert_eq!(leading_ones(&t), 2);
    }

    #[test]
    fn explicit_tape_needs_enough_uniforms() {
        assert!(BoxTape::explicit(2, vec![true, true, true], vec![vec![0.5, 0.5]]).is_err());
        assert!(BoxTape::explicit(2, vec![], vec![vec![1.0, 0.5]]).is_err());
    }

    #[test]
    fn bit_override_redecodes() {
        let t = BoxTape::explicit(2, vec![false, true], vec![vec![0.5, 0.5]; 2]).unwrap();
        assert_eq!(t.count(), 0);
        let t2 = t.with_bit(1, true).unwrap();
        assert_eq!(t2.count(), 2);
        assert_eq!(t.with_bit(2, true).unwrap(), t.with_bit(2, true).unwrap());
    }
}
