//! Binary hypervector primitives.
//!
//! A [`Hypervector`] is a dense bit vector of dimension `d_hv` (a positive
//! multiple of 64), packed into `u64` words. Bit `j` of the vector is bit
//! `j % 64` of word `j / 64`. The `{-1, +1}` algebra common in the HD
//! literature maps onto `{0, 1}` with `-1 ↦ 0`, which makes bundling a
//! plain popcount.
//!
//! [`LevelTable`] holds the quantization-bin codewords: neighbouring bins
//! differ in exactly `d_hv / (2·L)` coordinates, and flip sets across
//! steps are disjoint, so Hamming distance grows exactly linearly with
//! bin distance. [`IdTable`] holds the per-feature position vectors,
//! generated by rotating a single seed ID so only one vector must ever be
//! stored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Bits per storage word.
pub const WORD_BITS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum HvError {
    #[error("dimension {0} is not a positive multiple of 64")]
    InvalidDimension(usize),
    #[error("level count {0} is below the minimum of 2")]
    InvalidLevelCount(usize),
    #[error("2*L = {two_l} does not divide d_hv = {d_hv}; flips per level step must be an integer")]
    NonIntegerFlipCount { d_hv: usize, two_l: usize },
    #[error("feature count must be at least 1")]
    InvalidFeatureCount,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for a zero-norm vector")]
    ZeroVector,
    #[error("level table is not monotone in Hamming distance")]
    NonMonotoneLevels,
}

/// Purposes for which random bits are drawn. Each purpose maps to its own
/// ChaCha stream under one master seed, so artifacts can be regenerated
/// independently and in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    /// Level-table base vector and flip coordinates.
    Levels = 1,
    /// Seed ID vector.
    Ids = 2,
    /// Majority tie-break bits, first stage.
    TieStage1 = 3,
    /// Majority tie-break bits, second stage.
    TieStage2 = 4,
    /// Synthetic dataset sampling.
    Synthetic = 5,
    /// Optional per-epoch sample shuffling.
    Shuffle = 6,
}

/// Derive the deterministic RNG for one purpose from the master seed.
pub fn stream_rng(master_seed: u64, stream: SeedStream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream as u64);
    rng
}

/// A fixed-length binary vector packed into 64-bit words.
#[derive(Clone, PartialEq, Eq)]
pub struct Hypervector {
    words: Vec<u64>,
}

impl std::fmt::Debug for Hypervector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Hypervector(d={}, ones={})", self.dims(), self.popcount())
    }
}

fn check_dims(d_hv: usize) -> Result<(), HvError> {
    if d_hv == 0 || !d_hv.is_multiple_of(WORD_BITS) {
        return Err(HvError::InvalidDimension(d_hv));
    }
    Ok(())
}

impl Hypervector {
    /// All-zero vector of dimension `d_hv`.
    pub fn zeros(d_hv: usize) -> Result<Self, HvError> {
        check_dims(d_hv)?;
        Ok(Self {
            words: vec![0; d_hv / WORD_BITS],
        })
    }

    /// Uniformly random vector of dimension `d_hv`.
    pub fn random(d_hv: usize, rng: &mut impl Rng) -> Result<Self, HvError> {
        check_dims(d_hv)?;
        Ok(Self {
            words: (0..d_hv / WORD_BITS).map(|_| rng.random()).collect(),
        })
    }

    /// Wrap pre-packed words; the dimension is `64 * words.len()`.
    pub fn from_words(words: Vec<u64>) -> Result<Self, HvError> {
        if words.is_empty() {
            return Err(HvError::InvalidDimension(0));
        }
        Ok(Self { words })
    }

    pub fn dims(&self) -> usize {
        self.words.len() * WORD_BITS
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bit `j` as 0 or 1.
    #[inline]
    pub fn bit(&self, j: usize) -> u8 {
        debug_assert!(j < self.dims());
        ((self.words[j / WORD_BITS] >> (j % WORD_BITS)) & 1) as u8
    }

    pub fn set_bit(&mut self, j: usize, value: bool) {
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            self.words[j / WORD_BITS] |= mask;
        } else {
            self.words[j / WORD_BITS] &= !mask;
        }
    }

    pub fn flip_bit(&mut self, j: usize) {
        self.words[j / WORD_BITS] ^= 1u64 << (j % WORD_BITS);
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Element-wise XOR: the binding operation. Involutive, so
    /// `a.bind(&b).bind(&b) == a`.
    pub fn bind(&self, other: &Self) -> Result<Self, HvError> {
        if self.dims() != other.dims() {
            return Err(HvError::DimensionMismatch(self.dims(), other.dims()));
        }
        Ok(Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Number of differing coordinates.
    pub fn hamming(&self, other: &Self) -> Result<usize, HvError> {
        if self.dims() != other.dims() {
            return Err(HvError::DimensionMismatch(self.dims(), other.dims()));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Sequence rotation: `out[j] = self[(j + k) mod d_hv]`, i.e. the bit
    /// at position 0 moves to position `d_hv - k`.
    pub fn rotate_left(&self, k: usize) -> Self {
        let d = self.dims();
        let k = k % d;
        if k == 0 {
            return self.clone();
        }
        let n = self.words.len();
        let mut out = vec![0u64; n];
        let (word_shift, bit_shift) = (k / WORD_BITS, k % WORD_BITS);
        for (w, slot) in out.iter_mut().enumerate() {
            let lo = self.words[(w + word_shift) % n];
            *slot = if bit_shift == 0 {
                lo
            } else {
                let hi = self.words[(w + word_shift + 1) % n];
                (lo >> bit_shift) | (hi << (WORD_BITS - bit_shift))
            };
        }
        Self { words: out }
    }
}

/// The codewords assigned to quantization bins, ordered from the minimal
/// bin upward. Built so that `hamming(level[i], level[j]) = |i-j| *
/// flips_per_step` exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelTable {
    levels: Vec<Hypervector>,
    flips_per_step: usize,
}

impl LevelTable {
    /// Generate `level_count` codewords of dimension `d_hv`.
    ///
    /// The base codeword is uniform random; each subsequent codeword flips
    /// `d_hv / (2 * level_count)` coordinates drawn without replacement
    /// from coordinates never flipped before, which makes the pairwise
    /// Hamming distance exactly linear in bin distance.
    pub fn generate(
        d_hv: usize,
        level_count: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, HvError> {
        check_dims(d_hv)?;
        if level_count < 2 {
            return Err(HvError::InvalidLevelCount(level_count));
        }
        if !d_hv.is_multiple_of(2 * level_count) {
            return Err(HvError::NonIntegerFlipCount {
                d_hv,
                two_l: 2 * level_count,
            });
        }
        let flips_per_step = d_hv / (2 * level_count);
        let base = Hypervector::random(d_hv, rng)?;
        let coords = rand::seq::index::sample(rng, d_hv, (level_count - 1) * flips_per_step);

        let mut levels = Vec::with_capacity(level_count);
        levels.push(base);
        for step in 0..level_count - 1 {
            let mut next = levels[step].clone();
            for i in 0..flips_per_step {
                next.flip_bit(coords.index(step * flips_per_step + i));
            }
            levels.push(next);
        }
        Ok(Self {
            levels,
            flips_per_step,
        })
    }

    /// Rebuild from stored codewords, re-validating the distance
    /// invariants.
    pub fn from_levels(levels: Vec<Hypervector>) -> Result<Self, HvError> {
        if levels.len() < 2 {
            return Err(HvError::InvalidLevelCount(levels.len()));
        }
        let d = levels[0].dims();
        for l in &levels {
            if l.dims() != d {
                return Err(HvError::DimensionMismatch(d, l.dims()));
            }
        }
        let flips_per_step = levels[0].hamming(&levels[1])?;
        for i in 0..levels.len() {
            for j in i + 1..levels.len() {
                if levels[i].hamming(&levels[j])? != (j - i) * flips_per_step {
                    return Err(HvError::NonMonotoneLevels);
                }
            }
        }
        Ok(Self {
            levels,
            flips_per_step,
        })
    }

    pub fn level(&self, bin: usize) -> &Hypervector {
        &self.levels[bin]
    }

    pub fn levels(&self) -> &[Hypervector] {
        &self.levels
    }

    /// Number of quantization bins L.
    pub fn count(&self) -> usize {
        self.levels.len()
    }

    pub fn dims(&self) -> usize {
        self.levels[0].dims()
    }

    pub fn flips_per_step(&self) -> usize {
        self.flips_per_step
    }
}

/// Per-feature position vectors. Feature `k` uses the seed ID rotated
/// left by `k`, so the whole table is determined by one vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdTable {
    seed_id: Hypervector,
    rows: Vec<Hypervector>,
}

impl IdTable {
    /// Generate a random seed ID and materialize `feature_count` rotations.
    pub fn generate(
        d_hv: usize,
        feature_count: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, HvError> {
        let seed_id = Hypervector::random(d_hv, rng)?;
        Self::from_seed(seed_id, feature_count)
    }

    /// Rebuild the rotation table from a stored seed ID.
    pub fn from_seed(seed_id: Hypervector, feature_count: usize) -> Result<Self, HvError> {
        if feature_count == 0 {
            return Err(HvError::InvalidFeatureCount);
        }
        let rows = (0..feature_count)
            .map(|k| seed_id.rotate_left(k))
            .collect();
        Ok(Self { seed_id, rows })
    }

    pub fn seed_id(&self) -> &Hypervector {
        &self.seed_id
    }

    /// Position vector for feature index `k` (0-based).
    pub fn row(&self, k: usize) -> &Hypervector {
        &self.rows[k]
    }

    pub fn feature_count(&self) -> usize {
        self.rows.len()
    }

    pub fn dims(&self) -> usize {
        self.seed_id.dims()
    }
}

/// Cosine similarity of two real vectors. Errors if either has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, HvError> {
    if a.len() != b.len() {
        return Err(HvError::DimensionMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(HvError::ZeroVector);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}
