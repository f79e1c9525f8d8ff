//! Bit-exact software models of the bundling datapaths.
//!
//! Every scheme starts from the same bound-bit matrix: for feature `i`
//! with quantized bin `q_i`, row `i` is `level[q_i] XOR id[i]`. The
//! schemes differ only in how the `d_iv` bits of each encoding dimension
//! are summed:
//!
//! - `exact` — plain popcount, values in `[0, d_iv]`.
//! - `maj` — bits are grouped six at a time (the fan-in of one LUT-6) and
//!   replaced by their majority before an exact sum; a three/three tie is
//!   broken by a fixed per-dimension tie bit. Values in `[0, ceil(d_iv/6)]`.
//! - `maj2` — a second majority stage over groups of six first-stage
//!   outputs, with its own tie bits. Values in `[0, ceil(d_iv/36)]`.
//! - `overfeed` — groups of five bits produce a saturating two-bit bucket
//!   (0-1 → 0, 2-3 → 1, 4-5 → 2) before the exact sum. Values in
//!   `[0, 2*ceil(d_iv/5)]`.
//! - `trunc:k` — a binary adder tree whose stages 2..=k drop the least
//!   significant bit of every sum (`floor((a+b)/2)`), keeping node widths
//!   at two bits; later stages add exactly. The root is left unscaled and
//!   the semantic factor `2^(k-1)` is recorded instead, since cosine
//!   similarity ignores uniform positive scaling.
//!
//! Groups follow feature order, the last group of a dimension may be
//! smaller than nominal (majority then compares against half the actual
//! size; overfeed applies the same bucket thresholds), and truncated
//! trees zero-pad to a full power-of-two leaf count. The same fixed
//! grouping is used at training and inference.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hv::{stream_rng, HvError, Hypervector, IdTable, LevelTable, SeedStream};

/// Fan-in of a majority group (one LUT-6).
pub const MAJ_GROUP: usize = 6;
/// Fan-in of an overfed first-stage group (five of six LUT inputs).
pub const OVERFEED_GROUP: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("feature {index} quantized to bin {bin}, outside [0, {levels})")]
    FeatureIndexOutOfRange {
        index: usize,
        bin: usize,
        levels: usize,
    },
    #[error("got {given} features for an ID table of {expected}")]
    FeatureCountMismatch { given: usize, expected: usize },
    #[error("{0} encoding requires its tie-break vector")]
    MissingTieBits(&'static str),
    #[error("truncation depth k={k} outside [1, {stages}] for {inputs} inputs")]
    InvalidTruncDepth { k: u32, stages: u32, inputs: usize },
    #[error(transparent)]
    Hv(#[from] HvError),
}

/// Which bundling datapath to emulate. `Trunc { k }` truncates stages
/// 2..=k of the adder tree; `k >= 2` (depth 1 leaves the tree exact and
/// is only meaningful as a consistency check).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Exact,
    Maj,
    Maj2,
    Overfeed,
    Trunc { k: u32 },
}

impl EncoderKind {
    /// All schemes at their default depths, in report order.
    pub fn sweep_set() -> Vec<EncoderKind> {
        vec![
            EncoderKind::Exact,
            EncoderKind::Maj,
            EncoderKind::Maj2,
            EncoderKind::Overfeed,
            EncoderKind::Trunc { k: 3 },
            EncoderKind::Trunc { k: 4 },
        ]
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderKind::Exact => write!(f, "exact"),
            EncoderKind::Maj => write!(f, "maj"),
            EncoderKind::Maj2 => write!(f, "maj2"),
            EncoderKind::Overfeed => write!(f, "overfeed"),
            EncoderKind::Trunc { k } => write!(f, "trunc:{k}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown encoder {0:?}; expected exact | maj | maj2 | overfeed | trunc:<k> with k >= 2")]
pub struct ParseEncoderError(String);

impl FromStr for EncoderKind {
    type Err = ParseEncoderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(EncoderKind::Exact),
            "maj" => Ok(EncoderKind::Maj),
            "maj2" => Ok(EncoderKind::Maj2),
            "overfeed" => Ok(EncoderKind::Overfeed),
            _ => {
                if let Some(depth) = s.strip_prefix("trunc:") {
                    match depth.parse::<u32>() {
                        Ok(k) if k >= 2 => Ok(EncoderKind::Trunc { k }),
                        _ => Err(ParseEncoderError(s.to_string())),
                    }
                } else {
                    Err(ParseEncoderError(s.to_string()))
                }
            }
        }
    }
}

/// An encoder scheme plus the fixed per-dimension tie-break bits the
/// majority schemes need. Tie vectors are drawn from dedicated streams of
/// the master seed and stay frozen for the lifetime of a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub tie_bits_stage1: Option<Hypervector>,
    pub tie_bits_stage2: Option<Hypervector>,
}

impl EncoderConfig {
    /// Build the configuration for `kind` at dimension `d_hv`, drawing
    /// whatever tie vectors the scheme needs from `master_seed`.
    pub fn build(kind: EncoderKind, d_hv: usize, master_seed: u64) -> Result<Self, EncodeError> {
        let tie_bits_stage1 = match kind {
            EncoderKind::Maj | EncoderKind::Maj2 => Some(Hypervector::random(
                d_hv,
                &mut stream_rng(master_seed, SeedStream::TieStage1),
            )?),
            _ => None,
        };
        let tie_bits_stage2 = match kind {
            EncoderKind::Maj2 => Some(Hypervector::random(
                d_hv,
                &mut stream_rng(master_seed, SeedStream::TieStage2),
            )?),
            _ => None,
        };
        Ok(Self {
            kind,
            tie_bits_stage1,
            tie_bits_stage2,
        })
    }
}

/// The bundling result: one non-negative integer per encoding dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedVector {
    pub values: Vec<u32>,
    /// `2^(k-1)` for truncated encodings; the values are *not* multiplied
    /// by it because similarity is scale-invariant.
    pub scale: Option<u64>,
}

impl EncodedVector {
    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Total adder-tree stage count for `inputs` leaves: one three-input
/// stage followed by pairwise stages.
pub fn tree_stages(inputs: usize) -> u32 {
    let first_stage_nodes = inputs.div_ceil(3);
    1 + first_stage_nodes.next_power_of_two().trailing_zeros()
}

fn bound_rows(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
) -> Result<Vec<Hypervector>, EncodeError> {
    if features.len() != ids.feature_count() {
        return Err(EncodeError::FeatureCountMismatch {
            given: features.len(),
            expected: ids.feature_count(),
        });
    }
    if levels.dims() != ids.dims() {
        return Err(HvError::DimensionMismatch(levels.dims(), ids.dims()).into());
    }
    features
        .iter()
        .enumerate()
        .map(|(i, &bin)| {
            if bin >= levels.count() {
                return Err(EncodeError::FeatureIndexOutOfRange {
                    index: i,
                    bin,
                    levels: levels.count(),
                });
            }
            Ok(levels.level(bin).bind(ids.row(i))?)
        })
        .collect()
}

/// Add each bit of `row` into the per-dimension accumulator.
#[inline]
fn add_bits_u8(acc: &mut [u8], row: &Hypervector) {
    for (w, &word) in row.words().iter().enumerate() {
        let base = w * 64;
        for b in 0..64 {
            acc[base + b] += ((word >> b) & 1) as u8;
        }
    }
}

#[inline]
fn add_bits_u32(acc: &mut [u32], row: &Hypervector) {
    for (w, &word) in row.words().iter().enumerate() {
        let base = w * 64;
        for b in 0..64 {
            acc[base + b] += ((word >> b) & 1) as u32;
        }
    }
}

/// Majority of `count` ones among `size` inputs, falling back to the
/// dimension's tie bit at an exact half split.
#[inline]
fn majority(count: u8, size: usize, tie_bit: u8) -> u32 {
    let doubled = 2 * count as usize;
    if doubled > size {
        1
    } else if doubled < size {
        0
    } else {
        tie_bit as u32
    }
}

/// Dispatch to the scheme configured in `cfg`.
pub fn encode(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
    cfg: &EncoderConfig,
) -> Result<EncodedVector, EncodeError> {
    match cfg.kind {
        EncoderKind::Exact => encode_exact(features, levels, ids),
        EncoderKind::Maj => {
            let tie1 = cfg
                .tie_bits_stage1
                .as_ref()
                .ok_or(EncodeError::MissingTieBits("maj"))?;
            encode_maj(features, levels, ids, tie1)
        }
        EncoderKind::Maj2 => {
            let tie1 = cfg
                .tie_bits_stage1
                .as_ref()
                .ok_or(EncodeError::MissingTieBits("maj2"))?;
            let tie2 = cfg
                .tie_bits_stage2
                .as_ref()
                .ok_or(EncodeError::MissingTieBits("maj2"))?;
            encode_maj2(features, levels, ids, tie1, tie2)
        }
        EncoderKind::Overfeed => encode_overfeed(features, levels, ids),
        EncoderKind::Trunc { k } => encode_trunc(features, levels, ids, k),
    }
}

/// Exact popcount bundling: `values[j] = sum_i bound_bit(i, j)`.
pub fn encode_exact(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
) -> Result<EncodedVector, EncodeError> {
    let rows = bound_rows(features, levels, ids)?;
    let d = levels.dims();
    let mut values = vec![0u32; d];
    for row in &rows {
        add_bits_u32(&mut values, row);
    }
    Ok(EncodedVector {
        values,
        scale: None,
    })
}

/// Local-majority bundling: six-bit groups vote, the votes are summed
/// exactly.
pub fn encode_maj(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
    tie_bits: &Hypervector,
) -> Result<EncodedVector, EncodeError> {
    let rows = bound_rows(features, levels, ids)?;
    if tie_bits.dims() != levels.dims() {
        return Err(HvError::DimensionMismatch(tie_bits.dims(), levels.dims()).into());
    }
    let d = levels.dims();
    let mut values = vec![0u32; d];
    let mut group = vec![0u8; d];
    for chunk in rows.chunks(MAJ_GROUP) {
        group.fill(0);
        for row in chunk {
            add_bits_u8(&mut group, row);
        }
        for j in 0..d {
            values[j] += majority(group[j], chunk.len(), tie_bits.bit(j));
        }
    }
    Ok(EncodedVector {
        values,
        scale: None,
    })
}

/// Cascaded two-stage majority: the first-stage votes are themselves
/// grouped six at a time and voted on before the exact sum.
pub fn encode_maj2(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
    tie_bits_stage1: &Hypervector,
    tie_bits_stage2: &Hypervector,
) -> Result<EncodedVector, EncodeError> {
    let rows = bound_rows(features, levels, ids)?;
    let d = levels.dims();
    for tie in [tie_bits_stage1, tie_bits_stage2] {
        if tie.dims() != d {
            return Err(HvError::DimensionMismatch(tie.dims(), d).into());
        }
    }
    let mut values = vec![0u32; d];
    let mut group = vec![0u8; d];
    let mut stage2_count = vec![0u8; d];
    let mut stage2_size = 0usize;
    let chunk_total = rows.chunks(MAJ_GROUP).len();
    for (g, chunk) in rows.chunks(MAJ_GROUP).enumerate() {
        group.fill(0);
        for row in chunk {
            add_bits_u8(&mut group, row);
        }
        for j in 0..d {
            stage2_count[j] += majority(group[j], chunk.len(), tie_bits_stage1.bit(j)) as u8;
        }
        stage2_size += 1;
        if stage2_size == MAJ_GROUP || g + 1 == chunk_total {
            for j in 0..d {
                values[j] += majority(stage2_count[j], stage2_size, tie_bits_stage2.bit(j));
            }
            stage2_count.fill(0);
            stage2_size = 0;
        }
    }
    Ok(EncodedVector {
        values,
        scale: None,
    })
}

/// Overfed bundling: five-bit groups emit a two-bit bucket
/// (0-1 → 0, 2-3 → 1, 4-5 → 2) that is summed exactly.
pub fn encode_overfeed(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
) -> Result<EncodedVector, EncodeError> {
    let rows = bound_rows(features, levels, ids)?;
    let d = levels.dims();
    let mut values = vec![0u32; d];
    let mut group = vec![0u8; d];
    for chunk in rows.chunks(OVERFEED_GROUP) {
        group.fill(0);
        for row in chunk {
            add_bits_u8(&mut group, row);
        }
        for j in 0..d {
            values[j] += match group[j] {
                0 | 1 => 0,
                2 | 3 => 1,
                _ => 2,
            };
        }
    }
    Ok(EncodedVector {
        values,
        scale: None,
    })
}

/// Truncated adder-tree bundling.
///
/// The bound bits are zero-padded to `3 * 2^(S-1)` leaves, where
/// `S = tree_stages(d_iv)`. Stage 1 sums disjoint triples exactly; stages
/// `2..=k` combine pairs as `floor((a+b)/2)`; stages `k+1..=S` combine
/// pairs exactly. `k = 1` truncates nothing and reproduces the exact
/// popcount.
pub fn encode_trunc(
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
    k: u32,
) -> Result<EncodedVector, EncodeError> {
    let rows = bound_rows(features, levels, ids)?;
    let stages = tree_stages(features.len());
    if k < 1 || k > stages {
        return Err(EncodeError::InvalidTruncDepth {
            k,
            stages,
            inputs: features.len(),
        });
    }
    let d = levels.dims();
    let node_count = rows.len().div_ceil(3).next_power_of_two();

    // nodes[t][j] for the current stage, flattened; padding nodes stay 0.
    let mut nodes = vec![0u32; node_count * d];
    for (t, triple) in rows.chunks(3).enumerate() {
        let slot = &mut nodes[t * d..(t + 1) * d];
        for row in triple {
            add_bits_u32(slot, row);
        }
    }
    let mut width = node_count;
    for stage in 2..=stages {
        let truncate = stage <= k;
        width /= 2;
        for t in 0..width {
            for j in 0..d {
                let sum = nodes[2 * t * d + j] + nodes[(2 * t + 1) * d + j];
                nodes[t * d + j] = if truncate { sum >> 1 } else { sum };
            }
        }
    }
    nodes.truncate(d);
    Ok(EncodedVector {
        values: nodes,
        scale: Some(1u64 << (k - 1)),
    })
}
