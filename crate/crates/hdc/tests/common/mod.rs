//! Scalar reference encoder shared by the integration suites.
//!
//! This simulator is deliberately naive and independent of the library's
//! vectorized path: it walks one encoding dimension at a time, extracts
//! the column of bound bits leaf by leaf, and folds groups and tree
//! stages with plain integer arithmetic.

use hdc::encoders::EncoderKind;
use hdc::hv::{Hypervector, IdTable, LevelTable};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

fn majority_vote(bits: &[u8], tie: u8) -> u32 {
    let ones: usize = bits.iter().map(|&b| b as usize).sum();
    match (2 * ones).cmp(&bits.len()) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => tie as u32,
    }
}

fn overfeed_bucket(bits: &[u8]) -> u32 {
    let ones: u32 = bits.iter().map(|&b| b as u32).sum();
    match ones {
        0 | 1 => 0,
        2 | 3 => 1,
        _ => 2,
    }
}

/// Stage count of an adder tree over `inputs` leaves, computed from
/// scratch (three-leaf first stage, then pairwise halving).
fn stages_for(inputs: usize) -> u32 {
    let mut nodes = inputs.div_ceil(3);
    let mut stages = 1;
    while nodes > 1 {
        nodes = nodes.div_ceil(2);
        stages += 1;
    }
    stages
}

fn tree_root(column: &[u8], k: u32) -> u32 {
    let stages = stages_for(column.len());
    let leaf_nodes = 1usize << (stages - 1);
    let mut values = vec![0u32; leaf_nodes];
    for (leaf, &bit) in column.iter().enumerate() {
        values[leaf / 3] += bit as u32;
    }
    for stage in 2..=stages {
        values = values
            .chunks(2)
            .map(|pair| {
                let sum = pair[0] + pair[1];
                if stage <= k {
                    sum / 2
                } else {
                    sum
                }
            })
            .collect();
    }
    values[0]
}

/// Encode one sample the slow way. Tie vectors are only read for the
/// majority schemes.
pub fn oracle_encode(
    kind: EncoderKind,
    features: &[usize],
    levels: &LevelTable,
    ids: &IdTable,
    tie1: Option<&Hypervector>,
    tie2: Option<&Hypervector>,
) -> Vec<u32> {
    let d = levels.dims();
    let mut out = vec![0u32; d];
    for (j, slot) in out.iter_mut().enumerate() {
        let column: Vec<u8> = features
            .iter()
            .enumerate()
            .map(|(i, &bin)| levels.level(bin).bit(j) ^ ids.row(i).bit(j))
            .collect();
        *slot = match kind {
            EncoderKind::Exact => column.iter().map(|&b| b as u32).sum(),
            EncoderKind::Maj => {
                let tie = tie1.unwrap().bit(j);
                column.chunks(6).map(|g| majority_vote(g, tie)).sum()
            }
            EncoderKind::Maj2 => {
                let t1 = tie1.unwrap().bit(j);
                let t2 = tie2.unwrap().bit(j);
                let first: Vec<u8> = column
                    .chunks(6)
                    .map(|g| majority_vote(g, t1) as u8)
                    .collect();
                first.chunks(6).map(|g| majority_vote(g, t2)).sum()
            }
            EncoderKind::Overfeed => column.chunks(5).map(overfeed_bucket).sum(),
            EncoderKind::Trunc { k } => tree_root(&column, k),
        };
    }
    out
}

/// A randomly drawn encoding instance: tables, tie vectors, and a
/// quantized sample.
pub struct RandomInstance {
    pub levels: LevelTable,
    pub ids: IdTable,
    pub features: Vec<usize>,
    pub tie1: Hypervector,
    pub tie2: Hypervector,
}

impl RandomInstance {
    /// Draw an instance with `d_hv` in {64, 128} and `d_iv` in
    /// `[min_features, 64]`.
    pub fn draw(rng: &mut ChaCha12Rng, min_features: usize) -> Self {
        let d_hv = *[64usize, 128].get(rng.random_range(0..2)).unwrap();
        let level_count = *[2usize, 4, 8].get(rng.random_range(0..3)).unwrap();
        let d_iv = rng.random_range(min_features..=64);
        Self::draw_sized(rng, d_hv, level_count, d_iv)
    }

    pub fn draw_sized(
        rng: &mut ChaCha12Rng,
        d_hv: usize,
        level_count: usize,
        d_iv: usize,
    ) -> Self {
        let levels = LevelTable::generate(d_hv, level_count, rng).unwrap();
        let ids = IdTable::generate(d_hv, d_iv, rng).unwrap();
        let features = (0..d_iv).map(|_| rng.random_range(0..level_count)).collect();
        let tie1 = Hypervector::random(d_hv, rng).unwrap();
        let tie2 = Hypervector::random(d_hv, rng).unwrap();
        Self {
            levels,
            ids,
            features,
            tie1,
            tie2,
        }
    }
}

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
