//! Analytical FPGA cost model: LUT counts per encoder, BRAM grouping and
//! per-cycle feature capacity, cycle counts, and activity-driven power.
//!
//! LUT counts come from finite stage sums evaluated in real arithmetic
//! and rounded once at the end. A `d`-input exact popcount tree spends
//! `d/3` LUT-6 on its three-input first stage, then halves the adder
//! count per stage while adder widths grow one bit per stage (an `n`-bit
//! two-input adder takes `n` LUT-6), giving
//! `sum_i (d/3) * i / 2^(i-1) ≈ (4/3) d`. The approximate datapaths
//! modify the stage structure:
//!
//! - `maj`: `d/6` majority LUTs feed an exact tree of `d/6` inputs.
//! - `maj2`: two majority stages feed a tree of `d/36` inputs.
//! - `overfeed`: the first stage packs five bits per LUT-6 instead of
//!   three.
//! - `trunc:k`: stages `2..=k` keep two-bit widths (one LUT-6 each
//!   instead of a growing adder).
//!
//! The architecture planner sizes BRAM groups for the level table,
//! reserves blocks for the rotated seed ID, balances the per-cycle
//! feature count, and prices a sample in cycles:
//! `ceil(d_hv / d_mem) * ceil(d_iv / F)`.
//!
//! Power is strictly calibration-driven: the caller supplies a measured
//! table of per-tree watts over (adder input count, input activity) plus
//! per-BRAM watts over read toggle rate, and queries outside the
//! calibrated range are errors, not guesses.

use thiserror::Error;

use crate::encoders::{tree_stages, EncoderKind};
use crate::hv::Hypervector;
use crate::hv::{IdTable, LevelTable};

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("hardware config: {0}")]
    InvalidHardwareConfig(String),
    #[error("adder tree needs at least 3 inputs, got {0}")]
    TooFewInputs(usize),
    #[error("truncation depth k={k} outside [1, {stages}] for a {inputs}-input tree")]
    TruncDepth { k: u32, stages: u32, inputs: usize },
    #[error("insufficient BRAMs: {0}")]
    InsufficientBrams(String),
    #[error("empty signal stream")]
    EmptyStream,
    #[error("signal words have differing widths")]
    WidthMismatch,
    #[error("calibration query (size {size}, activity {activity}) is outside the calibrated range")]
    CalibrationOutOfRange { size: f64, activity: f64 },
    #[error("calibration: {0}")]
    InvalidCalibration(String),
}

/// `sum_{i=1}^{limit} i / 2^(i-1)`, the stage-weight series of a
/// pairwise adder tree.
fn stage_series(limit: u32) -> f64 {
    (1..=limit).map(|i| i as f64 / 2f64.powi(i as i32 - 1)).sum()
}

/// `sum_i (d/3) * width(i) / 2^(i-1)` termwise, so trees that share
/// per-stage widths produce bit-identical floats before rounding.
fn tree_sum(d: f64, stages: u32, width: impl Fn(u32) -> f64) -> f64 {
    (1..=stages)
        .map(|i| d / 3.0 * width(i) / 2f64.powi(i as i32 - 1))
        .sum()
}

/// `ceil(log2(x))` for positive real `x`, 0 when `x <= 1`.
fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        x.log2().ceil() as u32
    }
}

fn check_inputs(d_iv: usize) -> Result<f64, CostError> {
    if d_iv < 3 {
        return Err(CostError::TooFewInputs(d_iv));
    }
    Ok(d_iv as f64)
}

/// LUT-6 count of a `d_iv`-input exact popcount adder tree.
pub fn lut_tree_exact(d_iv: usize) -> Result<u64, CostError> {
    let d = check_inputs(d_iv)?;
    Ok(tree_sum(d, tree_stages(d_iv), |i| i as f64).round() as u64)
}

/// LUT-6 count of the local-majority datapath: `d/6` voting LUTs plus an
/// exact tree over the votes.
pub fn lut_maj(d_iv: usize) -> Result<u64, CostError> {
    let d = check_inputs(d_iv)?;
    Ok((d / 6.0 + (d / 18.0) * stage_series(ceil_log2(d / 6.0))).round() as u64)
}

/// LUT-6 count of the cascaded two-stage majority datapath.
pub fn lut_maj2(d_iv: usize) -> Result<u64, CostError> {
    let d = check_inputs(d_iv)?;
    Ok((d / 6.0 + d / 36.0 + (d / 108.0) * stage_series(ceil_log2(d / 36.0))).round() as u64)
}

/// LUT-6 count of the overfed datapath: five bits per first-stage LUT-6.
pub fn lut_overfeed(d_iv: usize) -> Result<u64, CostError> {
    let d = check_inputs(d_iv)?;
    Ok(((d / 5.0) * stage_series(ceil_log2(d))).round() as u64)
}

/// LUT-6 count of a tree whose stages `2..=k` are truncated to two-bit
/// adders (one LUT-6 each). `k = 1` truncates nothing and reproduces
/// [`lut_tree_exact`].
pub fn lut_trunc(d_iv: usize, k: u32) -> Result<u64, CostError> {
    let d = check_inputs(d_iv)?;
    let stages = tree_stages(d_iv);
    if k < 1 || k > stages {
        return Err(CostError::TruncDepth {
            k,
            stages,
            inputs: d_iv,
        });
    }
    let width = |i: u32| if i <= k { 1.0 } else { (i + 1 - k) as f64 };
    Ok(tree_sum(d, stages, width).round() as u64)
}

/// Per-dimension LUT count for any encoder at a given tree input count.
pub fn lut_count(kind: EncoderKind, inputs: usize) -> Result<u64, CostError> {
    match kind {
        EncoderKind::Exact => lut_tree_exact(inputs),
        EncoderKind::Maj => lut_maj(inputs),
        EncoderKind::Maj2 => lut_maj2(inputs),
        EncoderKind::Overfeed => lut_overfeed(inputs),
        EncoderKind::Trunc { k } => lut_trunc(inputs, k),
    }
}

/// Large-tree LUT saving of `kind` relative to the exact tree.
pub fn asymptotic_saving(kind: EncoderKind) -> f64 {
    match kind {
        EncoderKind::Exact => 0.0,
        EncoderKind::Maj => 1.0 - (7.0 / 18.0) / (4.0 / 3.0),
        EncoderKind::Maj2 => 1.0 - (25.0 / 108.0) / (4.0 / 3.0),
        EncoderKind::Overfeed => 1.0 - (4.0 / 5.0) / (4.0 / 3.0),
        EncoderKind::Trunc { k } => 1.0 - (2.0 + 4.0 / 2f64.powi(k as i32)) / 4.0,
    }
}

/// Device inventory the planner works against.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareConfig {
    pub total_brams: u64,
    /// Usable bits per BRAM; 32768 models a 512x64 block configuration.
    pub bram_capacity_bits: u64,
    /// Read data width per feature channel (d_mem).
    pub port_width_bits: u64,
    /// Independent read channels per BRAM group.
    pub ports_per_bram: u64,
    pub lut_budget: u64,
    pub clock_hz: f64,
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<(), CostError> {
        let positive = [
            ("total_brams", self.total_brams),
            ("bram_capacity_bits", self.bram_capacity_bits),
            ("port_width_bits", self.port_width_bits),
            ("ports_per_bram", self.ports_per_bram),
            ("lut_budget", self.lut_budget),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(CostError::InvalidHardwareConfig(format!(
                    "{name} must be positive"
                )));
            }
        }
        if self.clock_hz <= 0.0 || self.clock_hz.is_nan() {
            return Err(CostError::InvalidHardwareConfig(
                "clock_hz must be positive".into(),
            ));
        }
        if !self.bram_capacity_bits.is_multiple_of(self.port_width_bits) {
            return Err(CostError::InvalidHardwareConfig(format!(
                "port_width_bits {} must divide bram_capacity_bits {}",
                self.port_width_bits, self.bram_capacity_bits
            )));
        }
        Ok(())
    }

    /// Parse the plain-text `key = value` device description.
    ///
    /// Required keys: `total_brams`, `lut_budget`, `clock_hz`. Optional
    /// with defaults: `bram_capacity_bits` (32768), `port_width_bits`
    /// (64), `ports_per_bram` (2). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CostError> {
        let mut total_brams = None;
        let mut lut_budget = None;
        let mut clock_hz = None;
        let mut bram_capacity_bits = 32768u64;
        let mut port_width_bits = 64u64;
        let mut ports_per_bram = 2u64;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CostError::InvalidHardwareConfig(format!("line {}: expected key = value", n + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let parse_u64 = |v: &str| {
                v.parse::<u64>().map_err(|_| {
                    CostError::InvalidHardwareConfig(format!("line {}: bad integer {v:?}", n + 1))
                })
            };
            match key {
                "total_brams" => total_brams = Some(parse_u64(value)?),
                "lut_budget" => lut_budget = Some(parse_u64(value)?),
                "clock_hz" => {
                    clock_hz = Some(value.parse::<f64>().map_err(|_| {
                        CostError::InvalidHardwareConfig(format!(
                            "line {}: bad number {value:?}",
                            n + 1
                        ))
                    })?)
                }
                "bram_capacity_bits" => bram_capacity_bits = parse_u64(value)?,
                "port_width_bits" => port_width_bits = parse_u64(value)?,
                "ports_per_bram" => ports_per_bram = parse_u64(value)?,
                other => {
                    return Err(CostError::InvalidHardwareConfig(format!(
                        "line {}: unknown key {other:?}",
                        n + 1
                    )))
                }
            }
        }
        let missing = |name: &str| CostError::InvalidHardwareConfig(format!("missing {name}"));
        let cfg = Self {
            total_brams: total_brams.ok_or_else(|| missing("total_brams"))?,
            bram_capacity_bits,
            port_width_bits,
            ports_per_bram,
            lut_budget: lut_budget.ok_or_else(|| missing("lut_budget"))?,
            clock_hz: clock_hz.ok_or_else(|| missing("clock_hz"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// ID memory sizing for `f` features per cycle: consecutive rotations
/// overlap in all but one bit, so one read of `d_mem + f - 1` bits feeds
/// every channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdMemory {
    pub data_width_bits: u64,
    pub brams: u64,
}

pub fn id_memory(features_per_cycle: u64, d_mem: u64) -> IdMemory {
    IdMemory {
        data_width_bits: d_mem + features_per_cycle - 1,
        brams: 1 + features_per_cycle.div_ceil(d_mem),
    }
}

/// Resource and timing estimate for one encoder on one device.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub encoder: EncoderKind,
    /// LUT-6 count of one per-dimension adder tree (input size =
    /// `features_per_cycle`).
    pub lut_per_dimension_tree: u64,
    /// Trees run one per memory-port bit: `parallel_trees *
    /// lut_per_dimension_tree`.
    pub total_luts: u64,
    pub parallel_trees: u64,
    pub bram_group_size: u64,
    /// BRAM groups holding level tables, each serving `ports_per_bram`
    /// features per cycle.
    pub feature_groups: u64,
    pub level_brams: u64,
    pub features_per_cycle: u64,
    pub id_brams: u64,
    pub id_memory_width_bits: u64,
    pub cycles_per_sample: u64,
    pub throughput_samples_per_sec: f64,
    pub estimated_power_watts: Option<f64>,
}

/// Size BRAM groups, balance the per-cycle feature count, and price one
/// sample in cycles.
///
/// A group must span at least `ports_per_bram` blocks so that each of its
/// feature channels gets a full `port_width_bits`-wide read path; beyond
/// that it grows with the level-table footprint
/// `ceil(L * d_hv / bram_capacity)`. The seed-ID reservation is resolved
/// by a two-pass fixed point: size the feature capacity ignoring ID
/// blocks, reserve `1 + ceil(F / d_mem)` blocks, and resize. The final F
/// balances the passes (`F = ceil(d_iv / passes)` rounded up to a
/// multiple of the port count) so pass loads differ by at most one.
pub fn plan_architecture(
    d_iv: usize,
    d_hv: usize,
    level_count: usize,
    hw: &HardwareConfig,
    encoder: EncoderKind,
) -> Result<CostReport, CostError> {
    hw.validate()?;
    if d_iv == 0 || d_hv == 0 || level_count == 0 {
        return Err(CostError::InvalidHardwareConfig(
            "d_iv, d_hv, and level count must be positive".into(),
        ));
    }
    let level_bits = level_count as u64 * d_hv as u64;
    if level_bits > hw.total_brams * hw.bram_capacity_bits {
        return Err(CostError::InsufficientBrams(format!(
            "level table needs {level_bits} bits, device holds {}",
            hw.total_brams * hw.bram_capacity_bits
        )));
    }
    let ports = hw.ports_per_bram;
    let group_size = level_bits.div_ceil(hw.bram_capacity_bits).max(ports);
    let d_iv_u = d_iv as u64;
    let demand = d_iv_u.div_ceil(ports) * ports; // d_iv rounded up to full groups

    let f_unreserved = (hw.total_brams / group_size * ports).min(demand);
    if f_unreserved == 0 {
        return Err(CostError::InsufficientBrams(format!(
            "no room for a {group_size}-BRAM level group in {} blocks",
            hw.total_brams
        )));
    }
    let reserve = id_memory(f_unreserved, hw.port_width_bits).brams;
    let avail = hw.total_brams.checked_sub(reserve).ok_or_else(|| {
        CostError::InsufficientBrams(format!(
            "{reserve} ID blocks exceed the {} available",
            hw.total_brams
        ))
    })?;
    let f_max = (avail / group_size * ports).min(demand);
    if f_max == 0 {
        return Err(CostError::InsufficientBrams(
            "no level groups left after the ID reservation".into(),
        ));
    }

    let passes = d_iv_u.div_ceil(f_max);
    let features_per_cycle = d_iv_u.div_ceil(passes).div_ceil(ports) * ports;
    debug_assert!(features_per_cycle <= f_max);
    let id_mem = id_memory(features_per_cycle, hw.port_width_bits);
    let feature_groups = features_per_cycle.div_ceil(ports);
    let level_brams = feature_groups * group_size;
    debug_assert!(level_brams + id_mem.brams <= hw.total_brams);

    let cycles_per_sample =
        (d_hv as u64).div_ceil(hw.port_width_bits) * d_iv_u.div_ceil(features_per_cycle);
    let lut_per_dimension_tree = lut_count(encoder, features_per_cycle as usize)?;

    Ok(CostReport {
        encoder,
        lut_per_dimension_tree,
        total_luts: hw.port_width_bits * lut_per_dimension_tree,
        parallel_trees: hw.port_width_bits,
        bram_group_size: group_size,
        feature_groups,
        level_brams,
        features_per_cycle,
        id_brams: id_mem.brams,
        id_memory_width_bits: id_mem.data_width_bits,
        cycles_per_sample,
        throughput_samples_per_sec: hw.clock_hz / cycles_per_sample as f64,
        estimated_power_watts: None,
    })
}

/// Mean fraction of bit positions that differ between consecutive words
/// of a signal stream. One word gives 0.0; an empty stream is an error.
pub fn toggle_rate(words: &[Hypervector]) -> Result<f64, CostError> {
    if words.is_empty() {
        return Err(CostError::EmptyStream);
    }
    let mut tracker = ToggleTracker::new();
    for w in words {
        if w.dims() != words[0].dims() {
            return Err(CostError::WidthMismatch);
        }
        tracker.push(w.words());
    }
    tracker.rate()
}

/// Streaming toggle-rate accumulator over packed 64-bit word slices.
#[derive(Debug, Default)]
pub struct ToggleTracker {
    prev: Vec<u64>,
    started: bool,
    toggled: u64,
    observed: u64,
}

impl ToggleTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, words: &[u64]) {
        if self.started {
            debug_assert_eq!(words.len(), self.prev.len());
            self.toggled += words
                .iter()
                .zip(&self.prev)
                .map(|(a, b)| (a ^ b).count_ones() as u64)
                .sum::<u64>();
            self.observed += 64 * words.len() as u64;
            self.prev.copy_from_slice(words);
        } else {
            self.prev = words.to_vec();
            self.started = true;
        }
    }

    pub fn rate(&self) -> Result<f64, CostError> {
        if !self.started {
            return Err(CostError::EmptyStream);
        }
        if self.observed == 0 {
            return Ok(0.0);
        }
        Ok(self.toggled as f64 / self.observed as f64)
    }
}

/// Average signal activities seen by the datapath over a sample stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatapathActivity {
    /// Toggle rate of the adder-tree primary inputs (level XOR ID bits).
    pub adder_inputs: f64,
    /// Toggle rate of consecutive level-table BRAM reads.
    pub bram_reads: f64,
}

/// Replay the cycle schedule of an architecture over quantized samples
/// and measure both toggle rates.
///
/// Cycle order is sample by sample, then 64-bit dimension word, then
/// feature pass; each cycle observes `features_per_cycle` packed words
/// (zero-padded past `d_iv`), position-aligned across cycles so the
/// statistic matches what each physical port sees.
pub fn datapath_activity(
    quantized: &[Vec<usize>],
    levels: &LevelTable,
    ids: &IdTable,
    features_per_cycle: u64,
) -> Result<DatapathActivity, CostError> {
    if quantized.is_empty() {
        return Err(CostError::EmptyStream);
    }
    let d_iv = ids.feature_count();
    let f = features_per_cycle as usize;
    if f == 0 {
        return Err(CostError::InvalidHardwareConfig(
            "features_per_cycle must be positive".into(),
        ));
    }
    let words = levels.dims() / 64;
    let passes = d_iv.div_ceil(f);
    let mut adder = ToggleTracker::new();
    let mut bram = ToggleTracker::new();
    let mut adder_word = vec![0u64; f];
    let mut bram_word = vec![0u64; f];
    for bins in quantized {
        for r in 0..words {
            for p in 0..passes {
                for slot in 0..f {
                    let feature = p * f + slot;
                    if feature < d_iv {
                        let level_word = levels.level(bins[feature]).words()[r];
                        bram_word[slot] = level_word;
                        adder_word[slot] = level_word ^ ids.row(feature).words()[r];
                    } else {
                        bram_word[slot] = 0;
                        adder_word[slot] = 0;
                    }
                }
                adder.push(&adder_word);
                bram.push(&bram_word);
            }
        }
    }
    Ok(DatapathActivity {
        adder_inputs: adder.rate()?,
        bram_reads: bram.rate()?,
    })
}

/// Measured power table: per-tree logic watts on a (adder input size,
/// input activity) grid, per-BRAM watts over read toggle rate, and a
/// static floor. Queries interpolate linearly and refuse to extrapolate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCalibration {
    sizes: Vec<f64>,
    activities: Vec<f64>,
    /// Row-major `[size][activity]` watts.
    logic: Vec<f64>,
    bram: Vec<(f64, f64)>,
    static_watts: f64,
}

impl PowerCalibration {
    /// Parse the plain-text calibration table. Records:
    ///
    /// ```text
    /// logic <adder_inputs> <activity> <watts>
    /// bram <toggle_rate> <watts>
    /// static <watts>
    /// ```
    ///
    /// The logic records must form a complete grid, non-decreasing in
    /// both size and activity.
    pub fn parse(text: &str) -> Result<Self, CostError> {
        let bad = |n: usize, what: &str| {
            CostError::InvalidCalibration(format!("line {}: {what}", n + 1))
        };
        let mut logic_records: Vec<(f64, f64, f64)> = Vec::new();
        let mut bram: Vec<(f64, f64)> = Vec::new();
        let mut static_watts = 0.0f64;
        let mut saw_static = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let kind = fields.next().unwrap();
            let mut num = |what: &str| -> Result<f64, CostError> {
                fields
                    .next()
                    .ok_or_else(|| bad(n, &format!("missing {what}")))?
                    .parse::<f64>()
                    .map_err(|_| bad(n, &format!("bad {what}")))
            };
            match kind {
                "logic" => {
                    let size = num("adder size")?;
                    let act = num("activity")?;
                    let watts = num("watts")?;
                    logic_records.push((size, act, watts));
                }
                "bram" => {
                    let toggle = num("toggle rate")?;
                    let watts = num("watts")?;
                    bram.push((toggle, watts));
                }
                "static" => {
                    static_watts = num("watts")?;
                    saw_static = true;
                }
                other => return Err(bad(n, &format!("unknown record {other:?}"))),
            }
            if fields.next().is_some() {
                return Err(bad(n, "trailing fields"));
            }
        }
        if logic_records.is_empty() {
            return Err(CostError::InvalidCalibration(
                "no logic records".into(),
            ));
        }
        if !saw_static {
            return Err(CostError::InvalidCalibration("no static record".into()));
        }

        let mut sizes: Vec<f64> = logic_records.iter().map(|r| r.0).collect();
        sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sizes.dedup();
        let mut activities: Vec<f64> = logic_records.iter().map(|r| r.1).collect();
        activities.sort_by(|a, b| a.partial_cmp(b).unwrap());
        activities.dedup();
        let mut logic = vec![f64::NAN; sizes.len() * activities.len()];
        for (size, act, watts) in logic_records {
            let si = sizes.iter().position(|&s| s == size).unwrap();
            let ai = activities.iter().position(|&a| a == act).unwrap();
            logic[si * activities.len() + ai] = watts;
        }
        if logic.iter().any(|w| w.is_nan()) {
            return Err(CostError::InvalidCalibration(
                "logic records do not form a complete size x activity grid".into(),
            ));
        }
        let cal = Self {
            sizes,
            activities,
            logic,
            bram: {
                bram.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                bram
            },
            static_watts,
        };
        cal.check_monotone()?;
        Ok(cal)
    }

    fn check_monotone(&self) -> Result<(), CostError> {
        let na = self.activities.len();
        for si in 0..self.sizes.len() {
            for ai in 0..na {
                let w = self.logic[si * na + ai];
                if w < 0.0 {
                    return Err(CostError::InvalidCalibration("negative watts".into()));
                }
                if si > 0 && self.logic[(si - 1) * na + ai] > w {
                    return Err(CostError::InvalidCalibration(
                        "logic watts decrease with adder size".into(),
                    ));
                }
                if ai > 0 && self.logic[si * na + ai - 1] > w {
                    return Err(CostError::InvalidCalibration(
                        "logic watts decrease with activity".into(),
                    ));
                }
            }
        }
        if self.bram.windows(2).any(|w| w[0].1 > w[1].1) {
            return Err(CostError::InvalidCalibration(
                "bram watts decrease with toggle rate".into(),
            ));
        }
        if self.static_watts < 0.0 {
            return Err(CostError::InvalidCalibration("negative static watts".into()));
        }
        Ok(())
    }

    fn bracket(grid: &[f64], x: f64) -> Option<(usize, usize, f64)> {
        if grid.is_empty() || x < grid[0] || x > *grid.last().unwrap() {
            return None;
        }
        let hi = grid.partition_point(|&g| g < x).min(grid.len() - 1);
        let lo = if grid[hi] == x { hi } else { hi - 1 };
        let t = if grid[hi] == grid[lo] {
            0.0
        } else {
            (x - grid[lo]) / (grid[hi] - grid[lo])
        };
        Some((lo, hi, t))
    }

    /// Bilinear interpolation of per-tree logic watts.
    pub fn logic_watts(&self, adder_inputs: f64, activity: f64) -> Result<f64, CostError> {
        let out_of_range = || CostError::CalibrationOutOfRange {
            size: adder_inputs,
            activity,
        };
        let (s0, s1, ts) = Self::bracket(&self.sizes, adder_inputs).ok_or_else(out_of_range)?;
        let (a0, a1, ta) = Self::bracket(&self.activities, activity).ok_or_else(out_of_range)?;
        let na = self.activities.len();
        let at = |si: usize, ai: usize| self.logic[si * na + ai];
        let low = at(s0, a0) + ta * (at(s0, a1) - at(s0, a0));
        let high = at(s1, a0) + ta * (at(s1, a1) - at(s1, a0));
        Ok(low + ts * (high - low))
    }

    /// Linear interpolation of per-BRAM watts; an absent table reads as
    /// zero.
    pub fn bram_watts(&self, toggle: f64) -> Result<f64, CostError> {
        if self.bram.is_empty() {
            return Ok(0.0);
        }
        let grid: Vec<f64> = self.bram.iter().map(|r| r.0).collect();
        let (lo, hi, t) =
            Self::bracket(&grid, toggle).ok_or(CostError::CalibrationOutOfRange {
                size: f64::NAN,
                activity: toggle,
            })?;
        Ok(self.bram[lo].1 + t * (self.bram[hi].1 - self.bram[lo].1))
    }

    pub fn static_watts(&self) -> f64 {
        self.static_watts
    }
}

/// Total watts for a planned architecture under measured activities:
/// per-tree logic (linear in adder size at fixed activity) times the
/// tree count, plus the per-BRAM read term over all live blocks, plus
/// the static floor.
pub fn estimate_power(
    report: &CostReport,
    activity: &DatapathActivity,
    cal: &PowerCalibration,
) -> Result<f64, CostError> {
    let per_tree = cal.logic_watts(report.features_per_cycle as f64, activity.adder_inputs)?;
    let logic = per_tree * report.parallel_trees as f64;
    let brams = (report.level_brams + report.id_brams) as f64;
    let bram = cal.bram_watts(activity.bram_reads)? * brams;
    Ok(logic + bram + cal.static_watts())
}
