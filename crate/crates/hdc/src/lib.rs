//! Hyperdimensional (HD) classification with software models of
//! approximate FPGA encoding hardware.
//!
//! The crate has three layers:
//!
//! - [`hv`] holds the binary hypervector primitives: random generation,
//!   level-codeword tables, rotated position IDs, XOR binding, and cosine
//!   similarity.
//! - [`encoders`] turns a quantized feature vector into an integer
//!   encoding vector under five bundling datapaths — an exact popcount
//!   adder-tree and four approximations (local majority, two-stage
//!   majority, input overfeeding, truncated adders). Each one reproduces
//!   the corresponding hardware bit-for-bit, so a model trained here
//!   behaves identically to the accelerator at inference time.
//! - [`trainer`] builds class prototypes from encoded samples and refines
//!   them with a mispredict-driven update rule; [`cost`] prices a chosen
//!   encoder on a given FPGA (LUT counts, BRAM grouping, cycles per
//!   sample, activity-based power); [`dataset`] and [`persist`] handle
//!   CSV ingestion, quantization, synthetic data, and the binary model
//!   file format.
//!
//! All randomness derives from a single master seed (see
//! [`hv::stream_rng`]), so any (seed, parameters, data) triple produces a
//! bit-identical model.

pub mod cost;
pub mod dataset;
pub mod encoders;
pub mod hv;
pub mod persist;
pub mod trainer;

pub use encoders::{EncoderConfig, EncoderKind, EncodedVector};
pub use hv::{Hypervector, IdTable, LevelTable};
pub use trainer::Model;

/// Seed used by the CLI when none is given.
pub const DEFAULT_SEED: u64 = 1;
