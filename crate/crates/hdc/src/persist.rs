//! Binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "HDCMODEL"
//! 8       4     format version (currently 1)
//! 12      8     payload length in bytes
//! 20      n     payload (field order below)
//! 20+n    32    SHA-256 over everything before it
//! ```
//!
//! Payload field order: master seed (u64), d_hv (u32), d_iv (u32), level
//! count (u32), alpha (f64), encoder tag (u8: 0 exact, 1 maj, 2 maj2,
//! 3 overfeed, 4 trunc), truncation depth (u32, 0 unless trunc), stage-1
//! tie bits (u8 flag + packed words), stage-2 tie bits (same), level
//! codewords (count x packed words), seed ID (packed words), quantizer
//! edges (per feature: u32 count + f64 edges), labels (u32 count, then
//! u32 length + UTF-8 bytes each), class rows (count x d_hv f64).
//! Packed words are d_hv/64 u64 values, least-significant bit first.
//!
//! Loading rebuilds the ID rotation table from the seed ID and
//! re-validates the level-table distance invariants, so a file either
//! round-trips exactly or is rejected.

use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::Quantizer;
use crate::encoders::{EncoderConfig, EncoderKind};
use crate::hv::{Hypervector, IdTable, LevelTable};
use crate::trainer::Model;

const MAGIC: &[u8; 8] = b"HDCMODEL";
const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        source: std::io::Error,
    },
    #[error("unsupported model file version {found}, expected {VERSION}")]
    VersionMismatch { found: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
}

fn corrupt(what: impl Into<String>) -> PersistError {
    PersistError::CorruptFile(what.into())
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn words(&mut self, hv: &Hypervector) {
        for w in hv.words() {
            self.u64(*w);
        }
    }

    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        if self.pos + n > self.bytes.len() {
            return Err(corrupt("truncated payload"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn hypervector(&mut self, d_hv: usize) -> Result<Hypervector, PersistError> {
        let words = (0..d_hv / 64)
            .map(|_| self.u64())
            .collect::<Result<Vec<_>, _>>()?;
        Hypervector::from_words(words).map_err(|e| corrupt(e.to_string()))
    }

    fn string(&mut self) -> Result<String, PersistError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| corrupt("label is not UTF-8"))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn encoder_tag(kind: EncoderKind) -> (u8, u32) {
    match kind {
        EncoderKind::Exact => (0, 0),
        EncoderKind::Maj => (1, 0),
        EncoderKind::Maj2 => (2, 0),
        EncoderKind::Overfeed => (3, 0),
        EncoderKind::Trunc { k } => (4, k),
    }
}

fn encoder_from_tag(tag: u8, k: u32) -> Result<EncoderKind, PersistError> {
    Ok(match tag {
        0 => EncoderKind::Exact,
        1 => EncoderKind::Maj,
        2 => EncoderKind::Maj2,
        3 => EncoderKind::Overfeed,
        4 => EncoderKind::Trunc { k },
        other => return Err(corrupt(format!("unknown encoder tag {other}"))),
    })
}

/// Serialize a model to its on-disk byte representation.
pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let d_hv = model.d_hv();
    let mut payload = Writer::new();
    payload.u64(model.master_seed);
    payload.u32(d_hv as u32);
    payload.u32(model.d_iv() as u32);
    payload.u32(model.levels.count() as u32);
    payload.f64(model.alpha);
    let (tag, k) = encoder_tag(model.encoder.kind);
    payload.u8(tag);
    payload.u32(k);
    for tie in [&model.encoder.tie_bits_stage1, &model.encoder.tie_bits_stage2] {
        match tie {
            Some(hv) => {
                payload.u8(1);
                payload.words(hv);
            }
            None => payload.u8(0),
        }
    }
    for level in model.levels.levels() {
        payload.words(level);
    }
    payload.words(model.ids.seed_id());
    for edges in model.quantizer.edges() {
        payload.u32(edges.len() as u32);
        for &e in edges {
            payload.f64(e);
        }
    }
    payload.u32(model.labels.len() as u32);
    for label in &model.labels {
        payload.string(label);
    }
    for row in &model.classes {
        for &v in row {
            payload.f64(v);
        }
    }

    let mut out = Writer::new();
    out.buf.extend_from_slice(MAGIC);
    out.u32(VERSION);
    out.u64(payload.buf.len() as u64);
    out.buf.extend_from_slice(&payload.buf);
    let digest = Sha256::digest(&out.buf);
    out.buf.extend_from_slice(&digest);
    out.buf
}

/// Deserialize and re-validate a model.
pub fn model_from_bytes(bytes: &[u8]) -> Result<Model, PersistError> {
    if bytes.len() < MAGIC.len() + 4 + 8 + CHECKSUM_LEN {
        return Err(corrupt("file too short"));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(PersistError::VersionMismatch { found: version });
    }
    let payload_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected_total = 20 + payload_len + CHECKSUM_LEN;
    if bytes.len() != expected_total {
        return Err(corrupt(format!(
            "length {} does not match header ({expected_total})",
            bytes.len()
        )));
    }
    let (body, checksum) = bytes.split_at(20 + payload_len);
    let digest = Sha256::digest(body);
    if digest.as_slice() != checksum {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Reader::new(&body[20..]);
    let master_seed = r.u64()?;
    let d_hv = r.u32()? as usize;
    if d_hv == 0 || !d_hv.is_multiple_of(64) {
        return Err(corrupt(format!("bad dimension {d_hv}")));
    }
    let d_iv = r.u32()? as usize;
    let level_count = r.u32()? as usize;
    let alpha = r.f64()?;
    let tag = r.u8()?;
    let k = r.u32()?;
    let kind = encoder_from_tag(tag, k)?;
    let mut ties = [None, None];
    for slot in &mut ties {
        if r.u8()? == 1 {
            *slot = Some(r.hypervector(d_hv)?);
        }
    }
    let [tie_bits_stage1, tie_bits_stage2] = ties;
    let levels = (0..level_count)
        .map(|_| r.hypervector(d_hv))
        .collect::<Result<Vec<_>, _>>()?;
    let levels = LevelTable::from_levels(levels).map_err(|e| corrupt(e.to_string()))?;
    let seed_id = r.hypervector(d_hv)?;
    let ids = IdTable::from_seed(seed_id, d_iv).map_err(|e| corrupt(e.to_string()))?;
    let mut edges = Vec::with_capacity(d_iv);
    for _ in 0..d_iv {
        let count = r.u32()? as usize;
        let e = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        edges.push(e);
    }
    let quantizer =
        Quantizer::from_edges(edges, level_count).map_err(|e| corrupt(e.to_string()))?;
    let label_count = r.u32()? as usize;
    let labels = (0..label_count)
        .map(|_| r.string())
        .collect::<Result<Vec<_>, _>>()?;
    let classes = (0..label_count)
        .map(|_| (0..d_hv).map(|_| r.f64()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    if !r.done() {
        return Err(corrupt("trailing bytes in payload"));
    }

    let matches_kind = match kind {
        EncoderKind::Maj => tie_bits_stage1.is_some() && tie_bits_stage2.is_none(),
        EncoderKind::Maj2 => tie_bits_stage1.is_some() && tie_bits_stage2.is_some(),
        _ => tie_bits_stage1.is_none() && tie_bits_stage2.is_none(),
    };
    if !matches_kind {
        return Err(corrupt("tie-bit vectors do not match the encoder"));
    }

    Ok(Model {
        master_seed,
        encoder: EncoderConfig {
            kind,
            tie_bits_stage1,
            tie_bits_stage2,
        },
        levels,
        ids,
        quantizer,
        alpha,
        labels,
        classes,
    })
}

/// Write the model atomically: a temp file in the same directory is
/// renamed over the target only after a complete write, so a crash never
/// leaves a partial model behind.
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let path = path.as_ref();
    let bytes = model_to_bytes(model);
    let tmp = path.with_extension("tmp");
    let io_err = |action: &'static str, source| PersistError::Io {
        action,
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(&tmp).map_err(|e| io_err("create", e))?;
    file.write_all(&bytes).map_err(|e| io_err("write", e))?;
    file.sync_all().map_err(|e| io_err("sync", e))?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(|e| io_err("rename", e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, PersistError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PersistError::Io {
        action: "read",
        path: path.display().to_string(),
        source,
    })?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_synthetic;
    use crate::hv::{stream_rng, SeedStream};
    use crate::trainer::{train, TrainParams};

    fn sized_model(kind: EncoderKind, seed: u64, d_hv: usize) -> Model {
        let mut rng = stream_rng(seed, SeedStream::Synthetic);
        let data = gen_synthetic(3, 12, 13, 4.0, &mut rng).unwrap();
        let params = TrainParams {
            d_hv,
            levels: 4,
            epochs: 2,
            alpha: Some(0.5),
            seed,
            encoder: kind,
            shuffle: false,
        };
        train(&data, &params).unwrap().model
    }

    fn small_model(kind: EncoderKind, seed: u64) -> Model {
        sized_model(kind, seed, 128)
    }

    #[test]
    fn round_trip_preserves_every_field() {
        for kind in [
            EncoderKind::Exact,
            EncoderKind::Maj,
            EncoderKind::Maj2,
            EncoderKind::Overfeed,
            EncoderKind::Trunc { k: 3 },
        ] {
            let model = small_model(kind, 11);
            let bytes = model_to_bytes(&model);
            let back = model_from_bytes(&bytes).unwrap();
            assert_eq!(model, back, "{kind}");
        }
    }

    #[test]
    fn save_and_load_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = small_model(EncoderKind::Maj, 5);
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
        // No temp file is left behind.
        assert!(!path.with_extension("tmp").exists());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let model = small_model(EncoderKind::Exact, 2);
        let bytes = model_to_bytes(&model);
        let cut = &bytes[..bytes.len() - 7];
        assert!(matches!(
            model_from_bytes(cut),
            Err(PersistError::CorruptFile(_))
        ));
    }

    #[test]
    fn flipped_byte_fails_the_checksum() {
        let model = small_model(EncoderKind::Exact, 3);
        let mut bytes = model_to_bytes(&model);
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        match model_from_bytes(&bytes) {
            Err(PersistError::CorruptFile(msg)) => {
                assert!(msg.contains("checksum") || msg.contains("length"), "{msg}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bumped_version_is_rejected() {
        let model = small_model(EncoderKind::Exact, 4);
        let mut bytes = model_to_bytes(&model);
        bytes[8] = 9; // version field
                      // Recompute the checksum so only the version differs.
        let body_len = bytes.len() - CHECKSUM_LEN;
        let digest = Sha256::digest(&bytes[..body_len]);
        bytes[body_len..].copy_from_slice(&digest);
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(PersistError::VersionMismatch { found: 9 })
        ));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        assert!(matches!(
            model_from_bytes(b"NOTMODEL________________________________________"),
            Err(PersistError::CorruptFile(_))
        ));
    }

    #[test]
    fn serialization_is_byte_deterministic() {
        let a = model_to_bytes(&small_model(EncoderKind::Maj2, 8));
        let b = model_to_bytes(&small_model(EncoderKind::Maj2, 8));
        assert_eq!(a, b);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn randomized_models_round_trip(
            seed in proptest::prelude::any::<u64>(),
            kind_idx in 0usize..5,
            words in 1usize..4,
        ) {
            let kind = [
                EncoderKind::Exact,
                EncoderKind::Maj,
                EncoderKind::Maj2,
                EncoderKind::Overfeed,
                EncoderKind::Trunc { k: 2 },
            ][kind_idx];
            let model = sized_model(kind, seed, 64 * words);
            let back = model_from_bytes(&model_to_bytes(&model)).unwrap();
            proptest::prop_assert_eq!(model, back);
        }
    }
}
