//! Class-prototype training and prediction.
//!
//! Training bundles the encoded samples of each class into an integer
//! prototype row, then runs mispredict-driven refinement epochs: when a
//! sample of class `l` is predicted as `l'`, the sample's encoding scaled
//! by the learning rate is added to row `l` and subtracted from row `l'`.
//! Prediction returns the class whose prototype has the highest cosine
//! similarity to the query encoding, breaking exact ties toward the
//! lowest class index.
//!
//! Samples are encoded once and the encodings reused across epochs; the
//! encoders are pure functions of the frozen tables, so this is exact.
//! The epoch loop itself is sequential because updates are
//! order-dependent. When no learning rate is given, [`train`] probes five
//! candidates by bisection on an 80/20 split of the training data and
//! keeps the one with the best validation accuracy (ties favor the
//! smaller rate).

use thiserror::Error;

use crate::dataset::{DataError, Dataset, Quantizer};
use crate::encoders::{encode, EncodeError, EncoderConfig, EncoderKind, EncodedVector};
use crate::hv::{
    cosine_similarity, stream_rng, HvError, IdTable, LevelTable, SeedStream,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("learning rate must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("training data has {0} classes; need at least 2")]
    TooFewClasses(usize),
    #[error("class {0:?} has no training samples")]
    EmptyClass(String),
    #[error("sample has {given} features, model expects {expected}")]
    FeatureCountMismatch { given: usize, expected: usize },
    #[error("label {0:?} does not appear in the model")]
    UnknownLabel(String),
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error(transparent)]
    Hv(#[from] HvError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A trained classifier: real-valued class prototypes plus everything
/// needed to encode a query exactly as at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub master_seed: u64,
    pub encoder: EncoderConfig,
    pub levels: LevelTable,
    pub ids: IdTable,
    pub quantizer: Quantizer,
    pub alpha: f64,
    /// Class labels in sorted order; class indices refer to this list.
    pub labels: Vec<String>,
    /// One prototype row per class, each of length `d_hv`.
    pub classes: Vec<Vec<f64>>,
}

impl Model {
    pub fn d_hv(&self) -> usize {
        self.levels.dims()
    }

    pub fn d_iv(&self) -> usize {
        self.ids.feature_count()
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Quantize and encode a raw feature vector with the model's frozen
    /// tables and encoder.
    pub fn encode_features(&self, sample: &[f64]) -> Result<EncodedVector, TrainError> {
        if sample.len() != self.d_iv() {
            return Err(TrainError::FeatureCountMismatch {
                given: sample.len(),
                expected: self.d_iv(),
            });
        }
        let bins = self.quantizer.quantize(sample)?;
        Ok(encode(&bins, &self.levels, &self.ids, &self.encoder)?)
    }

    /// Class index with the highest cosine similarity to `encoding`;
    /// exact ties go to the lowest index.
    pub fn predict_encoded(&self, encoding: &[f64]) -> Result<usize, TrainError> {
        predict(&self.classes, encoding)
    }

    /// Predict the label of a raw feature vector.
    pub fn predict(&self, sample: &[f64]) -> Result<&str, TrainError> {
        let enc = self.encode_features(sample)?;
        let k = self.predict_encoded(&enc.to_f64())?;
        Ok(&self.labels[k])
    }
}

/// One encoded training sample: the real-valued encoding plus its class
/// index.
#[derive(Debug, Clone)]
pub struct EncodedSample {
    pub encoding: Vec<f64>,
    pub class: usize,
}

/// Argmax of cosine similarity over class rows, ties toward the lowest
/// index.
pub fn predict(classes: &[Vec<f64>], encoding: &[f64]) -> Result<usize, TrainError> {
    let mut best = 0usize;
    let mut best_sim = f64::NEG_INFINITY;
    for (k, row) in classes.iter().enumerate() {
        let sim = cosine_similarity(encoding, row)?;
        if sim > best_sim {
            best = k;
            best_sim = sim;
        }
    }
    Ok(best)
}

/// Sum the encodings of each class into its initial prototype row.
pub fn bundle_initial(
    samples: &[EncodedSample],
    class_names: &[String],
    d_hv: usize,
) -> Result<Vec<Vec<f64>>, TrainError> {
    let mut classes = vec![vec![0.0f64; d_hv]; class_names.len()];
    let mut counts = vec![0usize; class_names.len()];
    for s in samples {
        counts[s.class] += 1;
        for (acc, v) in classes[s.class].iter_mut().zip(&s.encoding) {
            *acc += v;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(TrainError::EmptyClass(class_names[empty].clone()));
    }
    Ok(classes)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One refinement pass over `samples` in the given order, updating
/// `classes` (and cached row norms) in place. Returns the mispredict
/// count.
fn run_epoch(
    classes: &mut [Vec<f64>],
    class_norms: &mut [f64],
    alpha: f64,
    samples: &[EncodedSample],
    sample_norms: &[f64],
    order: &[usize],
) -> Result<usize, TrainError> {
    let mut errors = 0usize;
    for &i in order {
        let s = &samples[i];
        let qn = sample_norms[i];
        if qn == 0.0 {
            return Err(HvError::ZeroVector.into());
        }
        let mut best = 0usize;
        let mut best_sim = f64::NEG_INFINITY;
        for (k, row) in classes.iter().enumerate() {
            if class_norms[k] == 0.0 {
                return Err(HvError::ZeroVector.into());
            }
            let sim = dot(row, &s.encoding) / (class_norms[k] * qn);
            if sim > best_sim {
                best = k;
                best_sim = sim;
            }
        }
        if best != s.class {
            errors += 1;
            for (c, v) in classes[s.class].iter_mut().zip(&s.encoding) {
                *c += alpha * v;
            }
            for (c, v) in classes[best].iter_mut().zip(&s.encoding) {
                *c -= alpha * v;
            }
            class_norms[s.class] = norm(&classes[s.class]);
            class_norms[best] = norm(&classes[best]);
        }
    }
    Ok(errors)
}

/// One refinement epoch in dataset order, returning the updated model and
/// the mispredict count. The input model is untouched.
pub fn train_epoch(model: &Model, samples: &[EncodedSample]) -> Result<(Model, usize), TrainError> {
    let mut next = model.clone();
    let mut norms: Vec<f64> = next.classes.iter().map(|r| norm(r)).collect();
    let sample_norms: Vec<f64> = samples.iter().map(|s| norm(&s.encoding)).collect();
    let order: Vec<usize> = (0..samples.len()).collect();
    let errors = run_epoch(
        &mut next.classes,
        &mut norms,
        next.alpha,
        samples,
        &sample_norms,
        &order,
    )?;
    Ok((next, errors))
}

/// Training configuration. `alpha: None` triggers the bisection search.
#[derive(Debug, Clone)]
pub struct TrainParams {
    pub d_hv: usize,
    pub levels: usize,
    pub epochs: usize,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub encoder: EncoderKind,
    /// Reshuffle the sample order each epoch (seeded); off by default so
    /// runs are reproducible from the dataset order alone.
    pub shuffle: bool,
}

impl TrainParams {
    pub fn new(encoder: EncoderKind) -> Self {
        Self {
            d_hv: 2048,
            levels: 16,
            epochs: 20,
            alpha: None,
            seed: crate::DEFAULT_SEED,
            encoder,
            shuffle: false,
        }
    }
}

/// Everything [`train`] produces besides the model itself.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    /// Mispredict count per refinement epoch of the final run.
    pub epoch_errors: Vec<usize>,
    pub train_accuracy: f64,
    /// Best validation accuracy seen during the learning-rate search, if
    /// one ran.
    pub validation_accuracy: Option<f64>,
    /// `(alpha, validation accuracy)` for every probed learning rate.
    pub alpha_probes: Vec<(f64, f64)>,
}

const ALPHA_LO: f64 = 0.1;
const ALPHA_HI: f64 = 10.0;
/// Total learning-rate probes: both ends plus three bisection midpoints.
const ALPHA_PROBES: usize = 5;

/// Build tables from the seed, encode the dataset once, and train.
pub fn train(dataset: &Dataset, params: &TrainParams) -> Result<TrainOutcome, TrainError> {
    if params.epochs == 0 {
        return Err(TrainError::ZeroEpochs);
    }
    if let Some(a) = params.alpha {
        if a <= 0.0 || a.is_nan() {
            return Err(TrainError::NonPositiveAlpha(a));
        }
    }
    let labels = dataset.class_names();
    if labels.len() < 2 {
        return Err(TrainError::TooFewClasses(labels.len()));
    }

    let quantizer = Quantizer::fit(dataset.features(), params.levels)?;
    let levels = LevelTable::generate(
        params.d_hv,
        params.levels,
        &mut stream_rng(params.seed, SeedStream::Levels),
    )?;
    let ids = IdTable::generate(
        params.d_hv,
        dataset.feature_count(),
        &mut stream_rng(params.seed, SeedStream::Ids),
    )?;
    let encoder = EncoderConfig::build(params.encoder, params.d_hv, params.seed)?;

    // Encode every sample once; epochs reuse the cached encodings.
    let mut samples = Vec::with_capacity(dataset.len());
    for (row, label) in dataset.features().iter().zip(dataset.labels()) {
        let bins = quantizer.quantize(row)?;
        let enc = encode(&bins, &levels, &ids, &encoder)?;
        let class = labels.iter().position(|l| l == label).expect("own label");
        samples.push(EncodedSample {
            encoding: enc.to_f64(),
            class,
        });
    }
    let sample_norms: Vec<f64> = samples.iter().map(|s| norm(&s.encoding)).collect();

    let mut shuffle_rng = params
        .shuffle
        .then(|| stream_rng(params.seed, SeedStream::Shuffle));
    let mut run = |indices: &[usize], alpha: f64| -> Result<(Vec<Vec<f64>>, Vec<usize>), TrainError> {
        let mut classes = vec![vec![0.0f64; params.d_hv]; labels.len()];
        let mut counts = vec![0usize; labels.len()];
        for &i in indices {
            counts[samples[i].class] += 1;
            for (acc, v) in classes[samples[i].class].iter_mut().zip(&samples[i].encoding) {
                *acc += v;
            }
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(TrainError::EmptyClass(labels[empty].clone()));
        }
        let mut class_norms: Vec<f64> = classes.iter().map(|r| norm(r)).collect();
        let mut errors = Vec::with_capacity(params.epochs);
        let mut order = indices.to_vec();
        for _ in 0..params.epochs {
            if let Some(rng) = shuffle_rng.as_mut() {
                use rand::seq::SliceRandom;
                order.shuffle(rng);
            }
            errors.push(run_epoch(
                &mut classes,
                &mut class_norms,
                alpha,
                &samples,
                &sample_norms,
                &order,
            )?);
        }
        Ok((classes, errors))
    };

    let all: Vec<usize> = (0..samples.len()).collect();
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let alpha = match params.alpha {
        Some(a) => a,
        None => {
            // 80/20 split: every fifth sample validates.
            let val: Vec<usize> = all.iter().copied().filter(|i| i % 5 == 4).collect();
            let fit: Vec<usize> = all.iter().copied().filter(|i| i % 5 != 4).collect();
            let mut eval_alpha = |a: f64, probes: &mut Vec<(f64, f64)>| -> Result<f64, TrainError> {
                let (classes, _) = run(&fit, a)?;
                let mut hits = 0usize;
                for &i in &val {
                    if predict(&classes, &samples[i].encoding)? == samples[i].class {
                        hits += 1;
                    }
                }
                let acc = hits as f64 / val.len().max(1) as f64;
                probes.push((a, acc));
                Ok(acc)
            };
            let (mut lo, mut hi) = (ALPHA_LO, ALPHA_HI);
            let mut acc_lo = eval_alpha(lo, &mut probes)?;
            let mut acc_hi = eval_alpha(hi, &mut probes)?;
            for _ in 0..ALPHA_PROBES - 2 {
                let mid = 0.5 * (lo + hi);
                let acc_mid = eval_alpha(mid, &mut probes)?;
                if acc_lo >= acc_hi {
                    hi = mid;
                    acc_hi = acc_mid;
                } else {
                    lo = mid;
                    acc_lo = acc_mid;
                }
            }
            let mut best = probes[0];
            for &(a, acc) in &probes[1..] {
                if acc > best.1 || (acc == best.1 && a < best.0) {
                    best = (a, acc);
                }
            }
            best.0
        }
    };

    let (classes, epoch_errors) = run(&all, alpha)?;

    let mut hits = 0usize;
    for s in &samples {
        if predict(&classes, &s.encoding)? == s.class {
            hits += 1;
        }
    }
    let train_accuracy = hits as f64 / samples.len() as f64;
    let validation_accuracy = (!probes.is_empty()).then(|| {
        probes
            .iter()
            .map(|&(_, acc)| acc)
            .fold(f64::NEG_INFINITY, f64::max)
    });

    Ok(TrainOutcome {
        model: Model {
            master_seed: params.seed,
            encoder,
            levels,
            ids,
            quantizer,
            alpha,
            labels,
            classes,
        },
        epoch_errors,
        train_accuracy,
        validation_accuracy,
        alpha_probes: probes,
    })
}

/// Accuracy and per-class confusion counts on a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]`, indices into the model's
    /// label list.
    pub confusion: Vec<Vec<usize>>,
}

/// Evaluate a model on a labeled dataset, encoding queries with the
/// model's own (training-time) encoder.
pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<EvalReport, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyEvalSet);
    }
    if dataset.feature_count() != model.d_iv() {
        return Err(TrainError::FeatureCountMismatch {
            given: dataset.feature_count(),
            expected: model.d_iv(),
        });
    }
    let n_classes = model.class_count();
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut correct = 0usize;
    for (row, label) in dataset.features().iter().zip(dataset.labels()) {
        let truth = model
            .class_index(label)
            .ok_or_else(|| TrainError::UnknownLabel(label.clone()))?;
        let enc = model.encode_features(row)?;
        let pred = model.predict_encoded(&enc.to_f64())?;
        confusion[truth][pred] += 1;
        correct += (pred == truth) as usize;
    }
    Ok(EvalReport {
        total: dataset.len(),
        correct,
        accuracy: correct as f64 / dataset.len() as f64,
        confusion,
    })
}
