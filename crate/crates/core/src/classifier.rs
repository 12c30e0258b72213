//! Small deterministic MLP classifier with logit-adjusted training.
//!
//! One hidden layer of width 64 with `max(0, ·)`; the hidden activation is
//! the feature map. Training is plain mini-batch gradient descent with step
//! decay (×0.1 at 80% and 90% of the epochs) on the cross-entropy of the
//! adjusted logits `ℓ_c + τ·log π_c`. Everything is seeded: initialization
//! and per-epoch shuffling use dedicated sub-streams, so identical configs
//! give bit-identical parameters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::{logsumexp, norm2, softmax};
use crate::rng::rng_for;

/// Hidden width of the feature map.
pub const HIDDEN_DIM: usize = 64;

const TAG_INIT: u64 = 0x10;
const TAG_SHUFFLE: u64 = 0x11;

const CHECKPOINT_VERSION: &str = "clf-v1";

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs at which the learning rate is multiplied by 0.1; empty means
    /// the default schedule at 80% and 90% of `epochs`.
    #[serde(default)]
    pub lr_decay_epochs: Vec<usize>,
    /// Logit-adjustment strength τ; 0 recovers plain cross-entropy.
    pub tau: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            batch_size: 64,
            learning_rate: 0.05,
            lr_decay_epochs: Vec::new(),
            tau: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::invalid("tau must be non-negative"));
        }
        Ok(())
    }

    fn decay_epochs(&self) -> Vec<usize> {
        if self.lr_decay_epochs.is_empty() {
            vec![self.epochs * 8 / 10, self.epochs * 9 / 10]
        } else {
            self.lr_decay_epochs.clone()
        }
    }
}

/// Feature map φ plus linear head; immutable once trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    w1: Vec<f64>, // dim × hidden
    b1: Vec<f64>, // hidden
    w2: Vec<f64>, // hidden × classes
    b2: Vec<f64>, // classes
    priors: Vec<f64>,
    dim: usize,
    hidden: usize,
    classes: usize,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Classifier {
    /// Seeded initialization, uniform in ±1/√fan_in per layer.
    pub fn init(dim: usize, hidden: usize, classes: usize, priors: Vec<f64>, seed: u64) -> Result<Self> {
        if priors.len() != classes {
            return Err(Error::invalid("priors length must equal class count"));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invariant(format!("priors sum to {total}")));
        }
        let mut rng = rng_for(seed, &[TAG_INIT]);
        let bound1 = 1.0 / (dim as f64).sqrt();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize, bound: f64, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        Ok(Self {
            w1: draw(dim * hidden, bound1, &mut rng),
            b1: draw(hidden, bound1, &mut rng),
            w2: draw(hidden * classes, bound2, &mut rng),
            b2: draw(classes, bound2, &mut rng),
            priors,
            dim,
            hidden,
            classes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Feature map φ(x): hidden activations after max(0, ·).
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = self.b1.clone();
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            for (hj, &w) in h.iter_mut().zip(row) {
                *hj += xi * w;
            }
        }
        for hj in &mut h {
            *hj = hj.max(0.0);
        }
        Ok(h)
    }

    /// z̃(x) = φ(x)/‖φ(x)‖₂.
    pub fn normalized_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = self.features(x)?;
        let norm = norm2(&h);
        if norm < 1e-12 {
            return Err(Error::ZeroFeatureVector { norm });
        }
        for v in &mut h {
            *v /= norm;
        }
        Ok(h)
    }

    fn logits_from_features(&self, h: &[f64]) -> Vec<f64> {
        let mut l = self.b2.clone();
        for (j, &hj) in h.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let row = &self.w2[j * self.classes..(j + 1) * self.classes];
            for (lc, &w) in l.iter_mut().zip(row) {
                *lc += hj * w;
            }
        }
        l
    }

    /// Raw logits ℓ(x).
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.logits_from_features(&self.features(x)?))
    }

    /// softmax(ℓ(x)).
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Predicted class: argmax logit, ties to the lower index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Conf(x, y_t) = ℓ_{y_t}(x).
    pub fn confidence(&self, x: &[f64], target: usize) -> Result<f64> {
        let logits = self.logits(x)?;
        if target >= self.classes {
            return Err(Error::IndexOutOfRange {
                what: "target class",
                index: target,
                size: self.classes,
            });
        }
        Ok(logits[target])
    }

    /// Cred(x, y_d) = p_(1)(x) − p_{y_d}(x).
    pub fn credibility(&self, x: &[f64], disturb: usize) -> Result<f64> {
        let probs = self.probabilities(x)?;
        if disturb >= self.classes {
            return Err(Error::IndexOutOfRange {
                what: "disturbing class",
                index: disturb,
                size: self.classes,
            });
        }
        let top = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(top - probs[disturb])
    }

    /// The k highest-logit classes, excluding `exclude` when given, ordered
    /// by descending logit with ties to the lower class index.
    pub fn topk_confusable(&self, x: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
        if k == 0 || k > self.classes.saturating_sub(1) {
            return Err(Error::invalid(format!(
                "k must be in 1..={}, got {k}",
                self.classes - 1
            )));
        }
        let logits = self.logits(x)?;
        let mut order: Vec<usize> = (0..self.classes)
            .filter(|&c| Some(c) != exclude)
            .collect();
        order.sort_by(|&a, &b| {
            logits[b]
                .partial_cmp(&logits[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order.truncate(k);
        Ok(order)
    }

    /// Mean logit-adjusted cross-entropy over the given rows.
    pub fn mean_loss(&self, dataset: &LabeledDataset, tau: f64) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..dataset.len() {
            total += self.sample_loss(dataset.row(i), dataset.label(i), tau)?;
        }
        Ok(total / dataset.len() as f64)
    }

    fn adjusted_logits(&self, x: &[f64], tau: f64) -> Result<Vec<f64>> {
        let mut l = self.logits(x)?;
        if tau != 0.0 {
            for (lc, &p) in l.iter_mut().zip(&self.priors) {
                *lc += tau * p.ln();
            }
        }
        Ok(l)
    }

    fn sample_loss(&self, x: &[f64], y: usize, tau: f64) -> Result<f64> {
        let a = self.adjusted_logits(x, tau)?;
        Ok(logsumexp(&a) - a[y])
    }

    /// Mean loss and parameter gradients over a batch of row indices.
    pub fn loss_and_gradients(
        &self,
        dataset: &LabeledDataset,
        indices: &[usize],
        tau: f64,
    ) -> Result<(f64, Gradients)> {
        let mut grads = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        };
        let scale = 1.0 / indices.len() as f64;
        let mut total_loss = 0.0;

        for &i in indices {
            let x = dataset.row(i);
            let y = dataset.label(i);
            let h = self.features(x)?;
            let mut a = self.logits_from_features(&h);
            if tau != 0.0 {
                for (ac, &p) in a.iter_mut().zip(&self.priors) {
                    *ac += tau * p.ln();
                }
            }
            let lse = logsumexp(&a);
            total_loss += (lse - a[y]) * scale;

            // dL/da = softmax(a) − onehot(y)
            let mut da: Vec<f64> = a.iter().map(|&ac| (ac - lse).exp()).collect();
            da[y] -= 1.0;

            for (c, &d) in da.iter().enumerate() {
                grads.b2[c] += d * scale;
            }
            let mut dh = vec![0.0; self.hidden];
            for (j, &hj) in h.iter().enumerate() {
                let row = &self.w2[j * self.classes..(j + 1) * self.classes];
                if hj > 0.0 {
                    let mut acc = 0.0;
                    for (c, &d) in da.iter().enumerate() {
                        grads.w2[j * self.classes + c] += hj * d * scale;
                        acc += row[c] * d;
                    }
                    dh[j] = acc;
                }
            }
            for (j, &dj) in dh.iter().enumerate() {
                if dj == 0.0 {
                    continue;
                }
                grads.b1[j] += dj * scale;
                for (i_in, &xi) in x.iter().enumerate() {
                    grads.w1[i_in * self.hidden + j] += xi * dj * scale;
                }
            }
        }
        Ok((total_loss, grads))
    }

    fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.w1.iter_mut().zip(&grads.w1) {
            *w -= lr * g;
        }
        for (b, g) in self.b1.iter_mut().zip(&grads.b1) {
            *b -= lr * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&grads.w2) {
            *w -= lr * g;
        }
        for (b, g) in self.b2.iter_mut().zip(&grads.b2) {
            *b -= lr * g;
        }
    }

    /// Write the checkpoint as JSON with shape-tagged weight arrays.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION.to_string(),
            dim: self.dim,
            hidden: self.hidden,
            classes: self.classes,
            w1: TaggedArray::new(vec![self.dim, self.hidden], self.w1.clone()),
            b1: TaggedArray::new(vec![self.hidden], self.b1.clone()),
            w2: TaggedArray::new(vec![self.hidden, self.classes], self.w2.clone()),
            b2: TaggedArray::new(vec![self.classes], self.b2.clone()),
            priors: TaggedArray::new(vec![self.classes], self.priors.clone()),
        };
        let out = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(out);
        serde_json::to_writer(&mut writer, &file)
            .map_err(|e| Error::invariant(format!("checkpoint serialization failed: {e}")))?;
        writer.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let ckpt: CheckpointFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::invariant(format!(
                "unsupported checkpoint version {:?}",
                ckpt.version
            )));
        }
        ckpt.w1.expect_shape(&[ckpt.dim, ckpt.hidden])?;
        ckpt.b1.expect_shape(&[ckpt.hidden])?;
        ckpt.w2.expect_shape(&[ckpt.hidden, ckpt.classes])?;
        ckpt.b2.expect_shape(&[ckpt.classes])?;
        ckpt.priors.expect_shape(&[ckpt.classes])?;
        let all_finite = ckpt
            .w1
            .data
            .iter()
            .chain(&ckpt.b1.data)
            .chain(&ckpt.w2.data)
            .chain(&ckpt.b2.data)
            .chain(&ckpt.priors.data)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invariant("non-finite checkpoint parameter".into()));
        }
        Ok(Self {
            w1: ckpt.w1.data,
            b1: ckpt.b1.data,
            w2: ckpt.w2.data,
            b2: ckpt.b2.data,
            priors: ckpt.priors.data,
            dim: ckpt.dim,
            hidden: ckpt.hidden,
            classes: ckpt.classes,
        })
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct TaggedArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TaggedArray {
    fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self { shape, data }
    }

    fn expect_shape(&self, shape: &[usize]) -> Result<()> {
        let len: usize = shape.iter().product();
        if self.shape != shape || self.data.len() != len {
            return Err(Error::invariant(format!(
                "checkpoint array has shape {:?} with {} values, expected {:?}",
                self.shape,
                self.data.len(),
                shape
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: String,
    dim: usize,
    hidden: usize,
    classes: usize,
    w1: TaggedArray,
    b1: TaggedArray,
    w2: TaggedArray,
    b2: TaggedArray,
    priors: TaggedArray,
}

/// Train a classifier; deterministic given the config seed.
pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<Classifier> {
    cfg.validate()?;
    let mut clf = Classifier::init(
        dataset.dim(),
        HIDDEN_DIM,
        dataset.num_classes(),
        dataset.priors(),
        crate::rng::derive_seed(cfg.seed, &[TAG_INIT]),
    )?;
    let decay = cfg.decay_epochs();
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..cfg.epochs {
        let drops = decay.iter().filter(|&&e| e <= epoch).count() as i32;
        let lr = cfg.learning_rate * 0.1f64.powi(drops);
        let mut rng = rng_for(cfg.seed, &[TAG_SHUFFLE, epoch as u64]);
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            let (loss, grads) = clf.loss_and_gradients(dataset, batch, cfg.tau)?;
            if !loss.is_finite() {
                return Err(Error::NumericDivergence { epoch });
            }
            clf.apply_gradients(&grads, lr);
        }
    }
    Ok(clf)
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(clf: &Classifier, dataset: &LabeledDataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..dataset.len() {
        if clf.predict(dataset.row(i))? == dataset.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Per-class accuracy vector.
pub fn per_class_accuracy(clf: &Classifier, dataset: &LabeledDataset) -> Result<Vec<f64>> {
    let mut correct = vec![0usize; dataset.num_classes()];
    for i in 0..dataset.len() {
        if clf.predict(dataset.row(i))? == dataset.label(i) {
            correct[dataset.label(i)] += 1;
        }
    }
    Ok(correct
        .iter()
        .zip(dataset.class_counts())
        .map(|(&c, &n)| c as f64 / n as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_longtail_mixture;

    fn tiny_clf(classes: usize) -> Classifier {
        let priors = vec![1.0 / classes as f64; classes];
        Classifier::init(2, 4, classes, priors, 99).unwrap()
    }

    #[test]
    fn zero_weights_yield_bias_logits() {
        let mut clf = tiny_clf(3);
        clf.w1.iter_mut().for_each(|w| *w = 0.0);
        clf.b1.iter_mut().for_each(|b| *b = 0.0);
        clf.w2.iter_mut().for_each(|w| *w = 0.0);
        clf.b2 = vec![0.5, -1.0, 2.0];
        assert_eq!(clf.logits(&[1.0, 2.0]).unwrap(), vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn probabilities_are_softmax_of_logits() {
        let clf = tiny_clf(3);
        let x = [0.3, -0.7];
        let l = clf.logits(&x).unwrap();
        let p = clf.probabilities(&x).unwrap();
        let reference = softmax(&l);
        for (a, b) in p.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(argmax(&l), argmax(&p));
    }

    #[test]
    fn normalized_features_three_four_five() {
        let mut clf = tiny_clf(2);
        // Force φ(x) = (3, 4, 0, 0).
        clf.w1.iter_mut().for_each(|w| *w = 0.0);
        clf.b1 = vec![3.0, 4.0, 0.0, 0.0];
        let z = clf.normalized_features(&[0.0, 0.0]).unwrap();
        assert!((z[0] - 0.6).abs() < 1e-15);
        assert!((z[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_feature_vector_is_an_error() {
        let mut clf = tiny_clf(2);
        clf.w1.iter_mut().for_each(|w| *w = 0.0);
        clf.b1 = vec![-1.0; 4]; // relu clamps to zero
        assert!(matches!(
            clf.normalized_features(&[0.0, 0.0]),
            Err(Error::ZeroFeatureVector { .. })
        ));
    }

    #[test]
    fn normalized_features_have_unit_norm() {
        let clf = tiny_clf(3);
        let mut rng = rng_for(5, &[0]);
        for _ in 0..100 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            match clf.normalized_features(&x) {
                Ok(z) => assert!((norm2(&z) - 1.0).abs() < 1e-9),
                Err(Error::ZeroFeatureVector { .. }) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn confidence_and_credibility_hand_values() {
        let mut clf = tiny_clf(3);
        clf.w1.iter_mut().for_each(|w| *w = 0.0);
        clf.b1.iter_mut().for_each(|b| *b = 0.0);
        clf.w2.iter_mut().for_each(|w| *w = 0.0);
        // p = (0.5, 0.3, 0.2) corresponds to logits ln p up to a shift.
        clf.b2 = vec![0.5f64.ln(), 0.3f64.ln(), 0.2f64.ln()];
        let x = [0.0, 0.0];
        let cred = clf.credibility(&x, 1).unwrap();
        assert!((cred - 0.2).abs() < 1e-12);
        // y_d = argmax class gives zero credibility.
        assert!(clf.credibility(&x, 0).unwrap().abs() < 1e-15);

        let mut two = tiny_clf(2);
        two.w1.iter_mut().for_each(|w| *w = 0.0);
        two.b1.iter_mut().for_each(|b| *b = 0.0);
        two.w2.iter_mut().for_each(|w| *w = 0.0);
        two.b2 = vec![1.0, -2.0];
        assert_eq!(two.confidence(&[0.0, 0.0], 0).unwrap(), 1.0);
        assert!(two.confidence(&[0.0, 0.0], 5).is_err());
    }

    #[test]
    fn topk_confusable_orders_and_excludes() {
        let mut clf = tiny_clf(4);
        clf.w1.iter_mut().for_each(|w| *w = 0.0);
        clf.b1.iter_mut().for_each(|b| *b = 0.0);
        clf.w2.iter_mut().for_each(|w| *w = 0.0);
        clf.b2 = vec![5.0, 1.0, 3.0, 2.0];
        let x = [0.0, 0.0];
        assert_eq!(clf.topk_confusable(&x, 2, Some(0)).unwrap(), vec![2, 3]);
        assert_eq!(clf.topk_confusable(&x, 3, Some(0)).unwrap(), vec![2, 3, 1]);
        assert!(clf.topk_confusable(&x, 0, Some(0)).is_err());
        assert!(clf.topk_confusable(&x, 4, Some(0)).is_err());

        let mut tie = tiny_clf(3);
        tie.w1.iter_mut().for_each(|w| *w = 0.0);
        tie.b1.iter_mut().for_each(|b| *b = 0.0);
        tie.w2.iter_mut().for_each(|w| *w = 0.0);
        tie.b2 = vec![0.0, 2.0, 2.0];
        assert_eq!(tie.topk_confusable(&[0.0, 0.0], 1, Some(0)).unwrap(), vec![1]);
    }

    #[test]
    fn argmax_invariant_under_constant_logit_shift() {
        let clf = tiny_clf(3);
        let x = [0.4, 0.9];
        let l = clf.logits(&x).unwrap();
        let shifted: Vec<f64> = l.iter().map(|v| v + 100.0).collect();
        assert_eq!(argmax(&l), argmax(&shifted));
    }

    #[test]
    fn rejects_zero_epochs() {
        let (ds, _) = make_longtail_mixture(3, 2, 30, 1.0, 2.0, 0.5, 1).unwrap();
        let mut cfg = TrainConfig::new(1, 0);
        cfg.epochs = 0;
        assert!(matches!(train(&ds, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn training_is_bit_deterministic() {
        let (ds, _) = make_longtail_mixture(3, 2, 40, 2.0, 2.0, 0.5, 2).unwrap();
        let cfg = TrainConfig::new(5, 3);
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tau_is_inert_on_balanced_data() {
        // Equal priors make the adjustment a constant shift of all logits:
        // losses match and trained predictions are identical.
        let (ds, _) = make_longtail_mixture(3, 2, 60, 1.0, 2.5, 0.5, 4).unwrap();
        let mut cfg = TrainConfig::new(8, 5);
        cfg.tau = 0.0;
        let plain = train(&ds, &cfg).unwrap();
        cfg.tau = 1.0;
        let adjusted = train(&ds, &cfg).unwrap();
        let l_plain = plain.mean_loss(&ds, 0.0).unwrap();
        let l_adj = plain.mean_loss(&ds, 1.0).unwrap();
        assert!((l_plain - l_adj).abs() < 1e-12, "{l_plain} vs {l_adj}");
        for i in 0..ds.len() {
            assert_eq!(
                plain.predict(ds.row(i)).unwrap(),
                adjusted.predict(ds.row(i)).unwrap()
            );
        }
    }

    #[test]
    fn separable_data_trains_to_high_accuracy() {
        let (ds, _) = make_longtail_mixture(2, 2, 200, 1.0, 8.0, 0.5, 6).unwrap();
        let clf = train(&ds, &TrainConfig::new(30, 7)).unwrap();
        assert!(accuracy(&clf, &ds).unwrap() >= 0.99);
        let initial = Classifier::init(
            ds.dim(),
            HIDDEN_DIM,
            ds.num_classes(),
            ds.priors(),
            crate::rng::derive_seed(7, &[TAG_INIT]),
        )
        .unwrap();
        let before = initial.mean_loss(&ds, 1.0).unwrap();
        let after = clf.mean_loss(&ds, 1.0).unwrap();
        assert!(after.is_finite() && after < before);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (ds, _) = make_longtail_mixture(3, 2, 30, 2.0, 2.0, 0.7, 8).unwrap();
        let clf = train(&ds, &TrainConfig::new(2, 9)).unwrap();
        let indices: Vec<usize> = (0..ds.len()).collect();
        let tau = 1.0;
        let (_, grads) = clf.loss_and_gradients(&ds, &indices, tau).unwrap();

        let mut rng = rng_for(10, &[1]);
        let h = 1e-6;
        for _ in 0..10 {
            // Pick a random coordinate across all four parameter blocks.
            let block = rng.gen_range(0..4usize);
            let (len, analytic): (usize, &[f64]) = match block {
                0 => (clf.w1.len(), &grads.w1),
                1 => (clf.b1.len(), &grads.b1),
                2 => (clf.w2.len(), &grads.w2),
                _ => (clf.b2.len(), &grads.b2),
            };
            let idx = rng.gen_range(0..len);
            let mut plus = clf.clone();
            let mut minus = clf.clone();
            match block {
                0 => {
                    plus.w1[idx] += h;
                    minus.w1[idx] -= h;
                }
                1 => {
                    plus.b1[idx] += h;
                    minus.b1[idx] -= h;
                }
                2 => {
                    plus.w2[idx] += h;
                    minus.w2[idx] -= h;
                }
                _ => {
                    plus.b2[idx] += h;
                    minus.b2[idx] -= h;
                }
            }
            let lp = plus.mean_loss(&ds, tau).unwrap();
            let lm = minus.mean_loss(&ds, tau).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let a = analytic[idx];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((a - numeric) / denom).abs() < 1e-4,
                "block {block} idx {idx}: analytic {a}, numeric {numeric}"
            );
        }
    }

    #[test]
    fn checkpoint_round_trips() {
        let (ds, _) = make_longtail_mixture(3, 2, 40, 3.0, 2.0, 0.5, 12).unwrap();
        let clf = train(&ds, &TrainConfig::new(3, 13)).unwrap();
        let dir = std::env::temp_dir().join("blab-clf-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("clf.json");
        clf.save(&path).unwrap();
        let loaded = Classifier::load(&path).unwrap();
        assert_eq!(clf, loaded);
    }
}
