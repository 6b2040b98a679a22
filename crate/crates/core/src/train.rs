//! Adam, classifier training and evaluation metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::model::{argmax, cross_entropy, EncodedSample, ModelSpec, TrainableParams};
use crate::{QsError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// Adam with bias-corrected moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self { config, step: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    /// One update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.step_masked(params, grads, None)
    }

    /// Like [`Adam::step`], but parameters with `mask[i] == false` are left
    /// untouched along with their moments.
    pub fn step_masked(&mut self, params: &mut [f64], grads: &[f64], mask: Option<&[bool]>) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(QsError::contract(format!(
                "adam state has {} entries, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(QsError::Numerical { index: i, message: format!("gradient is {}", grads[i]) });
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..params.len() {
            if mask.is_some_and(|m| !m[i]) {
                continue;
            }
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Classifier training settings. Loader settings live on the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Share of each class held out for validation. With 0, or when a class is
    /// too small to split, validation uses the training samples.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, batch_size: 16, lr: 0.01, seed: 0, val_fraction: 0.2 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(QsError::contract("epochs and batch_size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(QsError::contract(format!("val_fraction {} outside [0, 1)", self.val_fraction)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(QsError::contract(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    /// Lowest validation loss seen up to and including this epoch.
    pub best_val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub class_counts: Vec<usize>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub loss_history: Vec<f64>,
}

impl Metrics {
    /// Builds metrics from `(true, predicted)` pairs. Classes without samples
    /// get a per-class accuracy of 0 and do not affect the overall accuracy.
    pub fn from_predictions(n_classes: usize, pairs: &[(usize, usize)], loss_history: Vec<f64>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(QsError::contract("no predictions to score"));
        }
        let mut confusion = vec![vec![0usize; n_classes]; n_classes];
        for &(t, p) in pairs {
            if t >= n_classes || p >= n_classes {
                return Err(QsError::contract(format!("label pair ({t}, {p}) outside {n_classes} classes")));
            }
            confusion[t][p] += 1;
        }
        let class_counts: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
        let per_class_accuracy = (0..n_classes)
            .map(|c| if class_counts[c] == 0 { 0.0 } else { confusion[c][c] as f64 / class_counts[c] as f64 })
            .collect();
        let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
        Ok(Self {
            accuracy: correct as f64 / pairs.len() as f64,
            per_class_accuracy,
            class_counts,
            confusion,
            loss_history,
        })
    }
}

/// Outcome of [`fit`]: the parameters with the lowest validation loss.
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub params: TrainableParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Validation metrics of `params`; `loss_history` holds per-epoch training loss.
    pub metrics: Metrics,
    pub n_train: usize,
    pub n_val: usize,
}

/// Encodes every sample. Loader training for AAE/BAE happens here, once.
pub fn encode_dataset(model: &ModelSpec, dataset: &Dataset) -> Result<Vec<EncodedSample>> {
    dataset.validate()?;
    par_map(&dataset.samples, |img| {
        Ok(EncodedSample { input: model.encode(img)?, label: img.label, source_id: img.source_id.clone() })
    })
    .into_iter()
    .collect()
}

/// Encodes `dataset` then trains the classifier on it.
pub fn fit(model: &ModelSpec, dataset: &Dataset, config: &TrainConfig) -> Result<FitReport> {
    if dataset.is_empty() {
        return Err(QsError::contract("cannot train on an empty dataset"));
    }
    let encoded = encode_dataset(model, dataset)?;
    fit_encoded(model, &encoded, config, None)
}

/// Stratified, seeded train/validation index split.
fn validation_split(samples: &[EncodedSample], n_classes: usize, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label == c).collect();
        idx.shuffle(rng);
        let k = ((idx.len() as f64) * fraction).round() as usize;
        let k = if idx.len() < 2 { 0 } else { k.min(idx.len() - 1) };
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn mean_loss_and_pairs(model: &ModelSpec, params: &TrainableParams, samples: &[&EncodedSample]) -> Result<(f64, Vec<(usize, usize)>)> {
    let results = par_map(samples, |s| -> Result<(f64, usize)> {
        let probs = model.forward(&s.input, params)?;
        Ok((cross_entropy(&probs, s.label)?, argmax(&probs)))
    });
    let mut loss = 0.0;
    let mut pairs = Vec::with_capacity(samples.len());
    for (s, r) in samples.iter().zip(results) {
        let (l, pred) = r?;
        loss += l;
        pairs.push((s.label, pred));
    }
    Ok((loss / samples.len() as f64, pairs))
}

/// Trains the processing angles and readout on pre-encoded samples. Loader
/// parameters inside `samples` are never modified. `init` overrides the
/// seeded initial parameters.
pub fn fit_encoded(
    model: &ModelSpec,
    samples: &[EncodedSample],
    config: &TrainConfig,
    init: Option<TrainableParams>,
) -> Result<FitReport> {
    config.validate()?;
    if samples.is_empty() {
        return Err(QsError::contract("cannot train on an empty dataset"));
    }
    if let Some(s) = samples.iter().find(|s| s.label >= model.n_classes()) {
        return Err(QsError::contract(format!("sample {} has label {} but the model has {} classes", s.source_id, s.label, model.n_classes())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = match init {
        Some(p) => {
            p.check(model)?;
            p
        }
        None => TrainableParams::init(model, config.seed),
    };
    let (mut train_idx, val_idx) = validation_split(samples, model.n_classes(), config.val_fraction, &mut rng);
    let val_idx = if val_idx.is_empty() { train_idx.clone() } else { val_idx };
    let val: Vec<&EncodedSample> = val_idx.iter().map(|&i| &samples[i]).collect();

    let mut adam = Adam::new(params.len(), AdamConfig::with_lr(config.lr));
    let mut flat = params.flatten();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, TrainableParams)> = None;

    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let results = par_map(batch, |&i| model.loss_and_gradients(&samples[i].input, samples[i].label, &params));
            let mut grad = vec![0.0; flat.len()];
            for r in results {
                let (loss, g) = r?;
                epoch_loss += loss;
                for (acc, x) in grad.iter_mut().zip(g.flatten()) {
                    *acc += x;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut flat, &grad)?;
            params = TrainableParams::from_flat(model, &flat)?;
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let (val_loss, pairs) = mean_loss_and_pairs(model, &params, &val)?;
        let val_acc = pairs.iter().filter(|(t, p)| t == p).count() as f64 / pairs.len() as f64;
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, params.clone()));
        }
        let best_val_loss = best.as_ref().map(|b| b.0).unwrap_or(val_loss);
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} acc {val_acc:.3}");
        history.push(EpochRecord { epoch, train_loss, val_loss, val_acc, best_val_loss });
    }

    let (best_val_loss, best_epoch, params) = best.expect("at least one epoch ran");
    let (_, pairs) = mean_loss_and_pairs(model, &params, &val)?;
    let metrics = Metrics::from_predictions(model.n_classes(), &pairs, history.iter().map(|h| h.train_loss).collect())?;
    Ok(FitReport { params, history, best_epoch, best_val_loss, metrics, n_train: train_idx.len(), n_val: val_idx.len() })
}

/// Exact-expectation evaluation of an image dataset. Encodes (and therefore
/// trains loaders for) every image.
pub fn evaluate(model: &ModelSpec, params: &TrainableParams, dataset: &Dataset) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(QsError::contract("cannot evaluate an empty dataset"));
    }
    let encoded = encode_dataset(model, dataset)?;
    evaluate_encoded(model, params, &encoded)
}

/// Evaluation on pre-encoded samples; `loss_history` holds the mean loss.
pub fn evaluate_encoded(model: &ModelSpec, params: &TrainableParams, samples: &[EncodedSample]) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(QsError::contract("cannot evaluate an empty dataset"));
    }
    if let Some(s) = samples.iter().find(|s| s.label >= model.n_classes()) {
        return Err(QsError::contract(format!("sample {} has label {} but the model has {} classes", s.source_id, s.label, model.n_classes())));
    }
    let refs: Vec<&EncodedSample> = samples.iter().collect();
    let (loss, pairs) = mean_loss_and_pairs(model, params, &refs)?;
    Metrics::from_predictions(model.n_classes(), &pairs, vec![loss])
}

/// Writes `epoch,train_loss,val_loss,val_acc` rows.
pub fn write_history_csv<W: std::io::Write>(out: W, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "val_loss", "val_acc"]).map_err(csv_err)?;
    for h in history {
        w.write_record([h.epoch.to_string(), format!("{:?}", h.train_loss), format!("{:?}", h.val_loss), format!("{:?}", h.val_acc)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> QsError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => QsError::Io(io),
        other => QsError::Corrupt(format!("csv: {other:?}")),
    }
}


#[cfg(test)]
mod fit_tests {
    use super::*;
    use crate::data::{make_synthetic, SyntheticKind};
    use crate::model::ProcessingConfig;

    fn tiny() -> (ModelSpec, Dataset) {
        let ds = make_synthetic(SyntheticKind::BrightVsDark, 6, (2, 2), 0.05, 4).unwrap();
        let m = ModelSpec::pae(2, (2, 2), ProcessingConfig { layers: 2, ..Default::default() }, 2).unwrap();
        (m, ds)
    }

    #[test]
    fn same_seed_same_history() {
        let (m, ds) = tiny();
        let cfg = TrainConfig { epochs: 3, batch_size: 4, lr: 0.05, seed: 9, val_fraction: 0.25 };
        let a = fit(&m, &ds, &cfg).unwrap();
        let b = fit(&m, &ds, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn best_val_loss_never_increases() {
        let (m, ds) = tiny();
        let cfg = TrainConfig { epochs: 8, batch_size: 3, lr: 0.2, seed: 1, val_fraction: 0.3 };
        let r = fit(&m, &ds, &cfg).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].best_val_loss <= w[0].best_val_loss));
        assert_eq!(r.best_val_loss, r.history[r.best_epoch - 1].val_loss);
    }

    #[test]
    fn single_sample_is_memorised() {
        let (m, ds) = tiny();
        let one = Dataset::new(vec![ds.samples[0].clone()], ds.class_names.clone(), ds.split_tag).unwrap();
        let cfg = TrainConfig { epochs: 150, batch_size: 16, lr: 0.1, seed: 0, val_fraction: 0.0 };
        let r = fit(&m, &one, &cfg).unwrap();
        assert!(r.best_val_loss < 0.02, "loss {}", r.best_val_loss);
        assert!(r.history.last().unwrap().train_loss < r.history[0].train_loss);
    }

    #[test]
    fn empty_inputs_rejected() {
        let (m, ds) = tiny();
        let empty = Dataset::new(Vec::new(), ds.class_names.clone(), ds.split_tag).unwrap();
        assert!(matches!(fit(&m, &empty, &TrainConfig::default()), Err(QsError::Contract(_))));
        let p = TrainableParams::zeros(&m);
        assert!(matches!(evaluate(&m, &p, &empty), Err(QsError::Contract(_))));
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn metrics_decomposition() {
        // 50 of class 0 all right, 50 of class 1 with 43 right.
        let mut pairs: Vec<(usize, usize)> = (0..50).map(|_| (0, 0)).collect();
        pairs.extend((0..43).map(|_| (1, 1)));
        pairs.extend((0..7).map(|_| (1, 0)));
        let m = Metrics::from_predictions(2, &pairs, vec![]).unwrap();
        assert_eq!(m.per_class_accuracy, vec![1.0, 0.86]);
        assert_eq!(m.accuracy, 0.93);
        assert_eq!(m.confusion, vec![vec![50, 0], vec![7, 43]]);
        let weighted: f64 = m.per_class_accuracy.iter().zip(&m.class_counts).map(|(a, &c)| a * c as f64).sum::<f64>() / 100.0;
        assert_eq!(weighted, m.accuracy);
        assert!(Metrics::from_predictions(2, &[(2, 0)], vec![]).is_err());
    }

    #[test]
    fn all_correct_is_one() {
        let m = Metrics::from_predictions(3, &[(0, 0), (1, 1), (2, 2)], vec![]).unwrap();
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn history_csv_layout() {
        let h = [EpochRecord { epoch: 1, train_loss: 0.5, val_loss: 0.25, val_acc: 1.0, best_val_loss: 0.25 }];
        let mut buf = Vec::new();
        write_history_csv(&mut buf, &h).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,train_loss,val_loss,val_acc\n1,0.5,0.25,1.0\n");
    }
}
