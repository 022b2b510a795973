//! Small dense classifier: dataset handling, full-batch training, and the
//! ideal floating-point reference the mapped pipeline is judged against.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the largest entry; ties go to the lowest index so hardware and
/// reference paths break them identically.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Labeled feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// `features[sample][feature]`.
    pub features: Vec<Vec<f64>>,
    /// Class index per sample.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map(Vec::len).unwrap_or(0)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::input("features", "dataset is empty"));
        }
        let width = self.n_features();
        if width == 0 {
            return Err(Error::input("features", "samples have no features"));
        }
        for (i, row) in self.features.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    what: format!("sample {i}"),
                    expected: width,
                    got: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::input("features", format!("sample {i} holds {v}")));
            }
        }
        if self.labels.len() != self.features.len() {
            return Err(Error::DimensionMismatch {
                what: "labels".into(),
                expected: self.features.len(),
                got: self.labels.len(),
            });
        }
        if self.class_names.is_empty() {
            return Err(Error::input("class_names", "need at least one class"));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.n_classes()) {
            return Err(Error::input(
                "labels",
                format!("label {l} out of range for {} classes", self.n_classes()),
            ));
        }
        Ok(())
    }

    /// Per-feature maximum over all samples — the normalization the
    /// converters need so every scaled feature fits their input range.
    pub fn feature_max(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut max = vec![f64::NEG_INFINITY; self.n_features()];
        for row in &self.features {
            for (m, &v) in max.iter_mut().zip(row) {
                *m = m.max(v);
            }
        }
        if let Some((i, &m)) = max.iter().enumerate().find(|(_, &m)| m <= 0.0) {
            return Err(Error::input(
                "features",
                format!("feature {i} has non-positive maximum {m}"),
            ));
        }
        Ok(max)
    }

    /// Samples per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Splits into train and test sets keeping each class's proportion,
    /// shuffling within classes with a seeded generator. Deterministic given
    /// `(train_frac, seed)`.
    pub fn stratified_split(&self, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        self.validate()?;
        if !(train_frac.is_finite() && train_frac > 0.0 && train_frac < 1.0) {
            return Err(Error::input(
                "train_frac",
                format!("must be inside (0, 1), got {train_frac}"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for class in 0..self.n_classes() {
            let mut idx: Vec<usize> = (0..self.n_samples())
                .filter(|&i| self.labels[i] == class)
                .collect();
            if idx.len() < 2 {
                return Err(Error::input(
                    "labels",
                    format!(
                        "class {class} has {} samples; need at least 2 to split",
                        idx.len()
                    ),
                ));
            }
            idx.shuffle(&mut rng);
            let n_train =
                ((train_frac * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
            train_idx.extend_from_slice(&idx[..n_train]);
            test_idx.extend_from_slice(&idx[n_train..]);
        }
        Ok((self.select(&train_idx), self.select(&test_idx)))
    }
}

/// Canonical class order for the three-species flower dataset.
pub const IRIS_CLASS_NAMES: [&str; 3] = ["setosa", "versicolor", "virginica"];

fn parse_iris_label(raw: &str) -> Result<usize> {
    let cleaned = raw.trim().to_ascii_lowercase();
    let cleaned = cleaned.strip_prefix("iris-").unwrap_or(&cleaned);
    let cleaned = cleaned.strip_prefix("iris_").unwrap_or(cleaned);
    if let Some(i) = IRIS_CLASS_NAMES.iter().position(|&n| n == cleaned) {
        return Ok(i);
    }
    if let Ok(i) = cleaned.parse::<usize>() {
        if i < IRIS_CLASS_NAMES.len() {
            return Ok(i);
        }
    }
    Err(Error::input(
        "species",
        format!("unrecognized class {raw:?}"),
    ))
}

/// Loads the 150-sample flower dataset from a CSV with a header row and
/// columns `sepal_length, sepal_width, petal_length, petal_width, species`.
/// Species accepts canonical names (optionally `Iris-` prefixed) or class
/// indices. The loader insists on exactly 150 rows balanced 50 per class —
/// anything else is a corrupt copy.
pub fn load_iris_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 5 {
            return Err(Error::DimensionMismatch {
                what: format!("csv row {}", row + 1),
                expected: 5,
                got: record.len(),
            });
        }
        let mut sample = Vec::with_capacity(4);
        for (col, field) in record.iter().take(4).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::input(
                    "features",
                    format!("row {}, column {col}: {field:?} is not a number", row + 1),
                )
            })?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(
                    "features",
                    format!("row {}, column {col}: {v} must be positive", row + 1),
                ));
            }
            sample.push(v);
        }
        features.push(sample);
        labels.push(parse_iris_label(&record[4])?);
    }
    let data = Dataset {
        features,
        labels,
        class_names: IRIS_CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    if data.n_samples() != 150 {
        return Err(Error::input(
            "dataset",
            format!("expected 150 rows, got {}", data.n_samples()),
        ));
    }
    let counts = data.class_counts();
    if counts != vec![50, 50, 50] {
        return Err(Error::input(
            "dataset",
            format!("expected 50 samples per class, got {counts:?}"),
        ));
    }
    data.validate()?;
    Ok(data)
}

/// Dense two-layer classifier with a ReLU hidden layer. Weights are stored
/// input-major (`w[input][output]`), matching array row/column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    /// First layer weights, `w1[feature][hidden_unit]`.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// Second layer weights, `w2[hidden_unit][class]`.
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    /// Per-feature normalization divisors (the dataset maxima), so scaled
    /// features land in the converter input range `[0, 1]`.
    pub feature_max: Vec<f64>,
    pub class_names: Vec<String>,
}

/// Everything one ideal forward pass produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealTrace {
    /// Normalized features, each in `[0, 1]` for in-range inputs.
    pub inputs_unit: Vec<f64>,
    /// Hidden activations after the ReLU.
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub prediction: usize,
}

/// Classification quality summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[true_class][predicted_class]`.
    pub confusion: Vec<Vec<usize>>,
}

impl AnnModel {
    /// (inputs, hidden units, classes).
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.len(), self.b1.len(), self.b2.len())
    }

    pub fn validate(&self) -> Result<()> {
        let (n_in, n_h, n_out) = self.dims();
        if n_in == 0 || n_h == 0 || n_out == 0 {
            return Err(Error::input("model", "every layer needs at least one unit"));
        }
        for (i, row) in self.w1.iter().enumerate() {
            if row.len() != n_h {
                return Err(Error::DimensionMismatch {
                    what: format!("w1 row {i}"),
                    expected: n_h,
                    got: row.len(),
                });
            }
        }
        if self.w2.len() != n_h {
            return Err(Error::DimensionMismatch {
                what: "w2 rows".into(),
                expected: n_h,
                got: self.w2.len(),
            });
        }
        for (i, row) in self.w2.iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::DimensionMismatch {
                    what: format!("w2 row {i}"),
                    expected: n_out,
                    got: row.len(),
                });
            }
        }
        if self.feature_max.len() != n_in {
            return Err(Error::DimensionMismatch {
                what: "feature_max".into(),
                expected: n_in,
                got: self.feature_max.len(),
            });
        }
        if let Some((i, &m)) = self
            .feature_max
            .iter()
            .enumerate()
            .find(|(_, &m)| !(m.is_finite() && m > 0.0))
        {
            return Err(Error::param("feature_max", format!("entry {i} is {m}")));
        }
        if self.class_names.len() != n_out {
            return Err(Error::DimensionMismatch {
                what: "class_names".into(),
                expected: n_out,
                got: self.class_names.len(),
            });
        }
        let all = self
            .w1
            .iter()
            .chain(self.w2.iter())
            .flatten()
            .chain(&self.b1)
            .chain(&self.b2);
        for v in all {
            if !v.is_finite() {
                return Err(Error::param("weights", format!("non-finite entry {v}")));
            }
        }
        Ok(())
    }

    /// Divides raw features by the stored per-feature maxima.
    pub fn scale_features(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.feature_max.len() {
            return Err(Error::DimensionMismatch {
                what: "features".into(),
                expected: self.feature_max.len(),
                got: raw.len(),
            });
        }
        Ok(raw
            .iter()
            .zip(&self.feature_max)
            .map(|(v, m)| v / m)
            .collect())
    }

    /// Ideal floating-point forward pass on raw (unscaled) features.
    pub fn forward(&self, raw: &[f64]) -> Result<IdealTrace> {
        self.validate()?;
        let u = self.scale_features(raw)?;
        let (_, n_h, n_out) = self.dims();
        let hidden: Vec<f64> = (0..n_h)
            .map(|j| {
                let mut pre = self.b1[j];
                for (i, &ui) in u.iter().enumerate() {
                    pre += ui * self.w1[i][j];
                }
                pre.max(0.0)
            })
            .collect();
        let logits: Vec<f64> = (0..n_out)
            .map(|k| {
                let mut pre = self.b2[k];
                for (j, &hj) in hidden.iter().enumerate() {
                    pre += hj * self.w2[j][k];
                }
                pre
            })
            .collect();
        let probs = softmax(&logits);
        let prediction = argmax(&logits);
        Ok(IdealTrace {
            inputs_unit: u,
            hidden,
            logits,
            probs,
            prediction,
        })
    }

    pub fn predict(&self, raw: &[f64]) -> Result<usize> {
        Ok(self.forward(raw)?.prediction)
    }

    /// Accuracy and confusion matrix of the ideal forward pass over a
    /// dataset.
    pub fn evaluate(&self, data: &Dataset) -> Result<EvalReport> {
        data.validate()?;
        let (_, _, n_out) = self.dims();
        if data.n_classes() != n_out {
            return Err(Error::DimensionMismatch {
                what: "classes".into(),
                expected: n_out,
                got: data.n_classes(),
            });
        }
        let mut confusion = vec![vec![0usize; n_out]; n_out];
        let mut correct = 0;
        for (row, &label) in data.features.iter().zip(&data.labels) {
            let pred = self.predict(row)?;
            confusion[label][pred] += 1;
            if pred == label {
                correct += 1;
            }
        }
        Ok(EvalReport {
            accuracy: correct as f64 / data.n_samples() as f64,
            correct,
            total: data.n_samples(),
            confusion,
        })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: AnnModel = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Full-batch gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Hidden layer width. Default: 3.
    pub hidden_units: usize,
    /// Step size. Default: 0.5.
    pub learning_rate: f64,
    /// Full-batch epochs. Default: 2000.
    pub epochs: usize,
    /// Initialization seed. Default: 42.
    pub seed: u64,
    /// Uniform init half-range. Default: 0.5.
    pub init_scale: f64,
    /// Normalization divisors to bake into the model. `None` derives them
    /// from the training data; pass the full dataset's maxima when held-out
    /// samples must also land inside the converter range.
    pub feature_max: Option<Vec<f64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_units: 3,
            learning_rate: 0.5,
            epochs: 2000,
            seed: 42,
            init_scale: 0.5,
            feature_max: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 {
            return Err(Error::param("hidden_units", "need at least one unit"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::param(
                "learning_rate",
                format!("must be positive, got {}", self.learning_rate),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "need at least one epoch"));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::param(
                "init_scale",
                format!("must be positive, got {}", self.init_scale),
            ));
        }
        Ok(())
    }
}

/// A trained model plus the final training loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: AnnModel,
    /// Mean cross-entropy over the training set after the last epoch.
    pub final_loss: f64,
}

/// Trains a ReLU-hidden softmax classifier with full-batch gradient descent.
/// Deterministic given the config.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    data.validate()?;
    cfg.validate()?;
    let n_in = data.n_features();
    let n_h = cfg.hidden_units;
    let n_out = data.n_classes();
    if n_out < 2 {
        return Err(Error::Training("need at least two classes".into()));
    }
    let feature_max = match &cfg.feature_max {
        Some(m) => {
            if m.len() != n_in {
                return Err(Error::DimensionMismatch {
                    what: "feature_max".into(),
                    expected: n_in,
                    got: m.len(),
                });
            }
            m.clone()
        }
        None => data.feature_max()?,
    };
    let xs: Vec<Vec<f64>> = data
        .features
        .iter()
        .map(|row| row.iter().zip(&feature_max).map(|(v, m)| v / m).collect())
        .collect();
    let n = xs.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| rng.random_range(-cfg.init_scale..cfg.init_scale))
                    .collect()
            })
            .collect()
    };
    let mut w1 = init(n_in, n_h);
    let mut w2 = init(n_h, n_out);
    let mut b1 = vec![0.0; n_h];
    let mut b2 = vec![0.0; n_out];

    let mut final_loss = f64::INFINITY;
    for _ in 0..cfg.epochs {
        let mut gw1 = vec![vec![0.0; n_h]; n_in];
        let mut gb1 = vec![0.0; n_h];
        let mut gw2 = vec![vec![0.0; n_out]; n_h];
        let mut gb2 = vec![0.0; n_out];
        let mut loss = 0.0;
        for (x, &label) in xs.iter().zip(&data.labels) {
            let mut hidden = vec![0.0; n_h];
            for j in 0..n_h {
                let mut pre = b1[j];
                for i in 0..n_in {
                    pre += x[i] * w1[i][j];
                }
                hidden[j] = pre.max(0.0);
            }
            let mut logits = vec![0.0; n_out];
            for k in 0..n_out {
                let mut pre = b2[k];
                for j in 0..n_h {
                    pre += hidden[j] * w2[j][k];
                }
                logits[k] = pre;
            }
            let probs = softmax(&logits);
            loss -= probs[label].max(1e-300).ln();

            // Backpropagation of the cross-entropy gradient.
            let mut dlogits = probs;
            dlogits[label] -= 1.0;
            for k in 0..n_out {
                dlogits[k] /= n;
                gb2[k] += dlogits[k];
                for j in 0..n_h {
                    gw2[j][k] += hidden[j] * dlogits[k];
                }
            }
            for j in 0..n_h {
                if hidden[j] <= 0.0 {
                    continue;
                }
                let mut dh = 0.0;
                for k in 0..n_out {
                    dh += dlogits[k] * w2[j][k];
                }
                gb1[j] += dh;
                for i in 0..n_in {
                    gw1[i][j] += x[i] * dh;
                }
            }
        }
        final_loss = loss / n;
        let lr = cfg.learning_rate;
        for i in 0..n_in {
            for j in 0..n_h {
                w1[i][j] -= lr * gw1[i][j];
            }
        }
        for j in 0..n_h {
            b1[j] -= lr * gb1[j];
            for k in 0..n_out {
                w2[j][k] -= lr * gw2[j][k];
            }
        }
        for k in 0..n_out {
            b2[k] -= lr * gb2[k];
        }
    }

    let model = AnnModel {
        w1,
        b1,
        w2,
        b2,
        feature_max,
        class_names: data.class_names.clone(),
    };
    model.validate()?;
    if !final_loss.is_finite() {
        return Err(Error::Training(format!(
            "diverged: final loss {final_loss}; lower the learning rate"
        )));
    }
    Ok(TrainOutcome { model, final_loss })
}

/// Held-out accuracy below this after training means the run never
/// converged (e.g. every hidden unit initialized dead); such a model is
/// rejected rather than silently shipped.
pub const TRAIN_ACCURACY_FLOOR: f64 = 0.8;

/// Fraction of each class that goes into the training split.
pub const DEFAULT_TRAIN_FRAC: f64 = 0.8;

/// A trained model bundled with everything needed to reproduce and audit
/// it: the split and initialization seeds, the hyperparameters, and the
/// accuracies recorded on the split it was trained against. This is the
/// on-disk weights-file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedWeights {
    pub model: AnnModel,
    /// Seed of the stratified train/test split.
    pub split_seed: u64,
    /// Fraction of each class used for training.
    pub train_frac: f64,
    /// Hyperparameters, including the initialization seed.
    pub train: TrainConfig,
    /// Accuracy on the recorded training split.
    pub train_accuracy: f64,
    /// Accuracy on the recorded held-out split.
    pub test_accuracy: f64,
    /// Mean cross-entropy over the training split after the last epoch.
    pub final_loss: f64,
}

impl TrainedWeights {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::param(
                "train_frac",
                format!("must lie in (0, 1), got {}", self.train_frac),
            ));
        }
        for (name, v) in [
            ("train_accuracy", self.train_accuracy),
            ("test_accuracy", self.test_accuracy),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !self.final_loss.is_finite() {
            return Err(Error::param(
                "final_loss",
                format!("must be finite, got {}", self.final_loss),
            ));
        }
        Ok(())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let weights: TrainedWeights = serde_json::from_str(&text)?;
        weights.validate()?;
        Ok(weights)
    }
}

/// The whole training pipeline in one call: stratified split, full-batch
/// training with the given initialization seed, and accuracy bookkeeping on
/// both splits. Feature normalization uses the *full* dataset's per-feature
/// maxima so held-out samples also land inside the converter range.
pub fn train_ann(data: &Dataset, split_seed: u64, train_seed: u64) -> Result<TrainedWeights> {
    train_ann_with(
        data,
        split_seed,
        DEFAULT_TRAIN_FRAC,
        &TrainConfig {
            seed: train_seed,
            ..TrainConfig::default()
        },
    )
}

/// [`train_ann`] with explicit split fraction and hyperparameters.
pub fn train_ann_with(
    data: &Dataset,
    split_seed: u64,
    train_frac: f64,
    cfg: &TrainConfig,
) -> Result<TrainedWeights> {
    let mut cfg = cfg.clone();
    if cfg.feature_max.is_none() {
        cfg.feature_max = Some(data.feature_max()?);
    }
    let (train_set, test_set) = data.stratified_split(train_frac, split_seed)?;
    let outcome = train(&train_set, &cfg)?;
    let train_accuracy = outcome.model.evaluate(&train_set)?.accuracy;
    let test_accuracy = outcome.model.evaluate(&test_set)?.accuracy;
    if test_accuracy < TRAIN_ACCURACY_FLOOR {
        return Err(Error::Training(format!(
            "did not converge: held-out accuracy {:.3} is below the {:.2} floor \
             (training accuracy {:.3}, final loss {:.4}); try another seed",
            test_accuracy, TRAIN_ACCURACY_FLOOR, train_accuracy, outcome.final_loss
        )));
    }
    Ok(TrainedWeights {
        model: outcome.model,
        split_seed,
        train_frac,
        train: cfg,
        train_accuracy,
        test_accuracy,
        final_loss: outcome.final_loss,
    })
}
