//! Frozen-embedding activity classifiers: one small MLP per domain trained
//! with class-weighted binary cross-entropy on top of fixed embeddings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{read_container, write_container, CheckpointError};
use crate::metrics::{auc_roc, best_f1_threshold, classification_metrics, ClassificationReport,
    MetricsError};
use crate::nn::{init_mlp, AdamWState, Linear, Matrix, Mlp, NnError};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("positive-class weight undefined: no active labels")]
    UndefinedPosWeight,
    #[error("invalid classifier config: {0}")]
    Config(String),
    #[error("embeddings and labels disagree: {0}")]
    LengthMismatch(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Binary activity head: three weight layers ending in one logit, with the
/// decision threshold fixed after training on validation F1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub mlp: Mlp,
    pub threshold: f64,
}

impl ClassifierModel {
    /// Halving-pyramid geometry: embed_dim -> 128 -> 64 -> 1.
    pub fn init(embed_dim: usize, seed: u64) -> Self {
        ClassifierModel {
            mlp: init_mlp(&[embed_dim, 128, 64, 1], 0.0, seed),
            threshold: 0.5,
        }
    }

    /// Sigmoid activity scores for a batch of embeddings.
    pub fn scores(&self, embeddings: &Matrix) -> Result<Vec<f64>, ClassifierError> {
        let mut rng = SplitMix64::new(0);
        let (logits, _) = self.mlp.forward(embeddings, false, &mut rng)?;
        Ok(logits.data().iter().map(|&z| sigmoid(z)).collect())
    }
}

/// Classifier training hyperparameters. The positive-class weight is always
/// computed from the data, never configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Stop after this many epochs without a validation-AUC improvement.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 50,
            batch_size: 128,
            lr: 1e-3,
            weight_decay: 0.01,
            patience: 10,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ClassifierError::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.lr > 0.0) {
            return Err(ClassifierError::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// Ratio of inactive to active labels.
pub fn pos_weight(labels: &[bool]) -> Result<f64, ClassifierError> {
    let active = labels.iter().filter(|&&l| l).count();
    if active == 0 {
        return Err(ClassifierError::UndefinedPosWeight);
    }
    Ok((labels.len() - active) as f64 / active as f64)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Class-weighted binary cross-entropy over logits, mean-reduced, in the
/// log-sum-exp form: per sample, w·y·softplus(-z) + (1-y)·softplus(z).
/// Returns the loss and d(loss)/d(logit).
pub fn weighted_bce(logits: &[f64], labels: &[bool], pos_weight: f64) -> (f64, Vec<f64>) {
    assert_eq!(logits.len(), labels.len());
    let n = logits.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        let s = sigmoid(z);
        if y {
            loss += pos_weight * softplus(-z);
            grads.push(pos_weight * (s - 1.0) / n);
        } else {
            loss += softplus(z);
            grads.push(s / n);
        }
    }
    (loss / n, grads)
}

/// Per-epoch classifier telemetry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when validation AUC is undefined (single-class validation set).
    pub val_auc: f64,
}

/// Result of one classifier training run.
#[derive(Debug, Clone)]
pub struct ClassifierOutcome {
    pub model: ClassifierModel,
    pub history: Vec<ClassifierEpoch>,
    pub pos_weight: f64,
    /// 1-based epoch whose weights `model` carries.
    pub best_epoch: usize,
}

/// Train a classifier on frozen embeddings. The embeddings are read-only
/// throughout; only classifier parameters move. After training, the model
/// is restored to its best-validation-AUC epoch and its threshold is set by
/// sweeping F1 on the validation scores.
pub fn train_classifier(
    train_x: &Matrix,
    train_y: &[bool],
    val_x: &Matrix,
    val_y: &[bool],
    config: &ClassifierConfig,
) -> Result<ClassifierOutcome, ClassifierError> {
    config.validate()?;
    if train_x.rows() != train_y.len() {
        return Err(ClassifierError::LengthMismatch(format!(
            "train: {} embeddings vs {} labels",
            train_x.rows(),
            train_y.len()
        )));
    }
    if val_x.rows() != val_y.len() {
        return Err(ClassifierError::LengthMismatch(format!(
            "val: {} embeddings vs {} labels",
            val_x.rows(),
            val_y.len()
        )));
    }
    let weight = pos_weight(train_y)?;
    let mut model = ClassifierModel::init(
        train_x.cols(),
        derive_seed(config.seed, "classifier-init"),
    );
    let mut opt = AdamWState::new(
        &mlp_param_sizes(&model.mlp),
        config.lr,
        config.weight_decay,
    );
    let mut rng = SplitMix64::new(derive_seed(config.seed, "classifier-epochs"));

    let mut history = Vec::new();
    let mut best_auc = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut best_model = model.clone();
    let mut stale = 0usize;

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_x.rows()).collect();
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let rows: Vec<Vec<f64>> = chunk.iter().map(|&i| train_x.row(i).to_vec()).collect();
            let labels: Vec<bool> = chunk.iter().map(|&i| train_y[i]).collect();
            let x = Matrix::from_rows(&rows);
            let (logits, cache) = model.mlp.forward(&x, true, &mut rng)?;
            let (loss, dlogits) = weighted_bce(logits.data(), &labels, weight);
            let upstream = Matrix::from_vec(dlogits.len(), 1, dlogits);
            let grads = model.mlp.backward_params(&cache, &upstream)?;
            let mut gslices: Vec<&[f64]> = Vec::new();
            for g in &grads {
                gslices.push(g.dw.data());
                gslices.push(&g.db);
            }
            opt.step(&mut mlp_param_slices(&mut model.mlp), &gslices);
            epoch_loss += loss;
            n_batches += 1;
        }
        let train_loss = epoch_loss / n_batches.max(1) as f64;

        let val_scores = model.scores(val_x)?;
        let val_auc = match auc_roc(&val_scores, val_y) {
            Ok(a) => a,
            Err(MetricsError::UndefinedAuc) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        history.push(ClassifierEpoch {
            epoch,
            train_loss,
            val_auc,
        });

        if val_auc.is_nan() {
            // No usable validation signal; keep the final model.
            best_model = model.clone();
            best_epoch = epoch;
            continue;
        }
        if val_auc > best_auc {
            best_auc = val_auc;
            best_epoch = epoch;
            best_model = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let mut model = best_model;
    if !val_y.is_empty() {
        let val_scores = model.scores(val_x)?;
        model.threshold = best_f1_threshold(&val_scores, val_y)?;
    }
    Ok(ClassifierOutcome {
        model,
        history,
        pos_weight: weight,
        best_epoch,
    })
}

/// Score the test embeddings and report metrics at the stored threshold.
pub fn evaluate_classifier(
    model: &ClassifierModel,
    test_x: &Matrix,
    test_y: &[bool],
) -> Result<ClassificationReport, ClassifierError> {
    let scores = model.scores(test_x)?;
    Ok(classification_metrics(&scores, test_y, model.threshold)?)
}

fn mlp_param_sizes(mlp: &Mlp) -> Vec<usize> {
    mlp.layers
        .iter()
        .flat_map(|l| [l.w.data().len(), l.b.len()])
        .collect()
}

fn mlp_param_slices(mlp: &mut Mlp) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    for l in &mut mlp.layers {
        out.push(l.w.data_mut());
        out.push(l.b.as_mut_slice());
    }
    out
}

/// Trailer stored with a saved classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMeta {
    pub domain: String,
    pub pos_weight: f64,
    pub threshold: f64,
    pub config: ClassifierConfig,
}

/// Persist a classifier in the shared checkpoint container format.
pub fn save_classifier(
    path: &Path,
    model: &ClassifierModel,
    domain: &str,
    pos_weight: f64,
    config: &ClassifierConfig,
) -> Result<(), CheckpointError> {
    let meta = ClassifierMeta {
        domain: domain.to_string(),
        pos_weight,
        threshold: model.threshold,
        config: config.clone(),
    };
    let bias_matrices: Vec<Matrix> = model
        .mlp
        .layers
        .iter()
        .map(|l| Matrix::from_vec(1, l.b.len(), l.b.clone()))
        .collect();
    let mut records: Vec<(String, &Matrix)> = Vec::new();
    for (i, layer) in model.mlp.layers.iter().enumerate() {
        records.push((format!("classifier.{i}.weight"), &layer.w));
        records.push((format!("classifier.{i}.bias"), &bias_matrices[i]));
    }
    let trailer = serde_json::to_string(&meta)
        .map_err(|e| CheckpointError::Format(format!("classifier meta: {e}")))?;
    write_container(path, &records, &trailer)
}

/// Load a classifier saved by [`save_classifier`].
pub fn load_classifier(path: &Path) -> Result<(ClassifierModel, ClassifierMeta), CheckpointError> {
    let (records, trailer) = read_container(path)?;
    let meta: ClassifierMeta = serde_json::from_str(&trailer)
        .map_err(|e| CheckpointError::Format(format!("classifier meta: {e}")))?;
    let mut map: std::collections::BTreeMap<String, Matrix> = records.into_iter().collect();
    let mut layers = Vec::new();
    let mut i = 0;
    while let Some(w) = map.remove(&format!("classifier.{i}.weight")) {
        let b = map
            .remove(&format!("classifier.{i}.bias"))
            .ok_or_else(|| CheckpointError::Format(format!("missing classifier.{i}.bias")))?;
        layers.push(Linear {
            w,
            b: b.data().to_vec(),
        });
        i += 1;
    }
    if layers.is_empty() {
        return Err(CheckpointError::Format("classifier has no layers".into()));
    }
    if !map.is_empty() {
        return Err(CheckpointError::Format(format!(
            "unexpected records: {:?}",
            map.keys().collect::<Vec<_>>()
        )));
    }
    Ok((
        ClassifierModel {
            mlp: Mlp {
                layers,
                dropout: 0.0,
            },
            threshold: meta.threshold,
        },
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn pos_weight_examples() {
        let mut labels = vec![true; 3165];
        labels.extend(vec![false; 10491]);
        let w = pos_weight(&labels).unwrap();
        assert!((w - 10491.0 / 3165.0).abs() < 1e-12);
        assert!((w - 3.315).abs() < 5e-4);

        let balanced = [true, false, true, false];
        assert_eq!(pos_weight(&balanced).unwrap(), 1.0);

        let mut organic = vec![true; 10];
        organic.extend(vec![false; 394]);
        assert!((pos_weight(&organic).unwrap() - 39.4).abs() < 1e-12);

        assert!(matches!(
            pos_weight(&[false, false]),
            Err(ClassifierError::UndefinedPosWeight)
        ));
    }

    #[test]
    fn bce_worked_examples() {
        let (loss, _) = weighted_bce(&[0.0], &[true], 1.0);
        assert!((loss - 2.0_f64.ln()).abs() < 1e-15);
        let (loss, _) = weighted_bce(&[0.0], &[true], 2.0);
        assert!((loss - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
        let (loss, _) = weighted_bce(&[0.0], &[false], 5.0);
        assert!((loss - 2.0_f64.ln()).abs() < 1e-15, "weight ignores negatives");
        // Saturated logits stay finite.
        let (loss, grads) = weighted_bce(&[500.0, -500.0], &[false, true], 3.0);
        assert!(loss.is_finite());
        assert!(grads.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn bce_gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(14);
        let logits: Vec<f64> = (0..12).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let labels: Vec<bool> = (0..12).map(|i| i % 3 != 0).collect();
        let w = 2.7;
        let (_, grads) = weighted_bce(&logits, &labels, w);
        let h = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits.clone();
            plus[i] += h;
            let mut minus = logits.clone();
            minus[i] -= h;
            let numeric =
                (weighted_bce(&plus, &labels, w).0 - weighted_bce(&minus, &labels, w).0)
                    / (2.0 * h);
            let rel = (grads[i] - numeric).abs() / grads[i].abs().max(numeric.abs()).max(1e-300);
            assert!(rel < 1e-6, "{} vs {}", grads[i], numeric);
        }
    }

    #[test]
    fn positive_gradient_scales_with_weight() {
        // At mirrored logits the raw errors match, so the gradients must
        // differ exactly by the class weight.
        let w = 3.5;
        let z = 1.3;
        let (_, gp) = weighted_bce(&[z], &[true], w);
        let (_, gn) = weighted_bce(&[-z], &[false], w);
        assert!((gp[0].abs() / gn[0].abs() - w).abs() < 1e-12);
    }

    /// Two Gaussian blobs on opposite sides of the origin.
    fn separable_data(n: usize, dim: usize, seed: u64) -> (Matrix, Vec<bool>) {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let active = i % 2 == 0;
            let center = if active { 1.0 } else { -1.0 };
            let row: Vec<f64> = (0..dim)
                .map(|d| {
                    let base = if d == 0 { center } else { 0.0 };
                    base + 0.1 * rng.normal()
                })
                .collect();
            rows.push(row);
            labels.push(active);
        }
        (Matrix::from_rows(&rows), labels)
    }

    #[test]
    fn separable_data_reaches_perfect_validation_f1() {
        let (train_x, train_y) = separable_data(80, 6, 1);
        let (val_x, val_y) = separable_data(30, 6, 2);
        let config = ClassifierConfig {
            seed: 3,
            ..ClassifierConfig::default()
        };
        let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        let report = evaluate_classifier(&outcome.model, &val_x, &val_y).unwrap();
        assert_eq!(report.f1, 1.0, "report: {report:?}");
        assert_eq!(report.auc, 1.0);
        assert!((outcome.pos_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn early_stopping_engages_on_plateau() {
        // Validation AUC hits 1.0 immediately and stays there, so patience
        // exhausts after `patience` stale epochs.
        let (train_x, train_y) = separable_data(80, 6, 1);
        let (val_x, val_y) = separable_data(30, 6, 2);
        let config = ClassifierConfig {
            seed: 3,
            patience: 5,
            ..ClassifierConfig::default()
        };
        let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        assert!(outcome.history.len() < config.epochs);
        assert_eq!(
            outcome.history.len(),
            outcome.best_epoch + config.patience
        );
    }

    #[test]
    fn same_seed_same_model() {
        let (train_x, train_y) = separable_data(40, 5, 7);
        let (val_x, val_y) = separable_data(20, 5, 8);
        let config = ClassifierConfig {
            epochs: 5,
            seed: 9,
            ..ClassifierConfig::default()
        };
        let a = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        let b = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        assert_eq!(a.model, b.model);
        let c = train_classifier(
            &train_x,
            &train_y,
            &val_x,
            &val_y,
            &ClassifierConfig {
                seed: 10,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a.model.mlp, c.model.mlp);
    }

    /// Labels decoupled from features: a null-signal control.
    fn null_data(n: usize, dim: usize, seed: u64) -> (Matrix, Vec<bool>) {
        let mut rng = SplitMix64::new(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.chance(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        (Matrix::from_rows(&rows), labels)
    }

    #[test]
    fn shuffled_labels_score_near_chance() {
        let (train_x, train_y) = null_data(200, 8, 31);
        let (val_x, val_y) = null_data(100, 8, 32);
        let (test_x, test_y) = null_data(200, 8, 33);
        let config = ClassifierConfig {
            epochs: 20,
            seed: 5,
            ..ClassifierConfig::default()
        };
        let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        let report = evaluate_classifier(&outcome.model, &test_x, &test_y).unwrap();
        assert!(
            (0.4..=0.6).contains(&report.auc),
            "null-signal AUC {}",
            report.auc
        );
    }

    #[test]
    fn embeddings_stay_frozen() {
        let (train_x, train_y) = separable_data(40, 5, 7);
        let (val_x, val_y) = separable_data(20, 5, 8);
        let before: Vec<u64> = train_x.data().iter().map(|v| v.to_bits()).collect();
        let before_val: Vec<u64> = val_x.data().iter().map(|v| v.to_bits()).collect();
        let config = ClassifierConfig {
            epochs: 3,
            ..ClassifierConfig::default()
        };
        train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        let after: Vec<u64> = train_x.data().iter().map(|v| v.to_bits()).collect();
        let after_val: Vec<u64> = val_x.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(before, after);
        assert_eq!(before_val, after_val);
    }

    #[test]
    fn logit_scaling_preserves_auc_and_decisions() {
        let mut rng = SplitMix64::new(44);
        let logits: Vec<f64> = (0..40).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 3 == 0).collect();
        let scores: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
        let scaled: Vec<f64> = logits.iter().map(|&z| sigmoid(3.0 * z)).collect();
        assert_eq!(
            auc_roc(&scores, &labels).unwrap(),
            auc_roc(&scaled, &labels).unwrap()
        );
        let t = best_f1_threshold(&scores, &labels).unwrap();
        let ts = best_f1_threshold(&scaled, &labels).unwrap();
        let decisions: Vec<bool> = scores.iter().map(|&s| s >= t).collect();
        let decisions_scaled: Vec<bool> = scaled.iter().map(|&s| s >= ts).collect();
        assert_eq!(decisions, decisions_scaled);
    }

    #[test]
    fn degenerate_all_active_predictor() {
        // Final layer biased high: every score lands above the threshold.
        let mut model = ClassifierModel::init(4, 1);
        let last = model.mlp.layers.last_mut().unwrap();
        for v in last.w.data_mut() {
            *v = 0.0;
        }
        last.b[0] = 3.0;
        // 29 of 125 positive = 23.2%.
        let n = 125;
        let x = Matrix::zeros(n, 4);
        let labels: Vec<bool> = (0..n).map(|i| i < 29).collect();
        let scores = model.scores(&x).unwrap();
        assert!(scores.iter().all(|&s| s > 0.9));
        let report = classification_metrics(&scores, &labels, 0.5).unwrap();
        assert!((report.accuracy - 0.232).abs() < 1e-12);
        assert_eq!(report.recall, 1.0);
        assert!((report.precision - 0.232).abs() < 1e-12);
        assert!(report.f1 > 0.0);
        // Constant scores carry no ranking information.
        assert_eq!(report.auc, 0.5);
    }

    #[test]
    fn single_class_test_labels_report_undefined_auc() {
        let (train_x, train_y) = separable_data(40, 5, 7);
        let (val_x, val_y) = separable_data(20, 5, 8);
        let config = ClassifierConfig {
            epochs: 2,
            ..ClassifierConfig::default()
        };
        let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        let test_x = Matrix::zeros(4, 5);
        let test_y = vec![true; 4];
        assert!(matches!(
            evaluate_classifier(&outcome.model, &test_x, &test_y),
            Err(ClassifierError::Metrics(MetricsError::UndefinedAuc))
        ));
    }

    #[test]
    fn classifier_round_trips_through_container() {
        let (train_x, train_y) = separable_data(40, 5, 7);
        let (val_x, val_y) = separable_data(20, 5, 8);
        let config = ClassifierConfig {
            epochs: 3,
            seed: 2,
            ..ClassifierConfig::default()
        };
        let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("clf.cclp");
        save_classifier(&path, &outcome.model, "organic", outcome.pos_weight, &config).unwrap();
        let (loaded, meta) = load_classifier(&path).unwrap();
        assert_eq!(loaded, outcome.model);
        assert_eq!(meta.domain, "organic");
        assert_eq!(meta.threshold, outcome.model.threshold);
        assert_eq!(meta.config, config);
        let s1 = outcome.model.scores(&val_x).unwrap();
        let s2 = loaded.scores(&val_x).unwrap();
        assert_eq!(s1, s2);
    }
}
