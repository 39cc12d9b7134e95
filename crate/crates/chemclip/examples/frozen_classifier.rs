//! Frozen-embedding probing: train a small MLP classifier on fixed
//! embeddings to measure how much activity signal they carry. Includes the
//! class-imbalance handling (positive-class weighting) and the F1-swept
//! decision threshold.
//!
//! ```sh
//! cargo run --example frozen_classifier
//! ```

use chemclip::classifier::{pos_weight, train_classifier, ClassifierConfig};
use chemclip::metrics::classification_metrics;
use chemclip::nn::Matrix;
use chemclip::rng::SplitMix64;

/// Imbalanced blobs: actives cluster apart from inactives, 1:4 ratio.
fn blob_data(n: usize, seed: u64) -> (Matrix, Vec<bool>) {
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let active = rng.chance(0.2);
        let center = if active { 0.8 } else { -0.2 };
        rows.push((0..8).map(|_| center + 1.4 * rng.normal()).collect::<Vec<f64>>());
        labels.push(active);
    }
    (Matrix::from_rows(&rows), labels)
}

fn main() {
    let (train_x, train_y) = blob_data(600, 1);
    let (val_x, val_y) = blob_data(200, 2);
    let (test_x, test_y) = blob_data(200, 3);

    println!(
        "train actives: {} / {} (pos_weight {:.3})",
        train_y.iter().filter(|&&l| l).count(),
        train_y.len(),
        pos_weight(&train_y).unwrap()
    );

    let config = ClassifierConfig {
        epochs: 30,
        batch_size: 64,
        seed: 5,
        ..ClassifierConfig::default()
    };
    let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &config).expect("trains");
    println!("stopped after {} epochs; best epoch {}", outcome.history.len(), outcome.best_epoch);
    println!("decision threshold (F1-swept on validation): {:.3}", outcome.model.threshold);

    let scores = outcome.model.scores(&test_x).expect("scores");
    let report = classification_metrics(&scores, &test_y, outcome.model.threshold).expect("report");
    println!("\ntest metrics:");
    println!("  auc       {:.3}", report.auc);
    println!("  f1        {:.3}", report.f1);
    println!("  precision {:.3}", report.precision);
    println!("  recall    {:.3}", report.recall);
    println!("  accuracy  {:.3}", report.accuracy);

    // Baseline for contrast: predicting "active" for everything gets high
    // recall but poor accuracy on an imbalanced corpus.
    let degenerate = classification_metrics(&vec![1.0; test_y.len()], &test_y, 0.5).expect("report");
    println!("\nall-active baseline: recall {:.3}, accuracy {:.3}", degenerate.recall, degenerate.accuracy);
}
