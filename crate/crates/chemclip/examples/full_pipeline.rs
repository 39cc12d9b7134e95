//! Every pipeline stage end to end, exactly as the `chemclip` binary runs
//! them: synthesize a corpus, ingest, split, train, embed, evaluate
//! alignment, train per-domain classifiers, evaluate them, and render a
//! projection. Prints the artifact inventory as it goes.
//!
//! ```sh
//! cargo run --example full_pipeline
//! ```

use chemclip::classifier::ClassifierConfig;
use chemclip::pipeline::{self, DataSection, OutputSection, ProjectMethod, RunConfig};
use chemclip::synth::{generate, SynthConfig};
use chemclip::train::TrainConfig;

fn main() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let corpus_dir = tmp.path().join("corpus");
    let run_dir = tmp.path().join("run");

    generate(&SynthConfig {
        n_organic: 120,
        n_inorganic: 40,
        n_cell_lines: 5,
        signal_strength: 1.0,
        label_noise: 0.0,
        seed: 17,
    })
    .expect("valid config")
    .write_to(&corpus_dir)
    .expect("writable dir");
    println!("corpus      -> {}", corpus_dir.display());

    let config = RunConfig {
        data: DataSection {
            organic: corpus_dir.join("organic.csv"),
            inorganic: corpus_dir.join("inorganic.csv"),
            cell_map: corpus_dir.join("cell_lines.csv"),
        },
        train: TrainConfig {
            epochs: 6,
            batch_size: 64,
            ..TrainConfig::default()
        },
        classifier: ClassifierConfig {
            epochs: 20,
            ..ClassifierConfig::default()
        },
        output: OutputSection {
            directory: run_dir.clone(),
        },
    };

    let ingest = pipeline::run_ingest(&config).expect("ingest");
    println!(
        "ingest      -> records.csv ({} organic + {} inorganic records, {} shared cell lines)",
        ingest.final_organic_records, ingest.final_inorganic_records, ingest.shared_cell_lines
    );

    let split = pipeline::run_split(&config).expect("split");
    println!(
        "split       -> split.csv ({}/{}/{} compounds)",
        split.train_compounds, split.val_compounds, split.test_compounds
    );

    let trained = pipeline::run_train(&config).expect("train");
    println!(
        "train       -> best.cclp (best epoch {} of {}, final loss {:.4})",
        trained.best_epoch, trained.epochs_run, trained.final_train_loss
    );

    let (embedded, skipped) = pipeline::run_embed(&config).expect("embed");
    println!("embed       -> embeddings.csv ({embedded} rows, {} skipped)", skipped.len());

    let alignment = pipeline::run_eval_align(&config).expect("eval-align");
    println!(
        "eval-align  -> alignment.json (split {}, alignment {:.3}, separation {:.3})",
        alignment.split, alignment.report.alignment_ratio, alignment.report.separation_ratio
    );

    let classifiers = pipeline::run_train_clf(&config).expect("train-clf");
    for (domain, summary) in &classifiers {
        println!(
            "train-clf   -> classifier_{domain}.cclp (pos_weight {:.3}, threshold {:.3})",
            summary.pos_weight, summary.threshold
        );
    }

    let classification = pipeline::run_eval_clf(&config).expect("eval-clf");
    for (domain, report) in &classification.domains {
        println!(
            "eval-clf    -> classification.json ({domain}: auc {:.3}, f1 {:.3})",
            report.auc, report.f1
        );
    }

    let svg = run_dir.join("projection.svg");
    let points = pipeline::run_project(&config, ProjectMethod::Pca, &svg, None).expect("project");
    println!("project     -> {} ({points} points)", svg.display());

    println!("\nartifacts in {}:", run_dir.display());
    let mut names: Vec<String> = std::fs::read_dir(&run_dir)
        .expect("run dir exists")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }
}
