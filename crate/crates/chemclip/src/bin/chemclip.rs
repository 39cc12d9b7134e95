//! Subcommand front-end over the pipeline stages.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. All
//! human-readable messages go to standard error; machine-readable outputs
//! are written to files in the run directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chemclip::featurize::{morgan_fingerprint, FP_BITS, FP_RADIUS};
use chemclip::pipeline::{
    load_run_config, run_embed, run_eval_align, run_eval_clf, run_import_embeddings, run_ingest,
    run_project, run_split, run_synth, run_train, run_train_clf, PipelineError, ProjectMethod,
};
use chemclip::smiles::parse_smiles;
use chemclip::synth::SynthConfig;

#[derive(Parser)]
#[command(
    name = "chemclip",
    version,
    about = "Cross-domain activity embeddings for organic and metal-complex compounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus with a planted activity rule.
    Synth {
        /// Output directory for the three CSV tables.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        n_organic: usize,
        #[arg(long, default_value_t = 400)]
        n_inorganic: usize,
        #[arg(long, default_value_t = 10)]
        cell_lines: usize,
        /// Structure-activity signal strength in [0, 1].
        #[arg(long, default_value_t = 0.9)]
        signal: f64,
        /// Probability of flipping each record's label.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
    },
    /// Load corpora, standardize cell lines, and write the record table.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assign compounds to train/val/test without leakage.
    Split {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train the dual-encoder model; checkpoints land in the run directory.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Embed every record with the best checkpoint.
    Embed {
        #[arg(long)]
        config: PathBuf,
    },
    /// Validate an external embeddings table and install it for this run.
    ImportEmbeddings {
        #[arg(long)]
        config: PathBuf,
        /// Embeddings CSV to import.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Centroid alignment metrics on the test split.
    EvalAlign {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train per-domain activity classifiers on frozen embeddings.
    TrainClf {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the saved classifiers on the test split.
    EvalClf {
        #[arg(long)]
        config: PathBuf,
    },
    /// Project embeddings to 2-D and render an SVG scatter plot.
    Project {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = ["pca", "tsne"])]
        method: String,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
        /// Optional coordinate CSV (record_id,x,y,domain,active).
        #[arg(long)]
        coords: Option<PathBuf>,
        /// t-SNE perplexity (ignored for PCA).
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        /// t-SNE iteration count (ignored for PCA).
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
    },
    /// Print fingerprint diagnostics for one SMILES string.
    Fp {
        #[arg(long)]
        smiles: String,
    },
}

fn main() -> ExitCode {
    chemclip::runtime::init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a usage error.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Synth {
            out,
            seed,
            n_organic,
            n_inorganic,
            cell_lines,
            signal,
            noise,
        } => {
            let config = SynthConfig {
                n_organic,
                n_inorganic,
                n_cell_lines: cell_lines,
                signal_strength: signal,
                label_noise: noise,
                seed,
            };
            run_synth(&config, &out)?;
            eprintln!(
                "wrote {n_organic} organic and {n_inorganic} inorganic compounds over \
                 {cell_lines} cell lines to {}",
                out.display()
            );
        }
        Command::Ingest { config } => {
            let config = load_run_config(&config)?;
            let report = run_ingest(&config)?;
            eprintln!(
                "ingested {} organic and {} inorganic records ({} shared cell lines)",
                report.final_organic_records,
                report.final_inorganic_records,
                report.shared_cell_lines
            );
        }
        Command::Split { config } => {
            let config = load_run_config(&config)?;
            let summary = run_split(&config)?;
            eprintln!(
                "split compounds {}/{}/{} (train/val/test)",
                summary.train_compounds, summary.val_compounds, summary.test_compounds
            );
        }
        Command::Train { config } => {
            let config = load_run_config(&config)?;
            let summary = run_train(&config)?;
            eprintln!(
                "trained {} epochs (best epoch {}, final loss {:.4})",
                summary.epochs_run, summary.best_epoch, summary.final_train_loss
            );
        }
        Command::Embed { config } => {
            let config = load_run_config(&config)?;
            let (rows, skipped) = run_embed(&config)?;
            eprintln!("embedded {rows} records ({} skipped)", skipped.len());
        }
        Command::ImportEmbeddings { config, input } => {
            let config = load_run_config(&config)?;
            let report = run_import_embeddings(&config, &input)?;
            eprintln!(
                "imported {} rows of width {} ({} renormalized, {} zero rows)",
                report.rows, report.width, report.renormalized, report.zero_rows
            );
        }
        Command::EvalAlign { config } => {
            let config = load_run_config(&config)?;
            let artifact = run_eval_align(&config)?;
            eprintln!(
                "alignment {:.3}, separation {:.3}, combined {:.3} over {} {} records",
                artifact.report.alignment_ratio,
                artifact.report.separation_ratio,
                artifact.report.combined_score,
                artifact.n_records,
                artifact.split
            );
        }
        Command::TrainClf { config } => {
            let config = load_run_config(&config)?;
            let summaries = run_train_clf(&config)?;
            for (domain, s) in &summaries {
                eprintln!(
                    "{domain}: pos_weight {:.3}, best epoch {}, threshold {:.3}",
                    s.pos_weight, s.best_epoch, s.threshold
                );
            }
        }
        Command::EvalClf { config } => {
            let config = load_run_config(&config)?;
            let artifact = run_eval_clf(&config)?;
            for (domain, r) in &artifact.domains {
                eprintln!("{domain}: auc {:.3}, f1 {:.3}, accuracy {:.3}", r.auc, r.f1, r.accuracy);
            }
        }
        Command::Project {
            config,
            method,
            out,
            coords,
            perplexity,
            iterations,
        } => {
            let config = load_run_config(&config)?;
            let method = match method.as_str() {
                "pca" => ProjectMethod::Pca,
                _ => ProjectMethod::Tsne {
                    perplexity,
                    iterations,
                },
            };
            let n = run_project(&config, method, &out, coords.as_deref())?;
            eprintln!("projected {n} records to {}", out.display());
        }
        Command::Fp { smiles } => {
            let graph = parse_smiles(&smiles).map_err(|e| PipelineError::Malformed {
                path: PathBuf::from(&smiles),
                reason: e.to_string(),
            })?;
            let fp = morgan_fingerprint(&graph, FP_RADIUS, FP_BITS);
            println!("n_distinct {}", fp.n_distinct());
            for bit in fp.ones() {
                println!("{bit}");
            }
        }
    }
    Ok(())
}
