//! Run-directory pipeline stages behind the command-line front-end.
//!
//! Every stage reads a JSON run config, writes a resolved copy of it (all
//! defaults materialized) into the output directory, then reads its input
//! artifacts from that directory and writes new ones. Stages are
//! deterministic: identical inputs and seed produce byte-identical
//! artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{load_checkpoint, CheckpointError};
use crate::classifier::{
    evaluate_classifier, load_classifier, save_classifier, train_classifier, ClassifierConfig,
    ClassifierError,
};
use crate::data::{
    compound_split, filter_shared_cell_lines, load_inorganic_csv, load_organic_csv,
    standardize_cell_lines, subsample_inactives, transfer_metal_records, ActivityRecord,
    CellLineMap, DataError, Split,
};
use crate::embeddings::{
    embed_records, export_embeddings_csv, import_embeddings_csv, EmbeddedRecord, ImportReport,
};
use crate::featurize::Domain;
use crate::metrics::{
    alignment_report, AlignmentReport, CentroidSet, ClassificationReport, MetricsError,
    GROUP_LABELS,
};
use crate::nn::Matrix;
use crate::rng::derive_seed;
use crate::synth::{generate, SynthConfig, SynthError};
use crate::train::{train, TrainConfig, TrainError, BEST_CHECKPOINT};
use crate::viz::{pca_2d, render_scatter_svg, tsne_2d, VizError};

/// Resolved run config snapshot written by every stage.
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.json";
/// Standardized record table produced by `ingest`.
pub const RECORDS_FILE: &str = "records.csv";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
/// Compound-to-split assignment produced by `split`.
pub const SPLIT_FILE: &str = "split.csv";
pub const SPLIT_REPORT_FILE: &str = "split_report.json";
pub const HISTORY_FILE: &str = "training_history.csv";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const IMPORT_REPORT_FILE: &str = "import_report.json";
pub const ALIGNMENT_JSON_FILE: &str = "alignment.json";
pub const ALIGNMENT_TABLE_FILE: &str = "alignment.txt";
pub const TRAIN_CLF_REPORT_FILE: &str = "train_clf_report.json";
pub const CLASSIFICATION_JSON_FILE: &str = "classification.json";
pub const CLASSIFICATION_TABLE_FILE: &str = "classification.txt";

/// Train/val/test fractions by unique compound.
pub const SPLIT_FRACTIONS: (f64, f64, f64) = (0.70, 0.15, 0.15);
/// Inactive-to-active compound cap applied to the organic training data.
pub const SUBSAMPLE_RATIO: usize = 5;

/// Per-domain classifier artifact name.
pub fn classifier_file(domain: Domain) -> String {
    format!("classifier_{}.cclp", domain.as_str())
}

/// Per-domain classifier training history name.
pub fn classifier_history_file(domain: Domain) -> String {
    format!("classifier_history_{}.csv", domain.as_str())
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("MissingInput: {} (run `chemclip {producer}` first)", path.display())]
    MissingInput { path: PathBuf, producer: &'static str },
    #[error("no {domain} records in the {split} split")]
    EmptySplit { domain: &'static str, split: &'static str },
    #[error("{}: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Viz(#[from] VizError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Input corpus locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub organic: PathBuf,
    pub inorganic: PathBuf,
    pub cell_map: PathBuf,
}

/// Where run artifacts land.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
}

/// One JSON document configuring a whole run; unknown keys are rejected
/// at every level and omitted fields take their published defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.train
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.classifier
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Read and validate a run config document.
pub fn load_run_config(path: &Path) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn write_text(path: &Path, contents: &str) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    text.push('\n');
    write_text(path, &text)
}

/// Create the output directory and snapshot the resolved config into it.
fn prepare_output(config: &RunConfig) -> Result<PathBuf, PipelineError> {
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
        path: dir.clone(),
        source,
    })?;
    write_json(&dir.join(RESOLVED_CONFIG_FILE), config)?;
    Ok(dir)
}

fn require(path: PathBuf, producer: &'static str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingInput { path, producer })
    }
}

// ---------------------------------------------------------------------
// Record table round trip
// ---------------------------------------------------------------------

const RECORD_COLUMNS: [&str; 9] = [
    "record_id",
    "compound_id",
    "domain",
    "smiles",
    "metal",
    "oxidation_state",
    "cell_line",
    "raw_value",
    "active",
];

/// Write the standardized record table.
pub fn write_records_csv(path: &Path, records: &[ActivityRecord]) -> Result<(), PipelineError> {
    let as_csv_err = |e: csv::Error| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(as_csv_err)?;
    writer.write_record(RECORD_COLUMNS).map_err(as_csv_err)?;
    for r in records {
        writer
            .write_record([
                r.record_id.as_str(),
                r.compound_id.as_str(),
                r.domain.as_str(),
                r.smiles.as_str(),
                r.metal.as_deref().unwrap_or(""),
                &r.oxidation_state.map(|v| v.to_string()).unwrap_or_default(),
                r.cell_line.as_str(),
                &r.raw_value.to_string(),
                if r.active { "true" } else { "false" },
            ])
            .map_err(as_csv_err)?;
    }
    writer.flush().map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Read the standardized record table back.
pub fn read_records_csv(path: &Path) -> Result<Vec<ActivityRecord>, PipelineError> {
    let malformed = |reason: String| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?;
    if *headers != csv::StringRecord::from(RECORD_COLUMNS.to_vec()) {
        return Err(malformed(format!("unexpected header {headers:?}")));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| malformed(e.to_string()))?;
        let line = i + 2;
        let field = |idx: usize| row.get(idx).unwrap_or("").to_string();
        let domain = Domain::from_str(&field(2)).map_err(|e| malformed(format!("line {line}: {e}")))?;
        let metal = Some(field(4)).filter(|s| !s.is_empty());
        let oxidation_state = match field(5).as_str() {
            "" => None,
            s => Some(
                s.parse::<i32>()
                    .map_err(|e| malformed(format!("line {line}: oxidation_state: {e}")))?,
            ),
        };
        let raw_value = field(7)
            .parse::<f64>()
            .map_err(|e| malformed(format!("line {line}: raw_value: {e}")))?;
        let active = match field(8).as_str() {
            "true" => true,
            "false" => false,
            other => return Err(malformed(format!("line {line}: active: `{other}`"))),
        };
        records.push(ActivityRecord {
            record_id: field(0),
            compound_id: field(1),
            domain,
            smiles: field(3),
            metal,
            oxidation_state,
            cell_line: field(6),
            raw_value,
            active,
        });
    }
    Ok(records)
}

fn read_split_csv(path: &Path) -> Result<BTreeMap<String, Split>, PipelineError> {
    let malformed = |reason: String| PipelineError::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?;
    if *headers != csv::StringRecord::from(vec!["compound_id", "split"]) {
        return Err(malformed(format!("unexpected header {headers:?}")));
    }
    let mut assignment = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| malformed(e.to_string()))?;
        let split = Split::from_str(row.get(1).unwrap_or(""))
            .map_err(|e| malformed(format!("line {}: {e}", i + 2)))?;
        assignment.insert(row.get(0).unwrap_or("").to_string(), split);
    }
    Ok(assignment)
}

// ---------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------

/// Counts emitted by `ingest`, mirroring dataset-statistics reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub organic_rows: usize,
    pub organic_unparseable_smiles: usize,
    pub inorganic_rows: usize,
    pub inorganic_unparseable_smiles: usize,
    pub organic_unmapped_cell_lines: usize,
    pub inorganic_unmapped_cell_lines: usize,
    pub metal_records_transferred: usize,
    pub multi_metal_records: usize,
    pub shared_cell_lines: usize,
    pub final_organic_records: usize,
    pub final_inorganic_records: usize,
    pub final_organic_active: usize,
    pub final_inorganic_active: usize,
}

/// Load both corpora, standardize cell lines, move metal-containing
/// organics to the inorganic side, and keep only shared cell lines.
/// Writes the record table and an ingest report.
pub fn run_ingest(config: &RunConfig) -> Result<IngestReport, PipelineError> {
    let dir = prepare_output(config)?;
    let (organic, organic_load) = load_organic_csv(&config.data.organic)?;
    let (inorganic, inorganic_load) = load_inorganic_csv(&config.data.inorganic)?;
    let map = CellLineMap::from_csv(&config.data.cell_map)?;

    let (organic, organic_unmapped) = standardize_cell_lines(organic, &map);
    let (mut inorganic, inorganic_unmapped) = standardize_cell_lines(inorganic, &map);
    let (organic, transferred, transfer) = transfer_metal_records(organic);
    inorganic.extend(transferred);
    let (organic, inorganic, shared) = filter_shared_cell_lines(organic, inorganic);
    if shared.is_empty() {
        eprintln!("warning: no shared cell lines between corpora; record table is empty");
    }

    let mut records = organic;
    records.extend(inorganic);
    write_records_csv(&dir.join(RECORDS_FILE), &records)?;

    let count = |domain: Domain, active_only: bool| {
        records
            .iter()
            .filter(|r| r.domain == domain && (!active_only || r.active))
            .count()
    };
    let report = IngestReport {
        organic_rows: organic_load.kept,
        organic_unparseable_smiles: organic_load.dropped_unparseable_smiles,
        inorganic_rows: inorganic_load.kept,
        inorganic_unparseable_smiles: inorganic_load.dropped_unparseable_smiles,
        organic_unmapped_cell_lines: organic_unmapped,
        inorganic_unmapped_cell_lines: inorganic_unmapped,
        metal_records_transferred: transfer.transferred,
        multi_metal_records: transfer.multi_metal,
        shared_cell_lines: shared.len(),
        final_organic_records: count(Domain::Organic, false),
        final_inorganic_records: count(Domain::Inorganic, false),
        final_organic_active: count(Domain::Organic, true),
        final_inorganic_active: count(Domain::Inorganic, true),
    };
    write_json(&dir.join(INGEST_REPORT_FILE), &report)?;
    Ok(report)
}

/// Per-split compound and record counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub train_compounds: usize,
    pub val_compounds: usize,
    pub test_compounds: usize,
    pub train_records: usize,
    pub val_records: usize,
    pub test_records: usize,
}

/// Assign every compound to train/val/test and write the assignment table.
pub fn run_split(config: &RunConfig) -> Result<SplitSummary, PipelineError> {
    let dir = prepare_output(config)?;
    let records = read_records_csv(&require(dir.join(RECORDS_FILE), "ingest")?)?;
    let seed = derive_seed(config.train.seed, "split");
    let split = compound_split(&records, seed, SPLIT_FRACTIONS);

    let mut table = String::from("compound_id,split\n");
    for (compound, assigned) in &split.assignment {
        let _ = writeln!(table, "{compound},{assigned}");
    }
    write_text(&dir.join(SPLIT_FILE), &table)?;

    let compounds = |s: Split| split.assignment.values().filter(|&&v| v == s).count();
    let rows = |s: Split| split.select(&records, s).len();
    let summary = SplitSummary {
        seed,
        train_compounds: compounds(Split::Train),
        val_compounds: compounds(Split::Val),
        test_compounds: compounds(Split::Test),
        train_records: rows(Split::Train),
        val_records: rows(Split::Val),
        test_records: rows(Split::Test),
    };
    write_json(&dir.join(SPLIT_REPORT_FILE), &summary)?;
    Ok(summary)
}

fn partition<'r>(
    records: &'r [ActivityRecord],
    assignment: &BTreeMap<String, Split>,
    split: Split,
) -> Vec<&'r ActivityRecord> {
    records
        .iter()
        .filter(|r| assignment.get(&r.compound_id) == Some(&split))
        .collect()
}

/// Training outcome counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub n_train_records: usize,
    pub n_val_records: usize,
    pub skipped_records: Vec<String>,
}

/// Train the dual encoder on the train split (organic inactives
/// subsampled 5:1 by compound) and checkpoint into the run directory.
pub fn run_train(config: &RunConfig) -> Result<TrainSummary, PipelineError> {
    let dir = prepare_output(config)?;
    let records = read_records_csv(&require(dir.join(RECORDS_FILE), "ingest")?)?;
    let assignment = read_split_csv(&require(dir.join(SPLIT_FILE), "split")?)?;

    let unassigned = records
        .iter()
        .filter(|r| !assignment.contains_key(&r.compound_id))
        .count();
    if unassigned > 0 {
        eprintln!("warning: {unassigned} records belong to compounds missing from the split table");
    }

    let train_all: Vec<ActivityRecord> = partition(&records, &assignment, Split::Train)
        .into_iter()
        .cloned()
        .collect();
    let (organic_train, inorganic_train): (Vec<ActivityRecord>, Vec<ActivityRecord>) = train_all
        .into_iter()
        .partition(|r| r.domain == Domain::Organic);
    let mut train_records =
        subsample_inactives(&organic_train, SUBSAMPLE_RATIO, config.train.seed);
    train_records.extend(inorganic_train);
    let val_records: Vec<ActivityRecord> = partition(&records, &assignment, Split::Val)
        .into_iter()
        .cloned()
        .collect();

    let outcome = train(&config.train, &train_records, &val_records, Some(&dir))?;

    let mut history = String::from("epoch,train_loss,train_info_nce,train_triplet,val_info_nce\n");
    for e in &outcome.history {
        let _ = writeln!(
            history,
            "{},{},{},{},{}",
            e.epoch, e.train_loss, e.train_info_nce, e.train_triplet, e.val_info_nce
        );
    }
    write_text(&dir.join(HISTORY_FILE), &history)?;

    let summary = TrainSummary {
        epochs_run: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        final_train_loss: outcome.history.last().map_or(f64::NAN, |e| e.train_loss),
        n_train_records: train_records.len(),
        n_val_records: val_records.len(),
        skipped_records: outcome.skipped_records,
    };
    write_json(&dir.join(TRAIN_REPORT_FILE), &summary)?;
    Ok(summary)
}

/// Embed every ingested record with the best checkpoint and export the
/// embeddings table. Returns (rows written, skipped record ids).
pub fn run_embed(config: &RunConfig) -> Result<(usize, Vec<String>), PipelineError> {
    let dir = prepare_output(config)?;
    let records = read_records_csv(&require(dir.join(RECORDS_FILE), "ingest")?)?;
    let (model, _) = load_checkpoint(&require(dir.join(BEST_CHECKPOINT), "train")?)?;
    let (embedded, skipped) = embed_records(&model, &records)?;
    export_embeddings_csv(&dir.join(EMBEDDINGS_FILE), &embedded)?;
    if !skipped.is_empty() {
        eprintln!("warning: {} records could not be embedded", skipped.len());
    }
    Ok((embedded.len(), skipped))
}

/// Validate an external embeddings table, renormalize rows, and install
/// it as this run's embeddings artifact.
pub fn run_import_embeddings(
    config: &RunConfig,
    source: &Path,
) -> Result<ImportReport, PipelineError> {
    let dir = prepare_output(config)?;
    let (records, report) = import_embeddings_csv(source)?;
    export_embeddings_csv(&dir.join(EMBEDDINGS_FILE), &records)?;
    write_json(&dir.join(IMPORT_REPORT_FILE), &report)?;
    Ok(report)
}

/// Alignment metrics plus the slice of data they were computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentArtifact {
    /// "test" when a split table exists, otherwise "all".
    pub split: String,
    pub n_records: usize,
    #[serde(flatten)]
    pub report: AlignmentReport,
}

fn alignment_table(artifact: &AlignmentArtifact) -> String {
    let r = &artifact.report;
    let mut t = String::new();
    let _ = writeln!(
        t,
        "cross-modal alignment ({} records, {} split)",
        artifact.n_records, artifact.split
    );
    let _ = writeln!(t);
    let _ = writeln!(t, "group sizes");
    let counts = [r.counts.ia, r.counts.ii, r.counts.oa, r.counts.oi];
    for (label, n) in GROUP_LABELS.iter().zip(counts) {
        let _ = writeln!(t, "  {label}  {n}");
    }
    let _ = writeln!(t);
    let _ = writeln!(t, "centroid distances");
    let _ = write!(t, "     ");
    for label in GROUP_LABELS {
        let _ = write!(t, "{label:>8}");
    }
    let _ = writeln!(t);
    for (i, label) in GROUP_LABELS.iter().enumerate() {
        let _ = write!(t, "  {label} ");
        for j in 0..4 {
            let _ = write!(t, "{:8.3}", r.distances[i][j]);
        }
        let _ = writeln!(t);
    }
    let _ = writeln!(t);
    let _ = writeln!(t, "alignment_ratio         {:.3}", r.alignment_ratio);
    let _ = writeln!(t, "separation_ratio        {:.3}", r.separation_ratio);
    let _ = writeln!(t, "combined_score          {:.3}", r.combined_score);
    let _ = writeln!(t, "active_alignment_ratio  {:.3}", r.active_alignment_ratio);
    t
}

/// Compute centroid-distance alignment metrics on the test split (or on
/// all embedded records when no split table exists) and write JSON plus a
/// plaintext table.
pub fn run_eval_align(config: &RunConfig) -> Result<AlignmentArtifact, PipelineError> {
    let dir = prepare_output(config)?;
    let (records, _) = import_embeddings_csv(&require(dir.join(EMBEDDINGS_FILE), "embed")?)?;

    let split_path = dir.join(SPLIT_FILE);
    let (selected, split_label) = if split_path.exists() {
        let assignment = read_split_csv(&split_path)?;
        let test: Vec<EmbeddedRecord> = records
            .into_iter()
            .filter(|r| assignment.get(&r.compound_id) == Some(&Split::Test))
            .collect();
        (test, "test")
    } else {
        eprintln!("note: no split table found; evaluating alignment on all records");
        (records, "all")
    };

    let centroids = CentroidSet::from_records(&selected)?;
    let artifact = AlignmentArtifact {
        split: split_label.to_string(),
        n_records: selected.len(),
        report: alignment_report(&centroids),
    };
    write_json(&dir.join(ALIGNMENT_JSON_FILE), &artifact)?;
    write_text(&dir.join(ALIGNMENT_TABLE_FILE), &alignment_table(&artifact))?;
    Ok(artifact)
}

/// Per-domain classifier training outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierTrainSummary {
    pub pos_weight: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub threshold: f64,
    /// None when the validation split yields no defined AUC.
    pub best_val_auc: Option<f64>,
}

fn domain_split_matrix(
    records: &[EmbeddedRecord],
    assignment: &BTreeMap<String, Split>,
    domain: Domain,
    split: Split,
) -> (Matrix, Vec<bool>) {
    let rows: Vec<&EmbeddedRecord> = records
        .iter()
        .filter(|r| r.domain == domain && assignment.get(&r.compound_id) == Some(&split))
        .collect();
    let features: Vec<Vec<f64>> = rows.iter().map(|r| r.embedding.clone()).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r.active).collect();
    (Matrix::from_rows(&features), labels)
}

/// Train one frozen-embedding activity classifier per domain on the train
/// split, early-stopping on the validation split.
pub fn run_train_clf(
    config: &RunConfig,
) -> Result<BTreeMap<String, ClassifierTrainSummary>, PipelineError> {
    let dir = prepare_output(config)?;
    let (records, _) = import_embeddings_csv(&require(dir.join(EMBEDDINGS_FILE), "embed")?)?;
    let assignment = read_split_csv(&require(dir.join(SPLIT_FILE), "split")?)?;

    let mut summaries = BTreeMap::new();
    for domain in [Domain::Organic, Domain::Inorganic] {
        let (train_x, train_y) = domain_split_matrix(&records, &assignment, domain, Split::Train);
        let (val_x, val_y) = domain_split_matrix(&records, &assignment, domain, Split::Val);
        if train_x.rows() == 0 {
            return Err(PipelineError::EmptySplit {
                domain: domain.as_str(),
                split: "train",
            });
        }

        let mut clf_config = config.classifier.clone();
        clf_config.seed = derive_seed(config.classifier.seed, domain.as_str());
        let outcome = train_classifier(&train_x, &train_y, &val_x, &val_y, &clf_config)?;

        save_classifier(
            &dir.join(classifier_file(domain)),
            &outcome.model,
            domain.as_str(),
            outcome.pos_weight,
            &clf_config,
        )?;
        let mut history = String::from("epoch,train_loss,val_auc\n");
        for e in &outcome.history {
            let _ = writeln!(history, "{},{},{}", e.epoch, e.train_loss, e.val_auc);
        }
        write_text(&dir.join(classifier_history_file(domain)), &history)?;

        let best_val_auc = outcome
            .history
            .get(outcome.best_epoch - 1)
            .map(|e| e.val_auc)
            .filter(|v| v.is_finite());
        summaries.insert(
            domain.as_str().to_string(),
            ClassifierTrainSummary {
                pos_weight: outcome.pos_weight,
                best_epoch: outcome.best_epoch,
                epochs_run: outcome.history.len(),
                threshold: outcome.model.threshold,
                best_val_auc,
            },
        );
    }
    write_json(&dir.join(TRAIN_CLF_REPORT_FILE), &summaries)?;
    Ok(summaries)
}

/// Test-split classification metrics for both domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationArtifact {
    pub split: String,
    pub domains: BTreeMap<String, ClassificationReport>,
}

fn classification_table(artifact: &ClassificationArtifact) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "frozen-embedding classification ({} split)", artifact.split);
    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "{:<12}{:>8}{:>8}{:>10}{:>11}{:>8}{:>11}",
        "domain", "auc", "f1", "accuracy", "precision", "recall", "threshold"
    );
    for (domain, r) in &artifact.domains {
        let _ = writeln!(
            t,
            "{:<12}{:>8.3}{:>8.3}{:>10.3}{:>11.3}{:>8.3}{:>11.3}",
            domain, r.auc, r.f1, r.accuracy, r.precision, r.recall, r.threshold
        );
    }
    t
}

/// Evaluate both saved classifiers on the test split and write JSON plus
/// a plaintext table.
pub fn run_eval_clf(config: &RunConfig) -> Result<ClassificationArtifact, PipelineError> {
    let dir = prepare_output(config)?;
    let (records, _) = import_embeddings_csv(&require(dir.join(EMBEDDINGS_FILE), "embed")?)?;
    let assignment = read_split_csv(&require(dir.join(SPLIT_FILE), "split")?)?;

    let mut domains = BTreeMap::new();
    for domain in [Domain::Organic, Domain::Inorganic] {
        let path = require(dir.join(classifier_file(domain)), "train-clf")?;
        let (model, _) = load_classifier(&path)?;
        let (test_x, test_y) = domain_split_matrix(&records, &assignment, domain, Split::Test);
        if test_x.rows() == 0 {
            return Err(PipelineError::EmptySplit {
                domain: domain.as_str(),
                split: "test",
            });
        }
        let report = evaluate_classifier(&model, &test_x, &test_y)?;
        domains.insert(domain.as_str().to_string(), report);
    }
    let artifact = ClassificationArtifact {
        split: "test".to_string(),
        domains,
    };
    write_json(&dir.join(CLASSIFICATION_JSON_FILE), &artifact)?;
    write_text(
        &dir.join(CLASSIFICATION_TABLE_FILE),
        &classification_table(&artifact),
    )?;
    Ok(artifact)
}

/// Projection choice for [`run_project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectMethod {
    Pca,
    Tsne { perplexity: f64, iterations: usize },
}

/// Project the run's embeddings to 2-D and render an SVG scatter plot;
/// optionally also write the raw coordinates. Returns the number of
/// points drawn.
pub fn run_project(
    config: &RunConfig,
    method: ProjectMethod,
    svg_out: &Path,
    coords_out: Option<&Path>,
) -> Result<usize, PipelineError> {
    let dir = prepare_output(config)?;
    let (records, _) = import_embeddings_csv(&require(dir.join(EMBEDDINGS_FILE), "embed")?)?;
    let features: Vec<Vec<f64>> = records.iter().map(|r| r.embedding.clone()).collect();
    let matrix = Matrix::from_rows(&features);
    let projection = match method {
        ProjectMethod::Pca => pca_2d(&matrix),
        ProjectMethod::Tsne {
            perplexity,
            iterations,
        } => tsne_2d(
            &matrix,
            perplexity,
            iterations,
            derive_seed(config.train.seed, "project"),
        )?,
    };

    let domains: Vec<Domain> = records.iter().map(|r| r.domain).collect();
    let active: Vec<bool> = records.iter().map(|r| r.active).collect();
    render_scatter_svg(&projection, &domains, &active, svg_out)?;

    if let Some(coords_path) = coords_out {
        let mut table = String::from("record_id,x,y,domain,active\n");
        for (i, r) in records.iter().enumerate() {
            let _ = writeln!(
                table,
                "{},{},{},{},{}",
                r.record_id,
                projection.coordinates.get(i, 0),
                projection.coordinates.get(i, 1),
                r.domain.as_str(),
                r.active
            );
        }
        write_text(coords_path, &table)?;
    }
    Ok(records.len())
}

/// Generate a synthetic corpus into `out_dir`.
pub fn run_synth(config: &SynthConfig, out_dir: &Path) -> Result<(), PipelineError> {
    generate(config)?.write_to(out_dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn small_corpus(dir: &Path, signal: f64, seed: u64) {
        synth::generate(&SynthConfig {
            n_organic: 24,
            n_inorganic: 12,
            n_cell_lines: 4,
            signal_strength: signal,
            label_noise: 0.0,
            seed,
        })
        .unwrap()
        .write_to(dir)
        .unwrap();
    }

    fn config_for(data_dir: &Path, out_dir: &Path) -> RunConfig {
        RunConfig {
            data: DataSection {
                organic: data_dir.join(synth::ORGANIC_FILE),
                inorganic: data_dir.join(synth::INORGANIC_FILE),
                cell_map: data_dir.join(synth::CELL_MAP_FILE),
            },
            train: TrainConfig {
                epochs: 2,
                batch_size: 16,
                ..TrainConfig::default()
            },
            classifier: ClassifierConfig {
                epochs: 4,
                batch_size: 32,
                ..ClassifierConfig::default()
            },
            output: OutputSection {
                directory: out_dir.to_path_buf(),
            },
        }
    }

    #[test]
    fn config_defaults_materialize_and_unknown_keys_fail() {
        let minimal = r#"{
            "data": {"organic": "o.csv", "inorganic": "i.csv", "cell_map": "m.csv"},
            "output": {"directory": "out"}
        }"#;
        let config: RunConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(config.train, TrainConfig::default());
        assert_eq!(config.classifier, ClassifierConfig::default());

        let partial = r#"{
            "data": {"organic": "o.csv", "inorganic": "i.csv", "cell_map": "m.csv"},
            "train": {"epochs": 3},
            "output": {"directory": "out"}
        }"#;
        let config: RunConfig = serde_json::from_str(partial).unwrap();
        assert_eq!(config.train.epochs, 3);
        assert_eq!(config.train.lr, TrainConfig::default().lr);

        for bad in [
            r#"{"data": {"organic": "o", "inorganic": "i", "cell_map": "m"},
                "output": {"directory": "out"}, "extra": 1}"#,
            r#"{"data": {"organic": "o", "inorganic": "i", "cell_map": "m"},
                "train": {"bogus_knob": 1}, "output": {"directory": "out"}}"#,
            r#"{"data": {"organic": "o", "inorganic": "i", "cell_map": "m", "typo": "x"},
                "output": {"directory": "out"}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn load_run_config_validates_hyperparameters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{
                "data": {"organic": "o.csv", "inorganic": "i.csv", "cell_map": "m.csv"},
                "train": {"epochs": 0},
                "output": {"directory": "out"}
            }"#,
        )
        .unwrap();
        assert!(matches!(
            load_run_config(&path),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn records_table_round_trips() {
        let records = vec![
            ActivityRecord {
                record_id: "org-1".into(),
                compound_id: "c1".into(),
                domain: Domain::Organic,
                smiles: "CC(C)O".into(),
                metal: None,
                oxidation_state: None,
                cell_line: "SYN-00".into(),
                raw_value: 12.257000000000001,
                active: true,
            },
            ActivityRecord {
                record_id: "inorg-1".into(),
                compound_id: "c2".into(),
                domain: Domain::Inorganic,
                smiles: "NCCN".into(),
                metal: Some("Ru".into()),
                oxidation_state: Some(-2),
                cell_line: "SYN-01".into(),
                raw_value: 99.5,
                active: false,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RECORDS_FILE);
        write_records_csv(&path, &records).unwrap();
        assert_eq!(read_records_csv(&path).unwrap(), records);
    }

    #[test]
    fn missing_inputs_name_the_producing_stage() {
        let tmp = tempfile::tempdir().unwrap();
        let data_dir = tmp.path().join("data");
        small_corpus(&data_dir, 1.0, 1);
        let config = config_for(&data_dir, &tmp.path().join("run"));

        let err = run_train(&config).unwrap_err();
        assert!(err.to_string().contains("MissingInput"), "{err}");
        assert!(err.to_string().contains("ingest"), "{err}");

        let err = run_embed(&config).unwrap_err();
        assert!(err.to_string().contains("MissingInput"), "{err}");

        run_ingest(&config).unwrap();
        let err = run_train(&config).unwrap_err();
        assert!(err.to_string().contains("split"), "{err}");
    }

    #[test]
    fn ingest_artifacts_are_byte_identical_across_runs() {
        let tmp = tempfile::tempdir().unwrap();
        let data_dir = tmp.path().join("data");
        small_corpus(&data_dir, 0.8, 9);
        let config = config_for(&data_dir, &tmp.path().join("run"));

        run_ingest(&config).unwrap();
        let records_a = std::fs::read(config.output.directory.join(RECORDS_FILE)).unwrap();
        let report_a = std::fs::read(config.output.directory.join(INGEST_REPORT_FILE)).unwrap();
        run_ingest(&config).unwrap();
        let records_b = std::fs::read(config.output.directory.join(RECORDS_FILE)).unwrap();
        let report_b = std::fs::read(config.output.directory.join(INGEST_REPORT_FILE)).unwrap();
        assert_eq!(records_a, records_b);
        assert_eq!(report_a, report_b);
    }

    #[test]
    fn full_pipeline_smoke() {
        let tmp = tempfile::tempdir().unwrap();
        let data_dir = tmp.path().join("data");
        small_corpus(&data_dir, 1.0, 3);
        let config = config_for(&data_dir, &tmp.path().join("run"));
        let out = &config.output.directory;

        let ingest = run_ingest(&config).unwrap();
        assert_eq!(ingest.final_organic_records, 24 * 4);
        assert_eq!(ingest.final_inorganic_records, 12 * 4);
        assert_eq!(ingest.shared_cell_lines, 4);
        assert_eq!(ingest.metal_records_transferred, 0);

        let resolved: RunConfig =
            serde_json::from_str(&std::fs::read_to_string(out.join(RESOLVED_CONFIG_FILE)).unwrap())
                .unwrap();
        assert_eq!(resolved, config);

        let split = run_split(&config).unwrap();
        assert_eq!(
            split.train_compounds + split.val_compounds + split.test_compounds,
            36
        );
        assert_eq!(split.train_compounds, 25);
        assert_eq!(split.val_compounds, 5);
        assert_eq!(split.test_compounds, 6);

        let trained = run_train(&config).unwrap();
        assert_eq!(trained.epochs_run, 2);
        assert!(trained.final_train_loss.is_finite());
        assert!(out.join(BEST_CHECKPOINT).exists());
        let history = std::fs::read_to_string(out.join(HISTORY_FILE)).unwrap();
        assert_eq!(history.lines().count(), 3);

        let (embedded, skipped) = run_embed(&config).unwrap();
        assert_eq!(embedded, 144);
        assert!(skipped.is_empty());

        let alignment = run_eval_align(&config).unwrap();
        assert_eq!(alignment.split, "test");
        assert_eq!(alignment.n_records, split.test_records);
        assert!(alignment.report.alignment_ratio.is_finite());
        let alignment_json: AlignmentArtifact =
            serde_json::from_str(&std::fs::read_to_string(out.join(ALIGNMENT_JSON_FILE)).unwrap())
                .unwrap();
        assert_eq!(alignment_json, alignment);
        let table = std::fs::read_to_string(out.join(ALIGNMENT_TABLE_FILE)).unwrap();
        assert!(table.contains("alignment_ratio"));
        assert!(table.contains("IA"));

        let clf = run_train_clf(&config).unwrap();
        assert_eq!(clf.len(), 2);
        assert!(out.join(classifier_file(Domain::Organic)).exists());
        assert!(out.join(classifier_file(Domain::Inorganic)).exists());

        let eval = run_eval_clf(&config).unwrap();
        assert_eq!(eval.domains.len(), 2);
        for report in eval.domains.values() {
            assert!((0.0..=1.0).contains(&report.auc));
            assert!((0.0..=1.0).contains(&report.accuracy));
        }
        let table = std::fs::read_to_string(out.join(CLASSIFICATION_TABLE_FILE)).unwrap();
        assert!(table.contains("organic"));
        assert!(table.contains("inorganic"));

        let svg_path = out.join("fig.svg");
        let coords_path = out.join("coords.csv");
        let n = run_project(&config, ProjectMethod::Pca, &svg_path, Some(&coords_path)).unwrap();
        assert_eq!(n, 144);
        let svg = std::fs::read_to_string(&svg_path).unwrap();
        assert!(svg.starts_with("<svg "));
        let coords = std::fs::read_to_string(&coords_path).unwrap();
        assert_eq!(coords.lines().count(), 145);
        assert!(coords.starts_with("record_id,x,y,domain,active\n"));

        let tsne_path = out.join("fig_tsne.svg");
        let n = run_project(
            &config,
            ProjectMethod::Tsne {
                perplexity: 8.0,
                iterations: 40,
            },
            &tsne_path,
            None,
        )
        .unwrap();
        assert_eq!(n, 144);
        assert!(tsne_path.exists());
    }
}
