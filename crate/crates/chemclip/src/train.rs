//! Training loop: pair sampling, hard-negative mining, optimization, and
//! per-epoch checkpointing with best-validation tracking.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{self, CheckpointError};
use crate::data::ActivityRecord;
use crate::featurize::{featurize_inorganic, featurize_organic, Domain, FeaturizeError};
use crate::model::{
    total_loss, ChemClipModel, ModelError, PairBatch, TripletSet, TRIPLET_MARGIN,
};
use crate::nn::{clip_grad_norm, AdamWState, Matrix};
use crate::rng::{derive_seed, SplitMix64};

/// File name of the rolling per-epoch checkpoint.
pub const LAST_CHECKPOINT: &str = "last.cclp";
/// File name of the best-validation checkpoint.
pub const BEST_CHECKPOINT: &str = "best.cclp";

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("no inorganic training records after featurization")]
    EmptyTrainingSet,
    #[error("no organic training records after featurization")]
    NoOrganicRecords,
}

/// All training hyperparameters. Serialized as the checkpoint trailer so a
/// saved model carries its own provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub clip_norm: f64,
    pub dropout: f64,
    pub tau: f64,
    pub triplet_margin: f64,
    /// Prefer organic partners whose activity label matches the anchor.
    /// Off = the literal "any record from the same cell line" rule.
    pub pair_prefer_activity: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 128,
            lr: 1e-3,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            clip_norm: 1.0,
            dropout: 0.1,
            tau: 0.07,
            triplet_margin: TRIPLET_MARGIN,
            pair_prefer_activity: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive: [(&str, f64); 6] = [
            ("epochs", self.epochs as f64),
            ("batch_size", self.batch_size as f64),
            ("lr", self.lr),
            ("clip_norm", self.clip_norm),
            ("tau", self.tau),
            ("triplet_margin", self.triplet_margin),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(TrainError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.weight_decay < 0.0 {
            return Err(TrainError::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainError::Config(format!(
                "dropout must be in [0,1), got {}",
                self.dropout
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(TrainError::Config(format!("{name} must be in [0,1), got {b}")));
            }
        }
        Ok(())
    }
}

/// One domain's records, featurized once so the training loop only moves
/// row indices around.
#[derive(Debug, Clone)]
pub struct DomainSet {
    pub domain: Domain,
    pub record_ids: Vec<String>,
    pub compound_ids: Vec<String>,
    pub cell_lines: Vec<String>,
    pub active: Vec<bool>,
    pub features: Matrix,
}

impl DomainSet {
    pub fn len(&self) -> usize {
        self.record_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record_ids.is_empty()
    }

    /// Featurize every record of `domain` in input order. Records whose
    /// structure cannot be featurized (e.g. an empty ligand left behind by
    /// metal-complex transfer) are skipped; their ids are returned so the
    /// caller can warn. Unknown metals are a data-integrity failure and
    /// propagate as errors.
    pub fn build(
        records: &[ActivityRecord],
        domain: Domain,
    ) -> Result<(DomainSet, Vec<String>), FeaturizeError> {
        let mut record_ids = Vec::new();
        let mut compound_ids = Vec::new();
        let mut cell_lines = Vec::new();
        let mut active = Vec::new();
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for rec in records.iter().filter(|r| r.domain == domain) {
            let featurized = match domain {
                Domain::Organic => featurize_organic(&rec.smiles),
                Domain::Inorganic => featurize_inorganic(
                    &rec.smiles,
                    rec.metal.as_deref().unwrap_or(""),
                    rec.oxidation_state.unwrap_or(0),
                ),
            };
            match featurized {
                Ok(fv) => {
                    record_ids.push(rec.record_id.clone());
                    compound_ids.push(rec.compound_id.clone());
                    cell_lines.push(rec.cell_line.clone());
                    active.push(rec.active);
                    rows.push(fv.values);
                }
                Err(FeaturizeError::Smiles(_)) => skipped.push(rec.record_id.clone()),
                Err(e @ FeaturizeError::UnknownMetal { .. }) => return Err(e),
            }
        }
        let dim = domain.input_dim();
        let mut features = Matrix::zeros(rows.len(), dim);
        for (i, row) in rows.iter().enumerate() {
            features.row_mut(i).copy_from_slice(row);
        }
        Ok((
            DomainSet {
                domain,
                record_ids,
                compound_ids,
                cell_lines,
                active,
                features,
            },
            skipped,
        ))
    }
}

/// Organic rows grouped by cell line and activity, for partner lookup.
#[derive(Debug, Clone)]
pub struct PartnerIndex {
    by_cell: BTreeMap<String, (Vec<usize>, Vec<usize>)>,
}

impl PartnerIndex {
    pub fn build(organic: &DomainSet) -> Self {
        let mut by_cell: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for i in 0..organic.len() {
            let entry = by_cell.entry(organic.cell_lines[i].clone()).or_default();
            if organic.active[i] {
                entry.0.push(i);
            } else {
                entry.1.push(i);
            }
        }
        PartnerIndex { by_cell }
    }

    fn candidates(&self, cell_line: &str) -> Option<&(Vec<usize>, Vec<usize>)> {
        self.by_cell.get(cell_line)
    }
}

/// Pair each anchor (a row index into `inorganic`) with one organic record
/// from the same cell line, drawn uniformly but preferring a matching
/// activity label when `prefer_activity` is set. Anchors whose cell line has
/// no organic record at all are skipped; their record ids are returned.
pub fn sample_pair_batch(
    inorganic: &DomainSet,
    organic: &DomainSet,
    index: &PartnerIndex,
    anchors: &[usize],
    prefer_activity: bool,
    rng: &mut SplitMix64,
) -> (PairBatch, Vec<String>) {
    let mut rows_i = Vec::new();
    let mut rows_o = Vec::new();
    let mut cell_lines = Vec::new();
    let mut inorganic_active = Vec::new();
    let mut organic_active = Vec::new();
    let mut skipped = Vec::new();
    for &a in anchors {
        let cell = &inorganic.cell_lines[a];
        let Some((active_pool, inactive_pool)) = index.candidates(cell) else {
            skipped.push(inorganic.record_ids[a].clone());
            continue;
        };
        let matching = if inorganic.active[a] {
            active_pool
        } else {
            inactive_pool
        };
        let pool: Vec<usize> = if prefer_activity && !matching.is_empty() {
            matching.clone()
        } else {
            active_pool.iter().chain(inactive_pool).copied().collect()
        };
        if pool.is_empty() {
            skipped.push(inorganic.record_ids[a].clone());
            continue;
        }
        let o = pool[rng.below(pool.len())];
        rows_i.push(inorganic.features.row(a).to_vec());
        rows_o.push(organic.features.row(o).to_vec());
        cell_lines.push(cell.clone());
        inorganic_active.push(inorganic.active[a]);
        organic_active.push(organic.active[o]);
    }
    let b = cell_lines.len();
    let batch = PairBatch {
        inorganic_features: if b == 0 {
            Matrix::zeros(0, inorganic.features.cols())
        } else {
            Matrix::from_rows(&rows_i)
        },
        organic_features: if b == 0 {
            Matrix::zeros(0, organic.features.cols())
        } else {
            Matrix::from_rows(&rows_o)
        },
        cell_lines,
        inorganic_active,
        organic_active,
    };
    (batch, skipped)
}

/// For each active inorganic row of the batch, emit one triplet built from
/// batch-visible organics of the same cell line: a uniformly sampled active
/// positive and inactive (hard) negative. Anchors lacking either candidate
/// contribute nothing.
pub fn mine_hard_triplets(batch: &PairBatch, margin: f64, rng: &mut SplitMix64) -> TripletSet {
    let mut set = TripletSet {
        margin,
        ..TripletSet::default()
    };
    for a in 0..batch.len() {
        if !batch.inorganic_active[a] {
            continue;
        }
        let cell = &batch.cell_lines[a];
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for j in 0..batch.len() {
            if &batch.cell_lines[j] == cell {
                if batch.organic_active[j] {
                    positives.push(j);
                } else {
                    negatives.push(j);
                }
            }
        }
        if positives.is_empty() || negatives.is_empty() {
            continue;
        }
        set.anchors.push(a);
        set.positives.push(positives[rng.below(positives.len())]);
        set.negatives.push(negatives[rng.below(negatives.len())]);
    }
    set
}

/// Loss history of one epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_info_nce: f64,
    pub train_triplet: f64,
    /// NaN when the validation set yields no batches.
    pub val_info_nce: f64,
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Model restored to the best-validation epoch.
    pub model: ChemClipModel,
    pub history: Vec<EpochStats>,
    /// 1-based epoch whose weights `model` carries.
    pub best_epoch: usize,
    /// Records dropped because featurization or pairing was impossible.
    pub skipped_records: Vec<String>,
}

/// Run the full contrastive training loop.
///
/// Each epoch shuffles the inorganic records, pairs every batch, mines
/// hard-negative triplets within the batch, and applies a clipped AdamW
/// step. When `checkpoint_dir` is given, the model is checkpointed every
/// epoch ([`LAST_CHECKPOINT`]) and the best-validation weights are kept in
/// [`BEST_CHECKPOINT`]. If the validation set yields no batches, the best
/// epoch is tracked on training loss instead.
pub fn train(
    config: &TrainConfig,
    train_records: &[ActivityRecord],
    val_records: &[ActivityRecord],
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let mut skipped_records = Vec::new();

    let (train_inorg, skipped) = DomainSet::build(train_records, Domain::Inorganic)?;
    skipped_records.extend(skipped);
    let (train_org, skipped) = DomainSet::build(train_records, Domain::Organic)?;
    skipped_records.extend(skipped);
    let (val_inorg, skipped) = DomainSet::build(val_records, Domain::Inorganic)?;
    skipped_records.extend(skipped);
    let (val_org, skipped) = DomainSet::build(val_records, Domain::Organic)?;
    skipped_records.extend(skipped);
    if train_inorg.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if train_org.is_empty() {
        return Err(TrainError::NoOrganicRecords);
    }
    for id in &skipped_records {
        eprintln!("warning: skipping record {id}: featurization failed");
    }

    let train_index = PartnerIndex::build(&train_org);
    let val_index = PartnerIndex::build(&val_org);

    // Fixed validation pairing so the metric is comparable across epochs.
    let mut val_rng = SplitMix64::new(derive_seed(config.seed, "val-pairs"));
    let mut val_anchor_order: Vec<usize> = (0..val_inorg.len()).collect();
    val_rng.shuffle(&mut val_anchor_order);
    let mut val_batches = Vec::new();
    for chunk in val_anchor_order.chunks(config.batch_size.max(1)) {
        let (batch, skipped) = sample_pair_batch(
            &val_inorg,
            &val_org,
            &val_index,
            chunk,
            config.pair_prefer_activity,
            &mut val_rng,
        );
        skipped_records.extend(skipped);
        if batch.len() >= 2 {
            val_batches.push(batch);
        }
    }

    let mut model = ChemClipModel::new(derive_seed(config.seed, "model-init"), config.dropout);
    model.temperature = config.tau;
    let mut opt = AdamWState::new(&model.param_sizes(), config.lr, config.weight_decay);
    opt.beta1 = config.beta1;
    opt.beta2 = config.beta2;

    let mut epoch_rng = SplitMix64::new(derive_seed(config.seed, "train-epochs"));
    let mut history = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_monitor = f64::INFINITY;
    let mut best_model = model.clone();
    let mut pairing_warned = false;

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_inorg.len()).collect();
        epoch_rng.shuffle(&mut order);
        let mut epoch_total = 0.0;
        let mut epoch_nce = 0.0;
        let mut epoch_triplet = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let (batch, skipped) = sample_pair_batch(
                &train_inorg,
                &train_org,
                &train_index,
                chunk,
                config.pair_prefer_activity,
                &mut epoch_rng,
            );
            if !skipped.is_empty() && !pairing_warned {
                eprintln!(
                    "warning: {} record(s) have no organic partner in their cell line \
                     and are skipped when sampled (first: {})",
                    skipped.len(),
                    skipped[0]
                );
                pairing_warned = true;
            }
            if batch.is_empty() {
                continue;
            }
            let triplets = mine_hard_triplets(&batch, config.triplet_margin, &mut epoch_rng);
            let (breakdown, mut grads) =
                total_loss(&model, &batch, &triplets, true, &mut epoch_rng)?;
            clip_grad_norm(&mut grads.slices_mut(), config.clip_norm);
            opt.step(&mut model.param_slices_mut(), &grads.slices());
            epoch_total += breakdown.total;
            epoch_nce += breakdown.info_nce;
            epoch_triplet += breakdown.triplet;
            n_batches += 1;
        }
        let denom = n_batches.max(1) as f64;
        let train_loss = epoch_total / denom;

        let mut val_loss = f64::NAN;
        if !val_batches.is_empty() {
            let mut sum = 0.0;
            let mut quiet = SplitMix64::new(0);
            for batch in &val_batches {
                let (breakdown, _) =
                    total_loss(&model, batch, &TripletSet::empty(), false, &mut quiet)?;
                sum += breakdown.info_nce;
            }
            val_loss = sum / val_batches.len() as f64;
        }

        history.push(EpochStats {
            epoch,
            train_loss,
            train_info_nce: epoch_nce / denom,
            train_triplet: epoch_triplet / denom,
            val_info_nce: val_loss,
        });

        let monitor = if val_loss.is_nan() { train_loss } else { val_loss };
        let improved = monitor < best_monitor;
        if improved || best_epoch == 0 {
            best_monitor = monitor;
            best_epoch = epoch;
            best_model = model.clone();
        }
        if let Some(dir) = checkpoint_dir {
            checkpoint::save_checkpoint(&dir.join(LAST_CHECKPOINT), &model, config)?;
            if improved || epoch == 1 {
                checkpoint::save_checkpoint(&dir.join(BEST_CHECKPOINT), &best_model, config)?;
            }
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        history,
        best_epoch,
        skipped_records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityRecord;
    use tempfile::tempdir;

    fn organic(id: usize, smiles: &str, cell: &str, active: bool) -> ActivityRecord {
        ActivityRecord {
            record_id: format!("org-{id}"),
            compound_id: format!("OC{id}"),
            domain: Domain::Organic,
            smiles: smiles.to_string(),
            metal: None,
            oxidation_state: None,
            cell_line: cell.to_string(),
            raw_value: if active { 20.0 } else { 80.0 },
            active,
        }
    }

    fn inorganic(id: usize, ligand: &str, metal: &str, cell: &str, active: bool) -> ActivityRecord {
        ActivityRecord {
            record_id: format!("inorg-{id}"),
            compound_id: format!("IC{id}"),
            domain: Domain::Inorganic,
            smiles: ligand.to_string(),
            metal: Some(metal.to_string()),
            oxidation_state: Some(2),
            cell_line: cell.to_string(),
            raw_value: if active { 2.0 } else { 60.0 },
            active,
        }
    }

    /// Tiny but chemically varied corpus over two cell lines.
    fn toy_records() -> Vec<ActivityRecord> {
        let organics = [
            "CCO", "CCC", "c1ccccc1", "CC(=O)O", "CCN", "CCCl", "C1CCCCC1", "CC(C)O",
            "CCOC", "CCS", "c1ccncc1", "CC#N",
        ];
        let ligands = ["NCCN", "CCO", "c1ccncc1", "CC(=O)O", "NCCO", "CN"];
        let metals = ["Ru", "Pt", "Ti", "Ir", "Cu", "Co"];
        let mut records = Vec::new();
        let mut id = 0;
        for (i, s) in organics.iter().enumerate() {
            for cell in ["A549", "MCF7"] {
                records.push(organic(id, s, cell, i % 2 == 0));
                id += 1;
            }
        }
        for (i, l) in ligands.iter().enumerate() {
            for cell in ["A549", "MCF7"] {
                records.push(inorganic(id, l, metals[i], cell, i % 2 == 0));
                id += 1;
            }
        }
        records
    }

    #[test]
    fn default_config_matches_published_recipe() {
        let c = TrainConfig::default();
        assert_eq!(c.epochs, 100);
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.lr, 1e-3);
        assert_eq!(c.weight_decay, 0.01);
        assert_eq!((c.beta1, c.beta2), (0.9, 0.999));
        assert_eq!(c.clip_norm, 1.0);
        assert_eq!(c.dropout, 0.1);
        assert_eq!(c.tau, 0.07);
        assert_eq!(c.triplet_margin, 0.2);
        assert!(c.pair_prefer_activity);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        for mutate in [
            (|c: &mut TrainConfig| c.epochs = 0) as fn(&mut TrainConfig),
            |c| c.batch_size = 0,
            |c| c.lr = 0.0,
            |c| c.tau = -0.07,
            |c| c.dropout = 1.0,
            |c| c.weight_decay = -0.1,
            |c| c.beta1 = 1.0,
        ] {
            let mut c = TrainConfig::default();
            mutate(&mut c);
            assert!(matches!(c.validate(), Err(TrainError::Config(_))));
        }
    }

    #[test]
    fn domain_set_preserves_order_and_skips_bad_ligands() {
        let mut records = toy_records();
        records.push(ActivityRecord {
            smiles: String::new(),
            ..inorganic(999, "", "Pt", "A549", true)
        });
        let (set, skipped) = DomainSet::build(&records, Domain::Inorganic).unwrap();
        assert_eq!(skipped, vec!["inorg-999"]);
        assert_eq!(set.len(), 12);
        assert_eq!(set.features.cols(), Domain::Inorganic.input_dim());
        assert_eq!(set.record_ids[0], "inorg-24");
        // Metal block is populated.
        assert!(set.features.row(0)[2048..].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn single_partner_is_always_chosen() {
        let records = vec![
            inorganic(0, "NCCN", "Pt", "A549", true),
            organic(1, "CCO", "A549", false),
        ];
        let (inorg, _) = DomainSet::build(&records, Domain::Inorganic).unwrap();
        let (org, _) = DomainSet::build(&records, Domain::Organic).unwrap();
        let index = PartnerIndex::build(&org);
        let mut rng = SplitMix64::new(1);
        for _ in 0..50 {
            let (batch, skipped) = sample_pair_batch(&inorg, &org, &index, &[0], true, &mut rng);
            assert!(skipped.is_empty());
            assert_eq!(batch.len(), 1);
            assert_eq!(batch.organic_features.row(0), org.features.row(0));
            assert!(!batch.organic_active[0]);
        }
    }

    #[test]
    fn active_anchor_prefers_active_partner() {
        let records = vec![
            inorganic(0, "NCCN", "Pt", "A549", true),
            organic(1, "CCO", "A549", true),
            organic(2, "CCC", "A549", false),
            organic(3, "CCN", "A549", false),
        ];
        let (inorg, _) = DomainSet::build(&records, Domain::Inorganic).unwrap();
        let (org, _) = DomainSet::build(&records, Domain::Organic).unwrap();
        let index = PartnerIndex::build(&org);
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let (batch, _) = sample_pair_batch(&inorg, &org, &index, &[0], true, &mut rng);
            assert!(batch.organic_active[0], "preference rule violated");
        }
        // Without preference the inactive majority shows up.
        let mut saw_inactive = false;
        for _ in 0..1000 {
            let (batch, _) = sample_pair_batch(&inorg, &org, &index, &[0], false, &mut rng);
            saw_inactive |= !batch.organic_active[0];
        }
        assert!(saw_inactive);
    }

    #[test]
    fn pairs_never_cross_cell_lines() {
        let records = vec![
            inorganic(0, "NCCN", "Pt", "A549", true),
            inorganic(1, "CCO", "Ru", "MCF7", false),
            organic(2, "CCO", "A549", true),
            organic(3, "CCC", "MCF7", false),
        ];
        let (inorg, _) = DomainSet::build(&records, Domain::Inorganic).unwrap();
        let (org, _) = DomainSet::build(&records, Domain::Organic).unwrap();
        let index = PartnerIndex::build(&org);
        let mut rng = SplitMix64::new(3);
        for _ in 0..200 {
            let (batch, _) = sample_pair_batch(&inorg, &org, &index, &[0, 1], true, &mut rng);
            assert_eq!(batch.cell_lines, vec!["A549", "MCF7"]);
            assert_eq!(batch.organic_features.row(0), org.features.row(0));
            assert_eq!(batch.organic_features.row(1), org.features.row(1));
        }
    }

    #[test]
    fn anchor_without_partner_is_skipped_with_id() {
        let records = vec![
            inorganic(0, "NCCN", "Pt", "HELA", true),
            inorganic(1, "CCO", "Ru", "A549", true),
            organic(2, "CCO", "A549", true),
        ];
        let (inorg, _) = DomainSet::build(&records, Domain::Inorganic).unwrap();
        let (org, _) = DomainSet::build(&records, Domain::Organic).unwrap();
        let index = PartnerIndex::build(&org);
        let mut rng = SplitMix64::new(3);
        let (batch, skipped) = sample_pair_batch(&inorg, &org, &index, &[0, 1], true, &mut rng);
        assert_eq!(batch.len(), 1);
        assert_eq!(skipped, vec!["inorg-0"]);
        assert_eq!(batch.cell_lines, vec!["A549"]);
    }

    fn mining_batch() -> PairBatch {
        PairBatch {
            inorganic_features: Matrix::zeros(4, 3),
            organic_features: Matrix::zeros(4, 3),
            cell_lines: vec![
                "A549".into(),
                "A549".into(),
                "MCF7".into(),
                "MCF7".into(),
            ],
            inorganic_active: vec![true, false, true, false],
            organic_active: vec![true, false, true, true],
        }
    }

    #[test]
    fn mining_emits_valid_triplets() {
        let batch = mining_batch();
        let mut rng = SplitMix64::new(5);
        for _ in 0..1000 {
            let set = mine_hard_triplets(&batch, 0.2, &mut rng);
            // Anchor 0 (A549, active) has positive row 0 and negative row 1.
            // Anchor 2 (MCF7, active) has positives but no inactive organic,
            // so it is skipped.
            assert_eq!(set.len(), 1);
            assert_eq!(set.margin, 0.2);
            let (a, p, n) = (set.anchors[0], set.positives[0], set.negatives[0]);
            assert!(batch.inorganic_active[a]);
            assert!(batch.organic_active[p]);
            assert!(!batch.organic_active[n]);
            assert_eq!(batch.cell_lines[a], batch.cell_lines[p]);
            assert_eq!(batch.cell_lines[a], batch.cell_lines[n]);
        }
    }

    #[test]
    fn mining_without_active_anchor_is_empty() {
        let mut batch = mining_batch();
        batch.inorganic_active = vec![false; 4];
        let mut rng = SplitMix64::new(5);
        assert!(mine_hard_triplets(&batch, 0.2, &mut rng).is_empty());
    }

    /// Every fifth record held out, so validation sees both domains.
    fn split_toy() -> (Vec<ActivityRecord>, Vec<ActivityRecord>) {
        let records = toy_records();
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for (i, r) in records.into_iter().enumerate() {
            if i % 5 == 0 {
                val.push(r);
            } else {
                train.push(r);
            }
        }
        (train, val)
    }

    #[test]
    fn smoke_train_two_epochs() {
        let (train, val) = split_toy();
        let config = TrainConfig {
            epochs: 2,
            batch_size: 8,
            seed: 11,
            ..TrainConfig::default()
        };
        let dir = tempdir().unwrap();
        let outcome = train_checked(&config, &train, &val, Some(dir.path()));
        assert_eq!(outcome.history.len(), 2);
        for e in &outcome.history {
            assert!(e.train_loss.is_finite());
            assert!(e.val_info_nce.is_finite());
        }
        assert!(outcome.best_epoch >= 1);
        assert!(dir.path().join(LAST_CHECKPOINT).exists());
        assert!(dir.path().join(BEST_CHECKPOINT).exists());
    }

    fn train_checked(
        config: &TrainConfig,
        train_records: &[ActivityRecord],
        val_records: &[ActivityRecord],
        dir: Option<&Path>,
    ) -> TrainOutcome {
        train(config, train_records, val_records, dir).expect("training failed")
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let (train_recs, val) = split_toy();
        let config = TrainConfig {
            epochs: 2,
            batch_size: 8,
            seed: 42,
            ..TrainConfig::default()
        };
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        train_checked(&config, &train_recs, &val, Some(d1.path()));
        train_checked(&config, &train_recs, &val, Some(d2.path()));
        let b1 = std::fs::read(d1.path().join(BEST_CHECKPOINT)).unwrap();
        let b2 = std::fs::read(d2.path().join(BEST_CHECKPOINT)).unwrap();
        assert_eq!(b1, b2);
        assert!(!b1.is_empty());

        let c3 = TrainConfig { seed: 43, ..config };
        let d3 = tempdir().unwrap();
        train_checked(&c3, &train_recs, &val, Some(d3.path()));
        let b3 = std::fs::read(d3.path().join(BEST_CHECKPOINT)).unwrap();
        assert_ne!(b1, b3);
    }

    #[test]
    fn loss_decreases_on_toy_corpus() {
        let records = toy_records();
        let config = TrainConfig {
            epochs: 10,
            batch_size: 12,
            seed: 5,
            ..TrainConfig::default()
        };
        let outcome = train_checked(&config, &records, &[], None);
        let first = outcome.history.first().unwrap().train_loss;
        let last = outcome.history.last().unwrap().train_loss;
        assert!(last < first, "no learning: first {first}, last {last}");
        // Without validation batches the monitor falls back to train loss.
        assert!(outcome.history.iter().all(|e| e.val_info_nce.is_nan()));
        assert!(outcome.best_epoch >= 1);
    }

    #[test]
    fn training_without_inorganics_errors() {
        let records: Vec<ActivityRecord> =
            (0..4).map(|i| organic(i, "CCO", "A549", true)).collect();
        let config = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&config, &records, &[], None),
            Err(TrainError::EmptyTrainingSet)
        ));
    }
}
