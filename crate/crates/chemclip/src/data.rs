//! Corpus ingestion and preparation: CSV loading with activity thresholds,
//! cell-line standardization, metal-record transfer, compound-based splits,
//! and inactive subsampling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::featurize::Domain;
use crate::rng::{derive_seed, SplitMix64};
use crate::smiles::{parse_smiles, write_smiles};

/// Organic activity threshold: mean growth inhibition below this is active.
pub const GI_ACTIVE_BELOW: f64 = 50.0;
/// Inorganic activity threshold: IC50 in uM below this is active.
pub const IC50_ACTIVE_BELOW: f64 = 10.0;
/// Train/val/test fractions by unique compound.
pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.70, 0.15, 0.15);
/// Inactive:active compound cap used on the organic training portion.
pub const DEFAULT_SUBSAMPLE_RATIO: usize = 5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: String, column: String },
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("{path}:{line}: unknown metal '{symbol}'")]
    UnknownMetal {
        path: String,
        line: u64,
        symbol: String,
    },
}

/// One compound x cell-line screening row.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub record_id: String,
    pub compound_id: String,
    pub domain: Domain,
    /// Full SMILES for organic records; ligand SMILES (metal removed) for
    /// inorganic records.
    pub smiles: String,
    /// Present exactly when domain is inorganic.
    pub metal: Option<String>,
    pub oxidation_state: Option<i32>,
    pub cell_line: String,
    /// Mean GI% for organic rows, IC50 in uM for inorganic rows.
    pub raw_value: f64,
    pub active: bool,
}

impl ActivityRecord {
    /// Domain-specific fields present exactly when the domain matches.
    pub fn domain_fields_consistent(&self) -> bool {
        match self.domain {
            Domain::Organic => self.metal.is_none() && self.oxidation_state.is_none(),
            Domain::Inorganic => self.metal.is_some() && self.oxidation_state.is_some(),
        }
    }
}

/// Rows kept vs dropped by one loader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub kept: usize,
    pub dropped_unparseable_smiles: usize,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>, DataError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io {
                path: path.display().to_string(),
                source,
            },
            other => DataError::MalformedRow {
                path: path.display().to_string(),
                line: 0,
                reason: format!("{other:?}"),
            },
        })
}

fn column_indices(
    reader: &mut csv::Reader<std::fs::File>,
    path: &Path,
    required: &[&str],
) -> Result<Vec<usize>, DataError> {
    let headers = reader.headers().map_err(|e| DataError::MalformedRow {
        path: path.display().to_string(),
        line: 1,
        reason: e.to_string(),
    })?;
    required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| DataError::MissingColumn {
                    path: path.display().to_string(),
                    column: name.to_string(),
                })
        })
        .collect()
}

struct RowReader<'a> {
    path: &'a Path,
    line: u64,
}

impl<'a> RowReader<'a> {
    fn field<'r>(&self, row: &'r csv::StringRecord, idx: usize) -> Result<&'r str, DataError> {
        row.get(idx).ok_or_else(|| DataError::MalformedRow {
            path: self.path.display().to_string(),
            line: self.line,
            reason: "row has fewer fields than the header".to_string(),
        })
    }

    fn f64_field(&self, row: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, DataError> {
        let raw = self.field(row, idx)?;
        raw.parse().map_err(|_| DataError::MalformedRow {
            path: self.path.display().to_string(),
            line: self.line,
            reason: format!("{name} '{raw}' is not a number"),
        })
    }
}

/// Load organic screening rows. Columns: compound_id, smiles, cell_line,
/// gi_mean. A row is active when gi_mean < 50 (strict). Rows whose SMILES
/// does not parse are dropped and counted, not fatal.
pub fn load_organic_csv(path: &Path) -> Result<(Vec<ActivityRecord>, LoadReport), DataError> {
    let mut reader = open_csv(path)?;
    let idx = column_indices(
        &mut reader,
        path,
        &["compound_id", "smiles", "cell_line", "gi_mean"],
    )?;
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let ctx = RowReader { path, line };
        let row = row.map_err(|e| DataError::MalformedRow {
            path: path.display().to_string(),
            line,
            reason: e.to_string(),
        })?;
        let compound_id = ctx.field(&row, idx[0])?.to_string();
        let smiles = ctx.field(&row, idx[1])?.to_string();
        let cell_line = ctx.field(&row, idx[2])?.to_string();
        let gi_mean = ctx.f64_field(&row, idx[3], "gi_mean")?;
        if parse_smiles(&smiles).is_err() {
            report.dropped_unparseable_smiles += 1;
            continue;
        }
        records.push(ActivityRecord {
            record_id: format!("org-{}", i + 1),
            compound_id,
            domain: Domain::Organic,
            smiles,
            metal: None,
            oxidation_state: None,
            cell_line,
            raw_value: gi_mean,
            active: gi_mean < GI_ACTIVE_BELOW,
        });
    }
    report.kept = records.len();
    Ok((records, report))
}

/// Load inorganic screening rows. Columns: compound_id, ligand_smiles,
/// metal, oxidation_state, cell_line, ic50_um. A row is active when
/// ic50_um < 10 (strict). A metal outside the tracked set is a hard error;
/// unparseable ligand SMILES are dropped and counted.
pub fn load_inorganic_csv(path: &Path) -> Result<(Vec<ActivityRecord>, LoadReport), DataError> {
    let mut reader = open_csv(path)?;
    let idx = column_indices(
        &mut reader,
        path,
        &[
            "compound_id",
            "ligand_smiles",
            "metal",
            "oxidation_state",
            "cell_line",
            "ic50_um",
        ],
    )?;
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let ctx = RowReader { path, line };
        let row = row.map_err(|e| DataError::MalformedRow {
            path: path.display().to_string(),
            line,
            reason: e.to_string(),
        })?;
        let compound_id = ctx.field(&row, idx[0])?.to_string();
        let ligand_smiles = ctx.field(&row, idx[1])?.to_string();
        let metal = ctx.field(&row, idx[2])?.to_string();
        let ox_raw = ctx.field(&row, idx[3])?;
        let cell_line = ctx.field(&row, idx[4])?.to_string();
        let ic50_um = ctx.f64_field(&row, idx[5], "ic50_um")?;

        if !crate::smiles::TRACKED_METALS.contains(&metal.as_str()) {
            return Err(DataError::UnknownMetal {
                path: path.display().to_string(),
                line,
                symbol: metal,
            });
        }
        let oxidation_state: i32 = if ox_raw.is_empty() {
            0 // unreported oxidation state
        } else {
            ox_raw
                .strip_prefix('+')
                .unwrap_or(ox_raw)
                .parse()
                .map_err(|_| DataError::MalformedRow {
                    path: path.display().to_string(),
                    line,
                    reason: format!("oxidation_state '{ox_raw}' is not an integer"),
                })?
        };
        if parse_smiles(&ligand_smiles).is_err() {
            report.dropped_unparseable_smiles += 1;
            continue;
        }
        records.push(ActivityRecord {
            record_id: format!("inorg-{}", i + 1),
            compound_id,
            domain: Domain::Inorganic,
            smiles: ligand_smiles,
            metal: Some(metal),
            oxidation_state: Some(oxidation_state),
            cell_line,
            raw_value: ic50_um,
            active: ic50_um < IC50_ACTIVE_BELOW,
        });
    }
    report.kept = records.len();
    Ok((records, report))
}

/// Uppercase and strip spaces, hyphens, and parentheses — the shared key
/// space for cell-line lookup.
pub fn normalize_cell_line(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, ' ' | '-' | '(' | ')'))
        .flat_map(char::to_uppercase)
        .collect()
}

/// Mapping from database-specific cell-line spellings to standard NCI60
/// names. Standard names always map to themselves, so standardization is
/// idempotent.
#[derive(Debug, Clone)]
pub struct CellLineMap {
    lookup: BTreeMap<String, String>,
}

impl CellLineMap {
    pub fn new(entries: impl IntoIterator<Item = (String, String)>) -> CellLineMap {
        let mut lookup = BTreeMap::new();
        for (source, target) in entries {
            lookup.insert(normalize_cell_line(&target), target.clone());
            lookup.insert(normalize_cell_line(&source), target);
        }
        CellLineMap { lookup }
    }

    /// Columns: source_name, nci60_name.
    pub fn from_csv(path: &Path) -> Result<CellLineMap, DataError> {
        let mut reader = open_csv(path)?;
        let idx = column_indices(&mut reader, path, &["source_name", "nci60_name"])?;
        let mut entries = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line = i as u64 + 2;
            let ctx = RowReader { path, line };
            let row = row.map_err(|e| DataError::MalformedRow {
                path: path.display().to_string(),
                line,
                reason: e.to_string(),
            })?;
            entries.push((
                ctx.field(&row, idx[0])?.to_string(),
                ctx.field(&row, idx[1])?.to_string(),
            ));
        }
        Ok(CellLineMap::new(entries))
    }

    pub fn resolve(&self, name: &str) -> Option<&str> {
        self.lookup
            .get(&normalize_cell_line(name))
            .map(String::as_str)
    }

    /// The standard NCI60 vocabulary on the map's right-hand side.
    pub fn standard_names(&self) -> BTreeSet<String> {
        self.lookup.values().cloned().collect()
    }
}

/// Rewrite every record's cell line to its standard NCI60 name; records
/// without a mapping are removed and counted.
pub fn standardize_cell_lines(
    records: Vec<ActivityRecord>,
    map: &CellLineMap,
) -> (Vec<ActivityRecord>, usize) {
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = 0usize;
    for mut record in records {
        match map.resolve(&record.cell_line) {
            Some(standard) => {
                record.cell_line = standard.to_string();
                kept.push(record);
            }
            None => dropped += 1,
        }
    }
    (kept, dropped)
}

/// Restrict both lists to cell lines present in both vocabularies; returns
/// the shared set.
pub fn filter_shared_cell_lines(
    organic: Vec<ActivityRecord>,
    inorganic: Vec<ActivityRecord>,
) -> (Vec<ActivityRecord>, Vec<ActivityRecord>, BTreeSet<String>) {
    let org_lines: BTreeSet<String> = organic.iter().map(|r| r.cell_line.clone()).collect();
    let inorg_lines: BTreeSet<String> = inorganic.iter().map(|r| r.cell_line.clone()).collect();
    let shared: BTreeSet<String> = org_lines.intersection(&inorg_lines).cloned().collect();
    let organic = organic
        .into_iter()
        .filter(|r| shared.contains(&r.cell_line))
        .collect();
    let inorganic = inorganic
        .into_iter()
        .filter(|r| shared.contains(&r.cell_line))
        .collect();
    (organic, inorganic, shared)
}

/// Counters from [`transfer_metal_records`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransferReport {
    pub transferred: usize,
    /// Records that contained more than one tracked metal atom; the first in
    /// atom order was used.
    pub multi_metal: usize,
}

/// Move organic records containing a tracked metal to the inorganic side:
/// metal and oxidation state are read off the first metal atom, and the
/// record's SMILES is rewritten with every tracked-metal atom deleted.
pub fn transfer_metal_records(
    organic: Vec<ActivityRecord>,
) -> (Vec<ActivityRecord>, Vec<ActivityRecord>, TransferReport) {
    let mut stay = Vec::new();
    let mut moved = Vec::new();
    let mut report = TransferReport::default();
    for mut record in organic {
        let Ok(graph) = parse_smiles(&record.smiles) else {
            stay.push(record);
            continue;
        };
        let Some((first_idx, element)) = graph.first_metal() else {
            stay.push(record);
            continue;
        };
        let metal_atoms = graph.metal_atoms();
        if metal_atoms.len() > 1 {
            report.multi_metal += 1;
        }
        let ligand = graph.without_atoms(&metal_atoms);
        record.domain = Domain::Inorganic;
        record.metal = Some(element.symbol().to_string());
        record.oxidation_state = Some(graph.atoms[first_idx].formal_charge);
        record.smiles = write_smiles(&ligand);
        report.transferred += 1;
        moved.push(record);
    }
    (stay, moved, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Split, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compound-level split assignment; every record of a compound follows its
/// compound.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub assignment: BTreeMap<String, Split>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn of(&self, compound_id: &str) -> Option<Split> {
        self.assignment.get(compound_id).copied()
    }

    /// The records belonging to one split, in input order.
    pub fn select<'r>(
        &self,
        records: &'r [ActivityRecord],
        split: Split,
    ) -> Vec<&'r ActivityRecord> {
        records
            .iter()
            .filter(|r| self.of(&r.compound_id) == Some(split))
            .collect()
    }
}

/// Shuffle unique compound ids with a seeded generator and cut at
/// floor(train), floor(val); the remainder is test. Records of one compound
/// never straddle splits.
pub fn compound_split(
    records: &[ActivityRecord],
    seed: u64,
    fractions: (f64, f64, f64),
) -> DatasetSplit {
    let (f_train, f_val, f_test) = fractions;
    assert!(
        f_train >= 0.0 && f_val >= 0.0 && f_test >= 0.0,
        "fractions must be non-negative"
    );
    assert!(
        (f_train + f_val + f_test - 1.0).abs() < 1e-9,
        "fractions must sum to 1"
    );

    // Unique ids in first-appearance order so the shuffle input is stable.
    let mut unique: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in records {
        if seen.insert(r.compound_id.as_str()) {
            unique.push(r.compound_id.as_str());
        }
    }
    let mut rng = SplitMix64::new(derive_seed(seed, "compound-split"));
    rng.shuffle(&mut unique);

    let n = unique.len();
    let n_train = (f_train * n as f64).floor() as usize;
    let n_val = (f_val * n as f64).floor() as usize;
    let mut assignment = BTreeMap::new();
    for (i, id) in unique.iter().enumerate() {
        let split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        assignment.insert(id.to_string(), split);
    }
    DatasetSplit { assignment, seed }
}

/// Cap inactive compounds at `ratio` x the active compound count, sampling
/// uniformly without replacement. A compound counts as active when any of
/// its records is active; kept compounds keep all their records, in input
/// order.
pub fn subsample_inactives(
    records: &[ActivityRecord],
    ratio: usize,
    seed: u64,
) -> Vec<ActivityRecord> {
    let mut active_compounds = BTreeSet::new();
    for r in records {
        if r.active {
            active_compounds.insert(r.compound_id.as_str());
        }
    }
    // Inactive compounds in first-appearance order.
    let mut inactive: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in records {
        if !active_compounds.contains(r.compound_id.as_str())
            && seen.insert(r.compound_id.as_str())
        {
            inactive.push(r.compound_id.as_str());
        }
    }

    let cap = ratio * active_compounds.len();
    let kept_inactive: BTreeSet<&str> = if inactive.len() <= cap {
        inactive.into_iter().collect()
    } else {
        let mut rng = SplitMix64::new(derive_seed(seed, "subsample-inactives"));
        let mut shuffled = inactive;
        rng.shuffle(&mut shuffled);
        shuffled.into_iter().take(cap).collect()
    };

    records
        .iter()
        .filter(|r| {
            active_compounds.contains(r.compound_id.as_str())
                || kept_inactive.contains(r.compound_id.as_str())
        })
        .cloned()
        .collect()
}
