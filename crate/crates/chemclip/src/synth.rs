//! Seeded synthetic corpora with a planted structure-activity rule.
//!
//! Molecules are random alkyl/aryl chains; half of them carry a
//! pharmacophore fragment (a nitro or carboxyl group, one per cell-line
//! family). A record is active with probability 1/2 + s/2 when its
//! molecule carries a pharmacophore and 1/2 - s/2 otherwise, so the
//! planted signal is visible to circular fingerprints, activity labels
//! stay balanced, and s = 0 yields labels independent of structure.
//! Label noise flips the intended label before the raw value is drawn, so
//! the threshold rule on the emitted value is always exact.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, SplitMix64};
use crate::smiles::TRACKED_METALS;

/// File name for the organic activity table inside an output directory.
pub const ORGANIC_FILE: &str = "organic.csv";
/// File name for the inorganic activity table.
pub const INORGANIC_FILE: &str = "inorganic.csv";
/// File name for the cell-line name map.
pub const CELL_MAP_FILE: &str = "cell_lines.csv";

/// Pharmacophore fragments, one per cell-line family. Both drive
/// activity across the whole panel; the family only decides which
/// fragment a compound may carry.
pub const PHARMACOPHORES: [&str; 2] = ["N(=O)=O", "C(=O)O"];

/// Sampling weights for [`TRACKED_METALS`] (alphabetical symbol order):
/// ruthenium 52%, titanium 17.6%, iridium 9.9%, the remaining seven split
/// the rest uniformly.
const METAL_WEIGHTS: [f64; 10] = [
    0.205 / 7.0, // Au
    0.205 / 7.0, // Co
    0.205 / 7.0, // Cu
    0.099,       // Ir
    0.205 / 7.0, // Os
    0.205 / 7.0, // Pt
    0.205 / 7.0, // Re
    0.205 / 7.0, // Rh
    0.52,        // Ru
    0.176,       // Ti
];

/// A common oxidation state per tracked metal, index-aligned with
/// [`TRACKED_METALS`].
const OXIDATION_STATES: [i32; 10] = [3, 3, 2, 3, 2, 2, 1, 3, 2, 4];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters for corpus generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_organic: usize,
    pub n_inorganic: usize,
    pub n_cell_lines: usize,
    /// Structure-activity signal strength in [0, 1]; 0 plants no signal,
    /// 1 makes activity a deterministic function of fragment presence.
    pub signal_strength: f64,
    /// Per-record probability of flipping the intended label.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            n_organic: 2000,
            n_inorganic: 400,
            n_cell_lines: 10,
            signal_strength: 0.9,
            label_noise: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, count) in [
            ("n_organic", self.n_organic),
            ("n_inorganic", self.n_inorganic),
            ("n_cell_lines", self.n_cell_lines),
        ] {
            if count < 4 {
                return Err(SynthError::Config(format!("{name} must be >= 4, got {count}")));
            }
        }
        for (name, value) in [
            ("signal_strength", self.signal_strength),
            ("label_noise", self.label_noise),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Config(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Generated corpus as CSV documents matching the ingestion schemas.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub organic_csv: String,
    pub inorganic_csv: String,
    pub cell_map_csv: String,
}

impl SynthCorpus {
    /// Write the three tables into `dir` (created if missing).
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(ORGANIC_FILE), &self.organic_csv)?;
        std::fs::write(dir.join(INORGANIC_FILE), &self.inorganic_csv)?;
        std::fs::write(dir.join(CELL_MAP_FILE), &self.cell_map_csv)?;
        Ok(())
    }
}

/// Random alkyl backbone, occasionally branched or capped with a phenyl
/// ring. Uses only carbon, so fragment presence is the molecule's sole
/// heteroatom signal.
fn random_backbone(rng: &mut SplitMix64) -> String {
    let len = 3 + rng.below(5);
    let mut s = String::new();
    for pos in 0..len {
        s.push('C');
        if pos > 0 && pos + 1 < len && rng.chance(0.25) {
            s.push_str("(C)");
        }
    }
    if rng.chance(0.3) {
        s.push_str("c1ccccc1");
    }
    s
}

/// A molecule and whether it carries a pharmacophore.
fn random_molecule(rng: &mut SplitMix64) -> (String, bool) {
    let mut smiles = random_backbone(rng);
    let family = rng.below(PHARMACOPHORES.len());
    let has_fragment = rng.chance(0.5);
    if has_fragment {
        smiles.push_str(PHARMACOPHORES[family]);
    }
    (smiles, has_fragment)
}

/// Intended label from the planted rule, then an independent noise flip.
fn draw_label(rng: &mut SplitMix64, has_fragment: bool, config: &SynthConfig) -> bool {
    let p_active = if has_fragment {
        0.5 + config.signal_strength / 2.0
    } else {
        0.5 - config.signal_strength / 2.0
    };
    let mut active = rng.chance(p_active);
    if rng.chance(config.label_noise) {
        active = !active;
    }
    active
}

fn sample_metal(rng: &mut SplitMix64) -> usize {
    let r = rng.next_f64();
    let mut acc = 0.0;
    for (i, w) in METAL_WEIGHTS.iter().enumerate() {
        acc += w;
        if r < acc {
            return i;
        }
    }
    METAL_WEIGHTS.len() - 1
}

/// Generate a seeded corpus: organic and inorganic activity tables plus
/// the cell-line name map. Generation is strictly sequential, so equal
/// configs produce byte-identical documents.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let mut rng = SplitMix64::new(derive_seed(config.seed, "synth"));

    let lines: Vec<(String, String)> = (0..config.n_cell_lines)
        .map(|i| (format!("syn line {i:02}"), format!("SYN-{i:02}")))
        .collect();
    let mut cell_map_csv = String::from("source_name,nci60_name\n");
    for (source, standard) in &lines {
        let _ = writeln!(cell_map_csv, "{source},{standard}");
    }

    let mut organic_csv = String::from("compound_id,smiles,cell_line,gi_mean\n");
    for c in 0..config.n_organic {
        let (smiles, has_fragment) = random_molecule(&mut rng);
        for (source, _) in &lines {
            let active = draw_label(&mut rng, has_fragment, config);
            let gi_mean = if active {
                rng.uniform(5.0, 45.0)
            } else {
                rng.uniform(55.0, 95.0)
            };
            let _ = writeln!(organic_csv, "org-{c:05},{smiles},{source},{gi_mean}");
        }
    }

    let mut inorganic_csv =
        String::from("compound_id,ligand_smiles,metal,oxidation_state,cell_line,ic50_um\n");
    for c in 0..config.n_inorganic {
        let (ligand, has_fragment) = random_molecule(&mut rng);
        let metal_idx = sample_metal(&mut rng);
        let metal = TRACKED_METALS[metal_idx];
        let oxidation = OXIDATION_STATES[metal_idx];
        for (source, _) in &lines {
            let active = draw_label(&mut rng, has_fragment, config);
            let ic50 = if active {
                rng.uniform(0.5, 8.0)
            } else {
                rng.uniform(12.0, 100.0)
            };
            let _ = writeln!(
                inorganic_csv,
                "inorg-{c:05},{ligand},{metal},{oxidation},{source},{ic50}"
            );
        }
    }

    Ok(SynthCorpus {
        organic_csv,
        inorganic_csv,
        cell_map_csv,
    })
}
