//! Molecular feature vectors: circular (Morgan/ECFP-style) fingerprints for
//! organic molecules, and fingerprint-plus-metal-descriptor vectors for metal
//! complexes.
//!
//! Feature identifiers are FNV-1a 64-bit hashes over little-endian field
//! tuples, so fingerprints are stable across platforms and independent of
//! atom input order.

use std::collections::HashSet;

use thiserror::Error;

use crate::smiles::{parse_smiles, Element, MolGraph, SmilesError, TRACKED_METALS};

/// Fingerprint width used throughout the pipeline.
pub const FP_BITS: usize = 2048;
/// Neighborhood radius used throughout the pipeline.
pub const FP_RADIUS: usize = 2;
/// One-hot metal identity (10) + oxidation state + scaled Z + scaled
/// d-electron count.
pub const METAL_FEATURE_DIM: usize = 13;
/// Input width of the organic encoder.
pub const ORGANIC_DIM: usize = FP_BITS;
/// Input width of the inorganic encoder.
pub const INORGANIC_DIM: usize = FP_BITS + METAL_FEATURE_DIM;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("SMILES parse error: {0}")]
    Smiles(#[from] SmilesError),
    #[error("unknown metal '{symbol}': not one of the ten tracked metals")]
    UnknownMetal { symbol: String },
}

/// Which encoder branch a record feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Organic,
    Inorganic,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Organic => "organic",
            Domain::Inorganic => "inorganic",
        }
    }

    /// Encoder input width for this domain.
    pub fn input_dim(self) -> usize {
        match self {
            Domain::Organic => ORGANIC_DIM,
            Domain::Inorganic => INORGANIC_DIM,
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Domain, String> {
        match s {
            "organic" => Ok(Domain::Organic),
            "inorganic" => Ok(Domain::Inorganic),
            other => Err(format!("unknown domain '{other}'")),
        }
    }
}

/// A dense feature vector ready for the encoder input; length always matches
/// the domain (2048 organic, 2061 inorganic).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub domain: Domain,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A folded binary fingerprint plus the unfolded distinct-feature count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    n_bits: usize,
    blocks: Vec<u64>,
    n_distinct: usize,
}

impl Fingerprint {
    fn new(n_bits: usize) -> Fingerprint {
        Fingerprint {
            n_bits,
            blocks: vec![0u64; n_bits.div_ceil(64)],
            n_distinct: 0,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Number of distinct neighborhood features before folding. Folding can
    /// only collapse bits, so `count_ones() <= n_distinct()`.
    pub fn n_distinct(&self) -> usize {
        self.n_distinct
    }

    pub fn get(&self, idx: usize) -> bool {
        self.blocks[idx / 64] >> (idx % 64) & 1 == 1
    }

    fn set(&mut self, idx: usize) {
        self.blocks[idx / 64] |= 1 << (idx % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.n_bits).filter(|&i| self.get(i)).collect()
    }

    /// 0.0/1.0 vector of width `n_bits`.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.n_bits)
            .map(|i| if self.get(i) { 1.0 } else { 0.0 })
            .collect()
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Initial atom identifiers: hash of (atomic number, heavy degree, total H,
/// formal charge, aromatic flag, ring flag), each serialized little-endian.
pub(crate) fn initial_atom_ids(graph: &MolGraph) -> Vec<u64> {
    (0..graph.atoms.len())
        .map(|a| {
            let atom = &graph.atoms[a];
            let mut bytes = Vec::with_capacity(18);
            bytes.extend_from_slice(&u32::from(atom.element.atomic_number()).to_le_bytes());
            bytes.extend_from_slice(&(graph.heavy_degree(a) as u32).to_le_bytes());
            bytes.extend_from_slice(&graph.total_hydrogens(a).to_le_bytes());
            bytes.extend_from_slice(&atom.formal_charge.to_le_bytes());
            bytes.push(u8::from(atom.aromatic));
            bytes.push(u8::from(atom.in_ring));
            fnv1a64(&bytes)
        })
        .collect()
}

/// Circular fingerprint of `graph`.
///
/// Each round rehashes every atom together with its neighbors' previous
/// identifiers, then folds kept identifiers into `n_bits` bits. Two features
/// are dropped as duplicates: one whose bond environment was already claimed
/// by an earlier feature, and one whose identifier value was already kept.
/// Within a round, candidates are considered in identifier order, which makes
/// the result independent of atom numbering.
pub fn morgan_fingerprint(graph: &MolGraph, radius: usize, n_bits: usize) -> Fingerprint {
    assert!(n_bits > 0, "fingerprint must have at least one bit");
    let n = graph.atoms.len();
    let mut fp = Fingerprint::new(n_bits);
    if n == 0 {
        return fp;
    }

    let mut ids = initial_atom_ids(graph);
    let dist = bond_distances(graph);
    let mut kept: Vec<u64> = Vec::new();
    let mut kept_values: HashSet<u64> = HashSet::new();
    let mut seen_envs: HashSet<Vec<usize>> = HashSet::new();

    // Round 0: plain atom identifiers with empty environments. Exempt from
    // environment dedup, but the empty environment is recorded so that
    // higher-round features covering no bonds (isolated atoms) collapse.
    seen_envs.insert(Vec::new());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| (ids[a], a));
    for &a in &order {
        if kept_values.insert(ids[a]) {
            kept.push(ids[a]);
        }
    }

    // Neighbor lists as (bond code, neighbor atom), reused every round.
    let mut neighbors: Vec<Vec<(u32, usize)>> = vec![Vec::new(); n];
    for bond in &graph.bonds {
        neighbors[bond.a].push((bond.order.code(), bond.b));
        neighbors[bond.b].push((bond.order.code(), bond.a));
    }

    for r in 1..=radius {
        let new_ids: Vec<u64> = (0..n)
            .map(|a| {
                let mut pairs: Vec<(u32, u64)> = neighbors[a]
                    .iter()
                    .map(|&(code, nb)| (code, ids[nb]))
                    .collect();
                pairs.sort_unstable();
                let mut bytes = Vec::with_capacity(12 + pairs.len() * 12);
                bytes.extend_from_slice(&(r as u32).to_le_bytes());
                bytes.extend_from_slice(&ids[a].to_le_bytes());
                for (code, nid) in pairs {
                    bytes.extend_from_slice(&code.to_le_bytes());
                    bytes.extend_from_slice(&nid.to_le_bytes());
                }
                fnv1a64(&bytes)
            })
            .collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| (new_ids[a], a));
        for &a in &order {
            // Bonds whose nearer endpoint lies within r-1 steps of the
            // center.
            let env: Vec<usize> = graph
                .bonds
                .iter()
                .enumerate()
                .filter(|(_, bond)| dist[a][bond.a].min(dist[a][bond.b]) < r)
                .map(|(bi, _)| bi)
                .collect();
            if !seen_envs.insert(env) {
                continue;
            }
            if kept_values.insert(new_ids[a]) {
                kept.push(new_ids[a]);
            }
        }
        ids = new_ids;
    }

    for value in &kept {
        fp.set((value % n_bits as u64) as usize);
    }
    fp.n_distinct = kept.len();
    fp
}

/// All-pairs bond-count distances via BFS; `usize::MAX` when unreachable.
fn bond_distances(graph: &MolGraph) -> Vec<Vec<usize>> {
    let n = graph.atoms.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for bond in &graph.bonds {
        neighbors[bond.a].push(bond.b);
        neighbors[bond.b].push(bond.a);
    }
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        dist[start][start] = 0;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &neighbors[v] {
                if dist[start][w] == usize::MAX {
                    dist[start][w] = dist[start][v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    dist
}

/// Per-metal constants: (symbol, valence d-electron count).
const METAL_D_ELECTRONS: [(&str, u32); 10] = [
    ("Au", 11),
    ("Co", 9),
    ("Cu", 11),
    ("Ir", 9),
    ("Os", 8),
    ("Pt", 10),
    ("Re", 7),
    ("Rh", 9),
    ("Ru", 8),
    ("Ti", 4),
];

/// The 13 metal descriptor values: one-hot identity over the ten tracked
/// metals (alphabetical), oxidation state, atomic number / 100, and
/// d-electron count / 10.
#[derive(Debug, Clone, PartialEq)]
pub struct MetalFeatures {
    pub one_hot: [f64; 10],
    pub oxidation_state: f64,
    pub atomic_number_scaled: f64,
    pub valence_electrons_scaled: f64,
}

impl MetalFeatures {
    /// Flatten into the 13 values appended to the ligand fingerprint.
    pub fn to_values(&self) -> [f64; METAL_FEATURE_DIM] {
        let mut values = [0.0; METAL_FEATURE_DIM];
        values[..10].copy_from_slice(&self.one_hot);
        values[10] = self.oxidation_state;
        values[11] = self.atomic_number_scaled;
        values[12] = self.valence_electrons_scaled;
        values
    }
}

/// Metal descriptors for one of the ten tracked metals.
pub fn metal_feature_vector(
    metal: &str,
    oxidation_state: i32,
) -> Result<MetalFeatures, FeaturizeError> {
    let slot = TRACKED_METALS
        .iter()
        .position(|&s| s == metal)
        .ok_or_else(|| FeaturizeError::UnknownMetal {
            symbol: metal.to_string(),
        })?;
    let element = Element::from_symbol(metal).expect("tracked metals are elements");
    let mut one_hot = [0.0; 10];
    one_hot[slot] = 1.0;
    Ok(MetalFeatures {
        one_hot,
        oxidation_state: f64::from(oxidation_state),
        atomic_number_scaled: f64::from(element.atomic_number()) / 100.0,
        valence_electrons_scaled: f64::from(METAL_D_ELECTRONS[slot].1) / 10.0,
    })
}

/// Featurize an organic molecule: its radius-2 fingerprint as 2048 dense
/// values.
pub fn featurize_organic(smiles: &str) -> Result<FeatureVector, FeaturizeError> {
    let graph = parse_smiles(smiles)?;
    let fp = morgan_fingerprint(&graph, FP_RADIUS, FP_BITS);
    Ok(FeatureVector {
        values: fp.to_dense(),
        domain: Domain::Organic,
    })
}

/// Featurize a metal complex: the ligand fingerprint concatenated with the
/// metal descriptors, 2061 values in all.
pub fn featurize_inorganic(
    ligand_smiles: &str,
    metal: &str,
    oxidation_state: i32,
) -> Result<FeatureVector, FeaturizeError> {
    let metal = metal_feature_vector(metal, oxidation_state)?;
    let graph = parse_smiles(ligand_smiles)?;
    let fp = morgan_fingerprint(&graph, FP_RADIUS, FP_BITS);
    let mut values = fp.to_dense();
    values.extend_from_slice(&metal.to_values());
    Ok(FeatureVector {
        values,
        domain: Domain::Inorganic,
    })
}
