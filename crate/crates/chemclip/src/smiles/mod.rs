//! SMILES parsing into an annotated molecular graph.
//!
//! The supported grammar is the practical subset needed for fingerprinting and
//! metal detection: organic-subset atoms (B C N O P S F Cl Br I), lowercase
//! aromatic atoms (b c n o p s), bracket atoms with isotope/charge/H count,
//! branches, ring closures including `%nn`, dot disconnection, and the bond
//! symbols `-`, `=`, `#`, `:`. Stereo markers (`/`, `\`, `@`) are parsed and
//! discarded. Aromaticity is taken verbatim from the notation; there is no
//! kekulization or valence sanitization.

mod element;
mod parse;
mod write;

pub use element::{tracked_metal_elements, Element, TRACKED_METALS};
pub use parse::parse_smiles;
pub use write::write_smiles;

use thiserror::Error;

/// Parse failure, carrying the byte offset of the offending input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    EmptyInput,
    #[error("unbalanced parenthesis at offset {offset}")]
    UnbalancedParenthesis { offset: usize },
    #[error("ring bond {digit} opened at offset {offset} is never closed")]
    UnclosedRingBond { digit: u16, offset: usize },
    #[error("unknown element '{symbol}' at offset {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("dangling bond symbol at offset {offset}")]
    DanglingBondSymbol { offset: usize },
    #[error("bracket atom opened at offset {offset} is never closed")]
    UnclosedBracket { offset: usize },
    #[error("unexpected character '{ch}' at offset {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("ring bond at offset {offset} would duplicate an existing bond")]
    DuplicateBond { offset: usize },
    #[error("ring bond at offset {offset} closes onto its own atom")]
    SelfBond { offset: usize },
    #[error("conflicting bond orders on ring closure at offset {offset}")]
    RingBondConflict { offset: usize },
    #[error("malformed bracket atom at offset {offset}: {reason}")]
    MalformedBracket { offset: usize, reason: String },
}

/// Bond order as written; aromatic bonds are kept distinct rather than
/// kekulized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum; aromatic counts 1.5.
    pub fn valence_units(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }

    /// Stable small integer used inside fingerprint hashes.
    pub fn code(self) -> u32 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i32,
    pub isotope: Option<u32>,
    pub aromatic: bool,
    /// Hydrogen count written in a bracket atom; `None` for organic-subset
    /// atoms, whose hydrogens are implied by valence.
    pub explicit_h: Option<u32>,
    /// True iff the atom lies on at least one cycle; computed after parsing.
    pub in_ring: bool,
    /// True iff the atom was written in brackets.
    pub bracket: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A parsed molecule: atoms, bonds, and the original text. The graph may be
/// disconnected (dot-separated SMILES).
#[derive(Debug, Clone)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub source: String,
}

impl MolGraph {
    /// Indices of bonds incident to each atom.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (bi, bond) in self.bonds.iter().enumerate() {
            adj[bond.a].push(bi);
            adj[bond.b].push(bi);
        }
        adj
    }

    /// Number of explicitly drawn neighbors (any element).
    pub fn degree(&self, atom: usize) -> usize {
        self.bonds
            .iter()
            .filter(|b| b.a == atom || b.b == atom)
            .count()
    }

    /// Implicit hydrogen count for one atom.
    ///
    /// Bracket atoms carry their hydrogen count verbatim. Organic-subset atoms
    /// fill up to the default valence (B3 C4 N3 O2 P3 S2, halogens 1);
    /// aromatic bonds count 1.5 and the bond-order sum is floored before the
    /// subtraction. Clamped at zero, so hypervalent spellings never go
    /// negative.
    pub fn implicit_hydrogens(&self, atom: usize) -> u32 {
        let a = &self.atoms[atom];
        if let Some(h) = a.explicit_h {
            return h;
        }
        let Some(default) = a.element.default_valence() else {
            return 0;
        };
        let order_sum: f64 = self
            .bonds
            .iter()
            .filter(|b| b.a == atom || b.b == atom)
            .map(|b| b.order.valence_units())
            .sum();
        let used = order_sum.floor() as i64;
        (i64::from(default) - used).max(0) as u32
    }

    /// Total hydrogen count: implicit hydrogens plus explicitly drawn H
    /// neighbors.
    pub fn total_hydrogens(&self, atom: usize) -> u32 {
        let explicit_neighbors = self
            .bonds
            .iter()
            .filter(|b| b.a == atom || b.b == atom)
            .filter(|b| self.atoms[b.other(atom)].element.is_hydrogen())
            .count() as u32;
        self.implicit_hydrogens(atom) + explicit_neighbors
    }

    /// Number of non-hydrogen neighbors.
    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.bonds
            .iter()
            .filter(|b| b.a == atom || b.b == atom)
            .filter(|b| !self.atoms[b.other(atom)].element.is_hydrogen())
            .count()
    }

    /// True iff any atom is one of the ten tracked metals.
    pub fn contains_metal(&self) -> bool {
        self.atoms.iter().any(|a| a.element.is_tracked_metal())
    }

    /// First atom that is a tracked metal, as (index, element).
    pub fn first_metal(&self) -> Option<(usize, Element)> {
        self.atoms
            .iter()
            .position(|a| a.element.is_tracked_metal())
            .map(|i| (i, self.atoms[i].element))
    }

    /// Indices of every tracked-metal atom.
    pub fn metal_atoms(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| self.atoms[i].element.is_tracked_metal())
            .collect()
    }

    /// Copy of the graph with the given atoms removed along with their bonds.
    /// Remaining atoms keep their relative order.
    pub fn without_atoms(&self, remove: &[usize]) -> MolGraph {
        let mut keep_index = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if !remove.contains(&i) {
                keep_index[i] = atoms.len();
                atoms.push(atom.clone());
            }
        }
        let bonds = self
            .bonds
            .iter()
            .filter(|b| keep_index[b.a] != usize::MAX && keep_index[b.b] != usize::MAX)
            .map(|b| Bond {
                a: keep_index[b.a],
                b: keep_index[b.b],
                order: b.order,
            })
            .collect();
        let mut graph = MolGraph {
            atoms,
            bonds,
            source: String::new(),
        };
        mark_rings(&mut graph);
        graph
    }
}

/// Recompute `in_ring` flags: an atom is in a ring iff it is incident to at
/// least one non-bridge edge. Bridges are found with one DFS low-link pass.
pub(crate) fn mark_rings(graph: &mut MolGraph) {
    let n = graph.atoms.len();
    for atom in &mut graph.atoms {
        atom.in_ring = false;
    }
    if n == 0 || graph.bonds.is_empty() {
        return;
    }
    let adj = graph.adjacency();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; graph.bonds.len()];
    let mut timer = 0usize;

    // Iterative DFS; (atom, incoming edge, next adjacency slot).
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (v, in_edge, ref mut slot)) = stack.last_mut() {
            if *slot < adj[v].len() {
                let edge = adj[v][*slot];
                *slot += 1;
                if edge == in_edge {
                    continue;
                }
                let w = graph.bonds[edge].other(v);
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, edge, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&mut (parent, _, _)) = stack.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        is_bridge[in_edge] = true;
                    }
                }
            }
        }
    }
    for (bi, bond) in graph.bonds.iter().enumerate() {
        if !is_bridge[bi] {
            graph.atoms[bond.a].in_ring = true;
            graph.atoms[bond.b].in_ring = true;
        }
    }
}
