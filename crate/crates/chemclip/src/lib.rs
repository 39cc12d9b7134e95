//! ChemCLIP: dual-encoder contrastive embeddings that align organic molecules
//! and metal complexes by shared anticancer activity.
//!
//! The pipeline goes: SMILES text -> molecular graph ([`smiles`]) -> fixed-length
//! feature vectors ([`featurize`]) -> two projection heads trained with a
//! bidirectional InfoNCE loss plus an activity-aware triplet loss ([`model`],
//! [`train`]) -> a shared 256-d unit-norm embedding space evaluated with
//! centroid alignment metrics ([`metrics`]), frozen-embedding classifiers
//! ([`classifier`]) and 2-D projections ([`viz`]).
//!
//! Corpus ingestion (activity thresholds, cell-line standardization,
//! compound-based splits) lives in [`data`]; [`synth`] generates seeded
//! synthetic corpora with a planted structure-activity rule so the whole
//! pipeline can be exercised end to end without the real screening data.
//!
//! See the `examples/` directory for one runnable example per capability; the
//! `chemclip` binary wires the same stages into a command-line front end
//! ([`pipeline`]).

pub mod checkpoint;
pub mod classifier;
pub mod data;
pub mod embeddings;
pub mod featurize;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod runtime;
pub mod smiles;
pub mod synth;
pub mod train;
pub mod viz;

pub use data::ActivityRecord;
pub use featurize::{FeatureVector, Fingerprint, MetalFeatures};
pub use smiles::MolGraph;
