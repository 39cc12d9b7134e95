//! Dual-encoder model: two projection heads mapping inorganic and organic
//! feature vectors into one unit-normalized embedding space, trained with a
//! bidirectional InfoNCE loss plus an activity-aware triplet loss.

use thiserror::Error;

use crate::featurize::{INORGANIC_DIM, ORGANIC_DIM};
use crate::nn::{
    init_mlp, l2_normalize_rows, l2_normalize_rows_backward, LinearGrads, Matrix, Mlp, NnError,
};
use crate::rng::{derive_seed, SplitMix64};

/// Width of the shared embedding space.
pub const EMBED_DIM: usize = 256;
/// Hidden width of both projection heads.
pub const HIDDEN_DIM: usize = 512;
/// Fixed softmax temperature for the contrastive similarity matrix.
pub const TEMPERATURE: f64 = 0.07;
/// Margin for the activity-aware triplet hinge on cosine similarity.
pub const TRIPLET_MARGIN: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Two parallel projection heads with identical shapes (apart from input
/// width) emitting vectors in the same embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemClipModel {
    pub inorganic_head: Mlp,
    pub organic_head: Mlp,
    pub temperature: f64,
}

impl ChemClipModel {
    /// Standard geometry: inorganic 2061 -> 512 -> 256, organic
    /// 2048 -> 512 -> 256, both heads seeded from independent streams.
    pub fn new(seed: u64, dropout: f64) -> Self {
        Self::with_dims(INORGANIC_DIM, ORGANIC_DIM, HIDDEN_DIM, EMBED_DIM, dropout, seed)
    }

    /// Reduced geometries keep gradient checks cheap; production code uses
    /// [`ChemClipModel::new`].
    pub fn with_dims(
        inorganic_in: usize,
        organic_in: usize,
        hidden: usize,
        embed: usize,
        dropout: f64,
        seed: u64,
    ) -> Self {
        ChemClipModel {
            inorganic_head: init_mlp(
                &[inorganic_in, hidden, embed],
                dropout,
                derive_seed(seed, "inorganic-head"),
            ),
            organic_head: init_mlp(
                &[organic_in, hidden, embed],
                dropout,
                derive_seed(seed, "organic-head"),
            ),
            temperature: TEMPERATURE,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.inorganic_head.out_dim()
    }

    /// Unit-norm embeddings for a batch of inorganic feature rows
    /// (inference mode, dropout off).
    pub fn embed_inorganic(&self, features: &Matrix) -> Result<Matrix, ModelError> {
        let mut rng = SplitMix64::new(0);
        let (h, _) = self.inorganic_head.forward(features, false, &mut rng)?;
        Ok(l2_normalize_rows(&h))
    }

    /// Unit-norm embeddings for a batch of organic feature rows.
    pub fn embed_organic(&self, features: &Matrix) -> Result<Matrix, ModelError> {
        let mut rng = SplitMix64::new(0);
        let (h, _) = self.organic_head.forward(features, false, &mut rng)?;
        Ok(l2_normalize_rows(&h))
    }

    /// Flat lengths of every parameter tensor, in the fixed order used by
    /// [`param_slices_mut`](Self::param_slices_mut) and [`ModelGrads::slices`].
    pub fn param_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for head in [&self.inorganic_head, &self.organic_head] {
            for layer in &head.layers {
                sizes.push(layer.w.data().len());
                sizes.push(layer.b.len());
            }
        }
        sizes
    }

    /// Mutable views of every parameter tensor for the optimizer.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut slices = Vec::new();
        for head in [&mut self.inorganic_head, &mut self.organic_head] {
            for layer in &mut head.layers {
                slices.push(layer.w.data_mut());
                slices.push(layer.b.as_mut_slice());
            }
        }
        slices
    }
}

/// One training batch: index-aligned rows, where row i of the inorganic and
/// organic sides share `cell_lines[i]`.
#[derive(Debug, Clone)]
pub struct PairBatch {
    pub inorganic_features: Matrix,
    pub organic_features: Matrix,
    pub cell_lines: Vec<String>,
    pub inorganic_active: Vec<bool>,
    pub organic_active: Vec<bool>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.cell_lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_lines.is_empty()
    }
}

/// Triplets referencing batch rows: anchors index the inorganic side,
/// positives/negatives index the organic side.
#[derive(Debug, Clone, Default)]
pub struct TripletSet {
    pub anchors: Vec<usize>,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub margin: f64,
}

impl TripletSet {
    pub fn empty() -> Self {
        TripletSet {
            margin: TRIPLET_MARGIN,
            ..TripletSet::default()
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// Gradients for both heads, ordered like [`ChemClipModel::param_slices_mut`].
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub inorganic: Vec<LinearGrads>,
    pub organic: Vec<LinearGrads>,
}

impl ModelGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut slices = Vec::new();
        for head in [&self.inorganic, &self.organic] {
            for g in head {
                slices.push(g.dw.data());
                slices.push(g.db.as_slice());
            }
        }
        slices
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut slices = Vec::new();
        for head in [&mut self.inorganic, &mut self.organic] {
            for g in head {
                slices.push(g.dw.data_mut());
                slices.push(g.db.as_mut_slice());
            }
        }
        slices
    }
}

/// Loss components for one batch; `total` is their equal-weight sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub info_nce: f64,
    pub triplet: f64,
}

/// Bidirectional InfoNCE over the scaled similarity matrix S = Zi Zo^T / tau.
///
/// Loss is the mean of row-wise and column-wise softmax cross-entropy with
/// diagonal targets; returns exact gradients with respect to both embedding
/// matrices.
pub fn info_nce_loss(
    zi: &Matrix,
    zo: &Matrix,
    tau: f64,
) -> Result<(f64, Matrix, Matrix), ModelError> {
    if tau <= 0.0 {
        return Err(ModelError::NonPositiveTemperature(tau));
    }
    if zi.rows() != zo.rows() {
        return Err(NnError::DimensionMismatch {
            context: "info_nce batch sizes",
            expected: zi.rows(),
            got: zo.rows(),
        }
        .into());
    }
    if zi.cols() != zo.cols() {
        return Err(NnError::DimensionMismatch {
            context: "info_nce embedding dims",
            expected: zi.cols(),
            got: zo.cols(),
        }
        .into());
    }
    let b = zi.rows();
    let mut s = zi.matmul_nt(zo);
    for v in s.data_mut() {
        *v /= tau;
    }

    // Row-wise softmax with max subtraction.
    let mut p_row = Matrix::zeros(b, b);
    let mut loss = 0.0;
    for i in 0..b {
        let row = s.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            p_row.row_mut(i)[j] = e;
            z += e;
        }
        for v in p_row.row_mut(i) {
            *v /= z;
        }
        loss += z.ln() - (row[i] - max);
    }
    // Column-wise softmax.
    let mut p_col = Matrix::zeros(b, b);
    for j in 0..b {
        let mut max = f64::NEG_INFINITY;
        for i in 0..b {
            max = max.max(s.get(i, j));
        }
        let mut z = 0.0;
        for i in 0..b {
            let e = (s.get(i, j) - max).exp();
            p_col.set(i, j, e);
            z += e;
        }
        for i in 0..b {
            p_col.set(i, j, p_col.get(i, j) / z);
        }
        loss += z.ln() - (s.get(j, j) - max);
    }
    loss /= 2.0 * b as f64;

    // dL/dS = ((P_row - I) + (P_col - I)) / (2B), then chain through
    // S = Zi Zo^T / tau.
    let mut ds = Matrix::zeros(b, b);
    let scale = 1.0 / (2.0 * b as f64);
    for i in 0..b {
        for j in 0..b {
            let ident = if i == j { 2.0 } else { 0.0 };
            ds.set(i, j, scale * (p_row.get(i, j) + p_col.get(i, j) - ident));
        }
    }
    let mut dzi = ds.matmul(zo);
    for v in dzi.data_mut() {
        *v /= tau;
    }
    let mut dzo = ds.matmul_tn(zi);
    for v in dzo.data_mut() {
        *v /= tau;
    }
    Ok((loss, dzi, dzo))
}

/// Mean hinge over triplets: max(0, sim(A,N) - sim(A,P) + margin) with
/// sim = dot product of unit rows. Empty sets yield zero loss and zero
/// gradients.
pub fn triplet_loss(
    zi: &Matrix,
    zo: &Matrix,
    triplets: &TripletSet,
) -> (f64, Matrix, Matrix) {
    let mut dzi = Matrix::zeros(zi.rows(), zi.cols());
    let mut dzo = Matrix::zeros(zo.rows(), zo.cols());
    if triplets.is_empty() {
        return (0.0, dzi, dzo);
    }
    let t = triplets.len() as f64;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut loss = 0.0;
    for k in 0..triplets.len() {
        let (a, p, n) = (triplets.anchors[k], triplets.positives[k], triplets.negatives[k]);
        let sim_ap = dot(zi.row(a), zo.row(p));
        let sim_an = dot(zi.row(a), zo.row(n));
        let hinge = sim_an - sim_ap + triplets.margin;
        if hinge > 0.0 {
            loss += hinge;
            for j in 0..zi.cols() {
                dzi.row_mut(a)[j] += (zo.get(n, j) - zo.get(p, j)) / t;
                dzo.row_mut(p)[j] -= zi.get(a, j) / t;
                dzo.row_mut(n)[j] += zi.get(a, j) / t;
            }
        }
    }
    (loss / t, dzi, dzo)
}

/// Equal-weight sum of InfoNCE and triplet losses, backpropagated through
/// row normalization and both heads. With `training` off the rng is unused.
pub fn total_loss(
    model: &ChemClipModel,
    batch: &PairBatch,
    triplets: &TripletSet,
    training: bool,
    rng: &mut SplitMix64,
) -> Result<(LossBreakdown, ModelGrads), ModelError> {
    let (hi, cache_i) = model
        .inorganic_head
        .forward(&batch.inorganic_features, training, rng)?;
    let (ho, cache_o) = model
        .organic_head
        .forward(&batch.organic_features, training, rng)?;
    let zi = l2_normalize_rows(&hi);
    let zo = l2_normalize_rows(&ho);

    let (nce, mut dzi, mut dzo) = info_nce_loss(&zi, &zo, model.temperature)?;
    let (trip, tzi, tzo) = triplet_loss(&zi, &zo, triplets);
    for (a, b) in dzi.data_mut().iter_mut().zip(tzi.data()) {
        *a += b;
    }
    for (a, b) in dzo.data_mut().iter_mut().zip(tzo.data()) {
        *a += b;
    }

    let dhi = l2_normalize_rows_backward(&hi, &dzi);
    let dho = l2_normalize_rows_backward(&ho, &dzo);
    let gi = model.inorganic_head.backward_params(&cache_i, &dhi)?;
    let go = model.organic_head.backward_params(&cache_o, &dho)?;

    Ok((
        LossBreakdown {
            total: nce + trip,
            info_nce: nce,
            triplet: trip,
        },
        ModelGrads {
            inorganic: gi,
            organic: go,
        },
    ))
}
