//! 2-D projections of the embedding space (PCA and exact t-SNE) and
//! deterministic SVG scatter rendering.

mod pca;
mod svg;
mod tsne;

pub use pca::pca_2d;
pub use svg::{render_scatter_svg, scatter_svg};
pub use tsne::tsne_2d;

use thiserror::Error;

use crate::nn::Matrix;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("perplexity {perplexity} too large for {n} points; need n > 3 * perplexity")]
    PerplexityTooLarge { n: usize, perplexity: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a 2-D projection was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionMethod {
    Pca,
    Tsne {
        perplexity: f64,
        iterations: usize,
        seed: u64,
    },
}

/// A 2-D projection of n embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    /// n x 2 coordinates, row-aligned with the input.
    pub coordinates: Matrix,
    pub method: ProjectionMethod,
}

impl Projection2D {
    pub fn len(&self) -> usize {
        self.coordinates.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.rows() == 0
    }
}
