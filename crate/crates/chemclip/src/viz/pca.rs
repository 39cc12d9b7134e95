//! Two-component PCA via power iteration with deflation.

use super::{Projection2D, ProjectionMethod};
use crate::nn::Matrix;
use crate::rng::SplitMix64;

const TOL: f64 = 1e-10;
const MAX_ITERS: usize = 10_000;

/// Multiply the (implicit) scatter matrix X^T X by v without materializing
/// the d x d covariance.
fn scatter_apply(x: &Matrix, v: &[f64]) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let mut w = vec![0.0; n];
    for i in 0..n {
        w[i] = x.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
    }
    let mut out = vec![0.0; d];
    for i in 0..n {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for (o, &xv) in out.iter_mut().zip(x.row(i)) {
            *o += wi * xv;
        }
    }
    out
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in v.iter_mut() {
            *a /= norm;
        }
    }
    norm
}

/// Dominant eigenvector of X^T X, sign-fixed so the entry of largest
/// magnitude is positive. Returns a zero vector when the data has no
/// variance along any direction. When `orthogonal_to` is given the
/// iterate is re-orthogonalized against it every step, so the result is
/// exactly perpendicular even if the remaining variance is pure rounding
/// noise.
fn dominant_direction(x: &Matrix, orthogonal_to: Option<&[f64]>) -> Vec<f64> {
    let d = x.cols();
    let project_out = |v: &mut [f64]| {
        if let Some(u) = orthogonal_to {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (a, &b) in v.iter_mut().zip(u) {
                *a -= dot * b;
            }
        }
    };
    let mut rng = SplitMix64::new(0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
    project_out(&mut v);
    normalize(&mut v);
    for _ in 0..MAX_ITERS {
        let mut next = scatter_apply(x, &v);
        project_out(&mut next);
        if normalize(&mut next) < 1e-300 {
            return vec![0.0; d];
        }
        // Sign-agnostic convergence: |cos angle| near 1.
        let dot: f64 = next.iter().zip(&v).map(|(a, b)| a * b).sum();
        let converged = 1.0 - dot.abs() < TOL;
        v = next;
        if converged {
            break;
        }
    }
    // Deterministic orientation.
    let lead = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if v[lead] < 0.0 {
        for a in &mut v {
            *a = -*a;
        }
    }
    v
}

/// Project mean-centered rows onto the top two principal directions.
pub fn pca_2d(embeddings: &Matrix) -> Projection2D {
    let (n, d) = (embeddings.rows(), embeddings.cols());
    let mut centered = embeddings.clone();
    if n > 0 {
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(embeddings.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        for i in 0..n {
            for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }

    let v1 = dominant_direction(&centered, None);
    // Deflate: remove the first component from the data, then repeat.
    let mut deflated = centered.clone();
    for i in 0..n {
        let proj: f64 = deflated.row(i).iter().zip(&v1).map(|(a, b)| a * b).sum();
        for (val, &dir) in deflated.row_mut(i).iter_mut().zip(&v1) {
            *val -= proj * dir;
        }
    }
    let v2 = dominant_direction(&deflated, Some(&v1));

    let mut coordinates = Matrix::zeros(n, 2);
    for i in 0..n {
        let row = centered.row(i);
        coordinates.row_mut(i)[0] = row.iter().zip(&v1).map(|(a, b)| a * b).sum();
        coordinates.row_mut(i)[1] = row.iter().zip(&v2).map(|(a, b)| a * b).sum();
    }
    Projection2D {
        coordinates,
        method: ProjectionMethod::Pca,
    }
}
