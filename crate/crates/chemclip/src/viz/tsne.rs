//! Exact O(n²) t-SNE with per-point bandwidth calibration by bisection.

use rayon::prelude::*;

use super::{Projection2D, ProjectionMethod, VizError};
use crate::nn::Matrix;
use crate::rng::{derive_seed, SplitMix64};

const LEARNING_RATE: f64 = 200.0;
const EARLY_EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const MOMENTUM_SWITCH_ITER: usize = 250;
const BISECTION_ITERS: usize = 50;
const ENTROPY_TOL: f64 = 1e-5;
const P_FLOOR: f64 = 1e-12;

fn squared_distances(x: &Matrix) -> Vec<Vec<f64>> {
    let n = x.rows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    x.row(i)
                        .iter()
                        .zip(x.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Shannon entropy (nats) and conditional probabilities of row `i` at
/// precision `beta` = 1/(2 sigma^2).
fn row_entropy(dists: &[f64], i: usize, beta: f64) -> (f64, Vec<f64>) {
    let dmin = dists
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = dists
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if j == i {
                0.0
            } else {
                (-beta * (d - dmin)).exp()
            }
        })
        .collect();
    let sum: f64 = p.iter().sum();
    let mut entropy = 0.0;
    if sum > 0.0 {
        let mut weighted = 0.0;
        for (j, v) in p.iter_mut().enumerate() {
            *v /= sum;
            if j != i {
                weighted += *v * (dists[j] - dmin);
            }
        }
        // H = ln(sum) + beta * E[d - dmin], invariant to the dmin shift.
        entropy = sum.ln() + beta * weighted;
    }
    (entropy, p)
}

/// Bisect beta until the row's perplexity matches the target.
fn calibrated_row(dists: &[f64], i: usize, target_entropy: f64) -> Vec<f64> {
    let mut beta = 1.0;
    let (mut lo, mut hi) = (None, None);
    let (mut entropy, mut p) = row_entropy(dists, i, beta);
    for _ in 0..BISECTION_ITERS {
        let diff = entropy - target_entropy;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            // Too flat: sharpen by raising beta.
            lo = Some(beta);
            beta = match hi {
                Some(h) => (beta + h) / 2.0,
                None => beta * 2.0,
            };
        } else {
            hi = Some(beta);
            beta = match lo {
                Some(l) => (beta + l) / 2.0,
                None => beta / 2.0,
            };
        }
        (entropy, p) = row_entropy(dists, i, beta);
    }
    p
}

/// Symmetrized, floored joint probabilities.
fn joint_probabilities(x: &Matrix, perplexity: f64) -> Vec<Vec<f64>> {
    let n = x.rows();
    let dists = squared_distances(x);
    let target_entropy = perplexity.ln();
    let conditional: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| calibrated_row(&dists[i], i, target_entropy))
        .collect();
    let mut joint = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                joint[i][j] =
                    ((conditional[i][j] + conditional[j][i]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }
    joint
}

struct TsneRun {
    projection: Projection2D,
    /// Objective at the first and last iteration; read by tests.
    #[cfg_attr(not(test), allow(dead_code))]
    kl_first: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    kl_final: f64,
}

fn kl_divergence(p: &[Vec<f64>], y: &Matrix) -> f64 {
    let n = y.rows();
    let mut num = vec![vec![0.0; n]; n];
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dy0 = y.get(i, 0) - y.get(j, 0);
                let dy1 = y.get(i, 1) - y.get(j, 1);
                let v = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1);
                num[i][j] = v;
                z += v;
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let q = (num[i][j] / z).max(P_FLOOR);
                kl += p[i][j] * (p[i][j] / q).ln();
            }
        }
    }
    kl
}

fn run(
    embeddings: &Matrix,
    perplexity: f64,
    iterations: usize,
    seed: u64,
) -> Result<TsneRun, VizError> {
    let n = embeddings.rows();
    if (n as f64) <= 3.0 * perplexity {
        return Err(VizError::PerplexityTooLarge { n, perplexity });
    }
    let p = joint_probabilities(embeddings, perplexity);

    let mut rng = SplitMix64::new(derive_seed(seed, "tsne-init"));
    let mut y = Matrix::zeros(n, 2);
    for i in 0..n {
        for k in 0..2 {
            y.row_mut(i)[k] = 1e-2 * rng.normal();
        }
    }
    let mut velocity = Matrix::zeros(n, 2);
    let mut kl_first = f64::INFINITY;

    for t in 1..=iterations {
        let exaggeration = if t <= EXAGGERATION_ITERS {
            EARLY_EXAGGERATION
        } else {
            1.0
        };
        let momentum = if t <= MOMENTUM_SWITCH_ITER { 0.5 } else { 0.8 };

        // Student-t affinities in the embedding plane.
        let mut num = vec![vec![0.0; n]; n];
        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dy0 = y.get(i, 0) - y.get(j, 0);
                let dy1 = y.get(i, 1) - y.get(j, 1);
                let v = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1);
                num[i][j] = v;
                num[j][i] = v;
                z += 2.0 * v;
            }
        }

        let mut grad = Matrix::zeros(n, 2);
        for i in 0..n {
            let mut g0 = 0.0;
            let mut g1 = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = (num[i][j] / z).max(P_FLOOR);
                let coeff = 4.0 * (exaggeration * p[i][j] - q) * num[i][j];
                g0 += coeff * (y.get(i, 0) - y.get(j, 0));
                g1 += coeff * (y.get(i, 1) - y.get(j, 1));
            }
            grad.row_mut(i)[0] = g0;
            grad.row_mut(i)[1] = g1;
        }

        for i in 0..n {
            for k in 0..2 {
                let v = momentum * velocity.get(i, k) - LEARNING_RATE * grad.get(i, k);
                velocity.set(i, k, v);
                y.set(i, k, y.get(i, k) + v);
            }
        }
        // Keep the cloud centered.
        for k in 0..2 {
            let mean: f64 = (0..n).map(|i| y.get(i, k)).sum::<f64>() / n as f64;
            for i in 0..n {
                y.set(i, k, y.get(i, k) - mean);
            }
        }

        if t == 1 {
            kl_first = kl_divergence(&p, &y);
        }
    }
    let kl_final = kl_divergence(&p, &y);
    Ok(TsneRun {
        projection: Projection2D {
            coordinates: y,
            method: ProjectionMethod::Tsne {
                perplexity,
                iterations,
                seed,
            },
        },
        kl_first,
        kl_final,
    })
}

/// Exact t-SNE to two dimensions.
///
/// Per-point bandwidths are calibrated to the target perplexity by
/// bisection; optimization runs plain momentum gradient descent with early
/// exaggeration. Affinity calibration parallelizes across rows; the
/// gradient loop is single-threaded, so output is deterministic for a
/// fixed seed.
pub fn tsne_2d(
    embeddings: &Matrix,
    perplexity: f64,
    iterations: usize,
    seed: u64,
) -> Result<Projection2D, VizError> {
    run(embeddings, perplexity, iterations, seed).map(|r| r.projection)
}
