//! Evaluation metrics: centroid-based cross-modal alignment ratios and
//! threshold-based classification metrics.

use thiserror::Error;

use crate::embeddings::EmbeddedRecord;
use crate::featurize::Domain;

/// Group order used everywhere a metric is indexed by group:
/// inorganic-active, inorganic-inactive, organic-active, organic-inactive.
pub const GROUP_LABELS: [&str; 4] = ["IA", "II", "OA", "OI"];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("group {0} has no members")]
    EmptyGroup(&'static str),
    #[error("AUC undefined: labels contain a single class")]
    UndefinedAuc,
    #[error("scores and labels must have equal, nonzero length")]
    LengthMismatch,
    #[error("embeddings must share one dimension")]
    MixedDimensions,
}

/// Member counts for the four groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GroupCounts {
    pub ia: usize,
    pub ii: usize,
    pub oa: usize,
    pub oi: usize,
}

/// Arithmetic-mean centroids of the four domain/activity groups
/// (not renormalized).
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    pub ia: Vec<f64>,
    pub ii: Vec<f64>,
    pub oa: Vec<f64>,
    pub oi: Vec<f64>,
    pub counts: GroupCounts,
}

impl CentroidSet {
    pub fn from_records(records: &[EmbeddedRecord]) -> Result<Self, MetricsError> {
        let embeddings: Vec<&[f64]> = records.iter().map(|r| r.embedding.as_slice()).collect();
        let domains: Vec<Domain> = records.iter().map(|r| r.domain).collect();
        let active: Vec<bool> = records.iter().map(|r| r.active).collect();
        centroids(&embeddings, &domains, &active)
    }

    fn group(&self, idx: usize) -> &[f64] {
        match idx {
            0 => &self.ia,
            1 => &self.ii,
            2 => &self.oa,
            _ => &self.oi,
        }
    }
}

/// Compute the four group centroids. Errors if any group is empty or the
/// embedding widths disagree.
pub fn centroids(
    embeddings: &[&[f64]],
    domains: &[Domain],
    active: &[bool],
) -> Result<CentroidSet, MetricsError> {
    if embeddings.len() != domains.len() || embeddings.len() != active.len() {
        return Err(MetricsError::LengthMismatch);
    }
    let dim = embeddings.first().map_or(0, |e| e.len());
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(MetricsError::MixedDimensions);
    }
    let mut sums = vec![vec![0.0; dim]; 4];
    let mut counts = [0usize; 4];
    for i in 0..embeddings.len() {
        let g = match (domains[i], active[i]) {
            (Domain::Inorganic, true) => 0,
            (Domain::Inorganic, false) => 1,
            (Domain::Organic, true) => 2,
            (Domain::Organic, false) => 3,
        };
        counts[g] += 1;
        for (s, v) in sums[g].iter_mut().zip(embeddings[i]) {
            *s += v;
        }
    }
    for g in 0..4 {
        if counts[g] == 0 {
            return Err(MetricsError::EmptyGroup(GROUP_LABELS[g]));
        }
        for s in &mut sums[g] {
            *s /= counts[g] as f64;
        }
    }
    let mut it = sums.into_iter();
    Ok(CentroidSet {
        ia: it.next().unwrap(),
        ii: it.next().unwrap(),
        oa: it.next().unwrap(),
        oi: it.next().unwrap(),
        counts: GroupCounts {
            ia: counts[0],
            ii: counts[1],
            oa: counts[2],
            oi: counts[3],
        },
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Cross-modal alignment summary over the four centroids.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AlignmentReport {
    pub counts: GroupCounts,
    /// Pairwise Euclidean distances indexed by [`GROUP_LABELS`] order.
    pub distances: [[f64; 4]; 4],
    pub alignment_ratio: f64,
    pub separation_ratio: f64,
    pub combined_score: f64,
    /// d(IA,OA) / d(IA,OI): the active-compound slice of the alignment.
    pub active_alignment_ratio: f64,
}

/// Mean of the two within-activity cross-domain ratios. Below 1.0 means the
/// domains align: an activity group sits closer to its cross-domain match
/// than to the opposite activity.
pub fn alignment_ratio(c: &CentroidSet) -> f64 {
    let d_ia_oa = euclidean(&c.ia, &c.oa);
    let d_ia_oi = euclidean(&c.ia, &c.oi);
    let d_ii_oi = euclidean(&c.ii, &c.oi);
    let d_ii_oa = euclidean(&c.ii, &c.oa);
    0.5 * (d_ia_oa / d_ia_oi + d_ii_oi / d_ii_oa)
}

/// Mean cross-activity distance over mean within-activity distance. Above
/// 1.0 means activity groups separate in the shared space.
pub fn separation_ratio(c: &CentroidSet) -> f64 {
    let cross = 0.5 * (euclidean(&c.ia, &c.oi) + euclidean(&c.ii, &c.oa));
    let within = 0.5 * (euclidean(&c.ia, &c.oa) + euclidean(&c.ii, &c.oi));
    cross / within
}

/// (1 - alignment) + (separation - 1), floored at zero. Higher is better;
/// mutually equidistant centroids score exactly 0.
pub fn combined_score(alignment: f64, separation: f64) -> f64 {
    ((1.0 - alignment) + (separation - 1.0)).max(0.0)
}

pub fn alignment_report(c: &CentroidSet) -> AlignmentReport {
    let mut distances = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            distances[i][j] = euclidean(c.group(i), c.group(j));
        }
    }
    let alignment = alignment_ratio(c);
    let separation = separation_ratio(c);
    AlignmentReport {
        counts: c.counts,
        distances,
        alignment_ratio: alignment,
        separation_ratio: separation,
        combined_score: combined_score(alignment, separation),
        active_alignment_ratio: euclidean(&c.ia, &c.oa) / euclidean(&c.ia, &c.oi),
    }
}

/// Area under the ROC curve via rank statistics: the probability that a
/// random positive outscores a random negative, ties counting one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch);
    }
    let p = labels.iter().filter(|&&l| l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(MetricsError::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average ranks within tie groups (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p_f = p as f64;
    Ok((rank_sum_pos - p_f * (p_f + 1.0) / 2.0) / (p_f * n as f64))
}

/// Threshold-based classification summary.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassificationReport {
    pub auc: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> (f64, f64, f64, f64) {
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fneg == 0 {
        0.0
    } else {
        tp as f64 / (tp + fneg) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let accuracy = (tp + tn) as f64 / scores.len() as f64;
    (f1, precision, recall, accuracy)
}

/// Metrics at a fixed threshold; a score ≥ threshold predicts active.
pub fn classification_metrics(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<ClassificationReport, MetricsError> {
    let auc = auc_roc(scores, labels)?;
    let (f1, precision, recall, accuracy) = f1_at(scores, labels, threshold);
    Ok(ClassificationReport {
        auc,
        f1,
        accuracy,
        precision,
        recall,
        threshold,
    })
}

/// Sweep thresholds at midpoints between adjacent distinct scores, plus a
/// below-everything and an above-everything sentinel, and return the one
/// maximizing F1. Ties resolve to the smallest threshold (favoring recall).
/// Sentinels are finite (min-1, max+1) so reports stay serializable.
pub fn best_f1_threshold(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch);
    }
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = vec![distinct[0] - 1.0];
    candidates.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.push(distinct[distinct.len() - 1] + 1.0);

    let mut best = candidates[0];
    let mut best_f1 = -1.0;
    for &t in &candidates {
        let (f1, _, _, _) = f1_at(scores, labels, t);
        if f1 > best_f1 {
            best_f1 = f1;
            best = t;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn set_from(points: [[f64; 2]; 4]) -> CentroidSet {
        CentroidSet {
            ia: points[0].to_vec(),
            ii: points[1].to_vec(),
            oa: points[2].to_vec(),
            oi: points[3].to_vec(),
            counts: GroupCounts {
                ia: 1,
                ii: 1,
                oa: 1,
                oi: 1,
            },
        }
    }

    #[test]
    fn centroids_of_single_points_are_the_points() {
        let e = [
            &[1.0, 0.0][..],
            &[0.0, 1.0][..],
            &[-1.0, 0.0][..],
            &[0.0, -1.0][..],
        ];
        let domains = [
            Domain::Inorganic,
            Domain::Inorganic,
            Domain::Organic,
            Domain::Organic,
        ];
        let active = [true, false, true, false];
        let c = centroids(&e, &domains, &active).unwrap();
        assert_eq!(c.ia, vec![1.0, 0.0]);
        assert_eq!(c.ii, vec![0.0, 1.0]);
        assert_eq!(c.oa, vec![-1.0, 0.0]);
        assert_eq!(c.oi, vec![0.0, -1.0]);
        assert_eq!(c.counts.ia, 1);
    }

    #[test]
    fn centroids_average_group_members() {
        let e = [
            &[0.0, 0.0][..],
            &[2.0, 4.0][..],
            &[1.0, 1.0][..],
            &[1.0, 0.0][..],
            &[0.0, 1.0][..],
        ];
        let domains = [
            Domain::Inorganic,
            Domain::Inorganic,
            Domain::Inorganic,
            Domain::Organic,
            Domain::Organic,
        ];
        let active = [true, true, false, true, false];
        let c = centroids(&e, &domains, &active).unwrap();
        assert_eq!(c.ia, vec![1.0, 2.0]);
        assert_eq!(c.counts.ia, 2);
    }

    #[test]
    fn missing_group_is_reported_by_name() {
        let e = [&[1.0][..], &[2.0][..], &[3.0][..]];
        let domains = [Domain::Inorganic, Domain::Inorganic, Domain::Organic];
        let active = [true, false, true];
        assert!(matches!(
            centroids(&e, &domains, &active),
            Err(MetricsError::EmptyGroup("OI"))
        ));
    }

    #[test]
    fn rectangle_geometry_ratios() {
        // IA=(0,0), OA=(0,1), II=(2,0), OI=(2,1): aligned and separated.
        let c = set_from([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]]);
        let a = alignment_ratio(&c);
        let s = separation_ratio(&c);
        assert!((a - 1.0 / 5.0_f64.sqrt()).abs() < 1e-12, "{a}");
        assert!((s - 5.0_f64.sqrt()).abs() < 1e-12, "{s}");
    }

    #[test]
    fn equidistant_centroids_are_neutral() {
        // Regular tetrahedron: every pairwise distance is sqrt(8).
        let c = CentroidSet {
            ia: vec![1.0, 1.0, 1.0],
            ii: vec![1.0, -1.0, -1.0],
            oa: vec![-1.0, 1.0, -1.0],
            oi: vec![-1.0, -1.0, 1.0],
            counts: GroupCounts {
                ia: 1,
                ii: 1,
                oa: 1,
                oi: 1,
            },
        };
        assert!((alignment_ratio(&c) - 1.0).abs() < 1e-12);
        assert!((separation_ratio(&c) - 1.0).abs() < 1e-12);
        let r = alignment_report(&c);
        assert_eq!(r.combined_score, 0.0);
    }

    #[test]
    fn active_alignment_ratio_reproduces_reported_value() {
        // Distances chosen to match the published Morgan-embedding numbers.
        let c = CentroidSet {
            ia: vec![0.0, 0.0],
            ii: vec![5.0, 5.0],
            oa: vec![1.147, 0.0],
            oi: vec![0.0, 1.457],
            counts: GroupCounts {
                ia: 1,
                ii: 1,
                oa: 1,
                oi: 1,
            },
        };
        let r = alignment_report(&c);
        assert!((r.active_alignment_ratio - 1.147 / 1.457).abs() < 1e-12);
        assert!((r.active_alignment_ratio - 0.787).abs() < 5e-4);
    }

    #[test]
    fn combined_score_reproduces_published_rows() {
        assert!((combined_score(0.899, 1.127) - 0.228).abs() < 1e-12);
        assert!((combined_score(0.903, 1.119) - 0.216).abs() < 1e-12);
        // Published as 0.174 after rounding.
        assert!((combined_score(0.920, 1.093) - 0.173).abs() < 1e-12);
        assert_eq!(combined_score(1.0, 1.0), 0.0);
        // Floored at zero when both metrics point the wrong way.
        assert_eq!(combined_score(1.2, 0.9), 0.0);
    }

    #[test]
    fn report_matrix_is_symmetric_zero_diagonal() {
        let c = set_from([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]]);
        let r = alignment_report(&c);
        for i in 0..4 {
            assert_eq!(r.distances[i][i], 0.0);
            for j in 0..4 {
                assert_eq!(r.distances[i][j], r.distances[j][i]);
            }
        }
        assert!(r.alignment_ratio > 0.0);
        assert!(r.separation_ratio > 0.0);
    }

    #[test]
    fn ratios_invariant_under_rigid_motion() {
        let mut rng = SplitMix64::new(9);
        let base: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let domains: Vec<Domain> = (0..40)
            .map(|i| {
                if i % 2 == 0 {
                    Domain::Inorganic
                } else {
                    Domain::Organic
                }
            })
            .collect();
        let active: Vec<bool> = (0..40).map(|i| i % 4 < 2).collect();
        let refs: Vec<&[f64]> = base.iter().map(|v| v.as_slice()).collect();
        let c0 = centroids(&refs, &domains, &active).unwrap();

        // Rotate about z by a fixed angle, then translate.
        let theta: f64 = 0.83;
        let (s, co) = theta.sin_cos();
        let moved: Vec<Vec<f64>> = base
            .iter()
            .map(|v| {
                vec![
                    co * v[0] - s * v[1] + 10.0,
                    s * v[0] + co * v[1] - 3.0,
                    v[2] + 0.5,
                ]
            })
            .collect();
        let refs: Vec<&[f64]> = moved.iter().map(|v| v.as_slice()).collect();
        let c1 = centroids(&refs, &domains, &active).unwrap();
        assert!((alignment_ratio(&c0) - alignment_ratio(&c1)).abs() < 1e-12);
        assert!((separation_ratio(&c0) - separation_ratio(&c1)).abs() < 1e-12);
    }

    #[test]
    fn auc_worked_example() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [false, false, true, true];
        assert!((auc_roc(&scores, &labels).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_edges() {
        let perfect = auc_roc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(perfect, 1.0);
        let ties = auc_roc(&[0.5; 6], &[true, false, true, false, true, false]).unwrap();
        assert_eq!(ties, 0.5);
        let inverted = auc_roc(&[0.9, 0.8, 0.1], &[false, false, true]).unwrap();
        assert_eq!(inverted, 0.0);
        assert!(matches!(
            auc_roc(&[0.1, 0.2], &[true, true]),
            Err(MetricsError::UndefinedAuc)
        ));
        assert!(matches!(auc_roc(&[], &[]), Err(MetricsError::LengthMismatch)));
    }

    #[test]
    fn auc_matches_brute_force_on_random_instances() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..1000 {
            let n = 2 + rng.below(199);
            // Coarse score grid forces plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| rng.below(20) as f64 / 4.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.chance(0.4)).collect();
            // Guarantee both classes.
            labels[0] = true;
            labels[n - 1] = false;
            let fast = auc_roc(&scores, &labels).unwrap();
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                if !labels[i] {
                    continue;
                }
                for j in 0..n {
                    if labels[j] {
                        continue;
                    }
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
            let brute = wins / pairs;
            assert!(
                (fast - brute).abs() < 1e-12,
                "rank {fast} vs brute {brute} on n={n}"
            );
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = SplitMix64::new(3);
        let scores: Vec<f64> = (0..50).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let labels: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let base = auc_roc(&scores, &labels).unwrap();
        let cubed: Vec<f64> = scores.iter().map(|&s| s * s * s).collect();
        assert_eq!(base, auc_roc(&cubed, &labels).unwrap());
        let shifted: Vec<f64> = scores.iter().map(|&s| s.exp()).collect();
        assert_eq!(base, auc_roc(&shifted, &labels).unwrap());
    }

    #[test]
    fn classification_metrics_worked_examples() {
        let r = classification_metrics(&[0.2, 0.6, 0.8], &[false, true, true], 0.5).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.threshold, 0.5);

        // Predict-everything on a 25%-positive set: full recall, poor
        // precision.
        let scores = [0.9, 0.9, 0.9, 0.9];
        let labels = [true, false, false, false];
        let (f1, precision, recall, accuracy) = f1_at(&scores, &labels, 0.0);
        assert_eq!(recall, 1.0);
        assert_eq!(precision, 0.25);
        assert_eq!(accuracy, 0.25);
        assert!((f1 - 0.4).abs() < 1e-15);

        // Predict-nothing: F1 defined as zero.
        let (f1, precision, recall, _) = f1_at(&scores, &labels, 2.0);
        assert_eq!((f1, precision, recall), (0.0, 0.0, 0.0));
    }

    #[test]
    fn best_threshold_worked_example() {
        let t = best_f1_threshold(&[0.2, 0.6, 0.8], &[false, true, true]).unwrap();
        assert!((t - 0.4).abs() < 1e-15);
    }

    #[test]
    fn best_threshold_sentinels() {
        // All positives: sweeping must land on the predict-everything
        // sentinel below the minimum score.
        let t = best_f1_threshold(&[0.3, 0.7], &[true, true]).unwrap();
        assert_eq!(t, 0.3 - 1.0);
        // Constant scores: the only useful candidate predicts everything.
        let t = best_f1_threshold(&[0.5; 4], &[true, false, true, false]).unwrap();
        assert_eq!(t, 0.5 - 1.0);
        let (f1, _, _, _) = f1_at(&[0.5; 4], &[true, false, true, false], t);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn best_threshold_prefers_smallest_on_ties() {
        // Any threshold below 0.5 yields the same confusion matrix; the
        // sweep must return the smallest candidate among the tied ones.
        let scores = [0.5, 0.6];
        let labels = [true, true];
        let t = best_f1_threshold(&scores, &labels).unwrap();
        assert_eq!(t, -0.5);
    }

    #[test]
    fn best_threshold_maximizes_f1_against_exhaustive_scan() {
        let mut rng = SplitMix64::new(100);
        for _ in 0..200 {
            let n = 2 + rng.below(30);
            let scores: Vec<f64> = (0..n).map(|_| rng.below(10) as f64 / 3.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.chance(0.5)).collect();
            labels[0] = true;
            let t = best_f1_threshold(&scores, &labels).unwrap();
            let (best, _, _, _) = f1_at(&scores, &labels, t);
            // No score value can beat the swept optimum.
            for &s in &scores {
                for probe in [s - 1e-9, s, s + 1e-9] {
                    let (f1, _, _, _) = f1_at(&scores, &labels, probe);
                    assert!(f1 <= best + 1e-12);
                }
            }
        }
    }
}
