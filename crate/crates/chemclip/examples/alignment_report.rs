//! The centroid alignment metrics, demonstrated on two constructed
//! embedding spaces: one organized by activity (what successful training
//! produces) and one that only separates domains (the collapse signature).
//!
//! ```sh
//! cargo run --example alignment_report
//! ```

use chemclip::embeddings::EmbeddedRecord;
use chemclip::featurize::Domain;
use chemclip::metrics::{alignment_report, AlignmentReport, CentroidSet, GROUP_LABELS};
use chemclip::rng::SplitMix64;

/// Records scattered around four centroids, one per domain/activity group.
fn space(centers: [[f64; 3]; 4], jitter: f64, seed: u64) -> Vec<EmbeddedRecord> {
    let mut rng = SplitMix64::new(seed);
    let mut records = Vec::new();
    for (g, center) in centers.into_iter().enumerate() {
        let (domain, active) = match g {
            0 => (Domain::Inorganic, true),
            1 => (Domain::Inorganic, false),
            2 => (Domain::Organic, true),
            _ => (Domain::Organic, false),
        };
        for k in 0..50 {
            let embedding = center
                .iter()
                .map(|&c| c + jitter * rng.normal())
                .collect();
            records.push(EmbeddedRecord {
                record_id: format!("g{g}r{k}"),
                compound_id: format!("g{g}c{k}"),
                cell_line: "L01".into(),
                domain,
                active,
                embedding,
            });
        }
    }
    records
}

fn print_report(title: &str, report: &AlignmentReport) {
    println!("{title}");
    println!("  centroid distances ({} order):", GROUP_LABELS.join("/"));
    for row in report.distances {
        println!("    {:.3}  {:.3}  {:.3}  {:.3}", row[0], row[1], row[2], row[3]);
    }
    println!("  alignment_ratio        {:.3}  (< 1 means activity aligns across domains)", report.alignment_ratio);
    println!("  separation_ratio       {:.3}  (> 1 means activities separate)", report.separation_ratio);
    println!("  combined_score         {:.3}", report.combined_score);
    println!("  active_alignment_ratio {:.3}", report.active_alignment_ratio);
}

fn main() {
    // Activity-organized: active groups of both domains share a region.
    let aligned = space(
        [
            [1.0, 0.0, 0.2],  // inorganic active
            [-1.0, 0.1, 0.0], // inorganic inactive
            [1.0, 0.3, -0.2], // organic active
            [-1.0, -0.3, 0.0], // organic inactive
        ],
        0.2,
        1,
    );
    let report = alignment_report(&CentroidSet::from_records(&aligned).unwrap());
    print_report("activity-organized space:", &report);

    // Collapsed: embeddings encode the domain and nothing else.
    let collapsed = space(
        [
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ],
        0.05,
        2,
    );
    let report = alignment_report(&CentroidSet::from_records(&collapsed).unwrap());
    println!();
    print_report("domain-only (collapsed) space:", &report);
}
