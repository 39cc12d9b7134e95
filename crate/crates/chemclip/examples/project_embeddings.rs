//! Project embeddings to 2-D with PCA or exact t-SNE and render the result
//! as an SVG scatter plot (squares = inorganic, circles = organic; dark =
//! active, light = inactive).
//!
//! ```sh
//! cargo run --example project_embeddings
//! ```

use chemclip::featurize::Domain;
use chemclip::nn::Matrix;
use chemclip::rng::SplitMix64;
use chemclip::viz::{pca_2d, render_scatter_svg, tsne_2d};

fn main() {
    // Four clusters in 16-d: domain x activity.
    let mut rng = SplitMix64::new(4);
    let mut rows = Vec::new();
    let mut domains = Vec::new();
    let mut active = Vec::new();
    for g in 0..4 {
        for _ in 0..40 {
            let mut row = vec![0.0; 16];
            row[g * 2] = 3.0;
            for v in row.iter_mut() {
                *v += 0.35 * rng.normal();
            }
            rows.push(row);
            domains.push(if g < 2 { Domain::Inorganic } else { Domain::Organic });
            active.push(g % 2 == 0);
        }
    }
    let embeddings = Matrix::from_rows(&rows);

    let out = std::env::temp_dir().join("chemclip_projection");
    std::fs::create_dir_all(&out).expect("writable temp dir");

    let pca = pca_2d(&embeddings);
    let pca_path = out.join("pca.svg");
    render_scatter_svg(&pca, &domains, &active, &pca_path).expect("render");
    println!("PCA projection     -> {}", pca_path.display());

    let tsne = tsne_2d(&embeddings, 20.0, 400, 0).expect("n is large enough for the perplexity");
    let tsne_path = out.join("tsne.svg");
    render_scatter_svg(&tsne, &domains, &active, &tsne_path).expect("render");
    println!("t-SNE projection   -> {}", tsne_path.display());

    // First few coordinates of each method, for a quick numeric look.
    for (name, projection) in [("pca", &pca), ("tsne", &tsne)] {
        let c = &projection.coordinates;
        println!("\n{name} head:");
        for i in 0..3 {
            println!("  ({:+.3}, {:+.3})", c.get(i, 0), c.get(i, 1));
        }
    }
}
