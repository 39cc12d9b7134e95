//! Save a model to the binary checkpoint container and load it back. The
//! container carries both encoder heads plus the training configuration as
//! a JSON trailer, so a checkpoint is self-describing.
//!
//! ```sh
//! cargo run --example checkpoint_round_trip
//! ```

use chemclip::checkpoint::{load_checkpoint, save_checkpoint};
use chemclip::model::ChemClipModel;
use chemclip::nn::Matrix;
use chemclip::train::TrainConfig;

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("model.cclp");

    let model = ChemClipModel::new(42, 0.1);
    let config = TrainConfig {
        epochs: 100,
        seed: 42,
        ..TrainConfig::default()
    };
    save_checkpoint(&path, &model, &config).expect("save");
    let bytes = std::fs::metadata(&path).expect("saved file").len();
    println!("saved {} ({bytes} bytes)", path.display());
    println!(
        "  inorganic head dims {:?}, organic head dims {:?}",
        model.inorganic_head.dims(),
        model.organic_head.dims()
    );

    let (restored, restored_config) = load_checkpoint(&path).expect("load");
    assert_eq!(restored_config, config);
    println!("restored config matches (epochs {}, seed {})", restored_config.epochs, restored_config.seed);

    // Same weights means same embeddings, bit for bit.
    let probe = Matrix::from_rows(&[vec![1.0; 2048]]);
    let before = model.embed_organic(&probe).expect("embed");
    let after = restored.embed_organic(&probe).expect("embed");
    assert_eq!(before.data(), after.data());
    println!("probe embedding identical before and after the round trip");
    println!("  first values: {:?}", &after.data()[..4]);
}
