//! Feature vectors for coordination complexes: the ligand fingerprint
//! (2048 bits) concatenated with 13 metal descriptors — a tracked-metal
//! one-hot, the oxidation state, and scaled atomic properties.
//!
//! ```sh
//! cargo run --example featurize_metal_complex
//! ```

use chemclip::featurize::{featurize_inorganic, featurize_organic, metal_feature_vector};
use chemclip::smiles::TRACKED_METALS;

fn main() {
    println!("tracked metals: {TRACKED_METALS:?}\n");

    // A cisplatin-like complex: ammine ligands around platinum(II).
    let ligand = "N.N.Cl.Cl";
    let complex = featurize_inorganic(ligand, "Pt", 2).expect("featurizable");
    let fingerprint_bits = complex.values[..2048].iter().filter(|&&v| v != 0.0).count();
    println!("ligands {ligand} + Pt(2+)");
    println!("  feature width: {} (2048 fingerprint + 13 metal)", complex.len());
    println!("  fingerprint bits set: {fingerprint_bits}");
    println!("  metal block: {:?}", &complex.values[2048..]);

    // The same ligands around a different metal differ only in the tail.
    let ruthenium = featurize_inorganic(ligand, "Ru", 3).expect("featurizable");
    let shared = complex.values[..2048] == ruthenium.values[..2048];
    println!("\nsame ligands around Ru(3+): fingerprint block identical = {shared}");
    println!("  metal block: {:?}", &ruthenium.values[2048..]);

    // Metal features alone.
    let pt = metal_feature_vector("Pt", 2).expect("tracked metal");
    println!("\nPt(2+) descriptors: one_hot {:?}", pt.one_hot);
    println!(
        "  oxidation {}  atomic number (scaled) {:.3}  valence electrons (scaled) {:.3}",
        pt.oxidation_state, pt.atomic_number_scaled, pt.valence_electrons_scaled
    );

    // Organic molecules use the fingerprint alone (2048 wide).
    let organic = featurize_organic("CC(=O)Oc1ccccc1C(=O)O").expect("featurizable");
    println!("\norganic aspirin feature width: {}", organic.len());

    // Untracked metals are an error, not a silent zero vector.
    match metal_feature_vector("Fe", 2) {
        Err(e) => println!("Fe(2+): {e}"),
        Ok(_) => unreachable!("Fe is not tracked"),
    }
}
