//! Morgan (ECFP-style) circular fingerprints: hashed atom environments up
//! to radius 2, folded into 2048 bits. Equivalent spellings of one molecule
//! produce bit-identical fingerprints; different molecules overlap only
//! partially.
//!
//! ```sh
//! cargo run --example fingerprint
//! ```

use chemclip::featurize::{morgan_fingerprint, Fingerprint, FP_BITS, FP_RADIUS};
use chemclip::smiles::parse_smiles;

fn fp(smiles: &str) -> Fingerprint {
    let graph = parse_smiles(smiles).expect("valid SMILES");
    morgan_fingerprint(&graph, FP_RADIUS, FP_BITS)
}

fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let a: std::collections::BTreeSet<usize> = a.ones().into_iter().collect();
    let b: std::collections::BTreeSet<usize> = b.ones().into_iter().collect();
    let shared = a.intersection(&b).count() as f64;
    let union = a.union(&b).count().max(1) as f64;
    shared / union
}

fn main() {
    for smiles in ["C", "CCO", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O"] {
        let print = fp(smiles);
        println!("{smiles}: {} distinct environments", print.n_distinct());
        println!("  set bits: {:?}", print.ones());
    }

    // Spelling does not matter; structure does.
    let ethanol = fp("CCO");
    assert_eq!(ethanol, fp("OCC"));
    assert_eq!(ethanol, fp("C(O)C"));
    println!("\nCCO == OCC == C(O)C: fingerprints identical");

    let pairs = [("CCO", "CCN"), ("CCO", "CCCO"), ("c1ccccc1", "C1CCCCC1")];
    for (left, right) in pairs {
        println!("similarity({left}, {right}) = {:.3}", tanimoto(&fp(left), &fp(right)));
    }
}
