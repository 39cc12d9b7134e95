//! Parse SMILES strings into molecular graphs and inspect what the parser
//! saw: atoms, bonds, rings, aromaticity, and charges.
//!
//! ```sh
//! cargo run --example parse_smiles
//! ```

use chemclip::smiles::{parse_smiles, write_smiles};

fn main() {
    let inputs = [
        "CCO",                     // ethanol
        "c1ccccc1",                // benzene, aromatic form
        "CC(=O)Oc1ccccc1C(=O)O",   // aspirin
        "[Pt+2]",                  // bare platinum(II) center
        "N#Cc1ccc(Cl)cc1",         // 4-chlorobenzonitrile
        "C1CC1C(=O)[O-]",          // cyclopropane carboxylate
    ];

    for smiles in inputs {
        match parse_smiles(smiles) {
            Ok(graph) => {
                let aromatic = graph.atoms.iter().filter(|a| a.aromatic).count();
                let in_ring = graph.atoms.iter().filter(|a| a.in_ring).count();
                let charged = graph.atoms.iter().filter(|a| a.formal_charge != 0).count();
                println!("{smiles}");
                println!("  atoms: {:2}  bonds: {:2}", graph.atoms.len(), graph.bonds.len());
                println!("  ring atoms: {in_ring}  aromatic atoms: {aromatic}  charged atoms: {charged}");
                println!("  round trip: {}", write_smiles(&graph));
            }
            Err(e) => println!("{smiles}\n  rejected: {e}"),
        }
    }

    // The parser reports errors with byte positions.
    for bad in ["CC(", "C1CC", "c1ccccc1C(=O)OXe"] {
        if let Err(e) = parse_smiles(bad) {
            println!("{bad}\n  rejected: {e}");
        }
    }
}
