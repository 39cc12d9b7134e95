//! Chemical element lookup: the 118 IUPAC symbols keyed by atomic number.

/// One of the 118 IUPAC elements, stored as its atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

#[rustfmt::skip]
const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

impl Element {
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|s| *s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        if (1..=118).contains(&z) {
            Some(Element(z))
        } else {
            None
        }
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[usize::from(self.0) - 1]
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn is_hydrogen(self) -> bool {
        self.0 == 1
    }

    /// Daylight default valence for the organic subset; `None` for everything
    /// else (those atoms must be written in brackets).
    pub fn default_valence(self) -> Option<u8> {
        match self.symbol() {
            "B" => Some(3),
            "C" => Some(4),
            "N" => Some(3),
            "O" => Some(2),
            "P" => Some(3),
            "S" => Some(2),
            "F" | "Cl" | "Br" | "I" => Some(1),
            _ => None,
        }
    }

    /// Member of the organic subset, writable without brackets.
    pub fn in_organic_subset(self) -> bool {
        self.default_valence().is_some()
    }

    /// Can this element be written as a lowercase aromatic atom?
    pub fn supports_aromatic(self) -> bool {
        matches!(self.symbol(), "B" | "C" | "N" | "O" | "P" | "S")
    }

    /// One of the ten transition metals tracked throughout the pipeline.
    pub fn is_tracked_metal(self) -> bool {
        TRACKED_METALS.contains(&self.symbol())
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

/// The ten transition metals tracked throughout the pipeline, in alphabetical
/// symbol order (the order also used for one-hot metal features).
pub const TRACKED_METALS: [&str; 10] =
    ["Au", "Co", "Cu", "Ir", "Os", "Pt", "Re", "Rh", "Ru", "Ti"];

/// The default metal set as `Element`s.
pub fn tracked_metal_elements() -> Vec<Element> {
    TRACKED_METALS
        .iter()
        .map(|s| Element::from_symbol(s).expect("metal symbol"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_round_trip() {
        for z in 1..=118u8 {
            let e = Element::from_atomic_number(z).unwrap();
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
    }

    #[test]
    fn common_atomic_numbers() {
        assert_eq!(Element::from_symbol("C").unwrap().atomic_number(), 6);
        assert_eq!(Element::from_symbol("Pt").unwrap().atomic_number(), 78);
        assert_eq!(Element::from_symbol("Ru").unwrap().atomic_number(), 44);
        assert_eq!(Element::from_symbol("Og").unwrap().atomic_number(), 118);
        assert!(Element::from_symbol("Xx").is_none());
    }

    #[test]
    fn organic_subset_valences() {
        for (sym, val) in [("B", 3), ("C", 4), ("N", 3), ("O", 2), ("P", 3), ("S", 2), ("F", 1), ("Cl", 1), ("Br", 1), ("I", 1)] {
            assert_eq!(
                Element::from_symbol(sym).unwrap().default_valence(),
                Some(val)
            );
        }
        assert_eq!(Element::from_symbol("Pt").unwrap().default_valence(), None);
    }
}
