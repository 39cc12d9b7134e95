//! Recursive-descent SMILES reader.

use std::collections::HashMap;

use super::{mark_rings, Atom, Bond, BondOrder, Element, MolGraph, SmilesError};

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Attachment point for the next atom or ring digit; `None` after a dot.
    prev: Option<usize>,
    /// Bond symbol waiting to be consumed, with its byte offset.
    pending: Option<(BondOrder, usize)>,
    /// Open branches: (attachment atom, offset of '(', atom count at open).
    branch_stack: Vec<(Option<usize>, usize, usize)>,
    /// Open ring closures: digit -> (atom, bond symbol at open, offset).
    rings: HashMap<u16, (usize, Option<BondOrder>, usize)>,
}

/// Parse a SMILES string into a [`MolGraph`] with ring membership computed.
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError::EmptyInput);
    }
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branch_stack: Vec::new(),
        rings: HashMap::new(),
    };
    p.run()?;
    let mut graph = MolGraph {
        atoms: p.atoms,
        bonds: p.bonds,
        source: text.to_string(),
    };
    mark_rings(&mut graph);
    Ok(graph)
}

impl<'a> Parser<'a> {
    fn run(&mut self) -> Result<(), SmilesError> {
        while self.pos < self.bytes.len() {
            let offset = self.pos;
            let c = self.bytes[self.pos];
            match c {
                b'(' => {
                    if let Some((_, bond_off)) = self.pending {
                        return Err(SmilesError::DanglingBondSymbol { offset: bond_off });
                    }
                    if self.prev.is_none() {
                        return Err(SmilesError::UnexpectedCharacter { ch: '(', offset });
                    }
                    self.branch_stack.push((self.prev, offset, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    if let Some((_, bond_off)) = self.pending {
                        return Err(SmilesError::DanglingBondSymbol { offset: bond_off });
                    }
                    let Some((attach, _, atoms_at_open)) = self.branch_stack.pop() else {
                        return Err(SmilesError::UnbalancedParenthesis { offset });
                    };
                    if self.atoms.len() == atoms_at_open {
                        // Empty branch "C()".
                        return Err(SmilesError::UnexpectedCharacter { ch: ')', offset });
                    }
                    self.prev = attach;
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, bond_off)) = self.pending {
                        return Err(SmilesError::DanglingBondSymbol { offset: bond_off });
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if let Some((_, bond_off)) = self.pending {
                        return Err(SmilesError::DanglingBondSymbol { offset: bond_off });
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        // '/' and '\' are stereo single bonds; stereo is discarded.
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, offset));
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    self.pos += 1;
                    self.ring_digit(u16::from(c - b'0'), offset)?;
                }
                b'%' => {
                    let d1 = self.bytes.get(self.pos + 1).copied();
                    let d2 = self.bytes.get(self.pos + 2).copied();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            self.pos += 3;
                            let digit = u16::from(a - b'0') * 10 + u16::from(b - b'0');
                            self.ring_digit(digit, offset)?;
                        }
                        _ => {
                            return Err(SmilesError::UnexpectedCharacter { ch: '%', offset });
                        }
                    }
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, offset)?;
                }
                b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                    let symbol = (c as char).to_uppercase().to_string();
                    let element = Element::from_symbol(&symbol).expect("organic subset");
                    self.pos += 1;
                    self.add_atom(
                        Atom {
                            element,
                            formal_charge: 0,
                            isotope: None,
                            aromatic: true,
                            explicit_h: None,
                            in_ring: false,
                            bracket: false,
                        },
                        offset,
                    )?;
                }
                b'A'..=b'Z' => {
                    // Two-letter organic-subset atoms first (Cl, Br).
                    let two = self.bytes.get(self.pos + 1).map(|&n| {
                        let mut s = String::with_capacity(2);
                        s.push(c as char);
                        s.push(n as char);
                        s
                    });
                    let element = match two.as_deref() {
                        Some("Cl") | Some("Br") => {
                            self.pos += 2;
                            Element::from_symbol(two.as_deref().unwrap()).unwrap()
                        }
                        _ => {
                            let sym = (c as char).to_string();
                            match Element::from_symbol(&sym) {
                                Some(e) if e.in_organic_subset() => {
                                    self.pos += 1;
                                    e
                                }
                                _ => {
                                    return Err(SmilesError::UnknownElement {
                                        symbol: sym,
                                        offset,
                                    });
                                }
                            }
                        }
                    };
                    self.add_atom(
                        Atom {
                            element,
                            formal_charge: 0,
                            isotope: None,
                            aromatic: false,
                            explicit_h: None,
                            in_ring: false,
                            bracket: false,
                        },
                        offset,
                    )?;
                }
                _ => {
                    return Err(SmilesError::UnexpectedCharacter {
                        ch: self.bytes[self.pos..]
                            .iter()
                            .map(|&b| b as char)
                            .next()
                            .unwrap(),
                        offset,
                    });
                }
            }
        }

        if let Some((_, bond_off)) = self.pending {
            return Err(SmilesError::DanglingBondSymbol { offset: bond_off });
        }
        if let Some(&(_, offset, _)) = self.branch_stack.first() {
            return Err(SmilesError::UnbalancedParenthesis { offset });
        }
        if !self.rings.is_empty() {
            let (&digit, &(_, _, offset)) = self
                .rings
                .iter()
                .min_by_key(|(_, &(_, _, off))| off)
                .expect("non-empty");
            return Err(SmilesError::UnclosedRingBond { digit, offset });
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        match self.prev {
            Some(prev) => {
                let order = match self.pending.take() {
                    Some((order, _)) => order,
                    None => {
                        if aromatic && self.atoms[prev].aromatic {
                            BondOrder::Aromatic
                        } else {
                            BondOrder::Single
                        }
                    }
                };
                self.bonds.push(Bond {
                    a: prev,
                    b: idx,
                    order,
                });
            }
            None => {
                if let Some((_, bond_off)) = self.pending {
                    return Err(SmilesError::DanglingBondSymbol { offset: bond_off });
                }
                let _ = offset;
            }
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_digit(&mut self, digit: u16, offset: usize) -> Result<(), SmilesError> {
        let Some(current) = self.prev else {
            return Err(SmilesError::UnexpectedCharacter {
                ch: char::from_digit(u32::from(digit % 10), 10).unwrap_or('%'),
                offset,
            });
        };
        let pending = self.pending.take().map(|(order, _)| order);
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(digit, (current, pending, offset));
                Ok(())
            }
            Some((other, open_order, _)) => {
                if other == current {
                    return Err(SmilesError::SelfBond { offset });
                }
                let order = match (open_order, pending) {
                    (None, None) => {
                        if self.atoms[other].aromatic && self.atoms[current].aromatic {
                            BondOrder::Aromatic
                        } else {
                            BondOrder::Single
                        }
                    }
                    (Some(o), None) | (None, Some(o)) => o,
                    (Some(a), Some(b)) if a == b => a,
                    (Some(_), Some(_)) => {
                        return Err(SmilesError::RingBondConflict { offset });
                    }
                };
                let duplicate = self.bonds.iter().any(|b| {
                    (b.a == other && b.b == current) || (b.a == current && b.b == other)
                });
                if duplicate {
                    return Err(SmilesError::DuplicateBond { offset });
                }
                self.bonds.push(Bond {
                    a: other,
                    b: current,
                    order,
                });
                Ok(())
            }
        }
    }

    /// Parse `[isotope? symbol chirality? hcount? charge? class?]`, with the
    /// cursor on `[`.
    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1; // consume '['

        let malformed = |offset: usize, reason: &str| SmilesError::MalformedBracket {
            offset,
            reason: reason.to_string(),
        };

        // Isotope.
        let iso_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        let isotope = if self.pos > iso_start {
            let digits = std::str::from_utf8(&self.bytes[iso_start..self.pos]).unwrap();
            let value: u32 = digits
                .parse()
                .map_err(|_| malformed(iso_start, "isotope out of range"))?;
            if value == 0 {
                return Err(malformed(iso_start, "isotope must be positive"));
            }
            Some(value)
        } else {
            None
        };

        // Element symbol.
        let sym_off = self.pos;
        let first = self
            .peek()
            .ok_or_else(|| SmilesError::UnclosedBracket { offset: open })?;
        let (element, aromatic) = if first.is_ascii_uppercase() {
            let second = self.bytes.get(self.pos + 1).copied();
            let two = second.filter(|b| b.is_ascii_lowercase()).map(|b| {
                let mut s = String::with_capacity(2);
                s.push(first as char);
                s.push(b as char);
                s
            });
            if let Some(sym) = two.as_deref().and_then(Element::from_symbol) {
                self.pos += 2;
                (sym, false)
            } else if let Some(sym) = Element::from_symbol(&(first as char).to_string()) {
                self.pos += 1;
                (sym, false)
            } else {
                return Err(SmilesError::UnknownElement {
                    symbol: two.unwrap_or_else(|| (first as char).to_string()),
                    offset: sym_off,
                });
            }
        } else if first.is_ascii_lowercase() {
            let symbol = (first as char).to_uppercase().to_string();
            match Element::from_symbol(&symbol) {
                Some(e) if e.supports_aromatic() => {
                    self.pos += 1;
                    (e, true)
                }
                _ => {
                    return Err(SmilesError::UnknownElement {
                        symbol: (first as char).to_string(),
                        offset: sym_off,
                    });
                }
            }
        } else {
            return Err(malformed(sym_off, "expected element symbol"));
        };

        // Chirality markers: parsed and discarded.
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }

        // Hydrogen count.
        let explicit_h = if self.peek() == Some(b'H') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos > start {
                let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                digits
                    .parse::<u32>()
                    .map_err(|_| malformed(start, "hydrogen count out of range"))?
            } else {
                1
            }
        } else {
            0
        };

        // Charge: "+", "++", "+2", "-", "--", "-3".
        let mut formal_charge: i32 = 0;
        if let Some(sign) = self.peek().filter(|&b| b == b'+' || b == b'-') {
            let unit: i32 = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            let digit_start = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos > digit_start {
                let digits = std::str::from_utf8(&self.bytes[digit_start..self.pos]).unwrap();
                let magnitude: i32 = digits
                    .parse()
                    .map_err(|_| malformed(digit_start, "charge out of range"))?;
                formal_charge = unit * magnitude;
            } else {
                formal_charge = unit;
                while self.peek() == Some(sign) {
                    formal_charge += unit;
                    self.pos += 1;
                }
            }
        }

        // Atom class: parsed and discarded.
        if self.peek() == Some(b':') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(malformed(start, "expected atom-class digits"));
            }
        }

        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(Atom {
                    element,
                    formal_charge,
                    isotope,
                    aromatic,
                    explicit_h: Some(explicit_h),
                    in_ring: false,
                    bracket: true,
                })
            }
            Some(other) => Err(malformed(
                self.pos,
                &format!("unexpected '{}' in bracket atom", other as char),
            )),
            None => Err(SmilesError::UnclosedBracket { offset: open }),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }
}
