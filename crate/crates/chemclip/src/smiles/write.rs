//! SMILES output. The writer makes no attempt at canonical form: it walks
//! atoms in index order and emits one ring-closure digit per cycle edge.
//! Output always re-parses to a graph isomorphic to the input.

use super::{BondOrder, MolGraph};

/// Render `graph` as a SMILES string. Disconnected components are joined
/// with dots. Returns an empty string for an empty graph.
pub fn write_smiles(graph: &MolGraph) -> String {
    let n = graph.atoms.len();
    if n == 0 {
        return String::new();
    }

    // Adjacency with neighbors in index order so output is deterministic.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bond_idx, bond) in graph.bonds.iter().enumerate() {
        adj[bond.a].push((bond.b, bond_idx));
        adj[bond.b].push((bond.a, bond_idx));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    // Pass 1: spanning forest. Bonds outside the forest become ring
    // closures.
    let mut visited = vec![false; n];
    let mut tree_edge = vec![false; graph.bonds.len()];
    let mut stack: Vec<(usize, Option<usize>)> = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        stack.push((root, None));
        while let Some((atom, via)) = stack.pop() {
            if visited[atom] {
                continue; // reached through another path first
            }
            visited[atom] = true;
            if let Some(bond_idx) = via {
                tree_edge[bond_idx] = true;
            }
            for &(next, bond_idx) in adj[atom].iter().rev() {
                if !visited[next] {
                    stack.push((next, Some(bond_idx)));
                }
            }
        }
    }
    let mut cycle_edges_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bond_idx, bond) in graph.bonds.iter().enumerate() {
        if !tree_edge[bond_idx] {
            cycle_edges_at[bond.a].push(bond_idx);
            cycle_edges_at[bond.b].push(bond_idx);
        }
    }

    // Pass 2: emit. Ring digits are allocated smallest-free and returned to
    // the pool once closed.
    let mut out = String::new();
    let mut emitted = vec![false; n];
    let mut digit_of: Vec<Option<u16>> = vec![None; graph.bonds.len()];
    let mut digit_used = [false; 100];
    let mut first_component = true;
    for root in 0..n {
        if emitted[root] {
            continue;
        }
        if !first_component {
            out.push('.');
        }
        first_component = false;
        emit_component(
            graph,
            &adj,
            &tree_edge,
            &cycle_edges_at,
            root,
            &mut out,
            &mut emitted,
            &mut digit_of,
            &mut digit_used,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn emit_component(
    graph: &MolGraph,
    adj: &[Vec<(usize, usize)>],
    tree_edge: &[bool],
    cycle_edges_at: &[Vec<usize>],
    root: usize,
    out: &mut String,
    emitted: &mut [bool],
    digit_of: &mut [Option<u16>],
    digit_used: &mut [bool; 100],
) {
    // Frames: (atom, incoming bond). A frame emits its atom, ring digits,
    // then schedules unemitted tree children, wrapping all but the last in
    // parentheses.
    enum Step {
        Visit(usize, Option<usize>),
        Text(&'static str),
    }
    let mut stack = vec![Step::Visit(root, None)];
    while let Some(step) = stack.pop() {
        let (atom, via) = match step {
            Step::Text(t) => {
                out.push_str(t);
                continue;
            }
            Step::Visit(a, v) => (a, v),
        };
        if emitted[atom] {
            continue;
        }
        emitted[atom] = true;

        if let Some(bond_idx) = via {
            let bond = &graph.bonds[bond_idx];
            out.push_str(bond_symbol(graph, bond.a, bond.b, bond.order));
        }
        push_atom(graph, atom, out);

        for &bond_idx in &cycle_edges_at[atom] {
            match digit_of[bond_idx] {
                Some(digit) => {
                    push_ring_digit(out, digit);
                    digit_of[bond_idx] = None;
                    digit_used[digit as usize] = false;
                }
                None => {
                    let digit = (1..100)
                        .find(|&d| !digit_used[d as usize])
                        .expect("ring digit pool exhausted") as u16;
                    digit_used[digit as usize] = true;
                    digit_of[bond_idx] = Some(digit);
                    let bond = &graph.bonds[bond_idx];
                    out.push_str(bond_symbol(graph, bond.a, bond.b, bond.order));
                    push_ring_digit(out, digit);
                }
            }
        }

        let children: Vec<(usize, usize)> = adj[atom]
            .iter()
            .copied()
            .filter(|&(next, bond_idx)| tree_edge[bond_idx] && !emitted[next])
            .collect();
        // Push in reverse so children pop in index order; all but the last
        // are parenthesized.
        for (pos, &(next, bond_idx)) in children.iter().enumerate().rev() {
            let last = pos + 1 == children.len();
            if !last {
                stack.push(Step::Text(")"));
            }
            stack.push(Step::Visit(next, Some(bond_idx)));
            if !last {
                stack.push(Step::Text("("));
            }
        }
    }
}

fn bond_symbol(graph: &MolGraph, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = graph.atoms[a].aromatic && graph.atoms[b].aromatic;
    match order {
        BondOrder::Single => {
            if both_aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => {
            if both_aromatic {
                ""
            } else {
                ":"
            }
        }
    }
}

fn push_ring_digit(out: &mut String, digit: u16) {
    if digit < 10 {
        out.push(char::from(b'0' + digit as u8));
    } else {
        out.push('%');
        out.push(char::from(b'0' + (digit / 10) as u8));
        out.push(char::from(b'0' + (digit % 10) as u8));
    }
}

fn push_atom(graph: &MolGraph, idx: usize, out: &mut String) {
    let atom = &graph.atoms[idx];
    let symbol = atom.element.symbol();
    let needs_bracket = atom.bracket
        || atom.formal_charge != 0
        || atom.isotope.is_some()
        || !atom.element.in_organic_subset();

    let push_symbol = |out: &mut String| {
        if atom.aromatic {
            for c in symbol.chars() {
                out.extend(c.to_lowercase());
            }
        } else {
            out.push_str(symbol);
        }
    };

    if !needs_bracket {
        push_symbol(out);
        return;
    }

    out.push('[');
    if let Some(isotope) = atom.isotope {
        out.push_str(&isotope.to_string());
    }
    push_symbol(out);
    let h = atom
        .explicit_h
        .unwrap_or_else(|| graph.implicit_hydrogens(idx));
    match h {
        0 => {}
        1 => out.push('H'),
        n => {
            out.push('H');
            out.push_str(&n.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        n if n > 0 => out.push_str(&format!("+{n}")),
        n => out.push_str(&format!("-{}", -n)),
    }
    out.push(']');
}
