//! The distributive lattice on the cells of a ladder shape.
//!
//! The cells of S under the componentwise order form a finite distributive
//! lattice L (meet and join are the componentwise min and max, which stay
//! inside S for monotone interval shapes). A change-point subtable is a
//! poset ideal of L, and the incomparable 2-element subsets compatible with
//! that ideal are in bijection with the square-free degree-2 moves of the
//! minimal Markov basis: the pair `{(i1,j2),(i2,j1)}` corresponds to the
//! move `z(i1,i2;j1,j2)` supported on the diamond it spans.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::Move;
use crate::model::{subtable_ideal_witness, Cell, LadderShape, Subtable};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("cells {a} and {b} have componentwise bound {missing} outside the table: not a lattice")]
    NotALattice { a: Cell, b: Cell, missing: Cell },
    #[error("subtable is not a poset ideal: contains {member} but not {missing} below it")]
    NotAnIdeal { member: Cell, missing: Cell },
}

/// The cells of a shape under the componentwise order, with meet and join.
#[derive(Clone, Debug)]
pub struct CellLattice {
    shape: LadderShape,
    cells: Vec<Cell>,
}

/// Builds the lattice over all cells of `shape`, verifying closure under
/// componentwise min and max (guaranteed for monotone interval endpoints,
/// checked exhaustively anyway).
pub fn build_lattice(shape: &LadderShape) -> Result<CellLattice, LatticeError> {
    if let Some((a, b, missing)) = shape.minmax_closure_witness() {
        return Err(LatticeError::NotALattice { a, b, missing });
    }
    Ok(CellLattice { shape: shape.clone(), cells: shape.cells().collect() })
}

impl CellLattice {
    pub fn shape(&self) -> &LadderShape {
        &self.shape
    }

    /// All elements in row-major order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The unique minimal element `(1, l_1)`.
    pub fn bottom(&self) -> Cell {
        self.cells[0]
    }

    /// The unique maximal element `(I, u_I)`.
    pub fn top(&self) -> Cell {
        *self.cells.last().expect("lattice is nonempty")
    }

    pub fn meet(&self, a: Cell, b: Cell) -> Cell {
        let m = a.meet(&b);
        debug_assert!(self.shape.contains(m));
        m
    }

    pub fn join(&self, a: Cell, b: Cell) -> Cell {
        let j = a.join(&b);
        debug_assert!(self.shape.contains(j));
        j
    }

    /// True when every two elements are comparable.
    pub fn is_chain(&self) -> bool {
        self.cells.iter().enumerate().all(|(idx, a)| self.cells[idx + 1..].iter().all(|b| !a.incomparable(b)))
    }

    fn lower_covers_in(&self, cell: Cell, alive: &[bool]) -> Vec<Cell> {
        let below: Vec<Cell> = self
            .cells
            .iter()
            .enumerate()
            .filter(|&(k, c)| alive[k] && *c != cell && c.leq(&cell))
            .map(|(_, &c)| c)
            .collect();
        below
            .iter()
            .filter(|&&y| !below.iter().any(|&z| z != y && y.leq(&z)))
            .copied()
            .collect()
    }

    fn upper_covers_in(&self, cell: Cell, alive: &[bool]) -> Vec<Cell> {
        let above: Vec<Cell> = self
            .cells
            .iter()
            .enumerate()
            .filter(|&(k, c)| alive[k] && *c != cell && cell.leq(c))
            .map(|(_, &c)| c)
            .collect();
        above
            .iter()
            .filter(|&&y| !above.iter().any(|&z| z != y && z.leq(&y)))
            .copied()
            .collect()
    }

    /// Elements covered by `cell`.
    pub fn lower_covers(&self, cell: Cell) -> Vec<Cell> {
        self.lower_covers_in(cell, &vec![true; self.cells.len()])
    }

    /// Elements covering `cell`.
    pub fn upper_covers(&self, cell: Cell) -> Vec<Cell> {
        self.upper_covers_in(cell, &vec![true; self.cells.len()])
    }

    /// Hasse diagram as `(lower, upper)` cover pairs, in row-major order of
    /// the upper element.
    pub fn hasse_edges(&self) -> Vec<(Cell, Cell)> {
        let alive = vec![true; self.cells.len()];
        let mut edges = Vec::new();
        for &cell in &self.cells {
            for lower in self.lower_covers_in(cell, &alive) {
                edges.push((lower, cell));
            }
        }
        edges
    }
}

/// Join-irreducible elements of the lattice, split into the two chains of
/// the Birkhoff poset P with `J(P)` isomorphic to the lattice.
///
/// Margin cells that are comparable to every element (the bottom while it
/// has a single cover, the top while it has a single lower cover) carry no
/// incomparability information — their counts are fixed by the margins —
/// and are peeled off before computing P, so `J(P)` reconstructs the peeled
/// lattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDecomposition {
    /// Join-irreducibles whose unique lower cover lies in the row above.
    pub row_chain: Vec<Cell>,
    /// Join-irreducibles whose unique lower cover lies in the column to the left.
    pub col_chain: Vec<Cell>,
    /// Set when the lattice is totally ordered; `row_chain` then holds the
    /// single chain (all non-bottom elements) and planarity does not apply.
    pub lattice_is_chain: bool,
}

/// Computes the chain decomposition `(C, D)` of the join-irreducibles.
pub fn join_irreducibles(lattice: &CellLattice) -> ChainDecomposition {
    if lattice.is_chain() {
        return ChainDecomposition {
            row_chain: lattice.cells()[1..].to_vec(),
            col_chain: Vec::new(),
            lattice_is_chain: true,
        };
    }

    let cells = lattice.cells();
    let mut alive = vec![true; cells.len()];

    // Peel the bottom while it has a unique upper cover, then the top while
    // it has a unique lower cover. Peeled elements are comparable to every
    // remaining element, so no incomparable pair is lost.
    let mut bottom_idx = 0usize;
    loop {
        let covers = lattice.upper_covers_in(cells[bottom_idx], &alive);
        if covers.len() != 1 {
            break;
        }
        alive[bottom_idx] = false;
        bottom_idx = cells.iter().position(|&c| c == covers[0]).expect("cover is a lattice element");
    }
    let mut top_idx = cells.len() - 1;
    loop {
        let covers = lattice.lower_covers_in(cells[top_idx], &alive);
        if covers.len() != 1 {
            break;
        }
        alive[top_idx] = false;
        top_idx = cells.iter().position(|&c| c == covers[0]).expect("cover is a lattice element");
    }

    let mut row_chain = Vec::new();
    let mut col_chain = Vec::new();
    for (k, &cell) in cells.iter().enumerate() {
        if !alive[k] {
            continue;
        }
        let covers = lattice.lower_covers_in(cell, &alive);
        if covers.len() != 1 {
            continue;
        }
        if covers[0].row < cell.row {
            row_chain.push(cell);
        } else {
            col_chain.push(cell);
        }
    }
    row_chain.sort();
    col_chain.sort();
    ChainDecomposition { row_chain, col_chain, lattice_is_chain: false }
}

/// Result of the poset-ideal check: on failure, `witness` holds a pair
/// `(a, b)` with `a` in the subtable and `b <= a` outside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdealCheck {
    pub ok: bool,
    pub witness: Option<(Cell, Cell)>,
}

/// Checks that the subtable is downward closed in the componentwise order.
pub fn is_poset_ideal(lattice: &CellLattice, sub: &Subtable) -> IdealCheck {
    match subtable_ideal_witness(lattice.shape(), sub) {
        None => IdealCheck { ok: true, witness: None },
        Some(w) => IdealCheck { ok: false, witness: Some(w) },
    }
}

/// Classification of an incomparable pair relative to the subtable B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairClass {
    /// Both elements and their join lie in B (the meet then does too).
    JoinInB,
    /// Both elements and their meet lie outside B (the join then does too).
    MeetOutB,
    /// One element in B, the other outside.
    Split,
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairClass::JoinInB => write!(f, "join-in-B"),
            PairClass::MeetOutB => write!(f, "meet-outside-B"),
            PairClass::Split => write!(f, "split"),
        }
    }
}

/// An incomparable 2-element subset of the lattice compatible with B. For
/// a [`PairClass::Split`] pair, `alpha` is the element inside B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncomparablePair {
    pub alpha: Cell,
    pub beta: Cell,
    pub class: PairClass,
}

/// Enumerates the incomparable pairs whose associated binomial preserves
/// the subtable sum: both-in-B pairs with join in B, both-outside pairs
/// with meet outside B, and all mixed pairs. Requires B to be a poset
/// ideal of the lattice.
pub fn incomparable_pairs(lattice: &CellLattice, sub: &Subtable) -> Result<Vec<IncomparablePair>, LatticeError> {
    if let Some((member, missing)) = subtable_ideal_witness(lattice.shape(), sub) {
        return Err(LatticeError::NotAnIdeal { member, missing });
    }
    let cells = lattice.cells();
    let mut pairs = Vec::new();
    for (idx, &a) in cells.iter().enumerate() {
        for &b in &cells[idx + 1..] {
            if !a.incomparable(&b) {
                continue;
            }
            let in_a = sub.contains(a);
            let in_b = sub.contains(b);
            let pair = match (in_a, in_b) {
                (true, true) if sub.contains(lattice.join(a, b)) => {
                    IncomparablePair { alpha: a, beta: b, class: PairClass::JoinInB }
                }
                (false, false) if !sub.contains(lattice.meet(a, b)) => {
                    IncomparablePair { alpha: a, beta: b, class: PairClass::MeetOutB }
                }
                (true, false) => IncomparablePair { alpha: a, beta: b, class: PairClass::Split },
                (false, true) => IncomparablePair { alpha: b, beta: a, class: PairClass::Split },
                _ => continue,
            };
            pairs.push(pair);
        }
    }
    Ok(pairs)
}

/// The move whose binomial is `z_alpha z_beta - z_meet z_join`: with the
/// pair occupying the anti-diagonal corners `(i1,j2)` and `(i2,j1)` of a
/// diamond, the canonical-sign move is `z(i1,i2;j1,j2)` (+1 on the meet and
/// join, -1 on the pair).
pub fn pair_to_move(pair: &IncomparablePair) -> Move {
    let (a, b) = (pair.alpha, pair.beta);
    debug_assert!(a.incomparable(&b));
    let i1 = a.row.min(b.row);
    let i2 = a.row.max(b.row);
    let j1 = a.col.min(b.col);
    let j2 = a.col.max(b.col);
    Move::new(i1, i2, j1, j2)
}
