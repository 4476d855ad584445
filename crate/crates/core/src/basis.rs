//! The unique minimal Markov basis of square-free degree-2 moves.
//!
//! For a ladder shape with subtable B fixed alongside the row and column
//! sums, the Markov basis consists of the basic moves `z(i1,i2;j1,j2)`
//! whose four cells lie in S and overlap B in an even pattern: all four in
//! B, all four outside, the top row pair inside with the bottom pair
//! outside, or the left column pair inside with the right pair outside.
//! Every other diamond changes the subtable sum.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{build_lattice, incomparable_pairs, pair_to_move, LatticeError};
use crate::model::{subtable_ideal_witness, Cell, ConfigMatrix, LadderShape, Subtable, Table};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BasisError {
    #[error("vector length {found} does not match the configuration's {expected} cells")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("move cell {0} lies outside the shape")]
    CellOutsideShape(Cell),
}

/// A square-free degree-2 move in canonical sign: +1 at `(i1,j1)` and
/// `(i2,j2)`, -1 at `(i1,j2)` and `(i2,j1)`, with `i1 < i2`, `j1 < j2`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Move {
    i1: usize,
    i2: usize,
    j1: usize,
    j2: usize,
}

impl Move {
    /// Requires `i1 < i2` and `j1 < j2`.
    pub fn new(i1: usize, i2: usize, j1: usize, j2: usize) -> Self {
        assert!(i1 < i2 && j1 < j2, "move indices must satisfy i1 < i2 and j1 < j2");
        Move { i1, i2, j1, j2 }
    }

    pub fn row_pair(&self) -> (usize, usize) {
        (self.i1, self.i2)
    }

    pub fn col_pair(&self) -> (usize, usize) {
        (self.j1, self.j2)
    }

    /// The four supported cells with their coefficients, in row-major order.
    pub fn cells(&self) -> [(Cell, i64); 4] {
        [
            (Cell::new(self.i1, self.j1), 1),
            (Cell::new(self.i1, self.j2), -1),
            (Cell::new(self.i2, self.j1), -1),
            (Cell::new(self.i2, self.j2), 1),
        ]
    }

    /// The two +1 cells (the diamond's meet and join).
    pub fn positive_cells(&self) -> [Cell; 2] {
        [Cell::new(self.i1, self.j1), Cell::new(self.i2, self.j2)]
    }

    /// The two -1 cells (the incomparable corners).
    pub fn negative_cells(&self) -> [Cell; 2] {
        [Cell::new(self.i1, self.j2), Cell::new(self.i2, self.j1)]
    }

    /// True when all four cells are cells of `shape`.
    pub fn in_shape(&self, shape: &LadderShape) -> bool {
        self.cells().iter().all(|(c, _)| shape.contains(*c))
    }

    /// Dense vector over the shape's cells in row-major order.
    pub fn dense(&self, shape: &LadderShape) -> Result<Vec<i64>, BasisError> {
        let mut z = vec![0i64; shape.cell_count()];
        for (cell, coef) in self.cells() {
            let k = shape.cell_index(cell).ok_or(BasisError::CellOutsideShape(cell))?;
            z[k] = coef;
        }
        Ok(z)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z({},{};{},{})", self.i1, self.i2, self.j1, self.j2)
    }
}

/// Direction in which a move is applied.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MoveSign {
    Plus,
    Minus,
}

impl MoveSign {
    pub fn signum(&self) -> i64 {
        match self {
            MoveSign::Plus => 1,
            MoveSign::Minus => -1,
        }
    }
}

/// Generates the minimal Markov basis: every canonical move whose four
/// cells lie in S with an even B-overlap pattern, ordered lexicographically
/// by `(i1, i2, j1, j2)`. Fails when B is not a poset ideal of S.
pub fn generate_markov_basis(shape: &LadderShape, sub: &Subtable) -> Result<Vec<Move>, LatticeError> {
    if let Some((member, missing)) = subtable_ideal_witness(shape, sub) {
        return Err(LatticeError::NotAnIdeal { member, missing });
    }
    let rows = shape.row_count();
    let mut moves = Vec::new();
    for i1 in 1..=rows {
        let (l1, u1) = shape.row_interval(i1);
        for i2 in i1 + 1..=rows {
            let (l2, u2) = shape.row_interval(i2);
            let lo = l1.max(l2);
            let hi = u1.min(u2);
            if hi < lo + 1 {
                continue;
            }
            for j1 in lo..hi {
                for j2 in j1 + 1..=hi {
                    let top_left = sub.contains(Cell::new(i1, j1));
                    let top_right = sub.contains(Cell::new(i1, j2));
                    let bot_left = sub.contains(Cell::new(i2, j1));
                    let bot_right = sub.contains(Cell::new(i2, j2));
                    let keep = (top_left && top_right && bot_left && bot_right)
                        || (!top_left && !top_right && !bot_left && !bot_right)
                        || (top_left && top_right && !bot_left && !bot_right)
                        || (top_left && bot_left && !top_right && !bot_right);
                    if keep {
                        moves.push(Move::new(i1, i2, j1, j2));
                    }
                }
            }
        }
    }
    Ok(moves)
}

/// True when `A z = 0` exactly, in integer arithmetic.
pub fn is_move(config: &ConfigMatrix, z: &[i64]) -> Result<bool, BasisError> {
    if z.len() != config.col_count() {
        return Err(BasisError::DimensionMismatch { expected: config.col_count(), found: z.len() });
    }
    Ok(config.multiply(z).iter().all(|&v| v == 0))
}

/// Applies `sign * move` to the table. Returns `None` when some entry
/// would become negative (the table is left untouched). Panics if the move
/// reaches outside the table's shape.
pub fn apply_move(table: &Table, mv: &Move, sign: MoveSign) -> Option<Table> {
    let shape = table.shape();
    let mut counts = table.counts().to_vec();
    for (cell, coef) in mv.cells() {
        let k = shape
            .cell_index(cell)
            .unwrap_or_else(|| panic!("move cell {cell} lies outside the table's shape"));
        let delta = coef * sign.signum();
        if delta < 0 {
            counts[k] = counts[k].checked_sub(1)?;
        } else {
            counts[k] += 1;
        }
    }
    Some(Table::new(shape.clone(), counts).expect("shape unchanged"))
}

/// Verifies the lattice correspondence: the incomparable pairs map exactly
/// onto the generated basis, as sets of canonical moves.
pub fn verify_basis_equals_lattice(shape: &LadderShape, sub: &Subtable) -> Result<bool, LatticeError> {
    let lattice = build_lattice(shape)?;
    let pairs = incomparable_pairs(&lattice, sub)?;
    let via_pairs: std::collections::BTreeSet<Move> = pairs.iter().map(pair_to_move).collect();
    let via_minors: std::collections::BTreeSet<Move> = generate_markov_basis(shape, sub)?.into_iter().collect();
    Ok(via_pairs.len() == pairs.len() && via_pairs == via_minors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{change_point_subtable, configuration_matrix, LadderShape, Table};
    use crate::testdata::{example_2_1, hydra_b42, hydra_table, HYDRA_BASIS};
    use std::collections::BTreeSet;

    #[test]
    fn hydra_basis_is_the_reference_move_list() {
        let table = hydra_table();
        let sub = hydra_b42(table.shape());
        let basis = generate_markov_basis(table.shape(), &sub).unwrap();
        let expected: Vec<Move> =
            HYDRA_BASIS.iter().map(|&(i1, i2, j1, j2)| Move::new(i1, i2, j1, j2)).collect();
        assert_eq!(basis, expected, "generation order is lexicographic in (i1,i2,j1,j2)");
    }

    #[test]
    fn two_by_two_edge_cases() {
        let shape = LadderShape::complete(2, 2);
        let corner = Subtable::from_cells(&shape, [Cell::new(1, 1)]).unwrap();
        assert!(generate_markov_basis(&shape, &corner).unwrap().is_empty());

        let basis = generate_markov_basis(&shape, &Subtable::empty()).unwrap();
        assert_eq!(basis, vec![Move::new(1, 2, 1, 2)]);
    }

    #[test]
    fn basis_moves_are_kernel_vectors() {
        let table = hydra_table();
        let sub = hydra_b42(table.shape());
        let config = configuration_matrix(table.shape(), &sub).unwrap();
        for mv in generate_markov_basis(table.shape(), &sub).unwrap() {
            let z = mv.dense(table.shape()).unwrap();
            assert!(is_move(&config, &z).unwrap(), "{mv} must satisfy Az = 0");
        }
    }

    #[test]
    fn subtable_breaking_minor_is_not_a_move() {
        // z(3,5;2,3) shifts one count across the boundary of B, so the
        // subtable row of A maps it to -1.
        let table = hydra_table();
        let sub = hydra_b42(table.shape());
        let config = configuration_matrix(table.shape(), &sub).unwrap();
        let z = Move::new(3, 5, 2, 3).dense(table.shape()).unwrap();
        assert!(!is_move(&config, &z).unwrap());
        let product = config.multiply(&z);
        assert_eq!(product[14].abs(), 1, "subtable row picks up the net B change");
        assert!(product[..14].iter().all(|&v| v == 0), "row and column sums are preserved");

        let zero = vec![0i64; config.col_count()];
        assert!(is_move(&config, &zero).unwrap());

        assert!(matches!(
            is_move(&config, &[0i64; 3]),
            Err(BasisError::DimensionMismatch { expected: 22, found: 3 })
        ));
    }

    #[test]
    fn apply_move_examples() {
        let shape = LadderShape::complete(2, 2);
        let mv = Move::new(1, 2, 1, 2);

        let table = Table::new(shape.clone(), vec![2, 0, 0, 2]).unwrap();
        let moved = apply_move(&table, &mv, MoveSign::Minus).unwrap();
        assert_eq!(moved.counts(), &[1, 1, 1, 1]);

        let table = Table::new(shape.clone(), vec![0, 1, 1, 0]).unwrap();
        let plus = apply_move(&table, &mv, MoveSign::Plus).unwrap();
        assert_eq!(plus.counts(), &[1, 0, 0, 1]);
        assert_eq!(apply_move(&table, &mv, MoveSign::Minus), None);
        // the original table is untouched on the infeasible branch
        assert_eq!(table.counts(), &[0, 1, 1, 0]);
    }

    #[test]
    fn moves_preserve_sufficient_statistics() {
        let table = hydra_table();
        let sub = hydra_b42(table.shape());
        let before = crate::model::sufficient_statistic(&table, &sub);
        let moved = apply_move(&table, &Move::new(2, 3, 1, 2), MoveSign::Minus).unwrap();
        let after = crate::model::sufficient_statistic(&moved, &sub);
        assert_eq!(before, after);

        let back = apply_move(&moved, &Move::new(2, 3, 1, 2), MoveSign::Plus).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn lattice_correspondence_examples() {
        let table = hydra_table();
        assert!(verify_basis_equals_lattice(table.shape(), &hydra_b42(table.shape())).unwrap());

        let shape = LadderShape::complete(3, 3);
        let sub = change_point_subtable(&shape, 1, 1).unwrap();
        assert!(verify_basis_equals_lattice(&shape, &sub).unwrap());

        assert!(verify_basis_equals_lattice(&shape, &Subtable::empty()).unwrap());

        let (shape, sub) = example_2_1();
        assert!(verify_basis_equals_lattice(&shape, &sub).unwrap());
    }

    /// Completeness: the generated basis equals the set of all square-free
    /// degree-2 kernel vectors of A, found by scanning every diamond.
    #[test]
    fn basis_equals_all_degree_two_kernel_minors() {
        let cases: Vec<(LadderShape, Subtable)> = vec![
            {
                let t = hydra_table();
                (t.shape().clone(), hydra_b42(t.shape()))
            },
            example_2_1(),
            {
                let s = LadderShape::complete(3, 4);
                let b = change_point_subtable(&s, 2, 2).unwrap();
                (s, b)
            },
        ];
        for (shape, sub) in cases {
            let config = configuration_matrix(&shape, &sub).unwrap();
            let mut oracle = BTreeSet::new();
            for i1 in 1..=shape.row_count() {
                for i2 in i1 + 1..=shape.row_count() {
                    for j1 in 1..=shape.col_count() {
                        for j2 in j1 + 1..=shape.col_count() {
                            let all_in = [(i1, j1), (i1, j2), (i2, j1), (i2, j2)]
                                .iter()
                                .all(|&(i, j)| shape.contains(Cell::new(i, j)));
                            if !all_in {
                                continue;
                            }
                            let mv = Move::new(i1, i2, j1, j2);
                            if is_move(&config, &mv.dense(&shape).unwrap()).unwrap() {
                                oracle.insert(mv);
                            }
                        }
                    }
                }
            }
            let basis: BTreeSet<Move> = generate_markov_basis(&shape, &sub).unwrap().into_iter().collect();
            assert_eq!(basis, oracle);
        }
    }

    #[test]
    fn generation_rejects_non_ideal_subtables() {
        let table = hydra_table();
        let lone = Subtable::from_cells(table.shape(), [Cell::new(3, 2)]).unwrap();
        assert!(matches!(
            generate_markov_basis(table.shape(), &lone),
            Err(LatticeError::NotAnIdeal { .. })
        ));
    }

    #[test]
    fn canonical_sign_means_no_duplicates() {
        let table = hydra_table();
        let sub = hydra_b42(table.shape());
        let basis = generate_markov_basis(table.shape(), &sub).unwrap();
        let set: BTreeSet<Move> = basis.iter().copied().collect();
        assert_eq!(set.len(), basis.len());
        for mv in &basis {
            let (i1, i2) = mv.row_pair();
            let (j1, j2) = mv.col_pair();
            assert!(i1 < i2 && j1 < j2);
        }
    }
}
