//! Shared fixtures for unit tests: the hydra grafting table and the small
//! incomplete 4x4 example, together with their reference configuration
//! matrices.

use crate::model::{change_point_subtable, parse_table, Cell, LadderShape, Subtable, Table};

pub const HYDRA_TEXT: &str = "\
4  .  .  .  .  . .
4  0  .  .  .  . .
19 5  1  .  .  . .
24 15 4  5  .  . .
.  19 18 18 8  . .
.  .  24 21 16 5 .
.  .  .  23 22 8 1
";

/// The reference 15x22 configuration matrix for the hydra table with the
/// change-point subtable at (4,2).
pub const HYDRA_MATRIX: [&str; 15] = [
    "1000000000000000000000",
    "0110000000000000000000",
    "0001110000000000000000",
    "0000001111000000000000",
    "0000000000111100000000",
    "0000000000000011110000",
    "0000000000000000001111",
    "1101001000000000000000",
    "0010100100100000000000",
    "0000010010010010000000",
    "0000000001001001001000",
    "0000000000000100100100",
    "0000000000000000010010",
    "0000000000000000000001",
    "1111101100000000000000",
];

/// The reference 9x10 configuration matrix for the 4x4 incomplete example.
pub const EXAMPLE_2_1_MATRIX: [&str; 9] = [
    "1110000000",
    "0001110000",
    "0000001100",
    "0000000011",
    "1000000000",
    "0101000000",
    "0010101010",
    "0000010101",
    "1111100000",
];

/// The 14 moves of the unique minimal Markov basis for the hydra table
/// with the change-point subtable at (4,2), as (i1, i2, j1, j2).
pub const HYDRA_BASIS: [(usize, usize, usize, usize); 14] = [
    (2, 3, 1, 2),
    (2, 4, 1, 2),
    (3, 4, 1, 2),
    (3, 4, 1, 3),
    (3, 4, 2, 3),
    (4, 5, 3, 4),
    (4, 6, 3, 4),
    (5, 6, 3, 4),
    (5, 6, 3, 5),
    (5, 6, 4, 5),
    (5, 7, 4, 5),
    (6, 7, 4, 5),
    (6, 7, 4, 6),
    (6, 7, 5, 6),
];

pub fn hydra_table() -> Table {
    parse_table(HYDRA_TEXT).unwrap()
}

pub fn hydra_b42(shape: &LadderShape) -> Subtable {
    change_point_subtable(shape, 4, 2).unwrap()
}

/// The 4x4 incomplete shape with rows [1,3],[2,4],[3,4],[3,4] and the
/// five-cell subtable `{(1,1),(1,2),(1,3),(2,2),(2,3)}`.
pub fn example_2_1() -> (LadderShape, Subtable) {
    let shape = LadderShape::new(vec![(1, 3), (2, 4), (3, 4), (3, 4)], 4).unwrap();
    let cells = [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)].iter().map(|&(i, j)| Cell::new(i, j));
    let sub = Subtable::from_cells(&shape, cells).unwrap();
    (shape, sub)
}

pub fn figure_1a() -> LadderShape {
    LadderShape::new(vec![(1, 2), (1, 3), (1, 3), (1, 5), (1, 5)], 5).unwrap()
}

pub fn figure_1c() -> LadderShape {
    LadderShape::new(vec![(1, 2), (1, 3), (1, 3), (4, 5), (5, 5)], 5).unwrap()
}
