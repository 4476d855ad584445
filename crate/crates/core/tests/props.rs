//! Property tests over randomized ladder shapes: parsing round-trips, the
//! configuration-matrix identity, min/max closure, and the equivalence of
//! the minor enumeration with the lattice pair description of the basis.

use fibermc_core::basis::{generate_markov_basis, is_move, verify_basis_equals_lattice, Move};
use fibermc_core::model::{
    change_point_subtable, configuration_matrix, parse_table, sufficient_statistic, Cell, LadderShape,
    Subtable, Table,
};
use proptest::prelude::*;
use std::collections::BTreeSet;

/// Builds a valid ladder shape (monotone endpoints, overlapping rows,
/// corners present) from raw entropy; never rejects.
fn build_shape(rows: usize, cols: usize, raw: &[usize]) -> LadderShape {
    let mut lower = vec![1usize; rows];
    for r in 1..rows {
        let lo = lower[r - 1];
        lower[r] = lo + raw[r] % (cols - lo + 1);
    }
    let mut upper = vec![cols; rows];
    for r in 0..rows.saturating_sub(1) {
        let mut floor = lower[r].max(lower[r + 1]);
        if r > 0 {
            floor = floor.max(upper[r - 1]);
        }
        upper[r] = floor + raw[rows + r] % (cols - floor + 1);
    }
    let intervals: Vec<(usize, usize)> = lower.into_iter().zip(upper).collect();
    LadderShape::new(intervals, cols).expect("constructed intervals are well formed")
}

fn ladder_shape(max_rows: usize, max_cols: usize) -> impl Strategy<Value = LadderShape> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(0usize..10_000, 2 * rows)
            .prop_map(move |raw| build_shape(rows, cols, &raw))
    })
}

fn shape_with_table(max_rows: usize, max_cols: usize, max_count: u64) -> impl Strategy<Value = Table> {
    ladder_shape(max_rows, max_cols).prop_flat_map(move |shape| {
        proptest::collection::vec(0..=max_count, shape.cell_count())
            .prop_map(move |counts| Table::new(shape.clone(), counts).unwrap())
    })
}

fn shape_with_change_point(max_rows: usize, max_cols: usize) -> impl Strategy<Value = (LadderShape, Subtable)> {
    (ladder_shape(max_rows, max_cols), any::<usize>()).prop_map(|(shape, pick)| {
        let pivot = shape.cell_at(pick % shape.cell_count());
        let sub = change_point_subtable(&shape, pivot.row, pivot.col).unwrap();
        (shape, sub)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_shapes_are_valid_ladders(shape in ladder_shape(7, 7)) {
        prop_assert!(shape.validate(false).is_ok());
        prop_assert!(shape.is_minmax_closed());
    }

    #[test]
    fn table_text_round_trips(table in shape_with_table(6, 6, 40)) {
        let reparsed = parse_table(&table.to_text()).unwrap();
        prop_assert_eq!(reparsed, table);
    }

    #[test]
    fn config_matrix_times_counts_is_the_statistic(
        table in shape_with_table(6, 6, 9),
        pick in any::<usize>(),
    ) {
        let shape = table.shape();
        let pivot = shape.cell_at(pick % shape.cell_count());
        let sub = change_point_subtable(shape, pivot.row, pivot.col).unwrap();
        let config = configuration_matrix(shape, &sub).unwrap();
        let x: Vec<i64> = table.counts().iter().map(|&v| v as i64).collect();
        let product = config.multiply(&x);
        let t = sufficient_statistic(&table, &sub);
        let mut expected: Vec<i64> = t.row_sums.iter().map(|&v| v as i64).collect();
        expected.extend(t.col_sums.iter().map(|&v| v as i64));
        expected.push(t.subtable_sum as i64);
        prop_assert_eq!(product, expected);
    }

    #[test]
    fn basis_equals_lattice_pairs((shape, sub) in shape_with_change_point(6, 6)) {
        prop_assert!(verify_basis_equals_lattice(&shape, &sub).unwrap());
    }

    #[test]
    fn basis_is_exactly_the_degree_two_kernel((shape, sub) in shape_with_change_point(5, 5)) {
        let config = configuration_matrix(&shape, &sub).unwrap();
        let mut oracle = BTreeSet::new();
        for i1 in 1..=shape.row_count() {
            for i2 in i1 + 1..=shape.row_count() {
                for j1 in 1..=shape.col_count() {
                    for j2 in j1 + 1..=shape.col_count() {
                        let cells = [(i1, j1), (i1, j2), (i2, j1), (i2, j2)];
                        if !cells.iter().all(|&(i, j)| shape.contains(Cell::new(i, j))) {
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
        prop_assert_eq!(basis, oracle);
    }

    #[test]
    fn basis_moves_overlap_subtable_evenly((shape, sub) in shape_with_change_point(6, 6)) {
        for mv in generate_markov_basis(&shape, &sub).unwrap() {
            let overlap = mv.cells().iter().filter(|(c, _)| sub.contains(*c)).count();
            prop_assert!(matches!(overlap, 0 | 2 | 4));
            for (c, _) in mv.cells() {
                prop_assert!(shape.contains(c));
            }
        }
    }

    #[test]
    fn mask_text_round_trips((shape, sub) in shape_with_change_point(6, 6)) {
        let text = sub.to_mask_text(&shape);
        let reparsed = Subtable::parse_mask(&shape, &text).unwrap();
        prop_assert_eq!(reparsed.cells(), sub.cells());
    }
}
