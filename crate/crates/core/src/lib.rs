//! Exact conditional goodness-of-fit tests for two-way change-point models
//! on ladder incomplete contingency tables.
//!
//! A *ladder* table is an I x J contingency table whose non-structural-zero
//! cells form one column interval per row, with both interval endpoints
//! nondecreasing down the rows. The *two-way change-point model* extends
//! quasi-independence by one extra parameter on a lower-left subtable
//! `B = { (i,j) in S : i <= i*, j <= j* }`:
//!
//! ```text
//! log p_ij = alpha_i + beta_j + gamma 1_B(i,j)
//! ```
//!
//! Conditioning on the row sums, column sums and the subtable sum removes
//! every nuisance parameter, and the conditional null distribution on the
//! resulting fiber is proportional to `prod 1/x_ij!`. This crate provides
//! the pieces of the exact test pipeline:
//!
//! * [`model`] — shapes, tables, subtables, configuration matrices and
//!   sufficient statistics, plus the text formats used by the CLI;
//! * [`lattice`] — the distributive lattice on the cells, its
//!   join-irreducible chains, and the incomparable-pair description of the
//!   Markov basis;
//! * [`basis`] — the unique minimal Markov basis of square-free degree-2
//!   moves, and move application;
//! * [`fiber`] — brute-force fiber enumeration for desk-scale verification
//!   of connectivity and indispensability;
//! * [`fit`] — maximum-likelihood fitting by iterative proportional
//!   scaling, Pearson chi-square, and the asymptotic tail probability;
//! * [`sampler`] — the Metropolis chain over a fiber, conditional p-value
//!   estimation, and the change-point scan.

pub mod basis;
pub mod fiber;
pub mod fit;
pub mod lattice;
pub mod model;
pub mod sampler;

#[cfg(test)]
pub(crate) mod testdata;

pub use basis::{apply_move, generate_markov_basis, is_move, verify_basis_equals_lattice, Move, MoveSign};
pub use fiber::{connectivity_check, enumerate_fiber, indispensability_check, Connectivity, Fiber};
pub use fit::{chi_square_survival, fit_mle, pearson_chi_square, FitResult};
pub use lattice::{build_lattice, incomparable_pairs, is_poset_ideal, join_irreducibles, pair_to_move, CellLattice, ChainDecomposition, IncomparablePair, PairClass};
pub use model::{change_point_subtable, configuration_matrix, degrees_of_freedom, parse_table, sufficient_statistic, Cell, ConfigMatrix, LadderShape, SuffStat, Subtable, Table};
pub use sampler::{metropolis_step, run_chain, scan_change_points, ChainConfig, ChainSummary, Histogram, ScanEntry, Statistic};
