//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p fibermc --test acceptance -- --nocapture` to see
//! the per-criterion lines; the test names themselves carry the verdicts
//! in normal runs.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fibermc_core::basis::{generate_markov_basis, Move};
use fibermc_core::fiber::{connectivity_check, enumerate_fiber, indispensability_check};
use fibermc_core::fit::fit_mle_default;
use fibermc_core::lattice::{build_lattice, incomparable_pairs, pair_to_move};
use fibermc_core::model::{
    change_point_subtable, configuration_matrix, parse_table, sufficient_statistic, Cell, LadderShape,
    Subtable, Table,
};
use fibermc_core::sampler::{metropolis_step, ln_factorial, run_chain, scan_change_points, ChainConfig};

fn hydra() -> Table {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/hydra.tab");
    parse_table(&std::fs::read_to_string(path).expect("hydra data ships with the repo")).unwrap()
}

fn hydra_b42(table: &Table) -> Subtable {
    change_point_subtable(table.shape(), 4, 2).unwrap()
}

fn example_2_1() -> (LadderShape, Subtable) {
    let shape = LadderShape::new(vec![(1, 3), (2, 4), (3, 4), (3, 4)], 4).unwrap();
    let cells = [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)].iter().map(|&(i, j)| Cell::new(i, j));
    let sub = Subtable::from_cells(&shape, cells).unwrap();
    (shape, sub)
}

const REFERENCE_BASIS: [(usize, usize, usize, usize); 14] = [
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

/// Criterion 1: configuration matrices match the reference 9x10 and 15x22
/// matrices bit for bit.
#[test]
fn c1_configuration_matrices_bit_exact() {
    let (shape, sub) = example_2_1();
    let a = configuration_matrix(&shape, &sub).unwrap();
    let reference_small = [
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
    assert_eq!(a.bit_rows(), reference_small);

    let table = hydra();
    let a = configuration_matrix(table.shape(), &hydra_b42(&table)).unwrap();
    let reference_hydra = [
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
    assert_eq!(a.bit_rows(), reference_hydra);
    println!("acceptance 1 (configuration matrices bit-exact): PASS");
}

/// Criterion 2: the generated Markov basis for the hydra change point
/// (4,2) is exactly the reference set of 14 moves.
#[test]
fn c2_markov_basis_matches_reference_moves() {
    let table = hydra();
    let basis = generate_markov_basis(table.shape(), &hydra_b42(&table)).unwrap();
    let generated: BTreeSet<Move> = basis.iter().copied().collect();
    let reference: BTreeSet<Move> =
        REFERENCE_BASIS.iter().map(|&(i1, i2, j1, j2)| Move::new(i1, i2, j1, j2)).collect();
    assert_eq!(generated, reference);
    assert_eq!(basis.len(), 14);
    println!("acceptance 2 (markov basis = reference 14 moves): PASS");
}

/// Criterion 3: 14 incomparable pairs mapping bijectively onto the basis.
#[test]
fn c3_lattice_pairs_biject_onto_basis() {
    let table = hydra();
    let sub = hydra_b42(&table);
    let lattice = build_lattice(table.shape()).unwrap();
    let pairs = incomparable_pairs(&lattice, &sub).unwrap();
    assert_eq!(pairs.len(), 14);
    let images: BTreeSet<Move> = pairs.iter().map(pair_to_move).collect();
    assert_eq!(images.len(), 14, "pair_to_move is injective on the pair set");
    let basis: BTreeSet<Move> =
        generate_markov_basis(table.shape(), &sub).unwrap().into_iter().collect();
    assert_eq!(images, basis);
    println!("acceptance 3 (14 pairs biject onto the basis): PASS");
}

/// Criterion 4: fitted values within 0.005 of the reference table,
/// chi-square 7.814 +- 0.01, df exactly 8, asymptotic p 0.452 +- 0.001.
#[test]
fn c4_fit_matches_reference_values() {
    let reference = [
        4.00, 2.81, 1.19, 15.94, 6.78, 2.28, 28.26, 12.03, 4.05, 3.67, 19.00, 17.17, 15.54, 11.29, 23.50,
        21.27, 15.45, 5.79, 26.52, 19.26, 7.21, 1.00,
    ];
    let table = hydra();
    let fit = fit_mle_default(&table, &hydra_b42(&table)).unwrap();
    for (k, (&m, &p)) in fit.fitted.iter().zip(&reference).enumerate() {
        assert!((m - p).abs() <= 0.005, "cell {k}: fitted {m} vs reference {p}");
    }
    assert!((fit.chi_square - 7.814).abs() <= 0.01, "chi2 = {}", fit.chi_square);
    assert_eq!(fit.df, 8);
    assert!((fit.asymptotic_p - 0.452).abs() <= 0.001, "p = {}", fit.asymptotic_p);
    println!(
        "acceptance 4 (fit: table within 0.005, chi2 {:.4}, df {}, p {:.4}): PASS",
        fit.chi_square, fit.df, fit.asymptotic_p
    );
}

/// Criterion 5: at the full budget (50000 burn-in, 100000 samples) the
/// estimated p value lands in [0.42, 0.49] for at least 9 of 10 seeds.
#[test]
fn c5_mcmc_p_value_stable_over_seeds() {
    let table = hydra();
    let sub = hydra_b42(&table);
    let mut in_range = 0;
    let mut estimates = Vec::new();
    for seed in 1..=10u64 {
        let cfg = ChainConfig { seed, ..ChainConfig::default() };
        let summary = run_chain(&table, &sub, &cfg).unwrap();
        estimates.push(summary.p_hat);
        if (0.42..=0.49).contains(&summary.p_hat) {
            in_range += 1;
        }
    }
    assert!(in_range >= 9, "only {in_range}/10 seeds in [0.42, 0.49]: {estimates:?}");
    println!("acceptance 5 (p_hat in [0.42,0.49] for {in_range}/10 seeds, estimates {estimates:?}): PASS");
}

/// Criterion 6: the change-point scan ranks (4,2) first (co-leaders
/// within two combined standard errors allowed).
#[test]
fn c6_scan_ranks_4_2_first() {
    let table = hydra();
    let cfg = ChainConfig { burn_in: 10_000, samples: 20_000, seed: 0, ..ChainConfig::default() };
    let entries = scan_change_points(&table, &cfg);
    assert_eq!(entries.len(), 22);
    assert!(entries.iter().all(|e| e.error.is_none()), "no candidate may fail");
    let winner = entries.iter().find(|e| e.change_point == Cell::new(4, 2)).unwrap();
    assert!(
        winner.best || winner.co_leader,
        "(4,2) must lead the scan; got p_hat {:?} against best {:?} at {}",
        winner.p_hat,
        entries[0].p_hat,
        entries[0].change_point
    );
    println!(
        "acceptance 6 (scan leader {} with p_hat {:.4}): PASS",
        entries[0].change_point,
        entries[0].p_hat.unwrap()
    );
}

/// Valid ladder shape from raw entropy: monotone endpoints, overlapping
/// consecutive rows, corners present.
fn random_shape(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize) -> LadderShape {
    let rows = rng.random_range(1..=max_rows);
    let cols = rng.random_range(1..=max_cols);
    let mut lower = vec![1usize; rows];
    for r in 1..rows {
        lower[r] = rng.random_range(lower[r - 1]..=cols);
    }
    let mut upper = vec![cols; rows];
    for r in 0..rows.saturating_sub(1) {
        let mut floor = lower[r].max(lower[r + 1]);
        if r > 0 {
            floor = floor.max(upper[r - 1]);
        }
        upper[r] = rng.random_range(floor..=cols);
    }
    LadderShape::new(lower.into_iter().zip(upper).collect(), cols).unwrap()
}

/// Criterion 7: over 200 randomized desk-scale instances, every fully
/// enumerated fiber is connected under the generated basis, and every
/// basis move is indispensable.
#[test]
fn c7_markov_basis_property_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_817);
    let mut fibers_checked = 0;
    let mut largest_fiber = 0;
    for instance in 0..200 {
        let shape = random_shape(&mut rng, 4, 4);
        let pivot = shape.cell_at(rng.random_range(0..shape.cell_count()));
        let sub = change_point_subtable(&shape, pivot.row, pivot.col).unwrap();

        // random table with total <= 6
        let mut counts = vec![0u64; shape.cell_count()];
        let total = rng.random_range(0..=6u64);
        for _ in 0..total {
            let k = rng.random_range(0..counts.len());
            counts[k] += 1;
        }
        let table = Table::new(shape.clone(), counts).unwrap();
        let config = configuration_matrix(&shape, &sub).unwrap();
        let target = sufficient_statistic(&table, &sub);

        let fiber = enumerate_fiber(&config, &target, 1_000_000)
            .unwrap_or_else(|e| panic!("instance {instance}: {e}"));
        let basis = generate_markov_basis(&shape, &sub).unwrap();
        let conn = connectivity_check(&fiber, &basis);
        assert!(
            conn.connected,
            "instance {instance}: fiber of size {} split into {} components (shape {:?}, pivot {pivot})",
            fiber.len(),
            conn.components,
            shape
        );
        for mv in &basis {
            assert!(
                indispensability_check(&config, mv),
                "instance {instance}: move {mv} is not indispensable"
            );
        }
        fibers_checked += 1;
        largest_fiber = largest_fiber.max(fiber.len());
    }
    println!(
        "acceptance 7 (200 randomized instances connected + indispensable, {fibers_checked} fibers, largest {largest_fiber}): PASS"
    );
}

/// Criterion 8: on a fully enumerated fiber, the empirical distribution of
/// a million chain steps is within total variation 0.02 of the null
/// distribution proportional to prod 1/x_ij!.
#[test]
fn c8_sampler_matches_null_distribution() {
    let shape = LadderShape::complete(3, 3);
    let table = Table::new(shape.clone(), vec![2, 2, 1, 1, 2, 2, 2, 1, 2]).unwrap();
    let sub = change_point_subtable(&shape, 2, 1).unwrap();
    let config = configuration_matrix(&shape, &sub).unwrap();
    let target = sufficient_statistic(&table, &sub);
    let fiber = enumerate_fiber(&config, &target, 10_000).unwrap();
    assert!(fiber.len() <= 200, "fiber size {} exceeds the desk-scale bound", fiber.len());
    assert!(fiber.len() >= 3);

    let weights: Vec<f64> = fiber
        .members()
        .iter()
        .map(|m| (-m.counts().iter().map(|&x| ln_factorial(x)).sum::<f64>()).exp())
        .collect();
    let normalizer: f64 = weights.iter().sum();
    let index: std::collections::HashMap<&[u64], usize> =
        fiber.members().iter().enumerate().map(|(i, m)| (m.counts(), i)).collect();

    let basis = generate_markov_basis(&shape, &sub).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut state = table.clone();
    let steps = 1_000_000u64;
    let mut visits = vec![0u64; fiber.len()];
    for _ in 0..steps {
        let (next, _) = metropolis_step(&state, &basis, &mut rng).unwrap();
        state = next;
        visits[*index.get(state.counts()).expect("chain stays on the fiber")] += 1;
    }
    let tv: f64 = visits
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| (v as f64 / steps as f64 - w / normalizer).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.02, "total variation {tv} exceeds 0.02 on a fiber of {}", fiber.len());
    println!(
        "acceptance 8 (1e6 steps on a {}-member fiber, total variation {tv:.5}): PASS",
        fiber.len()
    );
}

/// Criterion 9: identical inputs and seed produce bit-identical JSON
/// output across two runs of the binary.
#[test]
fn c9_json_output_is_bit_identical_across_runs() {
    let hydra_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/hydra.tab");
    let args = [
        "test",
        hydra_path.to_str().unwrap(),
        "--change-point",
        "4",
        "2",
        "--burn-in",
        "5000",
        "--samples",
        "20000",
        "--seed",
        "1",
        "--json",
    ];
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_fibermc"))
            .args(args)
            .output()
            .expect("binary runs")
    };
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "JSON output must be byte-identical");
    assert_eq!(a.status.code(), b.status.code());
    println!("acceptance 9 (bit-identical JSON across runs): PASS");
}
