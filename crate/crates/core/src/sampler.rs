//! Metropolis sampling over a fiber using the minimal Markov basis.
//!
//! Proposals draw a basis move and a sign uniformly; a proposal that would
//! drive a cell negative keeps the current state (still counted as a
//! sample). Feasible proposals are accepted with probability
//! `min(1, prod x_c! / y_c!)` over the four changed cells, which makes the
//! conditional null distribution `f(x | Ax = t) ~ prod 1/x_ij!` stationary.
//! The chain statistic is Pearson's chi-square against the fitted means of
//! the observed table; within a fiber the fit is constant, so the fitted
//! means are computed once.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{generate_markov_basis, Move};
use crate::fit::{fit_mle_default, FitError};
use crate::lattice::LatticeError;
use crate::model::{change_point_subtable, Cell, Subtable, Table};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SamplerError {
    #[error("the Markov basis is empty")]
    EmptyBasis,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Basis(#[from] LatticeError),
}

/// Test statistic evaluated on each sampled table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    /// Pearson chi-square against the observed-fiber fitted means.
    PearsonChiSquare,
    /// Identically zero; every sample ties with the observed value.
    Constant,
}

/// Chain parameters. Defaults: 50000 burn-in steps, 100000 retained
/// samples, no thinning, a single replicate, Pearson chi-square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: u64,
    pub samples: u64,
    pub thin: u64,
    pub seed: u64,
    pub replicates: u32,
    pub statistic: Statistic,
    pub hist_bin_width: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            burn_in: 50_000,
            samples: 100_000,
            thin: 1,
            seed: 0,
            replicates: 1,
            statistic: Statistic::PearsonChiSquare,
            hist_bin_width: 0.5,
        }
    }
}

/// Binned counts of the chain statistic; bin `k` covers
/// `[k*bin_width, (k+1)*bin_width)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(bin_width: f64) -> Self {
        Histogram { bin_width, counts: Vec::new() }
    }

    fn add(&mut self, value: f64) {
        let bin = (value / self.bin_width).floor() as usize;
        if bin >= self.counts.len() {
            self.counts.resize(bin + 1, 0);
        }
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn midpoint(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.bin_width
    }

    /// Two-column text: bin midpoint and count, one line per bin.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (bin, count) in self.counts.iter().enumerate() {
            out.push_str(&format!("{} {}\n", self.midpoint(bin), count));
        }
        out
    }
}

/// Result of a Metropolis run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    /// Fraction of retained samples with statistic >= the observed value.
    pub p_hat: f64,
    /// Binomial standard error, widened by the between-replicate spread
    /// when several replicates run.
    pub std_error: f64,
    pub acceptance_rate: f64,
    pub chi2_obs: f64,
    pub df: usize,
    pub asymptotic_p: f64,
    pub n_moves: usize,
    pub samples_retained: u64,
    pub replicate_p_hats: Vec<f64>,
    pub histogram: Histogram,
    /// Set when the basis was empty: the chain is constant and p_hat = 1.
    pub empty_basis: bool,
}

/// Comparisons of the chain statistic against the observed value use this
/// slack so that exact ties survive floating-point rounding.
pub const TIE_SLACK: f64 = 1e-9;

/// Cached `ln n!` values, extended on demand.
struct LogFactorial {
    table: Vec<f64>,
}

impl LogFactorial {
    fn new(upto: usize) -> Self {
        let mut lf = LogFactorial { table: vec![0.0] };
        lf.extend_to(upto);
        lf
    }

    fn extend_to(&mut self, n: usize) {
        while self.table.len() <= n {
            let k = self.table.len();
            let last = self.table[k - 1];
            self.table.push(last + (k as f64).ln());
        }
    }

    fn get(&mut self, n: u64) -> f64 {
        let n = n as usize;
        if n >= self.table.len() {
            self.extend_to(n);
        }
        self.table[n]
    }
}

/// `ln n!` by direct summation; matches the cached table bit for bit.
pub fn ln_factorial(n: u64) -> f64 {
    let mut acc = 0.0;
    for k in 2..=n {
        acc += (k as f64).ln();
    }
    acc
}

/// Per-move cell indices and +1/-1 deltas under the `Plus` sign.
type MoveEntry = [(usize, i8); 4];

fn move_entries(shape: &crate::model::LadderShape, basis: &[Move]) -> Vec<MoveEntry> {
    basis
        .iter()
        .map(|mv| {
            let mut entry = [(0usize, 0i8); 4];
            for (slot, (cell, coef)) in mv.cells().into_iter().enumerate() {
                let k = shape.cell_index(cell).expect("basis moves stay inside the shape");
                entry[slot] = (k, coef as i8);
            }
            entry
        })
        .collect()
}

/// One proposal/accept decision, mutating `state` in place. Returns
/// whether the proposal was accepted.
fn step_in_place<R: Rng>(
    state: &mut [u64],
    entries: &[MoveEntry],
    rng: &mut R,
    lf: &mut LogFactorial,
) -> bool {
    let entry = &entries[rng.random_range(0..entries.len())];
    let sign: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
    for &(idx, d) in entry {
        if (d as i64) * sign < 0 && state[idx] == 0 {
            return false;
        }
    }
    let mut log_ratio = 0.0;
    for &(idx, d) in entry {
        let old = state[idx];
        let new = (old as i64 + d as i64 * sign) as u64;
        log_ratio += lf.get(old) - lf.get(new);
    }
    let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    if accept {
        for &(idx, d) in entry {
            state[idx] = (state[idx] as i64 + d as i64 * sign) as u64;
        }
    }
    accept
}

/// A single Metropolis transition from `state`: draws a move and a sign
/// uniformly, stays on infeasible proposals, and otherwise accepts with
/// probability `min(1, prod x! / y!)` over the changed cells.
pub fn metropolis_step<R: Rng>(
    state: &Table,
    basis: &[Move],
    rng: &mut R,
) -> Result<(Table, bool), SamplerError> {
    if basis.is_empty() {
        return Err(SamplerError::EmptyBasis);
    }
    let entries = move_entries(state.shape(), basis);
    let mut counts = state.counts().to_vec();
    let max_count = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut lf = LogFactorial::new(max_count + 2);
    let accepted = step_in_place(&mut counts, &entries, rng, &mut lf);
    let table = if accepted {
        Table::new(state.shape().clone(), counts).expect("shape unchanged")
    } else {
        state.clone()
    };
    Ok((table, accepted))
}

fn derive_replicate_seed(seed: u64, replicate: u32) -> u64 {
    // splitmix-style stride keeps replicate streams disjoint while leaving
    // replicate 0 on the configured seed
    seed.wrapping_add((replicate as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

enum StatFn<'a> {
    Pearson(&'a [f64]),
    Constant,
}

impl StatFn<'_> {
    fn eval(&self, counts: &[u64]) -> f64 {
        match self {
            StatFn::Pearson(fitted) => counts
                .iter()
                .zip(*fitted)
                .filter(|(_, m)| **m > 0.0)
                .map(|(&x, &m)| {
                    let d = x as f64 - m;
                    d * d / m
                })
                .sum(),
            StatFn::Constant => 0.0,
        }
    }
}

/// Runs the Metropolis chain from the observed table and estimates the
/// conditional p value as the fraction of retained samples whose statistic
/// is at least the observed one (with [`TIE_SLACK`]).
///
/// An empty Markov basis (a single-point fiber, or no degree-2 moves)
/// degrades gracefully: the chain is constant and `p_hat = 1`, flagged via
/// `empty_basis`.
pub fn run_chain(table: &Table, sub: &Subtable, cfg: &ChainConfig) -> Result<ChainSummary, SamplerError> {
    assert!(cfg.samples >= 1, "at least one retained sample is required");
    assert!(cfg.thin >= 1, "thin must be at least 1");
    assert!(cfg.replicates >= 1, "at least one replicate is required");

    let basis = generate_markov_basis(table.shape(), sub)?;
    let fit = fit_mle_default(table, sub)?;
    let stat = match cfg.statistic {
        Statistic::PearsonChiSquare => StatFn::Pearson(&fit.fitted),
        Statistic::Constant => StatFn::Constant,
    };
    let stat_obs = stat.eval(table.counts());
    let threshold = stat_obs - TIE_SLACK;
    let replicates = cfg.replicates as u64;
    let retained_total = cfg.samples * replicates;

    if basis.is_empty() {
        let mut histogram = Histogram::new(cfg.hist_bin_width);
        let bin = (stat_obs / cfg.hist_bin_width).floor() as usize;
        histogram.counts = vec![0; bin + 1];
        histogram.counts[bin] = retained_total;
        return Ok(ChainSummary {
            p_hat: 1.0,
            std_error: 0.0,
            acceptance_rate: 0.0,
            chi2_obs: fit.chi_square,
            df: fit.df,
            asymptotic_p: fit.asymptotic_p,
            n_moves: 0,
            samples_retained: retained_total,
            replicate_p_hats: vec![1.0; cfg.replicates as usize],
            histogram,
            empty_basis: true,
        });
    }

    let entries = move_entries(table.shape(), &basis);
    let mut lf = LogFactorial::new(table.total() as usize + 2);
    let mut histogram = Histogram::new(cfg.hist_bin_width);
    let mut replicate_p_hats = Vec::with_capacity(cfg.replicates as usize);
    let mut total_hits = 0u64;
    let mut accepted_steps = 0u64;
    let mut total_steps = 0u64;

    for replicate in 0..cfg.replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_replicate_seed(cfg.seed, replicate));
        let mut state = table.counts().to_vec();
        for _ in 0..cfg.burn_in {
            accepted_steps += step_in_place(&mut state, &entries, &mut rng, &mut lf) as u64;
        }
        let mut hits = 0u64;
        for _ in 0..cfg.samples {
            for _ in 0..cfg.thin {
                accepted_steps += step_in_place(&mut state, &entries, &mut rng, &mut lf) as u64;
            }
            let value = stat.eval(&state);
            histogram.add(value);
            if value >= threshold {
                hits += 1;
            }
        }
        total_hits += hits;
        replicate_p_hats.push(hits as f64 / cfg.samples as f64);
        total_steps += cfg.burn_in + cfg.samples * cfg.thin;
    }

    let p_hat = total_hits as f64 / retained_total as f64;
    let binomial_se = (p_hat * (1.0 - p_hat) / retained_total as f64).sqrt();
    let std_error = if cfg.replicates > 1 {
        let r = cfg.replicates as f64;
        let mean = replicate_p_hats.iter().sum::<f64>() / r;
        let between = replicate_p_hats.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (r - 1.0);
        (binomial_se * binomial_se + between / r).sqrt()
    } else {
        binomial_se
    };
    debug_assert_eq!(histogram.total(), retained_total);

    Ok(ChainSummary {
        p_hat,
        std_error,
        acceptance_rate: accepted_steps as f64 / total_steps as f64,
        chi2_obs: fit.chi_square,
        df: fit.df,
        asymptotic_p: fit.asymptotic_p,
        n_moves: basis.len(),
        samples_retained: retained_total,
        replicate_p_hats,
        histogram,
        empty_basis: false,
    })
}

/// One row of the change-point scan. Statistics are absent when the
/// candidate's chain failed; `best` marks the maximal estimated p value
/// and `co_leader` every candidate within two combined standard errors of
/// it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub change_point: Cell,
    pub p_hat: Option<f64>,
    pub std_error: Option<f64>,
    pub chi2_obs: Option<f64>,
    pub df: Option<usize>,
    pub asymptotic_p: Option<f64>,
    pub n_moves: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub error: Option<String>,
    pub best: bool,
    pub co_leader: bool,
}

/// Fits and tests every change-point candidate `(i*, j*)` in S, each with
/// its own chain seeded `cfg.seed + index` (index in row-major cell
/// order). Per-candidate failures become entries with an error message;
/// the scan itself never aborts. Entries are sorted by descending `p_hat`
/// (failed candidates last).
pub fn scan_change_points(table: &Table, cfg: &ChainConfig) -> Vec<ScanEntry> {
    let shape = table.shape();
    let mut entries: Vec<ScanEntry> = shape
        .cells()
        .enumerate()
        .map(|(index, cell)| {
            let sub = match change_point_subtable(shape, cell.row, cell.col) {
                Ok(sub) => sub,
                Err(e) => return failed_entry(cell, e.to_string()),
            };
            let mut candidate_cfg = cfg.clone();
            candidate_cfg.seed = cfg.seed.wrapping_add(index as u64);
            match run_chain(table, &sub, &candidate_cfg) {
                Ok(summary) => ScanEntry {
                    change_point: cell,
                    p_hat: Some(summary.p_hat),
                    std_error: Some(summary.std_error),
                    chi2_obs: Some(summary.chi2_obs),
                    df: Some(summary.df),
                    asymptotic_p: Some(summary.asymptotic_p),
                    n_moves: Some(summary.n_moves),
                    acceptance_rate: Some(summary.acceptance_rate),
                    error: None,
                    best: false,
                    co_leader: false,
                },
                Err(e) => failed_entry(cell, e.to_string()),
            }
        })
        .collect();

    entries.sort_by(|a, b| {
        b.p_hat
            .partial_cmp(&a.p_hat)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.change_point.cmp(&b.change_point))
    });

    if let Some((best_p, best_se)) = entries
        .first()
        .and_then(|e| e.p_hat.zip(e.std_error))
    {
        for entry in entries.iter_mut() {
            if let (Some(p), Some(se)) = (entry.p_hat, entry.std_error) {
                let combined = (se * se + best_se * best_se).sqrt();
                entry.co_leader = best_p - p <= 2.0 * combined;
            }
        }
        entries[0].best = true;
    }
    entries
}

fn failed_entry(cell: Cell, message: String) -> ScanEntry {
    ScanEntry {
        change_point: cell,
        p_hat: None,
        std_error: None,
        chi2_obs: None,
        df: None,
        asymptotic_p: None,
        n_moves: None,
        acceptance_rate: None,
        error: Some(message),
        best: false,
        co_leader: false,
    }
}
