//! Maximum-likelihood fitting of the change-point model by iterative
//! proportional scaling, with Pearson's chi-square and its asymptotic
//! tail probability.
//!
//! The model's sufficient statistics are exactly the row sums, the column
//! sums, and the two-level block factor {B, S\B}, so cycling proportional
//! adjustments over those three margin families converges to the Poisson
//! MLE from the all-ones start. Structural zeros never enter; rows,
//! columns or blocks with zero observed total are zeroed once and stay
//! exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{configuration_matrix, degrees_of_freedom, sufficient_statistic, ModelError, Subtable, Table};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FitError {
    #[error("scaling did not reach tolerance after {iterations} cycles (residual {residual:.3e})")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("fitted vector has {found} cells but the table has {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Warnings that do not invalidate the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitWarning {
    /// The subtable sum is 0 or the whole total while the corresponding
    /// block is nonempty; that block is zeroed and carries no information.
    DegenerateBlock { subtable_sum: u64, total: u64 },
    /// The subtable sum is tight against the rows or columns it touches,
    /// forcing the stated number of cells to zero in every table of the
    /// fiber; they are zeroed up front so the scaling stays geometric.
    BoundarySubtableSum { forced_cells: usize },
}

/// Result of [`fit_mle`]: fitted means in row-major cell order plus the
/// goodness-of-fit summary against the observed table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub fitted: Vec<f64>,
    pub chi_square: f64,
    pub df: usize,
    pub asymptotic_p: f64,
    pub iterations: usize,
    pub residual: f64,
    pub warnings: Vec<FitWarning>,
}

const DEFAULT_TOL: f64 = 1e-10;
const DEFAULT_MAX_ITER: usize = 100_000;

impl FitResult {
    /// Fitted value at the `k`-th cell in row-major order.
    pub fn fitted_at(&self, k: usize) -> f64 {
        self.fitted[k]
    }
}

/// Fits the change-point model by iterative proportional scaling with the
/// default tolerance (1e-10) and cycle limit (100000).
pub fn fit_mle_default(table: &Table, sub: &Subtable) -> Result<FitResult, FitError> {
    fit_mle(table, sub, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Fits the change-point model: starting from 1 on every cell, cycles of
/// (a) scaling each row to its observed sum, (b) each column to its sum,
/// (c) the B block and its complement to the observed split, until the
/// largest constraint residual drops below `tol`.
pub fn fit_mle(table: &Table, sub: &Subtable, tol: f64, max_iter: usize) -> Result<FitResult, FitError> {
    let shape = table.shape();
    let config = configuration_matrix(shape, sub)?;
    let t = sufficient_statistic(table, sub);
    let n = t.total();
    let q = shape.cell_count();

    let col_indices: Vec<Vec<usize>> = {
        let mut cols = vec![Vec::new(); shape.col_count()];
        for (k, cell) in shape.cells().enumerate() {
            cols[cell.col - 1].push(k);
        }
        cols
    };
    let membership = sub.membership(shape);
    let in_block: Vec<usize> = (0..q).filter(|&k| membership[k]).collect();
    let out_block: Vec<usize> = (0..q).filter(|&k| !membership[k]).collect();
    let block_target = t.subtable_sum;
    let complement_target = n - t.subtable_sum;

    let mut fitted = vec![1.0f64; q];
    let mut warnings = Vec::new();
    for i in 1..=shape.row_count() {
        if t.row_sums[i - 1] == 0 {
            fitted[shape.row_cell_range(i)].iter_mut().for_each(|m| *m = 0.0);
        }
    }
    for j in 1..=shape.col_count() {
        if t.col_sums[j - 1] == 0 {
            for &k in &col_indices[j - 1] {
                fitted[k] = 0.0;
            }
        }
    }
    if !in_block.is_empty() && block_target == 0 {
        for &k in &in_block {
            fitted[k] = 0.0;
        }
        warnings.push(FitWarning::DegenerateBlock { subtable_sum: t.subtable_sum, total: n });
    } else if !out_block.is_empty() && complement_target == 0 && n > 0 {
        for &k in &out_block {
            fitted[k] = 0.0;
        }
        warnings.push(FitWarning::DegenerateBlock { subtable_sum: t.subtable_sum, total: n });
    }

    // A subtable sum tight against the rows (or columns) it touches forces
    // the rest of those rows to zero in every nonnegative solution; the MLE
    // then sits on that boundary and plain scaling would only approach it
    // at rate 1/cycles. Zeroing the forced cells up front is exact.
    {
        let cells: Vec<crate::model::Cell> = shape.cells().collect();
        let mut forced = vec![false; q];
        let mut tight = |touched_rows: &dyn Fn(usize) -> bool, by_cols: bool, inside: bool| {
            let touched: Vec<bool> = if by_cols {
                (1..=shape.col_count()).map(touched_rows).collect()
            } else {
                (1..=shape.row_count()).map(touched_rows).collect()
            };
            let margin_total: u64 = if by_cols {
                (0..shape.col_count()).filter(|&j| touched[j]).map(|j| t.col_sums[j]).sum()
            } else {
                (0..shape.row_count()).filter(|&i| touched[i]).map(|i| t.row_sums[i]).sum()
            };
            let target = if inside { block_target } else { complement_target };
            if margin_total != target {
                return;
            }
            for (k, cell) in cells.iter().enumerate() {
                let line = if by_cols { cell.col - 1 } else { cell.row - 1 };
                if touched[line] && membership[k] != inside && fitted[k] > 0.0 {
                    forced[k] = true;
                }
            }
        };
        let row_touches_block = |i: usize| -> bool {
            shape.row_cell_range(i).any(|k| membership[k])
        };
        let row_touches_complement = |i: usize| -> bool {
            shape.row_cell_range(i).any(|k| !membership[k])
        };
        let col_touches_block = |j: usize| -> bool { col_indices[j - 1].iter().any(|&k| membership[k]) };
        let col_touches_complement = |j: usize| -> bool { col_indices[j - 1].iter().any(|&k| !membership[k]) };
        tight(&row_touches_block, false, true);
        tight(&col_touches_block, true, true);
        tight(&row_touches_complement, false, false);
        tight(&col_touches_complement, true, false);
        let forced_cells = forced.iter().filter(|&&f| f).count();
        if forced_cells > 0 {
            for (k, &f) in forced.iter().enumerate() {
                if f {
                    fitted[k] = 0.0;
                }
            }
            warnings.push(FitWarning::BoundarySubtableSum { forced_cells });
        }
    }

    let residual_of = |m: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 1..=shape.row_count() {
            let s: f64 = m[shape.row_cell_range(i)].iter().sum();
            worst = worst.max((s - t.row_sums[i - 1] as f64).abs());
        }
        for j in 1..=shape.col_count() {
            let s: f64 = col_indices[j - 1].iter().map(|&k| m[k]).sum();
            worst = worst.max((s - t.col_sums[j - 1] as f64).abs());
        }
        let s: f64 = in_block.iter().map(|&k| m[k]).sum();
        worst.max((s - block_target as f64).abs())
    };

    let log_likelihood = |m: &[f64]| -> f64 {
        m.iter()
            .zip(table.counts())
            .filter(|(mm, _)| **mm > 0.0)
            .map(|(mm, &x)| x as f64 * mm.ln() - mm)
            .sum()
    };

    let mut iterations = 0usize;
    let mut residual = residual_of(&fitted);
    let mut previous_ll = f64::NEG_INFINITY;
    while residual >= tol && iterations < max_iter {
        iterations += 1;
        for i in 1..=shape.row_count() {
            let target = t.row_sums[i - 1] as f64;
            if target == 0.0 {
                continue;
            }
            let range = shape.row_cell_range(i);
            let s: f64 = fitted[range.clone()].iter().sum();
            debug_assert!(s > 0.0, "positive row total with an all-zero fitted row");
            let factor = target / s;
            fitted[range].iter_mut().for_each(|m| *m *= factor);
        }
        for j in 1..=shape.col_count() {
            let target = t.col_sums[j - 1] as f64;
            if target == 0.0 {
                continue;
            }
            let s: f64 = col_indices[j - 1].iter().map(|&k| fitted[k]).sum();
            debug_assert!(s > 0.0, "positive column total with an all-zero fitted column");
            let factor = target / s;
            for &k in &col_indices[j - 1] {
                fitted[k] *= factor;
            }
        }
        if !in_block.is_empty() && block_target > 0 {
            let s: f64 = in_block.iter().map(|&k| fitted[k]).sum();
            let factor = block_target as f64 / s;
            for &k in &in_block {
                fitted[k] *= factor;
            }
        }
        if !out_block.is_empty() && complement_target > 0 {
            let s: f64 = out_block.iter().map(|&k| fitted[k]).sum();
            let factor = complement_target as f64 / s;
            for &k in &out_block {
                fitted[k] *= factor;
            }
        }

        let ll = log_likelihood(&fitted);
        debug_assert!(
            ll + 1e-9 * (1.0 + ll.abs()) >= previous_ll,
            "Poisson log-likelihood decreased across a scaling cycle: {previous_ll} -> {ll}"
        );
        previous_ll = ll;
        residual = residual_of(&fitted);
    }
    if residual >= tol {
        return Err(FitError::NoConvergence { residual, iterations });
    }

    let chi_square = chi_square_of(table.counts(), &fitted);
    let df = degrees_of_freedom(&config);
    let asymptotic_p = if df == 0 {
        if chi_square <= 1e-8 {
            1.0
        } else {
            0.0
        }
    } else {
        chi_square_survival(chi_square, df)
    };

    Ok(FitResult { fitted, chi_square, df, asymptotic_p, iterations, residual, warnings })
}

fn chi_square_of(counts: &[u64], fitted: &[f64]) -> f64 {
    counts
        .iter()
        .zip(fitted)
        .filter(|(_, m)| **m > 0.0)
        .map(|(&x, &m)| {
            let d = x as f64 - m;
            d * d / m
        })
        .sum()
}

/// Pearson's goodness-of-fit statistic of the observed table against the
/// fitted means; cells with a zero fitted mean (forced zero counts)
/// contribute nothing.
pub fn pearson_chi_square(table: &Table, fit: &FitResult) -> Result<f64, FitError> {
    if fit.fitted.len() != table.counts().len() {
        return Err(FitError::ShapeMismatch { expected: table.counts().len(), found: fit.fitted.len() });
    }
    Ok(chi_square_of(table.counts(), &fit.fitted))
}

/// Upper-tail probability of the chi-square distribution with `df` degrees
/// of freedom: `Q(df/2, x/2)` via the regularized incomplete gamma
/// function (series below the switch point, continued fraction above),
/// accurate to about 1e-12 absolute.
pub fn chi_square_survival(x: f64, df: usize) -> f64 {
    debug_assert!(df >= 1, "df must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    let a = df as f64 / 2.0;
    let s = x / 2.0;
    let log_prefactor = -s + a * s.ln() - ln_gamma_half(df);
    let prefactor = log_prefactor.exp();
    let q = if s < a + 1.0 {
        1.0 - prefactor * lower_series(a, s)
    } else {
        prefactor * upper_continued_fraction(a, s)
    };
    q.clamp(0.0, 1.0)
}

/// `ln Gamma(df/2)` for integer `df`, computed exactly from the recursion
/// `Gamma(a+1) = a Gamma(a)` with `Gamma(1) = 1` and `Gamma(1/2) = sqrt(pi)`.
fn ln_gamma_half(df: usize) -> f64 {
    if df.is_multiple_of(2) {
        // ln (df/2 - 1)!
        (1..df / 2).map(|k| (k as f64).ln()).sum()
    } else {
        let mut v = 0.5 * std::f64::consts::PI.ln();
        let mut x = df as f64 / 2.0 - 1.0;
        while x > 0.0 {
            v += x.ln();
            x -= 1.0;
        }
        v
    }
}

/// Series for `P(a,s) / prefactor`.
fn lower_series(a: f64, s: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= s / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum
}

/// Modified Lentz continued fraction for `Q(a,s) / prefactor`.
fn upper_continued_fraction(a: f64, s: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = s + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
