//! Ladder table shapes, count tables, change-point subtables, configuration
//! matrices and sufficient statistics.
//!
//! Cells are addressed by 1-based `(row, col)` coordinates throughout, and
//! every vector over the cells uses row-major (lexicographic) cell order,
//! which is also the column order of the configuration matrices.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A cell address, 1-based in both coordinates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Componentwise order: `self <= other` in both coordinates.
    pub fn leq(&self, other: &Cell) -> bool {
        self.row <= other.row && self.col <= other.col
    }

    /// Neither `self <= other` nor `other <= self` componentwise.
    pub fn incomparable(&self, other: &Cell) -> bool {
        !self.leq(other) && !other.leq(self)
    }

    /// Componentwise minimum.
    pub fn meet(&self, other: &Cell) -> Cell {
        Cell::new(self.row.min(other.row), self.col.min(other.col))
    }

    /// Componentwise maximum.
    pub fn join(&self, other: &Cell) -> Cell {
        Cell::new(self.row.max(other.row), self.col.max(other.col))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Errors from parsing and construction of model-level values.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("row {row}: cells do not form one contiguous column interval")]
    NonIntervalRow { row: usize },
    #[error("row {row} has no cells")]
    EmptyRow { row: usize },
    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedInput { row: usize, expected: usize, found: usize },
    #[error("row {row}: negative count {token:?}")]
    NegativeCount { row: usize, token: String },
    #[error("row {row}: invalid token {token:?} (expected a nonnegative integer or '.')")]
    InvalidToken { row: usize, token: String },
    #[error("input has no rows")]
    EmptyInput,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("cell {0} is not a cell of the table")]
    CellNotInS(Cell),
    #[error("counts length {found} does not match the cell count {expected}")]
    CountsLength { expected: usize, found: usize },
    #[error("mask row {row} does not match the table's structural-zero pattern")]
    MaskShapeMismatch { row: usize },
}

/// One violated condition from [`LadderShape::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderViolation {
    /// `(1,1)` is a structural zero (the first row starts after column 1).
    MissingOrigin { first_col: usize },
    /// `(I,J)` is a structural zero (the last row ends before column J).
    MissingCorner { last_col: usize, cols: usize },
    /// Lower endpoints decrease: `l_row > l_{row+1}`.
    LowerNotMonotone { row: usize, here: usize, next: usize },
    /// Upper endpoints decrease: `u_row > u_{row+1}`.
    UpperNotMonotone { row: usize, here: usize, next: usize },
    /// Consecutive rows share no column: `u_row < l_{row+1}` (separable table).
    SeparableGap { row: usize, upper: usize, next_lower: usize },
    /// Some column has no cells at all.
    EmptyColumn { col: usize },
}

impl fmt::Display for LadderViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LadderViolation::MissingOrigin { first_col } => {
                write!(f, "cell (1,1) is a structural zero: row 1 starts at column {first_col}")
            }
            LadderViolation::MissingCorner { last_col, cols } => {
                write!(f, "the bottom-right cell is a structural zero: the last row ends at column {last_col} of {cols}")
            }
            LadderViolation::LowerNotMonotone { row, here, next } => {
                write!(f, "lower endpoints decrease: l_{row} = {here} > {next} = l_{}", row + 1)
            }
            LadderViolation::UpperNotMonotone { row, here, next } => {
                write!(f, "upper endpoints decrease: u_{row} = {here} > {next} = u_{}", row + 1)
            }
            LadderViolation::SeparableGap { row, upper, next_lower } => {
                write!(
                    f,
                    "rows {row} and {} share no column: u_{row} = {upper} < {next_lower} = l_{}",
                    row + 1,
                    row + 1
                )
            }
            LadderViolation::EmptyColumn { col } => write!(f, "column {col} has no cells"),
        }
    }
}

/// Outcome of [`LadderShape::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<LadderViolation>,
    pub warnings: Vec<LadderViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The cell set S of an incomplete two-way table, stored as one column
/// interval `[l_i, u_i]` per row.
///
/// Construction checks only structural well-formedness (`1 <= l_i <= u_i <= J`);
/// the ladder conditions proper (monotone endpoints, inseparability, corner
/// cells) are reported by [`LadderShape::validate`], so that non-ladder
/// interval patterns can still be parsed and diagnosed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LadderShape {
    col_count: usize,
    rows: Vec<(usize, usize)>,
    /// offsets[i] = cell index of the first cell of row i+1; offsets[I] = q.
    offsets: Vec<usize>,
}

impl LadderShape {
    /// Builds a shape from per-row inclusive column intervals.
    pub fn new(intervals: Vec<(usize, usize)>, col_count: usize) -> Result<Self, ModelError> {
        if intervals.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if col_count == 0 {
            return Err(ModelError::InvalidShape("zero columns".into()));
        }
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if lo < 1 || hi > col_count || lo > hi {
                return Err(ModelError::InvalidShape(format!(
                    "row {}: interval [{lo},{hi}] out of range 1..={col_count}",
                    i + 1
                )));
            }
        }
        let mut offsets = Vec::with_capacity(intervals.len() + 1);
        let mut q = 0usize;
        for &(lo, hi) in &intervals {
            offsets.push(q);
            q += hi - lo + 1;
        }
        offsets.push(q);
        Ok(LadderShape { col_count, rows: intervals, offsets })
    }

    /// The complete I x J shape (no structural zeros).
    pub fn complete(rows: usize, cols: usize) -> Self {
        LadderShape::new(vec![(1, cols); rows], cols).expect("complete shape is well formed")
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.col_count
    }

    /// Number of cells q = |S|.
    pub fn cell_count(&self) -> usize {
        self.offsets[self.rows.len()]
    }

    /// Inclusive column interval `[l_i, u_i]` of 1-based row `i`.
    pub fn row_interval(&self, row: usize) -> (usize, usize) {
        self.rows[row - 1]
    }

    /// Inclusive row interval spanned by 1-based column `j`, if nonempty.
    pub fn col_interval(&self, col: usize) -> Option<(usize, usize)> {
        let mut lo = None;
        let mut hi = None;
        for (i, &(l, u)) in self.rows.iter().enumerate() {
            if l <= col && col <= u {
                if lo.is_none() {
                    lo = Some(i + 1);
                }
                hi = Some(i + 1);
            }
        }
        lo.zip(hi)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        if cell.row < 1 || cell.row > self.rows.len() {
            return false;
        }
        let (lo, hi) = self.rows[cell.row - 1];
        lo <= cell.col && cell.col <= hi
    }

    /// Row-major index of `cell`, if it is in S.
    pub fn cell_index(&self, cell: Cell) -> Option<usize> {
        if !self.contains(cell) {
            return None;
        }
        let (lo, _) = self.rows[cell.row - 1];
        Some(self.offsets[cell.row - 1] + (cell.col - lo))
    }

    /// The cell at row-major index `k`.
    pub fn cell_at(&self, k: usize) -> Cell {
        debug_assert!(k < self.cell_count());
        let row = self.offsets.partition_point(|&o| o <= k);
        let (lo, _) = self.rows[row - 1];
        Cell::new(row, lo + (k - self.offsets[row - 1]))
    }

    /// Row-major index range of the cells of 1-based row `row`.
    pub fn row_cell_range(&self, row: usize) -> std::ops::Range<usize> {
        self.offsets[row - 1]..self.offsets[row]
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, &(lo, hi))| (lo..=hi).map(move |j| Cell::new(i + 1, j)))
    }

    /// Checks the ladder-table conditions: `(1,1)` and `(I,J)` in S, both
    /// endpoint sequences nondecreasing, no empty column, and consecutive
    /// rows overlapping. With `allow_separable`, a violated overlap
    /// condition is reported as a warning instead of a violation.
    pub fn validate(&self, allow_separable: bool) -> ValidationReport {
        let mut report = ValidationReport::default();
        let i_count = self.row_count();
        let (l1, _) = self.rows[0];
        if l1 != 1 {
            report.violations.push(LadderViolation::MissingOrigin { first_col: l1 });
        }
        let (_, u_last) = self.rows[i_count - 1];
        if u_last != self.col_count {
            report
                .violations
                .push(LadderViolation::MissingCorner { last_col: u_last, cols: self.col_count });
        }
        for i in 0..i_count - 1 {
            let (l, u) = self.rows[i];
            let (ln, un) = self.rows[i + 1];
            if l > ln {
                report.violations.push(LadderViolation::LowerNotMonotone { row: i + 1, here: l, next: ln });
            }
            if u > un {
                report.violations.push(LadderViolation::UpperNotMonotone { row: i + 1, here: u, next: un });
            }
            if u < ln {
                let v = LadderViolation::SeparableGap { row: i + 1, upper: u, next_lower: ln };
                if allow_separable {
                    report.warnings.push(v);
                } else {
                    report.violations.push(v);
                }
            }
        }
        for j in 1..=self.col_count {
            if self.col_interval(j).is_none() {
                report.violations.push(LadderViolation::EmptyColumn { col: j });
            }
        }
        report
    }

    /// True when every pair of cells has its componentwise min and max in S.
    /// Holds for every shape with monotone interval endpoints; exhaustive
    /// (O(q^2)) so intended for desk-scale shapes.
    pub fn is_minmax_closed(&self) -> bool {
        self.minmax_closure_witness().is_none()
    }

    /// First pair of cells whose meet or join escapes S, if any.
    pub fn minmax_closure_witness(&self) -> Option<(Cell, Cell, Cell)> {
        let cells: Vec<Cell> = self.cells().collect();
        for (idx, &a) in cells.iter().enumerate() {
            for &b in &cells[idx + 1..] {
                let m = a.meet(&b);
                if !self.contains(m) {
                    return Some((a, b, m));
                }
                let j = a.join(&b);
                if !self.contains(j) {
                    return Some((a, b, j));
                }
            }
        }
        None
    }
}

/// A table of nonnegative counts on the cells of a [`LadderShape`], stored
/// in row-major cell order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Table {
    shape: LadderShape,
    counts: Vec<u64>,
}

impl Table {
    pub fn new(shape: LadderShape, counts: Vec<u64>) -> Result<Self, ModelError> {
        if counts.len() != shape.cell_count() {
            return Err(ModelError::CountsLength { expected: shape.cell_count(), found: counts.len() });
        }
        Ok(Table { shape, counts })
    }

    pub fn shape(&self) -> &LadderShape {
        &self.shape
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, cell: Cell) -> Option<u64> {
        self.shape.cell_index(cell).map(|k| self.counts[k])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.shape.row_count()];
        for (k, cell) in self.shape.cells().enumerate() {
            sums[cell.row - 1] += self.counts[k];
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.shape.col_count()];
        for (k, cell) in self.shape.cells().enumerate() {
            sums[cell.col - 1] += self.counts[k];
        }
        sums
    }

    /// Renders the table in the text format accepted by [`parse_table`]:
    /// one line per row, structural zeros as ".", columns right-aligned.
    pub fn to_text(&self) -> String {
        let grid = self.grid_tokens();
        render_grid(&grid)
    }

    fn grid_tokens(&self) -> Vec<Vec<String>> {
        let mut grid = vec![vec![".".to_string(); self.shape.col_count()]; self.shape.row_count()];
        for (k, cell) in self.shape.cells().enumerate() {
            grid[cell.row - 1][cell.col - 1] = self.counts[k].to_string();
        }
        grid
    }
}

fn render_grid(grid: &[Vec<String>]) -> String {
    let cols = grid.first().map_or(0, Vec::len);
    let mut widths = vec![0usize; cols];
    for row in grid {
        for (j, tok) in row.iter().enumerate() {
            widths[j] = widths[j].max(tok.len());
        }
    }
    let mut out = String::new();
    for row in grid {
        let line: Vec<String> = row.iter().enumerate().map(|(j, tok)| format!("{tok:>w$}", w = widths[j])).collect();
        out.push_str(line.join(" ").trim_end());
        out.push('\n');
    }
    out
}

/// Parses the table text format: one line per row, whitespace-separated
/// tokens, each a nonnegative integer or "." for a structural zero. The
/// non-"." cells of each row must form one contiguous interval. Blank lines
/// are ignored.
pub fn parse_table(text: &str) -> Result<Table, ModelError> {
    let mut intervals = Vec::new();
    let mut counts = Vec::new();
    let mut col_count = None;
    let mut row = 0usize;
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        row += 1;
        let expected = *col_count.get_or_insert(tokens.len());
        if tokens.len() != expected {
            return Err(ModelError::RaggedInput { row, expected, found: tokens.len() });
        }
        let mut interval: Option<(usize, usize)> = None;
        for (j, tok) in tokens.iter().enumerate() {
            if *tok == "." {
                continue;
            }
            let value: u64 = tok.parse().map_err(|_| {
                if tok.starts_with('-') && tok[1..].chars().all(|c| c.is_ascii_digit()) && tok.len() > 1 {
                    ModelError::NegativeCount { row, token: tok.to_string() }
                } else {
                    ModelError::InvalidToken { row, token: tok.to_string() }
                }
            })?;
            let col = j + 1;
            interval = match interval {
                None => Some((col, col)),
                Some((lo, hi)) if col == hi + 1 => Some((lo, col)),
                Some(_) => return Err(ModelError::NonIntervalRow { row }),
            };
            counts.push(value);
        }
        let Some(interval) = interval else {
            return Err(ModelError::EmptyRow { row });
        };
        intervals.push(interval);
    }
    if intervals.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let shape = LadderShape::new(intervals, col_count.unwrap())?;
    Table::new(shape, counts)
}

/// How a [`Subtable`] was constructed.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SubtableOrigin {
    /// `B = { (i,j) in S : i <= i*, j <= j* }` for the stored `(i*, j*)`.
    ChangePoint(Cell),
    /// An explicit cell set (e.g. from a mask file).
    Explicit,
}

/// A subset B of the cells of a shape, the cells whose total is fixed by
/// the change-point model's extra sufficient statistic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subtable {
    cells: Vec<Cell>,
    origin: SubtableOrigin,
}

impl Subtable {
    /// Builds an explicit subtable, checking that every cell lies in S.
    pub fn from_cells<I>(shape: &LadderShape, cells: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = Cell>,
    {
        let mut set = BTreeSet::new();
        for cell in cells {
            if !shape.contains(cell) {
                return Err(ModelError::CellNotInS(cell));
            }
            set.insert(cell);
        }
        Ok(Subtable { cells: set.into_iter().collect(), origin: SubtableOrigin::Explicit })
    }

    /// The empty subtable (the model degenerates to quasi-independence).
    pub fn empty() -> Self {
        Subtable { cells: Vec::new(), origin: SubtableOrigin::Explicit }
    }

    /// Parses a mask file: same grid as the table format with tokens
    /// 1 (in B), 0 (in S minus B) and "." (structural zero); the "." pattern
    /// must agree with `shape`.
    pub fn parse_mask(shape: &LadderShape, text: &str) -> Result<Self, ModelError> {
        let mut cells = Vec::new();
        let mut row = 0usize;
        for line in text.lines() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            row += 1;
            if row > shape.row_count() {
                return Err(ModelError::MaskShapeMismatch { row });
            }
            if tokens.len() != shape.col_count() {
                return Err(ModelError::RaggedInput { row, expected: shape.col_count(), found: tokens.len() });
            }
            let (lo, hi) = shape.row_interval(row);
            for (j, tok) in tokens.iter().enumerate() {
                let col = j + 1;
                let in_shape = lo <= col && col <= hi;
                match (*tok, in_shape) {
                    (".", false) => {}
                    (".", true) | ("0", false) | ("1", false) => {
                        return Err(ModelError::MaskShapeMismatch { row })
                    }
                    ("0", true) => {}
                    ("1", true) => cells.push(Cell::new(row, col)),
                    _ => return Err(ModelError::InvalidToken { row, token: tok.to_string() }),
                }
            }
        }
        if row != shape.row_count() {
            return Err(ModelError::MaskShapeMismatch { row: row + 1 });
        }
        Ok(Subtable { cells, origin: SubtableOrigin::Explicit })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn origin(&self) -> SubtableOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// True when B = S for the given shape.
    pub fn is_full(&self, shape: &LadderShape) -> bool {
        self.cells.len() == shape.cell_count()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    /// Membership flags aligned with the shape's row-major cell order.
    pub fn membership(&self, shape: &LadderShape) -> Vec<bool> {
        let mut mask = vec![false; shape.cell_count()];
        for &cell in &self.cells {
            if let Some(k) = shape.cell_index(cell) {
                mask[k] = true;
            }
        }
        mask
    }

    /// Renders the mask in the format accepted by [`Subtable::parse_mask`].
    pub fn to_mask_text(&self, shape: &LadderShape) -> String {
        let mut grid = vec![vec![".".to_string(); shape.col_count()]; shape.row_count()];
        for cell in shape.cells() {
            grid[cell.row - 1][cell.col - 1] =
                if self.contains(cell) { "1".to_string() } else { "0".to_string() };
        }
        render_grid(&grid)
    }
}

/// The change-point subtable `B = { (i,j) in S : i <= i*, j <= j* }`.
/// Fails with [`ModelError::CellNotInS`] when `(i*, j*)` is not a cell.
pub fn change_point_subtable(shape: &LadderShape, row: usize, col: usize) -> Result<Subtable, ModelError> {
    let pivot = Cell::new(row, col);
    if !shape.contains(pivot) {
        return Err(ModelError::CellNotInS(pivot));
    }
    let cells: Vec<Cell> = shape.cells().filter(|c| c.leq(&pivot)).collect();
    Ok(Subtable { cells, origin: SubtableOrigin::ChangePoint(pivot) })
}

/// Witness that `sub` is not downward closed in S: returns `(a, b)` with
/// `a` in B, `b <= a`, `b` in S but not in B; `None` when B is a poset ideal.
pub fn subtable_ideal_witness(shape: &LadderShape, sub: &Subtable) -> Option<(Cell, Cell)> {
    for &a in sub.cells() {
        for b in shape.cells() {
            if b.leq(&a) && !sub.contains(b) {
                return Some((a, b));
            }
        }
    }
    None
}

/// The sufficient statistic t: row sums, column sums, and the subtable sum.
#[derive(Clone, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub struct SuffStat {
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub subtable_sum: u64,
}

impl SuffStat {
    pub fn total(&self) -> u64 {
        self.row_sums.iter().sum()
    }

    /// Row totals equal column totals and the subtable sum does not exceed
    /// the grand total.
    pub fn is_consistent(&self) -> bool {
        let rows: u64 = self.row_sums.iter().sum();
        let cols: u64 = self.col_sums.iter().sum();
        rows == cols && self.subtable_sum <= rows
    }
}

/// Computes t = (row sums, column sums, subtable sum) for a table.
pub fn sufficient_statistic(table: &Table, sub: &Subtable) -> SuffStat {
    let mut row_sums = vec![0u64; table.shape().row_count()];
    let mut col_sums = vec![0u64; table.shape().col_count()];
    let mut subtable_sum = 0u64;
    for (k, cell) in table.shape().cells().enumerate() {
        let x = table.counts()[k];
        row_sums[cell.row - 1] += x;
        col_sums[cell.col - 1] += x;
        if sub.contains(cell) {
            subtable_sum += x;
        }
    }
    SuffStat { row_sums, col_sums, subtable_sum }
}

/// The 0/1 configuration matrix A with `I + J + 1` rows (row indicators,
/// column indicators, subtable indicator) and one column per cell in
/// row-major order; `A x = t`.
#[derive(Clone, Debug)]
pub struct ConfigMatrix {
    shape: LadderShape,
    subtable: Subtable,
}

impl ConfigMatrix {
    pub fn shape(&self) -> &LadderShape {
        &self.shape
    }

    pub fn subtable(&self) -> &Subtable {
        &self.subtable
    }

    pub fn row_count(&self) -> usize {
        self.shape.row_count() + self.shape.col_count() + 1
    }

    pub fn col_count(&self) -> usize {
        self.shape.cell_count()
    }

    /// Entry of row `r` (0-based) at the column of the `k`-th cell.
    pub fn entry(&self, r: usize, k: usize) -> i64 {
        let cell = self.shape.cell_at(k);
        let i_count = self.shape.row_count();
        let j_count = self.shape.col_count();
        let hit = if r < i_count {
            cell.row == r + 1
        } else if r < i_count + j_count {
            cell.col == r - i_count + 1
        } else {
            self.subtable.contains(cell)
        };
        hit as i64
    }

    /// Dense copy, row by row.
    pub fn dense(&self) -> Vec<Vec<i64>> {
        (0..self.row_count()).map(|r| (0..self.col_count()).map(|k| self.entry(r, k)).collect()).collect()
    }

    /// Rows rendered as 0/1 strings, e.g. `"1101001000000000000000"`.
    pub fn bit_rows(&self) -> Vec<String> {
        (0..self.row_count())
            .map(|r| (0..self.col_count()).map(|k| if self.entry(r, k) == 1 { '1' } else { '0' }).collect())
            .collect()
    }

    /// Exact integer product A z.
    pub fn multiply(&self, z: &[i64]) -> Vec<i64> {
        assert_eq!(z.len(), self.col_count(), "vector length must equal the cell count");
        (0..self.row_count()).map(|r| (0..self.col_count()).map(|k| self.entry(r, k) * z[k]).sum()).collect()
    }
}

/// Builds the configuration matrix for a shape and subtable.
pub fn configuration_matrix(shape: &LadderShape, sub: &Subtable) -> Result<ConfigMatrix, ModelError> {
    for &cell in sub.cells() {
        if !shape.contains(cell) {
            return Err(ModelError::CellNotInS(cell));
        }
    }
    Ok(ConfigMatrix { shape: shape.clone(), subtable: sub.clone() })
}

/// Degrees of freedom of the change-point model: `q - rank(A)` with the
/// rank computed exactly over the integers by fraction-free elimination.
pub fn degrees_of_freedom(config: &ConfigMatrix) -> usize {
    let rows: Vec<Vec<BigInt>> = (0..config.row_count())
        .map(|r| (0..config.col_count()).map(|k| BigInt::from(config.entry(r, k))).collect())
        .collect();
    config.col_count() - integer_rank(rows)
}

/// Rank over the rationals via fraction-free (Bareiss) elimination; exact
/// for any integer matrix.
fn integer_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let nr = m.len();
    if nr == 0 {
        return 0;
    }
    let nc = m[0].len();
    let mut rank = 0usize;
    let mut prev = BigInt::one();
    for col in 0..nc {
        if rank == nr {
            break;
        }
        let Some(pivot) = (rank..nr).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..nr {
            for c in col + 1..nc {
                let num = &m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c];
                m[r][c] = num / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}
