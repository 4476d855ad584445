//! Brute-force fiber enumeration: the desk-scale oracle for connectivity
//! and indispensability of the Markov basis.
//!
//! A t-fiber is the set of all nonnegative integer tables with the given
//! row sums, column sums and subtable sum. Enumeration is a depth-first
//! search in row-major cell order with per-cell bounds from the remaining
//! row, column and subtable budgets; cells that close a row or column are
//! forced to the remaining budget.

use std::collections::HashMap;

use thiserror::Error;

use crate::basis::{apply_move, is_move, Move, MoveSign};
use crate::model::{sufficient_statistic, ConfigMatrix, SuffStat, Table};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FiberError {
    #[error("fiber exceeds the cap of {cap} members ({found} found before aborting)")]
    CapExceeded { cap: usize, found: usize },
    #[error("target statistic is inconsistent (row totals, column totals and subtable sum disagree)")]
    InconsistentTarget,
}

/// A fully enumerated fiber.
#[derive(Clone, Debug)]
pub struct Fiber {
    config: ConfigMatrix,
    target: SuffStat,
    members: Vec<Table>,
}

impl Fiber {
    pub fn config(&self) -> &ConfigMatrix {
        &self.config
    }

    pub fn target(&self) -> &SuffStat {
        &self.target
    }

    pub fn members(&self) -> &[Table] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

struct Search {
    cells: Vec<(usize, usize, bool)>, // (row-1, col-1, in B)
    closes_row: Vec<bool>,
    closes_col: Vec<bool>,
    rem_row: Vec<u64>,
    rem_col: Vec<u64>,
    rem_in: u64,
    rem_out: u64,
    current: Vec<u64>,
    members: Vec<Vec<u64>>,
    cap: usize,
}

impl Search {
    fn run(&mut self, k: usize) -> Result<(), FiberError> {
        if k == self.cells.len() {
            debug_assert!(self.rem_in == 0 && self.rem_out == 0);
            if self.members.len() == self.cap {
                return Err(FiberError::CapExceeded { cap: self.cap, found: self.members.len() });
            }
            self.members.push(self.current.clone());
            return Ok(());
        }
        let (i, j, in_b) = self.cells[k];
        let class_rem = if in_b { self.rem_in } else { self.rem_out };
        let bound = self.rem_row[i].min(self.rem_col[j]).min(class_rem);
        let (lo, hi) = match (self.closes_row[k], self.closes_col[k]) {
            (true, true) => {
                let v = self.rem_row[i];
                if v == self.rem_col[j] && v <= class_rem {
                    (v, v)
                } else {
                    return Ok(());
                }
            }
            (true, false) => {
                let v = self.rem_row[i];
                if v <= bound {
                    (v, v)
                } else {
                    return Ok(());
                }
            }
            (false, true) => {
                let v = self.rem_col[j];
                if v <= bound {
                    (v, v)
                } else {
                    return Ok(());
                }
            }
            (false, false) => (0, bound),
        };
        for v in lo..=hi {
            self.rem_row[i] -= v;
            self.rem_col[j] -= v;
            if in_b {
                self.rem_in -= v;
            } else {
                self.rem_out -= v;
            }
            self.current[k] = v;
            let result = self.run(k + 1);
            self.rem_row[i] += v;
            self.rem_col[j] += v;
            if in_b {
                self.rem_in += v;
            } else {
                self.rem_out += v;
            }
            self.current[k] = 0;
            result?;
        }
        Ok(())
    }
}

/// Enumerates every nonnegative integer solution of `A x = t`, aborting
/// with [`FiberError::CapExceeded`] once more than `cap` members are found.
pub fn enumerate_fiber(config: &ConfigMatrix, target: &SuffStat, cap: usize) -> Result<Fiber, FiberError> {
    let shape = config.shape();
    if target.row_sums.len() != shape.row_count()
        || target.col_sums.len() != shape.col_count()
        || !target.is_consistent()
    {
        return Err(FiberError::InconsistentTarget);
    }
    let total = target.total();

    let q = shape.cell_count();
    let mut cells = Vec::with_capacity(q);
    for cell in shape.cells() {
        cells.push((cell.row - 1, cell.col - 1, config.subtable().contains(cell)));
    }
    let mut closes_row = vec![false; q];
    let mut closes_col = vec![false; q];
    let mut last_row = HashMap::new();
    let mut last_col = HashMap::new();
    for (k, &(i, j, _)) in cells.iter().enumerate() {
        last_row.insert(i, k);
        last_col.insert(j, k);
    }
    for (_, k) in last_row {
        closes_row[k] = true;
    }
    for (_, k) in last_col {
        closes_col[k] = true;
    }

    let mut search = Search {
        cells,
        closes_row,
        closes_col,
        rem_row: target.row_sums.clone(),
        rem_col: target.col_sums.clone(),
        rem_in: target.subtable_sum,
        rem_out: total - target.subtable_sum,
        current: vec![0u64; q],
        members: Vec::new(),
        cap,
    };
    search.run(0)?;

    let members = search
        .members
        .into_iter()
        .map(|counts| Table::new(shape.clone(), counts).expect("enumeration respects the shape"))
        .collect();
    Ok(Fiber { config: config.clone(), target: target.clone(), members })
}

/// Connectivity of a fully enumerated fiber under a move set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    pub components: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Builds the graph on fiber members with an edge for every sign-feasible
/// move step and counts its connected components.
pub fn connectivity_check(fiber: &Fiber, basis: &[Move]) -> Connectivity {
    let n = fiber.len();
    if n <= 1 {
        return Connectivity { connected: true, components: n };
    }
    let shape = fiber.config().shape();
    let index: HashMap<&[u64], usize> =
        fiber.members().iter().enumerate().map(|(idx, t)| (t.counts(), idx)).collect();
    let mut uf = UnionFind::new(n);
    for (idx, member) in fiber.members().iter().enumerate() {
        for mv in basis.iter().filter(|mv| mv.in_shape(shape)) {
            // +1 alone suffices: y = x + z pairs with x = y - z.
            if let Some(neighbor) = apply_move(member, mv, MoveSign::Plus) {
                if let Some(&jdx) = index.get(neighbor.counts()) {
                    uf.union(idx, jdx);
                }
            }
        }
    }
    let mut components = 0;
    for idx in 0..n {
        if uf.find(idx) == idx {
            components += 1;
        }
    }
    Connectivity { connected: components <= 1, components }
}

/// A move is indispensable when the fiber of its positive part contains
/// exactly the two tables `z+` and `z-`; such a move belongs to every
/// Markov basis.
pub fn indispensability_check(config: &ConfigMatrix, mv: &Move) -> bool {
    let shape = config.shape();
    if !mv.in_shape(shape) {
        return false;
    }
    debug_assert!(is_move(config, &mv.dense(shape).expect("cells in shape")).unwrap_or(false));
    let mut counts = vec![0u64; shape.cell_count()];
    for cell in mv.positive_cells() {
        counts[shape.cell_index(cell).expect("cell in shape")] = 1;
    }
    let z_plus = Table::new(shape.clone(), counts).expect("shape-aligned counts");
    let target = sufficient_statistic(&z_plus, config.subtable());
    match enumerate_fiber(config, &target, 4) {
        Ok(fiber) => fiber.len() == 2,
        Err(_) => false,
    }
}
