//! `fibermc` — exact conditional goodness-of-fit tests for two-way
//! change-point models on ladder incomplete contingency tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fibermc_core::basis::{generate_markov_basis, Move};
use fibermc_core::fiber::{connectivity_check, enumerate_fiber};
use fibermc_core::fit::fit_mle;
use fibermc_core::lattice::{build_lattice, incomparable_pairs, join_irreducibles, pair_to_move};
use fibermc_core::model::{
    change_point_subtable, configuration_matrix, parse_table, sufficient_statistic, Cell, LadderShape,
    Subtable, Table,
};
use fibermc_core::sampler::{run_chain, scan_change_points, ChainConfig, ChainSummary, Statistic};

#[derive(Parser)]
#[command(
    name = "fibermc",
    version,
    about = "Exact conditional goodness-of-fit tests for two-way change-point models on ladder contingency tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the ladder-table conditions of a table file
    Validate(ValidateArgs),
    /// Print the minimal Markov basis of square-free degree-2 moves
    Basis(BasisArgs),
    /// Print the cell lattice: Hasse edges, join-irreducible chains, incomparable pairs
    Lattice(LatticeArgs),
    /// Fit the change-point model and report the goodness of fit
    Fit(FitArgs),
    /// Estimate the conditional p value by Metropolis sampling over the fiber
    Test(TestArgs),
    /// Run the test for every change-point candidate and rank them by p value
    Scan(ScanArgs),
    /// Enumerate the observed fiber exhaustively and check basis connectivity
    Fiber(FiberArgs),
}

#[derive(Args)]
struct TableArg {
    /// Table file: one line per row, counts or "." for structural zeros
    table: PathBuf,
    /// Accept separable shapes (consecutive rows sharing no column) with a warning
    #[arg(long)]
    allow_separable: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SubtableSel {
    /// Change point (i*, j*): B = { (i,j) in S : i <= i*, j <= j* }
    #[arg(long, value_names = ["I", "J"], num_args = 2)]
    change_point: Option<Vec<usize>>,
    /// Mask file: 1 (in B), 0 (in S minus B), "." (structural zero)
    #[arg(long, value_name = "FILE")]
    subtable: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct SubtableSelOpt {
    /// Change point (i*, j*): B = { (i,j) in S : i <= i*, j <= j* }
    #[arg(long, value_names = ["I", "J"], num_args = 2)]
    change_point: Option<Vec<usize>>,
    /// Mask file: 1 (in B), 0 (in S minus B), "." (structural zero); defaults to the empty subtable
    #[arg(long, value_name = "FILE")]
    subtable: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    table: TableArg,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BasisArgs {
    #[command(flatten)]
    table: TableArg,
    #[command(flatten)]
    subtable: SubtableSel,
    /// Emit the moves as sparse vectors in JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LatticeArgs {
    #[command(flatten)]
    table: TableArg,
    #[command(flatten)]
    subtable: SubtableSelOpt,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    table: TableArg,
    #[command(flatten)]
    subtable: SubtableSel,
    /// Convergence tolerance on the margin residuals
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Maximum number of scaling cycles
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    table: TableArg,
    #[command(flatten)]
    subtable: SubtableSel,
    /// Discarded initial steps
    #[arg(long, default_value_t = 50_000)]
    burn_in: u64,
    /// Retained samples
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Keep every K-th post-burn-in state
    #[arg(long, default_value_t = 1, value_name = "K")]
    thin: u64,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent chains to merge
    #[arg(long, default_value_t = 1, value_name = "R")]
    replicates: u32,
    /// Histogram bin width for the chain statistic
    #[arg(long, default_value_t = 0.5)]
    hist_bin: f64,
    /// Write the statistic histogram (bin midpoint, count) to FILE
    #[arg(long, value_name = "FILE")]
    hist_out: Option<PathBuf>,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    table: TableArg,
    /// Discarded initial steps per candidate (reduced default keeps full scans fast)
    #[arg(long, default_value_t = 10_000)]
    burn_in: u64,
    /// Retained samples per candidate
    #[arg(long, default_value_t = 20_000)]
    samples: u64,
    /// Keep every K-th post-burn-in state
    #[arg(long, default_value_t = 1, value_name = "K")]
    thin: u64,
    /// Base seed; candidate chains run at seed + index
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent chains to merge per candidate
    #[arg(long, default_value_t = 1, value_name = "R")]
    replicates: u32,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FiberArgs {
    #[command(flatten)]
    table: TableArg,
    #[command(flatten)]
    subtable: SubtableSel,
    /// Abort when the fiber exceeds this many members
    #[arg(long, default_value_t = 1_000_000)]
    cap: usize,
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    // die quietly on a closed pipe, like standard unix tools
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Basis(args) => cmd_basis(args),
        Command::Lattice(args) => cmd_lattice(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Test(args) => cmd_test(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Fiber(args) => cmd_fiber(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Parses the table file and enforces the ladder conditions; warnings go
/// to standard error.
fn load_table(arg: &TableArg) -> Result<Table> {
    let text = fs::read_to_string(&arg.table)
        .with_context(|| format!("cannot read table file {}", arg.table.display()))?;
    let table = parse_table(&text).context("cannot parse table")?;
    let report = table.shape().validate(arg.allow_separable);
    if !report.is_ok() {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        bail!("{} is not a ladder determinantal table ({} violation(s))", arg.table.display(), report.violations.len());
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(table)
}

fn resolve_subtable(
    shape: &LadderShape,
    change_point: &Option<Vec<usize>>,
    mask: &Option<PathBuf>,
) -> Result<Subtable> {
    let sub = match (change_point, mask) {
        (Some(cp), None) => {
            change_point_subtable(shape, cp[0], cp[1]).context("invalid change point")?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read mask file {}", path.display()))?;
            Subtable::parse_mask(shape, &text).context("cannot parse subtable mask")?
        }
        (None, None) => Subtable::empty(),
        (Some(_), Some(_)) => unreachable!("clap group forbids both"),
    };
    if sub.is_empty() {
        eprintln!("note: the subtable is empty; the model reduces to quasi-independence");
    } else if sub.is_full(shape) {
        eprintln!("note: the subtable is all of S; the extra constraint is the grand total");
    }
    Ok(sub)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct ValidateReport {
    ok: bool,
    rows: usize,
    cols: usize,
    cells: usize,
    violations: Vec<String>,
    warnings: Vec<String>,
}

fn cmd_validate(args: ValidateArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.table.table)
        .with_context(|| format!("cannot read table file {}", args.table.table.display()))?;
    let table = parse_table(&text).context("cannot parse table")?;
    let report = table.shape().validate(args.table.allow_separable);
    let out = ValidateReport {
        ok: report.is_ok(),
        rows: table.shape().row_count(),
        cols: table.shape().col_count(),
        cells: table.shape().cell_count(),
        violations: report.violations.iter().map(|v| v.to_string()).collect(),
        warnings: report.warnings.iter().map(|v| v.to_string()).collect(),
    };
    if args.json {
        print_json(&out)?;
    } else {
        println!("shape: {} rows x {} cols, {} cells", out.rows, out.cols, out.cells);
        for v in &out.violations {
            println!("violation: {v}");
        }
        for w in &out.warnings {
            println!("warning: {w}");
        }
        println!("{}", if out.ok { "ok: ladder determinantal table" } else { "invalid" });
    }
    Ok(if out.ok { 0 } else { 1 })
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct MoveCellJson {
    row: usize,
    col: usize,
    coef: i64,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct MoveJson {
    #[serde(rename = "move")]
    name: String,
    cells: Vec<MoveCellJson>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct BasisReport {
    n_moves: usize,
    moves: Vec<MoveJson>,
}

fn move_json(mv: &Move) -> MoveJson {
    MoveJson {
        name: mv.to_string(),
        cells: mv.cells().iter().map(|(c, coef)| MoveCellJson { row: c.row, col: c.col, coef: *coef }).collect(),
    }
}

fn cmd_basis(args: BasisArgs) -> Result<u8> {
    let table = load_table(&args.table)?;
    let sub = resolve_subtable(table.shape(), &args.subtable.change_point, &args.subtable.subtable)?;
    let basis = generate_markov_basis(table.shape(), &sub)?;
    if args.json {
        let report = BasisReport { n_moves: basis.len(), moves: basis.iter().map(move_json).collect() };
        print_json(&report)?;
    } else {
        for mv in &basis {
            println!("{mv}");
        }
        eprintln!("{} move(s)", basis.len());
    }
    Ok(0)
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct PairJson {
    alpha: Cell,
    beta: Cell,
    class: String,
    #[serde(rename = "move")]
    name: String,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct LatticeReport {
    cells: usize,
    edges: Vec<(Cell, Cell)>,
    chain_c: Vec<Cell>,
    chain_d: Vec<Cell>,
    lattice_is_chain: bool,
    pairs: Vec<PairJson>,
}

fn cmd_lattice(args: LatticeArgs) -> Result<u8> {
    let table = load_table(&args.table)?;
    let sub = resolve_subtable(table.shape(), &args.subtable.change_point, &args.subtable.subtable)?;
    let lattice = build_lattice(table.shape())?;
    let chains = join_irreducibles(&lattice);
    let pairs = incomparable_pairs(&lattice, &sub)?;
    let report = LatticeReport {
        cells: lattice.len(),
        edges: lattice.hasse_edges(),
        chain_c: chains.row_chain.clone(),
        chain_d: chains.col_chain.clone(),
        lattice_is_chain: chains.lattice_is_chain,
        pairs: pairs
            .iter()
            .map(|p| PairJson {
                alpha: p.alpha,
                beta: p.beta,
                class: p.class.to_string(),
                name: pair_to_move(p).to_string(),
            })
            .collect(),
    };
    if args.json {
        print_json(&report)?;
    } else {
        println!("lattice on {} cells", report.cells);
        println!("hasse edges:");
        for (lo, hi) in &report.edges {
            println!("  {lo} -> {hi}");
        }
        if report.lattice_is_chain {
            println!("warning: the lattice is a chain; no planar decomposition");
            println!("chain: {}", cells_line(&report.chain_c));
        } else {
            println!("chain C: {}", cells_line(&report.chain_c));
            println!("chain D: {}", cells_line(&report.chain_d));
        }
        println!("incomparable pairs ({}):", report.pairs.len());
        for p in &report.pairs {
            println!("  {{{},{}}} {} -> {}", p.alpha, p.beta, p.class, p.name);
        }
    }
    Ok(0)
}

fn cells_line(cells: &[Cell]) -> String {
    cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct FitReport {
    chi2: f64,
    df: usize,
    asymptotic_p: f64,
    iterations: usize,
    residual: f64,
}

fn cmd_fit(args: FitArgs) -> Result<u8> {
    let table = load_table(&args.table)?;
    let sub = resolve_subtable(table.shape(), &args.subtable.change_point, &args.subtable.subtable)?;
    let fit = fit_mle(&table, &sub, args.tol, args.max_iter)?;
    for w in &fit.warnings {
        eprintln!("warning: {w:?}");
    }
    let report = FitReport {
        chi2: fit.chi_square,
        df: fit.df,
        asymptotic_p: fit.asymptotic_p,
        iterations: fit.iterations,
        residual: fit.residual,
    };
    if args.json {
        print_json(&report)?;
    } else {
        print!("{}", fitted_grid(table.shape(), &fit.fitted));
        println!("{}", serde_json::to_string(&report)?);
    }
    Ok(0)
}

/// Renders fitted means as a two-decimal grid mirroring the table layout.
fn fitted_grid(shape: &LadderShape, fitted: &[f64]) -> String {
    let mut grid = vec![vec![".".to_string(); shape.col_count()]; shape.row_count()];
    for (k, cell) in shape.cells().enumerate() {
        grid[cell.row - 1][cell.col - 1] = format!("{:.2}", fitted[k]);
    }
    let mut widths = vec![0usize; shape.col_count()];
    for row in &grid {
        for (j, tok) in row.iter().enumerate() {
            widths[j] = widths[j].max(tok.len());
        }
    }
    let mut out = String::new();
    for row in &grid {
        let line: Vec<String> =
            row.iter().enumerate().map(|(j, tok)| format!("{tok:>w$}", w = widths[j])).collect();
        out.push_str(line.join(" ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct TestReport {
    p_hat: f64,
    std_error: f64,
    chi2_obs: f64,
    df: usize,
    asymptotic_p: f64,
    n_moves: usize,
    acceptance_rate: f64,
}

impl TestReport {
    fn from_summary(summary: &ChainSummary) -> Self {
        TestReport {
            p_hat: summary.p_hat,
            std_error: summary.std_error,
            chi2_obs: summary.chi2_obs,
            df: summary.df,
            asymptotic_p: summary.asymptotic_p,
            n_moves: summary.n_moves,
            acceptance_rate: summary.acceptance_rate,
        }
    }
}

fn cmd_test(args: TestArgs) -> Result<u8> {
    let table = load_table(&args.table)?;
    let sub = resolve_subtable(table.shape(), &args.subtable.change_point, &args.subtable.subtable)?;
    let cfg = ChainConfig {
        burn_in: args.burn_in,
        samples: args.samples,
        thin: args.thin,
        seed: args.seed,
        replicates: args.replicates,
        statistic: Statistic::PearsonChiSquare,
        hist_bin_width: args.hist_bin,
    };
    let summary = run_chain(&table, &sub, &cfg)?;
    if summary.empty_basis {
        eprintln!("warning: the Markov basis is empty; the fiber is a single point and p_hat = 1");
    }
    if let Some(path) = &args.hist_out {
        emit_histogram(&summary, path)?;
    }
    let report = TestReport::from_summary(&summary);
    if args.json {
        print_json(&report)?;
    } else {
        println!("p_hat = {:.4} (std error {:.4})", report.p_hat, report.std_error);
        println!(
            "chi2_obs = {:.3}, df = {}, asymptotic p = {:.3}",
            report.chi2_obs, report.df, report.asymptotic_p
        );
        println!(
            "moves = {}, acceptance rate = {:.3}, samples = {}",
            report.n_moves, report.acceptance_rate, summary.samples_retained
        );
    }
    Ok(0)
}

/// Writes the histogram as two-column text: bin midpoint and count.
fn emit_histogram(summary: &ChainSummary, path: &Path) -> Result<()> {
    fs::write(path, summary.histogram.render_text())
        .with_context(|| format!("cannot write histogram to {}", path.display()))?;
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<u8> {
    let table = load_table(&args.table)?;
    let cfg = ChainConfig {
        burn_in: args.burn_in,
        samples: args.samples,
        thin: args.thin,
        seed: args.seed,
        replicates: args.replicates,
        statistic: Statistic::PearsonChiSquare,
        hist_bin_width: 0.5,
    };
    let entries = scan_change_points(&table, &cfg);
    if args.json {
        print_json(&entries)?;
    } else {
        println!(
            "{:<5} {:<13} {:>7} {:>8} {:>9} {:>4} {:>7} {:>6}  flags",
            "rank", "change-point", "p_hat", "std_err", "chi2_obs", "df", "p_asym", "moves"
        );
        for (rank, e) in entries.iter().enumerate() {
            match e.p_hat {
                Some(p) => println!(
                    "{:<5} {:<13} {:>7.4} {:>8.4} {:>9.3} {:>4} {:>7.3} {:>6}  {}{}",
                    rank + 1,
                    e.change_point.to_string(),
                    p,
                    e.std_error.unwrap_or(f64::NAN),
                    e.chi2_obs.unwrap_or(f64::NAN),
                    e.df.map_or("-".to_string(), |d| d.to_string()),
                    e.asymptotic_p.unwrap_or(f64::NAN),
                    e.n_moves.map_or("-".to_string(), |m| m.to_string()),
                    if e.best { "best" } else { "" },
                    if e.co_leader && !e.best { "co-leader" } else { "" },
                ),
                None => println!(
                    "{:<5} {:<13} failed: {}",
                    rank + 1,
                    e.change_point.to_string(),
                    e.error.as_deref().unwrap_or("unknown error")
                ),
            }
        }
    }
    Ok(0)
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct FiberReport {
    size: usize,
    connected: bool,
    components: usize,
    n_moves: usize,
}

fn cmd_fiber(args: FiberArgs) -> Result<u8> {
    let table = load_table(&args.table)?;
    let sub = resolve_subtable(table.shape(), &args.subtable.change_point, &args.subtable.subtable)?;
    let config = configuration_matrix(table.shape(), &sub)?;
    let target = sufficient_statistic(&table, &sub);
    let fiber = enumerate_fiber(&config, &target, args.cap)?;
    let basis = generate_markov_basis(table.shape(), &sub)?;
    let conn = connectivity_check(&fiber, &basis);
    let report =
        FiberReport { size: fiber.len(), connected: conn.connected, components: conn.components, n_moves: basis.len() };
    if args.json {
        print_json(&report)?;
    } else {
        println!("fiber size = {}", report.size);
        println!(
            "connected under the {}-move basis: {} ({} component(s))",
            report.n_moves,
            if report.connected { "yes" } else { "no" },
            report.components
        );
    }
    Ok(0)
}
