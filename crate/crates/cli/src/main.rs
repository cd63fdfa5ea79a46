//! Batch front end: load a model document, dispatch to the engines, write
//! machine-readable reports.
//!
//! Every command reads one model JSON (`--model`), writes its tables into the
//! output directory (`--out`, created if missing) and a `summary.json` beside
//! them.  Files are written atomically (temp file + rename).  Floating-point
//! values are printed at 12 significant digits; identical (model, config,
//! seed) runs produce byte-identical tables, and a byte-identical summary up
//! to the `timings` object.
//!
//! Exit codes: 0 success, 2 no-arbitrage failure, 3 validation error,
//! 4 solver non-convergence.  Diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use superhedge::engine::{self, PriceSurface};
use superhedge::maxmin::{self, RecursionOptions};
use superhedge::model::{load_model, Model};
use superhedge::na;
use superhedge::Error;

const EXIT_ARBITRAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_NONCONVERGENCE: u8 = 4;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Command {
    /// Sweep every non-terminal node for one-step arbitrage
    CheckNa,
    /// Superhedging price surface (primal and dual) per node
    Price,
    /// Minimal superhedging plan: hedge, wealth and consumption per node
    Hedge,
    /// Run the minimal plan path-wise and report the worst slack
    Verify,
    /// Best martingale expectation per node
    Dual,
    /// Robust consumption-investment policy from the value recursion
    Optimize,
    /// price + hedge + optimize tables over the same node set
    Report,
}

#[derive(Parser, Debug)]
#[command(
    name = "superhedge",
    version,
    about = "Robust superhedging prices, minimal hedge plans and worst-case \
             consumption-investment policies on scenario lattices"
)]
struct Args {
    /// Model document (JSON)
    #[arg(long)]
    model: PathBuf,

    /// Output directory for report files (created if missing)
    #[arg(long)]
    out: PathBuf,

    /// What to compute
    #[arg(long, value_enum)]
    cmd: Command,

    /// Certification tolerance for the one-step max-min solver
    #[arg(long)]
    tol: Option<f64>,

    /// Wealth-grid points per node (optimize/report)
    #[arg(long)]
    grid_n: Option<usize>,

    /// Wealth-grid width above each node's superhedging floor
    #[arg(long)]
    wmax: Option<f64>,

    /// Seed for all multistart randomness; fully determines the run
    #[arg(long)]
    seed: Option<u64>,

    /// Extra random multistart seeds per one-step solve
    #[arg(long)]
    multistarts: Option<usize>,

    /// Worker threads for per-slice parallelism (defaults to all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// Initial wealth for `verify` (defaults to the root price)
    #[arg(long)]
    x: Option<f64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = superhedge::configure_threads(n) {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Engine(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Arbitrage(_) => EXIT_ARBITRAGE,
                Error::Model(_) | Error::Infeasible(_) => EXIT_VALIDATION,
                Error::Lp(_) | Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
            };
            ExitCode::from(code)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

enum CliError {
    Engine(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Engine(e)
    }
}

fn run(args: &Args) -> Result<u8, CliError> {
    let t0 = Instant::now();
    let text = fs::read_to_string(&args.model)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.model.display())))?;
    let model = load_model(&text).map_err(Error::Model)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
    let load_ms = t0.elapsed().as_millis() as u64;

    let t1 = Instant::now();
    let mut status = "ok";
    let mut exit = 0u8;
    let mut pi0 = None;
    let mut value = None;
    let mut gap = None;
    let mut tables: Vec<(&str, String)> = Vec::new();

    match args.cmd {
        Command::CheckNa => {
            let (csv, all_ok) = na_table(&model)?;
            tables.push(("na.csv", csv));
            if !all_ok {
                status = "arbitrage";
                exit = EXIT_ARBITRAGE;
            }
        }
        Command::Price => {
            let surface = engine::price(&model.lattice, payoff(&model)?)?;
            pi0 = Some(surface.pi[model.lattice.root()]);
            tables.push(("price.csv", price_table(&model, &surface)));
        }
        Command::Dual => {
            let surface = engine::price(&model.lattice, payoff(&model)?)?;
            pi0 = Some(surface.dual[model.lattice.root()]);
            tables.push(("dual.csv", dual_table(&model, &surface)));
        }
        Command::Hedge => {
            let plan = engine::minimal_strategy(&model.lattice, payoff(&model)?)?;
            pi0 = Some(plan.initial_capital);
            tables.push(("hedge.csv", hedge_table(&model, &plan)));
        }
        Command::Verify => {
            let plan = engine::minimal_strategy(&model.lattice, payoff(&model)?)?;
            pi0 = Some(plan.initial_capital);
            let x = args.x.unwrap_or(plan.initial_capital);
            let report = engine::verify_superhedge(
                &model.lattice,
                payoff(&model)?,
                x,
                &plan.hedge,
                &plan.consumption,
            )?;
            if !report.pass {
                status = "fail";
            }
            tables.push(("verify.csv", verify_table(&report, x)));
        }
        Command::Optimize => {
            let (solution, csv) = optimize(&model, args)?;
            pi0 = Some(solution.floors[model.lattice.root()]);
            value = Some(solution.value);
            gap = Some(solution.minimax_gap);
            tables.push(("optimize.csv", csv));
        }
        Command::Report => {
            let surface = engine::price(&model.lattice, payoff(&model)?)?;
            let plan = engine::minimal_strategy(&model.lattice, payoff(&model)?)?;
            let (solution, csv) = optimize(&model, args)?;
            pi0 = Some(surface.pi[model.lattice.root()]);
            value = Some(solution.value);
            gap = Some(solution.minimax_gap);
            tables.push(("price.csv", price_table(&model, &surface)));
            tables.push(("hedge.csv", hedge_table(&model, &plan)));
            tables.push(("optimize.csv", csv));
        }
    }
    let solve_ms = t1.elapsed().as_millis() as u64;

    for (name, csv) in &tables {
        write_atomic(&args.out.join(name), csv.as_bytes())?;
    }
    let summary = serde_json::json!({
        "command": cmd_name(args.cmd),
        "status": status,
        "pi0": pi0,
        "value": value,
        "gap": gap,
        "timings": { "load_ms": load_ms, "solve_ms": solve_ms },
    });
    let mut body = serde_json::to_string_pretty(&summary).expect("summary serialises");
    body.push('\n');
    write_atomic(&args.out.join("summary.json"), body.as_bytes())?;
    Ok(exit)
}

fn cmd_name(c: Command) -> &'static str {
    match c {
        Command::CheckNa => "check-na",
        Command::Price => "price",
        Command::Hedge => "hedge",
        Command::Verify => "verify",
        Command::Dual => "dual",
        Command::Optimize => "optimize",
        Command::Report => "report",
    }
}

fn payoff(model: &Model) -> Result<&superhedge::PayoffSpec, Error> {
    model
        .payoff
        .as_ref()
        .ok_or_else(|| Error::Infeasible("model document has no payoff block".into()))
}

fn optimize(model: &Model, args: &Args) -> Result<(maxmin::RobustSolution, String), Error> {
    let priors = model
        .priors
        .as_ref()
        .ok_or_else(|| Error::Infeasible("model document has no priors block".into()))?;
    let utility = model
        .utility
        .as_ref()
        .ok_or_else(|| Error::Infeasible("model document has no utility block".into()))?;
    let defaults = RecursionOptions::default();
    let opts = RecursionOptions {
        w_max: args.wmax.or(defaults.w_max),
        grid_n: args.grid_n.unwrap_or(defaults.grid_n),
        multistarts: args.multistarts.unwrap_or(defaults.multistarts),
        seed: args.seed.unwrap_or(defaults.seed),
        tol: args.tol.unwrap_or(defaults.tol),
    };
    let solution = maxmin::value_recursion(
        &model.lattice,
        payoff(model)?,
        priors,
        utility,
        &opts,
    )?;
    let width = opts
        .w_max
        .unwrap_or((solution.floors[model.lattice.root()] + 10.0).max(1.0));
    let csv = optimize_table(model, &solution, width);
    Ok((solution, csv))
}

/// One row per non-terminal node: interior margin and, on failure, the
/// arbitrage certificate (a direction every increment leaves weakly positive).
fn na_table(model: &Model) -> Result<(String, bool), Error> {
    let lat = &model.lattice;
    let mut out = String::from("node_id,time,ok,margin,certificate\n");
    let mut all_ok = true;
    for (ix, node) in lat.nodes().iter().enumerate() {
        if lat.is_terminal(ix) {
            continue;
        }
        let support: Vec<Vec<f64>> = node
            .successors
            .iter()
            .map(|&j| lat.node(j).price.clone())
            .collect();
        let check = na::check_node(&support, &node.price)?;
        if !check.ok {
            all_ok = false;
            eprintln!(
                "arbitrage at node {}: certificate [{}]",
                node.id,
                check
                    .certificate
                    .as_deref()
                    .unwrap_or(&[])
                    .iter()
                    .map(|v| sig(*v))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
        let cert = match &check.certificate {
            Some(c) => c.iter().map(|v| sig(*v)).collect::<Vec<_>>().join(";"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&node.id),
            node.time,
            check.ok,
            sig(check.margin),
            cert
        ));
    }
    Ok((out, all_ok))
}

fn price_table(model: &Model, s: &PriceSurface) -> String {
    let d = model.lattice.dim();
    let mut out = String::from("node_id,time");
    for k in 1..=d {
        out.push_str(&format!(",price_{k}"));
    }
    out.push_str(",pi,dual\n");
    for (ix, node) in model.lattice.nodes().iter().enumerate() {
        out.push_str(&csv_field(&node.id));
        out.push_str(&format!(",{}", node.time));
        for p in &node.price {
            out.push_str(&format!(",{}", sig(*p)));
        }
        out.push_str(&format!(",{},{}\n", sig(s.pi[ix]), sig(s.dual[ix])));
    }
    out
}

fn dual_table(model: &Model, s: &PriceSurface) -> String {
    let d = model.lattice.dim();
    let mut out = String::from("node_id,time");
    for k in 1..=d {
        out.push_str(&format!(",price_{k}"));
    }
    out.push_str(",dual\n");
    for (ix, node) in model.lattice.nodes().iter().enumerate() {
        out.push_str(&csv_field(&node.id));
        out.push_str(&format!(",{}", node.time));
        for p in &node.price {
            out.push_str(&format!(",{}", sig(*p)));
        }
        out.push_str(&format!(",{}\n", sig(s.dual[ix])));
    }
    out
}

fn hedge_table(model: &Model, plan: &engine::HedgePlan) -> String {
    let d = model.lattice.dim();
    let mut out = String::from("node_id,time");
    for k in 1..=d {
        out.push_str(&format!(",price_{k}"));
    }
    for k in 1..=d {
        out.push_str(&format!(",h_{k}"));
    }
    out.push_str(",wealth,cum_consumption\n");
    for (ix, node) in model.lattice.nodes().iter().enumerate() {
        out.push_str(&csv_field(&node.id));
        out.push_str(&format!(",{}", node.time));
        for p in &node.price {
            out.push_str(&format!(",{}", sig(*p)));
        }
        match &plan.hedge[ix] {
            Some(h) => {
                for v in h {
                    out.push_str(&format!(",{}", sig(*v)));
                }
            }
            None => out.push_str(&",".repeat(d)),
        }
        out.push_str(&format!(
            ",{},{}\n",
            sig(plan.wealth[ix]),
            sig(plan.consumption[ix])
        ));
    }
    out
}

fn verify_table(report: &engine::VerifyReport, x: f64) -> String {
    let mut out = String::from("field,value\n");
    out.push_str(&format!(
        "status,{}\n",
        if report.pass { "PASS" } else { "FAIL" }
    ));
    out.push_str(&format!("initial_wealth,{}\n", sig(x)));
    out.push_str(&format!("min_slack,{}\n", sig(report.min_slack)));
    out.push_str(&format!(
        "min_consumption_step,{}\n",
        sig(report.min_consumption_step)
    ));
    out.push_str(&format!(
        "worst_path,{}\n",
        csv_field(&report.worst_path.join(">"))
    ));
    out
}

fn optimize_table(model: &Model, s: &maxmin::RobustSolution, width: f64) -> String {
    let d = model.lattice.dim();
    let mut out = String::from("node_id,time,floor,grid_top,wealth,value,consumption");
    for k in 1..=d {
        out.push_str(&format!(",h_{k}"));
    }
    out.push_str(",worst_prior\n");
    for (ix, node) in model.lattice.nodes().iter().enumerate() {
        out.push_str(&csv_field(&node.id));
        out.push_str(&format!(
            ",{},{},{},{}",
            node.time,
            sig(s.floors[ix]),
            sig(s.floors[ix] + width),
            sig(s.policy.wealth[ix])
        ));
        match &s.surfaces[ix] {
            Some(pw) => out.push_str(&format!(",{}", sig(pw.eval(s.policy.wealth[ix])))),
            None => out.push(','),
        }
        out.push_str(&format!(",{}", sig(s.policy.consumption[ix])));
        match &s.policy.hedge[ix] {
            Some(h) => {
                for v in h {
                    out.push_str(&format!(",{}", sig(*v)));
                }
            }
            None => out.push_str(&",".repeat(d)),
        }
        match s.worst_case.vertex[ix] {
            Some(k) => out.push_str(&format!(",{k}\n")),
            None => out.push_str(",\n"),
        }
    }
    out
}

/// 12 significant digits, scientific; the frozen table number format.
fn sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{:.11e}", v)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.to_path_buf();
    tmp.set_extension("tmp");
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("cannot move report into {}: {e}", path.display())))
}
