//! `ebc`: simulations, instance solvers and generators for sparse innovative
//! network coding over erasure broadcast channels.

mod plotdata;
mod selftest;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ebc_core::gfield::Field;
use ebc_core::hitting::{self, HittingInstance};
use ebc_core::innovate::{self, Cnf, Method, Scenario};
use ebc_core::simulate::{self, Grid, Scheme, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "ebc", version, about = "Sparse innovative network coding for erasure broadcast channels")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one configuration and print per-trial CSV plus an aggregate row.
    Simulate(SimulateArgs),
    /// Run a parameter grid given as JSON; trials run in parallel.
    Sweep(SweepArgs),
    /// Turn aggregate CSV rows into columnar plot data, one file per metric.
    Plotdata(PlotArgs),
    /// Find an innovative encoding vector for a scenario file.
    IevSolve(IevArgs),
    /// Solve a hitting-set instance.
    HitsetSolve(HitsetArgs),
    /// Generate instances.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Exhaustive reference solvers for small instances.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Run built-in consistency checks across modules.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct Output {
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Input {
    /// Read the instance from this file; stdin if absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON document with SimConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    pe: Option<f64>,
    #[arg(long)]
    pe_up: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long)]
    max_slots: Option<usize>,
    #[arg(long)]
    payload_len: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON grid: {"base": {...}, "schemes": [...], "qs": [...], "ns": [...], ...}.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; overrides EBC_THREADS. 0 picks automatically.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV produced by simulate or sweep.
    #[arg(long)]
    csv: PathBuf,
    /// Swept column used as x.
    #[arg(long, default_value = "N")]
    x: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IevArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value = "gh")]
    method: Method,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum HitMethod {
    Exact,
    Greedy,
    Oracle,
}

#[derive(Args)]
struct HitsetArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value = "exact")]
    method: HitMethod,
    /// Node budget for the exact search.
    #[arg(long, default_value_t = hitting::DEFAULT_NODE_BUDGET)]
    budget: u64,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Scenario with q+1 users and no innovative vector.
    AppendixA {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
    },
    /// Scenario encoding a 3-SAT formula; random unless --cnf is given.
    #[command(name = "3sat")]
    ThreeSat {
        #[arg(long, default_value_t = 2)]
        q: u32,
        /// DIMACS formula to reduce.
        #[arg(long)]
        cnf: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        vars: usize,
        #[arg(long, default_value_t = 10)]
        clauses: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the formula in DIMACS form here.
        #[arg(long)]
        cnf_out: Option<PathBuf>,
    },
    /// Sparsity scenario whose optimum equals a hitting-set optimum.
    HittingToSparsity {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        q: u32,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exhaustive search for an innovative vector.
    Iev {
        #[command(flatten)]
        input: Input,
    },
    /// Exhaustive search for a sparsest innovative vector.
    Sparsity {
        #[command(flatten)]
        input: Input,
    },
    /// Exhaustive minimum hitting set.
    Hitting {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Errors that map to exit code 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn read_input(input: &Input) -> Result<String> {
    match &input.input {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

fn parse<T: FromStr>(text: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    T::from_str(text).map_err(|e| usage(format!("invalid {what}: {e}")))
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn field(q: u32) -> Result<Field> {
    Field::new(q).map_err(|e| usage(e.to_string()))
}

fn read_json(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn json_error(path: &Path, e: serde_json::Error) -> anyhow::Error {
    usage(format!("{}: {e}", path.display()))
}

fn run_grid(grid: &Grid, threads: usize, out: &Output) -> Result<()> {
    for p in grid.points() {
        p.validate().map_err(|e| usage(e.to_string()))?;
    }
    let results = simulate::run_experiment(grid, threads)?;
    let mut buf = Vec::new();
    simulate::write_csv(&results, &mut buf)?;
    emit(out, &String::from_utf8(buf)?)
}

fn format_vector(x: &[ebc_core::gfield::Elem]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn report_vector(x: &[ebc_core::gfield::Elem], s: &Scenario) -> Result<String> {
    let weight = x.iter().filter(|&&v| v != 0).count();
    let hits = innovate::innovative_count(x, s)?;
    Ok(format!(
        "{}\nweight {weight}\ninnovative {hits}/{}\n",
        format_vector(x),
        s.num_users()
    ))
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let mut cfg: SimConfig = match &a.config {
        Some(p) => serde_json::from_str(&read_json(p)?).map_err(|e| json_error(p, e))?,
        None => SimConfig::default(),
    };
    macro_rules! apply {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = a.$flag.clone() { cfg.$field = v; })*
        };
    }
    apply!(scheme => scheme, q => q, n => n, k => k, pe => pe, pe_up => pe_up,
        trials => trials, seed => master_seed, chunk_size => chunk_size, payload_len => payload_len);
    if a.max_slots.is_some() {
        cfg.max_slots = a.max_slots;
    }
    let grid = Grid {
        base: cfg,
        ..Grid::default()
    };
    run_grid(&grid, 1, &a.out)
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let grid: Grid = serde_json::from_str(&read_json(&a.config)?).map_err(|e| json_error(&a.config, e))?;
    let threads = match a.threads {
        Some(t) => t,
        None => match std::env::var("EBC_THREADS") {
            Ok(v) => v.trim().parse().map_err(|_| usage(format!("EBC_THREADS={v:?} is not a count")))?,
            Err(_) => 0,
        },
    };
    log::info!("sweeping {} grid points on {} threads", grid.points().len(), threads);
    run_grid(&grid, threads, &a.out)
}

fn iev_cmd(a: IevArgs) -> Result<()> {
    let s: Scenario = parse(&read_input(&a.input)?, "scenario")?;
    let x = if a.method == Method::Brute {
        innovate::brute_force_innovative(&s)?
    } else {
        match innovate::generate(a.method, &s) {
            Ok(x) => Some(x),
            Err(innovate::InnovateError::Empty) => None,
            Err(e) => return Err(e.into()),
        }
    };
    let text = match x {
        Some(x) => report_vector(&x, &s)?,
        None => "EMPTY\n".into(),
    };
    emit(&Output { out: None }, &text)
}

fn hitset_cmd(a: HitsetArgs) -> Result<()> {
    let inst: HittingInstance = parse(&read_input(&a.input)?, "hitting instance")?;
    let sol = match a.method {
        HitMethod::Exact => hitting::exact_hitting(&inst, a.budget)?,
        HitMethod::Greedy => hitting::greedy_hitting(&inst),
        HitMethod::Oracle => hitting::oracle_min_hitting(&inst)?,
    };
    print_hitting(&sol);
    Ok(())
}

fn print_hitting(sol: &hitting::HittingSolution) {
    let set: Vec<String> = sol.one_based().iter().map(|e| e.to_string()).collect();
    println!("size {}", sol.size());
    println!("set {}", set.join(" "));
}

fn random_cnf(vars: usize, clauses: usize, seed: u64) -> Result<Cnf> {
    if vars == 0 {
        bail!(usage("--vars must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..clauses)
        .map(|_| {
            let mut c = [0i32; 3];
            for l in &mut c {
                let v = rng.gen_range(1..=vars as i32);
                *l = if rng.gen_bool(0.5) { v } else { -v };
            }
            c
        })
        .collect();
    Ok(Cnf { n: vars, clauses })
}

fn gen_cmd(g: GenCmd) -> Result<()> {
    let s = match g {
        GenCmd::AppendixA { q, n } => innovate::gen_appendix_a(&field(q)?, n).map_err(|e| usage(e.to_string()))?,
        GenCmd::ThreeSat {
            q,
            cnf,
            vars,
            clauses,
            seed,
            cnf_out,
        } => {
            let f = field(q)?;
            let formula = match cnf {
                Some(p) => parse(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?, "formula")?,
                None => random_cnf(vars, clauses, seed)?,
            };
            if let Some(p) = cnf_out {
                fs::write(&p, formula.to_string()).with_context(|| format!("writing {}", p.display()))?;
            }
            innovate::reduce_3sat(&formula, &f).map_err(|e| usage(e.to_string()))?
        }
        GenCmd::HittingToSparsity { input, q } => {
            let inst: HittingInstance = parse(&read_input(&input)?, "hitting instance")?;
            hitting::sparsity_instance_from_hitting(&inst, &field(q)?).map_err(|e| usage(e.to_string()))?
        }
    };
    print!("{s}");
    Ok(())
}

fn oracle_cmd(o: OracleCmd) -> Result<()> {
    match o {
        OracleCmd::Iev { input } => {
            let s: Scenario = parse(&read_input(&input)?, "scenario")?;
            match innovate::brute_force_innovative(&s)? {
                Some(x) => print!("{}", report_vector(&x, &s)?),
                None => println!("EMPTY"),
            }
        }
        OracleCmd::Sparsity { input } => {
            let s: Scenario = parse(&read_input(&input)?, "scenario")?;
            match innovate::brute_force_sparsity(&s) {
                Ok((_, x)) => print!("{}", report_vector(&x, &s)?),
                Err(innovate::InnovateError::Empty) => println!("EMPTY"),
                Err(e) => return Err(e.into()),
            }
        }
        OracleCmd::Hitting { input } => {
            let inst: HittingInstance = parse(&read_input(&input)?, "hitting instance")?;
            print_hitting(&hitting::oracle_min_hitting(&inst)?);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate(a) => simulate_cmd(a),
        Cmd::Sweep(a) => sweep_cmd(a),
        Cmd::Plotdata(a) => plotdata::run(&a.csv, &a.x, &a.out_dir),
        Cmd::IevSolve(a) => iev_cmd(a),
        Cmd::HitsetSolve(a) => hitset_cmd(a),
        Cmd::Gen(g) => gen_cmd(g),
        Cmd::Oracle(o) => oracle_cmd(o),
        Cmd::Selftest(a) => selftest::run(a.seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
