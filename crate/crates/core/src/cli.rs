//! The `specsim` command line: `convert`, `generate`, `simulate`, `report`, `sweep`.
//!
//! Exit status is 0 on success, 1 on input or validation errors and 2 on
//! usage errors. Progress goes to stderr; data goes to files (or, for
//! `report` without `--out`, to stdout).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{ClockMode, CostProxy, LockMode, SimConfig};
use crate::error::Error;
use crate::experiments::{
    run_experiment, write_reports, Exclusion, ExperimentMatrix, ExperimentReport, Manifest,
    ReportIndex,
};
use crate::geth::load_block;
use crate::trace::{read_trace_file, write_trace_file, Address};
use crate::workload::{generate, GenParams, HotContract, Spread};

#[derive(Debug, Parser)]
#[command(
    name = "specsim",
    version,
    about = "Speculative execution simulator for blockchain traces"
)]
struct Cli {
    /// Seed for synthetic generation
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress output
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Worker threads
    #[arg(long, global = true, env = "SPECSIM_JOBS", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert client debug traces into a canonical trace file
    Convert {
        /// Block sidecar files
        #[arg(required = true)]
        blocks: Vec<PathBuf>,
    },
    /// Generate a synthetic trace
    Generate(GenerateArgs),
    /// Simulate one configuration over a trace
    Simulate(SimulateArgs),
    /// Summarize report files as CSV
    Report {
        /// Report files, index files or report directories
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run an experiment manifest
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// TOML file with generator parameters; flags override it
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    calls: Option<u64>,
    #[arg(long)]
    calls_spread: Option<u64>,
    #[arg(long)]
    transfers: Option<u64>,
    #[arg(long)]
    contracts: Option<usize>,
    #[arg(long)]
    keys: Option<u64>,
    #[arg(long)]
    skew: Option<f64>,
    #[arg(long)]
    write_ratio: Option<f64>,
    /// Send this share of calls to one hot contract
    #[arg(long)]
    hot_fraction: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LockArg {
    Rw,
    Mutex,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProxyArg {
    Gas,
    Instr,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClockArg {
    Instr,
    Proxy,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long, value_enum, default_value = "rw")]
    locks: LockArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    phases: u64,
    #[arg(long, value_enum, default_value = "gas")]
    proxy: ProxyArg,
    #[arg(long, value_enum, default_value = "instr")]
    clock: ClockArg,
    /// Model a perfect conflict predictor
    #[arg(long)]
    predictor: bool,
    #[arg(long)]
    include_transfers: bool,
    /// Contract to leave out (repeatable)
    #[arg(long, conflicts_with = "exclude_top")]
    exclude: Vec<Address>,
    /// Leave out the K most conflicting contracts of a baseline pass
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    exclude_top: Option<u64>,
    /// Analyze every N-th block
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    stride: u64,
}

enum Failure {
    Usage(String),
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Ctx {
    seed: Option<u64>,
    out: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out(&self, what: &str) -> std::result::Result<&Path, Failure> {
        self.out
            .as_deref()
            .ok_or_else(|| Failure::Usage(format!("--out is required ({what})")))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        quiet: cli.quiet,
    };
    match pool.install(|| execute(&ctx, cli.command)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(ctx: &Ctx, command: Command) -> Outcome {
    match command {
        Command::Convert { blocks } => convert(ctx, &blocks),
        Command::Generate(args) => generate_cmd(ctx, args),
        Command::Simulate(args) => simulate(ctx, args),
        Command::Report { paths } => report(ctx, &paths),
        Command::Sweep { manifest } => sweep(ctx, &manifest),
    }
}

fn convert(ctx: &Ctx, sidecars: &[PathBuf]) -> Outcome {
    let out = ctx.out("convert writes a trace file")?;
    let mut blocks = Vec::with_capacity(sidecars.len());
    for path in sidecars {
        blocks.push(load_block(path)?);
    }
    blocks.sort_by_key(|b| b.number);
    if let Some(w) = blocks.windows(2).find(|w| w[0].number == w[1].number) {
        return Err(Error::BlockOrder {
            prev: w[0].number,
            next: w[1].number,
        }
        .into());
    }
    write_trace_file(&blocks, out)?;
    ctx.progress(format!(
        "converted {} blocks into {}",
        blocks.len(),
        out.display()
    ));
    Ok(())
}

fn generate_cmd(ctx: &Ctx, a: GenerateArgs) -> Outcome {
    let out = ctx.out("generate writes a trace file")?;
    let mut p = match &a.params {
        Some(path) => fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|t| Ok(toml::from_str::<GenParams>(&t)?))
            .map_err(|e| e.at_path(path))?,
        None => GenParams::default(),
    };
    if let Some(v) = a.blocks {
        p.blocks = v;
    }
    if let Some(v) = a.calls {
        p.calls_per_block = Spread::new(v, a.calls_spread.unwrap_or(0));
    } else if let Some(s) = a.calls_spread {
        p.calls_per_block.spread = s;
    }
    if let Some(v) = a.transfers {
        p.transfers_per_block = Spread::fixed(v);
    }
    if let Some(v) = a.contracts {
        p.contracts = v;
    }
    if let Some(v) = a.keys {
        p.keys_per_contract = v;
    }
    if let Some(v) = a.skew {
        p.contract_skew = v;
    }
    if let Some(v) = a.write_ratio {
        p.write_ratio = v;
    }
    if let Some(v) = a.hot_fraction {
        p.hot_contract = Some(HotContract {
            fraction: v,
            ..Default::default()
        });
    }
    if let Some(s) = ctx.seed {
        p.seed = s;
    }
    let blocks = generate(&p)?;
    write_trace_file(&blocks, out)?;
    ctx.progress(format!(
        "generated {} blocks (seed {}) into {}",
        blocks.len(),
        p.seed,
        out.display()
    ));
    Ok(())
}

fn summarize(ctx: &Ctx, reports: &BTreeMap<String, ExperimentReport>) {
    for (key, r) in reports {
        ctx.progress(format!(
            "{key}: weighted speed-up {:.4}, conflict rate {:.4}, {} blocks",
            r.report.weighted_speedup, r.report.weighted_conflict_rate, r.report.blocks
        ));
    }
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Outcome {
    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    let config = SimConfig {
        threads: a.threads as usize,
        lock_mode: match a.locks {
            LockArg::Rw => LockMode::ReadWrite,
            LockArg::Mutex => LockMode::Mutex,
        },
        phases: a.phases as usize,
        proxy: match a.proxy {
            ProxyArg::Gas => CostProxy::Gas,
            ProxyArg::Instr => CostProxy::Instructions,
        },
        clock: match a.clock {
            ClockArg::Instr => ClockMode::Instructions,
            ClockArg::Proxy => ClockMode::Proxy,
        },
        predictor: a.predictor,
        include_transfers: a.include_transfers,
        excluded_contracts: BTreeSet::new(),
    };
    let exclusion = match (a.exclude_top, a.exclude.is_empty()) {
        (Some(k), _) => Exclusion::TopK(k as usize),
        (None, false) => Exclusion::Explicit {
            name: "custom".into(),
            contracts: a.exclude.into_iter().collect(),
        },
        (None, true) => Exclusion::None,
    };
    let trace = read_trace_file(&a.trace)?;
    ctx.progress(format!(
        "simulating {} blocks from {}",
        trace.len(),
        a.trace.display()
    ));
    let matrix = ExperimentMatrix {
        stride: a.stride as usize,
        ..ExperimentMatrix::single(&config, exclusion)
    };
    let reports = run_experiment(&trace, &matrix)?;
    let index = write_reports(&out, &reports)?;
    summarize(ctx, &reports);
    ctx.progress(format!("wrote {}", index.display()));
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> crate::Result<T> {
    let inner = || -> crate::Result<T> { Ok(serde_json::from_str(&fs::read_to_string(path)?)?) };
    inner().map_err(|e| e.at_path(path))
}

fn collect_reports(
    path: &Path,
    into: &mut BTreeMap<String, ExperimentReport>,
) -> crate::Result<()> {
    if path.is_dir() {
        return collect_reports(&path.join("index.json"), into);
    }
    let value: serde_json::Value = read_json(path)?;
    if value.get("reports").is_some() {
        let index: ReportIndex =
            serde_json::from_value(value).map_err(|e| Error::from(e).at_path(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for entry in index.reports {
            collect_reports(&base.join(entry.file), into)?;
        }
    } else {
        let r: ExperimentReport =
            serde_json::from_value(value).map_err(|e| Error::from(e).at_path(path))?;
        into.insert(r.key.clone(), r);
    }
    Ok(())
}

fn report(ctx: &Ctx, paths: &[PathBuf]) -> Outcome {
    let mut reports = BTreeMap::new();
    for p in paths {
        collect_reports(p, &mut reports)?;
    }
    let write = |sink: &mut dyn Write| -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "key",
            "blocks",
            "calls",
            "aborts",
            "weighted_speedup",
            "weighted_conflict_rate",
            "slowdown_fraction",
            "top_contract",
        ])?;
        for (key, r) in &reports {
            let a = &r.report;
            w.write_record([
                key.clone(),
                a.blocks.to_string(),
                a.calls.to_string(),
                a.aborts.to_string(),
                a.weighted_speedup.to_string(),
                a.weighted_conflict_rate.to_string(),
                a.slowdown_fraction.to_string(),
                a.top_contracts
                    .first()
                    .map(|c| c.contract.to_string())
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    match &ctx.out {
        Some(out) => {
            let mut file =
                io::BufWriter::new(fs::File::create(out).map_err(|e| Error::from(e).at_path(out))?);
            write(&mut file).map_err(|e| e.at_path(out))?;
            file.flush().map_err(|e| Error::from(e).at_path(out))?;
            ctx.progress(format!(
                "summarized {} reports into {}",
                reports.len(),
                out.display()
            ));
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn sweep(ctx: &Ctx, manifest: &Path) -> Outcome {
    let m = Manifest::load(manifest)?;
    let out = ctx.out.clone().unwrap_or(m.output_dir);
    let trace = read_trace_file(&m.trace)?;
    ctx.progress(format!(
        "sweeping {} configurations over {} blocks",
        m.matrix.configurations().len(),
        trace.len()
    ));
    let reports = run_experiment(&trace, &m.matrix)?;
    let index = write_reports(&out, &reports)?;
    summarize(ctx, &reports);
    ctx.progress(format!("wrote {}", index.display()));
    Ok(())
}
