mod augment;
mod bench;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tiara_core::ingest::{self, BinningOptions, FormatOptions, SequenceStats};
use tiara_core::verify::{self, Check, VerifyOptions};
use tiara_core::{DiffusionConfig, PostProcessConfig, SnapshotSequence};

#[derive(Parser)]
#[command(
    name = "tiara",
    version,
    about = "Time-aware random-walk augmentation of dynamic graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one diffusion matrix per snapshot plus a run manifest.
    Augment(augment::AugmentArgs),
    /// Check the sparse pipeline against the dense oracle.
    Verify(VerifyArgs),
    /// Print dataset statistics of a binned edge list.
    Stats(StatsArgs),
    /// Time the diffusion on synthetic or given input.
    Bench(bench::BenchArgs),
}

/// Edge-list parsing and snapshot binning.
#[derive(Args, Clone, Debug, Serialize)]
pub struct InputArgs {
    /// Temporal edge list: `src dst [..] time` per line.
    #[arg(long)]
    pub input: PathBuf,
    /// 0-based field holding the source node.
    #[arg(long, default_value_t = 0)]
    pub src_col: usize,
    /// 0-based field holding the destination node.
    #[arg(long, default_value_t = 1)]
    pub dst_col: usize,
    /// 0-based field holding the timestamp; defaults to the last field.
    #[arg(long)]
    pub time_col: Option<usize>,
    /// Snapshot width in seconds.
    #[arg(long, default_value_t = 1_200_000)]
    pub time_aggregation: u64,
    /// Treat every edge as undirected.
    #[arg(long)]
    pub undirected: bool,
    /// Weight repeated edges in a snapshot by their count.
    #[arg(long)]
    pub sum_weights: bool,
}

impl InputArgs {
    pub fn load(&self) -> Result<SnapshotSequence> {
        let file = File::open(&self.input)
            .with_context(|| format!("cannot open {}", self.input.display()))?;
        let format = FormatOptions {
            src_col: self.src_col,
            dst_col: self.dst_col,
            time_col: self.time_col,
        };
        let edges = ingest::parse_edge_list(BufReader::new(file), &format)
            .with_context(|| format!("cannot parse {}", self.input.display()))?;
        let binning = BinningOptions {
            time_aggregation: self.time_aggregation,
            undirected: self.undirected,
            sum_weights: self.sum_weights,
        };
        let seq = ingest::bin_snapshots(&edges, &binning)?;
        log::info!(
            "{}: {} nodes, {} snapshots",
            self.input.display(),
            seq.node_count(),
            seq.len()
        );
        Ok(seq)
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct DiffusionArgs {
    /// Restart probability.
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    /// Time-travel probability.
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    /// Power iterations per kernel.
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    /// Sparsification threshold.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Stop a kernel column once an iteration moves it less than this (L1).
    #[arg(long)]
    pub converge_tol: Option<f64>,
    /// Symmetrize, binarize and degree-normalize each output.
    #[arg(long)]
    pub symmetric_trick: bool,
    /// Average each output with its transpose.
    #[arg(long)]
    pub average_undirected: bool,
    /// Emit the column-stochastic matrix instead of its transpose.
    #[arg(long)]
    pub no_transpose: bool,
    /// Replace every output weight with 1.
    #[arg(long)]
    pub drop_weights: bool,
}

impl DiffusionArgs {
    pub fn config(&self) -> Result<DiffusionConfig> {
        let cfg = DiffusionConfig {
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            epsilon: self.epsilon,
            converge_tol: self.converge_tol,
            transpose_output: !self.no_transpose,
            post: PostProcessConfig {
                symmetric_trick: self.symmetric_trick,
                drop_weights: self.drop_weights,
                undirected_average: self.average_undirected,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CheckArg {
    Lemma1,
    Theorem1,
    Lemma2,
    Lemma4,
    Gdc,
    Montecarlo,
}

impl From<CheckArg> for Check {
    fn from(c: CheckArg) -> Self {
        match c {
            CheckArg::Lemma1 => Check::Lemma1,
            CheckArg::Theorem1 => Check::Theorem1,
            CheckArg::Lemma2 => Check::Lemma2,
            CheckArg::Lemma4 => Check::Lemma4,
            CheckArg::Gdc => Check::Gdc,
            CheckArg::Montecarlo => Check::MonteCarlo,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Checks to run; all of them when omitted.
    #[arg(long = "check", value_enum)]
    checks: Vec<CheckArg>,
    #[command(flatten)]
    diffusion: DiffusionArgs,
    /// Verify this edge list instead of random instances.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1_200_000)]
    time_aggregation: u64,
    #[arg(long)]
    undirected: bool,
    /// Random instances to draw.
    #[arg(long, default_value_t = 5)]
    instances: usize,
    /// Nodes per random instance.
    #[arg(long, default_value_t = 30)]
    nodes: usize,
    /// Snapshots per random instance.
    #[arg(long, default_value_t = 4)]
    steps: usize,
    /// Random edges drawn per snapshot.
    #[arg(long, default_value_t = 60)]
    edges_per_step: usize,
    /// Monte-Carlo walks.
    #[arg(long, default_value_t = 1_000_000)]
    walks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the reports as JSON.
    #[arg(long)]
    json: bool,
    /// Silently halve the power iterations (negative test of the checker).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Print the statistics as JSON.
    #[arg(long)]
    json: bool,
}

/// A verification run that completed but found a failing property.
#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let checks: Vec<Check> = if args.checks.is_empty() {
        Check::ALL.to_vec()
    } else {
        args.checks.iter().map(|&c| c.into()).collect()
    };
    let opts = VerifyOptions {
        config: args.diffusion.config()?,
        instances: args.instances,
        nodes: args.nodes,
        steps: args.steps,
        edges_per_step: args.edges_per_step,
        seed: args.seed,
        walks: args.walks,
        inject_fault: args.inject_fault,
    };
    let instances = match &args.input {
        Some(path) => vec![InputArgs {
            input: path.clone(),
            src_col: 0,
            dst_col: 1,
            time_col: None,
            time_aggregation: args.time_aggregation,
            undirected: args.undirected,
            sum_weights: false,
        }
        .load()?],
        None => opts.random_instances()?,
    };
    let reports = verify::run_checks(&instances, &checks, &opts)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!("{r}");
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(VerificationFailed(failed).into());
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let seq = args.input.load()?;
    let stats = SequenceStats::of(&seq);
    if args.json {
        #[derive(Serialize)]
        struct Row<'a> {
            #[serde(flatten)]
            stats: &'a SequenceStats,
            density: f64,
        }
        let row = Row {
            stats: &stats,
            density: stats.density(),
        };
        println!("{}", serde_json::to_string_pretty(&row)?);
    } else {
        println!("n\tm\tT\tL\tn_t\tC_t");
        println!(
            "{}\t{}\t{}\t-\t{}\t{:.2}",
            stats.nodes,
            stats.edges,
            stats.steps,
            stats.mean_activated.floor() as u64,
            stats.density()
        );
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use tiara_core::Error as E;
    for cause in err.chain() {
        if cause.is::<VerificationFailed>() {
            return 1;
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidConfig(_) | E::InvalidArgument(_) | E::TooLarge { .. } => 2,
                _ => 3,
            };
        }
    }
    3
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("TIARA_THREADS") {
        let threads: usize = raw.parse().map_err(|_| {
            tiara_core::Error::InvalidConfig(format!(
                "TIARA_THREADS must be a positive integer, got `{raw}`"
            ))
        })?;
        if threads == 0 {
            return Err(tiara_core::Error::InvalidConfig(
                "TIARA_THREADS must be at least 1".into(),
            )
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Augment(args) => augment::run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Bench(args) => bench::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
