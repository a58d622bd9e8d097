use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use tiara_core::diffusion::Diffusion;
use tiara_core::ingest::SequenceStats;
use tiara_core::manifest::{InputDigest, StepRecord};
use tiara_core::synthetic::{self, SyntheticParams};
use tiara_core::{RunManifest, SnapshotSequence};

use crate::DiffusionArgs;

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub diffusion: DiffusionArgs,
    /// Benchmark this edge list instead of synthetic graphs.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1_200_000)]
    pub time_aggregation: u64,
    #[arg(long)]
    pub undirected: bool,
    /// Synthetic universe sizes; one run per value.
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub nodes: Vec<usize>,
    /// Synthetic activated nodes per step; one run per value.
    #[arg(long, value_delimiter = ',', default_value = "500")]
    pub activated: Vec<usize>,
    /// Synthetic snapshots per run.
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Synthetic mean edge entries per activated node.
    #[arg(long, default_value_t = 4.0)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the run manifest of the last run here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

struct Timing {
    label: String,
    manifest: RunManifest,
}

impl Timing {
    /// Mean step time, excluding the first step (warm start from the identity).
    fn mean_step_ms(&self) -> f64 {
        let steps = &self.manifest.steps;
        let tail = if steps.len() > 1 {
            &steps[1..]
        } else {
            &steps[..]
        };
        tail.iter().map(|s| s.wall_ms).sum::<f64>() / tail.len().max(1) as f64
    }
}

fn time_run(label: String, seq: &SnapshotSequence, args: &BenchArgs) -> Result<Timing> {
    let cfg = args.diffusion.config()?;
    let stats = SequenceStats::of(seq);
    let mut manifest = RunManifest::new(
        env!("CARGO_PKG_VERSION"),
        serde_json::to_value(args)?,
        cfg.clone(),
        InputDigest {
            nodes: stats.nodes,
            edges: stats.edges,
            steps: stats.steps,
        },
    );
    let started = Instant::now();
    let mut steps = Diffusion::new(seq, cfg)?;
    loop {
        let t0 = Instant::now();
        let Some(out) = steps.next() else { break };
        let out = out?;
        manifest.push(StepRecord::from_output(
            &out,
            None,
            t0.elapsed().as_secs_f64() * 1e3,
        ));
    }
    manifest.total_wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(Timing { label, manifest })
}

pub fn run(args: BenchArgs) -> Result<()> {
    let mut runs = Vec::new();
    if let Some(path) = &args.input {
        let seq = crate::InputArgs {
            input: path.clone(),
            src_col: 0,
            dst_col: 1,
            time_col: None,
            time_aggregation: args.time_aggregation,
            undirected: args.undirected,
            sum_weights: false,
        }
        .load()?;
        runs.push(time_run(path.display().to_string(), &seq, &args)?);
    } else {
        if args.nodes.is_empty() || args.activated.is_empty() {
            bail!(tiara_core::Error::InvalidConfig(
                "need at least one --nodes and --activated value".into()
            ));
        }
        for &nodes in &args.nodes {
            for &activated in &args.activated {
                let seq = synthetic::generate(&SyntheticParams {
                    nodes,
                    activated,
                    steps: args.steps,
                    density: args.density,
                    seed: args.seed,
                })?;
                runs.push(time_run(format!("n={nodes} n_t={activated}"), &seq, &args)?);
            }
        }
    }

    println!("run\tt\tn_t\tm_t\tnnz\twall_ms");
    for r in &runs {
        for s in &r.manifest.steps {
            println!(
                "{}\t{}\t{}\t{}\t{}\t{:.2}",
                r.label, s.t, s.activated_nodes, s.activated_edges, s.nnz_diffusion, s.wall_ms
            );
        }
    }
    println!();
    println!("run\tmean_step_ms\tratio\tpeak_nnz\ttotal_ms");
    let base = runs[0].mean_step_ms();
    for r in &runs {
        let mean = r.mean_step_ms();
        println!(
            "{}\t{:.2}\t{:.2}\t{}\t{:.1}",
            r.label,
            mean,
            mean / base,
            r.manifest.peak_nnz(),
            r.manifest.total_wall_ms
        );
    }

    if let Some(path) = &args.manifest {
        let last = &runs.last().expect("at least one run").manifest;
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, last)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}
