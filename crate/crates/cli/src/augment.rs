use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use tiara_core::diffusion::Diffusion;
use tiara_core::ingest::SequenceStats;
use tiara_core::manifest::{InputDigest, StepRecord};
use tiara_core::sparse::io;
use tiara_core::{RunManifest, SparseMatrix};

use crate::{ensure_dir, DiffusionArgs, InputArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Mtx,
    Tsv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Mtx => "mtx",
            Format::Tsv => "tsv",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AugmentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub diffusion: DiffusionArgs,
    /// Directory receiving `x_0001.<ext>`, ... and `manifest.json`.
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Mtx)]
    pub format: Format,
    /// Accepted for uniformity with the other commands; augmentation draws no
    /// random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn write_matrix(path: &PathBuf, m: &SparseMatrix, format: Format) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Mtx => io::write_matrix_market(&mut w, m),
        Format::Tsv => io::write_tsv(&mut w, m),
    }
    .with_context(|| format!("cannot write {}", path.display()))?;
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn run(args: AugmentArgs) -> Result<()> {
    let cfg = args.diffusion.config()?;
    let seq = args.input.load()?;
    ensure_dir(&args.output_dir)?;
    let stats = SequenceStats::of(&seq);
    let mut manifest = RunManifest::new(
        env!("CARGO_PKG_VERSION"),
        serde_json::to_value(&args)?,
        cfg.clone(),
        InputDigest {
            nodes: stats.nodes,
            edges: stats.edges,
            steps: stats.steps,
        },
    );

    // Step t+1 is computed while step t is written; the bounded channel keeps
    // at most two finished matrices in memory.
    let (tx, rx) = mpsc::sync_channel::<(PathBuf, SparseMatrix)>(1);
    let format = args.format;
    let writer = thread::spawn(move || -> Result<()> {
        for (path, m) in rx {
            write_matrix(&path, &m, format)?;
        }
        Ok(())
    });

    let started = Instant::now();
    let mut steps = Diffusion::new(&seq, cfg)?;
    let mut send_failed = false;
    loop {
        let t0 = Instant::now();
        let Some(out) = steps.next() else { break };
        let out = out?;
        let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        let name = format!("x_{:04}.{}", out.t, format.extension());
        manifest.push(StepRecord::from_output(&out, Some(name.clone()), wall_ms));
        log::info!(
            "step {}: nnz {} in {wall_ms:.1} ms",
            out.t,
            out.output.nnz()
        );
        if tx.send((args.output_dir.join(name), out.output)).is_err() {
            send_failed = true;
            break;
        }
    }
    drop(tx);
    writer
        .join()
        .map_err(|_| anyhow!("output writer panicked"))??;
    if send_failed {
        return Err(anyhow!("output writer stopped early"));
    }
    manifest.total_wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let path = args.output_dir.join("manifest.json");
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    println!(
        "wrote {} matrices ({} nonzeros) to {}",
        manifest.steps.len(),
        manifest.total_nnz_output,
        args.output_dir.display()
    );
    Ok(())
}
