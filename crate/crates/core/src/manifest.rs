//! Machine-readable record of an augmentation run.

use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffusionConfig, StepOutput};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub nodes: usize,
    pub edges: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index, matching the output file number.
    pub t: usize,
    pub activated_nodes: usize,
    pub activated_edges: usize,
    /// Stored entries of the carried diffusion matrix.
    pub nnz_diffusion: usize,
    /// Stored entries of the emitted matrix.
    pub nnz_output: usize,
    pub file: Option<String>,
    pub wall_ms: f64,
}

impl StepRecord {
    pub fn from_output(out: &StepOutput, file: Option<String>, wall_ms: f64) -> Self {
        Self {
            t: out.t,
            activated_nodes: out.activated_nodes,
            activated_edges: out.activated_edges,
            nnz_diffusion: out.diffusion.nnz(),
            nnz_output: out.output.nnz(),
            file,
            wall_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Every flag of the invocation, as given or defaulted.
    pub options: serde_json::Value,
    pub config: DiffusionConfig,
    pub input: InputDigest,
    pub steps: Vec<StepRecord>,
    pub total_wall_ms: f64,
    pub total_nnz_output: usize,
}

impl RunManifest {
    pub fn new(
        tool_version: &str,
        options: serde_json::Value,
        config: DiffusionConfig,
        input: InputDigest,
    ) -> Self {
        Self {
            tool_version: tool_version.to_owned(),
            options,
            config,
            input,
            steps: Vec::new(),
            total_wall_ms: 0.0,
            total_nnz_output: 0,
        }
    }

    pub fn push(&mut self, record: StepRecord) {
        self.total_nnz_output += record.nnz_output;
        self.steps.push(record);
    }

    pub fn peak_nnz(&self) -> usize {
        self.steps
            .iter()
            .map(|s| s.nnz_diffusion.max(s.nnz_output))
            .max()
            .unwrap_or(0)
    }
}
