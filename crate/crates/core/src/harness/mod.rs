//! Experiment registry, persistence, rendering, and the command-line
//! surface.
//!
//! Every experiment produces an [`ExperimentResult`]: fixed-schema CSV rows
//! (one replica per row), a sibling summary JSON, and a seed manifest. Rows
//! are reproducible byte-for-byte from the manifest; wall-clock time lives
//! only in the summary and is exempt from that contract.

pub mod cli;
pub mod experiments;
pub mod render;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::field::replica_seed;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub base_seed: u64,
    pub replicas: u32,
    pub derivation: String,
    pub seeds: Vec<u64>,
}

impl SeedManifest {
    pub fn new(base_seed: u64, replicas: u32) -> SeedManifest {
        SeedManifest {
            base_seed,
            replicas,
            derivation: "seed[i] = mix64(base_seed ^ mix64(i + 0x5bf03635))".into(),
            seeds: (0..replicas as u64).map(|i| replica_seed(base_seed, i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub config: serde_json::Value,
    pub header: String,
    pub rows: Vec<String>,
    pub summary: serde_json::Value,
    pub seeds: SeedManifest,
    pub wall_clock_seconds: f64,
}

impl ExperimentResult {
    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 32 + self.header.len() + 2);
        out.push_str(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    /// Write `{name}.csv`, `{name}_summary.json` and `{name}_seeds.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&csv_path, self.csv())?;
        let summary_path = dir.join(format!("{}_summary.json", self.name));
        let summary = serde_json::json!({
            "experiment": self.name,
            "config": self.config,
            "summary": self.summary,
            "wall_clock_seconds": self.wall_clock_seconds,
        });
        std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
        let seeds_path = dir.join(format!("{}_seeds.json", self.name));
        std::fs::write(&seeds_path, serde_json::to_string_pretty(&self.seeds)?)?;
        Ok(vec![csv_path, summary_path, seeds_path])
    }
}
