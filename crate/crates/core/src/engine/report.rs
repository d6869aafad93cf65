use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::genome::Genome;

/// One row of the fitness log: a trained (or failed) candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub genome_id: u64,
    pub island: usize,
    pub operator: String,
    pub parent_ids: Vec<u64>,
    #[serde(with = "crate::genome::unevaluated")]
    pub fitness: f64,
    pub nodes: usize,
    pub edges: usize,
    pub rec_edges: usize,
    pub wallclock_ms: u64,
}

impl LogRecord {
    pub fn new(g: &Genome, wallclock_ms: u64) -> Self {
        let (nodes, edges, rec_edges) = g.size();
        LogRecord {
            genome_id: g.generation_id,
            island: g.island,
            operator: g.lineage.operator_name().to_string(),
            parent_ids: g.lineage.parents.clone(),
            fitness: g.fitness,
            nodes,
            edges,
            rec_edges,
            wallclock_ms,
        }
    }

    pub fn is_seed(&self) -> bool {
        self.operator == "seed"
    }
}

/// Island state right after a result was offered to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionRecord {
    pub genome_id: u64,
    pub island: usize,
    pub inserted: bool,
    /// Member fitnesses after the offer, best first.
    pub population: Vec<f64>,
}

/// Training loss of one candidate after one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub genome_id: u64,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub best: Option<Genome>,
    pub island_bests: Vec<Option<Genome>>,
    pub log: Vec<LogRecord>,
    pub epoch_losses: Vec<EpochLoss>,
    pub insertions: Vec<InsertionRecord>,
    pub seeds: usize,
    pub generated: usize,
    pub discarded: usize,
    pub failures: usize,
}

impl RunReport {
    pub fn best_fitness(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |g| g.fitness)
    }
}

/// Writes the log as CSV; parent ids are joined with `;`.
pub fn write_fitness_log(path: impl AsRef<Path>, log: &[LogRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "genome_id",
        "island",
        "operator",
        "parent_ids",
        "fitness",
        "nodes",
        "edges",
        "rec_edges",
        "wallclock_ms",
    ])?;
    for r in log {
        let parents: Vec<String> = r.parent_ids.iter().map(u64::to_string).collect();
        w.write_record([
            r.genome_id.to_string(),
            r.island.to_string(),
            r.operator.clone(),
            parents.join(";"),
            r.fitness.to_string(),
            r.nodes.to_string(),
            r.edges.to_string(),
            r.rec_edges.to_string(),
            r.wallclock_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `genome_id,epoch,loss` rows.
pub fn write_epoch_log(path: impl AsRef<Path>, losses: &[EpochLoss]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in losses {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
