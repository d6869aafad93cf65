//! Mutation, crossover and Lamarckian weight initialization.
//!
//! Every operator is a pure function of its parent(s): it returns a new
//! genome or reports that it does not apply. Only innovation numbering
//! touches shared state, through the master's [`InnovationRegistry`].

mod crossover;
mod mutation;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cells::{CellKind, CellParams};
use crate::error::{Error, Result};
use crate::genome::{Genome, Lineage, Node, NodeId, NodeKind, DEFAULT_MAX_TIME_SKIP};
use crate::innovation::InnovationRegistry;

pub use crossover::{crossover, crossover_weight, crossover_with};
pub use mutation::{
    add_edge, add_node, add_recurrent_edge, clone_genome, disable_edge, disable_node, enable_edge, enable_node,
    merge_node, split_edge, split_node,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    DisableEdge,
    EnableEdge,
    SplitEdge,
    AddEdge,
    AddRecurrentEdge,
    DisableNode,
    EnableNode,
    AddNode,
    SplitNode,
    MergeNode,
    Clone,
    CrossoverIntra,
    CrossoverInter,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 13] = [
        OperatorKind::DisableEdge,
        OperatorKind::EnableEdge,
        OperatorKind::SplitEdge,
        OperatorKind::AddEdge,
        OperatorKind::AddRecurrentEdge,
        OperatorKind::DisableNode,
        OperatorKind::EnableNode,
        OperatorKind::AddNode,
        OperatorKind::SplitNode,
        OperatorKind::MergeNode,
        OperatorKind::Clone,
        OperatorKind::CrossoverIntra,
        OperatorKind::CrossoverInter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::DisableEdge => "disable_edge",
            OperatorKind::EnableEdge => "enable_edge",
            OperatorKind::SplitEdge => "split_edge",
            OperatorKind::AddEdge => "add_edge",
            OperatorKind::AddRecurrentEdge => "add_recurrent_edge",
            OperatorKind::DisableNode => "disable_node",
            OperatorKind::EnableNode => "enable_node",
            OperatorKind::AddNode => "add_node",
            OperatorKind::SplitNode => "split_node",
            OperatorKind::MergeNode => "merge_node",
            OperatorKind::Clone => "clone",
            OperatorKind::CrossoverIntra => "crossover_intra",
            OperatorKind::CrossoverInter => "crossover_inter",
        }
    }

    pub fn is_mutation(self) -> bool {
        !matches!(self, OperatorKind::CrossoverIntra | OperatorKind::CrossoverInter)
    }

    pub(crate) fn to_code(self) -> u8 {
        OperatorKind::ALL.iter().position(|&k| k == self).unwrap() as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        OperatorKind::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown operator {s:?}")))
    }
}

/// Run-level settings the structural operators need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpsConfig {
    /// Cell kinds a new node may take, drawn uniformly.
    pub cell_kinds: Vec<CellKind>,
    pub max_time_skip: u32,
    /// Added to a new LSTM cell's forget-gate bias.
    pub lstm_forget_bias: f64,
    /// Relative weights of the mutation operators; zero or missing disables
    /// an operator.
    pub mutation_weights: BTreeMap<OperatorKind, f64>,
    pub mutations_per_child: usize,
}

impl Default for OpsConfig {
    fn default() -> Self {
        OpsConfig {
            cell_kinds: vec![CellKind::Simple],
            max_time_skip: DEFAULT_MAX_TIME_SKIP,
            lstm_forget_bias: 1.0,
            mutation_weights: default_mutation_weights(),
            mutations_per_child: 1,
        }
    }
}

/// Every mutation except `split_edge`, each with weight 0.1.
pub fn default_mutation_weights() -> BTreeMap<OperatorKind, f64> {
    OperatorKind::ALL
        .into_iter()
        .filter(|k| k.is_mutation() && *k != OperatorKind::SplitEdge)
        .map(|k| (k, 0.1))
        .collect()
}

impl OpsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_kinds.is_empty() {
            return Err(Error::Config("at least one cell kind must be allowed".into()));
        }
        if self.max_time_skip < 1 {
            return Err(Error::Config("max time skip must be at least 1".into()));
        }
        if self.mutations_per_child < 1 {
            return Err(Error::Config("mutations per child must be at least 1".into()));
        }
        for (k, &w) in &self.mutation_weights {
            if !k.is_mutation() {
                return Err(Error::Config(format!("{k} is not a mutation operator")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("weight of {k} must be a finite non-negative number")));
            }
        }
        if self.mutation_weights.values().sum::<f64>() <= 0.0 {
            return Err(Error::Config("no mutation operator has positive weight".into()));
        }
        Ok(())
    }

    /// Enabled operators with weights normalized to sum to one.
    pub fn mutation_probabilities(&self) -> Vec<(OperatorKind, f64)> {
        let total: f64 = self.mutation_weights.values().filter(|w| **w > 0.0).sum();
        self.mutation_weights
            .iter()
            .filter(|(_, w)| **w > 0.0)
            .map(|(&k, &w)| (k, w / total))
            .collect()
    }
}

/// Mutable state an operator may draw on.
pub struct OpContext<'a> {
    pub rng: &'a mut dyn RngCore,
    pub registry: &'a mut InnovationRegistry,
    pub config: &'a OpsConfig,
}

/// Fraction of enabled edges that are recurrent; zero when there are none.
pub fn recurrent_probability(g: &Genome) -> f64 {
    let ff = g.enabled_edge_count();
    let rec = g.enabled_rec_edge_count();
    if ff + rec == 0 {
        0.0
    } else {
        rec as f64 / (ff + rec) as f64
    }
}

/// Parent statistics used to initialize new structure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightInitStats {
    pub mu: f64,
    pub sigma2: f64,
    pub ff_in_mean: f64,
    pub ff_in_var: f64,
    pub ff_out_mean: f64,
    pub ff_out_var: f64,
    pub rec_mean: f64,
    pub rec_var: f64,
}

fn mean_var(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

impl WeightInitStats {
    /// Computed over enabled elements: edge and recurrent-edge weights plus
    /// cell parameters for the weight moments; per-node enabled in/out
    /// feed-forward degrees and recurrent in-degree for the count moments.
    pub fn of(g: &Genome) -> Self {
        let weights = g
            .edges
            .iter()
            .filter(|e| e.enabled)
            .map(|e| e.weight)
            .chain(g.rec_edges.iter().filter(|e| e.enabled).map(|e| e.weight))
            .chain(g.nodes.iter().filter(|n| n.enabled).flat_map(|n| n.params.as_slice().iter().copied()));
        let (mu, sigma2) = mean_var(weights);

        let enabled = |id: NodeId| g.node(id).is_some_and(|n| n.enabled);
        let degree = |n: &Node, incoming: bool| {
            g.edges
                .iter()
                .filter(|e| e.enabled && if incoming { e.to == n.innovation } else { e.from == n.innovation })
                .filter(|e| enabled(if incoming { e.from } else { e.to }))
                .count() as f64
        };
        let live = || g.nodes.iter().filter(|n| n.enabled);
        let (ff_in_mean, ff_in_var) = mean_var(live().filter(|n| !n.is_input()).map(|n| degree(n, true)));
        let (ff_out_mean, ff_out_var) = mean_var(live().filter(|n| !n.is_output()).map(|n| degree(n, false)));
        let (rec_mean, rec_var) = mean_var(live().filter(|n| !n.is_input()).map(|n| {
            g.rec_edges.iter().filter(|e| e.enabled && e.to == n.innovation).count() as f64
        }));
        WeightInitStats { mu, sigma2, ff_in_mean, ff_in_var, ff_out_mean, ff_out_var, rec_mean, rec_var }
    }
}

/// Weight for a new node or edge: Normal(μ, σ²) of the parent's weights.
pub fn lamarckian_new_weight(stats: &WeightInitStats, rng: &mut (impl Rng + ?Sized)) -> f64 {
    if stats.sigma2 <= 0.0 {
        return stats.mu;
    }
    Normal::new(stats.mu, stats.sigma2.sqrt()).map_or(stats.mu, |d| d.sample(rng))
}

/// Weight for a genome built during population initialization.
pub fn seed_weight(rng: &mut (impl Rng + ?Sized)) -> f64 {
    rng.random_range(-0.5..=0.5)
}

/// Rounds a normal draw to an integer count no smaller than `min`.
pub(crate) fn sample_count(mean: f64, var: f64, min: usize, rng: &mut (impl Rng + ?Sized)) -> usize {
    let x = if var > 0.0 {
        Normal::new(mean, var.sqrt()).map_or(mean, |d| d.sample(rng))
    } else {
        mean
    };
    (x.round().max(0.0) as usize).max(min)
}

/// Minimal genome: every input wired straight to every output, weights and
/// biases drawn uniformly from [-0.5, 0.5].
pub fn seed_genome(
    input_names: &[String],
    output_names: &[String],
    registry: &mut InnovationRegistry,
    rng: &mut (impl Rng + ?Sized),
) -> Genome {
    let n_in = input_names.len();
    let mut nodes = Vec::with_capacity(n_in + output_names.len());
    for i in 0..n_in {
        nodes.push(Node {
            innovation: NodeId(i as u32),
            kind: NodeKind::Input,
            cell: CellKind::Simple,
            depth: 0.0,
            enabled: true,
            params: CellParams(Vec::new()),
        });
    }
    for o in 0..output_names.len() {
        nodes.push(Node {
            innovation: NodeId((n_in + o) as u32),
            kind: NodeKind::Output,
            cell: CellKind::Simple,
            depth: 1.0,
            enabled: true,
            params: CellParams(vec![seed_weight(rng)]),
        });
    }
    let mut g = Genome {
        generation_id: 0,
        island: 0,
        fitness: f64::INFINITY,
        lineage: Lineage::default(),
        input_names: input_names.to_vec(),
        output_names: output_names.to_vec(),
        nodes,
        edges: Vec::new(),
        rec_edges: Vec::new(),
        normalization: None,
    };
    for o in 0..output_names.len() {
        for i in 0..n_in {
            let (from, to) = (NodeId(i as u32), NodeId((n_in + o) as u32));
            let innovation = registry.edge(from, to);
            g.insert_edge(crate::genome::Edge { innovation, from, to, weight: seed_weight(rng), enabled: true });
        }
    }
    g
}

/// Result of a mutation batch.
#[derive(Debug, Clone, PartialEq)]
pub enum MutationOutcome {
    Child { genome: Genome, applied: Vec<OperatorKind> },
    /// Some output became unreachable; the child must not be trained.
    Discarded { genome: Genome, applied: Vec<OperatorKind> },
}

const RESAMPLE_ATTEMPTS: usize = 20;

/// Applies one operator by kind. `None` means its precondition failed.
pub fn apply_mutation(kind: OperatorKind, g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    match kind {
        OperatorKind::DisableEdge => disable_edge(g, ctx.rng),
        OperatorKind::EnableEdge => enable_edge(g, ctx.rng),
        OperatorKind::SplitEdge => split_edge(g, ctx),
        OperatorKind::AddEdge => add_edge(g, ctx),
        OperatorKind::AddRecurrentEdge => add_recurrent_edge(g, ctx),
        OperatorKind::DisableNode => disable_node(g, ctx.rng),
        OperatorKind::EnableNode => enable_node(g, ctx.rng),
        OperatorKind::AddNode => add_node(g, ctx),
        OperatorKind::SplitNode => split_node(g, ctx),
        OperatorKind::MergeNode => merge_node(g, ctx),
        OperatorKind::Clone => Some(clone_genome(g)),
        OperatorKind::CrossoverIntra | OperatorKind::CrossoverInter => None,
    }
}

/// Applies `mutations_per_child` operators drawn from the configured
/// weights. An inapplicable draw is redrawn among the remaining operators
/// (renormalized) up to 20 times before falling back to `clone`. Output
/// reachability is checked once, after the whole batch.
pub fn mutate(parent: &Genome, ctx: &mut OpContext<'_>) -> MutationOutcome {
    let mut child = clone_genome(parent);
    let mut applied = Vec::with_capacity(ctx.config.mutations_per_child);
    let probs = ctx.config.mutation_probabilities();
    for _ in 0..ctx.config.mutations_per_child {
        let mut pool = probs.clone();
        let mut done = None;
        for _ in 0..RESAMPLE_ATTEMPTS {
            let Some(idx) = pick_weighted(&pool, ctx.rng) else { break };
            let kind = pool[idx].0;
            if let Some(next) = apply_mutation(kind, &child, ctx) {
                done = Some((kind, next));
                break;
            }
            pool.remove(idx);
        }
        let (kind, next) = done.unwrap_or_else(|| (OperatorKind::Clone, clone_genome(&child)));
        applied.push(kind);
        child = next;
    }
    child.lineage = Lineage { operator: applied.first().copied(), parents: vec![parent.generation_id] };
    if child.outputs_reachable() {
        MutationOutcome::Child { genome: child, applied }
    } else {
        MutationOutcome::Discarded { genome: child, applied }
    }
}

fn pick_weighted(pool: &[(OperatorKind, f64)], rng: &mut dyn RngCore) -> Option<usize> {
    let total: f64 = pool.iter().map(|p| p.1).sum();
    if pool.is_empty() || total <= 0.0 {
        return None;
    }
    let mut x = rng.random_range(0.0..total);
    for (i, (_, w)) in pool.iter().enumerate() {
        if x < *w {
            return Some(i);
        }
        x -= w;
    }
    Some(pool.len() - 1)
}
