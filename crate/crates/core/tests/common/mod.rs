#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use examm::cells::CellParams;
use examm::data::{TimeSeries, TimeSeriesSet};
use examm::genome::{Edge, EdgeId, Genome, Lineage, Node, NodeId, NodeKind, RecEdgeId, RecurrentEdge};
use examm::innovation::InnovationRegistry;
use examm::ops::{self, OpContext, OperatorKind, OpsConfig};
use examm::CellKind;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn random_params(kind: CellKind, rng: &mut ChaCha8Rng) -> CellParams {
    CellParams((0..kind.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Small random genome built directly (no registry): up to `max_nodes`
/// nodes, hidden nodes of `hidden`, recurrent skips drawn from `skips`.
pub fn random_genome(rng: &mut ChaCha8Rng, hidden: CellKind, max_nodes: usize, skips: &[u32]) -> Genome {
    let n_in = rng.random_range(1..=2usize);
    let n_hidden = rng.random_range(0..=max_nodes - n_in - 1);
    let mut nodes = Vec::new();
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
    let out = NodeId(n_in as u32);
    nodes.push(Node {
        innovation: out,
        kind: NodeKind::Output,
        cell: CellKind::Simple,
        depth: 1.0,
        enabled: true,
        params: random_params(CellKind::Simple, rng),
    });
    for h in 0..n_hidden {
        nodes.push(Node {
            innovation: NodeId((n_in + 1 + h) as u32),
            kind: NodeKind::Hidden,
            cell: hidden,
            depth: rng.random_range(0.05..0.95),
            enabled: true,
            params: random_params(hidden, rng),
        });
    }
    let mut edges = vec![Edge { innovation: EdgeId(0), from: NodeId(0), to: out, weight: rng.random_range(-1.0..1.0), enabled: true }];
    for a in &nodes {
        for b in &nodes {
            if a.depth < b.depth && !(a.innovation == NodeId(0) && b.innovation == out) && rng.random_bool(0.6) {
                edges.push(Edge {
                    innovation: EdgeId(edges.len() as u32),
                    from: a.innovation,
                    to: b.innovation,
                    weight: rng.random_range(-1.0..1.0),
                    enabled: rng.random_bool(0.9),
                });
            }
        }
    }
    let mut rec_edges: Vec<RecurrentEdge> = Vec::new();
    for _ in 0..rng.random_range(1..=4) {
        let from = nodes[rng.random_range(0..nodes.len())].innovation;
        let to = nodes[rng.random_range(n_in..nodes.len())].innovation;
        let k = skips[rng.random_range(0..skips.len())];
        if rec_edges.iter().any(|e| e.from == from && e.to == to && e.time_skip == k) {
            continue;
        }
        rec_edges.push(RecurrentEdge {
            innovation: RecEdgeId(rec_edges.len() as u32),
            from,
            to,
            time_skip: k,
            weight: rng.random_range(-1.0..1.0),
            enabled: true,
        });
    }
    nodes.sort_by_key(|n| n.innovation);
    Genome {
        generation_id: 0,
        island: 0,
        fitness: f64::INFINITY,
        lineage: Lineage::default(),
        input_names: names("x", n_in),
        output_names: vec!["y".into()],
        nodes,
        edges,
        rec_edges,
        normalization: None,
    }
}

pub fn random_series(rng: &mut ChaCha8Rng, columns: &[String], len: usize) -> TimeSeries {
    let rows = (0..len).map(|_| columns.iter().map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    TimeSeries::new("random", columns.to_vec(), rows).unwrap()
}

/// Series whose columns cover a genome's inputs and output.
pub fn series_for(g: &Genome, rng: &mut ChaCha8Rng, len: usize) -> TimeSeries {
    let mut cols = g.input_names.clone();
    cols.extend(g.output_names.iter().cloned());
    random_series(rng, &cols, len)
}

pub fn set_of(series: Vec<TimeSeries>, inputs: &[&str], output: &str) -> TimeSeriesSet {
    TimeSeriesSet::new(series, inputs.iter().map(|s| s.to_string()).collect(), output.into()).unwrap()
}

pub const MUTATIONS: [OperatorKind; 11] = [
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
];

/// Applies random single operators to a seed genome, keeping children that
/// stay valid, reachable and within `max_nodes`.
pub fn evolve(
    seed: &Genome,
    steps: usize,
    max_nodes: usize,
    rng: &mut ChaCha8Rng,
    registry: &mut InnovationRegistry,
    config: &OpsConfig,
) -> Genome {
    let mut g = seed.clone();
    for _ in 0..steps {
        let kind = MUTATIONS[rng.random_range(0..MUTATIONS.len())];
        let mut ctx = OpContext { rng: &mut *rng, registry: &mut *registry, config };
        if let Some(c) = ops::apply_mutation(kind, &g, &mut ctx) {
            if c.nodes.len() <= max_nodes && c.outputs_reachable() {
                g = c;
            }
        }
    }
    g
}

/// Randomizes every trainable scalar.
pub fn jitter(g: &mut Genome, rng: &mut ChaCha8Rng) {
    let p: Vec<f64> = (0..g.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    g.set_parameters(&p);
}

/// Reachable elements by transitive closure over enabled edges between
/// enabled nodes (Floyd-Warshall), independent of the library's search.
pub struct BruteReach {
    pub nodes: BTreeSet<NodeId>,
    pub edges: BTreeSet<EdgeId>,
    pub rec_edges: BTreeSet<RecEdgeId>,
}

pub fn brute_reach(g: &Genome) -> BruteReach {
    let ids: Vec<NodeId> = g.nodes.iter().map(|n| n.innovation).collect();
    let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = ids.len();
    let on = |id: NodeId| g.nodes.iter().any(|x| x.innovation == id && x.enabled);
    let mut path = vec![vec![false; n]; n];
    for i in 0..n {
        path[i][i] = on(ids[i]);
    }
    let links = g
        .edges
        .iter()
        .map(|e| (e.from, e.to, e.enabled))
        .chain(g.rec_edges.iter().map(|e| (e.from, e.to, e.enabled)));
    for (a, b, enabled) in links {
        if enabled && on(a) && on(b) {
            path[index[&a]][index[&b]] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if path[i][k] && path[k][j] {
                    path[i][j] = true;
                }
            }
        }
    }
    let inputs: Vec<usize> = g.nodes.iter().enumerate().filter(|(_, x)| x.is_input() && x.enabled).map(|(i, _)| i).collect();
    let outputs: Vec<usize> = g.nodes.iter().enumerate().filter(|(_, x)| x.is_output() && x.enabled).map(|(i, _)| i).collect();
    let live = |i: usize| inputs.iter().any(|&s| path[s][i]) && outputs.iter().any(|&t| path[i][t]);
    let nodes: BTreeSet<NodeId> = (0..n).filter(|&i| live(i)).map(|i| ids[i]).collect();
    let edges = g
        .edges
        .iter()
        .filter(|e| e.enabled && nodes.contains(&e.from) && nodes.contains(&e.to))
        .map(|e| e.innovation)
        .collect();
    let rec_edges = g
        .rec_edges
        .iter()
        .filter(|e| e.enabled && nodes.contains(&e.from) && nodes.contains(&e.to))
        .map(|e| e.innovation)
        .collect();
    BruteReach { nodes, edges, rec_edges }
}

/// Crossover by lookup tables over the brute-force reachable sets, with the
/// recombination `r·(worse − better) + better` at a fixed `r`.
pub fn crossover_oracle(better: &Genome, worse: &Genome, r: f64) -> Genome {
    let mix = |a: f64, b: f64| r * (b - a) + a;
    let ra = brute_reach(better);
    let rb = brute_reach(worse);
    let na: BTreeMap<NodeId, &Node> = better.nodes.iter().map(|n| (n.innovation, n)).collect();
    let nb: BTreeMap<NodeId, &Node> = worse.nodes.iter().map(|n| (n.innovation, n)).collect();
    let mut nodes = Vec::new();
    let all: BTreeSet<NodeId> = na.keys().chain(nb.keys()).copied().collect();
    for id in all {
        let a = na.get(&id).filter(|_| ra.nodes.contains(&id));
        let b = nb.get(&id).filter(|_| rb.nodes.contains(&id));
        let node = match (a, b) {
            (Some(a), Some(b)) => {
                let mut n = (*a).clone();
                if a.cell == b.cell {
                    n.params = CellParams(a.params.0.iter().zip(&b.params.0).map(|(&x, &y)| mix(x, y)).collect());
                }
                n.enabled = true;
                n
            }
            (Some(x), None) | (None, Some(x)) => Node { enabled: true, ..(*x).clone() },
            (None, None) => {
                let x = na.get(&id).or(nb.get(&id)).unwrap();
                if x.is_hidden() {
                    continue;
                }
                (*x).clone()
            }
        };
        nodes.push(node);
    }

    let ea: BTreeMap<EdgeId, &Edge> = better.edges.iter().filter(|e| ra.edges.contains(&e.innovation)).map(|e| (e.innovation, e)).collect();
    let eb: BTreeMap<EdgeId, &Edge> = worse.edges.iter().filter(|e| rb.edges.contains(&e.innovation)).map(|e| (e.innovation, e)).collect();
    let edge_ids: BTreeSet<EdgeId> = ea.keys().chain(eb.keys()).copied().collect();
    let edges = edge_ids
        .into_iter()
        .map(|id| match (ea.get(&id), eb.get(&id)) {
            (Some(a), Some(b)) => Edge { weight: mix(a.weight, b.weight), enabled: true, ..(**a).clone() },
            (Some(x), None) | (None, Some(x)) => Edge { enabled: true, ..(**x).clone() },
            (None, None) => unreachable!(),
        })
        .collect();

    let qa: BTreeMap<RecEdgeId, &RecurrentEdge> = better.rec_edges.iter().filter(|e| ra.rec_edges.contains(&e.innovation)).map(|e| (e.innovation, e)).collect();
    let qb: BTreeMap<RecEdgeId, &RecurrentEdge> = worse.rec_edges.iter().filter(|e| rb.rec_edges.contains(&e.innovation)).map(|e| (e.innovation, e)).collect();
    let rec_ids: BTreeSet<RecEdgeId> = qa.keys().chain(qb.keys()).copied().collect();
    let rec_edges = rec_ids
        .into_iter()
        .map(|id| match (qa.get(&id), qb.get(&id)) {
            (Some(a), Some(b)) => RecurrentEdge { weight: mix(a.weight, b.weight), enabled: true, ..(**a).clone() },
            (Some(x), None) | (None, Some(x)) => RecurrentEdge { enabled: true, ..(**x).clone() },
            (None, None) => unreachable!(),
        })
        .collect();

    Genome {
        generation_id: better.generation_id,
        island: better.island,
        fitness: f64::INFINITY,
        lineage: Lineage { operator: None, parents: vec![better.generation_id, worse.generation_id] },
        input_names: better.input_names.clone(),
        output_names: better.output_names.clone(),
        nodes,
        edges,
        rec_edges,
        normalization: better.normalization.clone(),
    }
}
