//! Genome graph: typed nodes, feed-forward edges and time-skip recurrent
//! edges, each carrying an innovation number.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cells::{CellKind, CellParams};
use crate::data::Normalization;
use crate::ops::OperatorKind;

/// Default upper bound on recurrent time skips.
pub const DEFAULT_MAX_TIME_SKIP: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecEdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub innovation: NodeId,
    pub kind: NodeKind,
    pub cell: CellKind,
    pub depth: f64,
    pub enabled: bool,
    /// Empty for input nodes, which pass their column value through.
    pub params: CellParams,
}

impl Node {
    pub fn is_input(&self) -> bool {
        self.kind == NodeKind::Input
    }

    pub fn is_output(&self) -> bool {
        self.kind == NodeKind::Output
    }

    pub fn is_hidden(&self) -> bool {
        self.kind == NodeKind::Hidden
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub innovation: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentEdge {
    pub innovation: RecEdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub time_skip: u32,
    pub weight: f64,
    pub enabled: bool,
}

/// How a genome came to be. `operator` is `None` for seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub operator: Option<OperatorKind>,
    pub parents: Vec<u64>,
}

impl Lineage {
    pub fn operator_name(&self) -> &'static str {
        self.operator.map_or("seed", OperatorKind::name)
    }
}

/// One evolvable recurrent network. Element lists are kept sorted by
/// innovation number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub generation_id: u64,
    pub island: usize,
    /// Lower is better; `+inf` until evaluated.
    #[serde(with = "unevaluated")]
    pub fitness: f64,
    pub lineage: Lineage,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub rec_edges: Vec<RecurrentEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

/// JSON has no infinity: non-finite fitness is written as `null` and read
/// back as `+inf`.
pub(crate) mod unevaluated {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Elements lying on an enabled path from some input to some output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reachable {
    pub nodes: BTreeSet<NodeId>,
    pub edges: BTreeSet<EdgeId>,
    pub rec_edges: BTreeSet<RecEdgeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingEndpoint { what: &'static str, innovation: u32, node: NodeId },
    DuplicateInnovation { what: &'static str, innovation: u32 },
    Unsorted { what: &'static str },
    DepthRange { node: NodeId, depth: f64 },
    FeedForwardOrder { edge: EdgeId, from_depth: f64, to_depth: f64 },
    DuplicateEdge { from: NodeId, to: NodeId },
    DuplicateRecurrentEdge { from: NodeId, to: NodeId, time_skip: u32 },
    TimeSkipRange { edge: RecEdgeId, time_skip: u32 },
    RecurrentIntoInput { edge: RecEdgeId },
    OutputDisabled { node: NodeId },
    OutputUnreachable { node: NodeId },
    ParamCount { node: NodeId, expected: usize, found: usize },
    NonFinite { what: &'static str, innovation: u32 },
    InputCount { expected: usize, found: usize },
    OutputCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DanglingEndpoint { what, innovation, node } => {
                write!(f, "dangling endpoint: {what} {innovation} references missing node {node}")
            }
            DuplicateInnovation { what, innovation } => {
                write!(f, "duplicate innovation: {what} {innovation}")
            }
            Unsorted { what } => write!(f, "{what} not sorted by innovation"),
            DepthRange { node, depth } => write!(f, "depth range: {node} at {depth}"),
            FeedForwardOrder { edge, from_depth, to_depth } => write!(
                f,
                "feed-forward depth order: edge {} goes from {from_depth} to {to_depth}",
                edge.0
            ),
            DuplicateEdge { from, to } => write!(f, "duplicate edge {from} -> {to}"),
            DuplicateRecurrentEdge { from, to, time_skip } => {
                write!(f, "duplicate recurrent edge {from} -> {to} (k={time_skip})")
            }
            TimeSkipRange { edge, time_skip } => {
                write!(f, "time skip out of range: recurrent edge {} has k={time_skip}", edge.0)
            }
            RecurrentIntoInput { edge } => {
                write!(f, "recurrent edge {} targets an input node", edge.0)
            }
            OutputDisabled { node } => write!(f, "output {node} disabled"),
            OutputUnreachable { node } => write!(f, "output {node} unreachable"),
            ParamCount { node, expected, found } => {
                write!(f, "{node} has {found} cell parameters, expected {expected}")
            }
            NonFinite { what, innovation } => write!(f, "non-finite value on {what} {innovation}"),
            InputCount { expected, found } => {
                write!(f, "{found} input nodes for {expected} input names")
            }
            OutputCount { expected, found } => {
                write!(f, "{found} output nodes for {expected} output names")
            }
        }
    }
}

impl Genome {
    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes
            .binary_search_by_key(&id, |n| n.innovation)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        match self.nodes.binary_search_by_key(&id, |n| n.innovation) {
            Ok(i) => Some(&mut self.nodes[i]),
            Err(_) => None,
        }
    }

    pub fn has_node(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn depth(&self, id: NodeId) -> f64 {
        self.node(id).map_or(f64::NAN, |n| n.depth)
    }

    pub fn input_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_input())
    }

    pub fn output_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_output())
    }

    pub fn insert_node(&mut self, node: Node) {
        let at = self.nodes.partition_point(|n| n.innovation < node.innovation);
        self.nodes.insert(at, node);
    }

    pub fn insert_edge(&mut self, edge: Edge) {
        let at = self.edges.partition_point(|e| e.innovation < edge.innovation);
        self.edges.insert(at, edge);
    }

    pub fn insert_rec_edge(&mut self, edge: RecurrentEdge) {
        let at = self.rec_edges.partition_point(|e| e.innovation < edge.innovation);
        self.rec_edges.insert(at, edge);
    }

    pub fn has_edge_between(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn has_rec_edge(&self, from: NodeId, to: NodeId, time_skip: u32) -> bool {
        self.rec_edges
            .iter()
            .any(|e| e.from == from && e.to == to && e.time_skip == time_skip)
    }

    pub fn enabled_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.enabled).count()
    }

    pub fn enabled_rec_edge_count(&self) -> usize {
        self.rec_edges.iter().filter(|e| e.enabled).count()
    }

    pub fn enabled_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.enabled).count()
    }

    pub fn max_node_innovation(&self) -> Option<NodeId> {
        self.nodes.last().map(|n| n.innovation)
    }

    /// Number of trainable scalars: every edge weight, every recurrent edge
    /// weight and every cell parameter, enabled or not.
    pub fn parameter_count(&self) -> usize {
        self.edges.len()
            + self.rec_edges.len()
            + self.nodes.iter().map(|n| n.params.len()).sum::<usize>()
    }

    /// Flattens all trainable scalars in canonical order: edges, recurrent
    /// edges, then node parameters, each list in innovation order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        out.extend(self.edges.iter().map(|e| e.weight));
        out.extend(self.rec_edges.iter().map(|e| e.weight));
        for n in &self.nodes {
            out.extend_from_slice(n.params.as_slice());
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.parameter_count(), "parameter vector length");
        let mut it = values.iter().copied();
        for e in &mut self.edges {
            e.weight = it.next().unwrap();
        }
        for e in &mut self.rec_edges {
            e.weight = it.next().unwrap();
        }
        for n in &mut self.nodes {
            for p in n.params.as_mut_slice() {
                *p = it.next().unwrap();
            }
        }
    }

    /// Elements on an enabled path from an input and on an enabled path to an
    /// output. Recurrent edges count as path steps in both sweeps.
    pub fn reachable_set(&self) -> Reachable {
        let index = |id: NodeId| self.nodes.binary_search_by_key(&id, |n| n.innovation).ok();
        let n = self.nodes.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        let endpoints = self
            .edges
            .iter()
            .filter(|e| e.enabled)
            .map(|e| (e.from, e.to))
            .chain(self.rec_edges.iter().filter(|e| e.enabled).map(|e| (e.from, e.to)));
        for (from, to) in endpoints {
            if let (Some(a), Some(b)) = (index(from), index(to)) {
                if self.nodes[a].enabled && self.nodes[b].enabled {
                    succ[a].push(b);
                    pred[b].push(a);
                }
            }
        }

        let sweep = |starts: Vec<usize>, adj: &[Vec<usize>]| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::new();
            for s in starts {
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen
        };
        let starts = |pick: fn(&Node) -> bool| {
            self.nodes
                .iter()
                .enumerate()
                .filter(|(_, nd)| nd.enabled && pick(nd))
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        let fwd = sweep(starts(Node::is_input), &succ);
        let bwd = sweep(starts(Node::is_output), &pred);

        let mut out = Reachable::default();
        for (i, nd) in self.nodes.iter().enumerate() {
            if fwd[i] && bwd[i] {
                out.nodes.insert(nd.innovation);
            }
        }
        let on_path = |from: NodeId, to: NodeId| match (index(from), index(to)) {
            (Some(a), Some(b)) => {
                self.nodes[a].enabled && self.nodes[b].enabled && fwd[a] && bwd[b]
            }
            _ => false,
        };
        for e in self.edges.iter().filter(|e| e.enabled) {
            if on_path(e.from, e.to) {
                out.edges.insert(e.innovation);
            }
        }
        for e in self.rec_edges.iter().filter(|e| e.enabled) {
            if on_path(e.from, e.to) {
                out.rec_edges.insert(e.innovation);
            }
        }
        out
    }

    pub fn outputs_reachable(&self) -> bool {
        let r = self.reachable_set();
        self.output_nodes().all(|o| r.nodes.contains(&o.innovation))
    }

    /// Checks every structural invariant. Uses [`DEFAULT_MAX_TIME_SKIP`] as
    /// the time-skip bound.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        self.validate_with(DEFAULT_MAX_TIME_SKIP)
    }

    pub fn validate_with(&self, max_time_skip: u32) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let sorted = |ids: &mut dyn Iterator<Item = u32>, what: &'static str, v: &mut Vec<Violation>| {
            let ids: Vec<u32> = ids.collect();
            for w in ids.windows(2) {
                if w[0] == w[1] {
                    v.push(Violation::DuplicateInnovation { what, innovation: w[0] });
                } else if w[0] > w[1] {
                    v.push(Violation::Unsorted { what });
                    break;
                }
            }
        };
        sorted(&mut self.nodes.iter().map(|n| n.innovation.0), "node", &mut v);
        sorted(&mut self.edges.iter().map(|e| e.innovation.0), "edge", &mut v);
        sorted(&mut self.rec_edges.iter().map(|e| e.innovation.0), "recurrent edge", &mut v);
        if v.iter().any(|x| matches!(x, Violation::Unsorted { .. })) {
            // lookups below rely on sorted lists
            return Err(v);
        }

        let inputs = self.input_nodes().count();
        if inputs != self.input_names.len() {
            v.push(Violation::InputCount { expected: self.input_names.len(), found: inputs });
        }
        let outputs = self.output_nodes().count();
        if outputs != self.output_names.len() {
            v.push(Violation::OutputCount { expected: self.output_names.len(), found: outputs });
        }

        for n in &self.nodes {
            let ok = match n.kind {
                NodeKind::Input => n.depth == 0.0,
                NodeKind::Output => n.depth == 1.0,
                NodeKind::Hidden => n.depth > 0.0 && n.depth < 1.0,
            };
            if !ok {
                v.push(Violation::DepthRange { node: n.innovation, depth: n.depth });
            }
            let expected = if n.is_input() { 0 } else { n.cell.param_count() };
            if n.params.len() != expected {
                v.push(Violation::ParamCount { node: n.innovation, expected, found: n.params.len() });
            }
            if n.params.as_slice().iter().any(|p| !p.is_finite()) {
                v.push(Violation::NonFinite { what: "node", innovation: n.innovation.0 });
            }
            if n.is_output() && !n.enabled {
                v.push(Violation::OutputDisabled { node: n.innovation });
            }
        }

        let mut pairs = BTreeSet::new();
        for e in &self.edges {
            for end in [e.from, e.to] {
                if !self.has_node(end) {
                    v.push(Violation::DanglingEndpoint { what: "edge", innovation: e.innovation.0, node: end });
                }
            }
            let (df, dt) = (self.depth(e.from), self.depth(e.to));
            if !(df < dt) && self.has_node(e.from) && self.has_node(e.to) {
                v.push(Violation::FeedForwardOrder { edge: e.innovation, from_depth: df, to_depth: dt });
            }
            if !pairs.insert((e.from, e.to)) {
                v.push(Violation::DuplicateEdge { from: e.from, to: e.to });
            }
            if !e.weight.is_finite() {
                v.push(Violation::NonFinite { what: "edge", innovation: e.innovation.0 });
            }
        }

        let mut triples = BTreeSet::new();
        for e in &self.rec_edges {
            for end in [e.from, e.to] {
                if !self.has_node(end) {
                    v.push(Violation::DanglingEndpoint {
                        what: "recurrent edge",
                        innovation: e.innovation.0,
                        node: end,
                    });
                }
            }
            if e.time_skip < 1 || e.time_skip > max_time_skip {
                v.push(Violation::TimeSkipRange { edge: e.innovation, time_skip: e.time_skip });
            }
            if self.node(e.to).is_some_and(Node::is_input) {
                v.push(Violation::RecurrentIntoInput { edge: e.innovation });
            }
            if !triples.insert((e.from, e.to, e.time_skip)) {
                v.push(Violation::DuplicateRecurrentEdge { from: e.from, to: e.to, time_skip: e.time_skip });
            }
            if !e.weight.is_finite() {
                v.push(Violation::NonFinite { what: "recurrent edge", innovation: e.innovation.0 });
            }
        }

        if v.iter().all(|x| !matches!(x, Violation::DanglingEndpoint { .. })) {
            let r = self.reachable_set();
            for o in self.output_nodes() {
                if !r.nodes.contains(&o.innovation) {
                    v.push(Violation::OutputUnreachable { node: o.innovation });
                }
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Counts of enabled (nodes, edges, recurrent edges).
    pub fn size(&self) -> (usize, usize, usize) {
        (self.enabled_node_count(), self.enabled_edge_count(), self.enabled_rec_edge_count())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn node(id: u32, kind: NodeKind, depth: f64) -> Node {
        let cell = CellKind::Simple;
        let params = match kind {
            NodeKind::Input => CellParams(Vec::new()),
            _ => CellParams::zeros(cell),
        };
        Node { innovation: NodeId(id), kind, cell, depth, enabled: true, params }
    }

    pub fn edge(id: u32, from: u32, to: u32, weight: f64) -> Edge {
        Edge { innovation: EdgeId(id), from: NodeId(from), to: NodeId(to), weight, enabled: true }
    }

    pub fn rec(id: u32, from: u32, to: u32, k: u32, weight: f64) -> RecurrentEdge {
        RecurrentEdge {
            innovation: RecEdgeId(id),
            from: NodeId(from),
            to: NodeId(to),
            time_skip: k,
            weight,
            enabled: true,
        }
    }

    pub fn genome(nodes: Vec<Node>, edges: Vec<Edge>, rec_edges: Vec<RecurrentEdge>) -> Genome {
        let input_names = nodes.iter().filter(|n| n.is_input()).map(|n| format!("in{}", n.innovation.0)).collect();
        let output_names = nodes.iter().filter(|n| n.is_output()).map(|n| format!("out{}", n.innovation.0)).collect();
        Genome {
            generation_id: 0,
            island: 0,
            fitness: f64::INFINITY,
            lineage: Lineage::default(),
            input_names,
            output_names,
            nodes,
            edges,
            rec_edges,
            normalization: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn ids<T: Copy + Ord>(xs: impl IntoIterator<Item = T>) -> BTreeSet<T> {
        xs.into_iter().collect()
    }

    #[test]
    fn single_edge_is_reachable() {
        let g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)],
            vec![edge(0, 0, 1, 0.5)],
            vec![],
        );
        let r = g.reachable_set();
        assert_eq!(r.nodes, ids([NodeId(0), NodeId(1)]));
        assert_eq!(r.edges, ids([EdgeId(0)]));
        assert!(g.validate().is_ok());
    }

    #[test]
    fn dead_end_hidden_is_not_reachable() {
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 1, 0.5), edge(1, 0, 2, 1.0), edge(2, 2, 1, 1.0)],
            vec![],
        );
        g.edges[2].enabled = false;
        let r = g.reachable_set();
        assert!(!r.nodes.contains(&NodeId(2)));
        assert!(!r.edges.contains(&EdgeId(1)));
    }

    #[test]
    fn recurrent_edge_on_path_is_reachable() {
        // input -> h -> output, plus output ~> h
        let g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 2, 1.0), edge(1, 2, 1, 1.0)],
            vec![rec(0, 1, 2, 3, 0.2)],
        );
        let r = g.reachable_set();
        assert_eq!(r.nodes.len(), 3);
        assert_eq!(r.edges.len(), 2);
        assert_eq!(r.rec_edges, ids([RecEdgeId(0)]));
    }

    #[test]
    fn node_fed_only_by_recurrence_is_reachable() {
        // h has no feed-forward input; output feeds it through time
        let g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 1, 1.0), edge(1, 2, 1, 1.0)],
            vec![rec(0, 1, 2, 1, 0.2)],
        );
        assert!(g.reachable_set().nodes.contains(&NodeId(2)));
    }

    #[test]
    fn validate_reports_depth_order() {
        let g = genome(
            vec![
                node(0, NodeKind::Input, 0.0),
                node(1, NodeKind::Output, 1.0),
                node(2, NodeKind::Hidden, 0.3),
                node(3, NodeKind::Hidden, 0.7),
            ],
            vec![edge(0, 0, 1, 1.0), edge(1, 3, 2, 1.0)],
            vec![],
        );
        let errs = g.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.to_string().contains("feed-forward depth order")));
    }

    #[test]
    fn validate_reports_duplicate_recurrent_edge() {
        let g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)],
            vec![edge(0, 0, 1, 1.0)],
            vec![rec(0, 1, 1, 2, 0.1), rec(1, 1, 1, 2, 0.3)],
        );
        let errs = g.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.to_string().contains("duplicate recurrent edge")));
    }

    #[test]
    fn validate_reports_unreachable_output_and_bad_skip() {
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)],
            vec![edge(0, 0, 1, 1.0)],
            vec![rec(0, 0, 1, 11, 0.1)],
        );
        g.edges[0].enabled = false;
        g.rec_edges[0].enabled = false;
        let errs = g.validate().unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, Violation::OutputUnreachable { .. })));
        assert!(errs.iter().any(|e| matches!(e, Violation::TimeSkipRange { time_skip: 11, .. })));
    }

    #[test]
    fn parameters_round_trip() {
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)],
            vec![edge(0, 0, 1, 0.25)],
            vec![rec(0, 1, 1, 1, -0.5)],
        );
        assert_eq!(g.parameter_count(), 3);
        assert_eq!(g.parameters(), vec![0.25, -0.5, 0.0]);
        g.set_parameters(&[1.0, 2.0, 3.0]);
        assert_eq!(g.edges[0].weight, 1.0);
        assert_eq!(g.rec_edges[0].weight, 2.0);
        assert_eq!(g.nodes[1].params.0, vec![3.0]);
    }
}
