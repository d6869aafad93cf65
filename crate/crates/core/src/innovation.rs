//! Master-owned innovation numbering.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::genome::{EdgeId, NodeId, RecEdgeId};

/// The element whose split created a node. Splitting the same element in
/// two genomes yields the same node innovation, so the results align under
/// crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitSource {
    Edge(EdgeId),
    Recurrent(RecEdgeId),
}

/// Assigns innovation numbers. Identical structural signatures map to the
/// same number for the whole run; counters only ever grow.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InnovationRegistry {
    next_node: u32,
    next_edge: u32,
    next_rec_edge: u32,
    split_nodes: HashMap<SplitSource, NodeId>,
    edges: HashMap<(NodeId, NodeId), EdgeId>,
    rec_edges: HashMap<(NodeId, NodeId, u32), RecEdgeId>,
}

impl InnovationRegistry {
    /// Reserves node innovations `0..inputs` for input nodes and
    /// `inputs..inputs + outputs` for outputs.
    pub fn new(inputs: usize, outputs: usize) -> Self {
        InnovationRegistry {
            next_node: (inputs + outputs) as u32,
            ..Default::default()
        }
    }

    pub fn input_node(&self, column: usize) -> NodeId {
        NodeId(column as u32)
    }

    pub fn fresh_node(&mut self) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        id
    }

    /// Node innovation for splitting `source`. Falls back to a fresh number
    /// when the genome already holds the node previously issued for it (the
    /// same element split twice in one lineage).
    pub fn split_node(&mut self, source: SplitSource, in_genome: impl Fn(NodeId) -> bool) -> NodeId {
        if let Some(&id) = self.split_nodes.get(&source) {
            if !in_genome(id) {
                return id;
            }
            return self.fresh_node();
        }
        let id = self.fresh_node();
        self.split_nodes.insert(source, id);
        id
    }

    pub fn edge(&mut self, from: NodeId, to: NodeId) -> EdgeId {
        let next = &mut self.next_edge;
        *self.edges.entry((from, to)).or_insert_with(|| {
            let id = EdgeId(*next);
            *next += 1;
            id
        })
    }

    pub fn rec_edge(&mut self, from: NodeId, to: NodeId, time_skip: u32) -> RecEdgeId {
        let next = &mut self.next_rec_edge;
        *self.rec_edges.entry((from, to, time_skip)).or_insert_with(|| {
            let id = RecEdgeId(*next);
            *next += 1;
            id
        })
    }

    pub fn issued(&self) -> (u32, u32, u32) {
        (self.next_node, self.next_edge, self.next_rec_edge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signatures_are_stable() {
        let mut reg = InnovationRegistry::new(2, 1);
        let a = reg.edge(NodeId(0), NodeId(2));
        let b = reg.edge(NodeId(1), NodeId(2));
        assert_ne!(a, b);
        assert_eq!(reg.edge(NodeId(0), NodeId(2)), a);
        let r1 = reg.rec_edge(NodeId(2), NodeId(2), 1);
        let r3 = reg.rec_edge(NodeId(2), NodeId(2), 3);
        assert_ne!(r1, r3);
        assert_eq!(reg.rec_edge(NodeId(2), NodeId(2), 3), r3);
    }

    #[test]
    fn node_numbers_skip_reserved_and_never_repeat() {
        let mut reg = InnovationRegistry::new(3, 2);
        assert_eq!(reg.fresh_node(), NodeId(5));
        let s = reg.split_node(SplitSource::Edge(EdgeId(0)), |_| false);
        assert_eq!(s, NodeId(6));
        // another genome splitting the same edge gets the same node
        assert_eq!(reg.split_node(SplitSource::Edge(EdgeId(0)), |_| false), s);
        // the same genome splitting it again gets a fresh one
        let again = reg.split_node(SplitSource::Edge(EdgeId(0)), |id| id == s);
        assert_eq!(again, NodeId(7));
        assert_eq!(reg.fresh_node(), NodeId(8));
    }
}
