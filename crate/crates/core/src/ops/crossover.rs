use std::collections::BTreeSet;

use rand::Rng;

use crate::genome::{Genome, Lineage};

/// w = r·(w_worse − w_better) + w_better with r ~ U[−0.5, 1.5].
pub fn crossover_weight(w_better: f64, w_worse: f64, rng: &mut (impl Rng + ?Sized)) -> f64 {
    let r: f64 = rng.random_range(-0.5..=1.5);
    r * (w_worse - w_better) + w_better
}

/// Crossover with weights recombined by [`crossover_weight`]. `better` must
/// be the fitter parent.
pub fn crossover(better: &Genome, worse: &Genome, rng: &mut (impl Rng + ?Sized)) -> Genome {
    crossover_with(better, worse, |a, b| crossover_weight(a, b, rng))
}

/// Child holds every element reachable in either parent plus all input and
/// output nodes. Elements reachable in both get `recombine(better, worse)`
/// applied per scalar (node parameters only when the cell kinds agree);
/// elements reachable in one parent are copied from it.
pub fn crossover_with(better: &Genome, worse: &Genome, mut recombine: impl FnMut(f64, f64) -> f64) -> Genome {
    let ra = better.reachable_set();
    let rb = worse.reachable_set();
    let mut child = better.clone();
    child.fitness = f64::INFINITY;
    child.lineage = Lineage {
        operator: None,
        parents: vec![better.generation_id, worse.generation_id],
    };

    let node_ids: BTreeSet<_> = better.nodes.iter().chain(&worse.nodes).map(|n| n.innovation).collect();
    child.nodes = Vec::with_capacity(node_ids.len());
    for id in node_ids {
        let a = better.node(id).filter(|_| ra.nodes.contains(&id));
        let b = worse.node(id).filter(|_| rb.nodes.contains(&id));
        let node = match (a, b) {
            (Some(a), Some(b)) => {
                let mut n = a.clone();
                if a.cell == b.cell {
                    for (w, &v) in n.params.as_mut_slice().iter_mut().zip(b.params.as_slice()) {
                        *w = recombine(*w, v);
                    }
                }
                n.enabled = true;
                n
            }
            (Some(n), None) | (None, Some(n)) => {
                let mut n = n.clone();
                n.enabled = true;
                n
            }
            (None, None) => match better.node(id).or_else(|| worse.node(id)) {
                Some(n) if !n.is_hidden() => n.clone(),
                _ => continue,
            },
        };
        child.nodes.push(node);
    }

    let edge_ids: BTreeSet<_> = better.edges.iter().chain(&worse.edges).map(|e| e.innovation).collect();
    child.edges = edge_ids
        .into_iter()
        .filter_map(|id| {
            let a = better.edges.iter().find(|e| e.innovation == id).filter(|_| ra.edges.contains(&id));
            let b = worse.edges.iter().find(|e| e.innovation == id).filter(|_| rb.edges.contains(&id));
            let mut e = match (a, b) {
                (Some(a), Some(b)) => {
                    let mut e = a.clone();
                    e.weight = recombine(a.weight, b.weight);
                    e
                }
                (Some(e), None) | (None, Some(e)) => e.clone(),
                (None, None) => return None,
            };
            e.enabled = true;
            Some(e)
        })
        .collect();

    let rec_ids: BTreeSet<_> = better.rec_edges.iter().chain(&worse.rec_edges).map(|e| e.innovation).collect();
    child.rec_edges = rec_ids
        .into_iter()
        .filter_map(|id| {
            let a = better.rec_edges.iter().find(|e| e.innovation == id).filter(|_| ra.rec_edges.contains(&id));
            let b = worse.rec_edges.iter().find(|e| e.innovation == id).filter(|_| rb.rec_edges.contains(&id));
            let mut e = match (a, b) {
                (Some(a), Some(b)) => {
                    let mut e = a.clone();
                    e.weight = recombine(a.weight, b.weight);
                    e
                }
                (Some(e), None) | (None, Some(e)) => e.clone(),
                (None, None) => return None,
            };
            e.enabled = true;
            Some(e)
        })
        .collect();
    child
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::fixtures::*;
    use crate::genome::NodeKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weight_oracle_values() {
        // r = 0.5 gives the midpoint, r = −0.5 extrapolates past the better parent
        let mid = crossover_with(&one_edge(1.0), &one_edge(3.0), |a, b| 0.5 * (b - a) + a);
        assert_eq!(mid.edges[0].weight, 2.0);
        let ext = crossover_with(&one_edge(1.0), &one_edge(3.0), |a, b| -0.5 * (b - a) + a);
        assert_eq!(ext.edges[0].weight, 0.0);
    }

    fn one_edge(w: f64) -> Genome {
        genome(vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)], vec![edge(0, 0, 1, w)], vec![])
    }

    #[test]
    fn weight_stays_in_extrapolation_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let w = crossover_weight(1.0, 3.0, &mut rng);
            assert!((0.0..=4.0).contains(&w));
        }
    }

    #[test]
    fn disjoint_reachable_elements_are_inherited() {
        let a = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 2, 0.1), edge(1, 2, 1, 0.2)],
            vec![],
        );
        let b = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(3, NodeKind::Hidden, 0.3)],
            vec![edge(2, 0, 3, 0.3), edge(3, 3, 1, 0.4)],
            vec![rec(0, 1, 1, 1, 0.5)],
        );
        let c = crossover_with(&a, &b, |x, _| x);
        assert_eq!(c.nodes.len(), 4);
        assert_eq!(c.edges.len(), 4);
        assert_eq!(c.rec_edges.len(), 1);
        assert!(c.validate().is_ok());
        assert_eq!(c.lineage.parents.len(), 2);
    }
}
