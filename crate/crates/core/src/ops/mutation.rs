use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};

use super::{lamarckian_new_weight, sample_count, OpContext, WeightInitStats};
use crate::cells::{CellKind, CellParams};
use crate::genome::{Edge, Genome, Node, NodeId, NodeKind, RecurrentEdge};
use crate::innovation::SplitSource;

const DUPLICATE_ATTEMPTS: usize = 20;

/// Copy of `g` ready to become a child: fitness cleared.
pub fn clone_genome(g: &Genome) -> Genome {
    let mut c = g.clone();
    c.fitness = f64::INFINITY;
    c
}

#[derive(Clone, Copy)]
enum Target {
    Ff(usize),
    Rec(usize),
}

fn pick_edge(g: &Genome, enabled: bool, rng: &mut dyn RngCore) -> Option<Target> {
    let ff = g.edges.iter().enumerate().filter(|(_, e)| e.enabled == enabled).map(|(i, _)| Target::Ff(i));
    let rec = g.rec_edges.iter().enumerate().filter(|(_, e)| e.enabled == enabled).map(|(i, _)| Target::Rec(i));
    let all: Vec<Target> = ff.chain(rec).collect();
    all.choose(rng).copied()
}

pub fn disable_edge(g: &Genome, rng: &mut dyn RngCore) -> Option<Genome> {
    let t = pick_edge(g, true, rng)?;
    let mut c = clone_genome(g);
    match t {
        Target::Ff(i) => c.edges[i].enabled = false,
        Target::Rec(i) => c.rec_edges[i].enabled = false,
    }
    Some(c)
}

pub fn enable_edge(g: &Genome, rng: &mut dyn RngCore) -> Option<Genome> {
    let t = pick_edge(g, false, rng)?;
    let mut c = clone_genome(g);
    match t {
        Target::Ff(i) => c.edges[i].enabled = true,
        Target::Rec(i) => c.rec_edges[i].enabled = true,
    }
    Some(c)
}

fn new_node(id: NodeId, depth: f64, stats: &WeightInitStats, ctx: &mut OpContext<'_>) -> Node {
    let cell = *ctx.config.cell_kinds.choose(ctx.rng).unwrap_or(&CellKind::Simple);
    let mut params = CellParams(
        (0..cell.param_count()).map(|_| lamarckian_new_weight(stats, ctx.rng)).collect(),
    );
    if let Some(i) = cell.forget_bias_index() {
        params.0[i] += ctx.config.lstm_forget_bias;
    }
    Node { innovation: id, kind: NodeKind::Hidden, cell, depth, enabled: true, params }
}

fn push_edge(c: &mut Genome, from: NodeId, to: NodeId, stats: &WeightInitStats, ctx: &mut OpContext<'_>) {
    let innovation = ctx.registry.edge(from, to);
    let weight = lamarckian_new_weight(stats, ctx.rng);
    c.insert_edge(Edge { innovation, from, to, weight, enabled: true });
}

fn push_rec(c: &mut Genome, from: NodeId, to: NodeId, k: u32, stats: &WeightInitStats, ctx: &mut OpContext<'_>) {
    if c.has_rec_edge(from, to, k) {
        return;
    }
    let innovation = ctx.registry.rec_edge(from, to, k);
    let weight = lamarckian_new_weight(stats, ctx.rng);
    c.insert_rec_edge(RecurrentEdge { innovation, from, to, time_skip: k, weight, enabled: true });
}

/// Replaces an enabled edge with a new hidden node and two edges through it.
pub fn split_edge(g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    let t = pick_edge(g, true, ctx.rng)?;
    let stats = WeightInitStats::of(g);
    let mut c = clone_genome(g);
    let (source, from, to) = match t {
        Target::Ff(i) => (SplitSource::Edge(g.edges[i].innovation), g.edges[i].from, g.edges[i].to),
        Target::Rec(i) => {
            (SplitSource::Recurrent(g.rec_edges[i].innovation), g.rec_edges[i].from, g.rec_edges[i].to)
        }
    };
    let id = ctx.registry.split_node(source, |n| g.has_node(n));
    let mid = 0.5 * (g.depth(from) + g.depth(to));
    let depth = match t {
        Target::Ff(_) => mid,
        Target::Rec(_) if mid > 0.0 && mid < 1.0 => mid,
        Target::Rec(_) => open_unit(ctx.rng),
    };
    let node = new_node(id, depth, &stats, ctx);
    c.insert_node(node);
    match t {
        Target::Ff(i) => {
            c.edges[i].enabled = false;
            push_edge(&mut c, from, id, &stats, ctx);
            push_edge(&mut c, id, to, &stats, ctx);
        }
        Target::Rec(i) => {
            c.rec_edges[i].enabled = false;
            let k = g.rec_edges[i].time_skip;
            push_rec(&mut c, from, id, k, &stats, ctx);
            push_rec(&mut c, id, to, k, &stats, ctx);
        }
    }
    Some(c)
}

fn open_unit(rng: &mut dyn RngCore) -> f64 {
    loop {
        let d: f64 = rng.random();
        if d > 0.0 {
            return d;
        }
    }
}

/// Adds a feed-forward edge between two enabled nodes of strictly
/// increasing depth that are not yet connected.
pub fn add_edge(g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    let live: Vec<&Node> = g.nodes.iter().filter(|n| n.enabled).collect();
    let mut pairs = Vec::new();
    for a in &live {
        for b in &live {
            if a.depth < b.depth && !b.is_input() && !g.has_edge_between(a.innovation, b.innovation) {
                pairs.push((a.innovation, b.innovation));
            }
        }
    }
    let &(from, to) = pairs.choose(ctx.rng)?;
    let stats = WeightInitStats::of(g);
    let mut c = clone_genome(g);
    push_edge(&mut c, from, to, &stats, ctx);
    Some(c)
}

/// Adds a recurrent edge with a uniform time skip in `1..=max_time_skip`.
/// A duplicate draw is redrawn up to 20 times.
pub fn add_recurrent_edge(g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    let sources: Vec<NodeId> = g.nodes.iter().filter(|n| n.enabled).map(|n| n.innovation).collect();
    let targets: Vec<NodeId> =
        g.nodes.iter().filter(|n| n.enabled && !n.is_input()).map(|n| n.innovation).collect();
    if sources.is_empty() || targets.is_empty() {
        return None;
    }
    let max_k = ctx.config.max_time_skip.max(1);
    for _ in 0..DUPLICATE_ATTEMPTS {
        let from = *sources.choose(ctx.rng)?;
        let to = *targets.choose(ctx.rng)?;
        let k = ctx.rng.random_range(1..=max_k);
        if !g.has_rec_edge(from, to, k) {
            let stats = WeightInitStats::of(g);
            let mut c = clone_genome(g);
            push_rec(&mut c, from, to, k, &stats, ctx);
            return Some(c);
        }
    }
    None
}

fn set_incident(c: &mut Genome, id: NodeId, enabled: bool) {
    for e in c.edges.iter_mut().filter(|e| e.from == id || e.to == id) {
        e.enabled = enabled;
    }
    for e in c.rec_edges.iter_mut().filter(|e| e.from == id || e.to == id) {
        e.enabled = enabled;
    }
}

/// Disables a non-output node and every edge touching it. Inputs may be
/// dropped this way.
pub fn disable_node(g: &Genome, rng: &mut dyn RngCore) -> Option<Genome> {
    let ids: Vec<NodeId> = g.nodes.iter().filter(|n| n.enabled && !n.is_output()).map(|n| n.innovation).collect();
    let &id = ids.choose(rng)?;
    let mut c = clone_genome(g);
    c.node_mut(id)?.enabled = false;
    set_incident(&mut c, id, false);
    Some(c)
}

/// Re-enables a disabled node and every edge touching it.
pub fn enable_node(g: &Genome, rng: &mut dyn RngCore) -> Option<Genome> {
    let ids: Vec<NodeId> = g.nodes.iter().filter(|n| !n.enabled).map(|n| n.innovation).collect();
    let &id = ids.choose(rng)?;
    let mut c = clone_genome(g);
    c.node_mut(id)?.enabled = true;
    set_incident(&mut c, id, true);
    Some(c)
}

fn choose_up_to(ids: &[NodeId], n: usize, rng: &mut dyn RngCore) -> Vec<NodeId> {
    ids.choose_multiple(rng, n.min(ids.len())).copied().collect()
}

/// Inserts a hidden node at a uniform depth in (0, 1), wired with edge counts
/// drawn from the parent's per-node degree distributions.
pub fn add_node(g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    let depth = open_unit(ctx.rng);
    let shallower: Vec<NodeId> =
        g.nodes.iter().filter(|n| n.enabled && n.depth < depth).map(|n| n.innovation).collect();
    let deeper: Vec<NodeId> =
        g.nodes.iter().filter(|n| n.enabled && n.depth > depth && !n.is_input()).map(|n| n.innovation).collect();
    if shallower.is_empty() || deeper.is_empty() {
        return None;
    }
    let stats = WeightInitStats::of(g);
    let n_in = sample_count(stats.ff_in_mean, stats.ff_in_var, 1, ctx.rng);
    let n_out = sample_count(stats.ff_out_mean, stats.ff_out_var, 1, ctx.rng);
    let n_rec = sample_count(stats.rec_mean, stats.rec_var, 0, ctx.rng);

    let mut c = clone_genome(g);
    let id = ctx.registry.fresh_node();
    let node = new_node(id, depth, &stats, ctx);
    c.insert_node(node);
    for from in choose_up_to(&shallower, n_in, ctx.rng) {
        push_edge(&mut c, from, id, &stats, ctx);
    }
    for to in choose_up_to(&deeper, n_out, ctx.rng) {
        push_edge(&mut c, id, to, &stats, ctx);
    }
    if n_rec > 0 {
        let any: Vec<NodeId> = c.nodes.iter().filter(|n| n.enabled).map(|n| n.innovation).collect();
        let non_input: Vec<NodeId> =
            c.nodes.iter().filter(|n| n.enabled && !n.is_input()).map(|n| n.innovation).collect();
        let max_k = ctx.config.max_time_skip.max(1);
        for _ in 0..n_rec {
            let k = ctx.rng.random_range(1..=max_k);
            if ctx.rng.random_bool(0.5) {
                let from = *any.choose(ctx.rng)?;
                push_rec(&mut c, from, id, k, &stats, ctx);
            } else {
                let to = *non_input.choose(ctx.rng)?;
                push_rec(&mut c, id, to, k, &stats, ctx);
            }
        }
    }
    Some(c)
}

/// Splits `items` between two children: each gets at least one when there
/// are two or more, a single item goes to both, the rest fall uniformly.
fn partition<T: Copy>(items: &[T], rng: &mut dyn RngCore) -> (Vec<T>, Vec<T>) {
    match items.len() {
        0 => (Vec::new(), Vec::new()),
        1 => (vec![items[0]], vec![items[0]]),
        _ => {
            let mut shuffled = items.to_vec();
            shuffled.shuffle(rng);
            let (mut a, mut b) = (vec![shuffled[0]], vec![shuffled[1]]);
            for &x in &shuffled[2..] {
                if rng.random_bool(0.5) {
                    a.push(x);
                } else {
                    b.push(x);
                }
            }
            (a, b)
        }
    }
}

/// Replaces an enabled hidden node with two new nodes at the same depth that
/// share out its enabled incident edges.
pub fn split_node(g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    let ids: Vec<NodeId> = g.nodes.iter().filter(|n| n.enabled && n.is_hidden()).map(|n| n.innovation).collect();
    let &p = ids.choose(ctx.rng)?;
    let depth = g.depth(p);
    let stats = WeightInitStats::of(g);
    let sources: Vec<NodeId> = g.edges.iter().filter(|e| e.enabled && e.to == p).map(|e| e.from).collect();
    let targets: Vec<NodeId> = g.edges.iter().filter(|e| e.enabled && e.from == p).map(|e| e.to).collect();
    let recs: Vec<(NodeId, NodeId, u32)> = g
        .rec_edges
        .iter()
        .filter(|e| e.enabled && (e.from == p || e.to == p))
        .map(|e| (e.from, e.to, e.time_skip))
        .collect();

    let mut c = clone_genome(g);
    let a = ctx.registry.fresh_node();
    let b = ctx.registry.fresh_node();
    let node_a = new_node(a, depth, &stats, ctx);
    let node_b = new_node(b, depth, &stats, ctx);
    c.insert_node(node_a);
    c.insert_node(node_b);

    let (in_a, in_b) = partition(&sources, ctx.rng);
    let (out_a, out_b) = partition(&targets, ctx.rng);
    for (child, ins, outs) in [(a, in_a, out_a), (b, in_b, out_b)] {
        for from in ins {
            push_edge(&mut c, from, child, &stats, ctx);
        }
        for to in outs {
            push_edge(&mut c, child, to, &stats, ctx);
        }
    }
    for (from, to, k) in recs {
        let child = if ctx.rng.random_bool(0.5) { a } else { b };
        let remap = |n: NodeId| if n == p { child } else { n };
        push_rec(&mut c, remap(from), remap(to), k, &stats, ctx);
    }
    c.node_mut(p)?.enabled = false;
    set_incident(&mut c, p, false);
    Some(c)
}

/// Replaces two enabled hidden nodes with one at their mean depth,
/// connected to the union of their neighbours.
pub fn merge_node(g: &Genome, ctx: &mut OpContext<'_>) -> Option<Genome> {
    let ids: Vec<NodeId> = g.nodes.iter().filter(|n| n.enabled && n.is_hidden()).map(|n| n.innovation).collect();
    if ids.len() < 2 {
        return None;
    }
    let pair: Vec<NodeId> = ids.choose_multiple(ctx.rng, 2).copied().collect();
    let (a, b) = (pair[0], pair[1]);
    let depth = 0.5 * (g.depth(a) + g.depth(b));
    let stats = WeightInitStats::of(g);
    let merged = |n: NodeId| n == a || n == b;

    let neighbours: BTreeSet<NodeId> = g
        .edges
        .iter()
        .filter(|e| e.enabled && (merged(e.from) || merged(e.to)))
        .map(|e| if merged(e.from) { e.to } else { e.from })
        .filter(|&n| !merged(n))
        .collect();
    let recs: BTreeSet<(NodeId, NodeId, u32)> = g
        .rec_edges
        .iter()
        .filter(|e| e.enabled && (merged(e.from) || merged(e.to)))
        .map(|e| (e.from, e.to, e.time_skip))
        .collect();

    let mut c = clone_genome(g);
    let id = ctx.registry.fresh_node();
    let node = new_node(id, depth, &stats, ctx);
    c.insert_node(node);
    for n in neighbours {
        let d = g.depth(n);
        if d < depth {
            push_edge(&mut c, n, id, &stats, ctx);
        } else if d > depth && !g.node(n).is_some_and(|x| x.is_input()) {
            push_edge(&mut c, id, n, &stats, ctx);
        }
    }
    let remap = |n: NodeId| if merged(n) { id } else { n };
    let remapped: BTreeSet<(NodeId, NodeId, u32)> = recs.into_iter().map(|(f, t, k)| (remap(f), remap(t), k)).collect();
    for (from, to, k) in remapped {
        push_rec(&mut c, from, to, k, &stats, ctx);
    }
    for n in [a, b] {
        c.node_mut(n)?.enabled = false;
        set_incident(&mut c, n, false);
    }
    Some(c)
}
