//! Network-level forward pass and backpropagation through time.
//!
//! A genome is compiled into an evaluation plan holding only its reachable
//! elements, ordered by depth. Each step evaluates the plan in order; a node
//! reads feed-forward sources at the same step and recurrent sources `k`
//! steps back (zero before the series starts). The output at step `t`
//! predicts the output column at `t + 1`.

use crate::cells::{self, CellKind, CellState, NodeActivationTrace};
use crate::data::TimeSeries;
use crate::error::Result;
use crate::genome::{Genome, NodeId};

#[derive(Debug, Clone)]
struct PlanNode {
    cell: CellKind,
    /// Input column (position in the genome's input list) for input nodes.
    input: Option<usize>,
    param_offset: usize,
    params: Vec<f64>,
    ff: Vec<Link>,
    rec: Vec<RecLink>,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    src: usize,
    weight: f64,
    param: usize,
}

#[derive(Debug, Clone, Copy)]
struct RecLink {
    src: usize,
    skip: usize,
    weight: f64,
    param: usize,
}

/// Input and target columns of one series, resolved against a genome's
/// input and output names.
#[derive(Debug, Clone)]
pub struct SeriesView {
    len: usize,
    n_in: usize,
    n_out: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl SeriesView {
    pub fn new(series: &TimeSeries, input_names: &[String], output_names: &[String]) -> Result<Self> {
        let ic = series.resolve(input_names)?;
        let oc = series.resolve(output_names)?;
        let len = series.len();
        let mut inputs = Vec::with_capacity(len * ic.len());
        let mut targets = Vec::with_capacity(len * oc.len());
        for t in 0..len {
            let row = series.row(t);
            inputs.extend(ic.iter().map(|&c| row[c]));
            targets.extend(oc.iter().map(|&c| row[c]));
        }
        Ok(SeriesView { len, n_in: ic.len(), n_out: oc.len(), inputs, targets })
    }

    pub fn for_genome(series: &TimeSeries, g: &Genome) -> Result<Self> {
        Self::new(series, &g.input_names, &g.output_names)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn input(&self, t: usize, i: usize) -> f64 {
        self.inputs[t * self.n_in + i]
    }

    pub fn target(&self, t: usize, o: usize) -> f64 {
        self.targets[t * self.n_out + o]
    }

    /// Targets of output `o` aligned with predictions: values at `1..len`.
    pub fn shifted_targets(&self, o: usize) -> Vec<f64> {
        (1..self.len).map(|t| self.target(t, o)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<PlanNode>,
    /// Plan index of each output, in output-name order.
    outputs: Vec<usize>,
    param_count: usize,
}

impl Network {
    pub fn compile(g: &Genome) -> Network {
        let reach = g.reachable_set();

        // canonical offsets, matching Genome::parameters
        let mut offset = g.edges.len() + g.rec_edges.len();
        let mut node_offsets = Vec::with_capacity(g.nodes.len());
        for n in &g.nodes {
            node_offsets.push(offset);
            offset += n.params.len();
        }

        let mut order: Vec<usize> = (0..g.nodes.len())
            .filter(|&i| reach.nodes.contains(&g.nodes[i].innovation) || g.nodes[i].is_output())
            .collect();
        order.sort_by(|&a, &b| {
            let (na, nb) = (&g.nodes[a], &g.nodes[b]);
            na.depth.total_cmp(&nb.depth).then(na.innovation.cmp(&nb.innovation))
        });
        let plan_index = |id: NodeId| order.iter().position(|&i| g.nodes[i].innovation == id);

        let input_ids: Vec<NodeId> = g.input_nodes().map(|n| n.innovation).collect();
        let mut nodes: Vec<PlanNode> = order
            .iter()
            .map(|&i| {
                let n = &g.nodes[i];
                PlanNode {
                    cell: n.cell,
                    input: if n.is_input() { input_ids.iter().position(|&id| id == n.innovation) } else { None },
                    param_offset: node_offsets[i],
                    params: n.params.0.clone(),
                    ff: Vec::new(),
                    rec: Vec::new(),
                }
            })
            .collect();

        for (ei, e) in g.edges.iter().enumerate() {
            if !reach.edges.contains(&e.innovation) {
                continue;
            }
            if let (Some(src), Some(dst)) = (plan_index(e.from), plan_index(e.to)) {
                nodes[dst].ff.push(Link { src, weight: e.weight, param: ei });
            }
        }
        for (ri, e) in g.rec_edges.iter().enumerate() {
            if !reach.rec_edges.contains(&e.innovation) {
                continue;
            }
            if let (Some(src), Some(dst)) = (plan_index(e.from), plan_index(e.to)) {
                nodes[dst].rec.push(RecLink {
                    src,
                    skip: e.time_skip as usize,
                    weight: e.weight,
                    param: g.edges.len() + ri,
                });
            }
        }

        let outputs = g
            .output_nodes()
            .map(|o| plan_index(o.innovation).expect("outputs are always planned"))
            .collect();
        Network { nodes, outputs, param_count: offset }
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Loads a canonical parameter vector (see [`Genome::parameters`]).
    pub fn set_parameters(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count, "parameter vector length");
        for n in &mut self.nodes {
            let len = n.params.len();
            n.params.copy_from_slice(&flat[n.param_offset..n.param_offset + len]);
            for l in &mut n.ff {
                l.weight = flat[l.param];
            }
            for l in &mut n.rec {
                l.weight = flat[l.param];
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn aggregate(&self, n: &PlanNode, t: usize, states: &[f64]) -> f64 {
        let width = self.nodes.len();
        let ff = n.ff.iter().map(|l| (l.weight, states[t * width + l.src]));
        let rec = n.rec.iter().map(|l| {
            let s = if t >= l.skip { states[(t - l.skip) * width + l.src] } else { 0.0 };
            (l.weight, s)
        });
        cells::aggregate_inputs(ff, rec)
    }

    /// Runs the network over a series, returning every node trace
    /// (`len × nodes`, row-major) and the flat output states.
    fn run(&self, view: &SeriesView) -> (Vec<NodeActivationTrace>, Vec<f64>) {
        let width = self.nodes.len();
        let mut traces = vec![NodeActivationTrace::default(); view.len * width];
        let mut states = vec![0.0; view.len * width];
        let mut cell_c = vec![0.0; width];
        for t in 0..view.len {
            for (j, n) in self.nodes.iter().enumerate() {
                let tr = if let Some(col) = n.input {
                    let x = view.input(t, col);
                    NodeActivationTrace { e: x, out: CellState { s: x, c: 0.0 }, ..Default::default() }
                } else {
                    let e = self.aggregate(n, t, &states);
                    let prev = CellState { s: if t > 0 { states[(t - 1) * width + j] } else { 0.0 }, c: cell_c[j] };
                    cells::forward(n.cell, &n.params, e, prev)
                };
                states[t * width + j] = tr.out.s;
                cell_c[j] = tr.out.c;
                traces[t * width + j] = tr;
            }
        }
        (traces, states)
    }

    /// One-step-ahead predictions per output: `out[o][t]` forecasts the
    /// output column at `t + 1`, for `t` in `0..len - 1`.
    pub fn predict(&self, view: &SeriesView) -> Vec<Vec<f64>> {
        let width = self.nodes.len();
        let (_, states) = self.run(view);
        self.outputs
            .iter()
            .map(|&j| (0..view.len.saturating_sub(1)).map(|t| states[t * width + j]).collect())
            .collect()
    }

    /// Summed loss `Σ_t Σ_o ½ (ŷ_t − y_{t+1})²` and its gradient with respect
    /// to the genome's canonical parameter vector.
    ///
    /// `truncation`, when set, cuts gradient flow between consecutive windows
    /// of that many steps; the forward pass still runs over the whole series.
    pub fn gradient(&self, view: &SeriesView, truncation: Option<usize>) -> (Vec<f64>, f64) {
        let width = self.nodes.len();
        let len = view.len;
        let (traces, states) = self.run(view);
        let mut grad = vec![0.0; self.param_count];
        let mut ds = vec![0.0; len * width];
        let mut dc = vec![0.0; len * width];
        let mut loss = 0.0;
        let window_start = |t: usize| truncation.map_or(0, |w| (t / w.max(1)) * w.max(1));

        for t in (0..len).rev() {
            if t + 1 < len {
                for (o, &j) in self.outputs.iter().enumerate() {
                    let err = states[t * width + j] - view.target(t + 1, o);
                    loss += 0.5 * err * err;
                    ds[t * width + j] += err;
                }
            }
            let start = window_start(t);
            for j in (0..width).rev() {
                let n = &self.nodes[j];
                if n.input.is_some() {
                    continue;
                }
                let at = t * width + j;
                let d_out = CellState { s: ds[at], c: dc[at] };
                if d_out == CellState::default() {
                    continue;
                }
                let dparams = &mut grad[n.param_offset..n.param_offset + n.params.len()];
                let g = cells::backward(n.cell, &n.params, &traces[at], d_out, dparams);
                if t > start {
                    ds[at - width] += g.prev.s;
                    dc[at - width] += g.prev.c;
                }
                for l in &n.ff {
                    grad[l.param] += g.de * states[t * width + l.src];
                    ds[t * width + l.src] += g.de * l.weight;
                }
                for l in &n.rec {
                    if t >= l.skip {
                        let src = (t - l.skip) * width + l.src;
                        grad[l.param] += g.de * states[src];
                        if t - l.skip >= start {
                            ds[src] += g.de * l.weight;
                        }
                    }
                }
            }
        }
        (grad, loss)
    }

    /// Loss only, without the backward sweep.
    pub fn loss(&self, view: &SeriesView) -> f64 {
        self.predict(view)
            .iter()
            .enumerate()
            .map(|(o, p)| {
                p.iter()
                    .enumerate()
                    .map(|(t, y)| {
                        let err = y - view.target(t + 1, o);
                        0.5 * err * err
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::fixtures::*;
    use crate::genome::NodeKind;

    fn series(cols: &[&str], rows: Vec<Vec<f64>>) -> TimeSeries {
        TimeSeries::new("t", cols.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn minimal_genome_predicts_tanh_of_input() {
        let mut g = genome(vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)], vec![edge(0, 0, 1, 1.0)], vec![]);
        g.input_names = vec!["x".into()];
        g.output_names = vec!["x".into()];
        let s = series(&["x"], vec![vec![0.1], vec![-0.4], vec![0.9], vec![0.3]]);
        let view = SeriesView::for_genome(&s, &g).unwrap();
        let p = Network::compile(&g).predict(&view);
        assert_eq!(p[0], vec![0.1f64.tanh(), (-0.4f64).tanh(), 0.9f64.tanh()]);
    }

    #[test]
    fn zero_input_gives_tanh_bias() {
        let mut g = genome(vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0)], vec![edge(0, 0, 1, 0.7)], vec![]);
        g.nodes[1].params.0[0] = 0.25;
        g.input_names = vec!["x".into()];
        g.output_names = vec!["x".into()];
        let s = series(&["x"], vec![vec![0.0]; 5]);
        let p = Network::compile(&g).predict(&SeriesView::for_genome(&s, &g).unwrap());
        assert!(p[0].iter().all(|&v| v == 0.25f64.tanh()));
    }

    #[test]
    fn elman_self_loop_matches_direct_update() {
        // x -> h -> out with h ~> h (k=1): h_t = tanh(w x_t + v h_{t-1} + b)
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 2, 0.8), edge(1, 2, 1, 1.3)],
            vec![rec(0, 2, 2, 1, -0.6)],
        );
        g.nodes[2].params.0[0] = 0.1;
        g.nodes[1].params.0[0] = -0.2;
        g.input_names = vec!["x".into()];
        g.output_names = vec!["x".into()];
        let xs = [0.5, -0.3, 0.9, 0.0, 0.2, -0.7];
        let s = series(&["x"], xs.iter().map(|&x| vec![x]).collect());
        let p = Network::compile(&g).predict(&SeriesView::for_genome(&s, &g).unwrap());
        let mut h = 0.0;
        for (t, &x) in xs.iter().enumerate().take(xs.len() - 1) {
            h = (0.8 * x - 0.6 * h + 0.1f64).tanh();
            let y = (1.3 * h - 0.2f64).tanh();
            assert!((p[0][t] - y).abs() < 1e-15);
        }
    }

    #[test]
    fn jordan_connection_matches_direct_update() {
        // output ~> h with k=2
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 2, 0.4), edge(1, 2, 1, 0.9)],
            vec![rec(0, 1, 2, 2, 0.7)],
        );
        g.input_names = vec!["x".into()];
        g.output_names = vec!["x".into()];
        let xs = [0.5, -0.3, 0.9, 0.1, 0.2, -0.7, 0.4];
        let s = series(&["x"], xs.iter().map(|&x| vec![x]).collect());
        let p = Network::compile(&g).predict(&SeriesView::for_genome(&s, &g).unwrap());
        let mut ys: Vec<f64> = Vec::new();
        for (t, &x) in xs.iter().enumerate().take(xs.len() - 1) {
            let back = if t >= 2 { ys[t - 2] } else { 0.0 };
            let h = (0.4 * x + 0.7 * back).tanh();
            ys.push((0.9 * h).tanh());
            assert!((p[0][t] - ys[t]).abs() < 1e-15);
        }
    }
}
