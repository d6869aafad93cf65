//! Genome file formats.
//!
//! The binary container starts with the magic bytes `EXMG` and a
//! little-endian `u32` format version, followed by sections. Each section is
//! a four-byte ASCII tag, a `u32` payload length and the payload:
//!
//! | tag    | payload                                                        |
//! |--------|----------------------------------------------------------------|
//! | `META` | generation id, island, fitness, lineage, input and output names |
//! | `NODE` | nodes                                                          |
//! | `EDGE` | feed-forward edges                                             |
//! | `RECE` | recurrent edges                                                |
//! | `NORM` | optional per-column min/max scaling                            |
//!
//! Unknown tags are skipped so later versions can add sections.

use std::fmt::Write as _;
use std::path::Path;

use crate::cells::{CellKind, CellParams};
use crate::data::{ColumnScale, Normalization};
use crate::error::{Error, Result};
use crate::genome::{Edge, EdgeId, Genome, Lineage, Node, NodeId, NodeKind, RecEdgeId, RecurrentEdge};
use crate::ops::OperatorKind;

pub const MAGIC: &[u8; 4] = b"EXMG";
pub const VERSION: u32 = 1;

const SEED_CODE: u8 = 0xff;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn bool(&mut self, b: bool) {
        self.u8(b as u8);
    }
    fn section(&mut self, tag: &[u8; 4], body: impl FnOnce(&mut Writer)) {
        let mut inner = Writer { buf: Vec::new() };
        body(&mut inner);
        self.buf.extend_from_slice(tag);
        self.u32(inner.buf.len() as u32);
        self.buf.extend_from_slice(&inner.buf);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Decode { offset: self.pos, reason: reason.into() })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.end - self.pos < n {
            return self.err(format!("need {n} bytes, {} left", self.end - self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => {
                self.pos -= 1;
                self.err(format!("invalid boolean byte {b:#04x}"))
            }
        }
    }
    fn count(&mut self, min_item: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item) > self.end - self.pos {
            self.pos -= 4;
            return self.err(format!("count {n} exceeds remaining section length"));
        }
        Ok(n)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.count(1)?;
        let start = self.pos;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Decode { offset: start, reason: "invalid utf-8".into() })
    }
}

fn kind_code(k: NodeKind) -> u8 {
    match k {
        NodeKind::Input => 0,
        NodeKind::Hidden => 1,
        NodeKind::Output => 2,
    }
}

/// Encodes a genome into the versioned binary container.
pub fn serialize(g: &Genome) -> Vec<u8> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.section(b"META", |w| {
        w.u64(g.generation_id);
        w.u64(g.island as u64);
        w.f64(g.fitness);
        w.u8(g.lineage.operator.map_or(SEED_CODE, OperatorKind::to_code));
        w.u32(g.lineage.parents.len() as u32);
        for &p in &g.lineage.parents {
            w.u64(p);
        }
        for names in [&g.input_names, &g.output_names] {
            w.u32(names.len() as u32);
            for n in names {
                w.str(n);
            }
        }
    });
    w.section(b"NODE", |w| {
        w.u32(g.nodes.len() as u32);
        for n in &g.nodes {
            w.u32(n.innovation.0);
            w.u8(kind_code(n.kind));
            w.u8(n.cell.to_code());
            w.f64(n.depth);
            w.bool(n.enabled);
            w.u32(n.params.len() as u32);
            for &p in n.params.as_slice() {
                w.f64(p);
            }
        }
    });
    w.section(b"EDGE", |w| {
        w.u32(g.edges.len() as u32);
        for e in &g.edges {
            w.u32(e.innovation.0);
            w.u32(e.from.0);
            w.u32(e.to.0);
            w.f64(e.weight);
            w.bool(e.enabled);
        }
    });
    w.section(b"RECE", |w| {
        w.u32(g.rec_edges.len() as u32);
        for e in &g.rec_edges {
            w.u32(e.innovation.0);
            w.u32(e.from.0);
            w.u32(e.to.0);
            w.u32(e.time_skip);
            w.f64(e.weight);
            w.bool(e.enabled);
        }
    });
    if let Some(norm) = &g.normalization {
        w.section(b"NORM", |w| {
            w.u32(norm.columns.len() as u32);
            for c in &norm.columns {
                w.str(&c.name);
                w.f64(c.min);
                w.f64(c.max);
            }
        });
    }
    w.buf
}

/// Decodes a genome. Every failure reports the byte offset where decoding
/// stopped.
pub fn deserialize(bytes: &[u8]) -> Result<Genome> {
    let mut r = Reader { bytes, pos: 0, end: bytes.len() };
    if r.take(4)? != MAGIC {
        r.pos = 0;
        return r.err("bad magic, expected EXMG");
    }
    let version = r.u32()?;
    if version != VERSION {
        r.pos -= 4;
        return r.err(format!("unsupported version {version}"));
    }

    let mut g = Genome {
        generation_id: 0,
        island: 0,
        fitness: f64::INFINITY,
        lineage: Lineage::default(),
        input_names: Vec::new(),
        output_names: Vec::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        rec_edges: Vec::new(),
        normalization: None,
    };
    let mut seen = [false; 4];

    while r.pos < r.end {
        let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
        let len = r.u32()? as usize;
        if r.end - r.pos < len {
            return r.err(format!("section {:?} claims {len} bytes", String::from_utf8_lossy(&tag)));
        }
        let mut s = Reader { bytes, pos: r.pos, end: r.pos + len };
        match &tag {
            b"META" => {
                seen[0] = true;
                g.generation_id = s.u64()?;
                g.island = s.u64()? as usize;
                g.fitness = s.f64()?;
                let code = s.u8()?;
                g.lineage.operator = if code == SEED_CODE {
                    None
                } else {
                    match OperatorKind::from_code(code) {
                        Some(op) => Some(op),
                        None => {
                            s.pos -= 1;
                            return s.err(format!("unknown operator code {code}"));
                        }
                    }
                };
                let np = s.count(8)?;
                g.lineage.parents = (0..np).map(|_| s.u64()).collect::<Result<_>>()?;
                let ni = s.count(4)?;
                g.input_names = (0..ni).map(|_| s.str()).collect::<Result<_>>()?;
                let no = s.count(4)?;
                g.output_names = (0..no).map(|_| s.str()).collect::<Result<_>>()?;
            }
            b"NODE" => {
                seen[1] = true;
                let n = s.count(19)?;
                for _ in 0..n {
                    let innovation = NodeId(s.u32()?);
                    let kind = match s.u8()? {
                        0 => NodeKind::Input,
                        1 => NodeKind::Hidden,
                        2 => NodeKind::Output,
                        b => {
                            s.pos -= 1;
                            return s.err(format!("unknown node kind {b}"));
                        }
                    };
                    let code = s.u8()?;
                    let Some(cell) = CellKind::from_code(code) else {
                        s.pos -= 1;
                        return s.err(format!("unknown cell kind {code}"));
                    };
                    let depth = s.f64()?;
                    let enabled = s.bool()?;
                    let np = s.count(8)?;
                    let params = (0..np).map(|_| s.f64()).collect::<Result<_>>()?;
                    g.nodes.push(Node { innovation, kind, cell, depth, enabled, params: CellParams(params) });
                }
            }
            b"EDGE" => {
                seen[2] = true;
                let n = s.count(21)?;
                for _ in 0..n {
                    g.edges.push(Edge {
                        innovation: EdgeId(s.u32()?),
                        from: NodeId(s.u32()?),
                        to: NodeId(s.u32()?),
                        weight: s.f64()?,
                        enabled: s.bool()?,
                    });
                }
            }
            b"RECE" => {
                seen[3] = true;
                let n = s.count(25)?;
                for _ in 0..n {
                    g.rec_edges.push(RecurrentEdge {
                        innovation: RecEdgeId(s.u32()?),
                        from: NodeId(s.u32()?),
                        to: NodeId(s.u32()?),
                        time_skip: s.u32()?,
                        weight: s.f64()?,
                        enabled: s.bool()?,
                    });
                }
            }
            b"NORM" => {
                let n = s.count(20)?;
                let mut columns = Vec::with_capacity(n);
                for _ in 0..n {
                    columns.push(ColumnScale { name: s.str()?, min: s.f64()?, max: s.f64()? });
                }
                g.normalization = Some(Normalization { columns });
            }
            _ => s.pos = s.end,
        }
        if s.pos != s.end {
            return s.err("trailing bytes in section");
        }
        r.pos = s.end;
    }

    for (present, tag) in seen.iter().zip(["META", "NODE", "EDGE", "RECE"]) {
        if !present {
            return r.err(format!("missing {tag} section"));
        }
    }
    Ok(g)
}

pub fn to_json(g: &Genome) -> Result<String> {
    Ok(serde_json::to_string_pretty(g)?)
}

pub fn from_json(text: &str) -> Result<Genome> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_genome(path: &Path, g: &Genome) -> Result<()> {
    std::fs::write(path, serialize(g))?;
    Ok(())
}

/// Reads a genome file in either the binary container or JSON form.
pub fn read_genome(path: &Path) -> Result<Genome> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        deserialize(&bytes)
    } else {
        from_json(&String::from_utf8_lossy(&bytes))
    }
}

/// Graphviz rendering. Disabled elements are grey and dashed; recurrent
/// edges are dotted and labelled with their time skip.
pub fn export_dot(g: &Genome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph genome_{} {{", g.generation_id);
    let _ = writeln!(out, "  rankdir=LR;");
    let mut inputs = g.input_names.iter();
    let mut outputs = g.output_names.iter();
    for n in &g.nodes {
        let (label, shape) = match n.kind {
            NodeKind::Input => (inputs.next().cloned().unwrap_or_default(), "box"),
            NodeKind::Output => (outputs.next().cloned().unwrap_or_default(), "doublecircle"),
            NodeKind::Hidden => (format!("IN {}\\n{}", n.innovation.0, n.cell), "ellipse"),
        };
        let style = if n.enabled { "" } else { ", color=grey, fontcolor=grey, style=dashed" };
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", shape={}{}];",
            n.innovation.0, label, shape, style
        );
    }
    for e in &g.edges {
        let style = if e.enabled { "color=black" } else { "color=grey, style=dashed" };
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{:.4}\", {}];",
            e.from.0, e.to.0, e.weight, style
        );
    }
    for e in &g.rec_edges {
        let style = if e.enabled {
            "color=blue, style=dotted"
        } else {
            "color=grey, style=dashed"
        };
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"k={} {:.4}\", constraint=false, {}];",
            e.from.0, e.to.0, e.time_skip, e.weight, style
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::fixtures::*;

    fn sample() -> Genome {
        let mut g = genome(
            vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 1.0), node(2, NodeKind::Hidden, 0.5)],
            vec![edge(0, 0, 1, 0.5), edge(1, 0, 2, -0.25), edge(2, 2, 1, 1.5)],
            vec![rec(0, 1, 2, 4, 0.125)],
        );
        g.edges[1].enabled = false;
        g.lineage = Lineage { operator: Some(OperatorKind::SplitEdge), parents: vec![3, 9] };
        g.fitness = 0.0625;
        g
    }

    #[test]
    fn binary_round_trip() {
        let g = sample();
        let bytes = serialize(&g);
        assert_eq!(&bytes[..4], b"EXMG");
        assert_eq!(deserialize(&bytes).unwrap(), g);
    }

    #[test]
    fn json_round_trip() {
        let g = sample();
        assert_eq!(from_json(&to_json(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let bytes = serialize(&sample());
        for cut in [0, 3, 7, 20, bytes.len() - 1] {
            match deserialize(&bytes[..cut]) {
                Err(Error::Decode { offset, .. }) => assert!(offset <= cut),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = serialize(&sample());
        bytes[4] = 9;
        assert!(matches!(deserialize(&bytes), Err(Error::Decode { offset: 4, .. })));
        bytes[0] = b'X';
        assert!(matches!(deserialize(&bytes), Err(Error::Decode { offset: 0, .. })));
    }

    #[test]
    fn unknown_sections_are_skipped() {
        let g = sample();
        let mut bytes = serialize(&g);
        bytes.extend_from_slice(b"XTRA");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(deserialize(&bytes).unwrap(), g);
    }

    #[test]
    fn dot_styles() {
        let g = sample();
        let dot = export_dot(&g);
        assert!(dot.contains("n0 -> n1 [label=\"0.5000\", color=black]"));
        assert!(dot.contains("n0 -> n2 [label=\"-0.2500\", color=grey, style=dashed]"));
        assert!(dot.contains("k=4"));
        assert_eq!(dot, export_dot(&g));
    }
}
