//! Non-deterministic zero-suppressed decision diagrams.
//!
//! An [`Nzdd`] is a rooted DAG (multi-edges allowed) whose edges carry label
//! sets over a ground set `0..ground_size`. Every root-to-leaf path spells out
//! the union of its edge labels, and the diagram represents the family of all
//! such unions. Two structural conditions make that representation exact:
//!
//! 1. labels of distinct edges on one path are disjoint, and
//! 2. distinct paths spell distinct sets.
//!
//! Node `0` is always the root and node `1` the leaf.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::family::SubsetFamily;

pub type NodeId = usize;
pub type EdgeId = usize;

pub const ROOT: NodeId = 0;
pub const LEAF: NodeId = 1;

/// Default path cap used by [`Nzdd::validate`] callers that have no better idea.
pub const DEFAULT_PATH_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// Sorted ascending, no repeats.
    pub labels: Vec<u32>,
}

impl Edge {
    pub fn new(from: NodeId, to: NodeId, labels: impl Into<Vec<u32>>) -> Self {
        Edge {
            from,
            to,
            labels: labels.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Nzdd {
    node_count: usize,
    ground_size: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    // None when the graph has a cycle.
    topo: Option<Vec<NodeId>>,
}

impl PartialEq for Nzdd {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count
            && self.ground_size == other.ground_size
            && self.edges == other.edges
    }
}

impl Eq for Nzdd {}

/// Summary statistics of a diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NzddStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub total_label_size: usize,
    pub depth: usize,
    pub num_paths: u128,
    /// `m_e`: number of root-to-leaf paths through each edge.
    pub edge_multiplicity: Vec<u128>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Cycle,
    RootHasIncoming(EdgeId),
    LeafHasOutgoing(EdgeId),
    /// The node is not on any root-to-leaf path.
    DeadNode(NodeId),
    /// Condition 1: `element` appears on both edges of one path.
    RepeatedElement {
        element: u32,
        first: EdgeId,
        second: EdgeId,
    },
    /// Condition 2: two distinct paths spell the same set.
    DuplicatePathSet { first: Vec<EdgeId>, second: Vec<EdgeId> },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Set when the path count exceeded the cap and condition 2 was skipped.
    pub condition2_unverified: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// No violations and every condition actually checked.
    pub fn is_verified(&self) -> bool {
        self.is_ok() && !self.condition2_unverified
    }
}

impl Nzdd {
    /// Builds a diagram from an edge list. Labels are sorted; ranges are
    /// checked. Structural conditions are left to [`Nzdd::validate`].
    pub fn new(node_count: usize, ground_size: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::TooFewNodes(node_count));
        }
        for (id, e) in edges.iter_mut().enumerate() {
            for node in [e.from, e.to] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange {
                        edge: id,
                        node,
                        node_count,
                    });
                }
            }
            e.labels.sort_unstable();
            for w in e.labels.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::RepeatedLabel {
                        edge: id,
                        label: w[0],
                    });
                }
            }
            if let Some(&last) = e.labels.last() {
                if last as usize >= ground_size {
                    return Err(Error::LabelOutOfRange {
                        edge: id,
                        label: last,
                        ground_size,
                    });
                }
            }
        }
        Ok(Self::from_parts(node_count, ground_size, edges))
    }

    // Caller guarantees sorted, in-range labels.
    pub(crate) fn from_parts(node_count: usize, ground_size: usize, edges: Vec<Edge>) -> Self {
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = vec![Vec::new(); node_count];
        for (id, e) in edges.iter().enumerate() {
            out_adj[e.from].push(id);
            in_adj[e.to].push(id);
        }
        let topo = kahn(node_count, &edges, &out_adj, &in_adj);
        Nzdd {
            node_count,
            ground_size,
            edges,
            out_adj,
            in_adj,
            topo,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out_adj[v]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_adj[v]
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo.is_some()
    }

    /// Nodes in root-to-leaf topological order.
    ///
    /// # Panics
    /// If the graph has a cycle.
    pub fn topological_order(&self) -> &[NodeId] {
        self.topo
            .as_deref()
            .expect("diagram has a cycle; run validate first")
    }

    pub fn total_label_size(&self) -> usize {
        self.edges.iter().map(|e| e.labels.len()).sum()
    }

    /// Number of root-to-`v` paths for every node.
    pub fn paths_from_root(&self) -> Vec<u128> {
        let mut count = vec![0u128; self.node_count];
        count[ROOT] = 1;
        for &v in self.topological_order() {
            let c = count[v];
            if c == 0 {
                continue;
            }
            for &e in &self.out_adj[v] {
                let t = self.edges[e].to;
                count[t] = count[t].saturating_add(c);
            }
        }
        count
    }

    /// Number of `v`-to-leaf paths for every node.
    pub fn paths_to_leaf(&self) -> Vec<u128> {
        let mut count = vec![0u128; self.node_count];
        count[LEAF] = 1;
        for &v in self.topological_order().iter().rev() {
            if v == LEAF {
                continue;
            }
            let mut c = 0u128;
            for &e in &self.out_adj[v] {
                c = c.saturating_add(count[self.edges[e].to]);
            }
            count[v] = c;
        }
        count
    }

    pub fn num_paths(&self) -> u128 {
        self.paths_from_root()[LEAF]
    }

    /// `m_e` for every edge: (#root→e.from paths) × (#e.to→leaf paths).
    pub fn edge_multiplicities(&self) -> Vec<u128> {
        let fwd = self.paths_from_root();
        let bwd = self.paths_to_leaf();
        self.edges
            .iter()
            .map(|e| fwd[e.from].saturating_mul(bwd[e.to]))
            .collect()
    }

    /// Longest root-to-`v` distance in edges; `None` for nodes the root
    /// cannot reach.
    fn levels(&self) -> Vec<Option<usize>> {
        let mut level = vec![None; self.node_count];
        level[ROOT] = Some(0);
        for &v in self.topological_order() {
            let Some(lv) = level[v] else { continue };
            for &e in &self.out_adj[v] {
                let t = self.edges[e].to;
                level[t] = Some(level[t].map_or(lv + 1, |x: usize| x.max(lv + 1)));
            }
        }
        level
    }

    /// Maximum number of edges on a root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.levels()[LEAF].unwrap_or(0)
    }

    pub fn stats(&self) -> NzddStats {
        NzddStats {
            num_nodes: self.node_count,
            num_edges: self.edges.len(),
            total_label_size: self.total_label_size(),
            depth: self.depth(),
            num_paths: self.num_paths(),
            edge_multiplicity: self.edge_multiplicities(),
        }
    }

    /// Enumerates all root-to-leaf paths as edge lists, failing once more
    /// than `cap` paths exist.
    pub fn paths(&self, cap: usize) -> Result<Vec<Vec<EdgeId>>> {
        if self.is_acyclic() && self.num_paths() > cap as u128 {
            return Err(Error::PathCapExceeded { cap });
        }
        let mut out = Vec::new();
        let mut stack: Vec<(NodeId, usize)> = vec![(ROOT, 0)];
        let mut path: Vec<EdgeId> = Vec::new();
        while let Some(&(v, next)) = stack.last() {
            if v == LEAF {
                out.push(path.clone());
                if out.len() > cap {
                    return Err(Error::PathCapExceeded { cap });
                }
            } else if let Some(&e) = self.out_adj[v].get(next) {
                stack.last_mut().unwrap().1 += 1;
                path.push(e);
                stack.push((self.edges[e].to, 0));
                continue;
            }
            stack.pop();
            path.pop();
        }
        Ok(out)
    }

    /// Union of the labels along a path, sorted.
    pub fn path_set(&self, path: &[EdgeId]) -> Vec<u32> {
        let mut set: Vec<u32> = path
            .iter()
            .flat_map(|&e| self.edges[e].labels.iter().copied())
            .collect();
        set.sort_unstable();
        set
    }

    /// The represented family `{Φ(P)}`.
    pub fn language(&self, cap: usize) -> Result<SubsetFamily> {
        let sets = self
            .paths(cap)?
            .iter()
            .map(|p| self.path_set(p))
            .collect();
        SubsetFamily::from_sorted_sets(self.ground_size, sets)
    }

    /// Finds the root-to-leaf path spelling `set` (sorted), if any.
    pub fn find_path(&self, set: &[u32]) -> Option<Vec<EdgeId>> {
        // Depth-first search; an edge is viable only if its labels are a
        // subset of the elements not yet consumed.
        let mut remaining: Vec<bool> = vec![false; self.ground_size];
        for &x in set {
            if (x as usize) >= self.ground_size {
                return None;
            }
            remaining[x as usize] = true;
        }
        let mut left = set.len();
        let mut stack: Vec<(NodeId, usize)> = vec![(ROOT, 0)];
        let mut path: Vec<EdgeId> = Vec::new();
        while let Some(&(v, next)) = stack.last() {
            if v == LEAF && left == 0 {
                return Some(path);
            }
            let outs = &self.out_adj[v];
            let mut i = next;
            let mut found = None;
            while i < outs.len() {
                let e = outs[i];
                i += 1;
                if self.edges[e].labels.iter().all(|&x| remaining[x as usize]) {
                    found = Some(e);
                    break;
                }
            }
            stack.last_mut().unwrap().1 = i;
            match found {
                Some(e) => {
                    for &x in &self.edges[e].labels {
                        remaining[x as usize] = false;
                    }
                    left -= self.edges[e].labels.len();
                    path.push(e);
                    stack.push((self.edges[e].to, 0));
                }
                None => {
                    stack.pop();
                    if let Some(e) = path.pop() {
                        for &x in &self.edges[e].labels {
                            remaining[x as usize] = true;
                        }
                        left += self.edges[e].labels.len();
                    }
                }
            }
        }
        None
    }

    /// Checks the DAG shape and both structural conditions. Condition 2 is
    /// only checked when the diagram has at most `path_cap` paths.
    pub fn validate(&self, path_cap: usize) -> ValidationReport {
        let mut report = ValidationReport::default();
        for &e in &self.in_adj[ROOT] {
            report.violations.push(Violation::RootHasIncoming(e));
        }
        for &e in &self.out_adj[LEAF] {
            report.violations.push(Violation::LeafHasOutgoing(e));
        }
        let Some(order) = self.topo.as_deref() else {
            report.violations.push(Violation::Cycle);
            report.condition2_unverified = true;
            return report;
        };

        let fwd = self.paths_from_root();
        let bwd = self.paths_to_leaf();
        for v in 0..self.node_count {
            if fwd[v] == 0 || bwd[v] == 0 {
                report.violations.push(Violation::DeadNode(v));
            }
        }

        self.check_disjoint_labels(order, &mut report);

        if fwd[LEAF] > path_cap as u128 {
            report.condition2_unverified = true;
        } else if let Ok(paths) = self.paths(path_cap) {
            let mut seen: HashMap<Vec<u32>, usize> = HashMap::with_capacity(paths.len());
            for (i, p) in paths.iter().enumerate() {
                if let Some(&j) = seen.get(&self.path_set(p)) {
                    report.violations.push(Violation::DuplicatePathSet {
                        first: paths[j].clone(),
                        second: p.clone(),
                    });
                } else {
                    seen.insert(self.path_set(p), i);
                }
            }
        } else {
            report.condition2_unverified = true;
        }
        report
    }

    // Condition 1 without path enumeration: `seen[v]` holds every element on
    // some root→v prefix; an edge leaving v must avoid all of them.
    fn check_disjoint_labels(&self, order: &[NodeId], report: &mut ValidationReport) {
        let words = self.ground_size.div_ceil(64).max(1);
        let mut seen = vec![0u64; self.node_count * words];
        let has = |bits: &[u64], v: NodeId, x: u32| {
            bits[v * words + (x as usize >> 6)] >> (x & 63) & 1 == 1
        };
        for &v in order {
            for &e in &self.out_adj[v] {
                let edge = &self.edges[e];
                if let Some(&x) = edge.labels.iter().find(|&&x| has(&seen, v, x)) {
                    let first = self.earlier_edge_with(&seen, words, v, x);
                    report.violations.push(Violation::RepeatedElement {
                        element: x,
                        first,
                        second: e,
                    });
                }
                let t = edge.to;
                for w in 0..words {
                    let src = seen[v * words + w];
                    seen[t * words + w] |= src;
                }
                for &x in &edge.labels {
                    seen[t * words + (x as usize >> 6)] |= 1 << (x & 63);
                }
            }
        }
    }

    fn earlier_edge_with(&self, seen: &[u64], words: usize, mut v: NodeId, x: u32) -> EdgeId {
        let has = |u: NodeId| seen[u * words + (x as usize >> 6)] >> (x & 63) & 1 == 1;
        loop {
            let ins = &self.in_adj[v];
            if let Some(&e) = ins.iter().find(|&&e| self.edges[e].labels.contains(&x)) {
                return e;
            }
            let &e = ins
                .iter()
                .find(|&&e| has(self.edges[e].from))
                .expect("element reached v through some in-edge");
            v = self.edges[e].from;
        }
    }

    /// Inserts empty-labelled dummy nodes so every root-to-leaf path has
    /// exactly `depth()` edges. Existing node ids are kept.
    pub fn make_layered(&self) -> Nzdd {
        let level = self.levels();
        let mut node_count = self.node_count;
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (Some(lu), Some(lv)) = (level[e.from], level[e.to]) else {
                edges.push(e.clone());
                continue;
            };
            let gap = lv - lu;
            let mut from = e.from;
            for k in 0..gap - 1 {
                let dummy = node_count;
                node_count += 1;
                let labels = if k == 0 { e.labels.clone() } else { Vec::new() };
                edges.push(Edge::new(from, dummy, labels));
                from = dummy;
            }
            let labels = if gap == 1 { e.labels.clone() } else { Vec::new() };
            edges.push(Edge::new(from, e.to, labels));
        }
        Nzdd::from_parts(node_count, self.ground_size, edges)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// nzdd <node_count> <edge_count> <ground_size>
    /// <u> <v> [<label> ...]
    /// ```
    ///
    /// Lines starting with `#` and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Nzdd> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tok = line.split_whitespace();
            match header {
                None => {
                    if tok.next() != Some("nzdd") {
                        return Err(Error::parse(lineno, "expected header `nzdd <nodes> <edges> <ground>`"));
                    }
                    let mut nums = [0usize; 3];
                    for slot in &mut nums {
                        *slot = parse_num(tok.next(), lineno, "header field")?;
                    }
                    if tok.next().is_some() {
                        return Err(Error::parse(lineno, "trailing tokens after header"));
                    }
                    header = Some((nums[0], nums[1], nums[2]));
                }
                Some(_) => {
                    let u: usize = parse_num(tok.next(), lineno, "source node")?;
                    let v: usize = parse_num(tok.next(), lineno, "target node")?;
                    let labels = tok
                        .map(|t| {
                            t.parse::<u32>()
                                .map_err(|_| Error::parse(lineno, format!("bad label `{t}`")))
                        })
                        .collect::<Result<Vec<u32>>>()?;
                    edges.push((lineno, Edge::new(u, v, labels)));
                }
            }
        }
        let (nodes, edge_count, ground) =
            header.ok_or_else(|| Error::parse(0, "missing `nzdd` header"))?;
        if edges.len() != edge_count {
            return Err(Error::parse(
                0,
                format!("header declares {edge_count} edges, found {}", edges.len()),
            ));
        }
        let lines: Vec<usize> = edges.iter().map(|(l, _)| *l).collect();
        Nzdd::new(nodes, ground, edges.into_iter().map(|(_, e)| e).collect()).map_err(|err| {
            match err {
                Error::NodeOutOfRange { edge, .. }
                | Error::LabelOutOfRange { edge, .. }
                | Error::RepeatedLabel { edge, .. } => Error::parse(lines[edge], err.to_string()),
                other => other,
            }
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "nzdd {} {} {}",
            self.node_count,
            self.edges.len(),
            self.ground_size
        );
        for e in &self.edges {
            let _ = write!(s, "{} {}", e.from, e.to);
            for x in &e.labels {
                let _ = write!(s, " {x}");
            }
            s.push('\n');
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Nzdd> {
        Nzdd::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let t = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    t.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{t}`")))
}

fn kahn(
    node_count: usize,
    edges: &[Edge],
    out_adj: &[Vec<EdgeId>],
    in_adj: &[Vec<EdgeId>],
) -> Option<Vec<NodeId>> {
    let mut indeg: Vec<usize> = in_adj.iter().map(Vec::len).collect();
    // Seed with the root first so it leads the order whenever it is a source.
    let mut ready: Vec<NodeId> = (0..node_count).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(node_count);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &e in &out_adj[v] {
            let t = edges[e].to;
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.push(t);
            }
        }
    }
    (order.len() == node_count).then_some(order)
}
