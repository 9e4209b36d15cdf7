//! ZDD construction from a subset family and the two-phase contraction that
//! turns it into a smaller NZDD.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::family::SubsetFamily;
use crate::nzdd::{Edge, Nzdd, NodeId, NzddStats, LEAF, ROOT};

/// Order in which elements are branched on along every path.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ElementOrder {
    /// Most frequent element first, ties broken by smaller id.
    #[default]
    Frequency,
    /// Ascending element id.
    Natural,
    /// `order[r]` is the element tested at rank `r`; must be a permutation.
    Explicit(Vec<u32>),
}

impl ElementOrder {
    fn resolve(&self, family: &SubsetFamily) -> Result<Vec<u32>> {
        let n = family.ground_size();
        match self {
            ElementOrder::Natural => Ok((0..n as u32).collect()),
            ElementOrder::Frequency => {
                let freq = family.element_frequencies();
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_by(|&a, &b| freq[b as usize].cmp(&freq[a as usize]).then(a.cmp(&b)));
                Ok(order)
            }
            ElementOrder::Explicit(order) => {
                if order.len() != n {
                    return Err(Error::InvalidOrder(format!(
                        "expected {n} elements, got {}",
                        order.len()
                    )));
                }
                let mut seen = vec![false; n];
                for &x in order {
                    if x as usize >= n || seen[x as usize] {
                        return Err(Error::InvalidOrder(format!(
                            "{x} is out of range or repeated"
                        )));
                    }
                    seen[x as usize] = true;
                }
                Ok(order.clone())
            }
        }
    }
}

// Node handle during construction: 0 is the leaf, i + 1 is inner node i.
type Handle = u32;
const LEAF_HANDLE: Handle = 0;

enum Frame {
    Enter { ids: Vec<u32>, depth: usize },
    Exit { rank: u32, has_lo: bool },
}

/// Builds a ZDD-shaped NZDD whose language is `family`. Every edge carries a
/// single element or nothing, and elements appear along each path in the
/// order given by `order`. Nodes representing equal sub-families are shared.
pub fn build_zdd(family: &SubsetFamily, order: &ElementOrder) -> Result<Nzdd> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let order = order.resolve(family)?;
    let mut rank = vec![0u32; order.len()];
    for (r, &x) in order.iter().enumerate() {
        rank[x as usize] = r as u32;
    }
    let seqs: Vec<Vec<u32>> = family
        .sets()
        .iter()
        .map(|s| {
            let mut r: Vec<u32> = s.iter().map(|&x| rank[x as usize]).collect();
            r.sort_unstable();
            r
        })
        .collect();
    let mut ids: Vec<u32> = (0..seqs.len() as u32).collect();
    ids.sort_by(|&a, &b| seqs[a as usize].cmp(&seqs[b as usize]));

    // Every family reached by the recursion holds sets that agree on their
    // first `depth` ranks, and its ids stay sorted by the remaining suffix.
    let mut nodes: Vec<(u32, Handle, Option<Handle>)> = Vec::new();
    let mut unique: HashMap<(u32, Handle, Option<Handle>), Handle> = HashMap::new();
    let mut results: Vec<Handle> = Vec::new();
    let mut stack = vec![Frame::Enter { ids, depth: 0 }];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Enter { ids, depth } => {
                let suffix = |id: u32| &seqs[id as usize][depth..];
                if ids.len() == 1 && suffix(ids[0]).is_empty() {
                    results.push(LEAF_HANDLE);
                    continue;
                }
                let first = usize::from(suffix(ids[0]).is_empty());
                let a = suffix(ids[first])[0];
                let end = first + ids[first..].partition_point(|&id| suffix(id)[0] == a);
                let hi: Vec<u32> = ids[first..end].to_vec();
                let mut lo: Vec<u32> = ids[..first].to_vec();
                lo.extend_from_slice(&ids[end..]);
                stack.push(Frame::Exit {
                    rank: a,
                    has_lo: !lo.is_empty(),
                });
                if !lo.is_empty() {
                    stack.push(Frame::Enter { ids: lo, depth });
                }
                stack.push(Frame::Enter {
                    ids: hi,
                    depth: depth + 1,
                });
            }
            Frame::Exit { rank, has_lo } => {
                let lo = if has_lo { results.pop() } else { None };
                let hi = results.pop().expect("hi result");
                let key = (rank, hi, lo);
                let h = *unique.entry(key).or_insert_with(|| {
                    nodes.push(key);
                    nodes.len() as Handle
                });
                results.push(h);
            }
        }
    }
    let top = results.pop().expect("top result");
    debug_assert!(results.is_empty());

    if top == LEAF_HANDLE {
        return Ok(Nzdd::from_parts(2, family.ground_size(), vec![Edge::new(ROOT, LEAF, vec![])]));
    }
    // Top node becomes the root; the rest are numbered from the top down.
    let count = nodes.len();
    let node_id = |h: Handle| -> NodeId {
        if h == LEAF_HANDLE {
            LEAF
        } else if h == top {
            ROOT
        } else {
            2 + (count - 1 - h as usize)
        }
    };
    let mut edges = Vec::with_capacity(2 * count);
    let mut handles: Vec<Handle> = (1..=count as Handle).collect();
    handles.sort_by_key(|&h| node_id(h));
    for h in handles {
        let (r, hi, lo) = nodes[h as usize - 1];
        let u = node_id(h);
        edges.push(Edge::new(u, node_id(hi), vec![order[r as usize]]));
        if let Some(lo) = lo {
            edges.push(Edge::new(u, node_id(lo), vec![]));
        }
    }
    Ok(Nzdd::from_parts(count + 1, family.ground_size(), edges))
}

struct Work {
    from: Vec<NodeId>,
    to: Vec<NodeId>,
    labels: Vec<Vec<u32>>,
    alive: Vec<bool>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    outdeg: Vec<usize>,
    indeg: Vec<usize>,
}

impl Work {
    fn add(&mut self, u: NodeId, v: NodeId, labels: Vec<u32>) {
        let id = self.from.len();
        self.from.push(u);
        self.to.push(v);
        self.labels.push(labels);
        self.alive.push(true);
        self.out[u].push(id);
        self.inn[v].push(id);
        self.outdeg[u] += 1;
        self.indeg[v] += 1;
    }

    fn kill(&mut self, e: usize) {
        self.alive[e] = false;
        self.outdeg[self.from[e]] -= 1;
        self.indeg[self.to[e]] -= 1;
    }
}

fn merge_labels(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Contracts internal nodes with a single incoming edge (children first),
/// then internal nodes with a single outgoing edge (parents first), merging
/// the labels of the two edges being joined. The language is unchanged.
pub fn reduce(g: &Nzdd) -> Nzdd {
    let n = g.node_count();
    let mut w = Work {
        from: Vec::new(),
        to: Vec::new(),
        labels: Vec::new(),
        alive: Vec::new(),
        out: vec![Vec::new(); n],
        inn: vec![Vec::new(); n],
        outdeg: vec![0; n],
        indeg: vec![0; n],
    };
    for e in g.edges() {
        w.add(e.from, e.to, e.labels.clone());
    }
    // New edges always join an ancestor to a descendant, so the original
    // topological order stays valid throughout.
    let topo = g.topological_order().to_vec();

    for &u in topo.iter().rev() {
        let mut i = 0;
        while i < w.out[u].len() {
            let e = w.out[u][i];
            i += 1;
            if !w.alive[e] {
                continue;
            }
            let v = w.to[e];
            if v == LEAF || w.indeg[v] != 1 {
                continue;
            }
            let children: Vec<usize> = w.out[v].iter().copied().filter(|&c| w.alive[c]).collect();
            for c in children {
                let labels = merge_labels(&w.labels[e], &w.labels[c]);
                let target = w.to[c];
                w.kill(c);
                w.add(u, target, labels);
            }
            w.kill(e);
            w.out[v].clear();
        }
    }

    for &v in &topo {
        let mut i = 0;
        while i < w.inn[v].len() {
            let e = w.inn[v][i];
            i += 1;
            if !w.alive[e] {
                continue;
            }
            let u = w.from[e];
            if u == ROOT || w.outdeg[u] != 1 {
                continue;
            }
            let parents: Vec<usize> = w.inn[u].iter().copied().filter(|&p| w.alive[p]).collect();
            for p in parents {
                let labels = merge_labels(&w.labels[p], &w.labels[e]);
                let source = w.from[p];
                w.kill(p);
                w.add(source, v, labels);
            }
            w.kill(e);
            w.inn[u].clear();
        }
    }

    let mut new_id = vec![usize::MAX; n];
    new_id[ROOT] = ROOT;
    new_id[LEAF] = LEAF;
    let mut next = 2;
    for v in 2..n {
        if w.outdeg[v] + w.indeg[v] > 0 {
            new_id[v] = next;
            next += 1;
        }
    }
    let edges = (0..w.from.len())
        .filter(|&e| w.alive[e])
        .map(|e| Edge {
            from: new_id[w.from[e]],
            to: new_id[w.to[e]],
            labels: std::mem::take(&mut w.labels[e]),
        })
        .collect();
    Nzdd::from_parts(next, g.ground_size(), edges)
}

/// `reduce(build_zdd(family))` with statistics of the result.
pub fn compress(family: &SubsetFamily, order: &ElementOrder) -> Result<(Nzdd, NzddStats)> {
    let g = reduce(&build_zdd(family, order)?);
    let stats = g.stats();
    Ok((g, stats))
}

/// Internal nodes with exactly one incoming or exactly one outgoing edge.
pub fn contractible_nodes(g: &Nzdd) -> Vec<NodeId> {
    (2..g.node_count())
        .filter(|&v| g.in_edges(v).len() == 1 || g.out_edges(v).len() == 1)
        .collect()
}
