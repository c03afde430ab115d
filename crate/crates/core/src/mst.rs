//! Kruskal's minimum spanning tree over the complete distance graph, subtree
//! connectivity tests, and the single-linkage stopping variant.
//!
//! Edges are considered in the deterministic total order
//! `(weight, min endpoint, max endpoint)` ascending, so the edge list is
//! bit-identical across runs for identical input.

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct MstEdge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree {
    pub n: usize,
    /// `n - 1` edges in Kruskal insertion order.
    pub edges: Vec<MstEdge>,
    pub adjacency: Vec<Vec<usize>>,
}

impl SpanningTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Debug dump: one `i,j,weight` line per edge, insertion order.
    pub fn edges_csv(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{},{},{}\n", e.i, e.j, e.weight));
        }
        out
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    pub components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns true if the sets were merged (i.e. they were distinct).
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.components -= 1;
        true
    }
}

fn sorted_pairs(m: &MetricSpace) -> Vec<(usize, usize)> {
    let n = m.n();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable_by(|&(ai, aj), &(bi, bj)| {
        m.dist(ai, aj)
            .total_cmp(&m.dist(bi, bj))
            .then(ai.cmp(&bi))
            .then(aj.cmp(&bj))
    });
    pairs
}

/// Minimum spanning tree of the complete graph on the metric space.
pub fn kruskal(m: &MetricSpace) -> SpanningTree {
    let n = m.n();
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut adjacency = vec![Vec::new(); n];
    for (i, j) in sorted_pairs(m) {
        if uf.union(i, j) {
            adjacency[i].push(j);
            adjacency[j].push(i);
            edges.push(MstEdge {
                i,
                j,
                weight: m.dist(i, j),
            });
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    SpanningTree {
        n,
        edges,
        adjacency,
    }
}

/// True iff the induced subgraph of the tree on `members` is connected, i.e.
/// the tree path between any two members stays inside the set.
pub fn is_subtree_connected(t: &SpanningTree, members: &[usize]) -> Result<bool> {
    if members.is_empty() {
        return Err(Error::EmptyInput("empty member set"));
    }
    let mut in_set = vec![false; t.n];
    for &p in members {
        if p >= t.n {
            return Err(Error::IndexOutOfRange { index: p, n: t.n });
        }
        in_set[p] = true;
    }
    let mut seen = vec![false; t.n];
    let mut stack = vec![members[0]];
    seen[members[0]] = true;
    let mut count = 0usize;
    while let Some(u) = stack.pop() {
        count += 1;
        for &v in &t.adjacency[u] {
            if in_set[v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    let distinct = (0..t.n).filter(|&p| in_set[p]).count();
    Ok(count == distinct)
}

/// Stops Kruskal when exactly `k` components remain and returns the component
/// labels as a canonical 1-based assignment (single-linkage clustering).
pub fn single_linkage_components(m: &MetricSpace, k: usize) -> Result<Vec<usize>> {
    let n = m.n();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut uf = UnionFind::new(n);
    if k < n {
        for (i, j) in sorted_pairs(m) {
            if uf.union(i, j) && uf.components == k {
                break;
            }
        }
    }
    let mut label = vec![0usize; n];
    let mut next = 0usize;
    let mut assignment = Vec::with_capacity(n);
    let mut root_label = vec![usize::MAX; n];
    for p in 0..n {
        let r = uf.find(p);
        if root_label[r] == usize::MAX {
            next += 1;
            root_label[r] = next;
        }
        label[p] = root_label[r];
        assignment.push(label[p]);
    }
    Ok(assignment)
}
