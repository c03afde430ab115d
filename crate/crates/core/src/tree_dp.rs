//! Rooting and binarization of the spanning tree, and the dynamic program
//! that partitions it into `k` center-assigned subtrees of minimum cost.
//!
//! The DP state is `cost[u][j][c]`: the cheapest way to split the subtree at
//! `u` into `j` parts such that `u` lies in a part with center `c`, every
//! other part has its center inside itself, and if `c` lies in the subtree it
//! lies in `u`'s part. Candidate centers range over original points only;
//! dummy vertices introduced by binarization contribute zero connection cost
//! and can never host a center.

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::mst::SpanningTree;
use crate::objective::{cost_with_centers, tie_tol, Clustering, Mode, Objective};

/// The binarized rooted spanning tree. Original points keep their ids
/// `0..n`; dummies are appended after them.
#[derive(Clone, Debug)]
pub struct RootedBinaryTree {
    pub n_original: usize,
    pub node_count: usize,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub is_dummy: Vec<bool>,
    /// For dummies: the original vertex they were split from (bookkeeping).
    pub orig_index: Vec<usize>,
    postorder: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    /// Number of original points in each subtree.
    pub orig_count: Vec<usize>,
}

impl RootedBinaryTree {
    /// Constant-time ancestor test: is node `x` inside the subtree at `u`?
    #[inline]
    pub fn in_subtree(&self, x: usize, u: usize) -> bool {
        self.tin[u] <= self.tin[x] && self.tout[x] <= self.tout[u]
    }

    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    pub fn dummy_count(&self) -> usize {
        self.node_count - self.n_original
    }

    /// Edges of the tree obtained by contracting every dummy into its
    /// parent; recovers the input spanning tree.
    pub fn contracted_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.n_original.saturating_sub(1));
        for x in 0..self.n_original {
            if x == self.root {
                continue;
            }
            let mut anc = self.parent[x].expect("non-root has a parent");
            while self.is_dummy[anc] {
                anc = self.parent[anc].expect("dummy has a parent");
            }
            edges.push((x.min(anc), x.max(anc)));
        }
        edges.sort_unstable();
        edges
    }
}

/// Roots the spanning tree at `root_choice` and inserts dummy vertices so
/// every node has at most two children. Children are processed in ascending
/// index order and the first two children of an over-full node are paired
/// under a fresh dummy first, so the construction is deterministic.
pub fn root_and_binarize(t: &SpanningTree, root_choice: usize) -> Result<RootedBinaryTree> {
    let n = t.n;
    if root_choice >= n {
        return Err(Error::IndexOutOfRange {
            index: root_choice,
            n,
        });
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut visited = vec![false; n];
    visited[root_choice] = true;
    let mut queue = std::collections::VecDeque::from([root_choice]);
    while let Some(u) = queue.pop_front() {
        let mut nb = t.adjacency[u].clone();
        nb.sort_unstable();
        for v in nb {
            if !visited[v] {
                visited[v] = true;
                parent[v] = Some(u);
                children[u].push(v);
                queue.push_back(v);
            }
        }
    }
    if visited.iter().any(|&v| !v) {
        return Err(Error::Internal("spanning tree is not connected".into()));
    }
    let mut is_dummy = vec![false; n];
    let mut orig_index: Vec<usize> = (0..n).collect();

    let mut u = 0;
    while u < children.len() {
        while children[u].len() > 2 {
            let a = children[u].remove(0);
            let b = children[u].remove(0);
            let v = children.len();
            children[u].push(v);
            children.push(vec![a, b]);
            parent.push(Some(u));
            parent[a] = Some(v);
            parent[b] = Some(v);
            is_dummy.push(true);
            orig_index.push(orig_index[u]);
        }
        u += 1;
    }
    let node_count = children.len();
    debug_assert!(node_count <= 2 * n.saturating_sub(1).max(1));

    // Iterative DFS for preorder intervals, postorder, and subtree counts.
    let mut tin = vec![0usize; node_count];
    let mut tout = vec![0usize; node_count];
    let mut postorder = Vec::with_capacity(node_count);
    let mut orig_count = vec![0usize; node_count];
    let mut timer = 0usize;
    let mut stack: Vec<(usize, usize)> = vec![(root_choice, 0)];
    tin[root_choice] = timer;
    timer += 1;
    while let Some(&mut (u, ref mut ci)) = stack.last_mut() {
        if *ci < children[u].len() {
            let child = children[u][*ci];
            *ci += 1;
            tin[child] = timer;
            timer += 1;
            stack.push((child, 0));
        } else {
            tout[u] = timer;
            postorder.push(u);
            orig_count[u] = if is_dummy[u] { 0 } else { 1 };
            let acc: usize = children[u].iter().map(|&c| orig_count[c]).sum();
            orig_count[u] += acc;
            stack.pop();
        }
    }

    Ok(RootedBinaryTree {
        n_original: n,
        node_count,
        root: root_choice,
        parent,
        children,
        is_dummy,
        orig_index,
        postorder,
        tin,
        tout,
        orig_count,
    })
}

const CASE_LEAF: u8 = 0;
const CASE_NO: u8 = 1; // both children stay in u's part
const CASE_R: u8 = 2; // left continues, right starts new parts
const CASE_L: u8 = 3; // left starts new parts, right continues
const CASE_LR: u8 = 4; // both children start new parts
const CASE_JOIN: u8 = 5; // single child stays in u's part
const CASE_NEW: u8 = 6; // single child starts new parts

struct Tables {
    case_: Vec<u8>,
    split: Vec<u16>,
    best_arg: Vec<u32>,
    opt_cost: f64,
    opt_center: usize,
}

fn check_args(bt: &RootedBinaryTree, m: &MetricSpace, obj: &Objective, k: usize) -> Result<()> {
    let n = m.n();
    if bt.n_original != n {
        return Err(Error::InvalidParameter(format!(
            "tree has {} original points but metric has {}",
            bt.n_original, n
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    obj.validate_for(n)
}

fn fill_tables(
    bt: &RootedBinaryTree,
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
    track: bool,
) -> Result<Tables> {
    check_args(bt, m, obj, k)?;
    let n = m.n();
    let nn = bt.node_count;
    let sum_mode = obj.mode() == Mode::Sum;
    let inf = f64::INFINITY;

    let mut cost = vec![inf; nn * n * k];
    let (mut case_, mut split) = if track {
        (vec![CASE_LEAF; nn * n * k], vec![0u16; nn * n * k])
    } else {
        (Vec::new(), Vec::new())
    };
    let mut best = vec![inf; nn * k];
    let mut best_arg = vec![u32::MAX; nn * k];

    for &u in bt.postorder() {
        let dummy = bt.is_dummy[u];
        let u_orig = bt.orig_index[u];
        let kids = &bt.children[u];
        for c in 0..n {
            let fc = obj.open_cost(c);
            let gu = if dummy {
                0.0
            } else {
                obj.assign_cost(u_orig, m.dist(u_orig, c))
            };
            let head = if sum_mode { fc + gu } else { fc.max(gu) };
            // Parts other than u's own need centers among the subtree's
            // original points; u's part may draw originals from above when
            // its center is outside the subtree.
            let jcap = {
                let extra = if bt.in_subtree(c, u) { 0 } else { 1 };
                k.min(bt.orig_count[u] + extra)
            };
            let base = (u * n + c) * k;
            match kids.len() {
                0 => {
                    cost[base] = head;
                    if track {
                        case_[base] = CASE_LEAF;
                    }
                }
                1 => {
                    let a = kids[0];
                    let in_a = bt.in_subtree(c, a);
                    let abase = (a * n + c) * k;
                    for j in 1..=jcap {
                        let mut bv = inf;
                        let mut bc = CASE_LEAF;
                        let mut bs = 0u16;
                        // child joins u's part
                        let v = cost[abase + j - 1];
                        if v.is_finite() {
                            let tot = if sum_mode { head + v - fc } else { head.max(v) };
                            if tot < bv {
                                bv = tot;
                                bc = CASE_JOIN;
                                bs = j as u16;
                            }
                        }
                        // child starts its own parts (center must not sit below)
                        if !in_a && j >= 2 {
                            let v = best[a * k + j - 2];
                            if v.is_finite() {
                                let tot = if sum_mode { head + v } else { head.max(v) };
                                if tot < bv {
                                    bv = tot;
                                    bc = CASE_NEW;
                                    bs = (j - 1) as u16;
                                }
                            }
                        }
                        cost[base + j - 1] = bv;
                        if track && bv.is_finite() {
                            case_[base + j - 1] = bc;
                            split[base + j - 1] = bs;
                        }
                    }
                }
                2 => {
                    let a = kids[0];
                    let b = kids[1];
                    let in_a = bt.in_subtree(c, a);
                    let in_b = bt.in_subtree(c, b);
                    let abase = (a * n + c) * k;
                    let bbase = (b * n + c) * k;
                    for j in 1..=jcap {
                        let mut bv = inf;
                        let mut bc = CASE_LEAF;
                        let mut bs = 0u16;
                        // both children in u's part: jl + jr = j + 1
                        for jl in 1..=j {
                            let jr = j + 1 - jl;
                            let x = cost[abase + jl - 1];
                            let y = cost[bbase + jr - 1];
                            if x.is_finite() && y.is_finite() {
                                let tot = if sum_mode {
                                    head + x + y - 2.0 * fc
                                } else {
                                    head.max(x).max(y)
                                };
                                if tot < bv {
                                    bv = tot;
                                    bc = CASE_NO;
                                    bs = jl as u16;
                                }
                            }
                        }
                        // left continues, right starts new parts: jl + jr = j
                        if !in_b {
                            for jl in 1..j {
                                let jr = j - jl;
                                let x = cost[abase + jl - 1];
                                let y = best[b * k + jr - 1];
                                if x.is_finite() && y.is_finite() {
                                    let tot = if sum_mode {
                                        head + x + y - fc
                                    } else {
                                        head.max(x).max(y)
                                    };
                                    if tot < bv {
                                        bv = tot;
                                        bc = CASE_R;
                                        bs = jl as u16;
                                    }
                                }
                            }
                        }
                        // left starts new parts, right continues: jl + jr = j
                        if !in_a {
                            for jl in 1..j {
                                let jr = j - jl;
                                let x = best[a * k + jl - 1];
                                let y = cost[bbase + jr - 1];
                                if x.is_finite() && y.is_finite() {
                                    let tot = if sum_mode {
                                        head + x + y - fc
                                    } else {
                                        head.max(x).max(y)
                                    };
                                    if tot < bv {
                                        bv = tot;
                                        bc = CASE_L;
                                        bs = jl as u16;
                                    }
                                }
                            }
                        }
                        // both children start new parts: jl + jr = j - 1
                        if !in_a && !in_b && j >= 3 {
                            for jl in 1..(j - 1) {
                                let jr = j - 1 - jl;
                                let x = best[a * k + jl - 1];
                                let y = best[b * k + jr - 1];
                                if x.is_finite() && y.is_finite() {
                                    let tot = if sum_mode {
                                        head + x + y
                                    } else {
                                        head.max(x).max(y)
                                    };
                                    if tot < bv {
                                        bv = tot;
                                        bc = CASE_LR;
                                        bs = jl as u16;
                                    }
                                }
                            }
                        }
                        cost[base + j - 1] = bv;
                        if track && bv.is_finite() {
                            case_[base + j - 1] = bc;
                            split[base + j - 1] = bs;
                        }
                    }
                }
                _ => {
                    return Err(Error::Internal(
                        "binarized tree has a node with more than two children".into(),
                    ))
                }
            }
        }
        // Aggregate the cheapest way to close a part rooted in this subtree:
        // min over original centers inside it (ascending index on ties).
        for j in 1..=k.min(bt.orig_count[u]) {
            let mut bv = inf;
            let mut ba = u32::MAX;
            for c in 0..n {
                if bt.in_subtree(c, u) {
                    let v = cost[(u * n + c) * k + j - 1];
                    if v < bv {
                        bv = v;
                        ba = c as u32;
                    }
                }
            }
            best[u * k + j - 1] = bv;
            best_arg[u * k + j - 1] = ba;
        }
    }

    let root = bt.root;
    let mut opt_cost = inf;
    let mut opt_center = usize::MAX;
    for c in 0..n {
        let v = cost[(root * n + c) * k + k - 1];
        if v < opt_cost {
            opt_cost = v;
            opt_center = c;
        }
    }
    if !opt_cost.is_finite() {
        return Err(Error::Internal(
            "dynamic program found no feasible partition".into(),
        ));
    }
    Ok(Tables {
        case_,
        split,
        best_arg,
        opt_cost,
        opt_center,
    })
}

/// Optimal cost of partitioning the tree into exactly `k` center-assigned
/// subtrees; identical to [`dp_cluster`]'s cost, without reconstruction.
pub fn dp_cost_only(
    bt: &RootedBinaryTree,
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
) -> Result<f64> {
    Ok(fill_tables(bt, m, obj, k, false)?.opt_cost)
}

/// Runs the DP and reconstructs the optimal tree-respecting clustering.
pub fn dp_cluster(
    bt: &RootedBinaryTree,
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
) -> Result<Clustering> {
    let t = fill_tables(bt, m, obj, k, true)?;
    let n = m.n();
    let kk = k;
    let mut center_of = vec![usize::MAX; bt.node_count];
    let mut stack = vec![(bt.root, kk, t.opt_center)];
    while let Some((u, j, c)) = stack.pop() {
        center_of[u] = c;
        let id = (u * n + c) * kk + j - 1;
        let jl = t.split[id] as usize;
        match t.case_[id] {
            CASE_LEAF => {}
            CASE_JOIN => {
                stack.push((bt.children[u][0], j, c));
            }
            CASE_NEW => {
                let a = bt.children[u][0];
                let ca = t.best_arg[a * kk + jl - 1] as usize;
                stack.push((a, jl, ca));
            }
            CASE_NO => {
                let (a, b) = (bt.children[u][0], bt.children[u][1]);
                stack.push((a, jl, c));
                stack.push((b, j + 1 - jl, c));
            }
            CASE_R => {
                let (a, b) = (bt.children[u][0], bt.children[u][1]);
                let jr = j - jl;
                let cb = t.best_arg[b * kk + jr - 1] as usize;
                stack.push((a, jl, c));
                stack.push((b, jr, cb));
            }
            CASE_L => {
                let (a, b) = (bt.children[u][0], bt.children[u][1]);
                let ca = t.best_arg[a * kk + jl - 1] as usize;
                stack.push((a, jl, ca));
                stack.push((b, j - jl, c));
            }
            CASE_LR => {
                let (a, b) = (bt.children[u][0], bt.children[u][1]);
                let jr = j - 1 - jl;
                let ca = t.best_arg[a * kk + jl - 1] as usize;
                let cb = t.best_arg[b * kk + jr - 1] as usize;
                stack.push((a, jl, ca));
                stack.push((b, jr, cb));
            }
            other => {
                return Err(Error::Internal(format!("corrupt backpointer {other}")));
            }
        }
    }

    // Dummies dissolve into their parts; originals carry the partition.
    let mut cluster_of_center = vec![usize::MAX; n];
    let mut assignment = Vec::with_capacity(n);
    let mut centers = Vec::new();
    for p in 0..n {
        let c = center_of[p];
        if c == usize::MAX {
            return Err(Error::Internal(format!("point {p} left unassigned")));
        }
        if cluster_of_center[c] == usize::MAX {
            centers.push(c);
            cluster_of_center[c] = centers.len();
        }
        assignment.push(cluster_of_center[c]);
    }
    if centers.len() != k {
        return Err(Error::Internal(format!(
            "reconstruction produced {} parts for k = {}",
            centers.len(),
            k
        )));
    }
    let clustering = Clustering {
        assignment,
        centers,
        cost: t.opt_cost,
        k,
    };
    // The DP value must match a recomputation with the chosen centers.
    let recomputed = cost_with_centers(&clustering.assignment, &clustering.centers, m, obj)?;
    if (recomputed - t.opt_cost).abs() > tie_tol(recomputed) {
        return Err(Error::Internal(format!(
            "dp cost {} disagrees with recomputed cost {}",
            t.opt_cost, recomputed
        )));
    }
    Ok(clustering)
}

/// Convenience pipeline: Kruskal MST, root at point 0, binarize, run the DP.
pub fn cluster(m: &MetricSpace, obj: &Objective, k: usize) -> Result<Clustering> {
    let t = crate::mst::kruskal(m);
    let bt = root_and_binarize(&t, 0)?;
    dp_cluster(&bt, m, obj, k)
}
