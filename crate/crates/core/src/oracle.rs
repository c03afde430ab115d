//! Exhaustive exact solvers used as ground truth at small `n`.
//!
//! All three solvers report results in the same canonical form so partitions
//! can be compared across solvers: the assignment vector labels clusters
//! `1..=k` in order of first appearance, which is the same as sorting blocks
//! by their smallest element.

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::mst::SpanningTree;
use crate::objective::{center_score, fold, Mode, Objective};
use serde::Serialize;

pub const BRUTE_FORCE_CAP: usize = 13;
pub const CENTER_ENUM_CAP: usize = 20;
/// Tied-optimum partitions kept per result; enough to detect non-uniqueness
/// and inspect small ties without storing an exponential list.
pub const MAX_REPORTED_PARTITIONS: usize = 128;
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub optimal_cost: f64,
    /// Canonical assignments attaining the optimum, lexicographically sorted.
    pub optimal_partitions: Vec<Vec<usize>>,
    pub unique: bool,
    /// Number of candidate partitions scored.
    pub evaluated: u64,
    /// True when ties were dropped at [`MAX_REPORTED_PARTITIONS`].
    pub truncated: bool,
}

/// Relabels an assignment so cluster ids appear in first-occurrence order.
pub fn canonicalize(assignment: &[usize]) -> Vec<usize> {
    let mut map: Vec<usize> = vec![0; assignment.len() + 1];
    let mut next = 0usize;
    let mut out = Vec::with_capacity(assignment.len());
    for &a in assignment {
        if map[a] == 0 {
            next += 1;
            map[a] = next;
        }
        out.push(map[a]);
    }
    out
}

/// Running minimum plus the set of partitions within tolerance of it.
struct Tracker {
    tie_tol: f64,
    best: f64,
    parts: Vec<(f64, Vec<usize>)>,
    evaluated: u64,
    truncated: bool,
}

impl Tracker {
    fn new(tie_tol: f64) -> Self {
        Tracker {
            tie_tol,
            best: f64::INFINITY,
            parts: Vec::new(),
            evaluated: 0,
            truncated: false,
        }
    }

    fn abs_tol(&self) -> f64 {
        f64::max(1e-12, self.tie_tol * self.best.abs())
    }

    fn offer(&mut self, cost: f64, assignment: &[usize]) {
        self.evaluated += 1;
        if !cost.is_finite() {
            return;
        }
        if cost < self.best {
            self.best = cost;
            let tol = self.abs_tol();
            self.parts.retain(|(c, _)| *c <= self.best + tol);
            self.truncated = false;
        } else if cost > self.best + self.abs_tol() {
            return;
        }
        let canon = canonicalize(assignment);
        if self.parts.iter().any(|(_, p)| *p == canon) {
            return;
        }
        if self.parts.len() >= MAX_REPORTED_PARTITIONS {
            self.truncated = true;
            return;
        }
        self.parts.push((cost, canon));
    }

    fn finish(mut self) -> Result<OracleResult> {
        if !self.best.is_finite() {
            return Err(Error::Internal("oracle scored no partition".into()));
        }
        let tol = self.abs_tol();
        let best = self.best;
        self.parts.retain(|(c, _)| *c <= best + tol);
        let mut partitions: Vec<Vec<usize>> = self.parts.into_iter().map(|(_, p)| p).collect();
        partitions.sort_unstable();
        Ok(OracleResult {
            optimal_cost: best,
            unique: partitions.len() == 1 && !self.truncated,
            optimal_partitions: partitions,
            evaluated: self.evaluated,
            truncated: self.truncated,
        })
    }
}

/// Allocation-free assignment scoring for the enumeration hot loops;
/// agrees with `clustering_cost` by construction (same per-cluster optimum).
fn score_assignment(
    assignment: &[usize],
    k: usize,
    m: &MetricSpace,
    obj: &Objective,
    buf: &mut Vec<Vec<usize>>,
) -> f64 {
    while buf.len() < k {
        buf.push(Vec::new());
    }
    for b in buf.iter_mut() {
        b.clear();
    }
    for (p, &a) in assignment.iter().enumerate() {
        buf[a - 1].push(p);
    }
    let mut total = 0.0;
    for members in buf[..k].iter() {
        let mut best = f64::INFINITY;
        for &c in members {
            let s = center_score(members, c, m, obj);
            if s < best {
                best = s;
            }
        }
        total = fold(obj.mode(), total, best);
    }
    total
}

fn check_nk(n: usize, k: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::SizeCap { n, cap });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(())
}

/// Scores every set partition of the points into exactly `k` non-empty
/// blocks, enumerated as restricted growth strings.
pub fn brute_force_optimal(
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
    tie_tol: f64,
) -> Result<OracleResult> {
    let n = m.n();
    check_nk(n, k, BRUTE_FORCE_CAP)?;
    if !(tie_tol.is_finite() && tie_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tie tolerance must be finite and non-negative, got {tie_tol}"
        )));
    }
    obj.validate_for(n)?;
    let mut tracker = Tracker::new(tie_tol);

    // Restricted growth string: a[0] = 0, a[i] <= max(a[0..i]) + 1.
    let mut a = vec![0usize; n];
    let mut mx = vec![0usize; n]; // mx[i] = max(a[0..=i])
    let mut assignment = vec![0usize; n];
    let mut buf: Vec<Vec<usize>> = Vec::new();
    loop {
        if mx[n - 1] + 1 == k {
            for i in 0..n {
                assignment[i] = a[i] + 1;
            }
            let cost = score_assignment(&assignment, k, m, obj, &mut buf);
            tracker.offer(cost, &assignment);
        }
        // next string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return tracker.finish();
            }
            if a[i] <= mx[i - 1] && a[i] < k {
                a[i] += 1;
                mx[i] = mx[i - 1].max(a[i]);
                break;
            }
            i -= 1;
        }
        for j in (i + 1)..n {
            a[j] = 0;
            mx[j] = mx[j - 1];
        }
    }
}

/// Scores every way of deleting `k - 1` edges of the spanning tree; the
/// resulting components are the candidate clusters.
pub fn tree_partition_optimal(
    t: &SpanningTree,
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
) -> Result<OracleResult> {
    let n = m.n();
    check_nk(n, k, BRUTE_FORCE_CAP)?;
    if t.n != n {
        return Err(Error::InvalidParameter(format!(
            "spanning tree over {} points but metric has {}",
            t.n, n
        )));
    }
    obj.validate_for(n)?;
    let e = t.edges.len();
    debug_assert_eq!(e, n - 1);
    let mut tracker = Tracker::new(DEFAULT_TIE_TOL);

    // Choose k-1 edge indices to delete, in lexicographic order.
    let d = k - 1;
    let mut pick: Vec<usize> = (0..d).collect();
    let mut assignment = vec![0usize; n];
    let mut buf: Vec<Vec<usize>> = Vec::new();
    loop {
        let mut uf = crate::mst::UnionFind::new(n);
        let mut deleted = vec![false; e];
        for &x in &pick {
            deleted[x] = true;
        }
        for (idx, edge) in t.edges.iter().enumerate() {
            if !deleted[idx] {
                uf.union(edge.i, edge.j);
            }
        }
        let mut label = vec![0usize; n];
        let mut next = 0usize;
        for (p, slot) in assignment.iter_mut().enumerate() {
            let r = uf.find(p);
            if label[r] == 0 {
                next += 1;
                label[r] = next;
            }
            *slot = label[r];
        }
        debug_assert_eq!(next, k);
        let cost = score_assignment(&assignment, k, m, obj, &mut buf);
        tracker.offer(cost, &assignment);

        // next combination
        if d == 0 {
            break;
        }
        let mut i = d;
        loop {
            if i == 0 {
                return tracker.finish();
            }
            i -= 1;
            if pick[i] < e - (d - i) {
                pick[i] += 1;
                for j in (i + 1)..d {
                    pick[j] = pick[j - 1] + 1;
                }
                if pick[d - 1] < e {
                    break;
                }
            }
        }
    }
    tracker.finish()
}

/// Scores every `k`-subset of points as a center set, assigning each point
/// to its cheapest center. Sound for Sum-mode objectives with monotone `g`,
/// where the induced assignment is optimal for the fixed centers.
pub fn center_enumeration_optimal(
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
) -> Result<OracleResult> {
    let n = m.n();
    check_nk(n, k, CENTER_ENUM_CAP)?;
    if obj.mode() != Mode::Sum {
        return Err(Error::InvalidParameter(
            "center enumeration supports Sum mode only".into(),
        ));
    }
    obj.validate_for(n)?;
    let mut tracker = Tracker::new(DEFAULT_TIE_TOL);

    let mut centers: Vec<usize> = (0..k).collect();
    let mut assignment = vec![0usize; n];
    loop {
        let mut cost: f64 = centers.iter().map(|&c| obj.open_cost(c)).sum();
        for p in 0..n {
            let mut best = f64::INFINITY;
            let mut arg = 0usize;
            for (ci, &c) in centers.iter().enumerate() {
                let v = if p == c {
                    obj.assign_cost(p, 0.0)
                } else {
                    obj.assign_cost(p, m.dist(p, c))
                };
                if v < best {
                    best = v;
                    arg = ci;
                }
            }
            // A center always stays with itself.
            if let Some(ci) = centers.iter().position(|&c| c == p) {
                arg = ci;
                best = obj.assign_cost(p, 0.0);
            }
            assignment[p] = arg + 1;
            cost += best;
        }
        tracker.offer(cost, &assignment);

        // next k-subset of 0..n
        let mut i = k;
        loop {
            if i == 0 {
                return tracker.finish();
            }
            i -= 1;
            if centers[i] < n - (k - i) {
                centers[i] += 1;
                for j in (i + 1)..k {
                    centers[j] = centers[j - 1] + 1;
                }
                break;
            }
        }
    }
}
