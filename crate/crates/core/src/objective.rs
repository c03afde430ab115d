//! Natural center-based objectives: an opening cost `f(c)` per candidate
//! center, a connection cost `g(u, r)` per point and distance, and a Sum or
//! Max aggregation across clusters. Cluster and clustering costs, optimal
//! centers, and Lloyd's improvements live here.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

/// Relative tolerance used when deciding that two costs tie.
pub const TIE_REL_TOL: f64 = 1e-9;
/// Absolute floor under the relative tie tolerance.
pub const TIE_ABS_FLOOR: f64 = 1e-12;

#[inline]
pub(crate) fn tie_tol(scale: f64) -> f64 {
    (TIE_REL_TOL * scale.abs()).max(TIE_ABS_FLOOR)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Total cost is the sum of cluster costs.
    Sum,
    /// Total cost is the maximum of cluster costs; 0 is the identity, so in
    /// this mode `f` and `g` must be nonnegative.
    Max,
}

#[derive(Clone)]
enum Kind {
    KMedian,
    KMeans,
    KCenter,
    Facility {
        opening: Vec<f64>,
    },
    Custom {
        open: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
        assign: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
    },
}

/// A natural center-based objective `(f, g, mode)`.
///
/// User-supplied `f`/`g` for custom objectives must be pure and safe to call
/// concurrently; the library may evaluate them from multiple threads.
#[derive(Clone)]
pub struct Objective {
    name: String,
    mode: Mode,
    kind: Kind,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .finish()
    }
}

impl Objective {
    /// k-median: `f = 0`, `g(r) = r`, Sum mode.
    pub fn kmedian() -> Self {
        Self {
            name: "kmedian".into(),
            mode: Mode::Sum,
            kind: Kind::KMedian,
        }
    }

    /// k-means: `f = 0`, `g(r) = r^2`, Sum mode.
    pub fn kmeans() -> Self {
        Self {
            name: "kmeans".into(),
            mode: Mode::Sum,
            kind: Kind::KMeans,
        }
    }

    /// k-center: `f = 0`, `g(r) = r`, Max mode.
    pub fn kcenter() -> Self {
        Self {
            name: "kcenter".into(),
            mode: Mode::Max,
            kind: Kind::KCenter,
        }
    }

    /// Facility location: per-point opening costs, `g(r) = r`, Sum mode.
    pub fn facility_location(opening: Vec<f64>) -> Result<Self> {
        if opening.is_empty() {
            return Err(Error::EmptyInput("no opening costs given"));
        }
        for (i, &c) in opening.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "opening cost for point {i} is {c}; must be finite and nonnegative"
                )));
            }
        }
        Ok(Self {
            name: "facility_location".into(),
            mode: Mode::Sum,
            kind: Kind::Facility { opening },
        })
    }

    /// Looks a builtin up by name. `facility_location` requires opening costs.
    pub fn builtin(name: &str, opening: Option<Vec<f64>>) -> Result<Self> {
        match name {
            "kmedian" => Ok(Self::kmedian()),
            "kmeans" => Ok(Self::kmeans()),
            "kcenter" => Ok(Self::kcenter()),
            "facility_location" => {
                let opening = opening.ok_or_else(|| {
                    Error::InvalidParameter(
                        "facility_location requires a vector of opening costs".into(),
                    )
                })?;
                Self::facility_location(opening)
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown objective '{other}'"
            ))),
        }
    }

    /// A user-defined objective from two callables. Monotonicity of `g` and
    /// (in Max mode) nonnegativity cannot be proven from a black box; use
    /// [`Objective::sample_warnings`] to spot-check them on a grid.
    pub fn custom(
        name: impl Into<String>,
        mode: Mode,
        open: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
        assign: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
    ) -> Self {
        Self {
            name: name.into(),
            mode,
            kind: Kind::Custom { open, assign },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Opening cost `f(c)`.
    #[inline]
    pub fn open_cost(&self, c: usize) -> f64 {
        match &self.kind {
            Kind::KMedian | Kind::KMeans | Kind::KCenter => 0.0,
            Kind::Facility { opening } => opening[c],
            Kind::Custom { open, .. } => open(c),
        }
    }

    /// Connection cost `g(u, r)`.
    #[inline]
    pub fn assign_cost(&self, u: usize, r: f64) -> f64 {
        match &self.kind {
            Kind::KMedian | Kind::KCenter => r,
            Kind::KMeans => r * r,
            Kind::Facility { .. } => r,
            Kind::Custom { assign, .. } => assign(u, r),
        }
    }

    /// Checks that this objective can score an `n`-point instance.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if let Kind::Facility { opening } = &self.kind {
            if opening.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "facility_location has {} opening costs for {} points",
                    opening.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    /// Samples `g` on a grid of radii for each point and reports any detected
    /// non-monotonicity (and, in Max mode, negative `f`/`g` values). Warnings
    /// only; detection is best-effort by construction.
    pub fn sample_warnings(&self, n: usize, r_max: f64, steps: usize) -> Vec<String> {
        let mut warnings = Vec::new();
        let steps = steps.max(2);
        for u in 0..n {
            let mut prev = f64::NEG_INFINITY;
            for s in 0..=steps {
                let r = r_max * s as f64 / steps as f64;
                let g = self.assign_cost(u, r);
                if g < prev {
                    warnings.push(format!(
                        "g({u}, r) decreases near r = {r}; natural objectives need nondecreasing g"
                    ));
                    break;
                }
                if self.mode == Mode::Max && g < 0.0 {
                    warnings.push(format!("g({u}, {r}) = {g} is negative in Max mode"));
                    break;
                }
                prev = g;
            }
            if self.mode == Mode::Max && self.open_cost(u) < 0.0 {
                warnings.push(format!(
                    "f({u}) = {} is negative in Max mode",
                    self.open_cost(u)
                ));
            }
        }
        warnings
    }
}

#[inline]
pub(crate) fn fold(mode: Mode, acc: f64, x: f64) -> f64 {
    match mode {
        Mode::Sum => acc + x,
        Mode::Max => acc.max(x),
    }
}

/// A k-clustering: 1-based cluster ids per point, one center (0-based point
/// index) per cluster, and the total cost with those centers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub centers: Vec<usize>,
    pub cost: f64,
    pub k: usize,
}

impl Clustering {
    /// Builds a clustering from an assignment and explicit centers, computing
    /// the cost with those centers fixed.
    pub fn new(
        assignment: Vec<usize>,
        centers: Vec<usize>,
        m: &MetricSpace,
        obj: &Objective,
    ) -> Result<Self> {
        let cost = cost_with_centers(&assignment, &centers, m, obj)?;
        let c = Self {
            k: centers.len(),
            assignment,
            centers,
            cost,
        };
        c.validate(m, obj)?;
        Ok(c)
    }

    /// Checks the structural invariants and that the stored cost matches a
    /// recomputation with the stored centers.
    pub fn validate(&self, m: &MetricSpace, obj: &Objective) -> Result<()> {
        if self.centers.len() != self.k {
            return Err(Error::InvalidClustering(format!(
                "{} centers for k = {}",
                self.centers.len(),
                self.k
            )));
        }
        let recomputed = cost_with_centers(&self.assignment, &self.centers, m, obj)?;
        if (recomputed - self.cost).abs() > tie_tol(recomputed) {
            return Err(Error::InvalidClustering(format!(
                "stored cost {} differs from recomputed cost {}",
                self.cost, recomputed
            )));
        }
        Ok(())
    }
}

/// Splits a 1-based assignment vector into member lists, checking that the
/// ids are exactly `1..=k` and every cluster is non-empty.
pub(crate) fn clusters_of(assignment: &[usize]) -> Result<Vec<Vec<usize>>> {
    if assignment.is_empty() {
        return Err(Error::EmptyInput("empty assignment"));
    }
    let k = *assignment.iter().max().unwrap();
    if assignment.contains(&0) {
        return Err(Error::InvalidClustering(
            "cluster ids are 1-based; found 0".into(),
        ));
    }
    let mut clusters = vec![Vec::new(); k];
    for (p, &id) in assignment.iter().enumerate() {
        clusters[id - 1].push(p);
    }
    if let Some(empty) = clusters.iter().position(|c| c.is_empty()) {
        return Err(Error::InvalidClustering(format!(
            "cluster {} is empty",
            empty + 1
        )));
    }
    Ok(clusters)
}

pub(crate) fn center_score(members: &[usize], c: usize, m: &MetricSpace, obj: &Objective) -> f64 {
    let fc = obj.open_cost(c);
    match obj.mode() {
        Mode::Sum => {
            let mut acc = fc;
            for &u in members {
                acc += obj.assign_cost(u, m.dist(u, c));
            }
            acc
        }
        Mode::Max => {
            let mut acc = fc;
            for &u in members {
                acc = acc.max(obj.assign_cost(u, m.dist(u, c)));
            }
            acc
        }
    }
}

/// Cost of a single cluster with the best center chosen among its members,
/// plus the full set of centers attaining the optimum within the tie
/// tolerance (ascending point index).
pub fn cluster_cost(
    members: &[usize],
    m: &MetricSpace,
    obj: &Objective,
) -> Result<(f64, Vec<usize>)> {
    if members.is_empty() {
        return Err(Error::EmptyInput("empty cluster"));
    }
    obj.validate_for(m.n())?;
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let scores: Vec<f64> = sorted
        .iter()
        .map(|&c| center_score(&sorted, c, m, obj))
        .collect();
    let best = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = tie_tol(best);
    let centers = sorted
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s <= best + tol)
        .map(|(&c, _)| c)
        .collect();
    Ok((best, centers))
}

/// Total cost of an assignment, aggregating per-cluster optima; reports the
/// smallest-index optimal center of each cluster.
pub fn clustering_cost(
    assignment: &[usize],
    m: &MetricSpace,
    obj: &Objective,
) -> Result<(f64, Vec<usize>)> {
    let clusters = clusters_of(assignment)?;
    let mut total = 0.0;
    let mut centers = Vec::with_capacity(clusters.len());
    for members in &clusters {
        let (cost, opt) = cluster_cost(members, m, obj)?;
        total = fold(obj.mode(), total, cost);
        centers.push(opt[0]);
    }
    Ok((total, centers))
}

/// Total cost of an assignment with the given fixed centers.
pub fn cost_with_centers(
    assignment: &[usize],
    centers: &[usize],
    m: &MetricSpace,
    obj: &Objective,
) -> Result<f64> {
    let clusters = clusters_of(assignment)?;
    if centers.len() != clusters.len() {
        return Err(Error::InvalidClustering(format!(
            "{} centers for {} clusters",
            centers.len(),
            clusters.len()
        )));
    }
    obj.validate_for(m.n())?;
    let mut total = 0.0;
    for (i, members) in clusters.iter().enumerate() {
        let c = centers[i];
        if assignment[c] != i + 1 {
            return Err(Error::InvalidClustering(format!(
                "center {} of cluster {} is assigned to cluster {}",
                c,
                i + 1,
                assignment[c]
            )));
        }
        total = fold(obj.mode(), total, center_score(members, c, m, obj));
    }
    Ok(total)
}

/// One Lloyd's improvement step: keep the centers, reassign each non-center
/// point to a strictly nearer center (ties keep the point where it is).
pub fn lloyd_improvement(c: &Clustering, m: &MetricSpace, obj: &Objective) -> Result<Clustering> {
    c.validate(m, obj)?;
    let mut assignment = c.assignment.clone();
    for x in 0..assignment.len() {
        if c.centers.contains(&x) {
            continue;
        }
        let cur = assignment[x] - 1;
        let d_cur = m.dist(x, c.centers[cur]);
        let mut best_j = cur;
        let mut best_d = d_cur;
        for (j, &cj) in c.centers.iter().enumerate() {
            let d = m.dist(x, cj);
            if d < best_d {
                best_d = d;
                best_j = j;
            }
        }
        assignment[x] = best_j + 1;
    }
    Clustering::new(assignment, c.centers.clone(), m, obj)
}
