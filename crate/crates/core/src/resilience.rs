//! Center-proximity checks, perturbation probing, resilient-instance
//! generation, and the single-linkage baseline.
//!
//! "Certified resilient" here is an empirical label: the oracle optimum is
//! unique, it survived every sampled perturbation, and 2-center proximity
//! holds. It gates the exactness assertions in the test suites but is not a
//! proof over the (infinite) perturbation family.

use crate::error::{Error, Result};
use crate::metric::{adversarial_perturbation, random_metric_perturbation, MetricSpace, Norm};
use crate::objective::{clustering_cost, Clustering, Objective};
use crate::oracle::{brute_force_optimal, OracleResult, DEFAULT_TIE_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Slack when deciding whether a non-strict proximity inequality is met.
const PROXIMITY_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct ProximityViolation {
    /// Offending point.
    pub p: usize,
    /// Its own cluster id (1-based).
    pub i: usize,
    /// The foreign cluster id (1-based).
    pub j: usize,
    /// Distance from `p` to its own center.
    pub dpi: f64,
    /// Distance from `p` to the foreign center.
    pub dpj: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximityReport {
    pub alpha: f64,
    pub holds: bool,
    pub violations: Vec<ProximityViolation>,
}

/// Checks α-center proximity: every point must be more than α times closer
/// to its own center than to any other cluster's center. A pair is flagged
/// when `d(p, c_j) <= alpha * d(p, c_i)` (non-strict, so boundary ties are
/// reported).
pub fn check_center_proximity(
    c: &Clustering,
    m: &MetricSpace,
    alpha: f64,
) -> Result<ProximityReport> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and >= 1, got {alpha}"
        )));
    }
    if c.assignment.len() != m.n() {
        return Err(Error::InvalidClustering(format!(
            "assignment over {} points but metric has {}",
            c.assignment.len(),
            m.n()
        )));
    }
    let mut violations = Vec::new();
    for (p, &i) in c.assignment.iter().enumerate() {
        let dpi = m.dist(p, c.centers[i - 1]);
        for j in 1..=c.k {
            if j == i {
                continue;
            }
            let dpj = m.dist(p, c.centers[j - 1]);
            if dpj <= alpha * dpi + PROXIMITY_SLACK {
                violations.push(ProximityViolation { p, i, j, dpi, dpj });
            }
        }
    }
    Ok(ProximityReport {
        alpha,
        holds: violations.is_empty(),
        violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationViolation {
    /// Point in cluster `i`.
    pub u: usize,
    /// Point outside cluster `i`.
    pub v: usize,
    /// Distance from `u` to its own center.
    pub du_center: f64,
    /// Distance from `u` to `v`.
    pub duv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub holds: bool,
    pub violations: Vec<SeparationViolation>,
}

/// Checks that every point is strictly closer to its own center than to any
/// point of another cluster: `d(u, c_i) < d(u, v)` for all `u ∈ C_i`,
/// `v ∉ C_i`.
pub fn check_closer_to_own_center(c: &Clustering, m: &MetricSpace) -> Result<SeparationReport> {
    if c.assignment.len() != m.n() {
        return Err(Error::InvalidClustering(format!(
            "assignment over {} points but metric has {}",
            c.assignment.len(),
            m.n()
        )));
    }
    let mut violations = Vec::new();
    for (u, &i) in c.assignment.iter().enumerate() {
        let du_center = m.dist(u, c.centers[i - 1]);
        for (v, &jv) in c.assignment.iter().enumerate() {
            if jv == i {
                continue;
            }
            let duv = m.dist(u, v);
            if du_center + PROXIMITY_SLACK >= duv {
                violations.push(SeparationViolation {
                    u,
                    v,
                    du_center,
                    duv,
                });
            }
        }
    }
    Ok(SeparationReport {
        holds: violations.is_empty(),
        violations,
    })
}

/// Builds the base optimal clustering (first canonical oracle partition,
/// smallest-index optimal centers).
fn base_clustering(m: &MetricSpace, obj: &Objective, base: &OracleResult) -> Result<Clustering> {
    let assignment = base.optimal_partitions[0].clone();
    let (cost, centers) = clustering_cost(&assignment, m, obj)?;
    let k = centers.len();
    Ok(Clustering {
        assignment,
        centers,
        cost,
        k,
    })
}

#[derive(Clone, Debug)]
pub struct Witness {
    /// The proximity violation the construction targets.
    pub violation: ProximityViolation,
    /// Shortcut length: `r* = d(p, c_i)`.
    pub r_star: f64,
    /// The perturbed metric `d'`.
    pub perturbed: MetricSpace,
    /// `d/alpha <= d' <= d` entrywise.
    pub bounds_ok: bool,
    /// Oracle optimum under the base metric.
    pub base: OracleResult,
    /// Oracle optimum under `d'`.
    pub perturbed_result: OracleResult,
    /// True when `bounds_ok` and the base partition is no longer optimal
    /// under `d'`: a constructive disproof of (α,1)-metric resilience.
    pub proves_non_resilience: bool,
}

/// If the base oracle optimum violates α-center proximity at some
/// `(p, c_i, c_j)`, shortens `d(p, c_j)` to `r* = d(p, c_i)` through the
/// metric closure and asks the oracle whether the optimum moved. Returns
/// `None` when proximity holds or no violation yields a usable shortcut.
pub fn adversarial_witness(
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
    alpha: f64,
) -> Result<Option<Witness>> {
    let base = brute_force_optimal(m, obj, k, DEFAULT_TIE_TOL)?;
    let clustering = base_clustering(m, obj, &base)?;
    let prox = check_center_proximity(&clustering, m, alpha)?;
    if prox.holds {
        return Ok(None);
    }
    for violation in prox.violations {
        let ci = clustering.centers[violation.i - 1];
        let cj = clustering.centers[violation.j - 1];
        let r_star = m.dist(violation.p, ci);
        if violation.p == cj || r_star <= 0.0 || r_star > m.dist(violation.p, cj) {
            continue;
        }
        let perturbed = adversarial_perturbation(m, violation.p, cj, r_star)?;
        let mut bounds_ok = true;
        'outer: for a in 0..m.n() {
            for b in (a + 1)..m.n() {
                let d = m.dist(a, b);
                let dp = perturbed.dist(a, b);
                if dp > d + PROXIMITY_SLACK || dp < d / alpha - PROXIMITY_SLACK {
                    bounds_ok = false;
                    break 'outer;
                }
            }
        }
        let perturbed_result = brute_force_optimal(&perturbed, obj, k, DEFAULT_TIE_TOL)?;
        let proves_non_resilience = bounds_ok
            && !perturbed_result
                .optimal_partitions
                .contains(&base.optimal_partitions[0]);
        return Ok(Some(Witness {
            violation,
            r_star,
            perturbed,
            bounds_ok,
            base,
            perturbed_result,
            proves_non_resilience,
        }));
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeFailure {
    pub trial: usize,
    pub seed: u64,
    pub perturbed_partition: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResilienceProbeReport {
    pub alpha: f64,
    /// Trials actually run (0 when the base optimum is not unique).
    pub trials: usize,
    pub stable: bool,
    pub base_unique: bool,
    pub certified: bool,
    pub first_failure: Option<ProbeFailure>,
    pub base: OracleResult,
    pub proximity: Option<ProximityReport>,
}

/// Samples `trials` random (α,1)-metric perturbations (trial `t` uses seed
/// `seed + t`) and checks that the oracle optimum is preserved by each.
/// `certified` additionally requires a unique base optimum and α-center
/// proximity of the base clustering.
pub fn probe_resilience(
    m: &MetricSpace,
    obj: &Objective,
    k: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<ResilienceProbeReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and >= 1, got {alpha}"
        )));
    }
    let base = brute_force_optimal(m, obj, k, DEFAULT_TIE_TOL)?;
    if !base.unique {
        return Ok(ResilienceProbeReport {
            alpha,
            trials: 0,
            stable: true,
            base_unique: false,
            certified: false,
            first_failure: None,
            base,
            proximity: None,
        });
    }
    let base_partition = base.optimal_partitions[0].clone();
    let clustering = base_clustering(m, obj, &base)?;
    let proximity = check_center_proximity(&clustering, m, alpha)?;

    let mut first_failure = None;
    for t in 0..trials {
        let trial_seed = seed.wrapping_add(t as u64);
        let perturbed = random_metric_perturbation(m, alpha, trial_seed, 1.0)?;
        let result = brute_force_optimal(&perturbed, obj, k, DEFAULT_TIE_TOL)?;
        let preserved = result.unique && result.optimal_partitions[0] == base_partition;
        if !preserved {
            first_failure = Some(ProbeFailure {
                trial: t,
                seed: trial_seed,
                perturbed_partition: result.optimal_partitions[0].clone(),
            });
            break;
        }
    }
    let stable = first_failure.is_none();
    let certified = stable && proximity.holds;
    Ok(ResilienceProbeReport {
        alpha,
        trials,
        stable,
        base_unique: true,
        certified,
        first_failure,
        base,
        proximity: Some(proximity),
    })
}

/// Plants `k` well-separated cluster sites on a line and jitters points
/// around them, spacing the sites so far apart that the optimum survives
/// worst-case α=2 shrinkage with slack. Cluster sizes are as equal as
/// possible; the planted assignment is canonical (cluster 1 first).
pub fn generate_resilient_instance(
    n: usize,
    k: usize,
    margin: f64,
    spread: f64,
    seed: u64,
) -> Result<(MetricSpace, Vec<usize>)> {
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    if !(margin.is_finite() && margin > 2.0) {
        return Err(Error::InvalidParameter(format!(
            "margin must be > 2, got {margin}"
        )));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spread must be > 0, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Any two points of one cluster are within 2*spread of each other while
    // cross-cluster gaps are at least sep - 2*spread; sep scales with n so
    // the proximity margin survives halving even for lopsided objectives.
    let sep = margin * 2.0 * spread * n as f64;
    let mut coords = Vec::with_capacity(n);
    let mut assignment = Vec::with_capacity(n);
    let base_size = n / k;
    let remainder = n % k;
    for cluster in 0..k {
        let size = base_size + usize::from(cluster < remainder);
        let site = cluster as f64 * sep;
        for _ in 0..size {
            coords.push(vec![site + rng.gen_range(-spread..=spread)]);
            assignment.push(cluster + 1);
        }
    }
    let m = MetricSpace::from_points(&coords, Norm::Euclidean)?;
    Ok((m, assignment))
}

/// Single-linkage baseline: stop Kruskal once exactly `k` components remain
/// and report the components as clusters.
pub fn single_linkage_baseline(m: &MetricSpace, k: usize) -> Result<Vec<usize>> {
    crate::mst::single_linkage_components(m, k)
}
