//! Finite metric spaces: construction, validation, shortest-path closure,
//! and metric perturbations.
//!
//! Distances are stored as a dense symmetric `n x n` matrix of `f64`.
//! Symmetry is forced by construction (entries are computed once per
//! unordered pair and mirrored), so symmetry checks are exact.
//!
//! Seeded randomness uses the ChaCha8 stream cipher RNG
//! ([`rand_chacha::ChaCha8Rng`]), which is specified independently of the
//! platform, so perturbed matrices reproduce bit-for-bit across machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default absolute tolerance for the triangle-inequality check.
pub const DEFAULT_TRIANGLE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    Manhattan,
}

/// A finite metric space on `n` points with a dense distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl MetricSpace {
    /// Builds a metric space from an explicit distance matrix, rejecting any
    /// matrix that fails the metric axioms at tolerance `eps`.
    pub fn from_matrix(rows: &[Vec<f64>], eps: f64) -> Result<Self> {
        let report = validate_metric(rows, eps)?;
        if !report.ok {
            return Err(Error::InvalidMetric {
                violations: report.violations.len(),
            });
        }
        let n = rows.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = rows[i][j];
            }
        }
        Ok(Self {
            n,
            dist,
            labels: None,
        })
    }

    /// Builds the metric induced by the chosen norm on a list of coordinate
    /// vectors. All vectors must share one dimension.
    pub fn from_points(coords: &[Vec<f64>], norm: Norm) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("no points given"));
        }
        let dim = coords[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                index: 0,
                got: 0,
                expected: 1,
            });
        }
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    index: i,
                    got: c.len(),
                    expected: dim,
                });
            }
        }
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = match norm {
                    Norm::Euclidean => coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt(),
                    Norm::Manhattan => coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>(),
                };
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self {
            n,
            dist,
            labels: None,
        })
    }

    pub(crate) fn from_flat(n: usize, dist: Vec<f64>) -> Self {
        debug_assert_eq!(dist.len(), n * n);
        Self {
            n,
            dist,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.dist[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn max_dist(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricViolation {
    NonFinite {
        i: usize,
        j: usize,
    },
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
        d_ij: f64,
        d_ji: f64,
    },
    /// `dist(i,j) > dist(i,via) + dist(via,j) + eps`
    Triangle {
        i: usize,
        j: usize,
        via: usize,
        direct: f64,
        detour: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub eps: f64,
    pub violations: Vec<MetricViolation>,
}

/// Checks every metric axiom on a square matrix and reports each violation
/// with its witnessing indices. `eps` is the absolute slack allowed on the
/// triangle inequality.
pub fn validate_metric(rows: &[Vec<f64>], eps: f64) -> Result<ValidationReport> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                row: i,
                cols: row.len(),
            });
        }
    }
    let mut violations = Vec::new();
    for i in 0..n {
        if rows[i][i] != 0.0 {
            violations.push(MetricViolation::NonzeroDiagonal {
                i,
                value: rows[i][i],
            });
        }
        for j in 0..n {
            let v = rows[i][j];
            if !v.is_finite() {
                violations.push(MetricViolation::NonFinite { i, j });
            } else if v < 0.0 {
                violations.push(MetricViolation::Negative { i, j, value: v });
            }
            if j > i && rows[i][j] != rows[j][i] {
                violations.push(MetricViolation::Asymmetric {
                    i,
                    j,
                    d_ij: rows[i][j],
                    d_ji: rows[j][i],
                });
            }
        }
    }
    // Triangle check only makes sense on finite entries.
    if violations
        .iter()
        .all(|v| !matches!(v, MetricViolation::NonFinite { .. }))
    {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for via in 0..n {
                    if via == i || via == j {
                        continue;
                    }
                    let detour = rows[i][via] + rows[via][j];
                    if rows[i][j] > detour + eps {
                        violations.push(MetricViolation::Triangle {
                            i,
                            j,
                            via,
                            direct: rows[i][j],
                            detour,
                        });
                    }
                }
            }
        }
    }
    Ok(ValidationReport {
        ok: violations.is_empty(),
        eps,
        violations,
    })
}

fn check_closure_input(rows: &[Vec<f64>]) -> Result<usize> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput("empty matrix"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                row: i,
                cols: row.len(),
            });
        }
    }
    for i in 0..n {
        if rows[i][i] != 0.0 {
            return Err(Error::NonzeroDiagonal {
                i,
                value: rows[i][i],
            });
        }
        for j in 0..n {
            let v = rows[i][j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::BadEntry { i, j, value: v });
            }
            if j > i && rows[i][j] != rows[j][i] {
                return Err(Error::NotSymmetric {
                    i,
                    j,
                    value: rows[i][j],
                    mirror: rows[j][i],
                });
            }
        }
    }
    Ok(n)
}

/// Min-plus (shortest path) closure of a symmetric nonnegative length matrix
/// over the complete graph. The result is a metric, is entrywise `<=` the
/// input, and is idempotent.
pub fn metric_closure(weights: &[Vec<f64>]) -> Result<MetricSpace> {
    let n = check_closure_input(weights)?;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = weights[i][j];
        }
    }
    closure_in_place(&mut d, n);
    Ok(MetricSpace::from_flat(n, d))
}

/// Floyd-Warshall over the flat symmetric matrix. Updates mirror pairs
/// together so symmetry stays exact.
fn closure_in_place(d: &mut [f64], n: usize) {
    for mid in 0..n {
        for i in 0..n {
            let dim = d[i * n + mid];
            for j in (i + 1)..n {
                let alt = dim + d[mid * n + j];
                if alt < d[i * n + j] {
                    d[i * n + j] = alt;
                    d[j * n + i] = alt;
                }
            }
        }
    }
}

/// The closed-form single-edge shortening perturbation:
/// `d'(u,v) = min(d(u,v), d(u,p) + r* + d(c_j,v), d(v,p) + r* + d(c_j,u))`,
/// i.e. the shortest-path metric after assigning length `r*` to the edge
/// `(p, c_j)` and keeping all other lengths at `d`.
pub fn adversarial_perturbation(
    m: &MetricSpace,
    p: usize,
    c_j: usize,
    r_star: f64,
) -> Result<MetricSpace> {
    let n = m.n();
    for &idx in &[p, c_j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    if p == c_j {
        return Err(Error::InvalidParameter(
            "perturbation endpoints p and c_j must differ".into(),
        ));
    }
    if r_star <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "r_star = {r_star} must be positive"
        )));
    }
    if r_star > m.dist(p, c_j) {
        return Err(Error::InvalidParameter(format!(
            "r_star = {} exceeds d(p, c_j) = {}; only shortening is supported",
            r_star,
            m.dist(p, c_j)
        )));
    }
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let direct = m.dist(u, v);
            let via_uv = m.dist(u, p) + r_star + m.dist(c_j, v);
            let via_vu = m.dist(v, p) + r_star + m.dist(c_j, u);
            let d = direct.min(via_uv).min(via_vu);
            out[u * n + v] = d;
            out[v * n + u] = d;
        }
    }
    Ok(MetricSpace::from_flat(n, out))
}

/// Shrinks a seeded pseudo-random subset of pairwise lengths by independent
/// factors in `[1/alpha, 1]`, then takes the metric closure. The output `d'`
/// satisfies `d/alpha <= d' <= d` entrywise and is a pure function of
/// `(m, alpha, seed, shrink_fraction)`.
pub fn random_metric_perturbation(
    m: &MetricSpace,
    alpha: f64,
    seed: u64,
    shrink_fraction: f64,
) -> Result<MetricSpace> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must be >= 1"
        )));
    }
    if !(0.0..=1.0).contains(&shrink_fraction) {
        return Err(Error::InvalidParameter(format!(
            "shrink_fraction = {shrink_fraction} must lie in [0, 1]"
        )));
    }
    let n = m.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut len = vec![0.0; n * n];
    // Pairs are visited in lexicographic (i, j) order; this order is part of
    // the documented reproducibility contract.
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d = m.dist(i, j);
            if rng.gen::<f64>() < shrink_fraction {
                let factor = rng.gen_range(1.0 / alpha..=1.0);
                d *= factor;
            }
            len[i * n + j] = d;
            len[j * n + i] = d;
        }
    }
    closure_in_place(&mut len, n);
    Ok(MetricSpace::from_flat(n, len))
}

/// Multiplies every distance by `lambda > 0`.
pub fn scale_metric(m: &MetricSpace, lambda: f64) -> Result<MetricSpace> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let n = m.n();
    let dist = (0..n * n).map(|idx| m.dist[idx] * lambda).collect();
    Ok(MetricSpace::from_flat(n, dist))
}

#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationMode {
    Adversarial { p: usize, c_j: usize, r_star: f64 },
    Random { seed: u64, shrink_fraction: f64 },
}

/// A validated description of an `(alpha, 1)`-metric perturbation.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub alpha: f64,
    pub mode: PerturbationMode,
}

impl PerturbationSpec {
    pub fn new(alpha: f64, mode: PerturbationMode) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} must be >= 1"
            )));
        }
        if let PerturbationMode::Adversarial { r_star, .. } = mode {
            if r_star <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "r_star = {r_star} must be positive"
                )));
            }
        }
        if let PerturbationMode::Random {
            shrink_fraction, ..
        } = mode
        {
            if !(0.0..=1.0).contains(&shrink_fraction) {
                return Err(Error::InvalidParameter(format!(
                    "shrink_fraction = {shrink_fraction} must lie in [0, 1]"
                )));
            }
        }
        Ok(Self { alpha, mode })
    }

    pub fn apply(&self, m: &MetricSpace) -> Result<MetricSpace> {
        match self.mode {
            PerturbationMode::Adversarial { p, c_j, r_star } => {
                adversarial_perturbation(m, p, c_j, r_star)
            }
            PerturbationMode::Random {
                seed,
                shrink_fraction,
            } => random_metric_perturbation(m, self.alpha, seed, shrink_fraction),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn line4() -> MetricSpace {
        MetricSpace::from_points(
            &[vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            Norm::Euclidean,
        )
        .unwrap()
    }

    #[test]
    fn from_points_line() {
        let m = line4();
        assert_eq!(m.dist(0, 1), 1.0);
        assert_eq!(m.dist(1, 2), 9.0);
        assert_eq!(m.dist(0, 3), 11.0);
    }

    #[test]
    fn from_points_norms() {
        let pts = [vec![0.0, 0.0], vec![3.0, 4.0]];
        let e = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
        assert_eq!(e.dist(0, 1), 5.0);
        let m = MetricSpace::from_points(&pts, Norm::Manhattan).unwrap();
        assert_eq!(m.dist(0, 1), 7.0);
    }

    #[test]
    fn from_points_errors() {
        assert!(matches!(
            MetricSpace::from_points(&[], Norm::Euclidean),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            MetricSpace::from_points(&[vec![0.0], vec![1.0, 2.0]], Norm::Euclidean),
            Err(Error::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn validator_flags_triangle_and_diagonal() {
        let rows = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let rep = validate_metric(&rows, 0.0).unwrap();
        assert!(!rep.ok);
        assert!(rep.violations.iter().any(|v| matches!(
            v,
            MetricViolation::Triangle {
                i: 0,
                j: 2,
                via: 1,
                ..
            }
        )));

        let rows = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let rep = validate_metric(&rows, 0.0).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, MetricViolation::NonzeroDiagonal { i: 0, .. })));
    }

    #[test]
    fn validator_accepts_norm_metrics() {
        let m = line4();
        let rep = validate_metric(&m.matrix(), 0.0).unwrap();
        assert!(rep.ok);
    }

    #[test]
    fn validator_rejects_non_square() {
        let rows = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(
            validate_metric(&rows, 0.0),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn closure_shortcuts_and_is_idempotent() {
        let rows = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let closed = metric_closure(&rows).unwrap();
        assert_eq!(closed.dist(0, 2), 2.0);
        let again = metric_closure(&closed.matrix()).unwrap();
        assert_eq!(closed, again);

        // Already a metric: closure is the identity.
        let m = line4();
        let closed = metric_closure(&m.matrix()).unwrap();
        assert_eq!(closed.matrix(), m.matrix());
    }

    #[test]
    fn closure_rejects_bad_input() {
        assert!(metric_closure(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(metric_closure(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
    }

    #[test]
    fn adversarial_identity_when_r_star_is_distance() {
        let m = line4();
        let d = adversarial_perturbation(&m, 1, 2, m.dist(1, 2)).unwrap();
        assert_eq!(d.matrix(), m.matrix());
    }

    #[test]
    fn adversarial_line4_hand_check() {
        // Shorten the edge between coordinates 1 and 10 (indices 1, 2) to 1.
        let m = line4();
        let d = adversarial_perturbation(&m, 1, 2, 1.0).unwrap();
        assert_eq!(d.dist(1, 2), 1.0);
        assert_eq!(d.dist(0, 3), 3.0); // 0 -> 1 -> 10 -> 11 with shortened middle
        assert_eq!(d.dist(0, 2), 2.0);
        assert_eq!(d.dist(1, 3), 2.0);
        assert_eq!(d.dist(0, 1), 1.0);
        assert_eq!(d.dist(2, 3), 1.0);
        let rep = validate_metric(&d.matrix(), 0.0).unwrap();
        assert!(rep.ok, "{:?}", rep.violations);
    }

    #[test]
    fn adversarial_matches_closure_of_modified_lengths() {
        let m = line4();
        let (p, cj, r) = (1usize, 2usize, 2.5f64);
        let d = adversarial_perturbation(&m, p, cj, r).unwrap();
        let mut lens = m.matrix();
        lens[p][cj] = r;
        lens[cj][p] = r;
        let closed = metric_closure(&lens).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                assert!((d.dist(u, v) - closed.dist(u, v)).abs() <= 1e-12 * d.dist(u, v).max(1.0));
            }
        }
    }

    #[test]
    fn adversarial_rejects_bad_r_star() {
        let m = line4();
        assert!(adversarial_perturbation(&m, 1, 2, 0.0).is_err());
        assert!(adversarial_perturbation(&m, 1, 2, 9.5).is_err());
        assert!(adversarial_perturbation(&m, 1, 1, 1.0).is_err());
    }

    #[test]
    fn random_perturbation_bounds_and_determinism() {
        let m = line4();
        let a = random_metric_perturbation(&m, 2.0, 7, 1.0).unwrap();
        let b = random_metric_perturbation(&m, 2.0, 7, 1.0).unwrap();
        assert_eq!(a, b);
        for u in 0..4 {
            for v in 0..4 {
                assert!(a.dist(u, v) <= m.dist(u, v) + 1e-15);
                assert!(a.dist(u, v) >= m.dist(u, v) / 2.0 - 1e-12);
            }
        }
        let c = random_metric_perturbation(&m, 2.0, 8, 1.0).unwrap();
        assert_ne!(a, c, "different seeds should almost surely differ");
    }

    #[test]
    fn random_perturbation_identity_cases() {
        let m = line4();
        let a = random_metric_perturbation(&m, 1.0, 3, 1.0).unwrap();
        assert_eq!(a.matrix(), m.matrix());
        let b = random_metric_perturbation(&m, 5.0, 3, 0.0).unwrap();
        assert_eq!(b.matrix(), m.matrix());
    }

    #[test]
    fn scaling() {
        let m = line4();
        let s = scale_metric(&m, 2.0).unwrap();
        assert_eq!(s.dist(0, 1), 2.0);
        assert_eq!(s.dist(1, 2), 18.0);
        assert_eq!(scale_metric(&m, 1.0).unwrap(), m);
        assert!(scale_metric(&m, 0.0).is_err());
    }
}
