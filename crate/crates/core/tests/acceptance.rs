//! Acceptance gate: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rescluster::objective::{cost_with_centers, lloyd_improvement};
use rescluster::oracle::DEFAULT_TIE_TOL;
use rescluster::*;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::sync::OnceLock;

fn report(name: &str, f: impl FnOnce() + UnwindSafe) {
    let r = catch_unwind(f);
    match &r {
        Ok(_) => println!("criterion {name}: pass"),
        Err(_) => println!("criterion {name}: fail"),
    }
    if let Err(e) = r {
        resume_unwind(e);
    }
}

const PROBE_TRIALS: usize = 8;
const REL: f64 = 1e-9;

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL * a.abs().max(b.abs()).max(1e-12)
}

fn objectives(n: usize) -> Vec<(&'static str, Objective)> {
    vec![
        ("kmedian", Objective::kmedian()),
        ("kmeans", Objective::kmeans()),
        ("kcenter", Objective::kcenter()),
        (
            "facility",
            Objective::facility_location(vec![1.0; n]).unwrap(),
        ),
    ]
}

struct Case {
    n: usize,
    k: usize,
    m: MetricSpace,
    planted: Vec<usize>,
    /// One (objective name, probe report) per objective; every case in the
    /// fixture is certified 2-resilient for all four.
    probes: Vec<(&'static str, ResilienceProbeReport)>,
}

fn fixture() -> &'static Vec<Case> {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    CASES.get_or_init(|| {
        let mut cases = Vec::with_capacity(200);
        for idx in 0..200u64 {
            let n = 6 + (idx as usize % 7);
            let k = 2 + (idx as usize % 3);
            let seed = 1000 + idx;
            let (m, planted) =
                generate_resilient_instance(n, k, 4.0, 1.0, seed).expect("generator");
            let probes = objectives(n)
                .into_iter()
                .map(|(name, obj)| {
                    let p = probe_resilience(&m, &obj, k, 2.0, PROBE_TRIALS, seed).expect("probe");
                    (name, p)
                })
                .collect();
            cases.push(Case {
                n,
                k,
                m,
                planted,
                probes,
            });
        }
        cases
    })
}

fn base_clustering(case: &Case, obj: &Objective, probe: &ResilienceProbeReport) -> Clustering {
    let assignment = probe.base.optimal_partitions[0].clone();
    let (cost, centers) = clustering_cost(&assignment, &case.m, obj).unwrap();
    let k = centers.len();
    Clustering {
        assignment,
        centers,
        cost,
        k,
    }
}

#[test]
fn criterion_1_exactness_on_resilient_instances() {
    report(
        "1 (exactness on 200 certified resilient instances x 4 objectives)",
        || {
            let cases = fixture();
            assert_eq!(cases.len(), 200);
            for (ci, case) in cases.iter().enumerate() {
                for ((name, obj), (pname, probe)) in objectives(case.n).iter().zip(&case.probes) {
                    assert_eq!(name, pname);
                    assert!(
                        probe.certified,
                        "case {ci} (n={} k={}) not certified for {name}",
                        case.n, case.k
                    );
                    assert_eq!(probe.base.optimal_partitions[0], case.planted);
                    let dp = cluster(&case.m, obj, case.k).unwrap();
                    assert_eq!(
                        dp.assignment, probe.base.optimal_partitions[0],
                        "case {ci} {name}: dp partition differs from oracle"
                    );
                    assert!(
                        rel_close(dp.cost, probe.base.optimal_cost),
                        "case {ci} {name}: dp cost {} vs oracle {}",
                        dp.cost,
                        probe.base.optimal_cost
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_2_tree_partition_exactness() {
    report(
        "2 (dp == tree-partition oracle on 100 random instances)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(2024);
            for trial in 0..100 {
                let n = rng.gen_range(3..=9);
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
                    .collect();
                let m = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
                let objs = objectives(n);
                let (_, obj) = &objs[trial % objs.len()];
                let t = kruskal(&m);
                let bt = root_and_binarize(&t, 0).unwrap();
                for k in 1..=n {
                    let dp = dp_cost_only(&bt, &m, obj, k).unwrap();
                    let tp = tree_partition_optimal(&t, &m, obj, k).unwrap();
                    assert!(
                        rel_close(dp, tp.optimal_cost),
                        "trial {trial} k={k}: dp {dp} vs tree oracle {}",
                        tp.optimal_cost
                    );
                    let bf = brute_force_optimal(&m, obj, k, DEFAULT_TIE_TOL).unwrap();
                    assert!(dp >= bf.optimal_cost - REL * bf.optimal_cost.abs() - 1e-12);
                }
            }
        },
    );
}

#[test]
fn criterion_3_optimal_clusters_are_subtrees() {
    report("3 (oracle-optimal clusters are MST subtrees)", || {
        for case in fixture() {
            let t = kruskal(&case.m);
            for (_, probe) in &case.probes {
                let assignment = &probe.base.optimal_partitions[0];
                for cluster_id in 1..=case.k {
                    let members: Vec<usize> = (0..case.n)
                        .filter(|&p| assignment[p] == cluster_id)
                        .collect();
                    assert!(is_subtree_connected(&t, &members).unwrap());
                }
            }
        }
    });
}

#[test]
fn criterion_4_proximity_and_separation() {
    report(
        "4 (center proximity + closer-to-own-center on resilient instances)",
        || {
            for case in fixture() {
                for ((_, obj), (name, probe)) in objectives(case.n).iter().zip(&case.probes) {
                    let c = base_clustering(case, obj, probe);
                    let prox = check_center_proximity(&c, &case.m, 2.0).unwrap();
                    assert!(
                        prox.holds,
                        "{name}: proximity violated: {:?}",
                        prox.violations
                    );
                    let sep = check_closer_to_own_center(&c, &case.m).unwrap();
                    assert!(
                        sep.holds,
                        "{name}: separation violated: {:?}",
                        sep.violations
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_5_perturbation_validity() {
    report(
        "5 (adversarial perturbations are valid (2,1)-perturbations)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(55);
            let mut done = 0;
            while done < 100 {
                let n = rng.gen_range(5..=30);
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| vec![rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
                    .collect();
                let m = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
                let p = rng.gen_range(0..n);
                let cj = rng.gen_range(0..n);
                if p == cj {
                    continue;
                }
                // d(p, cj) <= 2 r*.
                let r_star = m.dist(p, cj) * rng.gen_range(0.5..1.0);
                if r_star <= 0.0 {
                    continue;
                }
                let d2 = adversarial_perturbation(&m, p, cj, r_star).unwrap();
                let rep = validate_metric(&d2.matrix(), 1e-12).unwrap();
                assert!(rep.ok, "violations: {:?}", rep.violations);
                let mut shortened = m.matrix();
                shortened[p][cj] = r_star;
                shortened[cj][p] = r_star;
                let closure = metric_closure(&shortened).unwrap();
                for a in 0..n {
                    for b in 0..n {
                        let d = m.dist(a, b);
                        let dp = d2.dist(a, b);
                        assert!(dp <= d + 1e-12 && dp >= d / 2.0 - 1e-12);
                        let cl = closure.dist(a, b);
                        assert!(
                            (dp - cl).abs() <= 1e-12 * cl.abs().max(1.0),
                            "({a},{b}): {dp} vs closure {cl}"
                        );
                    }
                }
                done += 1;
            }
        },
    );
}

#[test]
fn criterion_6_oracle_cross_validation() {
    report(
        "6 (brute force vs center enumeration + Stirling counts)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(66);
            for trial in 0..100 {
                let n = rng.gen_range(3..=10);
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
                    .collect();
                let m = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
                let obj = match trial % 3 {
                    0 => Objective::kmedian(),
                    1 => Objective::kmeans(),
                    _ => Objective::facility_location(
                        (0..n).map(|_| rng.gen_range(0.0..5.0)).collect(),
                    )
                    .unwrap(),
                };
                let k = rng.gen_range(1..=n);
                let bf = brute_force_optimal(&m, &obj, k, DEFAULT_TIE_TOL).unwrap();
                let ce = center_enumeration_optimal(&m, &obj, k).unwrap();
                assert!(
                    rel_close(bf.optimal_cost, ce.optimal_cost),
                    "trial {trial} n={n} k={k}: {} vs {}",
                    bf.optimal_cost,
                    ce.optimal_cost
                );
            }
            // Enumeration counts match Stirling numbers of the second kind.
            let stirling = |n: usize, k: usize| -> u64 {
                let mut s = vec![vec![0u64; k + 1]; n + 1];
                s[0][0] = 1;
                for i in 1..=n {
                    for j in 1..=k.min(i) {
                        s[i][j] = s[i - 1][j - 1] + j as u64 * s[i - 1][j];
                    }
                }
                s[n][k]
            };
            for n in 2..=8usize {
                let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![1.3 * i as f64 + 0.7]).collect();
                let m = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
                for k in 1..=n {
                    let r =
                        brute_force_optimal(&m, &Objective::kmedian(), k, DEFAULT_TIE_TOL).unwrap();
                    assert_eq!(r.evaluated, stirling(n, k), "n={n} k={k}");
                }
            }
        },
    );
}

#[test]
fn criterion_7_determinism() {
    report(
        "7 (byte-identical reruns of generate/probe/cluster/kruskal)",
        || {
            use std::process::Command;
            let bin = env!("CARGO_BIN_EXE_rescluster");
            let dir = tempfile::tempdir().unwrap();
            let matrix = dir.path().join("m.csv");

            let run = |args: &[&str]| -> Vec<u8> {
                let out = Command::new(bin).args(args).output().unwrap();
                assert!(
                    out.status.success(),
                    "{:?}: {}",
                    args,
                    String::from_utf8_lossy(&out.stderr)
                );
                out.stdout
            };
            let gen_args = [
                "generate",
                "--n",
                "10",
                "--k",
                "3",
                "--seed",
                "7",
                "--matrix-out",
                matrix.to_str().unwrap(),
            ];
            let g1 = run(&gen_args);
            let csv1 = std::fs::read(&matrix).unwrap();
            let g2 = run(&gen_args);
            let csv2 = std::fs::read(&matrix).unwrap();
            assert_eq!(g1, g2);
            assert_eq!(csv1, csv2);

            let mpath = matrix.to_str().unwrap();
            for args in [
                vec![
                    "cluster",
                    "--input",
                    mpath,
                    "--k",
                    "3",
                    "--objective",
                    "kmeans",
                ],
                vec![
                    "probe", "--input", mpath, "--k", "3", "--trials", "10", "--seed", "4",
                ],
            ] {
                assert_eq!(run(&args), run(&args));
            }

            // kruskal: identical edge lists (and CSV dump) across rebuilds.
            let (m1, _) = generate_resilient_instance(11, 3, 4.0, 1.0, 12).unwrap();
            let (m2, _) = generate_resilient_instance(11, 3, 4.0, 1.0, 12).unwrap();
            assert_eq!(kruskal(&m1).edges_csv(), kruskal(&m2).edges_csv());
        },
    );
}

#[test]
fn criterion_8_lloyd_monotonicity() {
    report(
        "8 (lloyd improvement never increases fixed-center cost)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(88);
            let names = ["kmedian", "kmeans", "kcenter", "facility"];
            for (oi, name) in names.iter().enumerate() {
                for trial in 0..1000 {
                    let n = rng.gen_range(4..=10);
                    let pts: Vec<Vec<f64>> = (0..n)
                        .map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
                        .collect();
                    let m = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
                    let obj = &objectives(n)[oi].1;
                    let k = rng.gen_range(1..=n.min(4));
                    // Random valid clustering: k distinct centers, random fill.
                    let mut assignment = vec![0usize; n];
                    let mut centers: Vec<usize> = (0..n).collect();
                    for i in 0..k {
                        let j = rng.gen_range(i..n);
                        centers.swap(i, j);
                    }
                    let centers: Vec<usize> = centers[..k].to_vec();
                    for (i, &c) in centers.iter().enumerate() {
                        assignment[c] = i + 1;
                    }
                    for a in assignment.iter_mut() {
                        if *a == 0 {
                            *a = rng.gen_range(1..=k);
                        }
                    }
                    let before = cost_with_centers(&assignment, &centers, &m, obj).unwrap();
                    let c = Clustering::new(assignment, centers.clone(), &m, obj).unwrap();
                    let improved = lloyd_improvement(&c, &m, obj).unwrap();
                    let after = cost_with_centers(&improved.assignment, &centers, &m, obj).unwrap();
                    assert!(
                        after <= before + REL * before.abs().max(1.0),
                        "{name} trial {trial}: {before} -> {after}"
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_9_performance_n1000() {
    report("9 (n=1000, k=8, kmedian within 60 s / 2 GB)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
            .collect();
        let m = MetricSpace::from_points(&pts, Norm::Euclidean).unwrap();
        let t0 = std::time::Instant::now();
        let c = cluster(&m, &Objective::kmedian(), 8).unwrap();
        let elapsed = t0.elapsed();
        assert_eq!(c.k, 8);
        assert!(c.cost.is_finite());
        assert!(elapsed.as_secs_f64() <= 60.0, "dp_cluster took {elapsed:?}");
        // Peak RSS so far (covers the DP tables, which dominate).
        if let Ok(status) = std::fs::read_to_string("/proc/self/status") {
            if let Some(line) = status.lines().find(|l| l.starts_with("VmHWM")) {
                let kb: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
                assert!(kb <= 2.0 * 1024.0 * 1024.0, "peak RSS {kb} kB");
            }
        }
        println!("  (n=1000 dp_cluster: {elapsed:?})");
    });
}
