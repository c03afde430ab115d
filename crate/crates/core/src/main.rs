use clap::{Args, Parser, Subcommand, ValueEnum};
use rescluster::error::Error;
use rescluster::io::{matrix_to_csv, read_facility_costs, read_matrix_csv, read_points_csv};
use rescluster::metric::{validate_metric, MetricSpace, Norm, DEFAULT_TRIANGLE_EPS};
use rescluster::objective::{clustering_cost, Objective};
use rescluster::oracle::{brute_force_optimal, OracleResult, DEFAULT_TIE_TOL};
use rescluster::resilience::{
    generate_resilient_instance, probe_resilience, single_linkage_baseline, ResilienceProbeReport,
};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rescluster",
    version,
    about = "Exact clustering for perturbation-resilient metric instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputKind {
    /// Header-less n x n distance matrix CSV.
    Matrix,
    /// Points CSV with header x1,...,xd.
    Points,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Euclidean,
    Manhattan,
}

#[derive(Args)]
struct InputArgs {
    /// Input file: distance matrix CSV or points CSV.
    #[arg(long)]
    input: PathBuf,
    /// How to interpret the input file.
    #[arg(long, value_enum, default_value_t = InputKind::Matrix)]
    input_kind: InputKind,
    /// Norm for points input.
    #[arg(long, value_enum, default_value_t = NormArg::Euclidean)]
    norm: NormArg,
    /// Triangle-inequality tolerance when validating a matrix.
    #[arg(long, default_value_t = DEFAULT_TRIANGLE_EPS)]
    eps: f64,
}

#[derive(Args)]
struct ObjectiveArgs {
    /// Objective: kmedian | kmeans | kcenter | facility.
    #[arg(long, default_value = "kmedian")]
    objective: String,
    /// Opening costs file (one decimal per line), required for facility.
    #[arg(long)]
    facility_costs: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArg {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve exactly via the spanning-tree dynamic program.
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Solve exactly by brute-force enumeration (small n only).
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        k: usize,
        /// Relative tie tolerance for reporting co-optimal partitions.
        #[arg(long, default_value_t = DEFAULT_TIE_TOL)]
        tie_tol: f64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Probe resilience under sampled random perturbations.
    Probe {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Generate a planted resilient instance.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 4.0)]
        margin: f64,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the distance matrix CSV to this path.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Validate a distance matrix against the metric axioms.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Single-linkage baseline: components after stopping Kruskal at k.
    Baseline {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        output: OutputArg,
    },
}

/// Fully resolved run configuration, echoed into every report.
#[derive(Serialize)]
struct ConfigEcho {
    command: &'static str,
    input: Option<String>,
    input_kind: Option<String>,
    norm: Option<String>,
    objective: Option<String>,
    facility_costs: Option<String>,
    n: Option<usize>,
    k: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
    trials: Option<usize>,
    margin: Option<f64>,
    spread: Option<f64>,
    eps: Option<f64>,
    tie_tol: Option<f64>,
    output: Option<String>,
    rc_threads: Option<String>,
}

impl ConfigEcho {
    fn new(command: &'static str) -> Self {
        ConfigEcho {
            command,
            input: None,
            input_kind: None,
            norm: None,
            objective: None,
            facility_costs: None,
            n: None,
            k: None,
            alpha: None,
            seed: None,
            trials: None,
            margin: None,
            spread: None,
            eps: None,
            tie_tol: None,
            output: None,
            rc_threads: std::env::var("RC_THREADS").ok(),
        }
    }

    fn with_input(mut self, args: &InputArgs) -> Self {
        self.input = Some(args.input.display().to_string());
        self.input_kind = Some(
            match args.input_kind {
                InputKind::Matrix => "matrix",
                InputKind::Points => "points",
            }
            .into(),
        );
        self.norm = Some(
            match args.norm {
                NormArg::Euclidean => "euclidean",
                NormArg::Manhattan => "manhattan",
            }
            .into(),
        );
        self.eps = Some(args.eps);
        self
    }

    fn with_output(mut self, out: &OutputArg) -> Self {
        self.output = Some(
            out.output
                .as_ref()
                .map_or_else(|| "stdout".to_string(), |p| p.display().to_string()),
        );
        self
    }
}

#[derive(Serialize)]
struct ClusterReport {
    config: ConfigEcho,
    assignments: Vec<usize>,
    centers: Vec<usize>,
    cost: f64,
    objective: String,
    k: usize,
}

#[derive(Serialize)]
struct OracleReport {
    config: ConfigEcho,
    result: OracleResult,
}

#[derive(Serialize)]
struct ProbeReport {
    config: ConfigEcho,
    result: ResilienceProbeReport,
}

#[derive(Serialize)]
struct GenerateReport {
    config: ConfigEcho,
    planted_assignment: Vec<usize>,
    matrix_csv: String,
}

#[derive(Serialize)]
struct ValidateReport {
    config: ConfigEcho,
    result: rescluster::metric::ValidationReport,
}

#[derive(Serialize)]
struct BaselineReport {
    config: ConfigEcho,
    assignments: Vec<usize>,
    k: usize,
}

/// Exit 2: the input failed metric validation. Exit 1: everything else.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidMetric { .. }
            | Error::NotSquare { .. }
            | Error::NotSymmetric { .. }
            | Error::BadEntry { .. }
            | Error::NonzeroDiagonal { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load_metric(args: &InputArgs) -> Result<MetricSpace, Failure> {
    match args.input_kind {
        InputKind::Matrix => {
            let rows = read_matrix_csv(&args.input)?;
            Ok(MetricSpace::from_matrix(&rows, args.eps)?)
        }
        InputKind::Points => {
            let pts = read_points_csv(&args.input)?;
            let norm = match args.norm {
                NormArg::Euclidean => Norm::Euclidean,
                NormArg::Manhattan => Norm::Manhattan,
            };
            Ok(MetricSpace::from_points(&pts, norm)?)
        }
    }
}

fn load_objective(args: &ObjectiveArgs, n: usize) -> Result<Objective, Failure> {
    let obj = match args.objective.as_str() {
        "kmedian" => Objective::kmedian(),
        "kmeans" => Objective::kmeans(),
        "kcenter" => Objective::kcenter(),
        "facility" => {
            let path = args.facility_costs.as_ref().ok_or_else(|| Failure {
                code: 1,
                message: "facility objective requires --facility-costs".into(),
            })?;
            let costs = read_facility_costs(path)?;
            if costs.len() != n {
                return Err(Failure {
                    code: 1,
                    message: format!("{} opening costs for {} points", costs.len(), n),
                });
            }
            Objective::facility_location(costs)?
        }
        other => {
            return Err(Failure {
                code: 1,
                message: format!("unknown objective {other:?}"),
            })
        }
    };
    Ok(obj)
}

fn emit<T: Serialize>(report: &T, out: &OutputArg) -> Result<(), Failure> {
    let mut json = serde_json::to_string_pretty(report).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    json.push('\n');
    match &out.output {
        Some(path) => std::fs::write(path, json).map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        }),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Cluster {
            input,
            objective,
            k,
            output,
        } => {
            let m = load_metric(&input)?;
            let obj = load_objective(&objective, m.n())?;
            let c = rescluster::cluster(&m, &obj, k)?;
            // Re-validate before emitting.
            let (recomputed, _) = clustering_cost(&c.assignment, &m, &obj)?;
            if (recomputed - c.cost).abs() > 1e-9 * recomputed.abs().max(1.0) {
                return Err(Failure {
                    code: 1,
                    message: format!("internal cost mismatch: {} vs {}", c.cost, recomputed),
                });
            }
            let mut config = ConfigEcho::new("cluster")
                .with_input(&input)
                .with_output(&output);
            config.objective = Some(objective.objective.clone());
            config.facility_costs = objective
                .facility_costs
                .as_ref()
                .map(|p| p.display().to_string());
            config.k = Some(k);
            let report = ClusterReport {
                config,
                assignments: c.assignment,
                centers: c.centers,
                cost: c.cost,
                objective: objective.objective,
                k,
            };
            emit(&report, &output)?;
            Ok(0)
        }
        Command::Oracle {
            input,
            objective,
            k,
            tie_tol,
            output,
        } => {
            let m = load_metric(&input)?;
            let obj = load_objective(&objective, m.n())?;
            let result = brute_force_optimal(&m, &obj, k, tie_tol)?;
            let mut config = ConfigEcho::new("oracle")
                .with_input(&input)
                .with_output(&output);
            config.objective = Some(objective.objective.clone());
            config.facility_costs = objective
                .facility_costs
                .as_ref()
                .map(|p| p.display().to_string());
            config.k = Some(k);
            config.tie_tol = Some(tie_tol);
            emit(&OracleReport { config, result }, &output)?;
            Ok(0)
        }
        Command::Probe {
            input,
            objective,
            k,
            alpha,
            trials,
            seed,
            output,
        } => {
            let m = load_metric(&input)?;
            let obj = load_objective(&objective, m.n())?;
            let result = probe_resilience(&m, &obj, k, alpha, trials, seed)?;
            let mut config = ConfigEcho::new("probe")
                .with_input(&input)
                .with_output(&output);
            config.objective = Some(objective.objective.clone());
            config.facility_costs = objective
                .facility_costs
                .as_ref()
                .map(|p| p.display().to_string());
            config.k = Some(k);
            config.alpha = Some(alpha);
            config.trials = Some(trials);
            config.seed = Some(seed);
            emit(&ProbeReport { config, result }, &output)?;
            Ok(0)
        }
        Command::Generate {
            n,
            k,
            margin,
            spread,
            seed,
            matrix_out,
            output,
        } => {
            let (m, planted) = generate_resilient_instance(n, k, margin, spread, seed)?;
            let matrix_csv = matrix_to_csv(&m.matrix());
            if let Some(path) = &matrix_out {
                std::fs::write(path, &matrix_csv).map_err(|e| Failure {
                    code: 1,
                    message: e.to_string(),
                })?;
            }
            let mut config = ConfigEcho::new("generate").with_output(&output);
            config.n = Some(n);
            config.k = Some(k);
            config.margin = Some(margin);
            config.spread = Some(spread);
            config.seed = Some(seed);
            let report = GenerateReport {
                config,
                planted_assignment: planted,
                matrix_csv,
            };
            emit(&report, &output)?;
            Ok(0)
        }
        Command::Validate { input, output } => {
            let rows = match input.input_kind {
                InputKind::Matrix => read_matrix_csv(&input.input)?,
                InputKind::Points => {
                    let pts = read_points_csv(&input.input)?;
                    let norm = match input.norm {
                        NormArg::Euclidean => Norm::Euclidean,
                        NormArg::Manhattan => Norm::Manhattan,
                    };
                    MetricSpace::from_points(&pts, norm)?.matrix()
                }
            };
            let result = validate_metric(&rows, input.eps)?;
            let ok = result.ok;
            let config = ConfigEcho::new("validate")
                .with_input(&input)
                .with_output(&output);
            emit(&ValidateReport { config, result }, &output)?;
            Ok(if ok { 0 } else { 2 })
        }
        Command::Baseline { input, k, output } => {
            let m = load_metric(&input)?;
            let assignments = single_linkage_baseline(&m, k)?;
            let mut config = ConfigEcho::new("baseline")
                .with_input(&input)
                .with_output(&output);
            config.k = Some(k);
            let report = BaselineReport {
                config,
                assignments,
                k,
            };
            emit(&report, &output)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
