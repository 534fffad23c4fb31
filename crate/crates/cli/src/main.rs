//! Command-line front end: parse instances, evaluate gaps, solve, certify.
//!
//! Exit codes: 0 success, 2 parse or schema error, 3 validation error,
//! 4 solver failure, 5 certification not met.

mod schema;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use smpec::certify::{
    kkt_certificate, membership_check, multiplier_certificate, sequential_residuals,
    weak_bcq_check, KktCertificate,
};
use smpec::demo::{self, Demo};
use smpec::gap::eval_gap;
use smpec::model::{validate_instance, MonotonicityCheck, Objective, ProblemInstance};
use smpec::solver::{solve_smpec, solve_vi, SolveConfig, SolveTrace};

#[derive(Parser)]
#[command(
    name = "smpec",
    version,
    about = "Solve and certify convex programs over monotone variational inequality solution sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an instance file and run the standing-assumption checks
    Validate(SourceArgs),
    /// Evaluate the dual gap function at a point
    Gap {
        #[command(flatten)]
        source: SourceArgs,
        /// Evaluation point, comma-separated: "0.5,0.5"
        #[arg(long)]
        point: String,
        /// Near-maximizer tolerance
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Solve the lower-level variational inequality (extragradient)
    Vi {
        #[command(flatten)]
        source: SourceArgs,
        /// Gap value at which the point counts as an equilibrium
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run the regularization solver and write the trace
    Solve {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Solve, then build the full certificate report at a reference point
    Certify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Reference point (defaults to the instance's known solution, then
        /// to the solver's terminal point)
        #[arg(long)]
        point: Option<String>,
    },
    /// Materialize a built-in instance file, then solve and certify it
    Demo {
        /// One of: example-3-1, example-3-2, min-norm-lp,
        /// distance-estimation, basis-pursuit
        name: String,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Directory for the materialized instance, trace and report
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Instance file path
    #[arg(required_unless_present = "demo", conflicts_with = "demo")]
    instance: Option<PathBuf>,
    /// Use a built-in demo instance instead of a file
    #[arg(long)]
    demo: Option<String>,
    /// Half-width of the cube used to wrap unbounded feasible sets
    #[arg(long, default_value_t = 1e3)]
    box_radius: f64,
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// Initial regularization weight
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Decay exponent of the regularization schedule, in (0, 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Gap threshold for declaring an approximate solution
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    /// Certification tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Outer starting point, comma-separated
    #[arg(long)]
    start: Option<String>,
    /// Trace CSV output path
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Report JSON output path
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Parse(String),
    Validation(String),
    Solver(String),
    Certification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Solver(_) => 4,
            Failure::Certification(_) => 5,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Parse(m)
            | Failure::Validation(m)
            | Failure::Solver(m)
            | Failure::Certification(m) => m,
        }
    }
}

fn classify(e: smpec::Error) -> Failure {
    use smpec::Error::*;
    match e {
        DimensionMismatch { .. } | MonotonicityViolation(_) | UnboundedSet(_)
        | InvalidInstance(_) | InvalidConfig(_) => Failure::Validation(e.to_string()),
        NonConvergence { .. } | NotInSet { .. } | TargetNotInHull { .. } | LpInfeasible
        | LpUnbounded | UnsupportedSetDimension { .. } => Failure::Solver(e.to_string()),
        LowerLevelInfeasible { .. } | UncertifiedInput => Failure::Certification(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate(source) => cmd_validate(&source),
        Command::Gap { source, point, tol } => cmd_gap(&source, &point, tol),
        Command::Vi { source, tol } => cmd_vi(&source, tol),
        Command::Solve { source, cfg } => {
            let loaded = load(&source)?;
            let config = build_config(&loaded, &cfg)?;
            let trace = run_solve(&loaded.instance, &config, cfg.trace.as_deref())?;
            let summary = summarize(&loaded.instance, &trace);
            print_summary(&summary);
            if let Some(path) = &cfg.report {
                write_json(path, &summary)?;
            }
            Ok(())
        }
        Command::Certify { source, cfg, point } => {
            let loaded = load(&source)?;
            let config = build_config(&loaded, &cfg)?;
            let reference = match &point {
                Some(s) => Some(parse_point(s, loaded.instance.dim())?),
                None => loaded.instance.known_solution().cloned(),
            };
            run_certify(&loaded.instance, &config, reference, &cfg)
        }
        Command::Demo { name, cfg, out_dir } => cmd_demo(&name, cfg, &out_dir),
    }
}

struct Loaded {
    instance: ProblemInstance,
    demo: Option<Demo>,
}

fn load(source: &SourceArgs) -> Result<Loaded, Failure> {
    if let Some(name) = &source.demo {
        let demo = demo::build(name).ok_or_else(|| {
            Failure::Parse(format!(
                "unknown demo '{name}'; expected one of {}",
                demo::DEMO_NAMES.join(", ")
            ))
        })?;
        return Ok(Loaded {
            instance: demo.instance.clone(),
            demo: Some(demo),
        });
    }
    let path = source.instance.as_ref().expect("clap enforces presence");
    let instance = parse_instance(path, source.box_radius)?;
    Ok(Loaded {
        instance,
        demo: None,
    })
}

/// Parses an instance file with line diagnostics and strict schema checks.
fn parse_instance(path: &Path, box_radius: f64) -> Result<ProblemInstance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: schema::InstanceFile = serde_json::from_str(&text).map_err(|e| {
        Failure::Parse(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    file.into_instance(box_radius)
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn build_config(loaded: &Loaded, cfg: &ConfigArgs) -> Result<SolveConfig, Failure> {
    let mut config = loaded
        .demo
        .as_ref()
        .map(|d| d.config.clone())
        .unwrap_or_default();
    if let Some(v) = cfg.epsilon0 {
        config.epsilon0 = v;
    }
    if let Some(v) = cfg.alpha {
        config.alpha = v;
    }
    if let Some(v) = cfg.mu {
        config.mu = v;
    }
    if let Some(v) = cfg.max_outer {
        config.max_outer = v;
    }
    if let Some(v) = cfg.max_inner {
        config.subproblem.max_inner = v;
    }
    if let Some(s) = &cfg.start {
        config.start = Some(parse_point(s, loaded.instance.dim())?);
    }
    config.validate().map_err(classify)?;
    Ok(config)
}

fn parse_point(s: &str, dim: usize) -> Result<DVector<f64>, Failure> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| Failure::Parse(format!("invalid point '{s}': {e}")))?;
    if values.len() != dim {
        return Err(Failure::Parse(format!(
            "point '{s}' has {} coordinates, instance dimension is {dim}",
            values.len()
        )));
    }
    Ok(DVector::from_vec(values))
}

fn cmd_validate(source: &SourceArgs) -> Result<(), Failure> {
    let loaded = load(source)?;
    let report = validate_instance(&loaded.instance).map_err(classify)?;
    println!("dimension: {}", report.dimension);
    match report.monotonicity {
        MonotonicityCheck::AffineEigenvalue { min_eigenvalue } => {
            println!("monotone: true (symmetric part min eigenvalue {min_eigenvalue:.3e})")
        }
        MonotonicityCheck::SampledPairs {
            pairs,
            min_inner_product,
        } => println!(
            "monotone: sampled over {pairs} pairs (min inner product {min_inner_product:.3e})"
        ),
    }
    println!("set bounded: {}", report.set_bounded);
    if let Some(r) = report.wrapped_radius {
        println!("set wrapped in cube of half-width {r}");
    }
    println!("instance valid");
    Ok(())
}

fn cmd_gap(source: &SourceArgs, point: &str, tol: f64) -> Result<(), Failure> {
    let loaded = load(source)?;
    validate_instance(&loaded.instance).map_err(classify)?;
    let x = parse_point(point, loaded.instance.dim())?;
    let eval =
        smpec::gap::eval_gap_with_tol(&loaded.instance, &x, tol).map_err(classify)?;
    println!("value: {:.16e}", eval.value);
    println!("subgradient: {}", fmt_vec(&eval.subgradient));
    println!("maximizers: {}", eval.maximizers.len());
    println!("first maximizer: {}", fmt_vec(&eval.maximizers[0]));
    println!("inner iterations: {}", eval.inner_iterations);
    println!("certified: {}", eval.certified);
    Ok(())
}

fn cmd_vi(source: &SourceArgs, tol: f64) -> Result<(), Failure> {
    let loaded = load(source)?;
    let r = solve_vi(&loaded.instance, tol).map_err(classify)?;
    println!("point: {}", fmt_vec(&r.point));
    println!("gap residual: {:.16e}", r.residual);
    println!("iterations: {}", r.iterations);
    println!("converged: {}", r.converged);
    Ok(())
}

fn run_solve(
    inst: &ProblemInstance,
    config: &SolveConfig,
    trace_path: Option<&Path>,
) -> Result<SolveTrace, Failure> {
    let trace = solve_smpec(inst, config).map_err(classify)?;
    if let Some(path) = trace_path {
        std::fs::write(path, trace.to_csv())
            .map_err(|e| Failure::Solver(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(trace)
}

#[derive(Serialize)]
struct SolveSummary {
    terminal: Vec<f64>,
    objective: f64,
    gap: f64,
    status: String,
    outer_iterations: usize,
    inner_iterations_total: usize,
    wrap_boundary_contact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimated_distance: Option<f64>,
}

fn summarize(inst: &ProblemInstance, trace: &SolveTrace) -> SolveSummary {
    let term = trace.terminal();
    // for a half-squared-distance objective, sqrt(2 f) estimates the
    // distance from the anchor to the feasible equilibrium set
    let estimated_distance = match inst.objective() {
        Objective::QuadraticDistance { .. } => Some((2.0 * term.objective).sqrt()),
        _ => None,
    };
    SolveSummary {
        terminal: term.x.iter().copied().collect(),
        objective: term.objective,
        gap: term.gap,
        status: trace.status.as_str().to_string(),
        outer_iterations: trace.entries.len(),
        inner_iterations_total: trace.entries.iter().map(|e| e.inner_iterations).sum(),
        wrap_boundary_contact: inst.touches_wrap_boundary(&term.x, 1e-6),
        estimated_distance,
    }
}

fn print_summary(s: &SolveSummary) {
    println!("status: {}", s.status);
    println!("outer iterations: {}", s.outer_iterations);
    println!("inner iterations: {}", s.inner_iterations_total);
    println!(
        "terminal x: [{}]",
        s.terminal
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("objective f(x): {:.16e}", s.objective);
    println!("gap g_D(x): {:.16e}", s.gap);
    if s.wrap_boundary_contact {
        println!("warning: terminal point touches the wrap boundary; increase --box-radius");
    }
    if let Some(d) = s.estimated_distance {
        println!("estimated distance sqrt(2 f): {d:.16e}");
    }
}

#[derive(Serialize)]
struct CertifyReport {
    reference: Vec<f64>,
    solve: SolveSummary,
    kkt: serde_json::Value,
    weak_bcq: serde_json::Value,
    multiplier: serde_json::Value,
    sequential: serde_json::Value,
    membership_of_reference: serde_json::Value,
}

fn run_certify(
    inst: &ProblemInstance,
    config: &SolveConfig,
    reference: Option<DVector<f64>>,
    cfg: &ConfigArgs,
) -> Result<(), Failure> {
    let tol = cfg.tol.unwrap_or(smpec::certify::DEFAULT_CERT_TOL);
    let trace = run_solve(inst, config, cfg.trace.as_deref())?;
    let reference = reference.unwrap_or_else(|| trace.terminal().x.clone());
    let summary = summarize(inst, &trace);

    let kkt: Result<KktCertificate, smpec::Error> = kkt_certificate(inst, &reference, tol);
    let weak_bcq = weak_bcq_check(inst, &reference, tol);
    let multiplier = multiplier_certificate(inst, &reference, tol);
    let sequential = sequential_residuals(inst, &trace, Some(&reference));
    let membership = match &kkt {
        Ok(cert) if cert.certified => {
            membership_check(inst, cert, &trace.terminal().x.clone(), tol.max(1e-5))
                .map(|r| serde_json::to_value(r).unwrap())
                .unwrap_or_else(|e| serde_json::json!({ "error": e.to_string() }))
        }
        _ => serde_json::json!({ "skipped": "no certified certificate" }),
    };

    let report = CertifyReport {
        reference: reference.iter().copied().collect(),
        solve: summary,
        kkt: result_json(&kkt),
        weak_bcq: result_json(&weak_bcq),
        multiplier: result_json(&multiplier),
        sequential: result_json(&sequential),
        membership_of_reference: membership,
    };
    if let Some(path) = &cfg.report {
        write_json(path, &report)?;
    }

    print_summary(&report.solve);
    match &kkt {
        Ok(cert) => {
            println!(
                "kkt certificate: certified={} stationarity={:.3e} complementarity={:.3e} points={}",
                cert.certified,
                cert.stationarity_residual,
                cert.complementarity_residual,
                cert.points.len()
            );
        }
        Err(e) => println!("kkt certificate: error: {e}"),
    }
    match &weak_bcq {
        Ok(d) => println!(
            "weak BCQ: {:?} (faces={}, min distance={})",
            d.verdict,
            d.face_count,
            d.min_distance
                .map(|v| format!("{v:.3e}"))
                .unwrap_or_else(|| "n/a".into())
        ),
        Err(e) => println!("weak BCQ: error: {e}"),
    }
    match &multiplier {
        Ok(c) => println!(
            "multiplier certificate: certified={} residual={:.3e} scalar multiplier={:.6e}",
            c.certified, c.residual, c.scalar_multiplier
        ),
        Err(e) => println!("multiplier certificate: error: {e}"),
    }
    match &sequential {
        Ok(r) => println!(
            "sequential residual tails: r1={:.3e} r2={:.3e} r3={:.3e} r4={:.3e}",
            r.tail.r1, r.tail.r2, r.tail.r3, r.tail.r4
        ),
        Err(e) => println!("sequential residuals: error: {e}"),
    }

    match kkt {
        Ok(cert) if cert.certified => Ok(()),
        Ok(_) => Err(Failure::Certification(
            "kkt certificate residuals exceed tolerance".into(),
        )),
        Err(e) => Err(classify(e)),
    }
}

fn result_json<T: Serialize>(r: &Result<T, smpec::Error>) -> serde_json::Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap(),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    }
}

fn cmd_demo(name: &str, cfg: ConfigArgs, out_dir: &Path) -> Result<(), Failure> {
    let demo = demo::build(name).ok_or_else(|| {
        Failure::Parse(format!(
            "unknown demo '{name}'; expected one of {}",
            demo::DEMO_NAMES.join(", ")
        ))
    })?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Failure::Solver(format!("cannot create {}: {e}", out_dir.display())))?;

    // materialize the instance file
    let file = schema::InstanceFile::from_instance(&demo.instance)
        .map_err(|e| Failure::Parse(e.to_string()))?;
    let instance_path = out_dir.join(format!("{name}.json"));
    write_json(&instance_path, &file)?;
    println!("instance written to {}", instance_path.display());

    let mut cfg = cfg;
    if cfg.trace.is_none() {
        cfg.trace = Some(out_dir.join(format!("{name}-trace.csv")));
    }
    if cfg.report.is_none() {
        cfg.report = Some(out_dir.join(format!("{name}-report.json")));
    }
    let loaded = Loaded {
        instance: demo.instance.clone(),
        demo: Some(demo),
    };
    let config = build_config(&loaded, &cfg)?;
    let reference = loaded.instance.known_solution().cloned();
    run_certify(&loaded.instance, &config, reference, &cfg)?;
    println!(
        "trace written to {}",
        cfg.trace.as_ref().unwrap().display()
    );
    println!(
        "report written to {}",
        cfg.report.as_ref().unwrap().display()
    );
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Solver(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::Solver(format!("cannot write {}: {e}", path.display())))
}

fn fmt_vec(v: &DVector<f64>) -> String {
    format!(
        "[{}]",
        v.iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(", ")
    )
}
