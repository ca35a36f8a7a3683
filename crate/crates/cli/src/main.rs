//! Command-line front end: instance generators, local search, the exact
//! oracle, stability falsification and reduction certificates.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage or input error,
//! 3 enumeration budget exceeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swapstable::exact::{int, parse_rational, rat};
use swapstable::io::{
    parse_graph, parse_instance, parse_tiling, serialize_instance, write_certificate, write_optima, write_trace,
    write_verdict,
};
use swapstable::local_search::{rho_swap_search, SearchConfig, SearchTrace};
use swapstable::oracle::{solve_exact, verify_cost_drop, DEFAULT_BUDGET};
use swapstable::reductions::{
    build_cylinder_instance, build_grid_instance, build_pvc_instance, certify_grid_equivalence, certify_pvc_reduction,
    clearance_grid, fit_sphere_3d, fit_sphere_4d, integer_separation, measure_approx_check, sphere_curve_clearance,
    GridReductionSpec, PvcGraph, PvcVariant, ReductionCertificate,
};
use swapstable::stability::{certify_stable_family, falsify_stability, FalsifyConfig, StabilityStatus};
use swapstable::{Error, Instance, Point, Rational, Role, Solution};

#[derive(Parser, Debug)]
#[command(name = "swapstable", version, about = "Swap local search and exact tooling for stable k-means and k-median")]
struct Cli {
    /// Worker threads for enumeration and perturbation trials. Output does
    /// not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the grid-tiling clustering instance.
    GenGrid(GridArgs),
    /// Build the cylinder-metric clustering instance.
    GenCylinder(GridArgs),
    /// Build the four-dimensional partial vertex cover instance.
    GenPvc4(GraphArgs),
    /// Build the six-dimensional partial vertex cover instance.
    GenPvc6(GraphArgs),
    /// Run the swap local search.
    Solve(SolveArgs),
    /// Enumerate every k-subset and report all optima.
    Oracle(OracleArgs),
    /// Search for perturbations that move the optimum too far.
    VerifyStability(StabilityArgs),
    /// Check a generated instance against brute force on its source problem.
    CertifyReduction(CertifyArgs),
    /// Measure approximation, sphere fits and clearance, and optionally the
    /// cost-drop property on an instance.
    CheckLemmas(LemmaArgs),
    /// Time the local search against the oracle.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output file for the primary result.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Subset-enumeration budget.
    #[arg(long)]
    budget: Option<u128>,
}

impl Common {
    fn budget(&self) -> u128 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    tiling: PathBuf,
    /// Lattice spacing; 1/eps must be an integer.
    #[arg(long, default_value = "1/2")]
    eps: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Overrides the number of vertices to choose.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Overrides the number of centres to open.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, default_value_t = 2)]
    rho: usize,
    /// Analysis parameter recorded with the run.
    #[arg(long, default_value = "1/10")]
    eps: String,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Search even when the swap neighbourhood is very large.
    #[arg(long)]
    force: bool,
    /// Trace file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value = "0")]
    beta: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check only the canonical perturbation family instead of sampling.
    #[arg(long)]
    family: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variant {
    Grid,
    Pvc4,
    Pvc6,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, value_enum)]
    variant: Variant,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    tiling: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "1/2")]
    eps: String,
    /// A previously generated instance that must equal the regenerated one.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    /// Largest moment-curve parameter for the sphere checks.
    #[arg(long, default_value_t = 8)]
    max_vertex: i64,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "1/10")]
    eps: String,
    #[arg(long, default_value_t = 2)]
    rho: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Largest swap size to time; every size from 1 up is run.
    #[arg(long, default_value_t = 2)]
    rho: usize,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::BudgetExceeded { .. }) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command printed and whether its verdict was positive.
struct Report {
    text: String,
    positive: bool,
}

impl Report {
    fn ok(text: String) -> Report {
        Report { text, positive: true }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(if report.positive { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: Command) -> CliResult<Report> {
    match cmd {
        Command::GenGrid(a) => gen_grid(a, false),
        Command::GenCylinder(a) => gen_grid(a, true),
        Command::GenPvc4(a) => gen_pvc(a, PvcVariant::Pvc4),
        Command::GenPvc6(a) => gen_pvc(a, PvcVariant::Pvc6),
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::VerifyStability(a) => verify_stability(a),
        Command::CertifyReduction(a) => certify_reduction(a),
        Command::CheckLemmas(a) => check_lemmas(a),
        Command::Bench(a) => bench(a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn rational(flag: &str, value: &str) -> CliResult<Rational> {
    parse_rational(value).map_err(|_| CliError::Usage(format!("--{flag}: `{value}` is not a rational")))
}

fn load_instance(args: &InstanceArgs) -> CliResult<Instance> {
    let inst = parse_instance(&read(&args.instance)?)?;
    match args.k {
        Some(k) if k != inst.k() => {
            let mut b = inst.to_builder();
            b.k = k;
            Ok(b.build()?)
        }
        _ => Ok(inst),
    }
}

fn load_graph(path: &Path, k: Option<usize>) -> CliResult<PvcGraph> {
    let g = parse_graph(&read(path)?)?;
    match k {
        Some(k) => Ok(PvcGraph::new(g.n_vertices, g.edges, k, g.s)?),
        None => Ok(g),
    }
}

fn grid_spec(tiling: &Path, eps: &str) -> CliResult<GridReductionSpec> {
    let gt = parse_tiling(&read(tiling)?)?;
    Ok(GridReductionSpec::new(gt, rational("eps", eps)?)?)
}

fn ids(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Writes `text` to `out` if given; otherwise it becomes the report.
fn emit(out: Option<&Path>, text: String, summary: String) -> CliResult<Report> {
    match out {
        Some(path) => {
            write(path, &text)?;
            Ok(Report::ok(format!("{summary}wrote {}\n", path.display())))
        }
        None => Ok(Report::ok(text)),
    }
}

fn gen_grid(a: GridArgs, cylinder: bool) -> CliResult<Report> {
    let spec = grid_spec(&a.tiling, &a.eps)?;
    let inst = if cylinder { build_cylinder_instance(&spec)? } else { build_grid_instance(&spec)? };
    let summary = format!("points {} centres {} k {}\n", inst.points().len(), inst.centres().len(), inst.k());
    emit(a.out.as_deref(), serialize_instance(&inst), summary)
}

fn gen_pvc(a: GraphArgs, variant: PvcVariant) -> CliResult<Report> {
    let g = load_graph(&a.graph, a.k)?;
    let red = build_pvc_instance(&g, variant)?;
    let summary = format!(
        "points {} centres {} k {} radius_sq {}\n",
        red.instance.points().len(),
        red.instance.centres().len(),
        red.instance.k(),
        red.radius_sq
    );
    emit(a.out.as_deref(), serialize_instance(&red.instance), summary)
}

fn run_search(inst: &Instance, cfg: &SearchConfig) -> CliResult<(Solution, SearchTrace, Vec<usize>)> {
    if inst.has_penalties() {
        // Penalties are handled through the lifted instance with the dummy
        // centre kept open.
        let aug = inst.lift_penalties()?;
        let seed = cfg.seed_solution.as_ref().map(|s| aug.extend(s));
        let cfg = SearchConfig { seed_solution: seed, ..cfg.clone() };
        let (sol, trace) = rho_swap_search(&aug, &cfg)?;
        let base = aug.restrict(&sol.centres);
        Ok((sol, trace, base))
    } else {
        let (sol, trace) = rho_swap_search(inst, cfg)?;
        let base = sol.centres.clone();
        Ok((sol, trace, base))
    }
}

fn solve(a: SolveArgs) -> CliResult<Report> {
    let inst = load_instance(&a.input)?;
    let cfg = SearchConfig {
        rho: a.rho,
        max_iters: a.max_iters,
        epsilon: rational("eps", &a.eps)?,
        force: a.force,
        ..SearchConfig::default()
    };
    let (sol, trace, centres) = run_search(&inst, &cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "cost {}", sol.cost);
    let _ = writeln!(text, "cost_approx {:.9}", sol.cost.to_f64());
    let _ = writeln!(text, "centres {}", ids(&centres));
    let _ = writeln!(text, "iterations {}", trace.iterations());
    let _ = writeln!(text, "iteration_bound {:.6}", trace.theoretical_bound);
    if let Some(path) = &a.out {
        write(path, &write_trace(&trace))?;
        let _ = writeln!(text, "trace {}", path.display());
    }
    Ok(Report::ok(text))
}

fn oracle(a: OracleArgs) -> CliResult<Report> {
    let inst = load_instance(&a.input)?;
    let opt = solve_exact(&inst, a.common.budget())?;
    let text = write_optima(&opt);
    match &a.common.out {
        Some(path) => {
            write(path, &text)?;
            Ok(Report::ok(format!("{text}wrote {}\n", path.display())))
        }
        None => Ok(Report::ok(text)),
    }
}

fn verify_stability(a: StabilityArgs) -> CliResult<Report> {
    let inst = load_instance(&a.input)?;
    let alpha = rational("alpha", &a.alpha)?;
    let (text, positive) = if a.family {
        let cert = certify_stable_family(&inst, &alpha, a.common.budget())?;
        let mut text = String::new();
        let _ = writeln!(text, "status {}", if cert.stable { "stable" } else { "violated" });
        let _ = writeln!(text, "alpha {}", cert.alpha);
        let _ = writeln!(text, "checked {}", cert.checked);
        if let Some((s, o)) = &cert.witness {
            let _ = writeln!(text, "witness_solution {}", ids(s));
            let _ = writeln!(text, "witness_optimum {}", ids(o));
        }
        (text, cert.stable)
    } else {
        let cfg = FalsifyConfig { trials: a.trials, seed: a.seed, canonical: true, budget: a.common.budget() };
        let v = falsify_stability(&inst, &alpha, &rational("beta", &a.beta)?, &cfg)?;
        (write_verdict(&v), v.status == StabilityStatus::NoViolationFound)
    };
    let mut report = emit(a.common.out.as_deref(), text.clone(), text)?;
    report.positive = positive;
    Ok(report)
}

fn certify_reduction(a: CertifyArgs) -> CliResult<Report> {
    let budget = a.common.budget();
    let (cert, generated): (ReductionCertificate, Instance) = match a.variant {
        Variant::Grid => {
            let tiling = a.tiling.as_ref().ok_or_else(|| CliError::Usage("--variant grid needs --tiling".into()))?;
            let spec = grid_spec(tiling, &a.eps)?;
            (certify_grid_equivalence(&spec, budget)?, build_grid_instance(&spec)?)
        }
        Variant::Pvc4 | Variant::Pvc6 => {
            let graph = a.graph.as_ref().ok_or_else(|| CliError::Usage("pvc variants need --graph".into()))?;
            let g = load_graph(graph, a.k)?;
            let variant = if matches!(a.variant, Variant::Pvc4) { PvcVariant::Pvc4 } else { PvcVariant::Pvc6 };
            let red = build_pvc_instance(&g, variant)?;
            (certify_pvc_reduction(&red, budget)?, red.instance)
        }
    };
    let mut text = write_certificate(&cert);
    let mut positive = cert.holds();
    if let Some(path) = &a.instance {
        let given = parse_instance(&read(path)?)?;
        let same = given == generated;
        let _ = writeln!(text, "instance_matches {}", if same { "yes" } else { "no" });
        positive &= same;
    }
    let mut report = emit(a.common.out.as_deref(), text.clone(), text)?;
    report.positive = positive;
    Ok(report)
}

fn check_lemmas(a: LemmaArgs) -> CliResult<Report> {
    if a.max_vertex < 2 {
        return Err(CliError::Usage("--max-vertex must be at least 2".into()));
    }
    let mut text = String::new();
    let mut positive = true;

    let centre = Point::at(Role::Data, 0, &[rat(1, 2), rat(1, 2)]);
    for r in [rat(1, 4), rat(1, 2), int(1)] {
        for eps in [rat(1, 20), rat(1, 50), rat(1, 100)] {
            let m = measure_approx_check(&centre, &r, &eps)?;
            positive &= m.holds();
            let _ = writeln!(
                text,
                "measure r {r} eps {eps} count {} in [{:.3}, {:.3}] distance_sum {:.6} <= {:.6} {}",
                m.count,
                m.count_lower,
                m.count_upper,
                m.distance_sum,
                m.distance_upper,
                if m.holds() { "pass" } else { "fail" }
            );
        }
    }

    let quarter = rat(1, 4);
    let mut fits = 0;
    let mut bad = Vec::new();
    let mut checked = 0;
    for i in 1..=a.max_vertex {
        for j in i + 1..=a.max_vertex {
            let f3 = fit_sphere_3d(&int(i), &int(j))?;
            let f4 = fit_sphere_4d(&int(1), &int(i + 1), &int(j + 1))?;
            for (fit, top) in [(f3, a.max_vertex), (f4, a.max_vertex + 1)] {
                fits += 1;
                let separated = integer_separation(&fit, 1..=top).map_or(true, |s| s >= quarter);
                let clear = sphere_curve_clearance(&fit, &clearance_grid(&fit, top));
                checked += clear.checked;
                if !fit.residuals_vanish() || !separated || !clear.holds() {
                    bad.push(format!("{}d{:?}", fit.dim, fit.tangent.iter().map(|t| t.to_string()).collect::<Vec<_>>()));
                }
            }
        }
    }
    positive &= bad.is_empty();
    let _ = writeln!(text, "sphere_fits {fits} clearance_points {checked} failures {}", bad.len());
    for b in &bad {
        let _ = writeln!(text, "sphere_failure {b}");
    }

    if let Some(path) = &a.instance {
        let inst = parse_instance(&read(path)?)?;
        let eps = rational("eps", &a.eps)?;
        let rep = verify_cost_drop(&inst, &eps, a.rho, a.common.budget())?;
        positive &= rep.holds();
        let _ = writeln!(
            text,
            "cost_drop eps {eps} rho {} pairs {} premise_pairs {} counterexamples {} failures_at_rho {}",
            a.rho,
            rep.pairs,
            rep.premise_pairs,
            rep.counterexamples.len(),
            rep.failures_at_rho
        );
        for (r, n) in &rep.min_swap_histogram {
            let _ = writeln!(text, "min_swap {r} {n}");
        }
    }
    let _ = writeln!(text, "lemmas {}", if positive { "hold" } else { "fail" });
    let mut report = emit(a.common.out.as_deref(), text.clone(), text)?;
    report.positive = positive;
    Ok(report)
}

fn bench(a: BenchArgs) -> CliResult<Report> {
    let inst = load_instance(&a.input)?;
    let mut text = String::new();
    let start = Instant::now();
    let opt = solve_exact(&inst, a.common.budget())?;
    let _ = writeln!(
        text,
        "oracle optimal_cost {} optima {} evaluated {} seconds {:.3}",
        opt.optimal_cost,
        opt.solutions.len(),
        opt.evaluated,
        start.elapsed().as_secs_f64()
    );
    let mut all_optimal = true;
    for rho in 1..=a.rho {
        let cfg = SearchConfig { force: a.force, ..SearchConfig::with_rho(rho) };
        let start = Instant::now();
        let (sol, trace, centres) = run_search(&inst, &cfg)?;
        let optimal = opt.contains(&centres);
        all_optimal &= optimal;
        let _ = writeln!(
            text,
            "rho {rho} cost {} iterations {} optimal {} seconds {:.3}",
            sol.cost,
            trace.iterations(),
            if optimal { "yes" } else { "no" },
            start.elapsed().as_secs_f64()
        );
    }
    let mut report = emit(a.common.out.as_deref(), text.clone(), text)?;
    report.positive = all_optimal;
    Ok(report)
}
