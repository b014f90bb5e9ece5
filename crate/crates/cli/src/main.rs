//! Command-line front end: solve single cells, sweep trade-off fronts,
//! benchmark the two algorithms, compute the carbon floor, cluster day
//! profiles, run the brute-force oracle, and validate instance files.
//!
//! Exit codes: 0 success, 2 bad input, 3 result did not converge,
//! 4 solver failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use minregret::cluster;
use minregret::model::{self, ModelInstance};
use minregret::oracle::{oracle_regret, OracleConfig};
use minregret::regret::{self, Algorithm, GenericRegretProblem, RegretConfig, RunStatus};
use minregret::scalarize::{self, ComparatorMode};
use minregret::uncertainty::PriceBox;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_BAD_INPUT: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "minregret",
    version,
    about = "Regret-robust building energy supply design under price uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one (alpha, carbon cap) cell and write a regret certificate.
    Solve(SolveArgs),
    /// Sweep an (alpha, cap) grid into a trade-off front CSV.
    Sweep(SweepArgs),
    /// Compare CG and C&CG iterations/time over an instance grid.
    Benchmark(BenchmarkArgs),
    /// Minimal annual carbon achievable without the backstop generators.
    Mincarbon(MincarbonArgs),
    /// Select representative days from a day-profile CSV by k-medoids.
    Cluster(ClusterArgs),
    /// Brute-force lattice verification of one cell.
    Oracle(OracleArgs),
    /// Check an instance file and report diagnostics.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Cg,
    Ccg,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Cg => Algorithm::Cg,
            AlgorithmArg::Ccg => Algorithm::Ccg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ComparatorArg {
    Unconstrained,
    #[value(name = "carbon-capped")]
    CarbonCapped,
}

impl From<ComparatorArg> for ComparatorMode {
    fn from(c: ComparatorArg) -> Self {
        match c {
            ComparatorArg::Unconstrained => ComparatorMode::Unconstrained,
            ComparatorArg::CarbonCapped => ComparatorMode::CarbonCapped,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Relative half-width of the price box.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Annual carbon cap in kg CO2-equivalent.
    #[arg(long, conflicts_with = "cap_t")]
    cap_kg: Option<f64>,
    /// Annual carbon cap in t CO2-equivalent.
    #[arg(long)]
    cap_t: Option<f64>,
    #[arg(long, value_enum, default_value = "ccg")]
    algorithm: AlgorithmArg,
    /// Termination gap in EUR.
    #[arg(long)]
    eps: Option<f64>,
    /// Subproblem gap in EUR (defaults to eps/10).
    #[arg(long)]
    sp_gap: Option<f64>,
    #[arg(long, value_enum, default_value = "unconstrained")]
    comparator: ComparatorArg,
    /// Certificate output path (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Comma-separated caps in kg.
    #[arg(long, value_delimiter = ',', conflicts_with = "caps_t")]
    caps_kg: Vec<f64>,
    /// Comma-separated caps in t.
    #[arg(long, value_delimiter = ',')]
    caps_t: Vec<f64>,
    #[arg(long, value_enum, default_value = "ccg")]
    algorithm: AlgorithmArg,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    sp_gap: Option<f64>,
    #[arg(long, value_enum, default_value = "unconstrained")]
    comparator: ComparatorArg,
    /// Front CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Concurrent cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reserved for reproducibility bookkeeping; the solver itself is
    /// deterministic.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Comma-separated instance files; each contributes one block.
    #[arg(long, value_delimiter = ',')]
    instances: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', conflicts_with = "caps_t")]
    caps_kg: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    caps_t: Vec<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    sp_gap: Option<f64>,
    #[arg(long, value_enum, default_value = "unconstrained")]
    comparator: ComparatorArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MincarbonArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Optional JSON output `{"min_carbon_kg": ...}`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Day-profile CSV (`day,step,heat_kwh,cold_kwh[,extra...]`).
    #[arg(long)]
    profiles: PathBuf,
    #[arg(short)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Include extra series in the clustering distance (default: loads only).
    #[arg(long)]
    all_series: bool,
    /// Output path for the instance-file `days` section (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, conflicts_with = "cap_t")]
    cap_kg: Option<f64>,
    #[arg(long)]
    cap_t: Option<f64>,
    #[arg(long, value_enum, default_value = "unconstrained")]
    comparator: ComparatorArg,
    /// Lattice points per free price axis.
    #[arg(long, default_value_t = 101)]
    grid_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Box half-width the instance is meant for (affects warnings only).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_BAD_INPUT, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self { code: EXIT_SOLVER, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Mincarbon(args) => cmd_mincarbon(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_instance(path: &Path) -> Result<ModelInstance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    ModelInstance::from_json_str(&text)
        .map_err(|e| Failure::input(format!("cannot parse {}: {e}", path.display())))
}

/// Whole-file atomic write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, content: &str) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => PathBuf::from(format!(".minregret.tmp-{}", std::process::id())),
    };
    std::fs::write(&tmp, content)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| Failure::input(format!("cannot move into {}: {e}", path.display())))?;
    Ok(())
}

fn cap_in_kg(cap_kg: Option<f64>, cap_t: Option<f64>) -> Result<f64, Failure> {
    let cap = match (cap_kg, cap_t) {
        (Some(kg), None) => kg,
        (None, Some(t)) => t * 1000.0,
        (None, None) => return Err(Failure::input("one of --cap-kg/--cap-t is required")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if !(cap > 0.0) {
        return Err(Failure::input(format!("carbon cap must be positive, got {cap} kg")));
    }
    Ok(cap)
}

fn caps_in_kg(caps_kg: &[f64], caps_t: &[f64]) -> Result<Vec<f64>, Failure> {
    let caps: Vec<f64> = if !caps_kg.is_empty() {
        caps_kg.to_vec()
    } else {
        caps_t.iter().map(|t| t * 1000.0).collect()
    };
    if caps.iter().any(|c| !(*c > 0.0)) {
        return Err(Failure::input("all carbon caps must be positive"));
    }
    Ok(caps)
}

fn regret_config(eps: Option<f64>, sp_gap: Option<f64>) -> Result<(RegretConfig, bool), Failure> {
    let eps_given = eps.is_some();
    let epsilon = eps.unwrap_or(100.0);
    if !(epsilon > 0.0) {
        return Err(Failure::input(format!("eps must be positive, got {epsilon}")));
    }
    let mut config = RegretConfig::with_epsilon(epsilon);
    config.sp_gap = sp_gap;
    Ok((config, eps_given))
}

fn assert_distinct(instance: &Path, out: Option<&Path>) -> Result<(), Failure> {
    if let Some(out) = out {
        if out == instance {
            return Err(Failure::input("--out must differ from --instance"));
        }
    }
    Ok(())
}

fn validated(instance: ModelInstance, alpha: f64) -> Result<ModelInstance, Failure> {
    let diags = model::validate_instance(&instance, alpha);
    if model::has_errors(&diags) {
        let mut msg = String::from("instance is invalid:");
        for d in diags.iter().filter(|d| d.severity == model::Severity::Error) {
            let _ = write!(msg, "\n  - {}", d.message);
        }
        return Err(Failure::input(msg));
    }
    Ok(instance)
}

fn map_cell_error(err: scalarize::ScalarizeError) -> Failure {
    match err {
        scalarize::ScalarizeError::CapBelowFloor(_) | scalarize::ScalarizeError::Infeasible(_) => {
            Failure::input(err.to_string())
        }
        other => Failure::solver(other.to_string()),
    }
}

/// Formats an amount, folding negative zero away.
fn fmt_amount(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// Device rows of the human summary, in the fixed device-table order.
fn design_table(design: &std::collections::BTreeMap<String, f64>) -> String {
    let mut rows: Vec<(String, f64)> = design
        .iter()
        .map(|(name, v)| {
            let abbr = name
                .strip_prefix("d[")
                .and_then(|s| s.strip_suffix(']'))
                .unwrap_or(name);
            (abbr.to_string(), *v)
        })
        .collect();
    let rank = |abbr: &str| {
        scalarize::DEVICE_COLUMN_ORDER
            .iter()
            .position(|a| *a == abbr)
            .unwrap_or(scalarize::DEVICE_COLUMN_ORDER.len())
    };
    rows.sort_by(|a, b| rank(&a.0).cmp(&rank(&b.0)).then(a.0.cmp(&b.0)));
    let mut out = String::new();
    for (abbr, size) in rows {
        let _ = writeln!(out, "  {abbr:<10} {:>12}", fmt_amount(size));
    }
    out
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    assert_distinct(&args.instance, args.out.as_deref())?;
    let cap = cap_in_kg(args.cap_kg, args.cap_t)?;
    let (config, eps_given) = regret_config(args.eps, args.sp_gap)?;
    let instance = validated(load_instance(&args.instance)?, args.alpha)?;
    let algorithm: Algorithm = args.algorithm.into();
    let mode: ComparatorMode = args.comparator.into();

    let sf = model::build_standard_form(&instance).map_err(|e| Failure::input(e.to_string()))?;
    let boxed = PriceBox::new(instance.prices.clone(), args.alpha)
        .map_err(|e| Failure::input(e.to_string()))?;
    let base =
        GenericRegretProblem::assemble(&sf, &boxed).map_err(|e| Failure::solver(e.to_string()))?;
    let problem =
        scalarize::apply_carbon_cap(&base, &instance, cap, mode).map_err(map_cell_error)?;
    let cert =
        regret::run(&problem, algorithm, &config).map_err(|e| Failure::solver(e.to_string()))?;

    if let Some(out) = &args.out {
        let doc = cert.to_document(&problem);
        let json = serde_json::to_string_pretty(&doc)
            .map_err(|e| Failure::solver(format!("certificate serialization: {e}")))?;
        write_atomic(out, &json)?;
    }

    let status = match cert.status {
        RunStatus::Converged => "converged",
        RunStatus::ConvergedByStall => "stalled before reaching the gap",
        RunStatus::IterationLimit => "hit the iteration limit",
    };
    println!(
        "regret certificate ({}, {} comparator)",
        cert.algorithm.label(),
        mode.label()
    );
    println!("  status       {status}");
    println!("  lower bound  {} EUR/a", fmt_amount(cert.lower_bound));
    println!("  upper bound  {} EUR/a", fmt_amount(cert.upper_bound));
    println!(
        "  epsilon      {} EUR{}",
        cert.epsilon,
        if eps_given { "" } else { " (default)" }
    );
    println!("  alpha        {}", args.alpha);
    println!("  cap          {cap} kg/a");
    println!("  iterations   {}", cert.iterations);
    println!("design sizes:");
    print!("{}", design_table(&cert.design_by_name(&problem)));

    if cert.status == RunStatus::Converged {
        Ok(())
    } else {
        Err(Failure { code: EXIT_NONCONVERGED, message: format!("run {status}") })
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    assert_distinct(&args.instance, Some(&args.out))?;
    if args.alphas.is_empty() {
        return Err(Failure::input("--alphas must list at least one value"));
    }
    let caps = caps_in_kg(&args.caps_kg, &args.caps_t)?;
    if caps.is_empty() {
        return Err(Failure::input("one of --caps-kg/--caps-t must list values"));
    }
    let (config, _) = regret_config(args.eps, args.sp_gap)?;
    let max_alpha = args.alphas.iter().cloned().fold(0.0, f64::max);
    let instance = validated(load_instance(&args.instance)?, max_alpha)?;
    let records = scalarize::sweep(
        &instance,
        &args.alphas,
        &caps,
        args.algorithm.into(),
        &config,
        args.comparator.into(),
        args.jobs,
    )
    .map_err(map_cell_error)?;
    write_atomic(&args.out, &scalarize::front_csv(&records))?;
    let failed = records.iter().filter(|r| r.status != "converged").count();
    println!(
        "sweep: {} cells ({} converged) -> {}",
        records.len(),
        records.len() - failed,
        args.out.display()
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_NONCONVERGED,
            message: format!("{failed} cell(s) did not converge"),
        })
    }
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), Failure> {
    let caps = if args.caps_kg.is_empty() && args.caps_t.is_empty() {
        Vec::new()
    } else {
        caps_in_kg(&args.caps_kg, &args.caps_t)?
    };
    let (config, _) = regret_config(args.eps, args.sp_gap)?;
    let mode: ComparatorMode = args.comparator.into();

    let mut out = String::from("instance,days,steps,metric");
    for alpha in &args.alphas {
        for cap in &caps {
            let _ = write!(out, ",alpha={alpha} cap_kg={cap}");
        }
    }
    out.push('\n');

    type Cell = (scalarize::TradeoffRecord, scalarize::TradeoffRecord);
    for path in &args.instances {
        let max_alpha = args.alphas.iter().cloned().fold(0.0, f64::max);
        let instance = validated(load_instance(path)?, max_alpha)?;
        let sf =
            model::build_standard_form(&instance).map_err(|e| Failure::input(e.to_string()))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("instance")
            .to_string();
        let mut cells: Vec<Cell> = Vec::new();
        for &alpha in &args.alphas {
            for &cap in &caps {
                let cg =
                    scalarize::solve_cell(&instance, &sf, alpha, cap, Algorithm::Cg, &config, mode);
                let ccg = scalarize::solve_cell(
                    &instance,
                    &sf,
                    alpha,
                    cap,
                    Algorithm::Ccg,
                    &config,
                    mode,
                );
                cells.push((cg, ccg));
            }
        }
        let prefix = format!("{name},{},{}", instance.n_days(), instance.n_steps());
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
        let rows: [(&str, Box<dyn Fn(&Cell) -> String>); 6] = [
            ("iterations_cg", Box::new(|c: &Cell| format!("{}", c.0.iterations))),
            ("iterations_ccg", Box::new(|c: &Cell| format!("{}", c.1.iterations))),
            (
                "iterations_ratio",
                Box::new(move |c: &Cell| {
                    format!("{:.3}", ratio(c.1.iterations as f64, c.0.iterations as f64))
                }),
            ),
            ("time_cg_s", Box::new(|c: &Cell| format!("{:.3}", c.0.wall_seconds))),
            ("time_ccg_s", Box::new(|c: &Cell| format!("{:.3}", c.1.wall_seconds))),
            (
                "time_ratio",
                Box::new(move |c: &Cell| format!("{:.3}", ratio(c.1.wall_seconds, c.0.wall_seconds))),
            ),
        ];
        for (metric, render) in &rows {
            let _ = write!(out, "{prefix},{metric}");
            for cell in &cells {
                let _ = write!(out, ",{}", render(cell));
            }
            out.push('\n');
        }
    }
    write_atomic(&args.out, &out)?;
    println!(
        "benchmark: {} instance block(s) x {} cell(s) -> {}",
        args.instances.len(),
        args.alphas.len() * caps.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_mincarbon(args: MincarbonArgs) -> Result<(), Failure> {
    assert_distinct(&args.instance, args.out.as_deref())?;
    let instance = validated(load_instance(&args.instance)?, 0.0)?;
    let floor = scalarize::min_carbon(&instance).map_err(map_cell_error)?;
    println!("minimal annual carbon without backstops: {floor:.4} kg");
    if let Some(out) = &args.out {
        write_atomic(out, &format!("{{\n  \"min_carbon_kg\": {floor}\n}}\n"))?;
    }
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Failure> {
    assert_distinct(&args.profiles, Some(&args.out))?;
    let text = std::fs::read_to_string(&args.profiles)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", args.profiles.display())))?;
    let profiles = cluster::parse_profiles_csv(&text).map_err(|e| Failure::input(e.to_string()))?;
    let series = if args.all_series {
        cluster::DistanceSeries::All
    } else {
        cluster::DistanceSeries::LoadsOnly
    };
    let clustered = cluster::k_medoids_with(&profiles, args.k, args.seed, series)
        .map_err(|e| Failure::input(e.to_string()))?;
    let days = clustered.representative_days(&profiles);
    let json = serde_json::to_string_pretty(&days)
        .map_err(|e| Failure::solver(format!("days serialization: {e}")))?;
    write_atomic(&args.out, &json)?;
    println!(
        "clustered {} profiles into {} representative days -> {}",
        profiles.len(),
        days.len(),
        args.out.display()
    );
    for day in &days {
        println!("  {}: {:.2} days/a", day.id, day.weight);
    }
    for w in &clustered.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    assert_distinct(&args.instance, args.out.as_deref())?;
    let cap = cap_in_kg(args.cap_kg, args.cap_t)?;
    let instance = validated(load_instance(&args.instance)?, args.alpha)?;
    let config = OracleConfig { grid_n: args.grid_n, ..OracleConfig::default() };
    let result = oracle_regret(&instance, args.alpha, cap, args.comparator.into(), &config)
        .map_err(|e| Failure::solver(e.to_string()))?;
    println!("oracle min-max regret: {:.4} EUR/a", result.value);
    println!("  lattice slack      : {:.4} EUR/a", result.lattice_slack);
    println!("  candidate designs  : {}", result.candidates);
    println!("  lattice points     : {}", result.lattice_points);
    if let Some(out) = &args.out {
        let json = format!(
            "{{\n  \"value\": {},\n  \"lattice_slack\": {},\n  \"candidates\": {},\n  \"lattice_points\": {}\n}}\n",
            result.value, result.lattice_slack, result.candidates, result.lattice_points
        );
        write_atomic(out, &json)?;
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let instance = load_instance(&args.instance)?;
    let diags = model::validate_instance(&instance, args.alpha);
    if diags.is_empty() {
        println!("ok: no findings");
        return Ok(());
    }
    for d in &diags {
        let tag = match d.severity {
            model::Severity::Error => "error",
            model::Severity::Warning => "warning",
        };
        println!("{tag}: {}", d.message);
    }
    if model::has_errors(&diags) {
        Err(Failure::input("instance has errors"))
    } else {
        Ok(())
    }
}
