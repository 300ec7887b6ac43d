//! `mtlplan`: plan rescue missions, check trajectories against formulas,
//! export sub-task MILPs and run the encoder agreement suite.
//!
//! Exit codes: 0 success, 1 mission or check failure, 2 usage error or crash.

mod suite;
mod traj_csv;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mtlplan::mtl::{parse_mtl, to_nnf};
use mtlplan::planner::{capacity_sweep, plan_fleet_with_models, verify_trajectory, PlannerConfig};
use mtlplan::report::RunReport;
use mtlplan::scenario::ScenarioFile;
use mtlplan::solver::{export_lp_text, SolverConfig, DEFAULT_GAP, DEFAULT_PIVOT_LIMIT};
use mtlplan::workspace::rescue::{build_rescue_workspace, MAX_UAVS};
use mtlplan::{HybridModel, Mission, QuadParams, Workspace};

#[derive(Parser)]
#[command(name = "mtlplan", version, about = "MTL mission planning for quadrotor fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan every mission of a scenario and print the sub-task report.
    Plan(PlanArgs),
    /// Check one vehicle of a trajectory CSV against a formula.
    CheckTrace(CheckArgs),
    /// Write the MILP of every solved sub-task in LP format.
    ExportLp(ExportArgs),
    /// Compare the MILP encoding with the trace semantics on random cases.
    PropSuite(SuiteArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Rescue,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
    /// Builtin scenario.
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// Number of vehicles (builtin) or missions taken from the file.
    #[arg(short = 'N', long = "uavs")]
    n: Option<usize>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Relative optimality gap.
    #[arg(long, default_value_t = DEFAULT_GAP)]
    gap: f64,
    /// Time budget per sub-task solve, in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,
    /// Pivot limit per LP solve.
    #[arg(long, default_value_t = DEFAULT_PIVOT_LIMIT)]
    pivot_limit: usize,
    /// Echoed in reports; planning itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also write each solved sub-task MILP here.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Directory for trajectories.csv and report.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add builtin vehicles one at a time up to N and report the largest
    /// fleet whose missions all succeed.
    #[arg(long)]
    capacity_sweep: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Trajectory CSV with header uav,t,x,y,z,mode.
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    formula: String,
    /// Vehicle to check, 1-based.
    #[arg(long, default_value_t = 1)]
    uav: usize,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory for the LP files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 500)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    #[arg(long, default_value_t = 8)]
    max_horizon: usize,
    #[arg(long, default_value_t = 10)]
    max_trace: usize,
}

struct Scenario {
    name: String,
    workspace: Workspace,
    missions: Vec<Mission>,
    model: HybridModel,
}

fn load_scenario(a: &ScenarioArgs) -> Result<Scenario> {
    match (&a.scenario, a.builtin) {
        (Some(path), _) => {
            let doc = ScenarioFile::load(path).with_context(|| format!("loading {}", path.display()))?;
            let workspace = doc.workspace()?;
            let mut missions = doc.missions(&workspace)?;
            if let Some(n) = a.n {
                missions.truncate(n);
            }
            let model = HybridModel::new(doc.params())?;
            Ok(Scenario { name: path.display().to_string(), workspace, missions, model })
        }
        (None, Some(Builtin::Rescue)) => {
            let n = a.n.unwrap_or(2);
            if n == 0 || n > MAX_UAVS {
                bail!("-N must be between 1 and {MAX_UAVS} for the builtin scenario");
            }
            let (workspace, missions) = build_rescue_workspace(n);
            let model = HybridModel::new(QuadParams::default())?;
            Ok(Scenario { name: "rescue".into(), workspace, missions, model })
        }
        (None, None) => bail!("one of --scenario or --builtin is required"),
    }
}

fn planner_config(s: &SolverArgs) -> Result<PlannerConfig> {
    if !(s.gap >= 0.0) || !(s.time_budget > 0.0) {
        bail!("--gap must be non-negative and --time-budget positive");
    }
    let solver = SolverConfig { gap: s.gap, time_budget: Duration::from_secs_f64(s.time_budget), pivot_limit: s.pivot_limit };
    Ok(PlannerConfig { solver, ..PlannerConfig::default() })
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn write_models(dir: &Path, models: &[(String, mtlplan::MilpModel)]) -> Result<usize> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (k, (label, m)) in models.iter().enumerate() {
        let path = dir.join(format!("{k:03}_{}.lp", file_stem(label)));
        fs::write(&path, export_lp_text(m)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(models.len())
}

fn plan(a: &PlanArgs) -> Result<bool> {
    let sc = load_scenario(&a.scenario)?;
    let mut cfg = planner_config(&a.solver)?;
    let sep = sc.model.params.separation();
    if a.capacity_sweep {
        if a.scenario.builtin.is_none() {
            bail!("--capacity-sweep needs --builtin rescue");
        }
        let max_n = a.scenario.n.unwrap_or(MAX_UAVS);
        let sweep = capacity_sweep(max_n, &sc.model, &cfg);
        let report = RunReport::new(&sc.name, &sweep.plan, a.solver.seed, a.solver.gap, a.solver.time_budget, sep);
        print!("{}", report.to_text(true));
        println!("capacity largest feasible N = {} (tried up to {})", sweep.max_feasible, sweep.tried);
        match &sweep.failure {
            Some(f) => println!("capacity first failure: uav {} at sub-task {}: {}", f.uav + 1, f.subtask, f.reason),
            None => println!("capacity no failure up to N = {}", sweep.tried),
        }
        if let Some(dir) = &a.out {
            write_outputs(dir, &report, &sweep.plan.trajectories)?;
        }
        return Ok(true);
    }
    cfg.keep_models = a.export_lp.is_some();
    let (plan, models) = plan_fleet_with_models(&sc.missions, &sc.workspace, &sc.model, &cfg);
    let report = RunReport::new(&sc.name, &plan, a.solver.seed, a.solver.gap, a.solver.time_budget, sep);
    print!("{}", report.to_text(true));
    if let Some(dir) = &a.export_lp {
        let n = write_models(dir, &models)?;
        println!("wrote {n} LP files to {}", dir.display());
    }
    if let Some(dir) = &a.out {
        write_outputs(dir, &report, &plan.trajectories)?;
    }
    Ok(report.passed())
}

/// Files are written without wall-clock columns so reruns are byte-identical.
fn write_outputs(dir: &Path, report: &RunReport, trajectories: &[mtlplan::Trajectory]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = fs::File::create(dir.join("trajectories.csv"))?;
    traj_csv::write_trajectories(csv, trajectories)?;
    fs::write(dir.join("report.txt"), report.to_text(false))?;
    Ok(())
}

fn check_trace(a: &CheckArgs) -> Result<bool> {
    let sc = load_scenario(&a.scenario)?;
    let f = parse_mtl(&a.formula, &sc.workspace.propositions())?;
    let f = to_nnf(&f)?;
    let file = fs::File::open(&a.trajectory).with_context(|| format!("opening {}", a.trajectory.display()))?;
    let tr = traj_csv::read_trajectory(file, a.uav, sc.model.dt)?;
    let v = verify_trajectory(&tr, &f, &sc.workspace, &[], sc.model.params.separation());
    match v.first() {
        None => {
            println!("pass");
            Ok(true)
        }
        Some(first) => {
            println!("fail at t={}: {}", first.t, first.what);
            Ok(false)
        }
    }
}

fn export_lp(a: &ExportArgs) -> Result<bool> {
    let sc = load_scenario(&a.scenario)?;
    let cfg = PlannerConfig { keep_models: true, ..planner_config(&a.solver)? };
    let (plan, models) = plan_fleet_with_models(&sc.missions, &sc.workspace, &sc.model, &cfg);
    let n = write_models(&a.out, &models)?;
    println!("wrote {n} LP files to {}", a.out.display());
    Ok(plan.succeeded())
}

fn prop_suite(a: &SuiteArgs) -> Result<bool> {
    let cfg = suite::SuiteConfig {
        cases: a.cases,
        seed: a.seed,
        max_depth: a.max_depth,
        max_horizon: a.max_horizon,
        max_trace: a.max_trace,
    };
    let r = suite::run(&cfg)?;
    for m in &r.mismatches {
        println!("mismatch {m}");
    }
    println!(
        "encoder-oracle cases {} agree {} satisfied {} seconds {:.2}",
        r.cases, r.agreements, r.satisfied, r.seconds
    );
    Ok(r.all_agree())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::CheckTrace(a) => check_trace(a),
        Command::ExportLp(a) => export_lp(a),
        Command::PropSuite(a) => prop_suite(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
