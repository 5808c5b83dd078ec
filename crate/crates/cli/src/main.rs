use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hkflow::analysis::{cluster_report, CLUSTER_TOL, SEP_TOL};
use hkflow::enumeration::{
    catalogue, delta1, delta2, explore_zero_wait, square_catalogue_run, terminal_partitions, Composition,
};
use hkflow::model::InteractionKernel;
use hkflow::scenarios::{builtin, read_scenario, scenario_to_toml, Scenario, BUILTIN_NAMES};
use hkflow::solvers::{
    builtin_stratification_3agents, check_classical, solve_caratheodory_with, solve_clss_jump_schedule,
    solve_clss_with, solve_filippov_sliding, solve_stratified_with, toy_stratification, ClssOptions, PinWindow,
    Release, SlidingPlan, SolveOptions, StepSchedule, ToyVariant, CLASSICAL_TOL,
};
use hkflow::{BranchSpec, ModelVariant, Pair, Trajectory};

mod checks;

use checks::{run_checks, Check, CheckResult};

const BRANCH_HELP: &str = "\
Branch grammar: whitespace- or ';'-separated rules `wait=<t>:<target>`.
  <t>       waiting time after the pairs reach distance one; `inf` or `never` keeps them apart
  <target>  `all` (or `both`) for every boundary pair of the first event, or one-based
            pairs joined by `+`, e.g. `1-2+3-4`
`resolve` (the default) lets the local crossing analysis decide at every event.
Examples: `wait=0:all`, `wait=1.5:1-2`, `wait=0:2-3 wait=inf:1-2`";

#[derive(Parser)]
#[command(name = "hkflow", version, about = "Bounded-confidence dynamics under several solution concepts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and write trajectory, event log and summary.
    #[command(after_help = BRANCH_HELP)]
    Run(RunArgs),
    /// Write the branch catalogue of the unit-spaced chain (or the square).
    Enumerate(EnumerateArgs),
    /// Run property checks on a trajectory file; exits 1 if any fails.
    Check(CheckArgs),
    /// Sup-norm distance between two trajectories over their common time span.
    Compare(CompareArgs),
    /// List built-in scenarios, or print one as a scenario file.
    ScenarioList(ListArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Concept {
    Caratheodory,
    FilippovSliding,
    Clss,
    Stratified,
    ClassicalCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Open,
    Closed,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Open => ModelVariant::OpenAtOne,
            VariantArg::Closed => ModelVariant::ClosedAtOne,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReleaseArg {
    Detach,
    Activate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Uniform,
    Jump,
}

#[derive(Clone, Copy, ValueEnum)]
enum StratArg {
    ThreeAgents,
    ToyS1,
    ToyS2,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Built-in name (see scenario-list) or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value = "caratheodory")]
    concept: Concept,
    /// Override the scenario's variant.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Branch choice, see below.
    #[arg(long, default_value = "resolve", allow_hyphen_values = true)]
    branch: String,
    /// End time (default 30; the jump schedule ends at (r + 1) T / r unless
    /// a later horizon is given, which it reaches with further unit steps).
    #[arg(long)]
    horizon: Option<f64>,
    /// Pinned (sliding) pair, one-based `i,j`; repeatable.
    #[arg(long)]
    pin: Vec<String>,
    /// Pin window `start,end` (`inf` allowed), one per pin; default `0,inf`.
    #[arg(long)]
    window: Vec<String>,
    /// What a pinned pair does when its window closes.
    #[arg(long, value_enum, default_value = "detach")]
    release: ReleaseArg,
    #[arg(long, value_enum, default_value = "uniform")]
    schedule: ScheduleArg,
    /// Number of uniform steps over the horizon.
    #[arg(long, default_value_t = 3000)]
    steps: usize,
    /// Jump schedule: number of steps up to the reference time.
    #[arg(long)]
    k: Option<u64>,
    /// Jump schedule: the run ends at (r + 1) / r times the reference time.
    #[arg(long)]
    r: Option<u64>,
    #[arg(long, value_enum, default_value = "three-agents")]
    stratification: StratArg,
    /// Output grid spacing (default depends on the kernel's rate).
    #[arg(long)]
    sample_dt: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// File stem for the outputs (default `<scenario>-<concept>`).
    #[arg(long)]
    name: Option<String>,
}

#[derive(clap::Args)]
struct EnumerateArgs {
    /// Number of agents, 1 to 20.
    #[arg(long, short)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "open")]
    variant: VariantArg,
    /// Also run every zero-wait choice (N <= 12) and compare terminal partitions.
    #[arg(long)]
    explore: bool,
    /// Simulate the twelve families of the four-agent square instead.
    #[arg(long)]
    square: bool,
    #[arg(long, default_value_t = 30.0)]
    horizon: f64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CheckArgs {
    /// Trajectory CSV; its `.events.jsonl` companion is read if present.
    file: PathBuf,
    /// Comma-separated subset of p1,hull,lyapunov,inclusion,cluster.
    #[arg(long, value_delimiter = ',', default_value = "p1,hull,lyapunov,inclusion,cluster")]
    checks: Vec<Check>,
    /// Scenario supplying kernel and multiplicities (default: unit kernel).
    #[arg(long)]
    scenario: Option<String>,
    /// Check every `stride`-th sample for hull containment.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(clap::Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Distance that counts as diverged.
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
}

#[derive(clap::Args)]
struct ListArgs {
    #[arg(long)]
    json: bool,
    /// Print this scenario as a TOML scenario file.
    #[arg(long)]
    show: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Enumerate(a) => cmd_enumerate(a),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::ScenarioList(a) => cmd_list(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(spec: &str) -> Result<Scenario> {
    if let Some(s) = builtin(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("{spec:?} is neither a built-in scenario ({}) nor a file", BUILTIN_NAMES.join(", "));
    }
    read_scenario(path).with_context(|| format!("reading {spec}"))
}

fn parse_branch(text: &str) -> Result<BranchSpec> {
    if text.trim() == "resolve" {
        return Ok(BranchSpec::resolve());
    }
    Ok(BranchSpec::parse(text)?)
}

fn parse_window(text: &str) -> Result<(f64, f64)> {
    let (a, b) = text.split_once(',').with_context(|| format!("window {text:?} is not start,end"))?;
    let num = |s: &str| -> Result<f64> {
        match s.trim() {
            "inf" | "infinity" => Ok(f64::INFINITY),
            v => v.parse::<f64>().with_context(|| format!("bad window bound {v:?}")),
        }
    };
    Ok((num(a)?, num(b)?))
}

fn sliding_plan(a: &RunArgs, branch: BranchSpec, n: usize) -> Result<SlidingPlan> {
    if a.pin.is_empty() {
        bail!("filippov-sliding needs at least one --pin");
    }
    if !a.window.is_empty() && a.window.len() != a.pin.len() {
        bail!("give one --window per --pin ({} pins, {} windows)", a.pin.len(), a.window.len());
    }
    let release = match a.release {
        ReleaseArg::Detach => Release::Detach,
        ReleaseArg::Activate => Release::Activate,
    };
    let mut pins = Vec::new();
    for (k, p) in a.pin.iter().enumerate() {
        let pair = Pair::parse_one_based(p).with_context(|| format!("bad pair {p:?}"))?;
        if pair.j >= n {
            bail!("pair {pair} outside {n} agents");
        }
        let (start, end) = match a.window.get(k) {
            Some(w) => parse_window(w)?,
            None => (0.0, f64::INFINITY),
        };
        pins.push(PinWindow::new(pair, start, end, release));
    }
    Ok(SlidingPlan { pins, branch })
}

struct Solved {
    traj: Trajectory,
    continuous: bool,
    extra: Value,
}

fn solve(a: &RunArgs, sc: &Scenario) -> Result<Solved> {
    let horizon = a.horizon.unwrap_or(30.0);
    if !(horizon >= 0.0 && horizon.is_finite()) {
        bail!("horizon must be finite and nonnegative");
    }
    let opts = SolveOptions { sample_dt: a.sample_dt, ..Default::default() };
    let branch = parse_branch(&a.branch)?;
    let solved = match a.concept {
        Concept::Caratheodory => Solved {
            traj: solve_caratheodory_with(sc, &branch, horizon, &opts)?,
            continuous: true,
            extra: Value::Null,
        },
        Concept::FilippovSliding => {
            let plan = sliding_plan(a, branch, sc.n_agents())?;
            Solved { traj: solve_filippov_sliding(sc, &plan, horizon, &opts)?, continuous: true, extra: Value::Null }
        }
        Concept::Clss => match a.schedule {
            ScheduleArg::Uniform => {
                let schedule = StepSchedule::uniform(horizon, a.steps)?;
                let run = solve_clss_with(sc, &schedule, &ClssOptions::default())?;
                Solved { traj: run.trajectory, continuous: false, extra: json!({ "steps": schedule.len() }) }
            }
            ScheduleArg::Jump => {
                let (Some(k), Some(r)) = (a.k, a.r) else { bail!("the jump schedule needs --k and --r") };
                let run = match a.horizon {
                    None => solve_clss_jump_schedule(sc, k, r)?,
                    Some(h) => {
                        let t_ref = sc.expected("T").context("the jump schedule needs a scenario with expected T")?;
                        let mut steps = StepSchedule::jump(t_ref, k, r)?.steps().to_vec();
                        let dt = t_ref / k as f64;
                        let more = ((h - steps.iter().sum::<f64>()) / dt).round();
                        if more > 0.0 {
                            steps.extend(std::iter::repeat_n(dt, more as usize));
                        }
                        let watch = ClssOptions { watch: vec![Pair::new(0, 2)], ..Default::default() };
                        solve_clss_with(sc, &StepSchedule::new(steps)?, &watch)?
                    }
                };
                Solved {
                    traj: run.trajectory,
                    continuous: false,
                    extra: json!({ "steps": run.node_times.len() - 1, "watch": run.watch }),
                }
            }
        },
        Concept::Stratified => {
            let strat = match a.stratification {
                StratArg::ThreeAgents => builtin_stratification_3agents(),
                StratArg::ToyS1 => toy_stratification(ToyVariant::S1),
                StratArg::ToyS2 => toy_stratification(ToyVariant::S2),
            };
            Solved { traj: solve_stratified_with(sc, &strat, horizon, &opts)?, continuous: true, extra: Value::Null }
        }
        Concept::ClassicalCheck => {
            let traj = solve_caratheodory_with(sc, &branch, horizon, &opts)?;
            let report = check_classical(&traj, sc, CLASSICAL_TOL)?;
            Solved { traj, continuous: true, extra: json!({ "classical": report }) }
        }
    };
    Ok(solved)
}

fn stem_of(spec: &str) -> String {
    Path::new(spec).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string())
}

fn cluster_json(traj: &Trajectory) -> Value {
    match cluster_report(traj, CLUSTER_TOL, SEP_TOL) {
        Ok(r) => json!({ "count": r.count(), "p2_clean": r.p2_clean(), "report": r }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Prints to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let mut sc = load_scenario(&a.scenario)?;
    if let Some(v) = a.variant {
        sc = sc.with_variant(v.into());
    }
    let solved = solve(&a, &sc)?;
    let traj = &solved.traj;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let name = a.name.clone().unwrap_or_else(|| {
        format!("{}-{}", stem_of(&a.scenario), a.concept.to_possible_value().unwrap().get_name())
    });
    let csv = a.out.join(format!("{name}.csv"));
    let events = traj.write(&csv)?;
    let mut wanted = vec![Check::P1, Check::Hull, Check::Cluster];
    if solved.continuous {
        wanted.extend([Check::Lyapunov, Check::Inclusion]);
    }
    let checks: Vec<CheckResult> = run_checks(traj, &sc.kernel, &wanted, None);
    let classical_ok = solved.extra.get("classical").map(|c| c["classical"].as_bool() == Some(true));
    let summary = json!({
        "scenario": a.scenario,
        "label": sc.label,
        "concept": a.concept,
        "variant": sc.variant.name(),
        "branch": a.branch,
        "horizon": traj.horizon(),
        "samples": traj.len(),
        "events": traj.events.len(),
        "final": traj.final_state().points(),
        "clusters": cluster_json(traj),
        "checks": checks,
        "details": solved.extra,
        "files": { "trajectory": csv, "events": events },
    });
    let summary_path = a.out.join(format!("{name}.summary.json"));
    write_json(&summary_path, &summary)?;
    println!("wrote {} ({} samples, {} events)", csv.display(), traj.len(), traj.events.len());
    println!("final state {:?}", traj.final_state().points());
    for c in &checks {
        println!("{c}");
    }
    if let Some(ok) = classical_ok {
        println!("classical: {ok}");
    }
    println!("summary {}", summary_path.display());
    Ok(classical_ok.unwrap_or(true))
}

#[derive(Serialize)]
struct Exploration {
    runs: usize,
    failed_runs: usize,
    terminal_partitions: Vec<Vec<Vec<usize>>>,
    matches_catalogue: bool,
}

fn cmd_enumerate(a: EnumerateArgs) -> Result<bool> {
    let variant: ModelVariant = a.variant.into();
    let doc = if a.square {
        let runs: Vec<Value> = square_catalogue_run(variant, a.horizon)
            .into_iter()
            .map(|(f, r)| match r {
                Ok(o) => json!({ "family": f, "outcome": o }),
                Err(e) => json!({ "family": f, "error": e }),
            })
            .collect();
        json!({ "scenario": "square", "variant": variant.name(), "horizon": a.horizon, "families": runs })
    } else {
        let n = a.n.context("--n is required unless --square is given")?;
        let entries = catalogue(n, variant)?;
        let mut doc = json!({ "n": n, "variant": variant.name(), "count": entries.len(), "entries": entries });
        if a.explore {
            let runs = explore_zero_wait(n, variant, a.horizon)?;
            let got = terminal_partitions(&runs);
            let comps = if variant == ModelVariant::ClosedAtOne { delta2(n)? } else { delta1(n)? };
            let want: std::collections::BTreeSet<_> = comps.iter().map(Composition::partition).collect();
            doc["exploration"] = serde_json::to_value(Exploration {
                runs: runs.len(),
                failed_runs: runs.iter().filter(|r| r.outcome.is_err()).count(),
                terminal_partitions: got.iter().map(|p| p.blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect()).collect(),
                matches_catalogue: got == want,
            })?;
        }
        doc
    };
    match &a.out {
        Some(p) => {
            write_json(p, &doc)?;
            println!("wrote {}", p.display());
        }
        None => emit(&(serde_json::to_string_pretty(&doc)? + "\n"))?,
    }
    Ok(true)
}

fn cmd_check(a: CheckArgs) -> Result<bool> {
    let mut traj = Trajectory::read(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let kernel = match &a.scenario {
        Some(s) => {
            let sc = load_scenario(s)?;
            if sc.n_agents() != traj.n_agents() || sc.dim() != traj.dim {
                bail!("scenario has {} agents in dimension {}, trajectory {} in {}", sc.n_agents(), sc.dim(), traj.n_agents(), traj.dim);
            }
            sc.kernel
        }
        None => InteractionKernel::constant(traj.n_agents(), 1.0)?,
    };
    traj.multiplicity = kernel.multiplicity().map(<[f64]>::to_vec);
    let results = run_checks(&traj, &kernel, &a.checks, a.stride);
    for r in &results {
        println!("{r}");
    }
    Ok(results.iter().all(|r| r.pass))
}

fn cmd_compare(a: CompareArgs) -> Result<bool> {
    let ta = Trajectory::read(&a.a).with_context(|| format!("reading {}", a.a.display()))?;
    let tb = Trajectory::read(&a.b).with_context(|| format!("reading {}", a.b.display()))?;
    if ta.n_agents() != tb.n_agents() || ta.dim != tb.dim {
        bail!("shapes differ: {} agents x {} vs {} agents x {}", ta.n_agents(), ta.dim, tb.n_agents(), tb.dim);
    }
    let lo = ta.times[0].max(tb.times[0]);
    let hi = ta.horizon().min(tb.horizon());
    if lo > hi {
        bail!("time spans [{}, {}] and [{}, {}] do not overlap", ta.times[0], ta.horizon(), tb.times[0], tb.horizon());
    }
    let mut grid: Vec<f64> = ta.times.iter().chain(&tb.times).copied().filter(|t| (lo..=hi).contains(t)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (mut max_d, mut at) = (0.0f64, lo);
    let mut diverged = None;
    let mut last = 0.0;
    for &t in &grid {
        let (x, y) = (ta.state_at(t), tb.state_at(t));
        let d = x.positions().iter().zip(y.positions()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        if d > max_d {
            (max_d, at) = (d, t);
        }
        if diverged.is_none() && d > a.threshold {
            diverged = Some(t);
        }
        last = d;
    }
    let doc = json!({
        "overlap": [lo, hi],
        "max_distance": max_d,
        "at_time": at,
        "final_distance": last,
        "threshold": a.threshold,
        "divergence_time": diverged,
    });
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(true)
}

fn cmd_list(a: ListArgs) -> Result<bool> {
    if let Some(name) = a.show {
        let sc = builtin(&name).with_context(|| format!("no built-in scenario {name:?}"))?;
        emit(&scenario_to_toml(&sc)?)?;
        return Ok(true);
    }
    let rows: Vec<Value> = BUILTIN_NAMES
        .iter()
        .map(|&n| {
            let s = builtin(n).expect("listed scenarios build");
            json!({ "name": n, "agents": s.n_agents(), "dim": s.dim(), "variant": s.variant.name(), "label": s.label })
        })
        .collect();
    if a.json {
        return emit(&(serde_json::to_string_pretty(&rows)? + "\n")).map(|_| true);
    }
    let mut text = format!("{:<18} {:>6} {:>4}  {:<8} label\n", "name", "agents", "dim", "variant");
    for r in &rows {
        text += &format!(
            "{:<18} {:>6} {:>4}  {:<8} {}\n",
            r["name"].as_str().unwrap_or_default(),
            r["agents"].as_u64().unwrap_or_default(),
            r["dim"].as_u64().unwrap_or_default(),
            r["variant"].as_str().unwrap_or_default(),
            r["label"].as_str().unwrap_or_default()
        );
    }
    emit(&text)?;
    Ok(true)
}
