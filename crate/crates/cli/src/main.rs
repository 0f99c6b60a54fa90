use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mdsat::generate::{generate, GenConfig, DEFAULT_RATIO};
use mdsat::harness::{
    execute, fmt_f64, fmt_opt, run_plan, trace_csv, write_artifacts, ExperimentKind, ExperimentPlan, Table,
    TraceConfig, Tuning,
};
use mdsat::mdsolver::{monte_carlo_stats, run_report, CheckOrderPolicy, McConfig, NoiseConfig, ScheduleSpec};
use mdsat::qstate::Theta;
use mdsat::rng::{derive_seed, RNG_ID};
use mdsat::sat::dimacs::{from_dimacs, to_dimacs, InstanceSidecar};
use mdsat::sat::{count_solutions, Assignment, Formula};
use mdsat::schoening::{schoening_runs, summarize, WalkConfig};
use mdsat::spectral::{analyze, LanczosConfig, Mode};

#[derive(Parser)]
#[command(name = "mdsat", version, about = "Measurement-driven 3-SAT simulation and benchmarks")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory (stdout for single tables when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Default sizes and instance counts for batch experiments.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Desk)]
    profile: Profile,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// n = 12..18, 50 instances per size.
    Desk,
    /// n = 20..30, 512 instances per size.
    Full,
}

#[derive(clap::Args, Clone)]
struct BatchArgs {
    /// Comma-separated problem sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, default_value = "sequential")]
    order: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate random 3-SAT instances as DIMACS files with JSON sidecars.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_RATIO)]
        ratio: f64,
        /// Required solution count; `any` accepts every satisfiable count.
        #[arg(long, default_value = "1")]
        target_ns: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the classical random walk; one CSV row per run.
    SolveClassical {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Flips before a restart.
        #[arg(long)]
        cmax: Option<u64>,
        #[arg(long)]
        max_checks: Option<u64>,
    },
    /// Exact post-selected run of a schedule, printed as JSON.
    SolveQuantum {
        #[arg(long)]
        cnf: PathBuf,
        /// e.g. `cubic:0.7pi/2,30`, `fixed:0.9,200`, `linear:0,pi/2,40`.
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value = "sequential")]
        order: String,
        /// Also sample this many restart-until-success runs.
        #[arg(long, default_value_t = 0)]
        mc_runs: usize,
        #[arg(long, default_value_t = 0.0)]
        p_error: f64,
    },
    /// Per-cycle biases and fidelity of one run as CSV.
    Trace {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value = "sequential")]
        order: String,
    },
    /// Classical against quantum runtimes over generated instances.
    Compare {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        classical_runs: Option<usize>,
        /// Use the interpolated θ_init with this c_Q instead of a grid search.
        #[arg(long)]
        fixed_c_q: Option<usize>,
    },
    /// Mean c_smooth against θ and n.
    CSmooth {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<String>,
        #[arg(long)]
        c_q: Option<usize>,
    },
    /// Linear sweeps from θ = 0 at several speeds.
    Sweep {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, value_delimiter = ',')]
        increments: Vec<usize>,
    },
    /// Ground-space dimension, gap and gap bound of one instance.
    Gap {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.6,1.4")]
        theta_grid: Vec<String>,
        #[arg(long, default_value = "auto")]
        mode: String,
    },
    /// Execute a JSON experiment plan into an artifact directory.
    RunPlan { plan: PathBuf },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().ok();
    match &cli.cmd {
        Cmd::Generate { n, ratio, target_ns, count, out_dir } => cmd_generate(&cli, *n, *ratio, target_ns, *count, out_dir),
        Cmd::SolveClassical { cnf, runs, cmax, max_checks } => {
            let f = read_formula(cnf)?;
            let cfg = WalkConfig { c_max: *cmax, seed: cli.seed, stream: 0, max_total_checks: *max_checks };
            let res = schoening_runs(&f, *runs, &cfg);
            let mut t = Table::new(["run", "clause_checks", "flips", "restarts", "timed_out", "solution"]);
            for (i, r) in res.iter().enumerate() {
                t.push(vec![
                    i.to_string(),
                    r.clause_checks.to_string(),
                    r.flips.to_string(),
                    r.restarts.to_string(),
                    r.timed_out.to_string(),
                    r.solution.as_ref().map(Assignment::to_bitstring).unwrap_or_default(),
                ]);
            }
            emit(&cli, &t)?;
            let s = summarize(&res);
            eprintln!(
                "runs={} timeouts={} mean_checks={} std_err={}",
                s.runs, s.timeouts, s.mean_checks, s.std_err
            );
            Ok(())
        }
        Cmd::SolveQuantum { cnf, schedule, order, mc_runs, p_error } => {
            let f = read_formula(cnf)?;
            let spec: ScheduleSpec = schedule.parse()?;
            let order = CheckOrderPolicy::parse(order, cli.seed)?;
            let sols = solutions_for(cnf, &f)?;
            let report = run_report(&f, &spec, &order, sols.as_ref().and_then(|s| (s.len() == 1).then(|| &s[0])))?;
            let mut out = serde_json::json!({ "report": report });
            if *mc_runs > 0 {
                let cfg = McConfig {
                    noise: (*p_error > 0.0).then_some(NoiseConfig { p_error: *p_error }),
                    ..McConfig::new(cli.seed)
                };
                out["monte_carlo"] = serde_json::to_value(monte_carlo_stats(&f, &spec, &order, &cfg, *mc_runs)?)?;
            }
            write_text(&cli, &serde_json::to_string_pretty(&out)?)
        }
        Cmd::Trace { cnf, schedule, order } => {
            let f = read_formula(cnf)?;
            let cfg = TraceConfig {
                spec: schedule.parse()?,
                order: CheckOrderPolicy::parse(order, cli.seed)?,
                solutions: solutions_for(cnf, &f)?,
            };
            emit(&cli, &trace_csv(&f, &cfg)?)
        }
        Cmd::Compare { batch, classical_runs, fixed_c_q } => {
            let mut p = batch_plan(&cli, ExperimentKind::Compare, batch, &[12, 14, 16, 18], &[20, 22, 24, 26, 28, 30]);
            if let Some(r) = classical_runs {
                p.classical_runs = *r;
            }
            if let Some(c) = fixed_c_q {
                p.tuning = Tuning::Interpolated { c_q: *c };
            }
            run_batch(&cli, &p)
        }
        Cmd::CSmooth { batch, thetas, c_q } => {
            let mut p = batch_plan(&cli, ExperimentKind::CSmooth, batch, &[12, 14, 16], &[24, 25, 26, 27, 28, 29]);
            if !thetas.is_empty() {
                p.thetas = thetas.iter().map(|s| mdsat::mdsolver::parse_angle(s)).collect::<Result<_, _>>()?;
            } else {
                p.thetas = [0.5, 0.6, 0.7, 0.8, 0.9].iter().map(|x| x * FRAC_PI_2).collect();
            }
            if let Some(c) = c_q {
                p.c_q = *c;
            }
            run_batch(&cli, &p)
        }
        Cmd::Sweep { batch, increments } => {
            let mut p = batch_plan(&cli, ExperimentKind::Sweep, batch, &[12], &[20]);
            if !increments.is_empty() {
                p.increments = increments.clone();
            }
            run_batch(&cli, &p)
        }
        Cmd::Gap { cnf, theta_grid, mode } => {
            let f = read_formula(cnf)?;
            let mode: Mode = mode.parse()?;
            let n_s = solutions_for(cnf, &f)?.map(|s| s.len());
            let cfg = LanczosConfig { seed: cli.seed, ..LanczosConfig::default() };
            let mut t = Table::new(["theta", "mode", "n_s", "ground_dim", "gap", "bound", "bound_satisfied", "looseness"]);
            for s in theta_grid {
                let th = Theta::new(mdsat::mdsolver::parse_angle(s)?)?;
                let r = analyze(&f, th, mode, n_s, &cfg)?;
                t.push(vec![
                    fmt_f64(r.theta),
                    format!("{:?}", r.mode).to_lowercase(),
                    fmt_opt(r.n_s),
                    r.ground_space_dim.to_string(),
                    fmt_f64(r.gap),
                    fmt_f64(r.bound),
                    r.bound_satisfied.to_string(),
                    fmt_f64(r.looseness),
                ]);
            }
            emit(&cli, &t)
        }
        Cmd::RunPlan { plan } => {
            let m = run_plan(plan, cli.out.as_deref(), cli.threads)?;
            eprintln!("{} cells, {} failed, {} files", m.cells_total, m.cells_failed, m.files.len());
            Ok(())
        }
    }
}

fn cmd_generate(cli: &Cli, n: usize, ratio: f64, target: &str, count: usize, dir: &Path) -> Result<()> {
    let target_ns = match target {
        "any" => None,
        s => Some(s.parse().with_context(|| format!("bad --target-ns {s:?}"))?),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for i in 0..count {
        let seed = derive_seed(cli.seed, &[n as u64, i as u64]);
        let g = generate(&GenConfig { n, ratio, target_ns, seed, max_rejections: 10_000_000 })?;
        let sols = g.solutions.as_ref().map(|s| s.solutions.clone()).unwrap_or_default();
        let mut side = InstanceSidecar::new(&g.formula, &sols);
        side.seed = Some(seed);
        side.ratio = Some(ratio);
        side.rejection_count = Some(g.rejection_count);
        side.rng = Some(RNG_ID.into());
        let stem = dir.join(format!("n{n}_{i:04}"));
        fs::write(stem.with_extension("cnf"), to_dimacs(&g.formula))?;
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&side)?)?;
    }
    eprintln!("wrote {count} instances to {}", dir.display());
    Ok(())
}

fn read_formula(path: &Path) -> Result<Formula> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(from_dimacs(&text)?)
}

/// Solutions from the sidecar next to `cnf`, or by enumeration up to 24
/// variables.
fn solutions_for(cnf: &Path, f: &Formula) -> Result<Option<Vec<Assignment>>> {
    let side = cnf.with_extension("json");
    if side.exists() {
        let s: InstanceSidecar = serde_json::from_str(&fs::read_to_string(&side)?)?;
        return Ok(s.solution_assignments());
    }
    if f.num_vars() <= 24 {
        return Ok(Some(count_solutions(f)?.solutions));
    }
    Ok(None)
}

fn batch_plan(cli: &Cli, kind: ExperimentKind, b: &BatchArgs, desk: &[usize], full: &[usize]) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(kind, vec![]);
    let (sizes, inst) = match cli.profile {
        Profile::Desk => (desk, 50),
        Profile::Full => (full, 512),
    };
    p.sizes = if b.sizes.is_empty() { sizes.to_vec() } else { b.sizes.clone() };
    p.instances_per_size = b.instances.unwrap_or(inst);
    p.seed_base = cli.seed;
    p.order = b.order.clone();
    p
}

fn run_batch(cli: &Cli, plan: &ExperimentPlan) -> Result<()> {
    let Some(dir) = &cli.out else { bail!("batch experiments need --out DIR") };
    let art = execute(plan, cli.threads)?;
    let m = write_artifacts(plan, &art, dir)?;
    eprintln!("{} cells, {} failed, results in {}", m.cells_total, m.cells_failed, dir.display());
    Ok(())
}

fn emit(cli: &Cli, t: &Table) -> Result<()> {
    let bytes = t.to_bytes()?;
    match &cli.out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(&bytes)?),
    }
}

fn write_text(cli: &Cli, s: &str) -> Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, s).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{s}");
            Ok(())
        }
    }
}
