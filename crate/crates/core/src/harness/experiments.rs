//! The batch experiments behind each [`ExperimentKind`](super::ExperimentKind).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{fmt_f64, fmt_opt, Artifacts, CellKey, ExperimentPlan, FailedCell, HarnessError, Table, Tuning};
use crate::generate::GeneratedInstance;
use crate::mdsolver::{
    adiabatic_sweep_experiment, c_smooth_of, default_theta_init, expected_checks, monte_carlo_stats,
    noise_abort_experiment, run_deterministic, run_deterministic_with, CheckOrderPolicy, McConfig, NoiseConfig,
    ScheduleSpec, ThetaSchedule, TraceOptions,
};
use crate::qstate::Theta;
use crate::sat::{Assignment, Formula};
use crate::schoening::{schoening_stats, WalkConfig};
use crate::spectral::{analyze, LanczosConfig, Mode};
use crate::stats;

// auxiliary stream tags for stream_seed
const AUX_ORDER: u64 = 1;
const AUX_CLASSICAL: u64 = 2;
const AUX_MC: u64 = 3;
const AUX_LANCZOS: u64 = 4;
const AUX_NOISE: u64 = 5;

// calibration instances use indices from here on, disjoint from evaluated ones
const CALIBRATION_OFFSET: usize = 1 << 32;

fn order_for(plan: &ExperimentPlan, n: usize, idx: usize) -> CheckOrderPolicy {
    CheckOrderPolicy::parse(&plan.order, plan.stream_seed(n, idx, AUX_ORDER)).expect("validated plan")
}

fn cells(plan: &ExperimentPlan) -> Vec<CellKey> {
    let mut sizes = plan.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    sizes.iter().flat_map(|&n| (0..plan.instances_per_size).map(move |i| CellKey { n, instance: i, sub: 0 })).collect()
}

fn with_subs(plan: &ExperimentPlan, subs: usize) -> Vec<CellKey> {
    cells(plan).into_iter().flat_map(|k| (0..subs).map(move |s| CellKey { sub: s, ..k.clone() })).collect()
}

fn solutions_of(inst: &GeneratedInstance) -> Option<&[Assignment]> {
    inst.solutions.as_ref().map(|s| s.solutions.as_slice())
}

/// Runs `work` on every cell in parallel and splits results from failures,
/// both in cell-key order.
fn run_cells<T, W>(keys: &[CellKey], work: W) -> (Vec<(CellKey, T)>, Vec<FailedCell>)
where
    T: Send,
    W: Fn(&CellKey) -> Result<T, String> + Sync,
{
    let out: Vec<(CellKey, Result<T, String>)> = keys.par_iter().map(|k| (k.clone(), work(k))).collect();
    let mut ok = vec![];
    let mut failed = vec![];
    for (k, r) in out {
        match r {
            Ok(v) => ok.push((k, v)),
            Err(reason) => failed.push(FailedCell { key: k.to_string(), reason }),
        }
    }
    (ok, failed)
}

fn log_failures(art: &mut Artifacts) {
    for f in &art.failed {
        art.log.push(format!("cell {} failed: {}", f.key, f.reason));
    }
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub n_s: Option<usize>,
    pub classical_runs: usize,
    pub classical_timeouts: usize,
    pub classical_mean: f64,
    pub classical_variance: f64,
    pub classical_std_err: f64,
    pub quantum_expected: Option<f64>,
    pub quantum_success_prob: f64,
    pub theta_init: f64,
    pub c_q: usize,
}

impl ComparisonRow {
    pub const HEADER: [&'static str; 13] = [
        "instance_id",
        "n",
        "m",
        "n_s",
        "classical_runs",
        "classical_timeouts",
        "classical_mean_checks",
        "classical_var_checks",
        "classical_stderr",
        "quantum_expected_checks",
        "quantum_success_prob",
        "theta_init",
        "c_q",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.instance_id.clone(),
            self.n.to_string(),
            self.m.to_string(),
            fmt_opt(self.n_s),
            self.classical_runs.to_string(),
            self.classical_timeouts.to_string(),
            fmt_f64(self.classical_mean),
            fmt_f64(self.classical_variance),
            fmt_f64(self.classical_std_err),
            self.quantum_expected.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.quantum_success_prob),
            fmt_f64(self.theta_init),
            self.c_q.to_string(),
        ]
    }
}

/// Per-size aggregate of a compare run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub instances: usize,
    /// Instances left out because a metric was missing.
    pub excluded: usize,
    pub classical_timeouts: usize,
    pub classical_mean: f64,
    /// Variance across instances of the per-instance classical mean.
    pub classical_variance: f64,
    pub quantum_mean: f64,
    /// Variance across instances of the quantum expected checks.
    pub quantum_variance: f64,
    /// Rank correlation between the classical and quantum metrics.
    pub spearman: f64,
    pub theta_init: f64,
    pub c_q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// `exp(slope)` of `ln(mean checks)` against `n`.
    pub base: f64,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug)]
pub struct CompareOutput {
    pub rows: Vec<ComparisonRow>,
    pub sizes: Vec<SizeSummary>,
    pub classical_fit: Option<ExponentFit>,
    pub quantum_fit: Option<ExponentFit>,
    pub artifacts: Artifacts,
}

/// Chosen schedule for one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub theta_init: f64,
    pub c_q: usize,
    /// Mean expected checks on the calibration instances, when tuned.
    pub score: Option<f64>,
}

fn quantum_expected(
    f: &Formula,
    theta_init: f64,
    c_q: usize,
    order: &CheckOrderPolicy,
) -> Result<(f64, Option<f64>), String> {
    let t = run_deterministic(f, &ThetaSchedule::Cubic { theta_init }, order, c_q).map_err(|e| e.to_string())?;
    Ok((t.success_prob, expected_checks(&t).ok()))
}

/// Picks `θ_init` and `c_Q` for size `n` according to the plan's tuning.
pub fn tune(plan: &ExperimentPlan, n: usize) -> Result<Tuned, String> {
    match &plan.tuning {
        Tuning::Fixed { theta_init_frac, c_q } => {
            Ok(Tuned { theta_init: theta_init_frac * FRAC_PI_2, c_q: *c_q, score: None })
        }
        Tuning::Interpolated { c_q } => Ok(Tuned { theta_init: default_theta_init(n), c_q: *c_q, score: None }),
        Tuning::GridSearch { theta_init_fracs, c_q_values, calibration_instances } => {
            if theta_init_fracs.is_empty() || c_q_values.is_empty() || *calibration_instances == 0 {
                return Err("empty tuning grid".into());
            }
            let cal: Vec<(Formula, CheckOrderPolicy)> = (0..*calibration_instances)
                .map(|j| {
                    let idx = CALIBRATION_OFFSET + j;
                    plan.instance(n, idx).map(|g| (g.formula, order_for(plan, n, idx)))
                })
                .collect::<Result<_, _>>()?;
            let grid: Vec<(f64, usize)> =
                theta_init_fracs.iter().flat_map(|&fr| c_q_values.iter().map(move |&c| (fr, c))).collect();
            let scores: Vec<Option<f64>> = grid
                .par_iter()
                .map(|&(fr, c)| {
                    let mut total = 0.0;
                    for (f, o) in &cal {
                        match quantum_expected(f, fr * FRAC_PI_2, c, o) {
                            Ok((_, Some(e))) => total += e,
                            _ => return None,
                        }
                    }
                    Some(total / cal.len() as f64)
                })
                .collect();
            let mut best: Option<(usize, f64)> = None;
            for (i, s) in scores.iter().enumerate() {
                if let Some(s) = *s {
                    if best.is_none_or(|(_, b)| s < b) {
                        best = Some((i, s));
                    }
                }
            }
            let (i, s) = best.ok_or("no grid point gives a finite expected runtime")?;
            Ok(Tuned { theta_init: grid[i].0 * FRAC_PI_2, c_q: grid[i].1, score: Some(s) })
        }
    }
}

fn fit(ns: &[f64], means: &[f64]) -> Option<ExponentFit> {
    if ns.len() < 2 {
        return None;
    }
    let ln: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let l = stats::least_squares(ns, &ln);
    Some(ExponentFit { base: l.slope.exp(), slope: l.slope, intercept: l.intercept, points: ns.len() })
}

/// Classical walk statistics and the tuned evolving-θ expected runtime for
/// every instance, with per-size aggregates and exponent fits.
pub fn compare_experiment(plan: &ExperimentPlan) -> Result<CompareOutput, HarnessError> {
    let mut art = Artifacts::default();
    let mut sizes = plan.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let tuned: BTreeMap<usize, Result<Tuned, String>> = sizes.iter().map(|&n| (n, tune(plan, n))).collect();
    for (n, t) in &tuned {
        match t {
            Ok(t) => art.log.push(format!(
                "n={n} schedule theta_init={} c_q={} calibration_score={}",
                t.theta_init,
                t.c_q,
                fmt_opt(t.score)
            )),
            Err(e) => art.log.push(format!("n={n} tuning failed: {e}")),
        }
    }
    let keys = cells(plan);
    art.cells_total = keys.len();
    let (done, failed) = run_cells(&keys, |k| {
        let t = tuned[&k.n].as_ref().map_err(|e| format!("tuning: {e}"))?;
        let inst = plan.instance(k.n, k.instance)?;
        let f = &inst.formula;
        let walk = WalkConfig {
            c_max: None,
            seed: plan.stream_seed(k.n, k.instance, AUX_CLASSICAL),
            stream: 0,
            max_total_checks: Some(plan.classical_max_checks),
        };
        let ws = schoening_stats(f, plan.classical_runs.max(1), &walk);
        let (p, e) = quantum_expected(f, t.theta_init, t.c_q, &order_for(plan, k.n, k.instance))?;
        Ok(ComparisonRow {
            instance_id: format!("n{}-{}", k.n, k.instance),
            n: k.n,
            m: f.num_clauses(),
            n_s: inst.n_s(),
            classical_runs: ws.runs,
            classical_timeouts: ws.timeouts,
            classical_mean: ws.mean_checks,
            classical_variance: ws.variance_checks,
            classical_std_err: ws.std_err,
            quantum_expected: e,
            quantum_success_prob: p,
            theta_init: t.theta_init,
            c_q: t.c_q,
        })
    });
    art.failed = failed;
    log_failures(&mut art);
    let rows: Vec<ComparisonRow> = done.into_iter().map(|(_, r)| r).collect();

    let mut table = Table::new(ComparisonRow::HEADER);
    for r in &rows {
        table.push(r.record());
    }
    art.csv.insert("compare.csv".into(), table);

    let mut summaries = vec![];
    for &n in &sizes {
        let at: Vec<&ComparisonRow> = rows.iter().filter(|r| r.n == n).collect();
        if at.is_empty() {
            continue;
        }
        // an instance enters the statistics only with both metrics present
        let usable: Vec<&ComparisonRow> =
            at.iter().copied().filter(|r| r.classical_timeouts == 0 && r.quantum_expected.is_some()).collect();
        let cl: Vec<f64> = usable.iter().map(|r| r.classical_mean).collect();
        let qu: Vec<f64> = usable.iter().filter_map(|r| r.quantum_expected).collect();
        let t = tuned[&n].as_ref().expect("rows exist only for tuned sizes");
        if usable.len() < at.len() {
            art.log.push(format!("n={n} excluded {} instances with timeouts or zero success", at.len() - usable.len()));
        }
        summaries.push(SizeSummary {
            n,
            instances: usable.len(),
            excluded: at.len() - usable.len(),
            classical_timeouts: at.iter().map(|r| r.classical_timeouts).sum(),
            classical_mean: stats::mean(&cl),
            classical_variance: stats::variance(&cl),
            quantum_mean: stats::mean(&qu),
            quantum_variance: stats::variance(&qu),
            spearman: if cl.len() >= 2 { stats::spearman(&cl, &qu) } else { f64::NAN },
            theta_init: t.theta_init,
            c_q: t.c_q,
        });
    }
    let mut st = Table::new([
        "n",
        "instances",
        "excluded",
        "classical_timeouts",
        "classical_mean",
        "classical_across_var",
        "quantum_mean",
        "quantum_across_var",
        "spearman",
        "theta_init",
        "c_q",
    ]);
    for s in &summaries {
        st.push(vec![
            s.n.to_string(),
            s.instances.to_string(),
            s.excluded.to_string(),
            s.classical_timeouts.to_string(),
            fmt_f64(s.classical_mean),
            fmt_f64(s.classical_variance),
            fmt_f64(s.quantum_mean),
            fmt_f64(s.quantum_variance),
            fmt_f64(s.spearman),
            fmt_f64(s.theta_init),
            s.c_q.to_string(),
        ]);
    }
    art.csv.insert("compare_sizes.csv".into(), st);

    let pts: Vec<&SizeSummary> = summaries.iter().filter(|s| s.instances > 0).collect();
    let ns: Vec<f64> = pts.iter().map(|s| s.n as f64).collect();
    let classical_fit = fit(&ns, &pts.iter().map(|s| s.classical_mean).collect::<Vec<_>>());
    let quantum_fit = fit(&ns, &pts.iter().map(|s| s.quantum_mean).collect::<Vec<_>>());
    art.json.insert(
        "compare_fit.json".into(),
        json!({
            "fit": "least squares of ln(per-size mean checks) against n",
            "classical": classical_fit,
            "quantum": quantum_fit,
            "sizes": summaries,
        }),
    );
    Ok(CompareOutput { rows, sizes: summaries, classical_fit, quantum_fit, artifacts: art })
}

// ---------------------------------------------------------------- trace

/// Configuration of a single traced run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub spec: ScheduleSpec,
    pub order: CheckOrderPolicy,
    /// Solutions for the fidelity column.
    pub solutions: Option<Vec<Assignment>>,
}

/// Per-cycle biases: columns `cycle, theta, bias_1..bias_n, fidelity`.
/// Rows stop at a certain failure; `fidelity` is empty without solutions.
pub fn trace_csv(f: &Formula, cfg: &TraceConfig) -> Result<Table, HarnessError> {
    let opts = TraceOptions { solutions: cfg.solutions.clone(), ..Default::default() };
    let (t, _) = run_deterministic_with(f, &cfg.spec.schedule, &cfg.order, cfg.spec.c_q, &opts)
        .map_err(|e| HarnessError::Plan(e.to_string()))?;
    let n = f.num_vars();
    let mut header = vec!["cycle".to_string(), "theta".to_string()];
    header.extend((1..=n).map(|i| format!("bias_{i}")));
    header.push("fidelity".into());
    let mut table = Table::new(header);
    for (c, b) in t.biases.iter().enumerate() {
        let mut row = vec![c.to_string(), fmt_f64(t.thetas[c])];
        row.extend(b.iter().map(|&x| fmt_f64(x)));
        row.push(t.fidelity.as_ref().map(|v| fmt_f64(v[c])).unwrap_or_default());
        table.push(row);
    }
    Ok(table)
}

/// One trace table per instance, named `trace_n{n}_i{idx}.csv`.
pub fn trace_experiment(plan: &ExperimentPlan) -> Result<Artifacts, HarnessError> {
    let mut art = Artifacts::default();
    let fixed = plan
        .schedule
        .as_deref()
        .map(str::parse::<ScheduleSpec>)
        .transpose()
        .map_err(|e| HarnessError::Plan(e.to_string()))?;
    let keys = cells(plan);
    art.cells_total = keys.len();
    let (done, failed) = run_cells(&keys, |k| {
        let inst = plan.instance(k.n, k.instance)?;
        let spec = fixed.unwrap_or(ScheduleSpec {
            schedule: ThetaSchedule::Cubic { theta_init: default_theta_init(k.n) },
            c_q: plan.c_q,
        });
        let cfg = TraceConfig {
            spec,
            order: order_for(plan, k.n, k.instance),
            solutions: solutions_of(&inst).map(<[_]>::to_vec),
        };
        trace_csv(&inst.formula, &cfg).map_err(|e| e.to_string()).map(|t| (spec, t))
    });
    art.failed = failed;
    log_failures(&mut art);
    for (k, (spec, t)) in done {
        art.log.push(format!("trace n={} instance={} schedule={spec}", k.n, k.instance));
        art.csv.insert(format!("trace_n{}_i{}.csv", k.n, k.instance), t);
    }
    Ok(art)
}

// ---------------------------------------------------------------- c_smooth

/// `c_smooth` of every instance at each fixed θ, the per-(n, θ) mean and a
/// shifted and scaled Δ curve. For each size, Δ(θ) = (mean(θ) − shift)/scale
/// with shift the mean at the largest θ and scale the mean at the smallest θ
/// minus the shift.
pub fn c_smooth_experiment(plan: &ExperimentPlan) -> Result<Artifacts, HarnessError> {
    let mut art = Artifacts::default();
    let thetas = &plan.thetas;
    if thetas.is_empty() {
        return Err(HarnessError::Plan("no thetas".into()));
    }
    let keys = with_subs(plan, thetas.len());
    art.cells_total = keys.len();
    let (done, failed) = run_cells(&keys, |k| {
        let inst = plan.instance(k.n, k.instance)?;
        let sol = match solutions_of(&inst) {
            Some([a]) => a.clone(),
            _ => return Err("c_smooth needs a unique satisfying assignment".into()),
        };
        let theta = thetas[k.sub];
        let order = order_for(plan, k.n, k.instance);
        let t = run_deterministic(&inst.formula, &ThetaSchedule::Fixed { theta }, &order, plan.c_q)
            .map_err(|e| e.to_string())?;
        Ok((theta, c_smooth_of(&t, &sol)))
    });
    art.failed = failed;
    log_failures(&mut art);

    let mut rows = Table::new(["n", "instance", "theta", "c_smooth", "converged"]);
    // (n, θ index) -> (c_smooth values, not converged)
    let mut groups: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for (k, (theta, cs)) in &done {
        rows.push(vec![
            k.n.to_string(),
            k.instance.to_string(),
            fmt_f64(*theta),
            fmt_opt(*cs),
            cs.is_some().to_string(),
        ]);
        let g = groups.entry((k.n, k.sub)).or_default();
        match cs {
            Some(c) => g.0.push(*c as f64),
            None => g.1 += 1,
        }
    }
    art.csv.insert("c_smooth.csv".into(), rows);

    let mut summary = Table::new(["n", "theta", "instances", "not_converged", "mean_c_smooth", "std_err", "delta"]);
    let mut meta = serde_json::Map::new();
    let mut sizes: Vec<usize> = groups.keys().map(|k| k.0).collect();
    sizes.dedup();
    let mut by_theta: Vec<usize> = (0..thetas.len()).collect();
    by_theta.sort_by(|&a, &b| thetas[a].total_cmp(&thetas[b]));
    let (lo, hi) = (by_theta[0], by_theta[by_theta.len() - 1]);
    for n in sizes {
        let mean_at = |s: usize| groups.get(&(n, s)).map(|g| stats::mean(&g.0)).unwrap_or(f64::NAN);
        let shift = mean_at(hi);
        let scale = mean_at(lo) - shift;
        meta.insert(n.to_string(), json!({ "shift": shift, "scale": scale }));
        for s in 0..thetas.len() {
            let Some((vals, nc)) = groups.get(&(n, s)) else { continue };
            let mean = stats::mean(vals);
            let delta = if scale.is_finite() && scale != 0.0 { (mean - shift) / scale } else { f64::NAN };
            summary.push(vec![
                n.to_string(),
                fmt_f64(thetas[s]),
                vals.len().to_string(),
                nc.to_string(),
                fmt_f64(mean),
                fmt_f64(stats::std_err(vals)),
                fmt_f64(delta),
            ]);
        }
    }
    art.csv.insert("c_smooth_summary.csv".into(), summary);
    art.json.insert(
        "c_smooth_meta.json".into(),
        json!({
            "delta": "(mean - shift) / scale per size",
            "shift": "mean c_smooth at the largest theta",
            "scale": "mean c_smooth at the smallest theta minus shift",
            "threshold": crate::tolerance::SMOOTH_BIAS,
            "c_q": plan.c_q,
            "sizes": meta,
        }),
    );
    Ok(art)
}

// ---------------------------------------------------------------- sweep

/// Linear sweeps from θ = 0 to π/2 over the plan's increment counts.
pub fn sweep_experiment(plan: &ExperimentPlan) -> Result<Artifacts, HarnessError> {
    let mut art = Artifacts::default();
    let keys = cells(plan);
    art.cells_total = keys.len();
    let (done, failed) = run_cells(&keys, |k| {
        let inst = plan.instance(k.n, k.instance)?;
        adiabatic_sweep_experiment(&inst.formula, &plan.increments, &order_for(plan, k.n, k.instance))
            .map_err(|e| e.to_string())
    });
    art.failed = failed;
    log_failures(&mut art);
    let mut pts = Table::new(["n", "instance", "increments", "success_prob", "expected_checks", "peak_fail_cycle"]);
    let mut sum = Table::new(["n", "instance", "success_monotone", "best_increments", "interior_optimum"]);
    for (k, r) in &done {
        for p in &r.points {
            pts.push(vec![
                k.n.to_string(),
                k.instance.to_string(),
                p.increments.to_string(),
                fmt_f64(p.success_prob),
                p.expected_checks.map(fmt_f64).unwrap_or_default(),
                p.peak_fail_cycle.to_string(),
            ]);
        }
        sum.push(vec![
            k.n.to_string(),
            k.instance.to_string(),
            r.success_monotone.to_string(),
            fmt_opt(r.best_increments),
            r.interior_optimum.to_string(),
        ]);
    }
    art.csv.insert("sweep.csv".into(), pts);
    art.csv.insert("sweep_summary.csv".into(), sum);
    Ok(art)
}

// ---------------------------------------------------------------- gap suite

/// Ground-space dimension, gap and gap bound on every instance and θ.
pub fn gap_suite_experiment(plan: &ExperimentPlan) -> Result<Artifacts, HarnessError> {
    let mut art = Artifacts::default();
    let mode: Mode = match &plan.spectral_mode {
        Some(s) => s.parse().map_err(|e: crate::spectral::SpectralError| HarnessError::Plan(e.to_string()))?,
        None => Mode::Auto,
    };
    let thetas = &plan.thetas;
    let keys = with_subs(plan, thetas.len());
    art.cells_total = keys.len();
    let (done, failed) = run_cells(&keys, |k| {
        let inst = plan.instance(k.n, k.instance)?;
        let th = Theta::new(thetas[k.sub]).map_err(|e| e.to_string())?;
        let cfg = LanczosConfig { seed: plan.stream_seed(k.n, k.instance, AUX_LANCZOS), ..LanczosConfig::default() };
        analyze(&inst.formula, th, mode, inst.n_s(), &cfg).map_err(|e| e.to_string())
    });
    art.failed = failed;
    log_failures(&mut art);
    let mut t = Table::new([
        "n",
        "instance",
        "m",
        "n_s",
        "theta",
        "mode",
        "ground_dim",
        "dim_matches",
        "gap",
        "bound",
        "bound_satisfied",
        "looseness",
        "max_residual",
    ]);
    for (k, r) in &done {
        t.push(vec![
            k.n.to_string(),
            k.instance.to_string(),
            r.m.to_string(),
            fmt_opt(r.n_s),
            fmt_f64(r.theta),
            format!("{:?}", r.mode).to_lowercase(),
            r.ground_space_dim.to_string(),
            r.n_s.map(|s| (s == r.ground_space_dim).to_string()).unwrap_or_default(),
            fmt_f64(r.gap),
            fmt_f64(r.bound),
            r.bound_satisfied.to_string(),
            fmt_f64(r.looseness),
            fmt_f64(r.residuals.iter().cloned().fold(0.0, f64::max)),
        ]);
    }
    art.csv.insert("gap_suite.csv".into(), t);
    Ok(art)
}

// ---------------------------------------------------------------- noise

/// Abort fraction of single Pauli errors on the converged classical-limit
/// state, and sampled runtimes of the default evolving schedule under each
/// per-cycle error rate in `p_errors`.
pub fn noise_experiment(plan: &ExperimentPlan) -> Result<Artifacts, HarnessError> {
    let mut art = Artifacts::default();
    let keys = cells(plan);
    art.cells_total = keys.len();
    let (done, failed) = run_cells(&keys, |k| {
        let inst = plan.instance(k.n, k.instance)?;
        let f = &inst.formula;
        let a = match solutions_of(&inst) {
            Some([a, ..]) => a.clone(),
            _ => return Err("noise experiment needs a satisfiable instance".into()),
        };
        let order = order_for(plan, k.n, k.instance);
        let seed = plan.stream_seed(k.n, k.instance, AUX_NOISE);
        let abort = noise_abort_experiment(f, &a, FRAC_PI_2, &order, plan.trials, seed).map_err(|e| e.to_string())?;
        let spec = ScheduleSpec { schedule: ThetaSchedule::Cubic { theta_init: default_theta_init(k.n) }, c_q: plan.c_q };
        let runs = (plan.trials / 100).max(1);
        let mut mc = vec![];
        for (i, &p) in plan.p_errors.iter().enumerate() {
            let cfg = McConfig {
                noise: (p > 0.0).then_some(NoiseConfig { p_error: p }),
                ..McConfig::new(plan.stream_seed(k.n, k.instance, AUX_MC + 16 * i as u64))
            };
            mc.push((p, monte_carlo_stats(f, &spec, &order, &cfg, runs).map_err(|e| e.to_string())?));
        }
        Ok((abort, mc))
    });
    art.failed = failed;
    log_failures(&mut art);
    let mut ab =
        Table::new(["n", "instance", "trials", "aborts", "fraction", "std_err", "x_aborts", "y_aborts", "z_aborts"]);
    let mut mc = Table::new([
        "n",
        "instance",
        "p_error",
        "runs",
        "timeouts",
        "mean_checks",
        "std_err",
        "success_rate_per_attempt",
        "measured_solution_rate",
    ]);
    for (k, (a, rs)) in &done {
        let per = |i: usize| format!("{}/{}", a.by_pauli[i].1, a.by_pauli[i].0);
        ab.push(vec![
            k.n.to_string(),
            k.instance.to_string(),
            a.trials.to_string(),
            a.aborts.to_string(),
            fmt_f64(a.fraction),
            fmt_f64(a.std_err),
            per(0),
            per(1),
            per(2),
        ]);
        for (p, s) in rs {
            mc.push(vec![
                k.n.to_string(),
                k.instance.to_string(),
                fmt_f64(*p),
                s.runs.to_string(),
                s.timeouts.to_string(),
                fmt_f64(s.mean_checks),
                fmt_f64(s.std_err),
                fmt_f64(s.success_rate_per_attempt),
                fmt_f64(s.measured_solution_rate),
            ]);
        }
    }
    art.csv.insert("noise_abort.csv".into(), ab);
    art.csv.insert("noise_runtime.csv".into(), mc);
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::super::ExperimentKind;
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentPlan {
        let mut p = ExperimentPlan::new(kind, vec![6]);
        p.instances_per_size = 2;
        p.classical_runs = 20;
        p.c_q = 20;
        p.trials = 200;
        p.increments = vec![2, 4, 8];
        p.tuning = Tuning::Fixed { theta_init_frac: 0.7, c_q: 6 };
        p
    }

    #[test]
    fn compare_smoke() {
        let mut p = small(ExperimentKind::Compare);
        p.instances_per_size = 1;
        p.classical_runs = 1;
        let out = compare_experiment(&p).unwrap();
        assert_eq!(out.rows.len(), 1);
        let t = &out.artifacts.csv["compare.csv"];
        assert_eq!(t.rows[0].len(), t.header.len());
        assert!(out.rows[0].quantum_expected.unwrap() >= (6 * out.rows[0].m) as f64);
        assert!(out.classical_fit.is_none());
    }

    #[test]
    fn grid_tuning_picks_a_grid_point() {
        let mut p = small(ExperimentKind::Compare);
        p.tuning =
            Tuning::GridSearch { theta_init_fracs: vec![0.5, 0.8], c_q_values: vec![3, 6], calibration_instances: 2 };
        let t = tune(&p, 8).unwrap();
        assert!([0.5 * FRAC_PI_2, 0.8 * FRAC_PI_2].contains(&t.theta_init));
        assert!([3, 6].contains(&t.c_q));
        assert!(t.score.unwrap() > 0.0);
    }

    #[test]
    fn trace_columns() {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(5, 3)).unwrap();
        let cfg = TraceConfig {
            spec: "fixed:0.9,4".parse().unwrap(),
            order: CheckOrderPolicy::Sequential,
            solutions: g.solutions.as_ref().map(|s| s.solutions.clone()),
        };
        let t = trace_csv(&g.formula, &cfg).unwrap();
        assert_eq!(t.header.len(), 5 + 3);
        assert_eq!(t.rows.len(), 5);
        assert!(t.rows[0][2..7].iter().all(|b| (b.parse::<f64>().unwrap() - 0.5).abs() < 1e-15));
        assert!(!t.rows[4][7].is_empty());
    }

    #[test]
    fn c_smooth_rows_and_meta() {
        let mut p = small(ExperimentKind::CSmooth);
        p.thetas = vec![0.6, 1.4];
        let art = c_smooth_experiment(&p).unwrap();
        assert_eq!(art.csv["c_smooth.csv"].rows.len(), 4);
        assert_eq!(art.csv["c_smooth_summary.csv"].rows.len(), 2);
        assert!(art.json["c_smooth_meta.json"]["sizes"]["6"]["shift"].is_number());
    }

    #[test]
    fn other_kinds_run() {
        let mut g = small(ExperimentKind::GapSuite);
        g.target_ns_cycle = vec![0, 1];
        let art = gap_suite_experiment(&g).unwrap();
        let t = &art.csv["gap_suite.csv"];
        let c = t.column("dim_matches").unwrap();
        assert!(t.rows.iter().all(|r| r[c] == "true"));
        let art = sweep_experiment(&small(ExperimentKind::Sweep)).unwrap();
        assert_eq!(art.csv["sweep.csv"].rows.len(), 6);
        let mut nz = small(ExperimentKind::Noise);
        nz.p_errors = vec![0.0, 0.01];
        let art = noise_experiment(&nz).unwrap();
        assert_eq!(art.csv["noise_runtime.csv"].rows.len(), 4);
        assert!(art.failed.is_empty());
    }
}
