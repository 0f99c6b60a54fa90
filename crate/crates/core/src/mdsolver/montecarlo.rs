//! Sampled execution of the restart process, optionally with Pauli noise.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CheckOrderPolicy, MdError, ScheduleSpec};
use crate::qstate::{ClauseProjector, Pauli, StateError, StateVector, Theta};
use crate::rng;
use crate::sat::{Assignment, Formula};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per qubit, per cycle probability of a uniformly chosen Pauli error.
    pub p_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    /// Attempts allowed before giving up.
    pub max_attempts: u64,
    pub noise: Option<NoiseConfig>,
}

impl McConfig {
    pub fn new(seed: u64) -> Self {
        McConfig { seed, max_attempts: 1_000_000, noise: None }
    }
}

/// One sampled run: attempts until an attempt completes all `c_Q` cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub succeeded: bool,
    pub attempts: u64,
    /// Checks over all attempts, the failed check of each failed attempt
    /// included.
    pub total_checks: u64,
    pub pauli_errors: u64,
    /// z-basis measurement of the final register.
    pub measured: Option<Assignment>,
    #[serde(skip)]
    pub final_state: Option<StateVector>,
}

/// Applies a uniform Pauli to each qubit with probability `p_error`;
/// returns the number of errors.
pub(crate) fn inject_noise(state: &mut StateVector, p_error: f64, rng: &mut rng::Rng) -> u64 {
    let mut k = 0;
    for q in 0..state.num_qubits() {
        if rng.random::<f64>() < p_error {
            state.apply_pauli(q, random_pauli(rng));
            k += 1;
        }
    }
    k
}

fn random_pauli(rng: &mut rng::Rng) -> Pauli {
    [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)]
}

/// Runs one cycle of checks, sampling each outcome. Returns the checks
/// spent and whether all passed.
fn sampled_cycle(
    state: &mut StateVector,
    projectors: &[ClauseProjector],
    order: &[usize],
    rng: &mut rng::Rng,
) -> Result<(u64, bool), MdError> {
    let mut checks = 0;
    for &ci in order {
        checks += 1;
        // the state is only kept on the passing branch, so project first
        // and then decide
        match state.apply_clause_check(&projectors[ci]) {
            Ok(q) => {
                if rng.random::<f64>() >= q {
                    return Ok((checks, false));
                }
            }
            Err(StateError::CertainFailure { .. }) => return Ok((checks, false)),
            Err(e) => return Err(e.into()),
        }
    }
    state.normalize();
    Ok((checks, true))
}

/// Samples the Box-2 restart process for one schedule. The run draws from
/// stream `stream` of `cfg.seed`.
pub fn run_monte_carlo(
    f: &Formula,
    spec: &ScheduleSpec,
    order: &CheckOrderPolicy,
    cfg: &McConfig,
    stream: u64,
) -> Result<McRun, MdError> {
    spec.schedule.validate()?;
    let n = f.num_vars();
    let m = f.num_clauses();
    let c_q = spec.c_q;
    let mut rng = rng::stream(cfg.seed, stream);
    let projectors: Vec<Vec<ClauseProjector>> = (1..=c_q)
        .map(|c| {
            let th = spec.schedule.theta_at(c, c_q)?;
            Ok(f.clauses().iter().map(|cl| ClauseProjector::new(cl, th)).collect())
        })
        .collect::<Result<_, MdError>>()?;
    let orders: Vec<Vec<usize>> = (1..=c_q).map(|c| order.cycle_order(m, c)).collect();
    let plus = StateVector::init_plus(n)?;
    let mut run =
        McRun { succeeded: false, attempts: 0, total_checks: 0, pauli_errors: 0, measured: None, final_state: None };
    let mut state = plus.clone();
    'attempt: while run.attempts < cfg.max_attempts {
        run.attempts += 1;
        state.clone_from(&plus);
        for c in 0..c_q {
            if let Some(nz) = cfg.noise {
                run.pauli_errors += inject_noise(&mut state, nz.p_error, &mut rng);
            }
            let (k, ok) = sampled_cycle(&mut state, &projectors[c], &orders[c], &mut rng)?;
            run.total_checks += k;
            if !ok {
                continue 'attempt;
            }
        }
        run.succeeded = true;
        let idx = state.sample_basis(&mut rng);
        run.measured = Some(Assignment::from_index(idx as u64, n));
        run.final_state = Some(state);
        return Ok(run);
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub runs: usize,
    pub timeouts: usize,
    /// Over the successful runs.
    pub mean_checks: f64,
    pub std_err: f64,
    pub mean_attempts: f64,
    /// Successful attempts over all attempts.
    pub success_rate_per_attempt: f64,
    /// Fraction of successful runs whose measurement satisfies the formula.
    pub measured_solution_rate: f64,
}

/// `runs` independent sampled runs on streams `0..runs`.
pub fn monte_carlo_stats(
    f: &Formula,
    spec: &ScheduleSpec,
    order: &CheckOrderPolicy,
    cfg: &McConfig,
    runs: usize,
) -> Result<McSummary, MdError> {
    let results: Vec<McRun> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            run_monte_carlo(f, spec, order, cfg, i).map(|mut r| {
                r.final_state = None;
                r
            })
        })
        .collect::<Result<_, _>>()?;
    let ok: Vec<&McRun> = results.iter().filter(|r| r.succeeded).collect();
    let checks: Vec<f64> = ok.iter().map(|r| r.total_checks as f64).collect();
    let attempts: u64 = results.iter().map(|r| r.attempts).sum();
    let solved = ok
        .iter()
        .filter(|r| r.measured.as_ref().is_some_and(|a| f.evaluate(a).unwrap_or(false)))
        .count();
    Ok(McSummary {
        runs,
        timeouts: runs - ok.len(),
        mean_checks: stats::mean(&checks),
        std_err: stats::std_err(&checks),
        mean_attempts: stats::mean(&ok.iter().map(|r| r.attempts as f64).collect::<Vec<_>>()),
        success_rate_per_attempt: ok.len() as f64 / attempts.max(1) as f64,
        measured_solution_rate: solved as f64 / ok.len().max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAbortReport {
    pub trials: usize,
    pub aborts: usize,
    pub fraction: f64,
    pub std_err: f64,
    /// Trials and aborts per Pauli kind, X, Y, Z.
    pub by_pauli: [(usize, usize); 3],
}

/// Starts from the solution state of `a` at `theta`, applies one uniformly
/// random Pauli to a uniformly random qubit, runs one sampled cycle and
/// records whether it aborts.
pub fn noise_abort_experiment(
    f: &Formula,
    a: &Assignment,
    theta: f64,
    order: &CheckOrderPolicy,
    trials: usize,
    seed: u64,
) -> Result<NoiseAbortReport, MdError> {
    let th = Theta::new(theta)?;
    let base = StateVector::solution_state(a, th)?;
    let projectors: Vec<ClauseProjector> = f.clauses().iter().map(|cl| ClauseProjector::new(cl, th)).collect();
    let ord = order.cycle_order(f.num_clauses(), 1);
    let outcomes: Vec<(usize, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let mut s = base.clone();
            let q = rng.random_range(0..f.num_vars());
            let p = rng.random_range(0..3usize);
            s.apply_pauli(q, [Pauli::X, Pauli::Y, Pauli::Z][p]);
            let (_, ok) = sampled_cycle(&mut s, &projectors, &ord, &mut rng)?;
            Ok((p, !ok))
        })
        .collect::<Result<_, MdError>>()?;
    let mut by_pauli = [(0, 0); 3];
    for &(p, ab) in &outcomes {
        by_pauli[p].0 += 1;
        by_pauli[p].1 += ab as usize;
    }
    let aborts = outcomes.iter().filter(|o| o.1).count();
    let fraction = aborts as f64 / trials as f64;
    Ok(NoiseAbortReport {
        trials,
        aborts,
        fraction,
        std_err: (fraction * (1.0 - fraction) / trials as f64).sqrt(),
        by_pauli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdsolver::ThetaSchedule;
    use std::f64::consts::FRAC_PI_2;

    fn usa(n: usize, seed: u64) -> (Formula, Assignment) {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(n, seed)).unwrap();
        let a = g.solutions.unwrap().solutions[0].clone();
        (g.formula, a)
    }

    #[test]
    fn deterministic_per_seed_and_stream() {
        let (f, _) = usa(6, 1);
        let spec = ScheduleSpec { schedule: ThetaSchedule::Cubic { theta_init: 1.0 }, c_q: 4 };
        let cfg = McConfig::new(5);
        let a = run_monte_carlo(&f, &spec, &CheckOrderPolicy::Sequential, &cfg, 2).unwrap();
        let b = run_monte_carlo(&f, &spec, &CheckOrderPolicy::Sequential, &cfg, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.succeeded);
        assert!(a.total_checks >= (4 * f.num_clauses()) as u64);
    }

    #[test]
    fn ends_at_solution_when_theta_reaches_classical() {
        let (f, a) = usa(6, 2);
        let spec = ScheduleSpec { schedule: ThetaSchedule::Cubic { theta_init: 1.0 }, c_q: 5 };
        let s = monte_carlo_stats(&f, &spec, &CheckOrderPolicy::Sequential, &McConfig::new(1), 50).unwrap();
        assert_eq!(s.timeouts, 0);
        assert_eq!(s.measured_solution_rate, 1.0);
        let r = run_monte_carlo(&f, &spec, &CheckOrderPolicy::Sequential, &McConfig::new(1), 0).unwrap();
        assert_eq!(r.measured.unwrap(), a);
    }

    #[test]
    fn attempt_cap_times_out() {
        let (f, _) = usa(8, 3);
        let spec = ScheduleSpec { schedule: ThetaSchedule::Fixed { theta: FRAC_PI_2 }, c_q: 1 };
        let cfg = McConfig { max_attempts: 1, ..McConfig::new(0) };
        let hits = (0..20)
            .filter(|&i| !run_monte_carlo(&f, &spec, &CheckOrderPolicy::Sequential, &cfg, i).unwrap().succeeded)
            .count();
        assert!(hits > 15);
    }

    #[test]
    fn z_errors_never_abort_in_classical_limit() {
        let (f, a) = usa(8, 4);
        let r = noise_abort_experiment(&f, &a, FRAC_PI_2, &CheckOrderPolicy::Sequential, 600, 9).unwrap();
        assert_eq!(r.by_pauli[2].1, 0);
        assert_eq!(r.by_pauli[0].0, r.by_pauli[0].1);
        assert_eq!(r.by_pauli[1].0, r.by_pauli[1].1);
    }
}
