//! The measurement-driven algorithm: cycles of post-selected clause checks
//! on an `n`-qubit register, with θ following a schedule.
//!
//! A failed check restarts from `|+⟩^⊗n`, and the check sequence is a fixed
//! function of the order policy, so every attempt that survives to step `t`
//! is in the same state. [`run_deterministic`] follows that surviving branch
//! and records the pass probability `q_t` of every check; the expected
//! number of checks of the restart process then follows from
//! [`expected_checks`]. [`montecarlo`] samples the physical process instead.

pub mod montecarlo;
pub mod repetitions;
pub mod schedule;
pub mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{ClauseProjector, StateError, StateVector, Theta};
use crate::sat::{Assignment, Formula, SatError};
use crate::tolerance;

pub use montecarlo::{
    monte_carlo_stats, noise_abort_experiment, run_monte_carlo, McConfig, McRun, McSummary, NoiseAbortReport,
    NoiseConfig,
};
pub use repetitions::{binomial_tail, majority_vote, majority_vote_infer, required_repetitions, simulated_vote_error, Repetitions};
pub use schedule::{default_theta_init, parse_angle, CheckOrderPolicy, ScheduleSpec, ThetaSchedule};
pub use sweep::{adiabatic_sweep_experiment, SweepPoint, SweepReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("cycle {c} outside 0..={c_q}")]
    CycleRange { c: usize, c_q: usize },
    #[error("{0}")]
    Parse(String),
    #[error("success probability is zero; expected runtime is infinite")]
    InfiniteExpectation,
    #[error("no successful run within {attempts} attempts")]
    Timeout { attempts: u64 },
    #[error("{0}")]
    Config(String),
}

/// Which clause check failed with certainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureDiagnostic {
    pub cycle: usize,
    /// 1-based position in the attempt.
    pub check: usize,
    pub clause: usize,
    pub pass_prob: f64,
}

/// Everything the surviving branch of one schedule does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub m: usize,
    pub c_q: usize,
    /// `θ(c)` for `c = 0..=c_Q`.
    pub thetas: Vec<f64>,
    /// Pass probability of every executed check, in order.
    pub q: Vec<f64>,
    /// Clause index of every executed check.
    pub clauses: Vec<usize>,
    /// Qubit biases at each cycle boundary; entry 0 is the initial state.
    pub biases: Vec<Vec<f64>>,
    /// Subspace fidelity with the solution states at `θ(c)`, per boundary,
    /// when solutions were supplied. NaN where the solution states are
    /// linearly dependent (θ = 0 with several solutions).
    pub fidelity: Option<Vec<f64>>,
    /// `Π q_t` (0 after a certain failure).
    pub success_prob: f64,
    pub ln_success_prob: f64,
    /// Checks in a complete attempt, `c_Q·m`.
    pub checks_per_attempt: usize,
    pub failure: Option<FailureDiagnostic>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Cycle boundaries recorded, including cycle 0.
    pub fn cycles_recorded(&self) -> usize {
        self.biases.len()
    }

    pub fn final_biases(&self) -> &[f64] {
        self.biases.last().expect("cycle 0 is always recorded")
    }
}

/// Optional extras for [`run_deterministic_with`].
#[derive(Debug, Clone, Default)]
pub struct TraceOptions {
    /// Solutions used for the per-cycle fidelity.
    pub solutions: Option<Vec<Assignment>>,
    /// Start from this state instead of `|+⟩^⊗n`.
    pub initial: Option<StateVector>,
    /// Qubit limit for the register.
    pub max_qubits: Option<usize>,
}

pub fn run_deterministic(
    f: &Formula,
    schedule: &ThetaSchedule,
    order: &CheckOrderPolicy,
    c_q: usize,
) -> Result<Trajectory, MdError> {
    run_deterministic_with(f, schedule, order, c_q, &TraceOptions::default()).map(|(t, _)| t)
}

/// As [`run_deterministic`], also returning the final register state.
pub fn run_deterministic_with(
    f: &Formula,
    schedule: &ThetaSchedule,
    order: &CheckOrderPolicy,
    c_q: usize,
    opts: &TraceOptions,
) -> Result<(Trajectory, StateVector), MdError> {
    if c_q == 0 {
        return Err(MdError::Config("c_Q must be at least 1".into()));
    }
    schedule.validate()?;
    let n = f.num_vars();
    let m = f.num_clauses();
    let mut state = match &opts.initial {
        Some(s) if s.num_qubits() != n => {
            return Err(MdError::Config(format!("initial state has {} qubits, formula {n}", s.num_qubits())))
        }
        Some(s) => s.clone(),
        None => StateVector::init_plus_with_limit(n, opts.max_qubits.unwrap_or(crate::qstate::DEFAULT_MAX_QUBITS))?,
    };
    let thetas: Vec<f64> = (0..=c_q).map(|c| schedule.theta_at(c, c_q).map(Theta::value)).collect::<Result<_, _>>()?;
    let fid = |s: &StateVector, th: f64| -> Result<Option<f64>, MdError> {
        match &opts.solutions {
            None => Ok(None),
            Some(sols) => match s.subspace_fidelity(sols, Theta::new(th)?) {
                Ok(v) => Ok(Some(v)),
                Err(StateError::Conditioning { .. }) => Ok(Some(f64::NAN)),
                Err(e) => Err(e.into()),
            },
        }
    };

    let mut traj = Trajectory {
        n,
        m,
        c_q,
        thetas: thetas.clone(),
        q: Vec::with_capacity(c_q * m),
        clauses: Vec::with_capacity(c_q * m),
        biases: vec![state.biases()],
        fidelity: fid(&state, thetas[0])?.map(|v| vec![v]),
        success_prob: 1.0,
        ln_success_prob: 0.0,
        checks_per_attempt: c_q * m,
        failure: None,
    };

    for c in 1..=c_q {
        let theta = Theta::new(thetas[c])?;
        let projectors: Vec<ClauseProjector> = f.clauses().iter().map(|cl| ClauseProjector::new(cl, theta)).collect();
        for ci in order.cycle_order(m, c) {
            match state.apply_clause_check(&projectors[ci]) {
                Ok(q) => {
                    traj.q.push(q);
                    traj.clauses.push(ci);
                    traj.ln_success_prob += q.ln();
                }
                Err(StateError::CertainFailure { pass_prob }) => {
                    traj.q.push(pass_prob);
                    traj.clauses.push(ci);
                    traj.failure = Some(FailureDiagnostic { cycle: c, check: traj.q.len(), clause: ci, pass_prob });
                    traj.success_prob = 0.0;
                    traj.ln_success_prob = f64::NEG_INFINITY;
                    return Ok((traj, state));
                }
                Err(e) => return Err(e.into()),
            }
        }
        state.normalize();
        traj.biases.push(state.biases());
        if let Some(v) = fid(&state, thetas[c])? {
            traj.fidelity.as_mut().expect("fidelity enabled").push(v);
        }
    }
    traj.success_prob = traj.ln_success_prob.exp();
    Ok((traj, state))
}

/// Expected total checks of the restart-on-failure process with per-check
/// pass probabilities `q`:
/// `E = [Σ_t t·P_fail(t) + T·p] / p`, `P_fail(t) = (Π_{s<t} q_s)(1 − q_t)`.
pub fn expected_checks_from(q: &[f64]) -> Result<f64, MdError> {
    let mut survive = 1.0;
    let mut fail_cost = 0.0;
    for (i, &qt) in q.iter().enumerate() {
        fail_cost += (i + 1) as f64 * survive * (1.0 - qt);
        survive *= qt;
    }
    if !(survive > 0.0) {
        return Err(MdError::InfiniteExpectation);
    }
    Ok((fail_cost + q.len() as f64 * survive) / survive)
}

pub fn expected_checks(traj: &Trajectory) -> Result<f64, MdError> {
    if traj.failure.is_some() || traj.q.len() != traj.checks_per_attempt {
        return Err(MdError::InfiniteExpectation);
    }
    expected_checks_from(&traj.q)
}

/// `P_fail(t)` for every check of the attempt.
pub fn failure_distribution(q: &[f64]) -> Vec<f64> {
    let mut survive = 1.0;
    q.iter()
        .map(|&qt| {
            let p = survive * (1.0 - qt);
            survive *= qt;
            p
        })
        .collect()
}

/// Per-qubit probability of reading the value `a` assigns.
pub fn correct_biases(biases: &[f64], a: &Assignment) -> Vec<f64> {
    biases.iter().zip(a.bits()).map(|(&b, &v)| if v { b } else { 1.0 - b }).collect()
}

/// First cycle from which every qubit, at every later recorded cycle
/// boundary, reads its value in `a` with probability at least 0.51.
pub fn c_smooth_of(traj: &Trajectory, a: &Assignment) -> Option<usize> {
    c_smooth_with(traj, a, tolerance::SMOOTH_BIAS)
}

pub fn c_smooth_with(traj: &Trajectory, a: &Assignment, threshold: f64) -> Option<usize> {
    let good = |b: &Vec<f64>| correct_biases(b, a).iter().all(|&p| p >= threshold);
    let mut first = None;
    for c in (0..traj.biases.len()).rev() {
        if good(&traj.biases[c]) {
            first = Some(c);
        } else {
            break;
        }
    }
    first
}

/// Report for one configured run: exact metrics plus the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schedule: ScheduleSpec,
    pub order: CheckOrderPolicy,
    pub success_prob: f64,
    pub expected_checks: Option<f64>,
    pub c_smooth: Option<usize>,
    pub final_biases: Vec<f64>,
    /// Most likely z-basis outcome of the final state and its probability.
    pub most_likely: Option<(String, f64)>,
    pub failure: Option<FailureDiagnostic>,
}

pub fn run_report(
    f: &Formula,
    spec: &ScheduleSpec,
    order: &CheckOrderPolicy,
    solution: Option<&Assignment>,
) -> Result<RunReport, MdError> {
    let (traj, state) = run_deterministic_with(f, &spec.schedule, order, spec.c_q, &TraceOptions::default())?;
    let most_likely = traj.completed().then(|| {
        let (idx, p) = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a * a))
            .fold((0, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        (Assignment::from_index(idx as u64, f.num_vars()).to_bitstring(), p)
    });
    Ok(RunReport {
        schedule: *spec,
        order: *order,
        success_prob: traj.success_prob,
        expected_checks: expected_checks(&traj).ok(),
        c_smooth: solution.and_then(|a| c_smooth_of(&traj, a)),
        final_biases: traj.final_biases().to_vec(),
        most_likely,
        failure: traj.failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn usa(n: usize, seed: u64) -> (Formula, Assignment) {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(n, seed)).unwrap();
        let a = g.solutions.unwrap().solutions[0].clone();
        (g.formula, a)
    }

    #[test]
    fn renewal_examples() {
        assert_eq!(expected_checks_from(&[1.0, 1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(expected_checks_from(&[0.5]).unwrap(), 2.0);
        assert!((expected_checks_from(&[0.5, 1.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(expected_checks_from(&[0.5, 0.0]), Err(MdError::InfiniteExpectation)));
    }

    #[test]
    fn degenerate_theta_passes_everything() {
        let (f, _) = usa(8, 1);
        let t = run_deterministic(&f, &ThetaSchedule::Fixed { theta: 0.0 }, &CheckOrderPolicy::Sequential, 3).unwrap();
        assert!(t.q.iter().all(|&q| (q - 1.0).abs() < 1e-12));
        assert!(t.biases.iter().flatten().all(|&b| (b - 0.5).abs() < 1e-12));
        assert!((t.success_prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_limit_first_cycle() {
        let (f, a) = usa(8, 2);
        let t = run_deterministic(&f, &ThetaSchedule::Fixed { theta: FRAC_PI_2 }, &CheckOrderPolicy::Sequential, 3)
            .unwrap();
        let first: f64 = t.q[..f.num_clauses()].iter().product();
        assert!((first - 1.0 / 256.0).abs() < 1e-12);
        assert!(t.q[f.num_clauses()..].iter().all(|&q| (q - 1.0).abs() < 1e-12));
        assert!(correct_biases(t.final_biases(), &a).iter().all(|&b| (b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn certain_failure_is_diagnosed() {
        let (f, a) = usa(6, 3);
        // start in a violating basis state at θ = π/2
        let bad = (0..64u64).find(|&x| f.violation_count(x) > 0).unwrap();
        assert_ne!(bad, a.to_index());
        let opts = TraceOptions { initial: Some(StateVector::basis(6, bad as usize).unwrap()), ..Default::default() };
        let (t, _) = run_deterministic_with(
            &f,
            &ThetaSchedule::Fixed { theta: FRAC_PI_2 },
            &CheckOrderPolicy::Sequential,
            2,
            &opts,
        )
        .unwrap();
        let d = t.failure.unwrap();
        assert_eq!(t.success_prob, 0.0);
        assert!(!f.clauses()[d.clause].evaluate(&Assignment::from_index(bad, 6)).unwrap());
        assert!(matches!(expected_checks(&t), Err(MdError::InfiniteExpectation)));
    }

    #[test]
    fn c_smooth_definition() {
        let a = Assignment::new(vec![true, false]);
        let mk = |bs: Vec<Vec<f64>>| Trajectory {
            n: 2,
            m: 1,
            c_q: bs.len() - 1,
            thetas: vec![0.5; bs.len()],
            q: vec![],
            clauses: vec![],
            biases: bs,
            fidelity: None,
            success_prob: 1.0,
            ln_success_prob: 0.0,
            checks_per_attempt: 0,
            failure: None,
        };
        let t = mk(vec![vec![0.5, 0.5], vec![0.6, 0.3], vec![0.7, 0.2]]);
        assert_eq!(c_smooth_of(&t, &a), Some(1));
        let t = mk(vec![vec![0.5, 0.5], vec![0.6, 0.3], vec![0.4, 0.3], vec![0.6, 0.2], vec![0.7, 0.1]]);
        assert_eq!(c_smooth_of(&t, &a), Some(3));
        let t = mk(vec![vec![0.5, 0.5], vec![0.6, 0.6]]);
        assert_eq!(c_smooth_of(&t, &a), None);
    }

    #[test]
    fn evolving_theta_decodes_solution() {
        let (f, a) = usa(10, 4);
        let spec: ScheduleSpec = "cubic:0.8pi/2,30".parse().unwrap();
        let r = run_report(&f, &spec, &CheckOrderPolicy::Sequential, Some(&a)).unwrap();
        assert!(r.success_prob > 0.0);
        let (bits, p) = r.most_likely.unwrap();
        assert_eq!(bits, a.to_bitstring());
        assert!((p - 1.0).abs() < 1e-9);
        assert!(r.expected_checks.unwrap() >= (30 * f.num_clauses()) as f64);
    }
}
