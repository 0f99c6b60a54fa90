//! Inferring a solution from repeated measurements of a fixed-θ state.
//!
//! Each qubit of the converged state reads its solution value with
//! probability `p = (1 + sin θ)/2`, independently across qubits and runs.
//! After `R` runs (R odd) the per-qubit majority is wrong with probability
//! `Σ_{i ≤ (R−1)/2} C(R,i) p^i (1−p)^{R−i}`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::montecarlo::{run_monte_carlo, McConfig};
use super::{CheckOrderPolicy, MdError, ScheduleSpec, ThetaSchedule};
use crate::qstate::StateVector;
use crate::rng;
use crate::sat::{Assignment, Formula};

/// Probability that the majority of `r` Bernoulli(`p`) trials is a minority
/// of successes, i.e. at most `(r−1)/2` successes.
pub fn binomial_tail(r: u64, p: f64) -> f64 {
    assert!(r % 2 == 1, "R must be odd");
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    if p == 1.0 {
        return 0.0;
    }
    if p == 0.0 {
        return 1.0;
    }
    let m = (r - 1) / 2;
    let t0 = (1.0 - p).powf(r as f64);
    if t0 > 1e-250 {
        let odds = p / (1.0 - p);
        let mut term = t0;
        let mut sum = t0;
        for i in 0..m {
            term *= (r - i) as f64 / (i + 1) as f64 * odds;
            sum += term;
        }
        return sum;
    }
    // log terms, t_0 = (1−p)^R
    let ratio = (p / (1.0 - p)).ln();
    let mut lt = r as f64 * (1.0 - p).ln();
    let mut logs = Vec::with_capacity(m as usize + 1);
    logs.push(lt);
    for i in 0..m {
        lt += ((r - i) as f64 / (i + 1) as f64).ln() + ratio;
        logs.push(lt);
    }
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx.exp() * logs.iter().map(|l| (l - mx).exp()).sum::<f64>()
}

/// Repetition counts meeting `p_wrong < target / n` per variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repetitions {
    /// Smallest odd `R` with `G·exp(G²) > n / (2√π·target)`,
    /// `G = √(R/2)·tan θ`.
    pub gaussian: u64,
    /// Smallest odd `R` for which the exact binomial tail meets the target.
    pub exact: u64,
    /// `exact` when `gaussian·(1 − p) < 5`, where the normal approximation
    /// is poor; otherwise `gaussian`.
    pub chosen: u64,
    pub exact_used: bool,
}

/// Repetitions needed at angle `theta` for `n` variables. `target = 1`
/// asks for an expected number of wrong variables below one.
pub fn required_repetitions(theta: f64, n: usize, target: f64) -> Result<Repetitions, MdError> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
        return Err(MdError::Config(format!("theta {theta} must lie in (0, π/2]")));
    }
    if !(target > 0.0) || n == 0 {
        return Err(MdError::Config("target and n must be positive".into()));
    }
    let p = (1.0 + theta.sin()) / 2.0;
    let rhs = n as f64 / (2.0 * std::f64::consts::PI.sqrt() * target);
    let tan = theta.tan();
    let holds = |r: u64| {
        let g = (r as f64 / 2.0).sqrt() * tan;
        // compare logs to avoid overflow of exp(G²)
        g.ln() + g * g > rhs.ln()
    };
    let gaussian = smallest_odd(holds);
    let bound = target / n as f64;
    let exact = smallest_odd(|r| binomial_tail(r, p) < bound);
    let exact_used = (gaussian as f64) * (1.0 - p) < 5.0;
    Ok(Repetitions { gaussian, exact, chosen: if exact_used { exact } else { gaussian }, exact_used })
}

/// Smallest odd `R ≥ 1` with `pred(R)`, for a predicate that stays true
/// once true.
fn smallest_odd(pred: impl Fn(u64) -> bool) -> u64 {
    let odd = |k: u64| 2 * k + 1;
    if pred(1) {
        return 1;
    }
    let mut hi = 1u64;
    while !pred(odd(hi)) {
        hi *= 2;
        assert!(hi < 1 << 40, "repetition count diverged");
    }
    let mut lo = hi / 2;
    // pred(odd(lo)) false, pred(odd(hi)) true
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if pred(odd(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    odd(hi)
}

/// Per-position majority of the samples (ties go to FALSE).
pub fn majority_vote(samples: &[Assignment]) -> Assignment {
    assert!(!samples.is_empty(), "at least one sample");
    let n = samples[0].len();
    Assignment::new(
        (0..n)
            .map(|i| 2 * samples.iter().filter(|s| s.get(i)).count() > samples.len())
            .collect(),
    )
}

/// `r` independent z-basis measurements of `state`, combined by majority.
pub fn majority_vote_from_state(state: &StateVector, r: usize, rng: &mut rng::Rng) -> Assignment {
    let n = state.num_qubits();
    let samples: Vec<Assignment> =
        (0..r).map(|_| Assignment::from_index(state.sample_basis(rng) as u64, n)).collect();
    majority_vote(&samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityVote {
    pub inferred: Assignment,
    /// Whether `inferred` satisfies the formula.
    pub correct: bool,
    pub total_checks: u64,
    pub attempts: u64,
}

/// Runs the fixed-θ algorithm to completion `repetitions` times (restarting
/// on failure), measures every qubit after each, and takes the per-qubit
/// majority.
pub fn majority_vote_infer(
    f: &Formula,
    theta: f64,
    c_q: usize,
    repetitions: usize,
    order: &CheckOrderPolicy,
    seed: u64,
) -> Result<MajorityVote, MdError> {
    if repetitions.is_multiple_of(2) {
        return Err(MdError::Config("repetitions must be odd".into()));
    }
    let spec = ScheduleSpec { schedule: ThetaSchedule::Fixed { theta }, c_q };
    let cfg = McConfig::new(seed);
    let mut samples = Vec::with_capacity(repetitions);
    let (mut checks, mut attempts) = (0, 0);
    for i in 0..repetitions as u64 {
        let run = run_monte_carlo(f, &spec, order, &cfg, i)?;
        checks += run.total_checks;
        attempts += run.attempts;
        match run.measured {
            Some(a) => samples.push(a),
            None => return Err(MdError::Timeout { attempts: run.attempts }),
        }
    }
    let inferred = majority_vote(&samples);
    let correct = f.evaluate(&inferred)?;
    Ok(MajorityVote { inferred, correct, total_checks: checks, attempts })
}

/// Fraction of `trials` majority votes of `r` coin flips with bias `p` that
/// come out wrong. A sampling check of [`binomial_tail`].
pub fn simulated_vote_error(r: u64, p: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = rng::seeded(seed);
    let wrong = (0..trials)
        .filter(|_| {
            let heads = (0..r).filter(|_| rng.random::<f64>() < p).count() as u64;
            2 * heads < r
        })
        .count();
    wrong as f64 / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn tail_values() {
        assert_eq!(binomial_tail(3, 0.75), 0.15625);
        assert!((binomial_tail(1, 0.75) - 0.25).abs() < 1e-15);
        assert_eq!(binomial_tail(5, 1.0), 0.0);
        assert!((binomial_tail(5, 0.5) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn near_classical_needs_one_run() {
        let r = required_repetitions(FRAC_PI_2, 50, 1.0).unwrap();
        assert_eq!((r.gaussian, r.exact, r.chosen), (1, 1, 1));
        assert_eq!(required_repetitions(1.5, 20, 1.0).unwrap().chosen, 1);
    }

    #[test]
    fn worked_case() {
        let r = required_repetitions(0.6, 20, 1.0).unwrap();
        assert_eq!(r.gaussian, 7);
        assert_eq!(r.exact, 7);
    }

    #[test]
    fn grows_slowly_with_n() {
        let r: Vec<u64> = [20, 40, 80, 160, 320].iter().map(|&n| required_repetitions(0.2, n, 1.0).unwrap().gaussian).collect();
        let steps: Vec<i64> = r.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
        assert!(steps.iter().all(|&d| d > 0));
        let spread = steps.iter().max().unwrap() - steps.iter().min().unwrap();
        assert!(spread <= 8, "{r:?}");
    }

    #[test]
    fn majority() {
        let s = ["110", "100", "011"].map(|b| Assignment::from_bitstring(b).unwrap());
        assert_eq!(majority_vote(&s).to_bitstring(), "110");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(required_repetitions(0.0, 5, 1.0).is_err());
        assert!(required_repetitions(0.3, 5, 0.0).is_err());
    }
}
