//! Schöning's random walk for 3-SAT, instrumented to count clause checks.
//!
//! Each pass visits the clauses in a fresh uniformly random order and stops
//! at the first FALSE clause; one of that clause's three variables is then
//! flipped uniformly at random. The order is drawn incrementally (forward
//! Fisher–Yates truncated at the stopping point), which has the same
//! distribution as shuffling the whole list up front.
//!
//! Every clause evaluation counts as one check, including the final pass
//! that verifies a solution (so a successful run costs at least `m`).

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::sat::{Assignment, Clause, Formula};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Flips allowed before a restart; `None` never restarts.
    pub c_max: Option<u64>,
    pub seed: u64,
    /// Stream of `seed` used by this run.
    pub stream: u64,
    pub max_total_checks: Option<u64>,
}

impl WalkConfig {
    pub fn new(seed: u64) -> Self {
        WalkConfig { c_max: None, seed, stream: 0, max_total_checks: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkResult {
    pub solution: Option<Assignment>,
    pub clause_checks: u64,
    pub flips: u64,
    pub restarts: u64,
    pub timed_out: bool,
}

/// Outcome of one randomly ordered pass over the clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassOutcome {
    pub checks: u64,
    /// Index of the first FALSE clause met, if any.
    pub failed: Option<usize>,
}

/// State carried between passes: the permutation buffer is reused, any
/// starting permutation gives a uniform order.
pub struct PassOrder {
    perm: Vec<usize>,
}

impl PassOrder {
    pub fn new(m: usize) -> Self {
        PassOrder { perm: (0..m).collect() }
    }

    /// Check clauses in random order until one is FALSE. `budget` caps the
    /// checks spent in this pass.
    pub fn pass<E>(
        &mut self,
        f: &Formula,
        a: &Assignment,
        rng: &mut rng::Rng,
        budget: u64,
        eval: &mut E,
    ) -> PassOutcome
    where
        E: FnMut(&Clause, &Assignment) -> bool,
    {
        let m = self.perm.len();
        let clauses = f.clauses();
        let mut checks = 0;
        for k in 0..m {
            if checks >= budget {
                return PassOutcome { checks, failed: None };
            }
            let j = rng.random_range(k..m);
            self.perm.swap(k, j);
            let ci = self.perm[k];
            checks += 1;
            if !eval(&clauses[ci], a) {
                return PassOutcome { checks, failed: Some(ci) };
            }
        }
        PassOutcome { checks, failed: None }
    }
}

fn random_assignment(n: usize, rng: &mut rng::Rng) -> Assignment {
    Assignment::new((0..n).map(|_| rng.random::<bool>()).collect())
}

pub fn schoening_run(f: &Formula, cfg: &WalkConfig) -> WalkResult {
    schoening_run_with(f, cfg, &mut |c: &Clause, a: &Assignment| c.evaluate_unchecked(a))
}

/// As [`schoening_run`] with a caller-supplied clause evaluator; every call
/// of `eval` is counted as exactly one check.
pub fn schoening_run_with<E>(f: &Formula, cfg: &WalkConfig, eval: &mut E) -> WalkResult
where
    E: FnMut(&Clause, &Assignment) -> bool,
{
    let mut rng = rng::stream(cfg.seed, cfg.stream);
    let budget = cfg.max_total_checks.unwrap_or(u64::MAX);
    let mut order = PassOrder::new(f.num_clauses());
    let mut checks = 0u64;
    let mut flips = 0u64;
    let mut restarts = 0u64;

    'restart: loop {
        let mut a = random_assignment(f.num_vars(), &mut rng);
        let mut c = 1u64;
        loop {
            let out = order.pass(f, &a, &mut rng, budget - checks, eval);
            checks += out.checks;
            let Some(ci) = out.failed else {
                if checks >= budget && out.checks < f.num_clauses() as u64 {
                    return WalkResult { solution: None, clause_checks: checks, flips, restarts, timed_out: true };
                }
                return WalkResult { solution: Some(a), clause_checks: checks, flips, restarts, timed_out: false };
            };
            if checks >= budget {
                return WalkResult { solution: None, clause_checks: checks, flips, restarts, timed_out: true };
            }
            if cfg.c_max.is_some_and(|cm| c > cm) {
                restarts += 1;
                continue 'restart;
            }
            let lit = f.clauses()[ci].literals()[rng.random_range(0..3)];
            a.flip(lit.var);
            flips += 1;
            c += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub runs: usize,
    pub timeouts: usize,
    /// Moments and quantiles over the runs that found a solution.
    pub mean_checks: f64,
    pub variance_checks: f64,
    pub std_err: f64,
    pub quantiles: [f64; 5],
    pub mean_flips: f64,
    pub mean_restarts: f64,
}

/// Quantile levels reported in [`WalkStats::quantiles`].
pub const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Run `runs` independent walks on streams `0..runs` of `base.seed`.
pub fn schoening_runs(f: &Formula, runs: usize, base: &WalkConfig) -> Vec<WalkResult> {
    (0..runs as u64)
        .into_par_iter()
        .map(|i| schoening_run(f, &WalkConfig { stream: i, ..*base }))
        .collect()
}

pub fn summarize(results: &[WalkResult]) -> WalkStats {
    let ok: Vec<&WalkResult> = results.iter().filter(|r| !r.timed_out).collect();
    let checks: Vec<f64> = ok.iter().map(|r| r.clause_checks as f64).collect();
    let mut sorted = checks.clone();
    sorted.sort_by(f64::total_cmp);
    WalkStats {
        runs: results.len(),
        timeouts: results.len() - ok.len(),
        mean_checks: stats::mean(&checks),
        variance_checks: stats::variance(&checks),
        std_err: stats::std_err(&checks),
        quantiles: QUANTILE_LEVELS.map(|q| stats::quantile_sorted(&sorted, q)),
        mean_flips: stats::mean(&ok.iter().map(|r| r.flips as f64).collect::<Vec<_>>()),
        mean_restarts: stats::mean(&ok.iter().map(|r| r.restarts as f64).collect::<Vec<_>>()),
    }
}

pub fn schoening_stats(f: &Formula, runs: usize, base: &WalkConfig) -> WalkStats {
    assert!(runs >= 1, "at least one run");
    summarize(&schoening_runs(f, runs, base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::Literal;

    fn c(l: [Literal; 3]) -> Clause {
        Clause::new(l).unwrap()
    }

    fn tautological_ish() -> Formula {
        // satisfied by every assignment except 000 and 111
        Formula::new(
            3,
            vec![
                c([Literal::pos(0), Literal::pos(1), Literal::pos(2)]),
                c([Literal::neg(0), Literal::neg(1), Literal::neg(2)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn first_pass_success_costs_m_checks() {
        let f = tautological_ish();
        // find a seed whose initial assignment already satisfies f
        let mut hits = 0;
        for seed in 0..50 {
            let r = schoening_run(&f, &WalkConfig::new(seed));
            assert!(f.evaluate(r.solution.as_ref().unwrap()).unwrap());
            if r.flips == 0 {
                assert_eq!(r.clause_checks, 2);
                hits += 1;
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(10, 5)).unwrap();
        let a = schoening_run(&g.formula, &WalkConfig::new(9));
        let b = schoening_run(&g.formula, &WalkConfig::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exhaustion_times_out() {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(12, 1)).unwrap();
        let cfg = WalkConfig { max_total_checks: Some(10), ..WalkConfig::new(0) };
        let r = schoening_run(&g.formula, &cfg);
        assert!(r.timed_out);
        assert!(r.solution.is_none());
        assert!(r.clause_checks <= 10);
    }

    #[test]
    fn single_run_stats() {
        let f = tautological_ish();
        let s = schoening_stats(&f, 1, &WalkConfig::new(3));
        let r = schoening_run(&f, &WalkConfig::new(3));
        assert_eq!(s.mean_checks, r.clause_checks as f64);
        assert_eq!(s.variance_checks, 0.0);
    }

    #[test]
    fn finite_cmax_restarts() {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(10, 2)).unwrap();
        let cfg = WalkConfig { c_max: Some(1), ..WalkConfig::new(4) };
        let r = schoening_run(&g.formula, &cfg);
        assert!(r.solution.is_some());
        assert!(r.restarts > 0);
        assert!(r.flips <= r.restarts + 1);
    }
}
