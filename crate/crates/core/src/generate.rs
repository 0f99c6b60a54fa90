//! Random 3-SAT instances with rejection on the number of solutions.
//!
//! A formula is built by drawing `m = round(R·n)` clauses one at a time:
//! three distinct variables uniformly at random, then three independent
//! negation bits, redrawing any clause equal (as a literal set) to one
//! already present. The completed formula is rejected unless every variable
//! occurs both plain and negated; when a target solution count is given it
//! is also rejected unless the exhaustive count matches.

use std::collections::{BTreeMap, HashSet};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, RNG_ID};
use crate::sat::{count_solutions, Clause, Formula, Literal, SatError, SolutionSet, DEFAULT_ENUMERATION_LIMIT};

/// Clause-to-variable ratio near the random 3-SAT threshold.
pub const DEFAULT_RATIO: f64 = 4.267;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub ratio: f64,
    /// `None` accepts any solution count.
    pub target_ns: Option<usize>,
    pub seed: u64,
    pub max_rejections: u64,
}

impl GenConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        GenConfig { n, ratio: DEFAULT_RATIO, target_ns: None, seed, max_rejections: 1_000_000 }
    }

    pub fn usa(n: usize, seed: u64) -> Self {
        GenConfig { target_ns: Some(1), ..GenConfig::new(n, seed) }
    }

    pub fn with_target(mut self, n_s: usize) -> Self {
        self.target_ns = Some(n_s);
        self
    }

    pub fn num_clauses(&self) -> usize {
        (self.ratio * self.n as f64).round() as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionStats {
    /// Formulas dropped because some variable lacked a plain or a negated occurrence.
    pub occurrence_rejections: u64,
    /// Formulas dropped on solution count, keyed by the count observed.
    pub count_rejections: BTreeMap<usize, u64>,
}

impl RejectionStats {
    pub fn total(&self) -> u64 {
        self.occurrence_rejections + self.count_rejections.values().sum::<u64>()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("no acceptable formula after {} rejections", stats.total())]
    Exhausted { stats: RejectionStats },
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub formula: Formula,
    /// Present whenever `n` is within the enumeration limit.
    pub solutions: Option<SolutionSet>,
    pub rejection_count: u64,
    pub stats: RejectionStats,
    pub seed: u64,
    pub ratio: f64,
    pub rng: &'static str,
}

impl GeneratedInstance {
    pub fn n_s(&self) -> Option<usize> {
        self.solutions.as_ref().map(|s| s.count)
    }
}

fn legal_clause_count(n: usize) -> u128 {
    let n = n as u128;
    if n < 3 {
        return 0;
    }
    8 * n * (n - 1) * (n - 2) / 6
}

fn validate(cfg: &GenConfig) -> Result<usize, GenError> {
    if cfg.n < 3 {
        return Err(GenError::Config(format!("n = {} but clauses need 3 distinct variables", cfg.n)));
    }
    if !(cfg.ratio > 0.0) || !cfg.ratio.is_finite() {
        return Err(GenError::Config(format!("ratio must be positive, got {}", cfg.ratio)));
    }
    if cfg.max_rejections < 1 {
        return Err(GenError::Config("max_rejections must be at least 1".into()));
    }
    let m = cfg.num_clauses();
    if (m as u128) > legal_clause_count(cfg.n) {
        return Err(GenError::Config(format!(
            "m = {m} exceeds the {} distinct legal clauses on {} variables",
            legal_clause_count(cfg.n),
            cfg.n
        )));
    }
    // each variable needs one plain and one negated occurrence: 2n literal slots
    if 3 * m < 2 * cfg.n {
        return Err(GenError::Config(format!(
            "m = {m} clauses give {} literal slots, fewer than the 2n = {} needed for every \
             variable to appear both plain and negated",
            3 * m,
            2 * cfg.n
        )));
    }
    if let Some(t) = cfg.target_ns {
        if cfg.n > DEFAULT_ENUMERATION_LIMIT {
            return Err(GenError::Config(format!(
                "target solution count needs n <= {DEFAULT_ENUMERATION_LIMIT}"
            )));
        }
        if t as u128 > 1u128 << cfg.n {
            return Err(GenError::Config(format!("target n_S = {t} exceeds 2^n")));
        }
    }
    Ok(m)
}

fn draw_clause(n: usize, rng: &mut rng::Rng) -> Clause {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n);
    while b == a {
        b = rng.random_range(0..n);
    }
    let mut c = rng.random_range(0..n);
    while c == a || c == b {
        c = rng.random_range(0..n);
    }
    let lits = [a, b, c].map(|var| Literal { var, negated: rng.random::<bool>() });
    Clause::new(lits).expect("variables are distinct by construction")
}

fn draw_formula(n: usize, m: usize, rng: &mut rng::Rng) -> Formula {
    let mut seen = HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let c = draw_clause(n, rng);
        if seen.insert(c.canonical_key()) {
            clauses.push(c);
        }
    }
    Formula::new(n, clauses).expect("indices drawn below n")
}

/// Every variable occurs at least once plain and once negated.
pub fn has_both_polarities(f: &Formula) -> bool {
    let mut pos = vec![false; f.num_vars()];
    let mut neg = vec![false; f.num_vars()];
    for c in f.clauses() {
        for l in c.literals() {
            if l.negated {
                neg[l.var] = true;
            } else {
                pos[l.var] = true;
            }
        }
    }
    pos.iter().zip(&neg).all(|(&p, &q)| p && q)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleViolation {
    #[error("clauses {0} and {1} are the same literal set")]
    DuplicateClause(usize, usize),
    #[error("variable b{} lacks a plain or a negated occurrence", .0 + 1)]
    MissingPolarity(usize),
    #[error("clause {0} repeats a variable")]
    RepeatedVariable(usize),
    #[error("formula has {got} clauses, expected round(R n) = {expected}")]
    ClauseCount { expected: usize, got: usize },
}

/// Check the four generation rules on an arbitrary formula. The clause count
/// rule is only checked when `ratio` is given.
pub fn validate_rules(f: &Formula, ratio: Option<f64>) -> Result<(), RuleViolation> {
    let mut seen = std::collections::HashMap::new();
    for (i, c) in f.clauses().iter().enumerate() {
        let v = c.vars();
        if v[0] == v[1] || v[0] == v[2] || v[1] == v[2] {
            return Err(RuleViolation::RepeatedVariable(i));
        }
        if let Some(j) = seen.insert(c.canonical_key(), i) {
            return Err(RuleViolation::DuplicateClause(j, i));
        }
    }
    let mut pos = vec![false; f.num_vars()];
    let mut neg = vec![false; f.num_vars()];
    for c in f.clauses() {
        for l in c.literals() {
            if l.negated {
                neg[l.var] = true;
            } else {
                pos[l.var] = true;
            }
        }
    }
    if let Some(v) = (0..f.num_vars()).find(|&v| !(pos[v] && neg[v])) {
        return Err(RuleViolation::MissingPolarity(v));
    }
    if let Some(r) = ratio {
        let expected = (r * f.num_vars() as f64).round() as usize;
        if expected != f.num_clauses() {
            return Err(RuleViolation::ClauseCount { expected, got: f.num_clauses() });
        }
    }
    Ok(())
}

pub fn generate(cfg: &GenConfig) -> Result<GeneratedInstance, GenError> {
    let m = validate(cfg)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut stats = RejectionStats::default();
    loop {
        if stats.total() >= cfg.max_rejections {
            return Err(GenError::Exhausted { stats });
        }
        let f = draw_formula(cfg.n, m, &mut rng);
        if !has_both_polarities(&f) {
            stats.occurrence_rejections += 1;
            continue;
        }
        let solutions = if cfg.n <= DEFAULT_ENUMERATION_LIMIT {
            Some(count_solutions(&f)?)
        } else {
            None
        };
        if let (Some(target), Some(set)) = (cfg.target_ns, &solutions) {
            if set.count != target {
                *stats.count_rejections.entry(set.count).or_default() += 1;
                continue;
            }
        }
        return Ok(GeneratedInstance {
            formula: f,
            solutions,
            rejection_count: stats.total(),
            stats,
            seed: cfg.seed,
            ratio: cfg.ratio,
            rng: RNG_ID,
        });
    }
}
