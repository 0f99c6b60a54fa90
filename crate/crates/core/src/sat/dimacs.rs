//! DIMACS CNF reading and writing, plus the JSON sidecar stored next to
//! generated instances.
//!
//! Only 3-literal clauses over distinct variables are accepted. Clauses may
//! span lines; comment lines start with `c`, and a lone `%` ends the clause
//! section (SATLIB convention).

use serde::{Deserialize, Serialize};

use super::{Assignment, Clause, Formula, Literal, SatError};

pub fn to_dimacs(f: &Formula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars(), f.num_clauses());
    for c in f.clauses() {
        for l in c.literals() {
            let v = l.var as i64 + 1;
            out.push_str(&format!("{} ", if l.negated { -v } else { v }));
        }
        out.push_str("0\n");
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> SatError {
    SatError::Parse { line, message: message.into() }
}

pub fn from_dimacs(text: &str) -> Result<Formula, SatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<Literal> = Vec::with_capacity(3);
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(parse_err(line_no, "duplicate problem line"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(parse_err(line_no, format!("malformed header `{line}`")));
            }
            let n = parts[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad variable count `{}`", parts[2])))?;
            let m = parts[3]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad clause count `{}`", parts[3])))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| parse_err(line_no, "clause before `p cnf` header"))?;
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad literal `{tok}`")))?;
            if pending.is_empty() {
                pending_line = line_no;
            }
            if v == 0 {
                if pending.len() != 3 {
                    return Err(parse_err(
                        pending_line,
                        format!("clause has {} literals, expected 3", pending.len()),
                    ));
                }
                let lits = [pending[0], pending[1], pending[2]];
                let clause = Clause::new(lits).map_err(|e| parse_err(pending_line, e.to_string()))?;
                clauses.push(clause);
                pending.clear();
                continue;
            }
            let var = v.unsigned_abs() as usize - 1;
            if var >= n {
                return Err(parse_err(line_no, format!("variable {} exceeds declared {n}", var + 1)));
            }
            if pending.len() == 3 {
                return Err(parse_err(pending_line, "clause has more than 3 literals"));
            }
            pending.push(Literal { var, negated: v < 0 });
        }
    }

    let (n, m) = header.ok_or_else(|| parse_err(0, "missing `p cnf` header"))?;
    if !pending.is_empty() {
        return Err(parse_err(pending_line, "unterminated clause"));
    }
    if clauses.len() != m {
        return Err(parse_err(0, format!("header declares {m} clauses, found {}", clauses.len())));
    }
    Formula::new(n, clauses)
}

/// Metadata persisted alongside a DIMACS file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub n: usize,
    pub m: usize,
    pub n_s: usize,
    /// Satisfying assignments as `b_1..b_n` bitstrings, ascending by index.
    pub solutions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

impl InstanceSidecar {
    pub fn new(f: &Formula, solutions: &[Assignment]) -> Self {
        InstanceSidecar {
            n: f.num_vars(),
            m: f.num_clauses(),
            n_s: solutions.len(),
            solutions: solutions.iter().map(Assignment::to_bitstring).collect(),
            seed: None,
            ratio: None,
            rejection_count: None,
            rng: None,
        }
    }

    pub fn solution_assignments(&self) -> Option<Vec<Assignment>> {
        self.solutions.iter().map(|s| Assignment::from_bitstring(s)).collect()
    }
}
