use mdsat::generate::{generate, GenConfig};
use mdsat::sat::dimacs::{from_dimacs, to_dimacs};
use mdsat::sat::{count_solutions, Assignment, Clause, Formula, Literal};
use proptest::prelude::*;

/// Walks all assignments in Gray-code order, flipping one bit per step and
/// keeping a running count of satisfied literals per clause.
fn gray_code_solutions(f: &Formula) -> Vec<u64> {
    let n = f.num_vars();
    let mut bits = vec![false; n];
    let sat_lits = |c: &Clause, bits: &[bool]| c.literals().iter().filter(|l| bits[l.var] != l.negated).count();
    let mut counts: Vec<usize> = f.clauses().iter().map(|c| sat_lits(c, &bits)).collect();
    let mut occurs: Vec<Vec<(usize, bool)>> = vec![vec![]; n];
    for (ci, c) in f.clauses().iter().enumerate() {
        for l in c.literals() {
            occurs[l.var].push((ci, l.negated));
        }
    }
    let mut out = vec![];
    for step in 0..(1u64 << n) {
        if step > 0 {
            let v = step.trailing_zeros() as usize;
            bits[v] = !bits[v];
            for &(ci, neg) in &occurs[v] {
                if bits[v] != neg {
                    counts[ci] += 1;
                } else {
                    counts[ci] -= 1;
                }
            }
        }
        if counts.iter().all(|&k| k > 0) {
            out.push(bits.iter().enumerate().map(|(i, &b)| (b as u64) << i).sum());
        }
    }
    out.sort_unstable();
    out
}

#[test]
fn enumeration_matches_gray_code_oracle() {
    for n in [4usize, 5, 8, 11] {
        for seed in 0..15 {
            let g = generate(&GenConfig { target_ns: None, ..GenConfig::new(n, seed) }).unwrap();
            let set = count_solutions(&g.formula).unwrap();
            let idx: Vec<u64> = set.solutions.iter().map(Assignment::to_index).collect();
            assert_eq!(idx, gray_code_solutions(&g.formula), "n={n} seed={seed}");
            assert_eq!(set.count, idx.len());
        }
    }
}

#[test]
fn violation_count_matches_evaluation() {
    let g = generate(&GenConfig::usa(9, 4)).unwrap();
    let f = &g.formula;
    for x in (0..512u64).step_by(7) {
        let a = Assignment::from_index(x, 9);
        assert_eq!(f.violation_count(x), f.violated_clauses(&a).unwrap().len());
        assert_eq!(f.evaluate(&a).unwrap(), f.violation_count(x) == 0);
    }
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    (3usize..12).prop_flat_map(|n| {
        let clause = (proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 3), any::<[bool; 3]>())
            .prop_map(|(v, neg)| {
                Clause::new([
                    Literal { var: v[0], negated: neg[0] },
                    Literal { var: v[1], negated: neg[1] },
                    Literal { var: v[2], negated: neg[2] },
                ])
                .unwrap()
            });
        proptest::collection::vec(clause, 1..40).prop_map(move |cs| Formula::new(n, cs).unwrap())
    })
}

proptest! {
    #[test]
    fn dimacs_round_trip(f in arb_formula()) {
        let back = from_dimacs(&to_dimacs(&f)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn bitstring_round_trip(x in 0u64..(1 << 20), n in 20usize..24) {
        let a = Assignment::from_index(x, n);
        prop_assert_eq!(Assignment::from_bitstring(&a.to_bitstring()).unwrap(), a.clone());
        prop_assert_eq!(a.to_index(), x);
    }
}

#[test]
fn dimacs_rejects_malformed_input() {
    for bad in ["p cnf 3 1\n1 2 0\n", "p cnf 3 1\n1 2 4 0\n", "1 2 3 0\n", "p cnf 3 2\n1 2 3 0\n", "p cnf 3 1\n1 1 2 0\n"] {
        assert!(from_dimacs(bad).is_err(), "{bad:?}");
    }
}
