use std::collections::HashSet;

use mdsat::generate::{generate, validate_rules, GenConfig, GenError};
use mdsat::sat::{count_solutions, Formula};

/// Independent check of the four generation rules.
fn rules_hold(f: &Formula, ratio: f64) -> bool {
    let n = f.num_vars();
    let mut seen = HashSet::new();
    let mut polarity = vec![[false; 2]; n];
    for c in f.clauses() {
        let mut lits: Vec<(usize, bool)> = c.literals().iter().map(|l| (l.var, l.negated)).collect();
        let vars: HashSet<usize> = lits.iter().map(|l| l.0).collect();
        if vars.len() != 3 {
            return false;
        }
        lits.sort_unstable();
        if !seen.insert(lits.clone()) {
            return false;
        }
        for (v, neg) in lits {
            polarity[v][neg as usize] = true;
        }
    }
    polarity.iter().all(|p| p[0] && p[1]) && f.num_clauses() == (ratio * n as f64).round() as usize
}

#[test]
fn same_seed_same_instance() {
    for seed in [0u64, 17, 123_456] {
        let a = generate(&GenConfig::usa(12, seed)).unwrap();
        let b = generate(&GenConfig::usa(12, seed)).unwrap();
        assert_eq!(a, b);
    }
    assert_ne!(generate(&GenConfig::usa(12, 1)).unwrap().formula, generate(&GenConfig::usa(12, 2)).unwrap().formula);
}

#[test]
fn twenty_variables_give_85_clauses() {
    assert_eq!(GenConfig::new(20, 0).num_clauses(), 85);
}

#[test]
fn one_clause_is_a_config_error() {
    let cfg = GenConfig { ratio: 1.0 / 3.0, target_ns: None, ..GenConfig::new(3, 0) };
    assert_eq!(cfg.num_clauses(), 1);
    assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
}

#[test]
fn usa_suite_obeys_every_rule() {
    let mut rejections = 0u64;
    let count = 500;
    for seed in 0..count {
        let g = generate(&GenConfig::usa(12, seed)).unwrap();
        assert!(rules_hold(&g.formula, g.ratio), "seed {seed}");
        assert!(validate_rules(&g.formula, Some(g.ratio)).is_ok());
        assert_eq!(count_solutions(&g.formula).unwrap().count, 1);
        rejections += g.rejection_count;
    }
    let rate = count as f64 / (count + rejections) as f64;
    println!("n=12 USA acceptance rate: {rate:.4} ({count} accepted, {rejections} rejected)");
    assert!(rate > 0.0 && rate <= 1.0);
}

#[test]
fn targets_other_than_one() {
    for target in [0usize, 2, 3] {
        for seed in 0..5 {
            let g = generate(&GenConfig::new(10, seed).with_target(target)).unwrap();
            assert_eq!(g.n_s(), Some(target));
            assert!(rules_hold(&g.formula, g.ratio));
        }
    }
}
