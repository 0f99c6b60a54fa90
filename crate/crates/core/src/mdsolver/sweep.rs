//! Linear sweeps of θ from 0 to π/2 at different speeds.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{expected_checks, failure_distribution, run_deterministic, CheckOrderPolicy, MdError, ThetaSchedule};
use crate::sat::Formula;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Number of cycles (θ increments) in the sweep.
    pub increments: usize,
    pub success_prob: f64,
    /// `None` when the success probability is zero.
    pub expected_checks: Option<f64>,
    /// Probability that an attempt fails during each cycle `1..=increments`.
    pub fail_by_cycle: Vec<f64>,
    /// Cycle with the largest failure probability.
    pub peak_fail_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Success probability strictly increases with the increment count.
    pub success_monotone: bool,
    /// Increment count with the lowest expected checks.
    pub best_increments: Option<usize>,
    /// The best increment count is neither the fastest nor the slowest
    /// sweep tried.
    pub interior_optimum: bool,
}

/// Runs `linear:0,π/2,k` for every `k` in `increments` (sorted ascending).
pub fn adiabatic_sweep_experiment(
    f: &Formula,
    increments: &[usize],
    order: &CheckOrderPolicy,
) -> Result<SweepReport, MdError> {
    let mut incs = increments.to_vec();
    incs.sort_unstable();
    incs.dedup();
    if incs.is_empty() || incs[0] == 0 {
        return Err(MdError::Config("increments must be positive".into()));
    }
    let sched = ThetaSchedule::Linear { theta_start: 0.0, theta_end: FRAC_PI_2 };
    let m = f.num_clauses();
    let points: Vec<SweepPoint> = incs
        .par_iter()
        .map(|&k| {
            let t = run_deterministic(f, &sched, order, k)?;
            let pf = failure_distribution(&t.q);
            let mut fail_by_cycle: Vec<f64> = pf.chunks(m).map(|c| c.iter().sum()).collect();
            fail_by_cycle.resize(k, 0.0);
            let peak_fail_cycle = fail_by_cycle
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                .0
                + 1;
            Ok(SweepPoint {
                increments: k,
                success_prob: t.success_prob,
                expected_checks: expected_checks(&t).ok(),
                fail_by_cycle,
                peak_fail_cycle,
            })
        })
        .collect::<Result<_, MdError>>()?;
    let success_monotone = points.windows(2).all(|w| w[1].success_prob > w[0].success_prob);
    let best = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.expected_checks.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let interior_optimum = best.is_some_and(|(i, _)| i > 0 && i + 1 < points.len());
    Ok(SweepReport {
        best_increments: best.map(|(i, _)| points[i].increments),
        points,
        success_monotone,
        interior_optimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_shape() {
        let g = crate::generate::generate(&crate::generate::GenConfig::usa(8, 1)).unwrap();
        let r = adiabatic_sweep_experiment(&g.formula, &[8, 2, 4], &CheckOrderPolicy::Sequential).unwrap();
        assert_eq!(r.points.iter().map(|p| p.increments).collect::<Vec<_>>(), vec![2, 4, 8]);
        for p in &r.points {
            assert_eq!(p.fail_by_cycle.len(), p.increments);
            let total: f64 = p.fail_by_cycle.iter().sum();
            assert!((total + p.success_prob - 1.0).abs() < 1e-12);
        }
        assert!(adiabatic_sweep_experiment(&g.formula, &[0], &CheckOrderPolicy::Sequential).is_err());
    }
}
