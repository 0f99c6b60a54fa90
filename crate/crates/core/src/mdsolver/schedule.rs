//! θ schedules and clause-check orderings.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::MdError;
use crate::qstate::Theta;
use crate::rng;

/// θ as a function of the cycle counter `c ∈ [0, c_Q]`.
///
/// Cycle 0 is the initial `|+⟩` register; clause-check cycle `c ≥ 1` runs at
/// `θ(c)`, so the cubic and linear forms finish their last cycle at their
/// end angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThetaSchedule {
    Fixed { theta: f64 },
    /// `θ_init + (π/2 − θ_init)(c/c_Q)³`.
    Cubic { theta_init: f64 },
    Linear { theta_start: f64, theta_end: f64 },
}

impl ThetaSchedule {
    pub fn validate(&self) -> Result<(), MdError> {
        let angles: &[f64] = match self {
            ThetaSchedule::Fixed { theta } => &[*theta],
            ThetaSchedule::Cubic { theta_init } => &[*theta_init],
            ThetaSchedule::Linear { theta_start, theta_end } => &[*theta_start, *theta_end],
        };
        for &a in angles {
            Theta::new(a)?;
        }
        Ok(())
    }

    pub fn theta_at(&self, c: usize, c_q: usize) -> Result<Theta, MdError> {
        if c > c_q || c_q == 0 {
            return Err(MdError::CycleRange { c, c_q });
        }
        let x = c as f64 / c_q as f64;
        let t = match *self {
            ThetaSchedule::Fixed { theta } => theta,
            ThetaSchedule::Cubic { theta_init } => {
                if c == c_q {
                    FRAC_PI_2
                } else {
                    theta_init + (FRAC_PI_2 - theta_init) * x * x * x
                }
            }
            ThetaSchedule::Linear { theta_start, theta_end } => {
                if c == c_q {
                    theta_end
                } else {
                    theta_start + (theta_end - theta_start) * x
                }
            }
        };
        Ok(Theta::new(t)?)
    }

    pub fn final_theta(&self) -> f64 {
        match *self {
            ThetaSchedule::Fixed { theta } => theta,
            ThetaSchedule::Cubic { .. } => FRAC_PI_2,
            ThetaSchedule::Linear { theta_end, .. } => theta_end,
        }
    }
}

/// Parses an angle such as `0.6`, `pi/2`, `0.7pi/2` or `0.7*pi/2`.
pub fn parse_angle(s: &str) -> Result<f64, MdError> {
    let s = s.trim().to_ascii_lowercase().replace('*', "");
    let bad = || MdError::Parse(format!("bad angle {s:?}"));
    let (coef, rest) = match s.find("pi") {
        Some(i) => (&s[..i], Some(&s[i + 2..])),
        None => (s.as_str(), None),
    };
    let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
    let value = match rest {
        None => coef,
        Some("") => coef * std::f64::consts::PI,
        Some(r) => {
            let d = r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
            coef * std::f64::consts::PI / d
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// A schedule together with its cycle count, written
/// `fixed:θ,c_Q`, `cubic:θ_init,c_Q` or `linear:θ_start,θ_end,c_Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub schedule: ThetaSchedule,
    pub c_q: usize,
}

impl FromStr for ScheduleSpec {
    type Err = MdError;

    fn from_str(s: &str) -> Result<Self, MdError> {
        let (kind, args) = s.split_once(':').ok_or_else(|| MdError::Parse(format!("expected kind:args in {s:?}")))?;
        let parts: Vec<&str> = args.split(',').collect();
        let c_q = |p: &str| p.trim().parse::<usize>().map_err(|_| MdError::Parse(format!("bad cycle count {p:?}")));
        let spec = match (kind.trim(), parts.as_slice()) {
            ("fixed", [t, c]) => ScheduleSpec { schedule: ThetaSchedule::Fixed { theta: parse_angle(t)? }, c_q: c_q(c)? },
            ("cubic", [t, c]) => ScheduleSpec { schedule: ThetaSchedule::Cubic { theta_init: parse_angle(t)? }, c_q: c_q(c)? },
            ("linear", [a, b, c]) => ScheduleSpec {
                schedule: ThetaSchedule::Linear { theta_start: parse_angle(a)?, theta_end: parse_angle(b)? },
                c_q: c_q(c)?,
            },
            _ => return Err(MdError::Parse(format!("unknown schedule {s:?}"))),
        };
        spec.schedule.validate()?;
        if spec.c_q == 0 {
            return Err(MdError::Parse("c_Q must be at least 1".into()));
        }
        Ok(spec)
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.schedule {
            ThetaSchedule::Fixed { theta } => write!(f, "fixed:{theta},{}", self.c_q),
            ThetaSchedule::Cubic { theta_init } => write!(f, "cubic:{theta_init},{}", self.c_q),
            ThetaSchedule::Linear { theta_start, theta_end } => {
                write!(f, "linear:{theta_start},{theta_end},{}", self.c_q)
            }
        }
    }
}

/// Initial angle of the evolving schedule for `n` variables: `0.7·π/2` at
/// `n = 20` and `0.54·π/2` at `n = 30`, linear in between and extrapolated,
/// clamped to `[0.3, 0.9]·π/2`.
pub fn default_theta_init(n: usize) -> f64 {
    let frac = 0.7 + (0.54 - 0.7) * (n as f64 - 20.0) / 10.0;
    frac.clamp(0.3, 0.9) * FRAC_PI_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckOrderPolicy {
    /// Formula order in every cycle.
    Sequential,
    /// A fresh uniform permutation per cycle.
    ShuffledPerCycle { seed: u64 },
    /// `m` independent uniform clause picks per cycle.
    IidUniform { seed: u64 },
}

impl CheckOrderPolicy {
    /// Clause indices checked in cycle `c` (1-based) of a formula with `m`
    /// clauses. A fixed function of the policy, so every restart replays the
    /// same sequence.
    pub fn cycle_order(&self, m: usize, c: usize) -> Vec<usize> {
        match *self {
            CheckOrderPolicy::Sequential => (0..m).collect(),
            CheckOrderPolicy::ShuffledPerCycle { seed } => {
                let mut v: Vec<usize> = (0..m).collect();
                v.shuffle(&mut rng::stream(seed, c as u64));
                v
            }
            CheckOrderPolicy::IidUniform { seed } => {
                let mut r = rng::stream(seed, c as u64);
                (0..m).map(|_| r.random_range(0..m)).collect()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckOrderPolicy::Sequential => "sequential",
            CheckOrderPolicy::ShuffledPerCycle { .. } => "shuffled",
            CheckOrderPolicy::IidUniform { .. } => "iid",
        }
    }

    /// `sequential`, `shuffled` or `iid`, the latter two seeded by `seed`.
    pub fn parse(s: &str, seed: u64) -> Result<Self, MdError> {
        match s {
            "sequential" => Ok(CheckOrderPolicy::Sequential),
            "shuffled" | "shuffled-per-cycle" => Ok(CheckOrderPolicy::ShuffledPerCycle { seed }),
            "iid" | "iid-uniform" => Ok(CheckOrderPolicy::IidUniform { seed }),
            _ => Err(MdError::Parse(format!("unknown order {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_points() {
        let s = ThetaSchedule::Cubic { theta_init: 0.5 };
        assert_eq!(s.theta_at(0, 40).unwrap().value(), 0.5);
        assert_eq!(s.theta_at(40, 40).unwrap().value(), FRAC_PI_2);
        let mid = s.theta_at(20, 40).unwrap().value();
        assert!((mid - (0.5 + (FRAC_PI_2 - 0.5) / 8.0)).abs() < 1e-15);
        assert!(matches!(s.theta_at(41, 40), Err(MdError::CycleRange { .. })));
    }

    #[test]
    fn linear_and_fixed() {
        let s = ThetaSchedule::Linear { theta_start: 0.0, theta_end: FRAC_PI_2 };
        assert_eq!(s.theta_at(0, 4).unwrap().value(), 0.0);
        assert!((s.theta_at(1, 4).unwrap().value() - FRAC_PI_2 / 4.0).abs() < 1e-15);
        assert_eq!(s.theta_at(4, 4).unwrap().value(), FRAC_PI_2);
        let f = ThetaSchedule::Fixed { theta: 0.3 };
        assert_eq!(f.theta_at(7, 9).unwrap().value(), 0.3);
    }

    #[test]
    fn parsing() {
        assert!((parse_angle("pi/2").unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((parse_angle("0.7pi/2").unwrap() - 0.7 * FRAC_PI_2).abs() < 1e-15);
        assert!((parse_angle("0.7*pi/2").unwrap() - 0.7 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("abc").is_err());
        let s: ScheduleSpec = "cubic:0.7pi/2,40".parse().unwrap();
        assert_eq!(s.c_q, 40);
        let s2: ScheduleSpec = s.to_string().parse().unwrap();
        assert_eq!(s, s2);
        assert!("linear:0,pi/2,92".parse::<ScheduleSpec>().is_ok());
        assert!("fixed:2.0,10".parse::<ScheduleSpec>().is_err());
        assert!("cubic:0.5,0".parse::<ScheduleSpec>().is_err());
        assert!("wavy:0.5,3".parse::<ScheduleSpec>().is_err());
    }

    #[test]
    fn theta_init_endpoints() {
        assert!((default_theta_init(20) - 0.7 * FRAC_PI_2).abs() < 1e-15);
        assert!((default_theta_init(30) - 0.54 * FRAC_PI_2).abs() < 1e-12);
        assert!(default_theta_init(12) > default_theta_init(20));
    }

    #[test]
    fn orders_are_reproducible() {
        let p = CheckOrderPolicy::ShuffledPerCycle { seed: 3 };
        assert_eq!(p.cycle_order(20, 2), p.cycle_order(20, 2));
        assert_ne!(p.cycle_order(20, 1), p.cycle_order(20, 2));
        let mut v = p.cycle_order(20, 5);
        v.sort();
        assert_eq!(v, (0..20).collect::<Vec<_>>());
        let q = CheckOrderPolicy::IidUniform { seed: 3 };
        assert!(q.cycle_order(20, 1).iter().all(|&i| i < 20));
        assert_eq!(CheckOrderPolicy::Sequential.cycle_order(3, 9), vec![0, 1, 2]);
    }
}
