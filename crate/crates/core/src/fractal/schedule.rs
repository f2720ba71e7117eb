//! Exhaustions `E_1 ⊆ E_2 ⊆ ⋯` of a union of symbolic sets. Covering
//! numbers of a stage are bracketed by the largest component count below and
//! the sum of component counts above.

use crate::error::{Error, Result};
use crate::fractal::{CountBracket, DigitSet, LogSequenceSet};

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Digit(DigitSet),
    Log(LogSequenceSet),
}

impl Component {
    pub fn label(&self) -> String {
        match self {
            Component::Digit(d) => d.label().to_string(),
            Component::Log(LogSequenceSet { cutoff: Some(n) }) => format!("logset-{n}"),
            Component::Log(_) => "logset".to_string(),
        }
    }

    /// Natural logs of the bounds on `N_{2^{-n}}`.
    pub fn ln_covering(&self, n: u64) -> Result<CountBracket<f64>> {
        match self {
            Component::Digit(d) => {
                let ln = d.ln_covering(n)?;
                Ok(CountBracket::exact(ln))
            }
            Component::Log(set) => {
                let delta = 0.5f64.powi(i32::try_from(n).map_err(|_| Error::DepthExceeded { requested: n, depth: i32::MAX as u64 })?);
                let b = set.covering(delta)?;
                Ok(CountBracket { lower: (b.lower as f64).ln(), upper: (b.upper as f64).ln() })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// Digit sets stay whole; infinite log sets are cut off at `16^k` in stage `k`.
    Natural { stages: usize },
    /// Stages given explicitly, taken as nested.
    Custom(Vec<Vec<Component>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub members: Vec<Component>,
}

impl Stage {
    pub fn label(&self) -> String {
        self.members.iter().map(Component::label).collect::<Vec<_>>().join("+")
    }

    /// `[max_i N(A_i), Σ_i N(A_i)]` in logs.
    pub fn ln_covering(&self, n: u64) -> Result<CountBracket<f64>> {
        let mut lower = f64::NEG_INFINITY;
        let mut uppers = Vec::with_capacity(self.members.len());
        for c in &self.members {
            let b = c.ln_covering(n)?;
            lower = lower.max(b.lower);
            uppers.push(b.upper);
        }
        let top = uppers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let upper = if self.members.len() == 1 { top } else { top + uppers.iter().map(|u| (u - top).exp()).sum::<f64>().ln() };
        Ok(CountBracket { lower, upper })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub stages: Vec<Stage>,
}

const LOG_STAGE_LIMIT: usize = 12;

pub fn exhaustion_schedule(components: &[Component], kind: ScheduleKind) -> Result<Schedule> {
    let stages = match kind {
        ScheduleKind::Custom(stages) => stages.into_iter().map(|members| Stage { members }).collect(),
        ScheduleKind::Natural { stages } => {
            let has_tail = components.iter().any(|c| matches!(c, Component::Log(LogSequenceSet { cutoff: None })));
            if !has_tail {
                vec![Stage { members: components.to_vec() }]
            } else {
                if stages == 0 || stages > LOG_STAGE_LIMIT {
                    return Err(Error::InvalidScale(format!("natural schedules take 1..={LOG_STAGE_LIMIT} stages")));
                }
                (1..=stages)
                    .map(|k| {
                        let members = components
                            .iter()
                            .map(|c| match c {
                                Component::Log(LogSequenceSet { cutoff: None }) => LogSequenceSet::new(1u64 << (4 * k)).map(Component::Log),
                                other => Ok(other.clone()),
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(Stage { members })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        }
    };
    if stages.is_empty() || stages.iter().any(|s: &Stage| s.members.is_empty()) {
        return Err(Error::EmptySet);
    }
    Ok(Schedule { stages })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k0k1(depth: u64) -> Vec<Component> {
        vec![Component::Digit(DigitSet::k0(depth).unwrap()), Component::Digit(DigitSet::k1(depth).unwrap())]
    }

    #[test]
    fn union_oracle_on_f() {
        let sched = exhaustion_schedule(&k0k1(32), ScheduleKind::Natural { stages: 4 }).unwrap();
        assert_eq!(sched.stages.len(), 1);
        for n in [2u64, 4, 20] {
            let b = sched.stages[0].ln_covering(n).unwrap();
            let ln2 = std::f64::consts::LN_2;
            assert!((b.lower - n as f64 / 2.0 * ln2).abs() < 1e-12);
            assert!((b.upper - (n as f64 / 2.0 + 1.0) * ln2).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_is_the_sum() {
        let stage = &exhaustion_schedule(&k0k1(32), ScheduleKind::Natural { stages: 1 }).unwrap().stages[0];
        for n in 0..=32u64 {
            let k0 = DigitSet::k0(32).unwrap().covering(n).unwrap();
            let k1 = DigitSet::k1(32).unwrap().covering(n).unwrap();
            let sum = num_traits::ToPrimitive::to_f64(&(k0 + k1)).unwrap();
            assert!((stage.ln_covering(n).unwrap().upper - sum.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn natural_stages_cut_the_log_set() {
        let mut comps = k0k1(32);
        comps.push(Component::Log(LogSequenceSet::infinite()));
        let sched = exhaustion_schedule(&comps, ScheduleKind::Natural { stages: 3 }).unwrap();
        let cutoffs: Vec<_> = sched.stages.iter().map(|s| s.members[2].clone()).collect();
        assert_eq!(cutoffs, [16u64, 256, 4096].map(|n| Component::Log(LogSequenceSet::new(n).unwrap())));
        assert_eq!(sched.stages[1].label(), "k0+k1+logset-256");
    }

    #[test]
    fn single_component_is_unchanged() {
        let c = Component::Digit(DigitSet::k0(20).unwrap());
        let sched = exhaustion_schedule(std::slice::from_ref(&c), ScheduleKind::Natural { stages: 2 }).unwrap();
        for n in 0..=20 {
            assert_eq!(sched.stages[0].ln_covering(n).unwrap(), c.ln_covering(n).unwrap());
        }
        assert!(exhaustion_schedule(&[], ScheduleKind::Natural { stages: 2 }).is_err());
    }
}
