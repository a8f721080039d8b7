//! Step-duration schedules `B_1, B_2, ...` (1-based).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("step durations must be positive (B_{index} = 0)")]
    ZeroDuration { index: u64 },
    #[error("schedule decreases at step {index}: B_{index} = {current} > B_{next_index} = {next}", next_index = index + 1)]
    Decreasing { index: u64, current: u64, next: u64 },
    #[error("arithmetic schedule needs start >= 1")]
    BadArithmetic,
}

/// Non-decreasing sequence of positive step lengths, in slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `B_i = value` for all i.
    Constant { value: u64 },
    /// `B_i = ceil(ln(i + 1)) + 1`.
    Logarithmic,
    /// `B_i = start + (i - 1) * increment`.
    Arithmetic { start: u64, increment: u64 },
    /// Explicit prefix `B_1..B_m`, then `tail` evaluated at the same global index.
    Custom { prefix: Vec<u64>, tail: Box<StepSchedule> },
}

impl StepSchedule {
    pub fn constant(value: u64) -> Self {
        StepSchedule::Constant { value }
    }

    pub fn custom(prefix: Vec<u64>, tail: StepSchedule) -> Self {
        StepSchedule::Custom {
            prefix,
            tail: Box::new(tail),
        }
    }

    /// `B_i`, for `i >= 1`.
    pub fn block(&self, i: u64) -> u64 {
        debug_assert!(i >= 1);
        match self {
            StepSchedule::Constant { value } => *value,
            StepSchedule::Logarithmic => ((i as f64 + 1.0).ln().ceil() as u64) + 1,
            StepSchedule::Arithmetic { start, increment } => start + (i - 1) * increment,
            StepSchedule::Custom { prefix, tail } => match prefix.get((i - 1) as usize) {
                Some(&b) => b,
                None => tail.block(i),
            },
        }
    }

    /// Whether `B_i -> infinity`.
    pub fn is_divergent(&self) -> bool {
        match self {
            StepSchedule::Constant { .. } => false,
            StepSchedule::Logarithmic => true,
            StepSchedule::Arithmetic { increment, .. } => *increment > 0,
            StepSchedule::Custom { tail, .. } => tail.is_divergent(),
        }
    }

    /// Index after which the schedule is a constant, if it ever becomes one.
    pub fn constant_from(&self) -> Option<u64> {
        match self {
            StepSchedule::Constant { .. } => Some(1),
            StepSchedule::Arithmetic { increment: 0, .. } => Some(1),
            StepSchedule::Logarithmic | StepSchedule::Arithmetic { .. } => None,
            StepSchedule::Custom { prefix, tail } => tail.constant_from().map(|k| k.max(prefix.len() as u64 + 1)),
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        match self {
            StepSchedule::Constant { value: 0 } => Err(ScheduleError::ZeroDuration { index: 1 }),
            StepSchedule::Constant { .. } | StepSchedule::Logarithmic => Ok(()),
            StepSchedule::Arithmetic { start, .. } => {
                if *start == 0 {
                    Err(ScheduleError::BadArithmetic)
                } else {
                    Ok(())
                }
            }
            StepSchedule::Custom { prefix, tail } => {
                tail.validate()?;
                let m = prefix.len() as u64;
                // Checking through the junction with the tail suffices: the tail is monotone.
                for i in 1..=m {
                    let (cur, next) = (self.block(i), self.block(i + 1));
                    if cur == 0 {
                        return Err(ScheduleError::ZeroDuration { index: i });
                    }
                    if next < cur {
                        return Err(ScheduleError::Decreasing {
                            index: i,
                            current: cur,
                            next,
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// `sum_{i=1}^{count} B_i`.
    pub fn cumulative(&self, count: u64) -> u64 {
        match self {
            StepSchedule::Constant { value } => value * count,
            _ => (1..=count).map(|i| self.block(i)).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logarithmic_values() {
        let s = StepSchedule::Logarithmic;
        assert_eq!(s.block(1), 2); // ceil(ln 2) + 1
        assert_eq!(s.block(2), 3); // ceil(ln 3) + 1
        assert!(s.is_divergent());
        assert!(s.validate().is_ok());
    }

    #[test]
    fn custom_prefix_then_tail() {
        let s = StepSchedule::custom(vec![10, 20, 30], StepSchedule::constant(50));
        assert_eq!(
            (1..=5).map(|i| s.block(i)).collect::<Vec<_>>(),
            vec![10, 20, 30, 50, 50]
        );
        assert_eq!(s.constant_from(), Some(4));
        assert!(!s.is_divergent());
        assert!(s.validate().is_ok());
    }

    #[test]
    fn decreasing_prefix_rejected() {
        let s = StepSchedule::custom(vec![10, 5], StepSchedule::constant(50));
        assert!(matches!(s.validate(), Err(ScheduleError::Decreasing { index: 1, .. })));
        let s = StepSchedule::custom(vec![10, 60], StepSchedule::constant(50));
        assert!(matches!(s.validate(), Err(ScheduleError::Decreasing { index: 2, .. })));
        assert_eq!(
            StepSchedule::constant(0).validate(),
            Err(ScheduleError::ZeroDuration { index: 1 })
        );
    }

    #[test]
    fn serde_shape() {
        let s: StepSchedule = toml::from_str("kind = \"constant\"\nvalue = 49\n").unwrap();
        assert_eq!(s, StepSchedule::constant(49));
    }
}
