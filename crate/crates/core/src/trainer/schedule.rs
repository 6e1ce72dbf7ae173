use crate::error::{Error, Result};

/// Linear ramp from `start` to `end` over `decay_steps`, then held at `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Schedule {
    pub fn new(start: f64, end: f64, decay_steps: u64) -> Result<Self> {
        if decay_steps == 0 {
            return Err(Error::Config("schedule decay_steps must be > 0".into()));
        }
        Ok(Self {
            start,
            end,
            decay_steps,
        })
    }

    pub fn value_at(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * (step as f64 / self.decay_steps as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = Schedule::new(1.0, 0.1, 50_000).unwrap();
        assert_eq!(s.value_at(0), 1.0);
        assert_eq!(s.value_at(50_000), 0.1);
        assert_eq!(s.value_at(10_000_000), 0.1);
        assert_eq!(s.value_at(25_000), 0.55);
    }

    #[test]
    fn zero_decay_rejected() {
        assert!(Schedule::new(1.0, 0.1, 0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_nonincreasing(a in 0u64..200_000, b in 0u64..200_000, d in 1u64..100_000) {
            let s = Schedule::new(1.0, 0.1, d).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(s.value_at(lo) >= s.value_at(hi));
            prop_assert!(s.value_at(hi) >= 0.1 && s.value_at(lo) <= 1.0);
        }
    }
}
