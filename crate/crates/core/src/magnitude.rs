//! Non-negative reals that may exceed the `f64` range.
//!
//! Some regret-bound constants contain terms like `e^{4 alpha / L}` that
//! overflow `f64` for realistic parameters (scenario S gives `e^{801.9}`).
//! Values stay exact `f64` while representable and switch to a natural-log
//! representation once they are not.

use std::cmp::Ordering;
use std::fmt;

/// Values at or above this are stored as logarithms.
const LOG_SWITCH: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    Exact(f64),
    /// Natural logarithm of the value.
    Log(f64),
}

impl Magnitude {
    pub const ZERO: Magnitude = Magnitude::Exact(0.0);

    pub fn new(x: f64) -> Self {
        assert!(x >= 0.0 && !x.is_nan(), "magnitude must be non-negative, got {x}");
        if x < LOG_SWITCH {
            Magnitude::Exact(x)
        } else {
            Magnitude::Log(x.ln())
        }
    }

    pub fn from_ln(ln: f64) -> Self {
        if ln < LOG_SWITCH.ln() {
            Magnitude::Exact(ln.exp())
        } else {
            Magnitude::Log(ln)
        }
    }

    pub fn ln(self) -> f64 {
        match self {
            Magnitude::Exact(x) => x.ln(),
            Magnitude::Log(l) => l,
        }
    }

    pub fn log10(self) -> f64 {
        self.ln() / std::f64::consts::LN_10
    }

    /// The value as `f64`; `inf` when out of range.
    pub fn to_f64(self) -> f64 {
        match self {
            Magnitude::Exact(x) => x,
            Magnitude::Log(_) => f64::INFINITY,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Magnitude::Exact(_))
    }

    pub fn add(self, other: Magnitude) -> Magnitude {
        match (self, other) {
            (Magnitude::Exact(a), Magnitude::Exact(b)) => Magnitude::new(a + b),
            _ => {
                let (a, b) = (self.ln(), other.ln());
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                Magnitude::from_ln(hi + (lo - hi).exp().ln_1p())
            }
        }
    }

    pub fn mul(self, other: Magnitude) -> Magnitude {
        match (self, other) {
            (Magnitude::Exact(a), Magnitude::Exact(b)) if (a * b) < LOG_SWITCH => Magnitude::Exact(a * b),
            (Magnitude::Exact(a), _) | (_, Magnitude::Exact(a)) if a == 0.0 => Magnitude::ZERO,
            _ => Magnitude::from_ln(self.ln() + other.ln()),
        }
    }

    pub fn scale(self, factor: f64) -> Magnitude {
        self.mul(Magnitude::new(factor))
    }

    pub fn add_f64(self, x: f64) -> Magnitude {
        self.add(Magnitude::new(x))
    }

    /// Ceiling; identity in the log regime, where the integer part is not representable.
    pub fn ceil(self) -> Magnitude {
        match self {
            Magnitude::Exact(x) => Magnitude::Exact(x.ceil()),
            log => log,
        }
    }

    pub fn max(self, other: Magnitude) -> Magnitude {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Magnitude::Exact(a), Magnitude::Exact(b)) => a.partial_cmp(b),
            _ => self.ln().partial_cmp(&other.ln()),
        }
    }
}

impl From<f64> for Magnitude {
    fn from(x: f64) -> Self {
        Magnitude::new(x)
    }
}

impl fmt::Display for Magnitude {
    /// Exact values print as plain `f64`; log-regime values as `m.mmmmmme+E`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Magnitude::Exact(x) => write!(f, "{x}"),
            Magnitude::Log(_) => {
                let l10 = self.log10();
                let mut exp = l10.floor();
                let mut mantissa = (10f64.powf(l10 - exp) * 1e6).round() / 1e6;
                if mantissa >= 10.0 {
                    mantissa /= 10.0;
                    exp += 1.0;
                }
                write!(f, "{mantissa:.6}e+{}", exp as i64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = Magnitude::new(421.0);
        assert_eq!(a.add_f64(1.0), Magnitude::Exact(422.0));
        assert_eq!(a.ceil(), Magnitude::Exact(421.0));
        assert_eq!(Magnitude::new(2.5).mul(Magnitude::new(4.0)), Magnitude::Exact(10.0));
    }

    #[test]
    fn overflow_goes_to_log() {
        let big = Magnitude::from_ln(801.9);
        assert!(!big.is_exact());
        assert!(big > Magnitude::new(1e299));
        let sum = big.add_f64(421.0);
        assert_eq!(sum.ln(), 801.9);
        let prod = big.scale(4.0);
        assert!((prod.ln() - (801.9 + 4f64.ln())).abs() < 1e-12);
        assert_eq!(prod.to_f64(), f64::INFINITY);
        assert_eq!(
            format!("{}", Magnitude::from_ln(1000.0 * std::f64::consts::LN_10)),
            "1.000000e+1000"
        );
        assert_eq!(big.mul(Magnitude::ZERO), Magnitude::ZERO);
    }
}
