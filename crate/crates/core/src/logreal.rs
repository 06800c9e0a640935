//! Signed real numbers stored as `(sign, ln|x|)`.
//!
//! The light-cone constants reach magnitudes like `exp(1e180)`, far beyond
//! `f64`. Products, quotients and powers stay exact in this form; sums use
//! the usual log-sum-exp shift.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogReal {
    /// -1, 0 or +1.
    pub sign: i8,
    /// Natural log of the magnitude; `-inf` when `sign == 0`.
    pub ln_abs: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal { sign: 0, ln_abs: f64::NEG_INFINITY };
    pub const ONE: LogReal = LogReal { sign: 1, ln_abs: 0.0 };

    pub fn new(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogReal { sign: if x > 0.0 { 1 } else { -1 }, ln_abs: x.abs().ln() }
        }
    }

    /// Positive number `exp(ln)`.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal { sign: 1, ln_abs: ln }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    /// Linear value; overflows to `±inf` or underflows to 0 when not representable.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    /// Natural log of a positive value.
    pub fn ln(&self) -> f64 {
        debug_assert!(self.sign >= 0, "ln of a negative LogReal");
        self.ln_abs
    }

    pub fn log10(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    pub fn abs(&self) -> Self {
        LogReal { sign: self.sign.abs(), ln_abs: self.ln_abs }
    }

    /// `|x|^p`, keeping the sign only for integer `p` of odd parity.
    pub fn powf(&self, p: f64) -> Self {
        if self.sign == 0 {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if self.sign < 0 && p.fract() == 0.0 && (p as i64) % 2 != 0 { -1 } else { 1 };
        LogReal { sign, ln_abs: self.ln_abs * p }
    }

    pub fn recip(&self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        LogReal { sign: self.sign, ln_abs: -self.ln_abs }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl From<f64> for LogReal {
    fn from(x: f64) -> Self {
        LogReal::new(x)
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 || rhs.sign == 0 {
            return LogReal::ZERO;
        }
        LogReal { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }
}

impl Mul<f64> for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: f64) -> LogReal {
        self * LogReal::new(rhs)
    }
}

impl Div for LogReal {
    type Output = LogReal;
    fn div(self, rhs: LogReal) -> LogReal {
        self * rhs.recip()
    }
}

impl Div<f64> for LogReal {
    type Output = LogReal;
    fn div(self, rhs: f64) -> LogReal {
        self / LogReal::new(rhs)
    }
}

impl Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal { sign: -self.sign, ln_abs: self.ln_abs }
    }
}

impl Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln_abs >= rhs.ln_abs { (self, rhs) } else { (rhs, self) };
        let d = small.ln_abs - big.ln_abs;
        if big.sign == small.sign {
            LogReal { sign: big.sign, ln_abs: big.ln_abs + d.exp().ln_1p() }
        } else if d == 0.0 {
            LogReal::ZERO
        } else {
            LogReal { sign: big.sign, ln_abs: big.ln_abs + (-d.exp()).ln_1p() }
        }
    }
}

impl Add<f64> for LogReal {
    type Output = LogReal;
    fn add(self, rhs: f64) -> LogReal {
        self + LogReal::new(rhs)
    }
}

impl Sub for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: LogReal) -> LogReal {
        self + (-rhs)
    }
}

impl Sub<f64> for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: f64) -> LogReal {
        self - LogReal::new(rhs)
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln_abs.partial_cmp(&other.ln_abs),
                _ => other.ln_abs.partial_cmp(&self.ln_abs),
            },
            o => Some(o),
        }
    }
}

impl std::fmt::Display for LogReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.sign == 0 {
            return write!(f, "0");
        }
        let v = self.to_f64();
        if v.is_finite() && v != 0.0 {
            write!(f, "{v:e}")
        } else {
            let s = if self.sign < 0 { "-" } else { "" };
            write!(f, "{s}exp({:e})", self.ln_abs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn huge_products_stay_finite() {
        let a = LogReal::from_ln(1e200);
        let b = a * a;
        assert_eq!(b.ln(), 2e200);
        assert!((b / a).ln() == 1e200);
    }

    #[test]
    fn cancellation_gives_zero() {
        let a = LogReal::new(3.5);
        assert!((a - a).is_zero());
    }

    proptest! {
        #[test]
        fn arithmetic_matches_f64(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let (a, b) = (LogReal::new(x), LogReal::new(y));
            let tol = 1e-9 * (x.abs() + y.abs() + 1.0);
            prop_assert!(((a + b).to_f64() - (x + y)).abs() <= tol);
            prop_assert!(((a - b).to_f64() - (x - y)).abs() <= tol);
            prop_assert!(((a * b).to_f64() - x * y).abs() <= 1e-9 * (x * y).abs().max(1e-300));
            prop_assert_eq!(a.partial_cmp(&b), x.partial_cmp(&y));
        }
    }
}
