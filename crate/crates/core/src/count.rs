//! Positive quantities that may be astronomically large, such as the number
//! of environment fragments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive real held as `mantissa · 10^exponent`, with `1 ≤ mantissa < 10`.
///
/// Every consumer works with [`FragmentCount::ln`], so values such as
/// `1e300` never pass through an overflowing `f64` power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragmentCount {
    mantissa: f64,
    exponent: i32,
}

impl FragmentCount {
    pub fn new(mantissa: f64, exponent: i32) -> Result<Self> {
        if !(mantissa.is_finite() && mantissa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fragment count mantissa must be positive and finite, got {mantissa}"
            )));
        }
        let shift = mantissa.log10().floor() as i32;
        let mut m = mantissa / 10f64.powi(shift);
        let mut e = exponent
            .checked_add(shift)
            .ok_or_else(|| Error::InvalidParameter("exponent overflow".into()))?;
        // guard against 9.999.. / 10.0 rounding
        if m >= 10.0 {
            m /= 10.0;
            e += 1;
        } else if m < 1.0 {
            m *= 10.0;
            e -= 1;
        }
        Ok(Self { mantissa: m, exponent: e })
    }

    pub fn from_f64(value: f64) -> Result<Self> {
        Self::new(value, 0)
    }

    pub fn pow10(exponent: i32) -> Self {
        Self { mantissa: 1.0, exponent }
    }

    /// `10^log10`, splitting the exponent into its integer and fractional part.
    pub fn from_log10(log10: f64) -> Result<Self> {
        if !log10.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite log10 {log10}")));
        }
        let e = log10.floor();
        Self::new(10f64.powf(log10 - e), e as i32)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + f64::from(self.exponent) * std::f64::consts::LN_10
    }

    pub fn log10(&self) -> f64 {
        self.mantissa.log10() + f64::from(self.exponent)
    }

    /// Plain `f64` value; `inf` above the `f64` range.
    pub fn to_f64(&self) -> f64 {
        self.mantissa * 10f64.powi(self.exponent)
    }
}

impl fmt::Display for FragmentCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mantissa == 1.0 {
            write!(f, "1e{}", self.exponent)
        } else {
            write!(f, "{}e{}", self.mantissa, self.exponent)
        }
    }
}

impl FromStr for FragmentCount {
    type Err = Error;

    /// Parses decimal or scientific notation (`1000`, `2.5e29`, `1E60`)
    /// without ever forming the full `f64` value.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse fragment count '{s}'"));
        let (mant, exp) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let mantissa: f64 = mant.parse().map_err(|_| bad())?;
        Self::new(mantissa, exp).map_err(|_| bad())
    }
}
