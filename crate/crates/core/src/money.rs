//! Integer money. All prices and bills are carried as micro-dollars so that
//! accounting identities hold exactly.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An amount of US dollars in millionths. Used both for totals and for
/// hourly rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Micros(pub i64);

pub const MICROS_PER_DOLLAR: i64 = 1_000_000;

/// Minimum bid increment `G`: 0.001 USD/hour.
pub const BID_GRANULARITY: Micros = Micros(1_000);

impl Micros {
    pub const ZERO: Micros = Micros(0);

    pub fn from_dollars(dollars: f64) -> Self {
        Micros((dollars * MICROS_PER_DOLLAR as f64).round() as i64)
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / MICROS_PER_DOLLAR as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0 - rhs.0)
    }
}

impl Mul<i64> for Micros {
    type Output = Micros;
    fn mul(self, rhs: i64) -> Micros {
        Micros(self.0 * rhs)
    }
}

impl Sum for Micros {
    fn sum<I: Iterator<Item = Micros>>(iter: I) -> Micros {
        Micros(iter.map(|m| m.0).sum())
    }
}

/// Prints at least three fraction digits, more only when needed.
impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / MICROS_PER_DOLLAR as u64;
        let frac = abs % MICROS_PER_DOLLAR as u64;
        if frac.is_multiple_of(1000) {
            write!(f, "{sign}{whole}.{:03}", frac / 1000)
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

/// Exact decimal parsing; rejects more precision than one micro-dollar.
impl FromStr for Micros {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(format!("`{s}` is not a decimal amount"));
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("`{s}` is not a decimal amount"));
        }
        if frac.len() > 6 {
            return Err(format!("`{s}` has more than 6 fraction digits"));
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| format!("`{s}` is out of range"))?
        };
        let frac_val: i64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().expect("six ascii digits")
        };
        let total = whole
            .checked_mul(MICROS_PER_DOLLAR)
            .and_then(|w| w.checked_add(frac_val))
            .ok_or_else(|| format!("`{s}` is out of range"))?;
        Ok(Micros(if neg { -total } else { total }))
    }
}
