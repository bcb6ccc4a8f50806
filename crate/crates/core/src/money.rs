//! Exact money arithmetic.
//!
//! Dollar amounts are integer cents ([`Money`]); computed fees live on a
//! micro-dollar grid ([`FeeAmount`]) so that marginal-tier arithmetic such as
//! 25(0.05) + 25(0.025) + 0.55 = 2.425 is reproduced without rounding drift.
//! Rounding to whole cents happens only at explicit presentation boundaries,
//! half-up.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

const MICROS_PER_CENT: u64 = 10_000;
const MICROS_PER_DOLLAR: u64 = 1_000_000;

/// A non-negative dollar amount in exact US cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money {
    cents: u64,
}

impl Money {
    pub const ZERO: Money = Money { cents: 0 };
    pub const CENT: Money = Money { cents: 1 };

    pub const fn from_cents(cents: u64) -> Money {
        Money { cents }
    }

    pub const fn cents(self) -> u64 {
        self.cents
    }

    pub fn to_dollars(self) -> f64 {
        self.cents as f64 / 100.0
    }

    pub fn saturating_sub(self, other: Money) -> Money {
        Money::from_cents(self.cents.saturating_sub(other.cents))
    }
}

impl FromStr for Money {
    type Err = Error;

    /// Parses `"15"`, `"15.5"`, `"15.00"`, or `"$15.00"` to exact cents.
    /// More than two decimals is rejected rather than rounded.
    fn from_str(s: &str) -> Result<Self, Error> {
        let raw = s.trim().strip_prefix('$').unwrap_or(s.trim());
        if raw.is_empty() {
            return Err(Error::invalid("empty dollar amount"));
        }
        if raw.starts_with('-') {
            return Err(Error::invalid(format!("negative dollar amount '{s}'")));
        }
        let (whole, frac) = match raw.split_once('.') {
            Some((w, f)) => (w, f),
            None => (raw, ""),
        };
        if frac.len() > 2 {
            return Err(Error::invalid(format!(
                "dollar amount '{s}' has more than two decimals"
            )));
        }
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole
                .parse()
                .map_err(|_| Error::invalid(format!("malformed dollar amount '{s}'")))?
        };
        let mut frac_buf = [b'0'; 2];
        for (i, b) in frac.bytes().enumerate() {
            if !b.is_ascii_digit() {
                return Err(Error::invalid(format!("malformed dollar amount '{s}'")));
            }
            frac_buf[i] = b;
        }
        let frac_cents = (frac_buf[0] - b'0') as u64 * 10 + (frac_buf[1] - b'0') as u64;
        whole
            .checked_mul(100)
            .and_then(|c| c.checked_add(frac_cents))
            .map(Money::from_cents)
            .ok_or_else(|| Error::invalid(format!("dollar amount '{s}' overflows")))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.cents / 100, self.cents % 100)
    }
}

/// An exact computed fee in micro-dollars (1e-6 dollars).
///
/// Micro-dollar resolution carries every value produced by the built-in
/// schedules exactly; a rate with more than four decimal places can force a
/// half-up rounding at this grain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct FeeAmount {
    micros: u64,
}

impl FeeAmount {
    pub const ZERO: FeeAmount = FeeAmount { micros: 0 };

    pub const fn from_micros(micros: u64) -> FeeAmount {
        FeeAmount { micros }
    }

    pub const fn micros(self) -> u64 {
        self.micros
    }

    pub fn to_dollars(self) -> f64 {
        self.micros as f64 / MICROS_PER_DOLLAR as f64
    }

    /// Half-up rounding to whole cents, for presentation.
    pub fn round_to_cents(self) -> Money {
        Money::from_cents((self.micros + MICROS_PER_CENT / 2) / MICROS_PER_CENT)
    }
}

impl From<Money> for FeeAmount {
    fn from(m: Money) -> FeeAmount {
        FeeAmount::from_micros(m.cents() * MICROS_PER_CENT)
    }
}

impl std::ops::Add for FeeAmount {
    type Output = FeeAmount;

    fn add(self, rhs: FeeAmount) -> FeeAmount {
        FeeAmount::from_micros(self.micros + rhs.micros)
    }
}

impl FeeAmount {
    /// Signed difference in micro-dollars.
    pub fn signed_diff(self, other: FeeAmount) -> i64 {
        self.micros as i64 - other.micros as i64
    }
}

impl fmt::Display for FeeAmount {
    /// Plain decimal dollars, at least two and up to six decimals, trailing
    /// zeros beyond the cent trimmed: `2.425`, `0.35`, `3.30`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dollars = self.micros / MICROS_PER_DOLLAR;
        let mut frac = self.micros % MICROS_PER_DOLLAR;
        let mut digits = [0u8; 6];
        for i in (0..6).rev() {
            digits[i] = (frac % 10) as u8;
            frac /= 10;
        }
        let mut keep = 6;
        while keep > 2 && digits[keep - 1] == 0 {
            keep -= 1;
        }
        write!(f, "{dollars}.")?;
        for d in &digits[..keep] {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// An ad-valorem rate stored exactly in parts per million.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatePpm {
    ppm: u32,
}

impl RatePpm {
    pub const ZERO: RatePpm = RatePpm { ppm: 0 };

    pub fn from_ppm(ppm: u32) -> Result<RatePpm, Error> {
        if ppm > 1_000_000 {
            return Err(Error::invalid(format!(
                "rate {ppm} ppm exceeds 100 percent"
            )));
        }
        Ok(RatePpm { ppm })
    }

    pub const fn ppm(self) -> u32 {
        self.ppm
    }

    pub fn as_fraction(self) -> f64 {
        self.ppm as f64 / 1e6
    }

    /// Fee on a slice of value, exact in micro-dollars where the rate has at
    /// most four decimals; otherwise rounded half-up at the micro grain.
    pub fn fee_on(self, slice: Money) -> FeeAmount {
        let raw = slice.cents() as u128 * self.ppm as u128;
        FeeAmount::from_micros(((raw + 50) / 100) as u64)
    }
}

impl FromStr for RatePpm {
    type Err = Error;

    /// Parses a decimal fraction in [0, 1] with at most six decimals, e.g.
    /// `"0.05"` -> 50000 ppm. Exact: no float round trip.
    fn from_str(s: &str) -> Result<Self, Error> {
        let raw = s.trim();
        let (whole, frac) = match raw.split_once('.') {
            Some((w, f)) => (w, f),
            None => (raw, ""),
        };
        if frac.len() > 6 {
            return Err(Error::invalid(format!(
                "rate '{s}' has more than six decimals"
            )));
        }
        let whole: u32 = if whole.is_empty() {
            0
        } else {
            whole
                .parse()
                .map_err(|_| Error::invalid(format!("malformed rate '{s}'")))?
        };
        if whole > 1 {
            return Err(Error::invalid(format!("rate '{s}' exceeds 100 percent")));
        }
        let mut ppm = 0u32;
        for (i, b) in frac.bytes().enumerate() {
            if !b.is_ascii_digit() {
                return Err(Error::invalid(format!("malformed rate '{s}'")));
            }
            ppm += (b - b'0') as u32 * 10u32.pow(5 - i as u32);
        }
        RatePpm::from_ppm(whole * 1_000_000 + ppm)
    }
}

impl fmt::Display for RatePpm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // shortest decimal form: 50000 ppm -> 0.05
        let mut ppm = self.ppm;
        if ppm == 0 {
            return write!(f, "0");
        }
        if ppm == 1_000_000 {
            return write!(f, "1");
        }
        let mut digits = 6;
        while digits > 1 && ppm.is_multiple_of(10) {
            ppm /= 10;
            digits -= 1;
        }
        write!(f, "0.{ppm:0width$}", width = digits)
    }
}
