//! Listing-fee engine: bracketed insertion fees, marginal final-value tiers,
//! total seller fees, and the effective ad-valorem premium of platform E over
//! platform Y. All arithmetic is exact (see [`crate::money`]).

use std::fmt::Write as _;
use std::str::FromStr;

use crate::config::KvFile;
use crate::error::{Error, Result};
use crate::money::{FeeAmount, Money, RatePpm};
use crate::platform::{PerPlatform, PlatformId};

/// One insertion-fee bracket: a flat fee for opening values in
/// `[lower, upper]` (both inclusive; `upper = None` means unbounded).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketFee {
    pub lower: Money,
    pub upper: Option<Money>,
    pub fee: Money,
}

impl BracketFee {
    fn contains(&self, v: Money) -> bool {
        v >= self.lower && self.upper.is_none_or(|u| v <= u)
    }
}

/// One final-value tier: `rate` applies to the slice of closing value in
/// `(lower, upper]`: marginal, not average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarginalTier {
    pub lower: Money,
    pub upper: Option<Money>,
    pub rate: RatePpm,
}

/// A platform's complete listing-fee schedule. An empty `final_value`
/// sequence means final-value fees are free.
#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule {
    pub platform: PlatformId,
    pub insertion: Vec<BracketFee>,
    pub final_value: Vec<MarginalTier>,
}

fn bracket(lower_cents: u64, upper_cents: Option<u64>, fee_cents: u64) -> BracketFee {
    BracketFee {
        lower: Money::from_cents(lower_cents),
        upper: upper_cents.map(Money::from_cents),
        fee: Money::from_cents(fee_cents),
    }
}

fn tier(lower_cents: u64, upper_cents: Option<u64>, ppm: u32) -> MarginalTier {
    MarginalTier {
        lower: Money::from_cents(lower_cents),
        upper: upper_cents.map(Money::from_cents),
        rate: RatePpm::from_ppm(ppm).expect("builtin rate"),
    }
}

impl FeeSchedule {
    /// Platform E's 2001 schedule: insertion 0.30/0.55/1.10/2.20/3.30 over
    /// 0.01-9.99 / 10.00-24.99 / 25.00-49.99 / 50.00-199.99 / 200.00+, and
    /// marginal final-value tiers 5% to 25.00, 2.5% to 1000.00, 1.25% above.
    pub fn platform_e_2001() -> FeeSchedule {
        FeeSchedule {
            platform: PlatformId::E,
            insertion: vec![
                bracket(1, Some(999), 30),
                bracket(1000, Some(2499), 55),
                bracket(2500, Some(4999), 110),
                bracket(5000, Some(19999), 220),
                bracket(20000, None, 330),
            ],
            final_value: vec![
                tier(0, Some(2500), 50_000),
                tier(2500, Some(100_000), 25_000),
                tier(100_000, None, 12_500),
            ],
        }
    }

    /// Platform Y's 2001 schedule: insertion 0.20/0.35/0.75/1.50/1.50 over the
    /// same brackets, no final-value fees.
    pub fn platform_y_2001() -> FeeSchedule {
        FeeSchedule {
            platform: PlatformId::Y,
            insertion: vec![
                bracket(1, Some(999), 20),
                bracket(1000, Some(2499), 35),
                bracket(2500, Some(4999), 75),
                bracket(5000, Some(19999), 150),
                bracket(20000, None, 150),
            ],
            final_value: vec![],
        }
    }

    /// Platform Y before it introduced fees (fall 2000): everything free.
    pub fn platform_y_fall_2000() -> FeeSchedule {
        FeeSchedule {
            platform: PlatformId::Y,
            insertion: vec![
                bracket(1, Some(999), 0),
                bracket(1000, Some(2499), 0),
                bracket(2500, Some(4999), 0),
                bracket(5000, Some(19999), 0),
                bracket(20000, None, 0),
            ],
            final_value: vec![],
        }
    }

    /// Checks bracket/tier contiguity at cent granularity.
    ///
    /// Insertion brackets must start at one cent, be disjoint and contiguous,
    /// end unbounded, and carry non-decreasing fees. Final-value tiers, when
    /// present, must start at zero, be contiguous, and end unbounded.
    pub fn validate(&self) -> Result<()> {
        if self.insertion.is_empty() {
            return Err(Error::validation(format!(
                "schedule {}: no insertion brackets",
                self.platform
            )));
        }
        if self.insertion[0].lower != Money::CENT {
            return Err(Error::validation(format!(
                "schedule {}: insertion brackets must start at 0.01",
                self.platform
            )));
        }
        let mut prev_upper: Option<Money> = None;
        let mut prev_fee = Money::ZERO;
        for (i, b) in self.insertion.iter().enumerate() {
            if let Some(pu) = prev_upper {
                if b.lower.cents() != pu.cents() + 1 {
                    return Err(Error::validation(format!(
                        "schedule {}: insertion bracket {i} starts at {} but previous ends at {}",
                        self.platform, b.lower, pu
                    )));
                }
            }
            if let Some(u) = b.upper {
                if u < b.lower {
                    return Err(Error::validation(format!(
                        "schedule {}: insertion bracket {i} has upper below lower",
                        self.platform
                    )));
                }
            } else if i + 1 != self.insertion.len() {
                return Err(Error::validation(format!(
                    "schedule {}: only the last insertion bracket may be unbounded",
                    self.platform
                )));
            }
            if i > 0 && b.fee < prev_fee {
                return Err(Error::validation(format!(
                    "schedule {}: insertion fees must be non-decreasing",
                    self.platform
                )));
            }
            prev_upper = b.upper;
            prev_fee = b.fee;
        }
        if prev_upper.is_some() {
            return Err(Error::validation(format!(
                "schedule {}: last insertion bracket must be unbounded",
                self.platform
            )));
        }
        if !self.final_value.is_empty() {
            if self.final_value[0].lower != Money::ZERO {
                return Err(Error::validation(format!(
                    "schedule {}: final-value tiers must start at 0",
                    self.platform
                )));
            }
            let mut prev_upper: Option<Money> = Some(Money::ZERO);
            for (i, t) in self.final_value.iter().enumerate() {
                if i > 0 {
                    match prev_upper {
                        Some(pu) if t.lower == pu => {}
                        _ => {
                            return Err(Error::validation(format!(
                                "schedule {}: final-value tier {i} is not contiguous",
                                self.platform
                            )))
                        }
                    }
                }
                if let Some(u) = t.upper {
                    if u <= t.lower {
                        return Err(Error::validation(format!(
                            "schedule {}: final-value tier {i} has upper at or below lower",
                            self.platform
                        )));
                    }
                } else if i + 1 != self.final_value.len() {
                    return Err(Error::validation(format!(
                        "schedule {}: only the last final-value tier may be unbounded",
                        self.platform
                    )));
                }
                prev_upper = t.upper;
            }
            if prev_upper.is_some() {
                return Err(Error::validation(format!(
                    "schedule {}: last final-value tier must be unbounded",
                    self.platform
                )));
            }
        }
        Ok(())
    }

    /// Flat fee for listing at `opening_value`.
    pub fn insertion_fee(&self, opening_value: Money) -> Result<Money> {
        if opening_value < Money::CENT {
            return Err(Error::invalid(format!(
                "opening value {opening_value} is below the 0.01 minimum"
            )));
        }
        self.insertion
            .iter()
            .find(|b| b.contains(opening_value))
            .map(|b| b.fee)
            .ok_or_else(|| {
                Error::validation(format!(
                    "schedule {}: no insertion bracket contains {opening_value}",
                    self.platform
                ))
            })
    }

    /// Marginal final-value fee on `closing_value`, exact (unrounded).
    pub fn final_value_fee(&self, closing_value: Money) -> FeeAmount {
        let mut total = FeeAmount::ZERO;
        for t in &self.final_value {
            if closing_value <= t.lower {
                break;
            }
            let top = match t.upper {
                Some(u) if u < closing_value => u,
                _ => closing_value,
            };
            let slice = top.saturating_sub(t.lower);
            total = total + t.rate.fee_on(slice);
        }
        total
    }

    /// Insertion fee plus unrounded final-value fee for a sale at
    /// `closing_value` listed at `opening_value`.
    pub fn total_fee(&self, opening_value: Money, closing_value: Money) -> Result<FeeAmount> {
        if closing_value < opening_value {
            return Err(Error::invalid(format!(
                "closing value {closing_value} is below opening value {opening_value}; \
                 the item would not have sold"
            )));
        }
        let insertion = self.insertion_fee(opening_value)?;
        Ok(FeeAmount::from(insertion) + self.final_value_fee(closing_value))
    }

    fn last_tier_rate(&self) -> f64 {
        self.final_value
            .last()
            .map_or(0.0, |t| t.rate.as_fraction())
    }
}

/// Effective ad-valorem terms of one platform at a reference sale:
/// the final-value fee expressed as a fraction of the closing value, plus the
/// flat insertion fee in dollars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeTerms {
    pub ad_valorem: f64,
    pub insertion: f64,
}

impl FeeTerms {
    pub const FREE: FeeTerms = FeeTerms {
        ad_valorem: 0.0,
        insertion: 0.0,
    };

    pub fn new(ad_valorem: f64, insertion: f64) -> Result<FeeTerms> {
        if !(0.0..1.0).contains(&ad_valorem) {
            return Err(Error::invalid(format!(
                "ad-valorem rate {ad_valorem} outside [0, 1)"
            )));
        }
        if !insertion.is_finite() {
            return Err(Error::invalid("insertion fee must be finite"));
        }
        Ok(FeeTerms {
            ad_valorem,
            insertion,
        })
    }
}

/// The two platforms' schedules side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePair {
    pub e: FeeSchedule,
    pub y: FeeSchedule,
}

impl SchedulePair {
    /// The 2001 built-in schedules.
    pub fn builtin_2001() -> SchedulePair {
        SchedulePair {
            e: FeeSchedule::platform_e_2001(),
            y: FeeSchedule::platform_y_2001(),
        }
    }

    /// Fall-2000 snapshot: platform E as in 2001, platform Y free.
    pub fn builtin_fall_2000() -> SchedulePair {
        SchedulePair {
            e: FeeSchedule::platform_e_2001(),
            y: FeeSchedule::platform_y_fall_2000(),
        }
    }

    pub fn get(&self, id: PlatformId) -> &FeeSchedule {
        match id {
            PlatformId::E => &self.e,
            PlatformId::Y => &self.y,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.e.validate()?;
        self.y.validate()
    }

    /// Effective premium of E over Y: the total-fee differential as a
    /// fraction of the closing value.
    pub fn effective_premium(&self, opening_value: Money, closing_value: Money) -> Result<f64> {
        if closing_value == Money::ZERO {
            return Err(Error::invalid("closing value must be positive"));
        }
        let fee_e = self.e.total_fee(opening_value, closing_value)?;
        let fee_y = self.y.total_fee(opening_value, closing_value)?;
        Ok(fee_e.signed_diff(fee_y) as f64 / (closing_value.cents() as f64 * 10_000.0))
    }

    /// Smallest closing value (to the cent) whose effective premium is at or
    /// below `target`. Bisection over integer cents; requires the premium to
    /// be strictly decreasing in the closing value, which holds whenever E
    /// charges strictly more in total at every sale price.
    pub fn implied_closing_value(&self, target: f64, opening_value: Money) -> Result<Money> {
        if !target.is_finite() {
            return Err(Error::invalid("premium target must be finite"));
        }
        let at_opening = self.effective_premium(opening_value, opening_value)?;
        let floor = self.e.last_tier_rate() - self.y.last_tier_rate();
        if target <= floor || target >= at_opening {
            return Err(Error::NoSolution(format!(
                "premium target {target} is outside the achievable range \
                 ({floor:.6}, {at_opening:.6}) for opening value {opening_value}",
            )));
        }
        let mut lo = opening_value.cents();
        let mut hi = lo.max(1) * 2;
        const CAP: u64 = 1_000_000_000_000_000; // ten trillion dollars
        loop {
            let premium = self.effective_premium(opening_value, Money::from_cents(hi))?;
            if premium <= target {
                break;
            }
            if hi >= CAP {
                return Err(Error::NoSolution(format!(
                    "premium target {target} not reached by closing value {}; \
                     achievable range is ({floor:.6}, {at_opening:.6})",
                    Money::from_cents(CAP)
                )));
            }
            hi = (hi * 2).min(CAP);
        }
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if self.effective_premium(opening_value, Money::from_cents(mid))? <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Money::from_cents(hi))
    }

    /// Per-platform effective fee terms at a reference (opening, closing)
    /// sale: own final-value fee as a fraction of the closing value, own
    /// insertion fee in dollars.
    pub fn fee_terms(
        &self,
        opening_value: Money,
        closing_value: Money,
    ) -> Result<PerPlatform<FeeTerms>> {
        if closing_value == Money::ZERO {
            return Err(Error::invalid("closing value must be positive"));
        }
        let term = |s: &FeeSchedule| -> Result<FeeTerms> {
            let ad_valorem = s.final_value_fee(closing_value).micros() as f64
                / (closing_value.cents() as f64 * 10_000.0);
            let insertion = s.insertion_fee(opening_value)?.to_dollars();
            FeeTerms::new(ad_valorem, insertion)
        };
        Ok(PerPlatform::new(term(&self.e)?, term(&self.y)?))
    }

    /// Loads both platforms' schedules from flat `key = value` text:
    /// `insertion.<platform>.<k> = lower,upper,fee` and
    /// `finalvalue.<platform>.<k> = lower,upper,rate`, with `inf` for an
    /// unbounded upper edge. Tier indices `<k>` must run 0, 1, 2, ...
    pub fn from_kv_text(text: &str) -> Result<SchedulePair> {
        let kv = KvFile::parse(text)?;
        let mut insertion: PerPlatform<Vec<(usize, BracketFee)>> =
            PerPlatform::new(Vec::new(), Vec::new());
        let mut final_value: PerPlatform<Vec<(usize, MarginalTier)>> =
            PerPlatform::new(Vec::new(), Vec::new());
        for entry in kv.entries() {
            let mut parts = entry.key.split('.');
            let (kind, platform, index) =
                match (parts.next(), parts.next(), parts.next(), parts.next()) {
                    (Some(kind), Some(p), Some(i), None) => (kind, p, i),
                    _ => {
                        return Err(Error::Parse {
                            line: entry.line,
                            message: format!(
                                "key '{}' is not of the form insertion.<platform>.<k>",
                                entry.key
                            ),
                        })
                    }
                };
            let platform = PlatformId::from_str(platform).map_err(|e| Error::Parse {
                line: entry.line,
                message: e.to_string(),
            })?;
            let index: usize = index.parse().map_err(|_| Error::Parse {
                line: entry.line,
                message: format!("tier index '{index}' is not an integer"),
            })?;
            let fields: Vec<&str> = entry.value.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: entry.line,
                    message: format!("expected 'lower,upper,value', got '{}'", entry.value),
                });
            }
            let parse_money = |s: &str| -> Result<Money> {
                Money::from_str(s).map_err(|e| Error::Parse {
                    line: entry.line,
                    message: e.to_string(),
                })
            };
            let lower = parse_money(fields[0])?;
            let upper = if fields[1] == "inf" {
                None
            } else {
                Some(parse_money(fields[1])?)
            };
            match kind {
                "insertion" => {
                    let fee = parse_money(fields[2])?;
                    insertion[platform].push((index, BracketFee { lower, upper, fee }));
                }
                "finalvalue" => {
                    let rate = RatePpm::from_str(fields[2]).map_err(|e| Error::Parse {
                        line: entry.line,
                        message: e.to_string(),
                    })?;
                    final_value[platform].push((index, MarginalTier { lower, upper, rate }));
                }
                other => {
                    return Err(Error::Parse {
                        line: entry.line,
                        message: format!("unknown schedule section '{other}'"),
                    })
                }
            }
        }
        fn assemble<T>(mut tiers: Vec<(usize, T)>) -> Result<Vec<T>> {
            tiers.sort_by_key(|(i, _)| *i);
            for (pos, (i, _)) in tiers.iter().enumerate() {
                if *i != pos {
                    return Err(Error::validation(format!(
                        "tier indices must run 0..n without gaps (missing index {pos})"
                    )));
                }
            }
            Ok(tiers.into_iter().map(|(_, t)| t).collect())
        }
        let pair = SchedulePair {
            e: FeeSchedule {
                platform: PlatformId::E,
                insertion: assemble(std::mem::take(&mut insertion.e))?,
                final_value: assemble(std::mem::take(&mut final_value.e))?,
            },
            y: FeeSchedule {
                platform: PlatformId::Y,
                insertion: assemble(std::mem::take(&mut insertion.y))?,
                final_value: assemble(std::mem::take(&mut final_value.y))?,
            },
        };
        pair.validate()?;
        Ok(pair)
    }

    /// Serializes to the flat key=value format accepted by [`Self::from_kv_text`].
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for schedule in [&self.e, &self.y] {
            for (i, b) in schedule.insertion.iter().enumerate() {
                let upper = b.upper.map_or("inf".to_string(), |u| u.to_string());
                let _ = writeln!(
                    out,
                    "insertion.{}.{i} = {},{upper},{}",
                    schedule.platform, b.lower, b.fee
                );
            }
            for (i, t) in schedule.final_value.iter().enumerate() {
                let upper = t.upper.map_or("inf".to_string(), |u| u.to_string());
                let _ = writeln!(
                    out,
                    "finalvalue.{}.{i} = {},{upper},{}",
                    schedule.platform, t.lower, t.rate
                );
            }
        }
        out
    }
}
