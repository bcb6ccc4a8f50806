use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One of the two auction platforms in a market instance.
///
/// `E` is the incumbent with the richer fee schedule, `Y` the challenger.
/// Exactly two platforms exist everywhere in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlatformId {
    E,
    Y,
}

impl PlatformId {
    pub const BOTH: [PlatformId; 2] = [PlatformId::E, PlatformId::Y];

    pub fn rival(self) -> PlatformId {
        match self {
            PlatformId::E => PlatformId::Y,
            PlatformId::Y => PlatformId::E,
        }
    }
}

impl fmt::Display for PlatformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlatformId::E => write!(f, "E"),
            PlatformId::Y => write!(f, "Y"),
        }
    }
}

impl FromStr for PlatformId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "E" | "e" => Ok(PlatformId::E),
            "Y" | "y" => Ok(PlatformId::Y),
            other => Err(Error::invalid(format!(
                "unknown platform '{other}' (expected E or Y)"
            ))),
        }
    }
}

/// A pair of values keyed by platform.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerPlatform<T> {
    pub e: T,
    pub y: T,
}

impl<T> PerPlatform<T> {
    pub fn new(e: T, y: T) -> Self {
        PerPlatform { e, y }
    }

    pub fn get(&self, id: PlatformId) -> &T {
        match id {
            PlatformId::E => &self.e,
            PlatformId::Y => &self.y,
        }
    }

    pub fn get_mut(&mut self, id: PlatformId) -> &mut T {
        match id {
            PlatformId::E => &mut self.e,
            PlatformId::Y => &mut self.y,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerPlatform<U> {
        PerPlatform {
            e: f(&self.e),
            y: f(&self.y),
        }
    }
}

impl<T: Clone> PerPlatform<T> {
    /// Same value on both platforms.
    pub fn splat(v: T) -> Self {
        PerPlatform { e: v.clone(), y: v }
    }
}

impl<T> std::ops::Index<PlatformId> for PerPlatform<T> {
    type Output = T;

    fn index(&self, id: PlatformId) -> &T {
        self.get(id)
    }
}

impl<T> std::ops::IndexMut<PlatformId> for PerPlatform<T> {
    fn index_mut(&mut self, id: PlatformId) -> &mut T {
        self.get_mut(id)
    }
}

/// Which website-usage series an analysis runs on. Never mixed within one
/// regression or calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UsageMetric {
    UniqueVisitors,
    PageViews,
}

impl UsageMetric {
    pub const BOTH: [UsageMetric; 2] = [UsageMetric::UniqueVisitors, UsageMetric::PageViews];

    pub fn label(self) -> &'static str {
        match self {
            UsageMetric::UniqueVisitors => "unique_visitors",
            UsageMetric::PageViews => "page_views",
        }
    }
}

impl fmt::Display for UsageMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for UsageMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uv" | "unique_visitors" | "visitors" => Ok(UsageMetric::UniqueVisitors),
            "pv" | "page_views" | "pages" => Ok(UsageMetric::PageViews),
            other => Err(Error::invalid(format!(
                "unknown usage metric '{other}' (expected uv or pv)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rival_is_involution() {
        for p in PlatformId::BOTH {
            assert_eq!(p.rival().rival(), p);
        }
    }

    #[test]
    fn per_platform_indexing() {
        let mut pp = PerPlatform::new(1.0, 2.0);
        assert_eq!(pp[PlatformId::E], 1.0);
        pp[PlatformId::Y] = 5.0;
        assert_eq!(pp.y, 5.0);
    }

    #[test]
    fn metric_parses_short_codes() {
        assert_eq!(
            "uv".parse::<UsageMetric>().unwrap(),
            UsageMetric::UniqueVisitors
        );
        assert_eq!("PV".parse::<UsageMetric>().unwrap(), UsageMetric::PageViews);
        assert!("xx".parse::<UsageMetric>().is_err());
    }
}
