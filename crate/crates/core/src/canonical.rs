//! The canonical 17-week replication panel.
//!
//! The true weekly series behind the 2001 sample is unpublished, so this
//! module synthesizes a deterministic stand-in pinned to the published
//! weekly averages: listings of 5,822k / 3,349k, unique visitors of
//! 6,250k / 527k, and page views of 763,637.8k / 1,726k (the E page-view
//! mean adopts the reading consistent with the reported 131.2 pages per
//! listing; the source figure is internally inconsistent). Usage cells are
//! missing for site E in week 9 and site Y in week 1, leaving 15 complete
//! weeks per metric.
//!
//! Weekly shape: listings swing nearly anti-phase around their means while usage
//! carries a matched site-antisymmetric adjustment that keeps the log
//! usage-per-listing gap nearly constant across weeks (the co-movement that
//! makes the revenue-elasticity fit tight), plus a small deterministic
//! texture so regressions have residual variance. The generating constants
//! are tuned so the pooled usage regression lands near the reference
//! coefficients (own 1.989 / rival -1.876 for visitors, 4.743 / -4.718 for
//! page views) with R-squared above 0.9.

use std::f64::consts::TAU;

use crate::model::MarketState;
use crate::panel::{Panel, WeeklyObservation};
use crate::platform::{PerPlatform, PlatformId, UsageMetric};

pub const CANONICAL_WEEKS: u32 = 17;
/// (week, site) cells with no usage data.
pub const CANONICAL_MISSING: [(u32, PlatformId); 2] = [(9, PlatformId::E), (1, PlatformId::Y)];

pub const LISTINGS_MEAN: PerPlatform<f64> = PerPlatform {
    e: 5822.0,
    y: 3349.0,
};
pub const UNIQUE_VISITORS_MEAN: PerPlatform<f64> = PerPlatform {
    e: 6250.0,
    y: 527.0,
};
pub const PAGE_VIEWS_MEAN: PerPlatform<f64> = PerPlatform {
    e: 763_637.8,
    y: 1726.0,
};

/// Reference regression targets the panel is built around.
pub fn reference_usage_coefficients(metric: UsageMetric) -> (f64, f64, f64) {
    match metric {
        UsageMetric::UniqueVisitors => (6.564, 1.989, -1.876),
        UsageMetric::PageViews => (10.289, 4.743, -4.718),
    }
}

// listing swing amplitude (log units) and the share of the usage-gap
// variation that the antisymmetric usage adjustment absorbs
const SWING: f64 = 0.135;
const GAP_DAMP: f64 = 1.0;
const TEXTURE: f64 = 0.02;

// nearly opposite phases: the two platforms' listings mostly substitute
// week to week, with a small common seasonal component
fn swing_at(week: u32, site: PlatformId) -> f64 {
    let phase = match site {
        PlatformId::E => 0.7,
        PlatformId::Y => 3.4,
    };
    SWING * (TAU * (week - 1) as f64 / CANONICAL_WEEKS as f64 + phase).cos()
}

/// Weekly listings (thousands) with arithmetic means pinned exactly to
/// [`LISTINGS_MEAN`].
pub fn canonical_listings() -> PerPlatform<Vec<f64>> {
    let mut factors = PerPlatform::new(Vec::new(), Vec::new());
    for week in 1..=CANONICAL_WEEKS {
        factors.e.push(swing_at(week, PlatformId::E).exp());
        factors.y.push(swing_at(week, PlatformId::Y).exp());
    }
    for site in PlatformId::BOTH {
        let mean = factors[site].iter().sum::<f64>() / CANONICAL_WEEKS as f64;
        let base = LISTINGS_MEAN[site];
        for f in factors[site].iter_mut() {
            *f = base * (*f / mean);
        }
    }
    factors
}

fn usage_values(metric: UsageMetric, listings: &PerPlatform<Vec<f64>>) -> PerPlatform<Vec<f64>> {
    let (level, own_el, rival_el) = reference_usage_coefficients(metric);
    let n = CANONICAL_WEEKS as usize;
    let log_gap: Vec<f64> = (0..n)
        .map(|i| listings.e[i].ln() - listings.y[i].ln())
        .collect();
    let gap_mean = log_gap.iter().sum::<f64>() / n as f64;
    let target_mean = match metric {
        UsageMetric::UniqueVisitors => UNIQUE_VISITORS_MEAN,
        UsageMetric::PageViews => PAGE_VIEWS_MEAN,
    };
    let texture_phase = match metric {
        UsageMetric::UniqueVisitors => 0.3,
        UsageMetric::PageViews => 1.4,
    };

    // log usage before the site level is pinned down
    let raw = |site: PlatformId, i: usize| -> f64 {
        let (own, rival) = match site {
            PlatformId::E => (listings.e[i], listings.y[i]),
            PlatformId::Y => (listings.y[i], listings.e[i]),
        };
        let gap_adjust = GAP_DAMP * (own_el - rival_el - 1.0) * (log_gap[i] - gap_mean) / 2.0;
        let sign = if site == PlatformId::E { -1.0 } else { 1.0 };
        let texture = TEXTURE * (1.7 * (i as f64 + 1.0) + texture_phase + sign + 1.0).sin();
        level + own_el * own.ln() + rival_el * rival.ln() + sign * gap_adjust + texture
    };

    let mut values = PerPlatform::new(vec![0.0; n], vec![0.0; n]);
    for site in PlatformId::BOTH {
        // site level set so the arithmetic mean over present cells is exact
        let mut shift = 0.0f64;
        for _ in 0..4 {
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..n {
                let week = i as u32 + 1;
                if CANONICAL_MISSING.contains(&(week, site)) {
                    continue;
                }
                sum += (raw(site, i) + shift).exp();
                count += 1;
            }
            shift += (target_mean[site] / (sum / count as f64)).ln();
        }
        for i in 0..n {
            values[site][i] = (raw(site, i) + shift).exp();
        }
    }
    values
}

/// Builds the canonical panel. Deterministic: every call returns the same
/// bit-identical panel.
pub fn canonical_panel() -> Panel {
    let listings = canonical_listings();
    let uv = usage_values(UsageMetric::UniqueVisitors, &listings);
    let pv = usage_values(UsageMetric::PageViews, &listings);
    let mut observations = Vec::with_capacity(2 * CANONICAL_WEEKS as usize);
    for week in 1..=CANONICAL_WEEKS {
        let i = (week - 1) as usize;
        for site in PlatformId::BOTH {
            let present = !CANONICAL_MISSING.contains(&(week, site));
            observations.push(WeeklyObservation {
                week,
                site,
                listings: listings[site][i],
                unique_visitors: present.then(|| uv[site][i]),
                page_views: present.then(|| pv[site][i]),
            });
        }
    }
    Panel::from_observations(observations).expect("canonical panel is valid")
}

/// The observed 2001 mean state used for calibration targets.
pub fn observed_mean_state(metric: UsageMetric) -> MarketState {
    let usage = match metric {
        UsageMetric::UniqueVisitors => UNIQUE_VISITORS_MEAN,
        UsageMetric::PageViews => PAGE_VIEWS_MEAN,
    };
    MarketState::new(LISTINGS_MEAN, usage).expect("positive means")
}
