//! Structural market model: expected auction revenue as a power function of
//! potential bidders, website usage as a log-linear function of own and rival
//! listings, net listing revenue, and the seller indifference condition that
//! defines a listing equilibrium.

use crate::error::{Error, Result};
use crate::fees::FeeTerms;
use crate::platform::{PerPlatform, PlatformId, UsageMetric};

/// Parameters of the expected-revenue function
/// `R_j = scale * n_j^bidder_elasticity * exp(site_factor_j)`,
/// with expected bidders `n_j = bidder_ratio * usage_j / listings_j`.
///
/// `bidder_ratio` and `scale` are not separately identified (both scale
/// revenue), so `bidder_ratio` defaults to 1 and `scale` absorbs it.
/// `site_factor.e` is normalized to zero; only the E-Y difference matters.
///
/// Config keys: `rev.a` (scale), `rev.b` (bidder_elasticity),
/// `rev.gamma` (bidder_ratio), `rev.xi.Y` (site_factor.y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenueParams {
    pub scale: f64,
    pub bidder_elasticity: f64,
    pub bidder_ratio: f64,
    pub site_factor: PerPlatform<f64>,
}

impl RevenueParams {
    pub fn new(scale: f64, bidder_elasticity: f64) -> Result<RevenueParams> {
        let params = RevenueParams {
            scale,
            bidder_elasticity,
            bidder_ratio: 1.0,
            site_factor: PerPlatform::splat(0.0),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::validation("revenue scale must be positive"));
        }
        if !(self.bidder_ratio > 0.0) {
            return Err(Error::validation("bidder ratio must be positive"));
        }
        if !self.bidder_elasticity.is_finite()
            || !self.site_factor.e.is_finite()
            || !self.site_factor.y.is_finite()
        {
            return Err(Error::validation("revenue parameters must be finite"));
        }
        Ok(())
    }
}

/// Parameters of the usage function
/// `U_j = own^own_elasticity * rival^rival_elasticity * exp(log_level + site_preference_j)`.
///
/// Config keys: `use.beta1` (own_elasticity), `use.beta2` (rival_elasticity),
/// `use.c` (log_level), `use.eta.E` / `use.eta.Y` (site_preference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsageParams {
    pub own_elasticity: f64,
    pub rival_elasticity: f64,
    pub log_level: f64,
    pub site_preference: PerPlatform<f64>,
}

impl UsageParams {
    pub fn new(own_elasticity: f64, rival_elasticity: f64, log_level: f64) -> UsageParams {
        UsageParams {
            own_elasticity,
            rival_elasticity,
            log_level,
            site_preference: PerPlatform::splat(0.0),
        }
    }
}

/// Listings and usage per platform, in thousands. All entries strictly
/// positive so logarithms exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub listings: PerPlatform<f64>,
    pub usage: PerPlatform<f64>,
}

impl MarketState {
    pub fn new(listings: PerPlatform<f64>, usage: PerPlatform<f64>) -> Result<MarketState> {
        let state = MarketState { listings, usage };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        for p in PlatformId::BOTH {
            if !(self.listings[p] > 0.0) || !(self.usage[p] > 0.0) {
                return Err(Error::validation(format!(
                    "market state for {p} must be strictly positive"
                )));
            }
        }
        Ok(())
    }
}

/// Expected bidders per listed item: `bidder_ratio * usage / listings`.
pub fn potential_bidders(params: &RevenueParams, usage: f64, listings: f64) -> Result<f64> {
    if !(usage > 0.0) || !(listings > 0.0) {
        return Err(Error::invalid(
            "usage and listings must be strictly positive",
        ));
    }
    Ok(params.bidder_ratio * usage / listings)
}

/// Expected auction revenue `scale * n^b * exp(site_factor)`.
pub fn expected_revenue(params: &RevenueParams, n_bidders: f64, site: PlatformId) -> Result<f64> {
    if !(n_bidders > 0.0) {
        return Err(Error::invalid("bidder count must be strictly positive"));
    }
    Ok(params.scale * n_bidders.powf(params.bidder_elasticity) * params.site_factor[site].exp())
}

/// Website usage induced by own and rival listings.
pub fn usage_level(
    params: &UsageParams,
    own_listings: f64,
    rival_listings: f64,
    site: PlatformId,
) -> Result<f64> {
    if !(own_listings > 0.0) || !(rival_listings > 0.0) {
        return Err(Error::invalid("listings must be strictly positive"));
    }
    Ok(own_listings.powf(params.own_elasticity)
        * rival_listings.powf(params.rival_elasticity)
        * (params.log_level + params.site_preference[site]).exp())
}

/// Net revenue from listing: `(1 - ad_valorem) * revenue - insertion`.
/// May be negative, in which case the listing would not occur.
pub fn net_listing_revenue(revenue: f64, ad_valorem: f64, insertion: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&ad_valorem) {
        return Err(Error::invalid(format!(
            "ad-valorem rate {ad_valorem} outside [0, 1)"
        )));
    }
    Ok((1.0 - ad_valorem) * revenue - insertion)
}

/// Net listing revenue for one platform at a market state.
pub fn platform_net_revenue(
    state: &MarketState,
    rev: &RevenueParams,
    fees: &PerPlatform<FeeTerms>,
    site: PlatformId,
) -> Result<f64> {
    let n = potential_bidders(rev, state.usage[site], state.listings[site])?;
    let revenue = expected_revenue(rev, n, site)?;
    net_listing_revenue(revenue, fees[site].ad_valorem, fees[site].insertion)
}

/// Seller indifference residual: net listing revenue on E minus on Y,
/// zero at a listing equilibrium.
pub fn indifference_residual(
    state: &MarketState,
    rev: &RevenueParams,
    fees: &PerPlatform<FeeTerms>,
) -> Result<f64> {
    let net_e = platform_net_revenue(state, rev, fees, PlatformId::E)?;
    let net_y = platform_net_revenue(state, rev, fees, PlatformId::Y)?;
    Ok(net_e - net_y)
}

/// Matrix of reduced-form elasticities `d ln R_j / d ln L_k` obtained by
/// composing the revenue and usage equations: own diagonal
/// `b * (own_elasticity - 1)`, off-diagonal `b * rival_elasticity`.
pub fn reduced_form_exponents(rev: &RevenueParams, usage: &UsageParams) -> [[f64; 2]; 2] {
    let own = rev.bidder_elasticity * (usage.own_elasticity - 1.0);
    let cross = rev.bidder_elasticity * usage.rival_elasticity;
    [[own, cross], [cross, own]]
}

/// Result of backing out site residuals from an observed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub rev: RevenueParams,
    pub usage: UsageParams,
    pub metric: UsageMetric,
    /// The effective premium the indifference condition was closed at.
    pub premium: f64,
}

/// Backs out the site residuals so the model reproduces `observed` exactly:
/// `site_preference_j` inverts the usage equation at the observed listings,
/// and `site_factor.y` closes the indifference condition `1 - premium = R_y/R_e`
/// at the observed per-listing usage ratios (`site_factor.e = 0`).
/// Idempotent: calibrating a calibrated parameter set is a no-op.
pub fn calibrate_residuals(
    observed: &MarketState,
    rev: &RevenueParams,
    usage: &UsageParams,
    metric: UsageMetric,
    premium: f64,
) -> Result<Calibration> {
    observed.validate()?;
    rev.validate()?;
    if !(0.0..1.0).contains(&premium) {
        return Err(Error::invalid(format!(
            "effective premium {premium} outside [0, 1)"
        )));
    }
    let mut usage_out = *usage;
    for site in PlatformId::BOTH {
        let own = observed.listings[site];
        let rival = observed.listings[site.rival()];
        usage_out.site_preference[site] = observed.usage[site].ln()
            - usage.own_elasticity * own.ln()
            - usage.rival_elasticity * rival.ln()
            - usage.log_level;
    }
    let mut rev_out = *rev;
    rev_out.site_factor.e = 0.0;
    let n_e = potential_bidders(rev, observed.usage.e, observed.listings.e)?;
    let n_y = potential_bidders(rev, observed.usage.y, observed.listings.y)?;
    rev_out.site_factor.y = (1.0 - premium).ln() - rev.bidder_elasticity * (n_y.ln() - n_e.ln());
    Ok(Calibration {
        rev: rev_out,
        usage: usage_out,
        metric,
        premium,
    })
}

/// Known keys of the flat key=value parameter format.
pub const PARAM_KEYS: [&str; 9] = [
    "rev.a",
    "rev.b",
    "rev.gamma",
    "rev.xi.Y",
    "use.beta1",
    "use.beta2",
    "use.c",
    "use.eta.E",
    "use.eta.Y",
];

/// Reads both parameter records from flat key=value text. Missing keys take
/// neutral defaults (unit scale and ratio, zero elasticities and residuals);
/// unknown keys are rejected.
pub fn params_from_kv(kv: &crate::config::KvFile) -> Result<(RevenueParams, UsageParams)> {
    for entry in kv.entries() {
        if !PARAM_KEYS.contains(&entry.key.as_str()) {
            return Err(Error::validation(format!(
                "unknown parameter key '{}' (known keys: {})",
                entry.key,
                PARAM_KEYS.join(", ")
            )));
        }
    }
    let get =
        |key: &str, default: f64| -> Result<f64> { Ok(kv.f64_value(key)?.unwrap_or(default)) };
    let rev = RevenueParams {
        scale: get("rev.a", 1.0)?,
        bidder_elasticity: get("rev.b", 0.0)?,
        bidder_ratio: get("rev.gamma", 1.0)?,
        site_factor: PerPlatform::new(0.0, get("rev.xi.Y", 0.0)?),
    };
    rev.validate()?;
    let usage = UsageParams {
        own_elasticity: get("use.beta1", 0.0)?,
        rival_elasticity: get("use.beta2", 0.0)?,
        log_level: get("use.c", 0.0)?,
        site_preference: PerPlatform::new(get("use.eta.E", 0.0)?, get("use.eta.Y", 0.0)?),
    };
    Ok((rev, usage))
}

/// Writes both parameter records in the flat key=value format accepted by
/// [`params_from_kv`].
pub fn params_to_kv(rev: &RevenueParams, usage: &UsageParams) -> String {
    format!(
        "rev.a = {}\nrev.b = {}\nrev.gamma = {}\nrev.xi.Y = {}\n\
         use.beta1 = {}\nuse.beta2 = {}\nuse.c = {}\nuse.eta.E = {}\nuse.eta.Y = {}\n",
        rev.scale,
        rev.bidder_elasticity,
        rev.bidder_ratio,
        rev.site_factor.y,
        usage.own_elasticity,
        usage.rival_elasticity,
        usage.log_level,
        usage.site_preference.e,
        usage.site_preference.y,
    )
}

/// Rescales `scale` so the expected revenue on platform E at the observed
/// state equals `target_revenue` (dollars). Used to anchor the model at a
/// reference sale price before fee terms enter additively.
pub fn anchor_revenue_scale(
    rev: &RevenueParams,
    observed: &MarketState,
    target_revenue: f64,
) -> Result<RevenueParams> {
    if !(target_revenue > 0.0) {
        return Err(Error::invalid("target revenue must be positive"));
    }
    let n_e = potential_bidders(rev, observed.usage.e, observed.listings.e)?;
    let current = expected_revenue(rev, n_e, PlatformId::E)?;
    let mut out = *rev;
    out.scale = rev.scale * target_revenue / current;
    Ok(out)
}
