//! Listing-equilibrium solvers, the listings/usage feedback loop, and
//! fee-policy counterfactuals.
//!
//! Two closures pin down aggregate listing supply, which the indifference
//! condition alone leaves open: `FixedTotal` reallocates a fixed stock of
//! listings between the platforms until net revenues equalize, and
//! `ElasticEntry` lets each platform's listings adjust against an outside
//! option. Reports always label which closure produced a number.

use std::fmt;

use crate::error::{Error, Result};
use crate::fees::FeeTerms;
use crate::model::{
    indifference_residual, platform_net_revenue, reduced_form_exponents, usage_level, MarketState,
    RevenueParams, UsageParams,
};
use crate::platform::{PerPlatform, PlatformId, UsageMetric};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_DAMPING: f64 = 0.2;
/// A state coordinate drifting beyond this factor of its initial scale is
/// economically meaningless and counts as divergence.
pub const DIVERGENCE_SPAN: f64 = 1e12;
const MAX_SOLVE_PERIODS: usize = 200_000;

/// Aggregate listing-supply closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// Listings reallocate between platforms; the total is conserved.
    FixedTotal { total_listings: f64 },
    /// Each platform's listings adjust until net listing revenue equals the
    /// per-listing outside option (dollars).
    ElasticEntry { outside_option: f64 },
}

impl fmt::Display for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Closure::FixedTotal { total_listings } => {
                write!(f, "fixed_total({total_listings})")
            }
            Closure::ElasticEntry { outside_option } => {
                write!(f, "elastic_entry({outside_option})")
            }
        }
    }
}

/// A fully parameterized two-platform market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumProblem {
    pub rev: RevenueParams,
    pub usage: UsageParams,
    pub fees: PerPlatform<FeeTerms>,
    pub closure: Closure,
    pub metric: UsageMetric,
    /// Observed E share used to designate the headline root when the scan
    /// finds several.
    pub reference_share: Option<f64>,
}

impl EquilibriumProblem {
    pub fn validate(&self) -> Result<()> {
        self.rev.validate()?;
        for site in PlatformId::BOTH {
            if !(0.0..1.0).contains(&self.fees[site].ad_valorem) {
                return Err(Error::validation(format!(
                    "ad-valorem rate for {site} outside [0, 1)"
                )));
            }
        }
        match self.closure {
            Closure::FixedTotal { total_listings } => {
                if !(total_listings > 0.0) {
                    return Err(Error::validation("total listings must be positive"));
                }
            }
            Closure::ElasticEntry { outside_option } => {
                if !(outside_option > 0.0) {
                    return Err(Error::validation(
                        "outside option must be positive (net revenues are compared in logs)",
                    ));
                }
            }
        }
        if let Some(s) = self.reference_share {
            if !(0.0 < s && s < 1.0) {
                return Err(Error::validation("reference share outside (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn with_fees(&self, fees: PerPlatform<FeeTerms>) -> EquilibriumProblem {
        EquilibriumProblem { fees, ..*self }
    }

    pub fn with_closure(&self, closure: Closure) -> EquilibriumProblem {
        EquilibriumProblem { closure, ..*self }
    }

    /// Market state implied by a pair of listings: usage induced through the
    /// usage equation.
    pub fn induced_state(&self, listings_e: f64, listings_y: f64) -> Result<MarketState> {
        let usage = PerPlatform::new(
            usage_level(&self.usage, listings_e, listings_y, PlatformId::E)?,
            usage_level(&self.usage, listings_y, listings_e, PlatformId::Y)?,
        );
        MarketState::new(PerPlatform::new(listings_e, listings_y), usage)
    }

    fn residual_at_share(&self, share: f64, total: f64) -> Result<f64> {
        let (l_e, l_y) = split_total(total, share);
        let state = self.induced_state(l_e, l_y)?;
        indifference_residual(&state, &self.rev, &self.fees)
    }
}

/// Splits a total into (E, Y) listings so that the parts sum back to the
/// total exactly in floating point.
pub fn split_total(total: f64, share: f64) -> (f64, f64) {
    let mut l_e = total * share;
    let mut l_y = total - l_e;
    l_e = total - l_y;
    if l_e + l_y != total {
        l_y = total - l_e;
    }
    (l_e, l_y)
}

/// One candidate equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub share: f64,
    pub state: MarketState,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSign {
    Positive,
    Negative,
    None,
}

impl fmt::Display for FeedbackSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeedbackSign::Positive => write!(f, "positive"),
            FeedbackSign::Negative => write!(f, "negative"),
            FeedbackSign::None => write!(f, "none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Unstable,
    Neutral,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Stable => write!(f, "stable"),
            Classification::Unstable => write!(f, "unstable"),
            Classification::Neutral => write!(f, "neutral"),
        }
    }
}

/// Sign and strength of the listings-to-revenue feedback loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Reduced-form own exponent `d ln R_j / d ln L_j`.
    pub own_exponent: f64,
    /// Reduced-form cross exponent `d ln R_j / d ln L_{-j}`.
    pub cross_exponent: f64,
    /// The loop map: one log-point of listings moves log revenues by these
    /// exponents, and listings respond one-for-one next round.
    pub map: [[f64; 2]; 2],
    pub spectral_radius: f64,
    pub feedback: FeedbackSign,
    pub classification: Classification,
    /// E share of the solution the report was evaluated at.
    pub at_share: f64,
}

/// A solved market.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    /// The designated equilibrium state.
    pub state: MarketState,
    /// Indifference residual at `state` for `FixedTotal`; the largest
    /// absolute net-revenue gap to the outside option for `ElasticEntry`.
    pub residual: f64,
    /// Every root found, sorted by E share, duplicates merged.
    pub roots: Vec<Root>,
    pub stability: StabilityReport,
    /// Which closure produced these numbers.
    pub closure: Closure,
}

impl EquilibriumSolution {
    pub fn share(&self) -> f64 {
        self.state.listings.e / (self.state.listings.e + self.state.listings.y)
    }
}

/// Discrete-time path of the damped adjustment process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<MarketState>,
    pub converged: bool,
    pub diverged: bool,
    /// Steps taken (states.len() - 1).
    pub periods: usize,
}

/// Classifies the listings/usage feedback loop of a solved market.
///
/// The loop map is the reduced-form exponent matrix itself (the unit-response
/// reading of "listings move revenue, revenue moves listings"), so its
/// spectral radius measures whether a listing impulse echoes away (< 1) or
/// compounds (>= 1). Note this is a statement about the feedback loop, not
/// about the damped adjustment path: with a positive own exponent the
/// share-tilt mode of the iteration in [`iterate_dynamics`] multiplies by
/// `1 + damping * (own - cross)` each period and can drift even while the
/// loop gain is far below one.
pub fn stability_analysis(
    problem: &EquilibriumProblem,
    solution: &EquilibriumSolution,
) -> StabilityReport {
    let map = reduced_form_exponents(&problem.rev, &problem.usage);
    let own = map[0][0];
    let cross = map[0][1];
    let spectral_radius = (own + cross).abs().max((own - cross).abs());
    let feedback = if own > 0.0 {
        FeedbackSign::Positive
    } else if own < 0.0 {
        FeedbackSign::Negative
    } else {
        FeedbackSign::None
    };
    let classification = if spectral_radius == 0.0 {
        Classification::Neutral
    } else if spectral_radius < 1.0 {
        Classification::Stable
    } else if spectral_radius > 1.0 {
        Classification::Unstable
    } else {
        Classification::Neutral
    };
    StabilityReport {
        own_exponent: own,
        cross_exponent: cross,
        map,
        spectral_radius,
        feedback,
        classification,
        at_share: solution.share(),
    }
}

fn placeholder_stability() -> StabilityReport {
    StabilityReport {
        own_exponent: 0.0,
        cross_exponent: 0.0,
        map: [[0.0; 2]; 2],
        spectral_radius: 0.0,
        feedback: FeedbackSign::None,
        classification: Classification::Neutral,
        at_share: 0.5,
    }
}

/// Scans E shares over a uniform grid, brackets every sign change of the
/// indifference residual (usage induced through the usage equation at the
/// implied listings), and refines each bracket by bisection. Returns all
/// roots; the designated `state` is the root nearest `reference_share` when
/// one is given, otherwise the root nearest an equal split.
pub fn solve_fixed_total(
    problem: &EquilibriumProblem,
    tolerance: f64,
    grid_points: usize,
) -> Result<EquilibriumSolution> {
    problem.validate()?;
    let total = match problem.closure {
        Closure::FixedTotal { total_listings } => total_listings,
        Closure::ElasticEntry { .. } => {
            return Err(Error::invalid(
                "solve_fixed_total requires a FixedTotal closure",
            ))
        }
    };
    if grid_points < 16 {
        return Err(Error::invalid("grid must have at least 16 points"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }

    const LO: f64 = 0.001;
    const HI: f64 = 0.999;
    let step = (HI - LO) / (grid_points - 1) as f64;
    let shares: Vec<f64> = (0..grid_points).map(|i| LO + step * i as f64).collect();
    let residuals: Vec<f64> = shares
        .iter()
        .map(|&s| problem.residual_at_share(s, total))
        .collect::<Result<_>>()?;

    let mut root_shares: Vec<f64> = Vec::new();
    for i in 0..grid_points {
        if residuals[i] == 0.0 {
            root_shares.push(shares[i]);
        } else if i + 1 < grid_points
            && residuals[i + 1] != 0.0
            && residuals[i].signum() != residuals[i + 1].signum()
        {
            root_shares.push(bisect_share(
                problem,
                total,
                shares[i],
                shares[i + 1],
                tolerance,
            )?);
        }
    }
    if root_shares.is_empty() {
        return Err(Error::NoEquilibrium(format!(
            "indifference residual has no sign change on ({LO}, {HI}): \
             residual({LO}) = {:+.6e}, residual({HI}) = {:+.6e}; corner solution",
            residuals[0],
            residuals[grid_points - 1]
        )));
    }
    root_shares.sort_by(f64::total_cmp);
    root_shares.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut roots = Vec::with_capacity(root_shares.len());
    for share in root_shares {
        let (l_e, l_y) = split_total(total, share);
        let state = problem.induced_state(l_e, l_y)?;
        let residual = indifference_residual(&state, &problem.rev, &problem.fees)?;
        roots.push(Root {
            share,
            state,
            residual,
        });
    }

    let target = problem.reference_share.unwrap_or(0.5);
    let designated = roots
        .iter()
        .min_by(|a, b| {
            (a.share - target)
                .abs()
                .total_cmp(&(b.share - target).abs())
        })
        .copied()
        .expect("at least one root");

    let mut solution = EquilibriumSolution {
        state: designated.state,
        residual: designated.residual,
        roots,
        stability: placeholder_stability(),
        closure: problem.closure,
    };
    solution.stability = stability_analysis(problem, &solution);
    Ok(solution)
}

fn bisect_share(
    problem: &EquilibriumProblem,
    total: f64,
    mut lo: f64,
    mut hi: f64,
    tolerance: f64,
) -> Result<f64> {
    let mut f_lo = problem.residual_at_share(lo, total)?;
    let mut best = (lo, f_lo.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = problem.residual_at_share(mid, total)?;
        if f_mid.abs() < best.1 {
            best = (mid, f_mid.abs());
        }
        if f_mid.abs() < tolerance || (hi - lo).abs() < f64::EPSILON {
            return Ok(mid);
        }
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

struct StepOutcome {
    state: MarketState,
    /// Log gaps `ln net_j - ln outside` at the *incoming* state.
    gaps: PerPlatform<f64>,
}

fn elastic_step(
    problem: &EquilibriumProblem,
    state: &MarketState,
    outside: f64,
    damping: f64,
) -> Result<StepOutcome> {
    let mut gaps = PerPlatform::splat(0.0);
    for site in PlatformId::BOTH {
        let net = platform_net_revenue(state, &problem.rev, &problem.fees, site)?;
        if !(net > 0.0) {
            return Err(Error::NoEquilibrium(format!(
                "net listing revenue on {site} is non-positive ({net:.6}) against a \
                 positive outside option; no feasible scale"
            )));
        }
        gaps[site] = net.ln() - outside.ln();
    }
    let l_e = (state.listings.e.ln() + damping * gaps.e).exp();
    let l_y = (state.listings.y.ln() + damping * gaps.y).exp();
    Ok(StepOutcome {
        state: problem.induced_state(l_e, l_y)?,
        gaps,
    })
}

/// Damped adjustment in log listings: each platform moves proportionally
/// (factor `damping`) to the log gap between its net listing revenue and the
/// outside option, with usage re-induced each period. Records every state.
/// Divergence (a coordinate drifting beyond [`DIVERGENCE_SPAN`] of its
/// starting scale, or an untenable non-positive net revenue) returns a
/// truncated, flagged trajectory rather than an error.
pub fn iterate_dynamics(
    problem: &EquilibriumProblem,
    initial: &MarketState,
    damping: f64,
    max_periods: usize,
    tolerance: f64,
) -> Result<Trajectory> {
    problem.validate()?;
    initial.validate()?;
    let outside = match problem.closure {
        Closure::ElasticEntry { outside_option } => outside_option,
        Closure::FixedTotal { .. } => {
            return Err(Error::invalid(
                "iterate_dynamics requires an ElasticEntry closure",
            ))
        }
    };
    if !(0.0 < damping && damping <= 1.0) {
        return Err(Error::invalid("damping must lie in (0, 1]"));
    }
    let span = DIVERGENCE_SPAN.ln();
    let mut states = vec![*initial];
    let mut converged = false;
    let mut diverged = false;
    for _ in 0..max_periods {
        let current = *states.last().expect("nonempty");
        let outcome = match elastic_step(problem, &current, outside, damping) {
            Ok(o) => o,
            Err(_) => {
                diverged = true;
                break;
            }
        };
        if outcome.gaps.e.abs() < tolerance && outcome.gaps.y.abs() < tolerance {
            converged = true;
            break;
        }
        let drift_e = (outcome.state.listings.e / initial.listings.e).ln().abs();
        let drift_y = (outcome.state.listings.y / initial.listings.y).ln().abs();
        states.push(outcome.state);
        if drift_e > span || drift_y > span {
            diverged = true;
            break;
        }
    }
    let periods = states.len() - 1;
    Ok(Trajectory {
        states,
        converged,
        diverged,
        periods,
    })
}

/// Runs the damped adjustment to convergence and packages the fixed point.
/// Divergence is an error carrying the partial trajectory.
pub fn solve_elastic_entry(
    problem: &EquilibriumProblem,
    tolerance: f64,
    initial: &MarketState,
    damping: f64,
) -> Result<EquilibriumSolution> {
    problem.validate()?;
    initial.validate()?;
    let outside = match problem.closure {
        Closure::ElasticEntry { outside_option } => outside_option,
        Closure::FixedTotal { .. } => {
            return Err(Error::invalid(
                "solve_elastic_entry requires an ElasticEntry closure",
            ))
        }
    };
    if !(0.0 < damping && damping <= 1.0) {
        return Err(Error::invalid("damping must lie in (0, 1]"));
    }
    let span = DIVERGENCE_SPAN.ln();
    let mut states = vec![*initial];
    for _ in 0..MAX_SOLVE_PERIODS {
        let current = *states.last().expect("nonempty");
        let outcome = elastic_step(problem, &current, outside, damping)?;
        if outcome.gaps.e.abs() < tolerance && outcome.gaps.y.abs() < tolerance {
            let mut residual = 0.0f64;
            for site in PlatformId::BOTH {
                let net = platform_net_revenue(&current, &problem.rev, &problem.fees, site)?;
                residual = residual.max((net - outside).abs());
            }
            let share = current.listings.e / (current.listings.e + current.listings.y);
            let mut solution = EquilibriumSolution {
                state: current,
                residual,
                roots: vec![Root {
                    share,
                    state: current,
                    residual,
                }],
                stability: placeholder_stability(),
                closure: problem.closure,
            };
            solution.stability = stability_analysis(problem, &solution);
            return Ok(solution);
        }
        let drift_e = (outcome.state.listings.e / initial.listings.e).ln().abs();
        let drift_y = (outcome.state.listings.y / initial.listings.y).ln().abs();
        states.push(outcome.state);
        if drift_e > span || drift_y > span {
            let periods = states.len() - 1;
            return Err(Error::Diverged {
                message: format!(
                    "listings left the admissible span after {periods} periods; \
                     the adjustment process is unstable at these parameters"
                ),
                trajectory: Box::new(Trajectory {
                    states,
                    converged: false,
                    diverged: true,
                    periods,
                }),
            });
        }
    }
    let periods = states.len() - 1;
    Err(Error::Diverged {
        message: format!("no convergence within {MAX_SOLVE_PERIODS} periods"),
        trajectory: Box::new(Trajectory {
            states,
            converged: false,
            diverged: false,
            periods,
        }),
    })
}

/// Solves a problem with whatever closure it carries. `ElasticEntry` needs a
/// starting state.
pub fn solve(
    problem: &EquilibriumProblem,
    tolerance: f64,
    initial: Option<&MarketState>,
    damping: f64,
) -> Result<EquilibriumSolution> {
    match problem.closure {
        Closure::FixedTotal { .. } => solve_fixed_total(problem, tolerance, DEFAULT_GRID_POINTS),
        Closure::ElasticEntry { .. } => {
            let start = initial
                .ok_or_else(|| Error::invalid("an ElasticEntry solve needs an initial state"))?;
            solve_elastic_entry(problem, tolerance, start, damping)
        }
    }
}

/// Per-site changes between two solved states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDelta {
    pub listings: f64,
    pub usage: f64,
}

/// Before/after record of a fee-policy change.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualReport {
    pub before: EquilibriumSolution,
    pub after: EquilibriumSolution,
    pub deltas: PerPlatform<StateDelta>,
    /// Indifference residual (E net minus Y net) at the pre-change
    /// equilibrium state evaluated under the post-change fees: its sign is
    /// the direction listings flow on impact. With positive feedback the
    /// interior root itself shifts *against* this flow, so read root deltas
    /// together with this field.
    pub impact_residual_at_base: f64,
}

/// Solves the same market under two fee regimes (all non-fee parameters
/// identical) and reports the signed changes plus the impact flow direction.
pub fn counterfactual_compare(
    base: &EquilibriumProblem,
    modified_fees: PerPlatform<FeeTerms>,
    tolerance: f64,
    initial: Option<&MarketState>,
) -> Result<CounterfactualReport> {
    let before = solve(base, tolerance, initial, DEFAULT_DAMPING)
        .map_err(|e| Error::validation(format!("base scenario failed: {e}")))?;
    let modified = base.with_fees(modified_fees);
    let after = solve(&modified, tolerance, Some(&before.state), DEFAULT_DAMPING)
        .map_err(|e| Error::validation(format!("modified scenario failed: {e}")))?;
    let deltas = PerPlatform::new(
        StateDelta {
            listings: after.state.listings.e - before.state.listings.e,
            usage: after.state.usage.e - before.state.usage.e,
        },
        StateDelta {
            listings: after.state.listings.y - before.state.listings.y,
            usage: after.state.usage.y - before.state.usage.y,
        },
    );
    let impact_residual_at_base = indifference_residual(&before.state, &base.rev, &modified_fees)?;
    Ok(CounterfactualReport {
        before,
        after,
        deltas,
        impact_residual_at_base,
    })
}
