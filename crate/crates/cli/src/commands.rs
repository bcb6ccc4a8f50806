//! Subcommand implementations. Each command resolves its configuration,
//! echoes it into the output header, runs core operations, and renders the
//! results; all numbers printed here come from exactly one core call.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use duopoly_core::canonical;
use duopoly_core::config::KvFile;
use duopoly_core::equilibrium::{
    counterfactual_compare, iterate_dynamics, solve_elastic_entry, solve_fixed_total, Closure,
    EquilibriumProblem, DEFAULT_DAMPING, DEFAULT_GRID_POINTS, DEFAULT_TOLERANCE,
};
use duopoly_core::error::{Error, Result};
use duopoly_core::fees::{FeeTerms, SchedulePair};
use duopoly_core::model::{
    anchor_revenue_scale, calibrate_residuals, params_from_kv, params_to_kv, platform_net_revenue,
    RevenueParams, UsageParams,
};
use duopoly_core::money::Money;
use duopoly_core::ols::{estimate_revenue_elasticity, estimate_usage_equation};
use duopoly_core::panel::{seasonal_listings, synthesize_panel, Panel};
use duopoly_core::platform::{PerPlatform, PlatformId, UsageMetric};

use crate::render::{
    render_counterfactual, render_fee_table, render_fit, render_solution, render_stats,
    render_trajectory, Format,
};
use crate::{
    DataCmd, EquilibriumCmd, EstimateCmd, FeesCmd, ParseArgs, QuoteArgs, ReplicateArgs, SolveArgs,
    StatsArgs, SynthArgs,
};

struct Output {
    format: Format,
    buffer: String,
}

impl Output {
    fn new(command: &str, format: Format) -> Output {
        let mut buffer = String::new();
        let _ = writeln!(buffer, "# duopoly {command}");
        let _ = writeln!(buffer, "# format = {}", format.label());
        Output { format, buffer }
    }

    fn config(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.buffer, "# {key} = {value}");
    }

    fn section(&mut self, title: &str) {
        match self.format {
            Format::Markdown => {
                let _ = writeln!(self.buffer, "\n## {title}\n");
            }
            _ => {
                let _ = writeln!(self.buffer, "\n# == {title} ==");
            }
        }
    }

    fn line(&mut self, body: impl std::fmt::Display) {
        let _ = writeln!(self.buffer, "{body}");
    }

    fn push(&mut self, rendered: &str) {
        self.buffer.push_str(rendered);
    }

    fn finish(self) -> String {
        self.buffer
    }
}

fn load_schedules(path: &Option<PathBuf>) -> Result<(SchedulePair, String)> {
    match path {
        None => Ok((SchedulePair::builtin_2001(), "builtin-2001".into())),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok((SchedulePair::from_kv_text(&text)?, p.display().to_string()))
        }
    }
}

/// Resolves model parameters: config file first, `--param key=value` flags
/// win. Unknown keys are rejected.
fn resolve_params(
    config: &Option<PathBuf>,
    overrides: &[String],
) -> Result<(RevenueParams, UsageParams, KvFile)> {
    let mut kv = match config {
        Some(p) => KvFile::parse(&std::fs::read_to_string(p)?)?,
        None => KvFile::default(),
    };
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("--param expects key=value, got '{item}'")))?;
        kv.set(key.trim(), value.trim());
    }
    let (rev, usage) = params_from_kv(&kv)?;
    let resolved = KvFile::parse(&params_to_kv(&rev, &usage))?;
    Ok((rev, usage, resolved))
}

fn echo_params(out: &mut Output, kv: &KvFile) {
    for entry in kv.entries() {
        out.config(&entry.key, &entry.value);
    }
}

fn read_panel(path: &PathBuf) -> Result<Panel> {
    Panel::parse(&std::fs::read_to_string(path)?)
}

pub fn fees(cmd: FeesCmd, format: Format) -> Result<String> {
    match cmd {
        FeesCmd::Quote(args) => fees_quote(args, format),
        FeesCmd::Alpha(args) => {
            let (pair, label) = load_schedules(&args.schedules)?;
            let premium = pair.effective_premium(args.opening, args.closing)?;
            let mut out = Output::new("fees alpha", format);
            out.config("schedules", label);
            out.config("opening", args.opening);
            out.config("closing", args.closing);
            out.line(format_args!("{premium}"));
            Ok(out.finish())
        }
        FeesCmd::Invert(args) => {
            let (pair, label) = load_schedules(&args.schedules)?;
            let closing = pair.implied_closing_value(args.alpha, args.opening)?;
            let mut out = Output::new("fees invert", format);
            out.config("schedules", label);
            out.config("alpha", args.alpha);
            out.config("opening", args.opening);
            out.line(closing);
            Ok(out.finish())
        }
    }
}

fn fees_quote(args: QuoteArgs, format: Format) -> Result<String> {
    let (pair, label) = load_schedules(&args.schedules)?;
    let platform = PlatformId::from_str(&args.platform)?;
    let total = pair.get(platform).total_fee(args.opening, args.closing)?;
    let mut out = Output::new("fees quote", format);
    out.config("schedules", label);
    out.config("platform", platform);
    out.config("opening", args.opening);
    out.config("closing", args.closing);
    out.line(total);
    Ok(out.finish())
}

pub fn data(cmd: DataCmd, format: Format) -> Result<String> {
    match cmd {
        DataCmd::Parse(args) => data_parse(args, format),
        DataCmd::Stats(args) => data_stats(args, format),
        DataCmd::Synth(args) => data_synth(args, format),
    }
}

fn data_parse(args: ParseArgs, format: Format) -> Result<String> {
    let panel = read_panel(&args.panel)?;
    let mut out = Output::new("data parse", format);
    out.config("panel", args.panel.display());
    out.config("rows", panel.observations().len());
    out.push(&panel.serialize());
    Ok(out.finish())
}

fn data_stats(args: StatsArgs, format: Format) -> Result<String> {
    let panel = read_panel(&args.panel)?;
    let stats = panel.summary_stats()?;
    let mut out = Output::new("data stats", format);
    out.config("panel", args.panel.display());
    out.push(&render_stats(&stats, format));
    Ok(out.finish())
}

fn data_synth(args: SynthArgs, format: Format) -> Result<String> {
    let mut out = Output::new("data synth", format);
    if args.canonical {
        out.config("canonical", true);
        out.push(&canonical::canonical_panel().serialize());
        return Ok(out.finish());
    }
    let (_, usage, kv) = resolve_params(&args.config, &args.param)?;
    echo_params(&mut out, &kv);
    out.config("weeks", args.weeks);
    out.config("metric", &args.metric);
    out.config("noise_sd", args.noise_sd);
    out.config("seed", args.seed);
    out.config("listings_e", args.listings_e);
    out.config("listings_y", args.listings_y);
    let metric = UsageMetric::from_str(&args.metric)?;
    let listings = seasonal_listings(
        &PerPlatform::new(args.listings_e, args.listings_y),
        args.weeks,
        0.02,
    );
    let panel = synthesize_panel(&usage, metric, &listings, args.noise_sd, args.seed, &[])?;
    out.push(&panel.serialize());
    Ok(out.finish())
}

pub fn estimate(cmd: EstimateCmd, format: Format) -> Result<String> {
    match cmd {
        EstimateCmd::Revenue(args) => {
            let panel = read_panel(&args.panel)?;
            let metric = UsageMetric::from_str(&args.metric)?;
            let fit = estimate_revenue_elasticity(&panel, args.alpha, metric)?;
            let mut out = Output::new("estimate revenue", format);
            out.config("panel", args.panel.display());
            out.config("alpha", args.alpha);
            out.config("metric", metric);
            out.push(&render_fit(&fit, format));
            Ok(out.finish())
        }
        EstimateCmd::Usage(args) => {
            let panel = read_panel(&args.panel)?;
            let metric = UsageMetric::from_str(&args.metric)?;
            let fit = estimate_usage_equation(&panel, metric)?;
            let mut out = Output::new("estimate usage", format);
            out.config("panel", args.panel.display());
            out.config("metric", metric);
            out.push(&render_fit(&fit, format));
            Ok(out.finish())
        }
    }
}

fn fee_terms_from(
    alpha_e: f64,
    fee_e: f64,
    alpha_y: f64,
    fee_y: f64,
) -> Result<PerPlatform<FeeTerms>> {
    Ok(PerPlatform::new(
        FeeTerms::new(alpha_e, fee_e)?,
        FeeTerms::new(alpha_y, fee_y)?,
    ))
}

fn build_problem(args: &SolveArgs) -> Result<(EquilibriumProblem, KvFile)> {
    let (rev, usage, kv) = resolve_params(&args.config, &args.param)?;
    let closure = match args.closure.as_str() {
        "fixed-total" => Closure::FixedTotal {
            total_listings: args
                .total
                .ok_or_else(|| Error::invalid("--total is required for the fixed-total closure"))?,
        },
        "elastic-entry" => Closure::ElasticEntry {
            outside_option: args.outside.ok_or_else(|| {
                Error::invalid("--outside is required for the elastic-entry closure")
            })?,
        },
        other => {
            return Err(Error::invalid(format!(
                "unknown closure '{other}' (expected fixed-total or elastic-entry)"
            )))
        }
    };
    let problem = EquilibriumProblem {
        rev,
        usage,
        fees: fee_terms_from(args.alpha_e, args.fee_e, args.alpha_y, args.fee_y)?,
        closure,
        metric: UsageMetric::from_str(&args.metric)?,
        reference_share: args.reference_share,
    };
    Ok((problem, kv))
}

fn echo_problem(out: &mut Output, args: &SolveArgs, kv: &KvFile) {
    echo_params(out, kv);
    out.config("closure", &args.closure);
    if let Some(t) = args.total {
        out.config("total", t);
    }
    if let Some(v) = args.outside {
        out.config("outside", v);
    }
    out.config("alpha_e", args.alpha_e);
    out.config("fee_e", args.fee_e);
    out.config("alpha_y", args.alpha_y);
    out.config("fee_y", args.fee_y);
    out.config("metric", &args.metric);
    out.config("tol", args.tol);
    if let Some(s) = args.reference_share {
        out.config("reference_share", s);
    }
}

pub fn equilibrium(cmd: EquilibriumCmd, format: Format) -> Result<String> {
    match cmd {
        EquilibriumCmd::Solve(args) => {
            let (problem, kv) = build_problem(&args)?;
            let mut out = Output::new("equilibrium solve", format);
            echo_problem(&mut out, &args, &kv);
            let solution = match problem.closure {
                Closure::FixedTotal { .. } => {
                    out.config("grid", args.grid);
                    solve_fixed_total(&problem, args.tol, args.grid)?
                }
                Closure::ElasticEntry { .. } => {
                    let initial = initial_state(&problem, &args)?;
                    out.config("damping", args.damping);
                    solve_elastic_entry(&problem, args.tol, &initial, args.damping)?
                }
            };
            out.push(&render_solution(&solution, format));
            Ok(out.finish())
        }
        EquilibriumCmd::Dynamics(args) => {
            let (problem, kv) = build_problem(&args.solve)?;
            let mut out = Output::new("equilibrium dynamics", format);
            echo_problem(&mut out, &args.solve, &kv);
            out.config("damping", args.solve.damping);
            out.config("periods", args.periods);
            let initial = initial_state(&problem, &args.solve)?;
            let trajectory = iterate_dynamics(
                &problem,
                &initial,
                args.solve.damping,
                args.periods,
                args.solve.tol,
            )?;
            out.push(&render_trajectory(&trajectory, format));
            Ok(out.finish())
        }
        EquilibriumCmd::Counterfactual(args) => {
            let (problem, kv) = build_problem(&args.solve)?;
            let mut out = Output::new("equilibrium counterfactual", format);
            echo_problem(&mut out, &args.solve, &kv);
            let new_fees = fee_terms_from(
                args.new_alpha_e.unwrap_or(args.solve.alpha_e),
                args.new_fee_e.unwrap_or(args.solve.fee_e),
                args.new_alpha_y.unwrap_or(args.solve.alpha_y),
                args.new_fee_y.unwrap_or(args.solve.fee_y),
            )?;
            out.config("new_alpha_e", new_fees.e.ad_valorem);
            out.config("new_fee_e", new_fees.e.insertion);
            out.config("new_alpha_y", new_fees.y.ad_valorem);
            out.config("new_fee_y", new_fees.y.insertion);
            let initial = match problem.closure {
                Closure::ElasticEntry { .. } => Some(initial_state(&problem, &args.solve)?),
                Closure::FixedTotal { .. } => None,
            };
            let report =
                counterfactual_compare(&problem, new_fees, args.solve.tol, initial.as_ref())?;
            out.push(&render_counterfactual(&report, format));
            Ok(out.finish())
        }
    }
}

fn initial_state(
    problem: &EquilibriumProblem,
    args: &SolveArgs,
) -> Result<duopoly_core::model::MarketState> {
    let (l_e, l_y) = match (args.initial_le, args.initial_ly) {
        (Some(e), Some(y)) => (e, y),
        _ => {
            return Err(Error::invalid(
                "--initial-le and --initial-ly are required for elastic-entry runs",
            ))
        }
    };
    problem.induced_state(l_e, l_y)
}

/// The full desk-scale replication: fee checks, canonical panel statistics,
/// both regression tables, calibration, the solved 2001 market, the
/// fall-2000 fee counterfactual, and a seeded estimator-validation block.
pub fn replicate(args: ReplicateArgs, format: Format) -> Result<String> {
    let mut out = Output::new("replicate", format);
    out.config("seed", args.seed);

    // fee engine against the reference sales
    let pair = SchedulePair::builtin_2001();
    out.section("fee schedules (2001)");
    out.push(&render_fee_table(&pair, format));
    out.section("reference sale quotes");
    let open = Money::from_cents(1500);
    for closing_cents in [5000u64, 10000] {
        let closing = Money::from_cents(closing_cents);
        let quote_e = pair.e.total_fee(open, closing)?;
        let quote_y = pair.y.total_fee(open, closing)?;
        let premium = pair.effective_premium(open, closing)?;
        out.line(format_args!(
            "opening {open} closing {closing}: total_e = {quote_e}, total_y = {quote_y}, \
             premium = {premium}"
        ));
        let implied = pair.implied_closing_value(premium, open)?;
        out.line(format_args!(
            "implied closing at premium {premium}: {implied}"
        ));
    }

    // canonical panel
    let panel = canonical::canonical_panel();
    out.section("canonical panel summary");
    let stats = panel.summary_stats()?;
    out.push(&render_stats(&stats, format));

    // revenue elasticity table
    out.section("revenue elasticity estimates");
    let mut elasticity_uv_004 = 0.0;
    for premium in [0.04, 0.033, 0.025] {
        for metric in UsageMetric::BOTH {
            let fit = estimate_revenue_elasticity(&panel, premium, metric)?;
            if premium == 0.04 && metric == UsageMetric::UniqueVisitors {
                elasticity_uv_004 = fit.coefficients[0];
            }
            out.line(format_args!(
                "premium {premium} metric {metric}: estimate = {:.6}, std_error = {:.6}, n = {}",
                fit.coefficients[0], fit.standard_errors[0], fit.n_observations
            ));
        }
    }

    // usage regressions
    let mut usage_fit_uv = None;
    for metric in UsageMetric::BOTH {
        out.section(&format!("usage regression ({metric})"));
        let fit = estimate_usage_equation(&panel, metric)?;
        out.push(&render_fit(&fit, format));
        if metric == UsageMetric::UniqueVisitors {
            usage_fit_uv = Some(fit);
        }
    }
    let usage_fit_uv = usage_fit_uv.expect("unique-visitor fit");

    // calibration at the median-sale premium, unique visitors
    out.section("calibration (unique visitors, premium 0.04)");
    let observed = panel.mean_state(UsageMetric::UniqueVisitors)?;
    let rev = RevenueParams::new(1.0, elasticity_uv_004)?;
    let usage = UsageParams::new(
        usage_fit_uv.coefficient("own_listings").expect("own"),
        usage_fit_uv.coefficient("rival_listings").expect("rival"),
        usage_fit_uv.coefficient("const").expect("const"),
    );
    let cal = calibrate_residuals(&observed, &rev, &usage, UsageMetric::UniqueVisitors, 0.04)?;
    let rev = anchor_revenue_scale(&cal.rev, &observed, 50.0)?;
    out.line(format_args!(
        "bidder_elasticity = {:.6}",
        rev.bidder_elasticity
    ));
    out.line(format_args!("revenue_scale = {:.6}", rev.scale));
    out.line(format_args!("site_factor_y = {:.6}", rev.site_factor.y));
    out.line(format_args!(
        "site_preference_e = {:.6}, site_preference_y = {:.6}",
        cal.usage.site_preference.e, cal.usage.site_preference.y
    ));

    // solved 2001 market
    out.section("equilibrium (fixed total, 2001 fees as effective premium)");
    let total = observed.listings.e + observed.listings.y;
    let problem = EquilibriumProblem {
        rev,
        usage: cal.usage,
        fees: PerPlatform::new(FeeTerms::new(0.04, 0.0)?, FeeTerms::FREE),
        closure: Closure::FixedTotal {
            total_listings: total,
        },
        metric: UsageMetric::UniqueVisitors,
        reference_share: Some(observed.listings.e / total),
    };
    let solution = solve_fixed_total(&problem, DEFAULT_TOLERANCE, DEFAULT_GRID_POINTS)?;
    out.push(&render_solution(&solution, format));

    // counterfactual: platform Y's fees switched from the fall-2000 free
    // schedule to the 2001 schedule, at the median reference sale
    out.section("counterfactual: Y fees fall-2000 -> 2001");
    let median_open = Money::from_cents(1500);
    let median_close = Money::from_cents(5000);
    let fall_terms = SchedulePair::builtin_fall_2000().fee_terms(median_open, median_close)?;
    let now_terms = pair.fee_terms(median_open, median_close)?;
    let base = problem.with_fees(fall_terms);
    let report = counterfactual_compare(&base, now_terms, DEFAULT_TOLERANCE, None)?;
    out.push(&render_counterfactual(&report, format));
    out.section("counterfactual adjustment path (elastic entry at the base common net revenue)");
    let outside = platform_net_revenue(&report.before.state, &base.rev, &base.fees, PlatformId::E)?;
    let dynamic = base
        .with_fees(now_terms)
        .with_closure(Closure::ElasticEntry {
            outside_option: outside,
        });
    let path = iterate_dynamics(
        &dynamic,
        &report.before.state,
        DEFAULT_DAMPING,
        60,
        DEFAULT_TOLERANCE,
    )?;
    let first = path.states.first().expect("nonempty path");
    let last = path.states.last().expect("nonempty path");
    out.line(format_args!(
        "start: listings_e = {:.6}, listings_y = {:.6}",
        first.listings.e, first.listings.y
    ));
    out.line(format_args!(
        "after {} periods: listings_e = {:.6}, listings_y = {:.6}",
        path.periods, last.listings.e, last.listings.y
    ));
    let direction_e = if last.listings.e > first.listings.e {
        "rising"
    } else {
        "falling"
    };
    let direction_y = if last.listings.y < first.listings.y {
        "falling"
    } else {
        "rising"
    };
    out.line(format_args!(
        "adjustment direction: listings_e {direction_e}, listings_y {direction_y}"
    ));

    // seeded estimator validation
    out.section("estimator validation (multiplicative log-normal noise)");
    let listings = canonical::canonical_listings();
    let truth = UsageParams::new(1.989, -1.876, 6.564);
    let replications = 24;
    let mut covered = 0;
    for rep in 0..replications {
        let synth = synthesize_panel(
            &truth,
            UsageMetric::UniqueVisitors,
            &listings,
            0.05,
            args.seed.wrapping_add(rep),
            &[],
        )?;
        let fit = estimate_usage_equation(&synth, UsageMetric::UniqueVisitors)?;
        let own = fit.coefficient("own_listings").expect("own");
        let se = fit.standard_errors[1];
        if (own - truth.own_elasticity).abs() <= 3.0 * se {
            covered += 1;
        }
    }
    out.line(format_args!(
        "own-elasticity coverage within 3 standard errors: {covered}/{replications} \
         (noise_sd 0.05, seed {})",
        args.seed
    ));

    Ok(out.finish())
}
