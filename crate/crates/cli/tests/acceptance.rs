//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test -p duopoly-cli --test acceptance -- --nocapture`
//! to see every line.

use std::process::Command;

use duopoly_core::canonical::{canonical_listings, canonical_panel, CANONICAL_MISSING};
use duopoly_core::equilibrium::{
    counterfactual_compare, iterate_dynamics, solve_fixed_total, stability_analysis,
    Classification, Closure, EquilibriumProblem, FeedbackSign, DEFAULT_GRID_POINTS,
    DEFAULT_TOLERANCE,
};
use duopoly_core::fees::{FeeTerms, SchedulePair};
use duopoly_core::model::{
    anchor_revenue_scale, calibrate_residuals, expected_revenue, indifference_residual,
    platform_net_revenue, potential_bidders, usage_level, RevenueParams, UsageParams,
};
use duopoly_core::money::Money;
use duopoly_core::ols::{estimate_revenue_elasticity, estimate_usage_equation};
use duopoly_core::panel::synthesize_panel;
use duopoly_core::platform::{PerPlatform, PlatformId, UsageMetric};

fn money(s: &str) -> Money {
    s.parse().unwrap()
}

#[test]
fn acceptance_1_fee_engine_exactness() {
    let pair = SchedulePair::builtin_2001();
    let open = money("15.00");

    let total_50 = pair.e.total_fee(open, money("50.00")).unwrap();
    assert_eq!(total_50.micros(), 2_425_000, "total at 50.00 is 2.425");
    let total_100 = pair.e.total_fee(open, money("100.00")).unwrap();
    assert_eq!(total_100.micros(), 3_675_000, "total at 100.00 is 3.675");

    let rival_50 = pair.y.total_fee(open, money("50.00")).unwrap();
    let rival_100 = pair.y.total_fee(open, money("100.00")).unwrap();
    assert_eq!(
        total_50.signed_diff(rival_50),
        2_075_000,
        "differential 2.075"
    );
    assert_eq!(
        total_100.signed_diff(rival_100),
        3_325_000,
        "differential 3.325"
    );

    let premium_50 = pair.effective_premium(open, money("50.00")).unwrap();
    let premium_100 = pair.effective_premium(open, money("100.00")).unwrap();
    assert!((premium_50 - 0.0415).abs() < 1e-15, "premium {premium_50}");
    assert!(
        (premium_100 - 0.03325).abs() < 1e-15,
        "premium {premium_100}"
    );

    println!("acceptance 1 (fee engine exactness): PASS");
}

#[test]
fn acceptance_2_fee_table_round_trip() {
    let pair = SchedulePair::builtin_2001();
    let cases_e: [(&str, &str); 5] = [
        ("5.00", "0.30"),
        ("15.00", "0.55"),
        ("30.00", "1.10"),
        ("120.00", "2.20"),
        ("250.00", "3.30"),
    ];
    let cases_y: [(&str, &str); 5] = [
        ("5.00", "0.20"),
        ("15.00", "0.35"),
        ("30.00", "0.75"),
        ("120.00", "1.50"),
        ("250.00", "1.50"),
    ];
    for (opening, fee) in cases_e {
        assert_eq!(pair.e.insertion_fee(money(opening)).unwrap(), money(fee));
    }
    for (opening, fee) in cases_y {
        assert_eq!(pair.y.insertion_fee(money(opening)).unwrap(), money(fee));
    }
    // boundary cents on both sides of every printed edge
    let edges_e: [(&str, &str, &str); 4] = [
        ("9.99", "10.00", "0.30/0.55"),
        ("24.99", "25.00", "0.55/1.10"),
        ("49.99", "50.00", "1.10/2.20"),
        ("199.99", "200.00", "2.20/3.30"),
    ];
    let fees_e = ["0.30", "0.55", "1.10", "2.20", "3.30"];
    let fees_y = ["0.20", "0.35", "0.75", "1.50", "1.50"];
    for (i, (below, above, _)) in edges_e.iter().enumerate() {
        assert_eq!(
            pair.e.insertion_fee(money(below)).unwrap(),
            money(fees_e[i])
        );
        assert_eq!(
            pair.e.insertion_fee(money(above)).unwrap(),
            money(fees_e[i + 1])
        );
        assert_eq!(
            pair.y.insertion_fee(money(below)).unwrap(),
            money(fees_y[i])
        );
        assert_eq!(
            pair.y.insertion_fee(money(above)).unwrap(),
            money(fees_y[i + 1])
        );
    }
    println!("acceptance 2 (fee table round trip): PASS");
}

#[test]
fn acceptance_3_revenue_elasticity_replication() {
    let started = std::time::Instant::now();
    let panel = canonical_panel();
    let cases = [
        (0.04, UsageMetric::UniqueVisitors, 0.0216),
        (0.04, UsageMetric::PageViews, 0.0074),
        (0.033, UsageMetric::UniqueVisitors, 0.0178),
        (0.033, UsageMetric::PageViews, 0.0061),
        (0.025, UsageMetric::UniqueVisitors, 0.0134),
        (0.025, UsageMetric::PageViews, 0.0046),
    ];
    for (premium, metric, expect) in cases {
        let fit = estimate_revenue_elasticity(&panel, premium, metric).unwrap();
        let estimate = fit.coefficients[0];
        assert!(
            (estimate / expect - 1.0).abs() < 0.05,
            "premium {premium} {metric}: {estimate} vs {expect}"
        );
        assert_eq!(fit.n_observations, 15);
    }
    // closed-form sanity: -ln(0.96) / ln(1.07/0.157) near 0.0213
    let closed_form = -(1.0f64 - 0.04).ln() / (1.07f64 / 0.157).ln();
    assert!((closed_form - 0.0213).abs() < 2e-4);
    assert!(started.elapsed().as_secs() < 1, "runtime budget");
    println!("acceptance 3 (revenue elasticity replication, 6 cases within 5%): PASS");
}

#[test]
fn acceptance_4_usage_estimator_validity() {
    let started = std::time::Instant::now();
    let listings = canonical_listings();
    let truth = UsageParams::new(1.989, -1.876, 6.564);

    // noise-free round trip to 1e-10 relative
    let clean = synthesize_panel(
        &truth,
        UsageMetric::UniqueVisitors,
        &listings,
        0.0,
        5,
        &CANONICAL_MISSING,
    )
    .unwrap();
    let fit = estimate_usage_equation(&clean, UsageMetric::UniqueVisitors).unwrap();
    for (i, expect) in [6.564, 1.989, -1.876].iter().enumerate() {
        assert!(
            (fit.coefficients[i] - expect).abs() / expect.abs() < 1e-10,
            "coefficient {i}"
        );
    }

    // 200 Monte Carlo replications at noise 0.05: 3-SE coverage of the truth
    // in at least 99 percent of runs, residuals orthogonal each run
    let mut covered = 0;
    for rep in 0..200u64 {
        let panel = synthesize_panel(
            &truth,
            UsageMetric::UniqueVisitors,
            &listings,
            0.05,
            40_000 + rep,
            &CANONICAL_MISSING,
        )
        .unwrap();
        let fit = estimate_usage_equation(&panel, UsageMetric::UniqueVisitors).unwrap();
        let own = fit.coefficient("own_listings").unwrap();
        if (own - truth.own_elasticity).abs() <= 3.0 * fit.standard_errors[1] {
            covered += 1;
        }
        // normal equations: residuals orthogonal to the design
        let complete = panel.complete_weeks(UsageMetric::UniqueVisitors);
        let mut response_norm = 0.0f64;
        let mut dots = [0.0f64; 3];
        let mut row = 0;
        for week in complete.weeks() {
            for site in PlatformId::BOTH {
                let obs = complete.get(week, site).unwrap();
                let rival = complete.get(week, site.rival()).unwrap();
                let y = obs.unique_visitors.unwrap().ln();
                response_norm += y * y;
                dots[0] += fit.residuals[row];
                dots[1] += fit.residuals[row] * obs.listings.ln();
                dots[2] += fit.residuals[row] * rival.listings.ln();
                row += 1;
            }
        }
        let response_norm = response_norm.sqrt();
        for dot in dots {
            assert!(dot.abs() < 1e-8 * response_norm, "X'e = {dot}");
        }
    }
    assert!(covered >= 198, "coverage {covered}/200");
    assert!(started.elapsed().as_secs() < 10, "runtime budget");
    println!("acceptance 4 (usage estimator validity, coverage {covered}/200): PASS");
}

#[test]
fn acceptance_5_usage_regression_replication() {
    let panel = canonical_panel();
    let targets = [
        (UsageMetric::UniqueVisitors, 1.989, -1.876),
        (UsageMetric::PageViews, 4.743, -4.718),
    ];
    for (metric, own_target, rival_target) in targets {
        let fit = estimate_usage_equation(&panel, metric).unwrap();
        let own = fit.coefficient("own_listings").unwrap();
        let rival = fit.coefficient("rival_listings").unwrap();
        assert!(own > 0.0, "{metric}: own-listings coefficient positive");
        assert!(rival < 0.0, "{metric}: rival-listings coefficient negative");
        assert!(
            (own / own_target - 1.0).abs() < 0.15,
            "{metric}: own {own} vs {own_target}"
        );
        assert!(
            (rival / rival_target - 1.0).abs() < 0.15,
            "{metric}: rival {rival} vs {rival_target}"
        );
        let r2 = fit.r_squared.unwrap();
        assert!(r2 >= 0.9, "{metric}: R-squared {r2}");
    }
    println!("acceptance 5 (usage regression signs and magnitudes): PASS");
}

#[test]
fn acceptance_6_feedback_classification() {
    let rev = RevenueParams::new(1.0, 0.0216).unwrap();
    let usage = UsageParams::new(1.989, -1.876, 6.564);
    let problem = EquilibriumProblem {
        rev,
        usage,
        fees: PerPlatform::new(FeeTerms::new(0.04, 0.0).unwrap(), FeeTerms::FREE),
        closure: Closure::FixedTotal {
            total_listings: 9171.0,
        },
        metric: UsageMetric::UniqueVisitors,
        reference_share: None,
    };
    // classify at the calibrated observed state
    let observed = duopoly_core::canonical::observed_mean_state(UsageMetric::UniqueVisitors);
    let cal =
        calibrate_residuals(&observed, &rev, &usage, UsageMetric::UniqueVisitors, 0.04).unwrap();
    let problem = EquilibriumProblem {
        rev: cal.rev,
        usage: cal.usage,
        ..problem
    };
    let solution = solve_fixed_total(&problem, DEFAULT_TOLERANCE, 128).unwrap();
    let report = stability_analysis(&problem, &solution);
    assert!(
        (report.own_exponent - 0.0214).abs() < 1e-4,
        "own exponent {}",
        report.own_exponent
    );
    assert_eq!(report.feedback, FeedbackSign::Positive);
    assert_eq!(report.classification, Classification::Stable);
    assert!(report.spectral_radius < 1.0);

    // finite differences through the full composition at step 1e-6
    let log_revenue = |ll_e: f64, ll_y: f64, site: PlatformId| -> f64 {
        let (l_e, l_y) = (ll_e.exp(), ll_y.exp());
        let u = match site {
            PlatformId::E => usage_level(&cal.usage, l_e, l_y, site).unwrap(),
            PlatformId::Y => usage_level(&cal.usage, l_y, l_e, site).unwrap(),
        };
        let l_own = match site {
            PlatformId::E => l_e,
            PlatformId::Y => l_y,
        };
        let n = potential_bidders(&cal.rev, u, l_own).unwrap();
        expected_revenue(&cal.rev, n, site).unwrap().ln()
    };
    let (ll_e, ll_y) = (5822.0f64.ln(), 3349.0f64.ln());
    let h = 1e-6;
    let fd_own = (log_revenue(ll_e + h, ll_y, PlatformId::E)
        - log_revenue(ll_e - h, ll_y, PlatformId::E))
        / (2.0 * h);
    let fd_cross = (log_revenue(ll_e, ll_y + h, PlatformId::E)
        - log_revenue(ll_e, ll_y - h, PlatformId::E))
        / (2.0 * h);
    assert!(
        (fd_own - report.own_exponent).abs() < 1e-6 * report.own_exponent.abs(),
        "own: fd {fd_own} vs {}",
        report.own_exponent
    );
    assert!(
        (fd_cross - report.cross_exponent).abs() < 1e-6 * report.cross_exponent.abs(),
        "cross: fd {fd_cross} vs {}",
        report.cross_exponent
    );
    println!(
        "acceptance 6 (feedback classification: own exponent {:.6}, radius {:.4}, {}): PASS",
        report.own_exponent, report.spectral_radius, report.classification
    );
}

#[test]
fn acceptance_7_equilibrium_solver_contracts() {
    // symmetric market: share one half
    let rev = RevenueParams::new(10.0, 0.3).unwrap();
    let usage = UsageParams::new(0.5, 0.2, 2.0);
    let symmetric = EquilibriumProblem {
        rev,
        usage,
        fees: PerPlatform::splat(FeeTerms::new(0.02, 0.4).unwrap()),
        closure: Closure::FixedTotal {
            total_listings: 200.0,
        },
        metric: UsageMetric::UniqueVisitors,
        reference_share: None,
    };
    let solution = solve_fixed_total(&symmetric, DEFAULT_TOLERANCE, DEFAULT_GRID_POINTS).unwrap();
    assert!(
        (solution.share() - 0.5).abs() < 1e-9,
        "share {}",
        solution.share()
    );

    // calibrated 2001 market: the observed state is a root
    let observed = duopoly_core::canonical::observed_mean_state(UsageMetric::UniqueVisitors);
    let rev = RevenueParams::new(1.0, 0.0216).unwrap();
    let usage = UsageParams::new(1.989, -1.876, 6.564);
    let cal =
        calibrate_residuals(&observed, &rev, &usage, UsageMetric::UniqueVisitors, 0.04).unwrap();
    let rev = anchor_revenue_scale(&cal.rev, &observed, 50.0).unwrap();
    let total = observed.listings.e + observed.listings.y;
    let calibrated = EquilibriumProblem {
        rev,
        usage: cal.usage,
        fees: PerPlatform::new(FeeTerms::new(0.04, 0.0).unwrap(), FeeTerms::FREE),
        closure: Closure::FixedTotal {
            total_listings: total,
        },
        metric: UsageMetric::UniqueVisitors,
        reference_share: Some(observed.listings.e / total),
    };
    let solution = solve_fixed_total(&calibrated, DEFAULT_TOLERANCE, DEFAULT_GRID_POINTS).unwrap();
    for site in PlatformId::BOTH {
        let rel = (solution.state.listings[site] - observed.listings[site]).abs()
            / observed.listings[site];
        assert!(rel < 1e-8, "site {site} listings off by {rel}");
    }

    // every root re-verifies through the model and conserves the total
    for (problem, total) in [(&symmetric, 200.0), (&calibrated, total)] {
        let solution = solve_fixed_total(problem, DEFAULT_TOLERANCE, DEFAULT_GRID_POINTS).unwrap();
        for root in &solution.roots {
            let residual = indifference_residual(&root.state, &problem.rev, &problem.fees).unwrap();
            assert!(residual.abs() < 1e-10, "residual {residual}");
            assert_eq!(
                root.state.listings.e + root.state.listings.y,
                total,
                "exact conservation"
            );
        }
    }
    println!("acceptance 7 (equilibrium solver contracts): PASS");
}

#[test]
fn acceptance_8_counterfactual_direction() {
    // calibrate so the fall-2000 listings stock is the base equilibrium
    // under the fall-2000 fee schedules (platform Y free)
    let rev = RevenueParams::new(1.0, 0.0216).unwrap();
    let usage = UsageParams::new(1.989, -1.876, 6.564);
    let observed_2001 = duopoly_core::canonical::observed_mean_state(UsageMetric::UniqueVisitors);
    let cal_2001 = calibrate_residuals(
        &observed_2001,
        &rev,
        &usage,
        UsageMetric::UniqueVisitors,
        0.04,
    )
    .unwrap();

    let open = money("15.00");
    let close = money("50.00");
    let fall = SchedulePair::builtin_fall_2000();
    let now = SchedulePair::builtin_2001();
    let premium_2000 = fall.effective_premium(open, close).unwrap();
    assert!((premium_2000 - 0.0485).abs() < 1e-12);

    let total_2000 = 5671.0 + 4045.0;
    let state_2000 = EquilibriumProblem {
        rev: cal_2001.rev,
        usage: cal_2001.usage,
        fees: PerPlatform::splat(FeeTerms::FREE),
        closure: Closure::FixedTotal {
            total_listings: total_2000,
        },
        metric: UsageMetric::UniqueVisitors,
        reference_share: None,
    }
    .induced_state(5671.0, 4045.0)
    .unwrap();
    let cal_2000 = calibrate_residuals(
        &state_2000,
        &cal_2001.rev,
        &cal_2001.usage,
        UsageMetric::UniqueVisitors,
        premium_2000,
    )
    .unwrap();
    let rev = anchor_revenue_scale(&cal_2000.rev, &state_2000, 50.0).unwrap();

    let base = EquilibriumProblem {
        rev,
        usage: cal_2000.usage,
        fees: fall.fee_terms(open, close).unwrap(),
        closure: Closure::FixedTotal {
            total_listings: total_2000,
        },
        metric: UsageMetric::UniqueVisitors,
        reference_share: Some(5671.0 / total_2000),
    };
    let new_fees = now.fee_terms(open, close).unwrap();
    let report = counterfactual_compare(&base, new_fees, DEFAULT_TOLERANCE, None).unwrap();

    // the base equilibrium reproduces the fall-2000 listings stock
    assert!((report.before.state.listings.e - 5671.0).abs() < 1e-4);
    assert!((report.before.state.listings.y - 4045.0).abs() < 1e-4);

    // on impact, the new platform-Y fees push listings away from Y toward E
    assert!(
        report.impact_residual_at_base > 0.0,
        "impact residual {}",
        report.impact_residual_at_base
    );

    // and the adjustment path realizes that direction: Y declines
    // considerably, E rises
    let outside =
        platform_net_revenue(&report.before.state, &base.rev, &base.fees, PlatformId::E).unwrap();
    let dynamic = base
        .with_fees(new_fees)
        .with_closure(Closure::ElasticEntry {
            outside_option: outside,
        });
    let path =
        iterate_dynamics(&dynamic, &report.before.state, 0.2, 60, DEFAULT_TOLERANCE).unwrap();
    let first = path.states.first().unwrap();
    let last = path.states.last().unwrap();
    assert!(
        last.listings.y < first.listings.y * 0.995,
        "Y listings {} -> {}",
        first.listings.y,
        last.listings.y
    );
    assert!(
        last.listings.e > first.listings.e,
        "E listings {} -> {}",
        first.listings.e,
        last.listings.e
    );
    println!(
        "acceptance 8 (counterfactual direction: Y {:.0} -> {:.0}, E {:.0} -> {:.0}): PASS",
        first.listings.y, last.listings.y, first.listings.e, last.listings.e
    );
}

#[test]
fn acceptance_9_replication_determinism() {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_duopoly"))
            .args(["replicate", "--seed", "11"])
            .output()
            .expect("binary runs");
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let first = run();
    let second = run();
    assert!(!first.is_empty());
    assert_eq!(first, second, "byte-identical across runs");
    println!("acceptance 9 (replication determinism): PASS");
}
