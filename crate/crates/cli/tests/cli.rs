//! End-to-end checks of the command-line surface: outputs, exit statuses,
//! config merging, and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn duopoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duopoly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn write_canonical_panel(dir: &Path) -> std::path::PathBuf {
    let out = duopoly(&["data", "synth", "--canonical"]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.join("canonical.csv");
    std::fs::write(&path, stdout(&out)).unwrap();
    path
}

#[test]
fn fees_quote_prints_reference_total() {
    let out = duopoly(&[
        "fees",
        "quote",
        "--platform",
        "E",
        "--opening",
        "15.00",
        "--closing",
        "50.00",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().last().unwrap(), "2.425");
    assert!(text.contains("# opening = 15.00"));
}

#[test]
fn fees_quote_rejects_sub_cent_opening() {
    let out = duopoly(&[
        "fees",
        "quote",
        "--platform",
        "E",
        "--opening",
        "0.00",
        "--closing",
        "50.00",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("0.01"), "{}", stderr(&out));
}

#[test]
fn fees_invert_unreachable_target_is_a_solver_error() {
    let out = duopoly(&[
        "fees",
        "invert",
        "--alpha",
        "0.000001",
        "--opening",
        "15.00",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("achievable range"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn fees_alpha_with_custom_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schedules.kv");
    std::fs::write(
        &path,
        "insertion.E.0 = 0.01,inf,1.00\ninsertion.Y.0 = 0.01,inf,0.25\n",
    )
    .unwrap();
    let out = duopoly(&[
        "fees",
        "alpha",
        "--opening",
        "10.00",
        "--closing",
        "50.00",
        "--schedules",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    // (1.00 - 0.25) / 50 = 0.015
    assert_eq!(stdout(&out).lines().last().unwrap(), "0.015");
}

#[test]
fn data_parse_rejects_malformed_rows_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "week,site,listings_thousands,unique_visitors_thousands,page_views_thousands\n\
         1,E,100,,\n1,E,90,,\n",
    )
    .unwrap();
    let out = duopoly(&["data", "parse", "--panel", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("duplicate"), "{}", stderr(&out));

    let out = duopoly(&[
        "data",
        "parse",
        "--panel",
        dir.path().join("missing.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn data_stats_reports_complete_weeks() {
    let dir = tempfile::tempdir().unwrap();
    let panel = write_canonical_panel(dir.path());
    let out = duopoly(&["data", "stats", "--panel", panel.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("complete_weeks_uv = 15"), "{text}");
    assert!(text.contains("5822.000000"), "{text}");
}

#[test]
fn synth_parse_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let panel = write_canonical_panel(dir.path());
    let out = duopoly(&["data", "parse", "--panel", panel.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    // normalized output re-parses to the same panel
    let normalized = dir.path().join("normalized.csv");
    std::fs::write(&normalized, stdout(&out)).unwrap();
    let again = duopoly(&["data", "parse", "--panel", normalized.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(stdout(&out)), strip(stdout(&again)));
}

#[test]
fn estimate_revenue_on_canonical_panel() {
    let dir = tempfile::tempdir().unwrap();
    let panel = write_canonical_panel(dir.path());
    let out = duopoly(&[
        "estimate",
        "revenue",
        "--panel",
        panel.to_str().unwrap(),
        "--alpha",
        "0.04",
        "--metric",
        "uv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("bidder_elasticity"), "{text}");
    assert!(text.contains("0.0212") || text.contains("0.0213"), "{text}");
}

#[test]
fn estimate_usage_formats() {
    let dir = tempfile::tempdir().unwrap();
    let panel = write_canonical_panel(dir.path());
    let csv = duopoly(&[
        "--format",
        "csv",
        "estimate",
        "usage",
        "--panel",
        panel.to_str().unwrap(),
    ]);
    assert!(stdout(&csv).contains("term,estimate,std_error\n"));
    let md = duopoly(&[
        "--format",
        "markdown",
        "estimate",
        "usage",
        "--panel",
        panel.to_str().unwrap(),
    ]);
    assert!(stdout(&md).contains("| term | estimate | std_error |"));
}

#[test]
fn equilibrium_solve_with_config_and_param_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("params.kv");
    std::fs::write(
        &config,
        "rev.b = 0.3\nuse.beta1 = 0.5\nuse.beta2 = 0.2\nuse.c = 2.0\n",
    )
    .unwrap();
    let out = duopoly(&[
        "equilibrium",
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--param",
        "rev.b=0.4",
        "--total",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    // the flag wins over the file and the resolved value is echoed
    assert!(text.contains("# rev.b = 0.4"), "{text}");
    assert!(text.contains("designated share_e = 0.500000"), "{text}");
}

#[test]
fn unknown_parameter_keys_are_rejected() {
    let out = duopoly(&[
        "equilibrium",
        "solve",
        "--param",
        "rev.zeta=1",
        "--total",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("unknown parameter key"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn corner_market_exits_with_solver_status() {
    let out = duopoly(&[
        "equilibrium",
        "solve",
        "--param",
        "rev.b=0.3",
        "--param",
        "rev.xi.Y=-10",
        "--param",
        "use.beta1=0.5",
        "--param",
        "use.c=2.0",
        "--total",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("corner"), "{}", stderr(&out));
}

#[test]
fn equilibrium_dynamics_records_path() {
    let out = duopoly(&[
        "equilibrium",
        "dynamics",
        "--param",
        "rev.a=20",
        "--param",
        "rev.b=0.5",
        "--param",
        "use.c=3.0",
        "--closure",
        "elastic-entry",
        "--outside",
        "20.0",
        "--initial-le",
        "55",
        "--initial-ly",
        "45",
        "--damping",
        "1.0",
        "--periods",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("period"), "{text}");
    assert!(text.contains("converged = true"), "{text}");
}

#[test]
fn equilibrium_counterfactual_reports_three_blocks() {
    let out = duopoly(&[
        "equilibrium",
        "counterfactual",
        "--param",
        "rev.a=30",
        "--param",
        "rev.b=0.1",
        "--param",
        "use.beta1=1.2",
        "--param",
        "use.beta2=1.0",
        "--param",
        "use.c=1.0",
        "--total",
        "400",
        "--new-alpha-e",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("scenario = before"), "{text}");
    assert!(text.contains("scenario = after"), "{text}");
    assert!(text.contains("scenario = delta"), "{text}");
    assert!(text.contains("impact_residual_at_base"), "{text}");
}

#[test]
fn synth_is_deterministic_per_seed() {
    let a = duopoly(&[
        "data",
        "synth",
        "--noise-sd",
        "0.05",
        "--seed",
        "9",
        "--param",
        "use.beta1=1.5",
        "--param",
        "use.c=2.0",
    ]);
    let b = duopoly(&[
        "data",
        "synth",
        "--noise-sd",
        "0.05",
        "--seed",
        "9",
        "--param",
        "use.beta1=1.5",
        "--param",
        "use.c=2.0",
    ]);
    assert_eq!(stdout(&a), stdout(&b));
    let c = duopoly(&[
        "data",
        "synth",
        "--noise-sd",
        "0.05",
        "--seed",
        "10",
        "--param",
        "use.beta1=1.5",
        "--param",
        "use.c=2.0",
    ]);
    assert_ne!(stdout(&a), stdout(&c));
}
