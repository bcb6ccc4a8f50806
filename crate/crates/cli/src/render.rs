//! Deterministic rendering of core results to text, CSV, or markdown.
//! This layer only formats fields computed elsewhere; it never does
//! arithmetic of its own.

use std::fmt::Write as _;

use clap::ValueEnum;
use duopoly_core::equilibrium::{CounterfactualReport, EquilibriumSolution, Trajectory};
use duopoly_core::fees::SchedulePair;
use duopoly_core::ols::OlsFit;
use duopoly_core::panel::SummaryStats;
use duopoly_core::platform::PlatformId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Markdown,
}

impl Format {
    pub fn label(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Markdown => "markdown",
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// A small column-oriented table that each format knows how to lay out.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Table {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Markdown => {
                let mut out = format!("| {} |\n", self.columns.join(" | "));
                let _ = writeln!(
                    out,
                    "|{}|",
                    self.columns
                        .iter()
                        .map(|_| " --- ")
                        .collect::<Vec<_>>()
                        .join("|")
                );
                for row in &self.rows {
                    let _ = writeln!(out, "| {} |", row.join(" | "));
                }
                out
            }
            Format::Text => {
                let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
                for row in &self.rows {
                    for (i, cell) in row.iter().enumerate() {
                        widths[i] = widths[i].max(cell.len());
                    }
                }
                let mut out = String::new();
                for (i, c) in self.columns.iter().enumerate() {
                    let _ = write!(out, "{:<width$}  ", c, width = widths[i]);
                }
                out.push('\n');
                for row in &self.rows {
                    for (i, cell) in row.iter().enumerate() {
                        let _ = write!(out, "{:<width$}  ", cell, width = widths[i]);
                    }
                    out.push('\n');
                }
                out
            }
        }
    }
}

/// Regression fit in the term/estimate/std_error layout.
pub fn render_fit(fit: &OlsFit, format: Format) -> String {
    let mut table = Table::new(vec!["term", "estimate", "std_error"]);
    for i in 0..fit.terms.len() {
        table.row(vec![
            fit.terms[i].clone(),
            num(fit.coefficients[i]),
            num(fit.standard_errors[i]),
        ]);
    }
    let mut out = table.render(format);
    if let Some(r2) = fit.r_squared {
        out.push_str(&meta_line(format, &format!("r_squared = {}", num(r2))));
    }
    out.push_str(&meta_line(
        format,
        &format!("n_observations = {}", fit.n_observations),
    ));
    if fit.condition_number > 1e8 {
        out.push_str(&meta_line(
            format,
            &format!("condition_number = {:.3e}", fit.condition_number),
        ));
    }
    out
}

fn meta_line(format: Format, body: &str) -> String {
    match format {
        Format::Csv => format!("# {body}\n"),
        Format::Markdown => format!("\n{body}\n"),
        Format::Text => format!("{body}\n"),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn render_stats(stats: &SummaryStats, format: Format) -> String {
    let mut table = Table::new(vec![
        "site",
        "listings_mean",
        "unique_visitors_mean",
        "page_views_mean",
        "visitors_per_listing",
        "pages_per_listing",
    ]);
    for site in PlatformId::BOTH {
        table.row(vec![
            site.to_string(),
            num(stats.listings_mean[site]),
            opt(*stats.unique_visitors_mean.get(site)),
            opt(*stats.page_views_mean.get(site)),
            opt(*stats.visitors_per_listing_mean.get(site)),
            opt(*stats.pages_per_listing_mean.get(site)),
        ]);
    }
    let mut out = table.render(format);
    out.push_str(&meta_line(
        format,
        &format!(
            "weeks = {}, complete_weeks_uv = {}, complete_weeks_pv = {}",
            stats.weeks, stats.complete_weeks_uv, stats.complete_weeks_pv
        ),
    ));
    out
}

pub fn render_fee_table(pair: &SchedulePair, format: Format) -> String {
    let mut table = Table::new(vec!["section", "platform", "lower", "upper", "amount"]);
    for schedule in [&pair.e, &pair.y] {
        for b in &schedule.insertion {
            table.row(vec![
                "insertion".into(),
                schedule.platform.to_string(),
                b.lower.to_string(),
                b.upper
                    .map(|u| u.to_string())
                    .unwrap_or_else(|| "inf".into()),
                b.fee.to_string(),
            ]);
        }
        for t in &schedule.final_value {
            table.row(vec![
                "final_value".into(),
                schedule.platform.to_string(),
                t.lower.to_string(),
                t.upper
                    .map(|u| u.to_string())
                    .unwrap_or_else(|| "inf".into()),
                t.rate.to_string(),
            ]);
        }
    }
    table.render(format)
}

pub fn render_solution(solution: &EquilibriumSolution, format: Format) -> String {
    let mut table = Table::new(vec![
        "root",
        "share_e",
        "listings_e",
        "listings_y",
        "usage_e",
        "usage_y",
        "residual",
    ]);
    for (i, root) in solution.roots.iter().enumerate() {
        table.row(vec![
            i.to_string(),
            num(root.share),
            num(root.state.listings.e),
            num(root.state.listings.y),
            num(root.state.usage.e),
            num(root.state.usage.y),
            format!("{:.3e}", root.residual),
        ]);
    }
    let mut out = table.render(format);
    out.push_str(&meta_line(
        format,
        &format!("closure = {}", solution.closure),
    ));
    out.push_str(&meta_line(
        format,
        &format!(
            "designated share_e = {}, residual = {:.3e}",
            num(solution.share()),
            solution.residual
        ),
    ));
    let s = &solution.stability;
    out.push_str(&meta_line(
        format,
        &format!(
            "feedback = {}, own_exponent = {}, cross_exponent = {}, \
             spectral_radius = {}, classification = {}",
            s.feedback,
            num(s.own_exponent),
            num(s.cross_exponent),
            num(s.spectral_radius),
            s.classification
        ),
    ));
    out
}

pub fn render_trajectory(trajectory: &Trajectory, format: Format) -> String {
    let mut table = Table::new(vec![
        "period",
        "listings_e",
        "listings_y",
        "usage_e",
        "usage_y",
    ]);
    for (i, state) in trajectory.states.iter().enumerate() {
        table.row(vec![
            i.to_string(),
            num(state.listings.e),
            num(state.listings.y),
            num(state.usage.e),
            num(state.usage.y),
        ]);
    }
    let mut out = table.render(format);
    out.push_str(&meta_line(
        format,
        &format!(
            "periods = {}, converged = {}, diverged = {}",
            trajectory.periods, trajectory.converged, trajectory.diverged
        ),
    ));
    out
}

pub fn render_counterfactual(report: &CounterfactualReport, format: Format) -> String {
    let mut out = String::new();
    out.push_str(&meta_line(format, "scenario = before"));
    out.push_str(&render_solution(&report.before, format));
    out.push_str(&meta_line(format, "scenario = after"));
    out.push_str(&render_solution(&report.after, format));
    out.push_str(&meta_line(format, "scenario = delta"));
    let mut table = Table::new(vec!["site", "listings_change", "usage_change"]);
    for site in PlatformId::BOTH {
        table.row(vec![
            site.to_string(),
            num(report.deltas[site].listings),
            num(report.deltas[site].usage),
        ]);
    }
    out.push_str(&table.render(format));
    out.push_str(&meta_line(
        format,
        &format!(
            "impact_residual_at_base = {} (positive means listings flow toward E on impact)",
            num(report.impact_residual_at_base)
        ),
    ));
    out
}
