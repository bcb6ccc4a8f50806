//! Weekly two-platform panel: ingestion, validation, listwise deletion of
//! incomplete weeks, summary statistics, and synthetic generation for
//! estimator validation.
//!
//! CSV schema (UTF-8, header required):
//! `week,site,listings_thousands,unique_visitors_thousands,page_views_thousands`
//! with site in {E, Y} and an empty field meaning missing. The serializer
//! emits six significant digits.

use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{usage_level, UsageParams};
use crate::platform::{PerPlatform, PlatformId, UsageMetric};

pub const CSV_HEADER: &str =
    "week,site,listings_thousands,unique_visitors_thousands,page_views_thousands";

/// One platform-week row. Listings are always present; usage fields may be
/// missing. All present quantities are strictly positive, in thousands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeeklyObservation {
    pub week: u32,
    pub site: PlatformId,
    pub listings: f64,
    pub unique_visitors: Option<f64>,
    pub page_views: Option<f64>,
}

impl WeeklyObservation {
    pub fn usage(&self, metric: UsageMetric) -> Option<f64> {
        match metric {
            UsageMetric::UniqueVisitors => self.unique_visitors,
            UsageMetric::PageViews => self.page_views,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.week == 0 {
            return Err(Error::validation("week indices start at 1"));
        }
        if !(self.listings > 0.0) || !self.listings.is_finite() {
            return Err(Error::validation(format!(
                "week {} site {}: listings must be strictly positive",
                self.week, self.site
            )));
        }
        for (label, v) in [
            ("unique visitors", self.unique_visitors),
            ("page views", self.page_views),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::validation(format!(
                        "week {} site {}: {label} must be strictly positive when present",
                        self.week, self.site
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A validated panel: at most one observation per (week, site), stored in
/// (week, site) order. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    observations: Vec<WeeklyObservation>,
}

impl Panel {
    pub fn from_observations(mut observations: Vec<WeeklyObservation>) -> Result<Panel> {
        for obs in &observations {
            obs.validate()?;
        }
        observations.sort_by_key(|o| (o.week, o.site));
        for pair in observations.windows(2) {
            if pair[0].week == pair[1].week && pair[0].site == pair[1].site {
                return Err(Error::validation(format!(
                    "duplicate observation for week {} site {}",
                    pair[0].week, pair[0].site
                )));
            }
        }
        Ok(Panel { observations })
    }

    pub fn observations(&self) -> &[WeeklyObservation] {
        &self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn get(&self, week: u32, site: PlatformId) -> Option<&WeeklyObservation> {
        self.observations
            .binary_search_by_key(&(week, site), |o| (o.week, o.site))
            .ok()
            .map(|i| &self.observations[i])
    }

    /// Distinct weeks in ascending order.
    pub fn weeks(&self) -> Vec<u32> {
        let mut weeks: Vec<u32> = self.observations.iter().map(|o| o.week).collect();
        weeks.dedup();
        weeks
    }

    /// Weeks where both sites report the metric.
    pub fn complete_week_ids(&self, metric: UsageMetric) -> Vec<u32> {
        self.weeks()
            .into_iter()
            .filter(|&w| {
                PlatformId::BOTH
                    .into_iter()
                    .all(|site| self.get(w, site).and_then(|o| o.usage(metric)).is_some())
            })
            .collect()
    }

    /// Listwise deletion: the panel restricted to weeks complete for the
    /// metric on both sites. Idempotent, never adds weeks.
    pub fn complete_weeks(&self, metric: UsageMetric) -> Panel {
        let keep = self.complete_week_ids(metric);
        Panel {
            observations: self
                .observations
                .iter()
                .filter(|o| keep.binary_search(&o.week).is_ok())
                .copied()
                .collect(),
        }
    }

    /// Parses the CSV schema above. Lines starting with `#` are comments.
    /// Rejects malformed rows (with the line number), non-positive listings,
    /// and duplicate (week, site) keys.
    pub fn parse(text: &str) -> Result<Panel> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = reader.records();
        let header = match rows.next() {
            Some(h) => h.map_err(csv_error)?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        let expected: Vec<&str> = CSV_HEADER.split(',').collect();
        let got: Vec<&str> = header.iter().map(str::trim).collect();
        if got != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("header must be '{CSV_HEADER}'"),
            });
        }
        let mut observations = Vec::new();
        for record in rows {
            let record = record.map_err(csv_error)?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            if record.len() != 5 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 5 fields, got {}", record.len()),
                });
            }
            let field = |i: usize| record.get(i).unwrap_or_default().trim();
            let week: u32 = field(0).parse().map_err(|_| Error::Parse {
                line,
                message: format!("malformed week '{}'", field(0)),
            })?;
            let site = PlatformId::from_str(field(1)).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            let number = |i: usize, label: &str| -> Result<Option<f64>> {
                let raw = field(i);
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                    line,
                    message: format!("malformed {label} '{raw}'"),
                })
            };
            let listings = number(2, "listings")?.ok_or_else(|| Error::Parse {
                line,
                message: "listings are required".into(),
            })?;
            observations.push(WeeklyObservation {
                week,
                site,
                listings,
                unique_visitors: number(3, "unique visitors")?,
                page_views: number(4, "page views")?,
            });
        }
        Panel::from_observations(observations)
    }

    /// Serializes back to the CSV schema, six significant digits per value.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(64 * (self.observations.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for o in &self.observations {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                o.week,
                o.site,
                format_sig(o.listings),
                o.unique_visitors.map(format_sig).unwrap_or_default(),
                o.page_views.map(format_sig).unwrap_or_default(),
            ));
        }
        out
    }

    /// Per-site means over present values plus usage-per-listing ratios and
    /// complete-week counts. Errors on an empty panel.
    pub fn summary_stats(&self) -> Result<SummaryStats> {
        if self.is_empty() {
            return Err(Error::InsufficientData("empty panel".into()));
        }
        let mean_of = |values: Vec<f64>| -> Option<f64> {
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        let site_rows = |site: PlatformId| -> Vec<&WeeklyObservation> {
            self.observations
                .iter()
                .filter(|o| o.site == site)
                .collect()
        };
        let mut listings_mean = PerPlatform::splat(f64::NAN);
        let mut uv_mean = PerPlatform::splat(None);
        let mut pv_mean = PerPlatform::splat(None);
        let mut uv_ratio = PerPlatform::splat(None);
        let mut pv_ratio = PerPlatform::splat(None);
        for site in PlatformId::BOTH {
            let rows = site_rows(site);
            if rows.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "panel has no observations for site {site}"
                )));
            }
            listings_mean[site] = rows.iter().map(|o| o.listings).sum::<f64>() / rows.len() as f64;
            uv_mean[site] = mean_of(rows.iter().filter_map(|o| o.unique_visitors).collect());
            pv_mean[site] = mean_of(rows.iter().filter_map(|o| o.page_views).collect());
            uv_ratio[site] = mean_of(
                rows.iter()
                    .filter_map(|o| o.unique_visitors.map(|u| u / o.listings))
                    .collect(),
            );
            pv_ratio[site] = mean_of(
                rows.iter()
                    .filter_map(|o| o.page_views.map(|u| u / o.listings))
                    .collect(),
            );
        }
        Ok(SummaryStats {
            weeks: self.weeks().len(),
            listings_mean,
            unique_visitors_mean: uv_mean,
            page_views_mean: pv_mean,
            visitors_per_listing_mean: uv_ratio,
            pages_per_listing_mean: pv_ratio,
            complete_weeks_uv: self.complete_week_ids(UsageMetric::UniqueVisitors).len(),
            complete_weeks_pv: self.complete_week_ids(UsageMetric::PageViews).len(),
        })
    }

    /// The observed mean state (listings and the chosen usage metric),
    /// suitable for calibration.
    pub fn mean_state(&self, metric: UsageMetric) -> Result<crate::model::MarketState> {
        let stats = self.summary_stats()?;
        let usage_mean = match metric {
            UsageMetric::UniqueVisitors => stats.unique_visitors_mean,
            UsageMetric::PageViews => stats.page_views_mean,
        };
        let usage = PerPlatform::new(
            usage_mean.e.ok_or_else(|| {
                Error::InsufficientData(format!("no {metric} observations for site E"))
            })?,
            usage_mean.y.ok_or_else(|| {
                Error::InsufficientData(format!("no {metric} observations for site Y"))
            })?,
        );
        crate::model::MarketState::new(stats.listings_mean, usage)
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or_default();
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Six significant digits, plain decimal notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = 5 - mag;
    if decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub weeks: usize,
    pub listings_mean: PerPlatform<f64>,
    pub unique_visitors_mean: PerPlatform<Option<f64>>,
    pub page_views_mean: PerPlatform<Option<f64>>,
    pub visitors_per_listing_mean: PerPlatform<Option<f64>>,
    pub pages_per_listing_mean: PerPlatform<Option<f64>>,
    pub complete_weeks_uv: usize,
    pub complete_weeks_pv: usize,
}

/// A smooth weekly listings path around per-site means: multiplicative
/// cosine swings of the given log amplitude, phase-shifted across sites so
/// the two series are not collinear.
pub fn seasonal_listings(
    base: &PerPlatform<f64>,
    weeks: u32,
    amplitude: f64,
) -> PerPlatform<Vec<f64>> {
    let mut out = PerPlatform::new(Vec::new(), Vec::new());
    for week in 0..weeks {
        let angle = std::f64::consts::TAU * week as f64 / 17.0;
        out.e.push(base.e * (amplitude * (angle + 0.7).cos()).exp());
        out.y.push(base.y * (amplitude * (angle + 3.4).cos()).exp());
    }
    out
}

/// Generates a panel whose usage follows the usage equation times
/// multiplicative log-normal noise: `U = usage_level(...) * exp(eps)`,
/// `eps ~ N(0, noise_sd^2)` i.i.d. Deterministic given the seed; the same
/// seed yields a bit-identical panel. Only the chosen metric's column is
/// filled. Cells in `missing` are left absent.
pub fn synthesize_panel(
    usage: &UsageParams,
    metric: UsageMetric,
    listings: &PerPlatform<Vec<f64>>,
    noise_sd: f64,
    seed: u64,
    missing: &[(u32, PlatformId)],
) -> Result<Panel> {
    if listings.e.len() != listings.y.len() {
        return Err(Error::invalid(
            "both platforms need the same number of weekly listings",
        ));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::invalid("noise standard deviation must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observations = Vec::with_capacity(listings.e.len() * 2);
    for (idx, (&l_e, &l_y)) in listings.e.iter().zip(&listings.y).enumerate() {
        let week = idx as u32 + 1;
        for site in PlatformId::BOTH {
            let (own, rival) = match site {
                PlatformId::E => (l_e, l_y),
                PlatformId::Y => (l_y, l_e),
            };
            let z: f64 = rng.sample(StandardNormal);
            let value = usage_level(usage, own, rival, site)? * (noise_sd * z).exp();
            let present = !missing.contains(&(week, site));
            let (uv, pv) = match metric {
                UsageMetric::UniqueVisitors => (present.then_some(value), None),
                UsageMetric::PageViews => (None, present.then_some(value)),
            };
            observations.push(WeeklyObservation {
                week,
                site,
                listings: own,
                unique_visitors: uv,
                page_views: pv,
            });
        }
    }
    Panel::from_observations(observations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_panel_csv() -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for week in 1..=17 {
            for site in ["E", "Y"] {
                let listings = if site == "E" { 5800.0 } else { 3300.0 } + week as f64;
                let missing = (week == 9 && site == "E") || (week == 1 && site == "Y");
                let uv = if missing {
                    String::new()
                } else {
                    format_sig(listings * 1.05)
                };
                let pv = if missing {
                    String::new()
                } else {
                    format_sig(listings * 20.0)
                };
                out.push_str(&format!(
                    "{week},{site},{},{uv},{pv}\n",
                    format_sig(listings)
                ));
            }
        }
        out
    }

    #[test]
    fn parses_panel_with_missing_cells() {
        let panel = Panel::parse(&sample_panel_csv()).unwrap();
        assert_eq!(panel.observations().len(), 34);
        assert_eq!(
            panel.complete_week_ids(UsageMetric::UniqueVisitors).len(),
            15
        );
        assert_eq!(panel.complete_week_ids(UsageMetric::PageViews).len(), 15);
        assert!(panel
            .get(9, PlatformId::E)
            .unwrap()
            .unique_visitors
            .is_none());
        assert!(panel.get(1, PlatformId::Y).unwrap().page_views.is_none());
    }

    #[test]
    fn empty_body_gives_empty_panel() {
        let panel = Panel::parse(&format!("{CSV_HEADER}\n")).unwrap();
        assert!(panel.is_empty());
        assert_eq!(
            panel.complete_week_ids(UsageMetric::UniqueVisitors).len(),
            0
        );
        assert!(panel.summary_stats().is_err());
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let text = format!("{CSV_HEADER}\n1,E,100,,\n2,E,not_a_number,,\n");
        match Panel::parse(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("listings"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let zero = format!("{CSV_HEADER}\n1,E,0,,\n");
        assert!(matches!(Panel::parse(&zero), Err(Error::Validation(_))));

        let dup = format!("{CSV_HEADER}\n1,E,10,,\n1,E,11,,\n");
        match Panel::parse(&dup) {
            Err(Error::Validation(msg)) => assert!(msg.contains("duplicate"), "{msg}"),
            other => panic!("expected duplicate error, got {other:?}"),
        }

        let bad_header = "week,site,listings\n";
        assert!(matches!(
            Panel::parse(bad_header),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn complete_weeks_filters_and_is_idempotent() {
        let panel = Panel::parse(&sample_panel_csv()).unwrap();
        let complete = panel.complete_weeks(UsageMetric::UniqueVisitors);
        assert_eq!(complete.weeks().len(), 15);
        assert!(!complete.weeks().contains(&1));
        assert!(!complete.weeks().contains(&9));
        let again = complete.complete_weeks(UsageMetric::UniqueVisitors);
        assert_eq!(again, complete);
    }

    #[test]
    fn complete_weeks_handles_all_missing() {
        let mut obs = Vec::new();
        for week in 1..=4 {
            obs.push(WeeklyObservation {
                week,
                site: PlatformId::E,
                listings: 10.0,
                unique_visitors: Some(5.0),
                page_views: None,
            });
            obs.push(WeeklyObservation {
                week,
                site: PlatformId::Y,
                listings: 8.0,
                unique_visitors: None,
                page_views: None,
            });
        }
        let panel = Panel::from_observations(obs).unwrap();
        assert!(panel.complete_weeks(UsageMetric::UniqueVisitors).is_empty());
    }

    #[test]
    fn single_week_stats_echo_the_week() {
        let obs = vec![
            WeeklyObservation {
                week: 3,
                site: PlatformId::E,
                listings: 100.0,
                unique_visitors: Some(110.0),
                page_views: Some(2000.0),
            },
            WeeklyObservation {
                week: 3,
                site: PlatformId::Y,
                listings: 50.0,
                unique_visitors: Some(10.0),
                page_views: Some(30.0),
            },
        ];
        let stats = Panel::from_observations(obs)
            .unwrap()
            .summary_stats()
            .unwrap();
        assert_eq!(stats.listings_mean.e, 100.0);
        assert_eq!(stats.unique_visitors_mean.y, Some(10.0));
        assert_eq!(stats.visitors_per_listing_mean.e, Some(1.1));
        assert_eq!(stats.complete_weeks_uv, 1);
    }

    #[test]
    fn serialize_parse_round_trip() {
        let panel = Panel::parse(&sample_panel_csv()).unwrap();
        let text = panel.serialize();
        let back = Panel::parse(&text).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn mean_state_requires_the_metric_on_both_sites() {
        let obs = vec![
            WeeklyObservation {
                week: 1,
                site: PlatformId::E,
                listings: 100.0,
                unique_visitors: Some(110.0),
                page_views: None,
            },
            WeeklyObservation {
                week: 1,
                site: PlatformId::Y,
                listings: 50.0,
                unique_visitors: Some(10.0),
                page_views: None,
            },
        ];
        let panel = Panel::from_observations(obs).unwrap();
        assert!(panel.mean_state(UsageMetric::UniqueVisitors).is_ok());
        assert!(matches!(
            panel.mean_state(UsageMetric::PageViews),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn format_sig_examples() {
        assert_eq!(format_sig(5822.0), "5822.00");
        assert_eq!(format_sig(763638.0), "763638");
        assert_eq!(format_sig(0.157), "0.157000");
        assert_eq!(format_sig(1234567.0), "1234570");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn synthesized_panel_is_deterministic() {
        let usage = UsageParams::new(1.5, -0.5, 2.0);
        let listings = PerPlatform::new(
            (1..=10).map(|t| 100.0 + t as f64).collect::<Vec<_>>(),
            (1..=10).map(|t| 80.0 - t as f64).collect::<Vec<_>>(),
        );
        let a = synthesize_panel(
            &usage,
            UsageMetric::UniqueVisitors,
            &listings,
            0.05,
            42,
            &[],
        )
        .unwrap();
        let b = synthesize_panel(
            &usage,
            UsageMetric::UniqueVisitors,
            &listings,
            0.05,
            42,
            &[],
        )
        .unwrap();
        assert_eq!(a, b);
        let c = synthesize_panel(
            &usage,
            UsageMetric::UniqueVisitors,
            &listings,
            0.05,
            43,
            &[],
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_free_synthesis_matches_usage_level() {
        let usage = UsageParams::new(1.989, -1.876, 6.564);
        let listings = PerPlatform::new(vec![5822.0, 5900.0], vec![3349.0, 3300.0]);
        let panel =
            synthesize_panel(&usage, UsageMetric::UniqueVisitors, &listings, 0.0, 7, &[]).unwrap();
        let obs = panel.get(1, PlatformId::E).unwrap();
        let expect = usage_level(&usage, 5822.0, 3349.0, PlatformId::E).unwrap();
        assert!((obs.unique_visitors.unwrap() - expect).abs() / expect < 1e-15);
    }

    #[test]
    fn missing_pattern_is_respected() {
        let usage = UsageParams::new(1.0, 0.0, 0.0);
        let listings = PerPlatform::new(vec![10.0; 5], vec![20.0; 5]);
        let panel = synthesize_panel(
            &usage,
            UsageMetric::UniqueVisitors,
            &listings,
            0.0,
            1,
            &[(2, PlatformId::Y)],
        )
        .unwrap();
        assert!(panel
            .get(2, PlatformId::Y)
            .unwrap()
            .unique_visitors
            .is_none());
        assert_eq!(
            panel.complete_week_ids(UsageMetric::UniqueVisitors).len(),
            4
        );
    }
}
