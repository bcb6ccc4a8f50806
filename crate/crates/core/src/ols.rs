//! Ordinary least squares on the normal equations, plus the two estimating
//! equations used by the analysis pipeline: the revenue elasticity fit and the
//! pooled usage regression.
//!
//! Designs here are tiny (at most three columns), so the solver is an
//! explicitly pivoted Gaussian elimination on the normal equations with the
//! inverse assembled alongside for classical standard errors. Intercept
//! models are solved on centered moments to keep the system well conditioned.

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::platform::{PlatformId, UsageMetric};

/// Result of one least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Centered R-squared; reported only for intercept models.
    pub r_squared: Option<f64>,
    pub n_observations: usize,
    pub residuals: Vec<f64>,
    /// 1-norm condition estimate of the normal-equations matrix. Worth
    /// flagging to users when it exceeds 1e8.
    pub condition_number: f64,
}

impl OlsFit {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }
}

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting and
/// returns `(x, a^-1)`. `a` must be square.
fn solve_with_inverse(a: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = a.len();
    // augmented [A | I | rhs]
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            row.push(rhs[i]);
            row
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = scale.max(1.0) * 1e-13;
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty pivot range");
        if m[pivot_row][col].abs() <= tol {
            return Err(Error::SingularDesign(format!(
                "pivot {col} below tolerance; regressors are collinear"
            )));
        }
        m.swap(col, pivot_row);
        let pivot = m[col][col];
        for j in col..(2 * k + 1) {
            m[col][j] /= pivot;
        }
        for i in 0..k {
            if i == col {
                continue;
            }
            let factor = m[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..(2 * k + 1) {
                m[i][j] -= factor * m[col][j];
            }
        }
    }
    let x: Vec<f64> = (0..k).map(|i| m[i][2 * k]).collect();
    let inv: Vec<Vec<f64>> = (0..k).map(|i| m[i][k..2 * k].to_vec()).collect();
    Ok((x, inv))
}

fn one_norm(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    (0..k)
        .map(|j| (0..k).map(|i| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Least squares of `response` on the given regressor columns, optionally
/// with an intercept prepended. Coefficients solve the normal equations;
/// standard errors use the classical estimate `rss / (n - k)`.
pub fn ols(
    columns: &[Vec<f64>],
    response: &[f64],
    intercept: bool,
    labels: &[&str],
) -> Result<OlsFit> {
    let n = response.len();
    let p = columns.len();
    if labels.len() != p {
        return Err(Error::invalid("one label required per regressor column"));
    }
    for c in columns {
        if c.len() != n {
            return Err(Error::invalid(
                "regressor columns and response must have equal length",
            ));
        }
    }
    let k = p + usize::from(intercept);
    if k == 0 {
        return Err(Error::invalid("no regressors"));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} observations cannot identify {k} parameters"
        )));
    }

    let mut terms: Vec<String> = Vec::with_capacity(k);
    if intercept {
        terms.push("const".to_string());
    }
    terms.extend(labels.iter().map(|s| s.to_string()));

    let (coefficients, xtx_inv, fitted): (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) = if intercept {
        let y_mean = response.iter().sum::<f64>() / n as f64;
        let means: Vec<f64> = columns
            .iter()
            .map(|c| c.iter().sum::<f64>() / n as f64)
            .collect();
        // centered normal equations
        let mut s = vec![vec![0.0; p]; p];
        let mut zy = vec![0.0; p];
        for t in 0..n {
            for i in 0..p {
                let zi = columns[i][t] - means[i];
                zy[i] += zi * (response[t] - y_mean);
                for j in i..p {
                    s[i][j] += zi * (columns[j][t] - means[j]);
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                s[i][j] = s[j][i];
            }
        }
        let (beta, s_inv) = solve_with_inverse(&s, &zy)?;
        let intercept_hat = y_mean - means.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
        // full (X'X)^-1 from the centered blocks
        let mut inv = vec![vec![0.0; k]; k];
        let sm: Vec<f64> = (0..p)
            .map(|i| (0..p).map(|j| s_inv[i][j] * means[j]).sum())
            .collect();
        inv[0][0] = 1.0 / n as f64 + means.iter().zip(&sm).map(|(m, v)| m * v).sum::<f64>();
        for i in 0..p {
            inv[0][i + 1] = -sm[i];
            inv[i + 1][0] = -sm[i];
            for j in 0..p {
                inv[i + 1][j + 1] = s_inv[i][j];
            }
        }
        let mut coef = Vec::with_capacity(k);
        coef.push(intercept_hat);
        coef.extend(beta);
        let fitted: Vec<f64> = (0..n)
            .map(|t| {
                coef[0]
                    + columns
                        .iter()
                        .zip(&coef[1..])
                        .map(|(c, b)| c[t] * b)
                        .sum::<f64>()
            })
            .collect();
        (coef, inv, fitted)
    } else {
        let mut a = vec![vec![0.0; p]; p];
        let mut xy = vec![0.0; p];
        for t in 0..n {
            for i in 0..p {
                xy[i] += columns[i][t] * response[t];
                for j in i..p {
                    a[i][j] += columns[i][t] * columns[j][t];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                a[i][j] = a[j][i];
            }
        }
        let (coef, inv) = solve_with_inverse(&a, &xy)?;
        let fitted: Vec<f64> = (0..n)
            .map(|t| {
                columns
                    .iter()
                    .zip(&coef)
                    .map(|(c, b)| c[t] * b)
                    .sum::<f64>()
            })
            .collect();
        (coef, inv, fitted)
    };

    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    if cfg!(debug_assertions) {
        // normal equations: residuals orthogonal to every regressor column
        let y_norm = response.iter().map(|v| v * v).sum::<f64>().sqrt();
        let check = |col: &dyn Fn(usize) -> f64| -> f64 {
            (0..n).map(|t| col(t) * residuals[t]).sum::<f64>()
        };
        if intercept {
            debug_assert!(check(&|_| 1.0).abs() <= 1e-8 * y_norm.max(1.0));
        }
        for c in columns {
            debug_assert!(check(&|t| c[t]).abs() <= 1e-8 * y_norm.max(1.0));
        }
    }
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = rss / (n - k) as f64;
    let standard_errors: Vec<f64> = (0..k).map(|i| (sigma2 * xtx_inv[i][i]).sqrt()).collect();

    let r_squared = if intercept {
        let y_mean = response.iter().sum::<f64>() / n as f64;
        let tss: f64 = response.iter().map(|y| (y - y_mean).powi(2)).sum();
        if tss > 0.0 {
            Some(1.0 - rss / tss)
        } else {
            None
        }
    } else {
        None
    };

    // condition of the normal-equations matrix, from the explicit inverse
    let condition_number = {
        let mut a_full = vec![vec![0.0; k]; k];
        let col = |i: usize, t: usize| -> f64 {
            if intercept {
                if i == 0 {
                    1.0
                } else {
                    columns[i - 1][t]
                }
            } else {
                columns[i][t]
            }
        };
        for i in 0..k {
            for j in 0..k {
                a_full[i][j] = (0..n).map(|t| col(i, t) * col(j, t)).sum();
            }
        }
        one_norm(&a_full) * one_norm(&xtx_inv)
    };

    Ok(OlsFit {
        terms,
        coefficients,
        standard_errors,
        r_squared,
        n_observations: n,
        residuals,
        condition_number,
    })
}

/// Weekly regressor of the revenue estimating equation:
/// `x_t = ln(U_e/L_e) - ln(U_y/L_y)` over complete weeks.
fn usage_gap_regressor(panel: &Panel, metric: UsageMetric) -> Result<Vec<f64>> {
    let complete = panel.complete_weeks(metric);
    let mut xs = Vec::new();
    for week in complete.weeks() {
        let mut ratio = [0.0f64; 2];
        for (slot, site) in PlatformId::BOTH.into_iter().enumerate() {
            let obs = complete
                .get(week, site)
                .expect("complete week has both sites");
            let usage = obs.usage(metric).expect("complete week has the metric");
            if !(usage > 0.0) || !(obs.listings > 0.0) {
                return Err(Error::validation(format!(
                    "week {week} site {site}: non-positive usage/listing ratio"
                )));
            }
            ratio[slot] = usage / obs.listings;
        }
        xs.push(ratio[0].ln() - ratio[1].ln());
    }
    Ok(xs)
}

/// Estimates the revenue elasticity with respect to potential bidders by a
/// single-coefficient, no-intercept regression of the constant response
/// `-ln(1 - premium)` on the weekly usage-per-listing gap.
pub fn estimate_revenue_elasticity(
    panel: &Panel,
    premium: f64,
    metric: UsageMetric,
) -> Result<OlsFit> {
    if !(premium > 0.0 && premium < 1.0) {
        return Err(Error::invalid(format!(
            "effective premium {premium} outside (0, 1)"
        )));
    }
    let xs = usage_gap_regressor(panel, metric)?;
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} complete weeks for {metric}; need at least 2"
        )));
    }
    let y = -(1.0 - premium).ln();
    let response = vec![y; n];
    ols(&[xs], &response, false, &["bidder_elasticity"])
}

/// Pooled usage regression over all (week, site) rows:
/// `ln U = const + own_elasticity ln L_own + rival_elasticity ln L_rival`.
/// Coefficients come back ordered (const, own, rival).
pub fn estimate_usage_equation(panel: &Panel, metric: UsageMetric) -> Result<OlsFit> {
    let complete = panel.complete_weeks(metric);
    let mut own = Vec::new();
    let mut rival = Vec::new();
    let mut response = Vec::new();
    for week in complete.weeks() {
        for site in PlatformId::BOTH {
            let obs = complete.get(week, site).expect("complete week");
            let rival_obs = complete.get(week, site.rival()).expect("complete week");
            own.push(obs.listings.ln());
            rival.push(rival_obs.listings.ln());
            response.push(obs.usage(metric).expect("complete metric").ln());
        }
    }
    if response.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} pooled observations for {metric}; need at least 4",
            response.len()
        )));
    }
    ols(
        &[own, rival],
        &response,
        true,
        &["own_listings", "rival_listings"],
    )
    .map_err(|e| match e {
        Error::SingularDesign(msg) => Error::SingularDesign(format!(
            "{msg}; own and rival log-listings are collinear across the pooled rows"
        )),
        other => other,
    })
}
