//! Per-cell aggregates and scaling fits computed from result rows. Both
//! `sweep` and `plot` go through here, so the slope printed in a summary and
//! the one annotated on a chart are the same number.

use mrw_bandit::analysis::{fit_scaling, loglog_fit, mean_and_se, GridPoint};
use mrw_bandit::io::{PlotRow, ResultRow};
use mrw_bandit::plot::{Chart, Series};
use serde::{Deserialize, Serialize};

/// `(x, y, yerr)` triples of one series.
pub type Points = Vec<(f64, f64, f64)>;

/// Metrics aggregated per cell, in plot-data order.
pub const METRICS: [&str; 3] = ["R", "M", "loss_regret"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub policy: String,
    pub c: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub trials: u64,
    pub failures: u64,
    pub mean_r: f64,
    pub se_r: f64,
    pub mean_m: f64,
    pub se_m: f64,
    pub mean_loss_regret: f64,
    pub se_loss_regret: f64,
}

impl Cell {
    pub fn metric(&self, metric: &str) -> Option<(f64, f64)> {
        match metric {
            "R" => Some((self.mean_r, self.se_r)),
            "M" => Some((self.mean_m, self.se_m)),
            "loss_regret" => Some((self.mean_loss_regret, self.se_loss_regret)),
            _ => None,
        }
    }
}

/// Groups rows by `(policy, c, T)` in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<Cell> {
    let mut keys: Vec<(String, f64, u64)> = Vec::new();
    for r in rows {
        let key = (r.policy.clone(), r.c, r.horizon);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(policy, c, horizon)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.policy == policy && r.c == c && r.horizon == horizon)
                .collect();
            let ok: Vec<&ResultRow> = group.iter().copied().filter(|r| r.error.is_empty()).collect();
            let stat = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
                let values: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                mean_and_se(&values)
            };
            let (mean_r, se_r) = stat(&|r| r.regret);
            let (mean_m, se_m) = stat(&|r| r.switches.map(|m| m as f64));
            let (mean_loss_regret, se_loss_regret) = stat(&|r| r.loss_regret);
            Cell {
                policy,
                c,
                horizon,
                trials: group.len() as u64,
                failures: (group.len() - ok.len()) as u64,
                mean_r,
                se_r,
                mean_m,
                se_m,
                mean_loss_regret,
                se_loss_regret,
            }
        })
        .collect()
}

/// Series label: the policy, plus the cost when several costs are present.
fn label(policy: &str, c: f64, multiple_costs: bool) -> String {
    if multiple_costs {
        format!("{policy} c={c}")
    } else {
        policy.to_string()
    }
}

pub fn plot_rows(cells: &[Cell]) -> Vec<PlotRow> {
    let multiple = has_multiple_costs(cells);
    let mut out = Vec::new();
    for metric in METRICS {
        for cell in cells {
            let (y, yerr) = cell.metric(metric).expect("known metric");
            out.push(PlotRow {
                policy: label(&cell.policy, cell.c, multiple),
                metric: metric.to_string(),
                x: cell.horizon as f64,
                y,
                yerr,
            });
        }
    }
    out
}

fn has_multiple_costs(cells: &[Cell]) -> bool {
    cells.windows(2).any(|w| w[0].c != w[1].c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub series: String,
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval; present with at least four grid points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_ci: Option<[f64; 2]>,
    pub points: usize,
}

/// Power-law fit of one series: the scaling fit with its interval at four or
/// more points, a plain log-log fit at two or three, nothing otherwise.
pub fn fit_series(name: &str, metric: &str, points: &[(f64, f64, f64)]) -> Option<Fit> {
    let grid: Vec<GridPoint> = points.iter().map(|&(x, mean, se)| GridPoint { x, mean, se }).collect();
    let (slope, intercept, ci) = if grid.len() >= 4 {
        let f = fit_scaling(grid).ok()?;
        (f.slope, f.intercept, Some([f.slope_ci.0, f.slope_ci.1]))
    } else {
        let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.1)).collect();
        let f = loglog_fit(&pts).ok()?;
        (f.slope, f.intercept, None)
    };
    Some(Fit {
        series: name.to_string(),
        metric: metric.to_string(),
        slope,
        intercept,
        slope_ci: ci,
        points: points.len(),
    })
}

/// Splits plot rows of one metric into named series, in order of first
/// appearance.
pub fn series_of(rows: &[PlotRow], metric: &str) -> Vec<(String, Points)> {
    let mut out: Vec<(String, Points)> = Vec::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        match out.iter_mut().find(|(name, _)| *name == r.policy) {
            Some((_, pts)) => pts.push((r.x, r.y, r.yerr)),
            None => out.push((r.policy.clone(), vec![(r.x, r.y, r.yerr)])),
        }
    }
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

pub fn fits(rows: &[PlotRow]) -> Vec<Fit> {
    METRICS
        .iter()
        .flat_map(|m| {
            series_of(rows, m)
                .into_iter()
                .filter_map(move |(name, pts)| fit_series(&name, m, &pts))
        })
        .collect()
}

/// Slope annotation as shown on charts.
pub fn slope_note(fit: Option<&Fit>) -> String {
    match fit {
        Some(f) => format!("slope = {:.3}", f.slope),
        None => "slope = n/a".to_string(),
    }
}

/// Log-log chart of one metric against `T`, one series per policy.
pub fn scaling_chart(rows: &[PlotRow], metric: &str) -> Chart {
    let (title, y_label) = match metric {
        "R" => ("Regret vs T", "mean regret R"),
        "M" => ("Switches vs T", "mean switches M"),
        _ => ("Loss regret vs T", "mean loss regret"),
    };
    let mut chart = Chart {
        title: title.to_string(),
        x_label: "T".to_string(),
        y_label: y_label.to_string(),
        log_x: true,
        log_y: true,
        ..Chart::default()
    };
    for (name, points) in series_of(rows, metric) {
        let fit = fit_series(&name, metric, &points);
        chart.notes.push(slope_note(fit.as_ref()));
        chart.series.push(Series {
            name,
            points,
            fit: fit.map(|f| (f.slope, f.intercept)),
        });
    }
    chart
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(policy: &str, horizon: u64, r: f64, m: u64) -> ResultRow {
        ResultRow {
            trial: 0,
            seed: 0,
            horizon,
            k: 2,
            c: 1.0,
            policy: policy.into(),
            regret: Some(r),
            regret_unclipped: None,
            switches: Some(m),
            best_fixed_loss: Some(0.0),
            plays_of_chi: None,
            policy_seed: 0,
            loss_regret: Some(r - m as f64),
            error: String::new(),
        }
    }

    #[test]
    fn synthetic_exponent_is_recovered() {
        let rows: Vec<ResultRow> = (8..=13)
            .flat_map(|j| {
                let t = 1u64 << j;
                let r = 2.0 * (t as f64).powf(0.6);
                [row("stub", t, r, 3), row("stub", t, r, 3)]
            })
            .collect();
        let cells = aggregate(&rows);
        assert_eq!(cells.len(), 6);
        let fit = fits(&plot_rows(&cells)).into_iter().find(|f| f.metric == "R").unwrap();
        assert!((fit.slope - 0.6).abs() < 1e-9);
        let note = slope_note(Some(&fit));
        assert_eq!(note, "slope = 0.600");
    }

    #[test]
    fn failed_rows_are_counted_not_averaged() {
        let mut bad = row("p", 64, 0.0, 0);
        bad.regret = None;
        bad.switches = None;
        bad.loss_regret = None;
        bad.error = "boom".into();
        let cells = aggregate(&[row("p", 64, 4.0, 2), bad]);
        assert_eq!((cells[0].trials, cells[0].failures, cells[0].mean_r), (2, 1, 4.0));
    }
}
