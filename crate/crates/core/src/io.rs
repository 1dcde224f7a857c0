//! File formats.
//!
//! Every CSV starts with one `#` comment line naming the tool version, the
//! command and its parameters, followed by a header row. Readers skip `#`
//! lines. Metadata sidecars are TOML files next to the CSV (`<stem>.meta.toml`).
//!
//! | file          | columns                                                                      |
//! |---------------|------------------------------------------------------------------------------|
//! | trajectory    | `t,w` for `t = 0..T`                                                         |
//! | losses        | `t,x,loss`, 1-based `t` and `x`, row-major                                   |
//! | results       | `trial,seed,T,k,c,policy,R,R_prime,M,best_fixed_loss,N_chi,policy_seed,loss_regret,error` |
//! | action trace  | `trial,t,x`                                                                  |
//! | plot data     | `policy,metric,x,y,yerr`                                                     |

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{LossSequence, Variant};
use crate::engine::TrialOutcome;
use crate::error::{Error, Result};
use crate::process::{ParentKind, ProcessTrajectory};

pub const TOOL_NAME: &str = "mrw-bandit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `# mrw-bandit <version> <command> key=value ...`
pub fn metadata_line(command: &str, params: &[(&str, String)]) -> String {
    let mut line = format!("# {TOOL_NAME} {TOOL_VERSION} {command}");
    for (k, v) in params {
        line.push(' ');
        line.push_str(k);
        line.push('=');
        line.push_str(v);
    }
    line
}

/// `dir/name.csv` → `dir/name.meta.toml`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    csv_path.with_file_name(format!("{stem}.meta.toml"))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn writer<W: Write>(mut w: W, header: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "{header}")?;
    Ok(csv::Writer::from_writer(w))
}

fn parse_err(path: &str, pos: Option<&csv::Position>, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line: pos.map_or(0, |p| p.line()),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryMeta {
    pub tool: String,
    pub kind: ParentKind,
    pub horizon: u64,
    pub sigma: f64,
    pub seed: u64,
}

impl TrajectoryMeta {
    pub fn of(traj: &ProcessTrajectory) -> Self {
        Self {
            tool: format!("{TOOL_NAME} {TOOL_VERSION}"),
            kind: traj.kind,
            horizon: traj.horizon,
            sigma: traj.sigma,
            seed: traj.seed,
        }
    }
}

pub fn write_trajectory<W: Write>(w: W, traj: &ProcessTrajectory, header: &str) -> Result<()> {
    let mut csv = writer(w, header)?;
    csv.write_record(["t", "w"])?;
    for (t, w) in traj.values.iter().enumerate() {
        csv.write_record([t.to_string(), w.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads `(t, w)` pairs from a trajectory CSV.
pub fn read_trajectory<R: Read>(r: R, name: &str) -> Result<Vec<(u64, f64)>> {
    let mut rdr = reader(r);
    check_headers(&mut rdr, name, &["t", "w"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position();
        let t = rec[0].parse().map_err(|_| parse_err(name, pos, format!("bad round `{}`", &rec[0])))?;
        let w = rec[1].parse().map_err(|_| parse_err(name, pos, format!("bad value `{}`", &rec[1])))?;
        out.push((t, w));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossMeta {
    pub tool: String,
    pub horizon: u64,
    pub arms: usize,
    pub switch_cost: f64,
    pub epsilon: f64,
    pub sigma: f64,
    /// 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Set when any testing override (ε, σ, χ, baseline) was used.
    #[serde(default)]
    pub overrides: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clipping_free: Option<bool>,
}

impl LossMeta {
    pub fn of(seq: &LossSequence) -> Self {
        let cfg = seq.config();
        Self {
            tool: format!("{TOOL_NAME} {TOOL_VERSION}"),
            horizon: seq.horizon(),
            arms: seq.arms(),
            switch_cost: cfg.map_or(1.0, |c| c.switch_cost),
            epsilon: seq.epsilon(),
            sigma: seq.sigma(),
            chi: seq.chi().map(|c| c + 1),
            variant: seq.variant(),
            seed: cfg.map(|c| c.seed),
            overrides: cfg.is_some_and(|c| c.has_overrides()),
            clipping_free: seq.clipping_free_at_generation(),
        }
    }
}

pub fn write_losses<W: Write>(w: W, seq: &LossSequence, header: &str) -> Result<()> {
    let mut csv = writer(w, header)?;
    csv.write_record(["t", "x", "loss"])?;
    for t in 1..=seq.horizon() {
        for x in 0..seq.arms() {
            csv.write_record([t.to_string(), (x + 1).to_string(), seq.loss(t, x).to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Reads a `t,x,loss` table. Every `(t, x)` in `[1, T] × [1, k]` must appear
/// exactly once, in any order; `T` and `k` are the largest indices seen.
pub fn read_losses<R: Read>(r: R, name: &str) -> Result<LossSequence> {
    let mut rdr = reader(r);
    check_headers(&mut rdr, name, &["t", "x", "loss"])?;
    let mut entries = Vec::new();
    let (mut horizon, mut arms) = (0u64, 0usize);
    for rec in rdr.records() {
        let rec = rec?;
        let pos = rec.position().cloned();
        let fail = |reason: String| parse_err(name, pos.as_ref(), reason);
        if rec.len() != 3 {
            return Err(fail(format!("expected 3 fields, got {}", rec.len())));
        }
        let t: u64 = rec[0].parse().map_err(|_| fail(format!("bad round `{}`", &rec[0])))?;
        let x: usize = rec[1].parse().map_err(|_| fail(format!("bad arm `{}`", &rec[1])))?;
        let loss: f64 = rec[2].parse().map_err(|_| fail(format!("bad loss `{}`", &rec[2])))?;
        if t == 0 || x == 0 {
            return Err(fail("rounds and arms are numbered from 1".into()));
        }
        if !(0.0..=1.0).contains(&loss) {
            return Err(fail(format!("loss {loss} is outside [0, 1]")));
        }
        horizon = horizon.max(t);
        arms = arms.max(x);
        entries.push((t, x, loss, pos.as_ref().map_or(0, |p| p.line())));
    }
    if entries.is_empty() {
        return Err(parse_err(name, None, "no loss rows"));
    }
    let mut table = vec![f64::NAN; (horizon * arms as u64) as usize];
    for (t, x, loss, line) in entries {
        let slot = &mut table[(t as usize - 1) * arms + (x - 1)];
        if !slot.is_nan() {
            return Err(Error::Parse {
                path: name.to_string(),
                line,
                reason: format!("duplicate entry for t = {t}, x = {x}"),
            });
        }
        *slot = loss;
    }
    if let Some(i) = table.iter().position(|v| v.is_nan()) {
        return Err(parse_err(
            name,
            None,
            format!("missing entry for t = {}, x = {}", i / arms + 1, i % arms + 1),
        ));
    }
    LossSequence::from_table(horizon, arms, table)
}

fn check_headers<R: Read>(rdr: &mut csv::Reader<R>, name: &str, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_err(
            name,
            headers.position(),
            format!("expected columns {}, found {}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

/// One row of a results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: u64,
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub k: usize,
    pub c: f64,
    pub policy: String,
    #[serde(rename = "R")]
    pub regret: Option<f64>,
    #[serde(rename = "R_prime")]
    pub regret_unclipped: Option<f64>,
    #[serde(rename = "M")]
    pub switches: Option<u64>,
    pub best_fixed_loss: Option<f64>,
    #[serde(rename = "N_chi")]
    pub plays_of_chi: Option<u64>,
    pub policy_seed: u64,
    pub loss_regret: Option<f64>,
    pub error: String,
}

pub const RESULT_COLUMNS: [&str; 14] = [
    "trial",
    "seed",
    "T",
    "k",
    "c",
    "policy",
    "R",
    "R_prime",
    "M",
    "best_fixed_loss",
    "N_chi",
    "policy_seed",
    "loss_regret",
    "error",
];

impl ResultRow {
    pub fn from_outcome(o: &TrialOutcome, policy: &str, horizon: u64, arms: usize, c: f64) -> Self {
        let r = o.result.as_ref().ok();
        Self {
            trial: o.trial,
            seed: o.adversary_seed,
            horizon,
            k: arms,
            c,
            policy: policy.to_string(),
            regret: r.map(|r| r.regret),
            regret_unclipped: r.and_then(|r| r.regret_unclipped),
            switches: r.map(|r| r.switches),
            best_fixed_loss: r.map(|r| r.best_fixed_loss),
            plays_of_chi: r.and_then(|r| r.plays_of_chi()),
            policy_seed: o.policy_seed,
            loss_regret: r.map(|r| r.loss_regret()),
            error: o.result.as_ref().err().cloned().unwrap_or_default(),
        }
    }
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow], header: &str) -> Result<()> {
    let mut csv = writer(w, header)?;
    for row in rows {
        csv.serialize(row)?;
    }
    if rows.is_empty() {
        csv.write_record(RESULT_COLUMNS)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(r: R, name: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = reader(r);
    check_headers(&mut rdr, name, &RESULT_COLUMNS)?;
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e: csv::Error| {
                let pos = e.position().cloned();
                parse_err(name, pos.as_ref(), e.to_string())
            })
        })
        .collect()
}

/// One `(x, y, yerr)` triple of a plotted series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub policy: String,
    pub metric: String,
    pub x: f64,
    pub y: f64,
    pub yerr: f64,
}

pub const PLOT_COLUMNS: [&str; 5] = ["policy", "metric", "x", "y", "yerr"];

pub fn write_plot_data<W: Write>(w: W, rows: &[PlotRow], header: &str) -> Result<()> {
    let mut csv = writer(w, header)?;
    for row in rows {
        csv.serialize(row)?;
    }
    if rows.is_empty() {
        csv.write_record(PLOT_COLUMNS)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_plot_data<R: Read>(r: R, name: &str) -> Result<Vec<PlotRow>> {
    let mut rdr = reader(r);
    check_headers(&mut rdr, name, &PLOT_COLUMNS)?;
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e: csv::Error| {
                let pos = e.position().cloned();
                parse_err(name, pos.as_ref(), e.to_string())
            })
        })
        .collect()
}

/// Column names of the first non-comment line.
pub fn read_columns<R: Read>(r: R) -> Result<Vec<String>> {
    Ok(reader(r).headers()?.iter().map(str::to_string).collect())
}

/// Writes `trial,t,x` rows (1-based) for one trial's actions.
pub fn write_actions<W: Write>(csv: &mut csv::Writer<W>, trial: u64, actions: &[usize]) -> Result<()> {
    for (i, &a) in actions.iter().enumerate() {
        csv.write_record([trial.to_string(), (i + 1).to_string(), (a + 1).to_string()])?;
    }
    Ok(())
}

pub fn actions_writer<W: Write>(w: W, header: &str) -> Result<csv::Writer<W>> {
    let mut csv = writer(w, header)?;
    csv.write_record(["trial", "t", "x"])?;
    Ok(csv)
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, toml::to_string(value)?)?;
    Ok(())
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(toml::from_str(&fs::read_to_string(path)?)?)
}
