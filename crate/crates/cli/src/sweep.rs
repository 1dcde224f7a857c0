use std::process::ExitCode;

use mrw_bandit::analysis::run_sweep;
use mrw_bandit::config::ExperimentConfig;
use mrw_bandit::io::{self, ResultRow};
use mrw_bandit::TrialSettings;
use serde::Serialize;

use crate::args::SweepArgs;
use crate::summary::{self, Cell, Fit};
use crate::{create_dir, create_file, load_config, output_dir, with_jobs, CliResult, Failure};

#[derive(Serialize)]
struct Summary {
    tool: String,
    seed_base: u64,
    trials: u64,
    rows: usize,
    failures: u64,
    fit: Vec<Fit>,
    cell: Vec<Cell>,
}

/// The effective config after flag overrides, as echoed into the sidecar.
fn effective_config(args: &SweepArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed_base = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if !args.policies.is_empty() {
        cfg.policies = args.policies.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn file_stem(policy: &str) -> String {
    policy
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || ch == '.' { ch } else { '-' })
        .collect()
}

pub(crate) fn run(args: SweepArgs) -> CliResult<ExitCode> {
    let cfg = effective_config(&args)?;
    let specs = cfg.policy_specs()?;
    let dir = output_dir(args.out.as_deref(), cfg.output_dir.as_deref());
    create_dir(&dir)?;

    let a = &cfg.adversary;
    let horizons: Vec<String> = a.horizons.iter().map(u64::to_string).collect();
    let mut params = vec![
        ("seed_base", cfg.seed_base.to_string()),
        ("trials", cfg.trials.to_string()),
        ("T", horizons.join(";")),
        ("k", a.arms.to_string()),
        ("c", a.switch_cost.to_string()),
        ("variant", a.variant.to_string()),
        ("policies", cfg.policies.join(";")),
        ("first_round_free", cfg.first_round_free.to_string()),
    ];
    for (key, value) in [("epsilon", a.epsilon), ("sigma", a.sigma), ("baseline", a.baseline)] {
        if let Some(v) = value {
            params.push((key, v.to_string()));
        }
    }
    if let Some(chi) = a.chi {
        params.push(("chi", chi.to_string()));
    }
    let header = io::metadata_line("sweep", &params);

    let settings = TrialSettings {
        switch_cost: a.switch_cost,
        record_actions: cfg.emit.actions,
        first_round_free: cfg.first_round_free,
    };
    let template = cfg.adversary_template();
    let cells = with_jobs(args.jobs, || {
        run_sweep(&template, &specs, &a.horizons, &settings, cfg.trials, cfg.seed_base)
    })?;

    let mut rows = Vec::new();
    for cell in &cells {
        for o in &cell.outcomes {
            if let Ok(r) = &o.result {
                if let Err(e) = r.check_identities() {
                    return Err(Failure::Run(format!("{} T = {} trial {}: {e}", cell.policy, cell.horizon, o.trial)));
                }
            }
            rows.push(ResultRow::from_outcome(o, &cell.policy, cell.horizon, a.arms, a.switch_cost));
        }
    }
    let results = dir.join("results.csv");
    io::write_results(create_file(&results)?, &rows, &header)?;
    let echo = ExperimentConfig {
        output_dir: None,
        ..cfg.clone()
    };
    std::fs::write(io::sidecar_path(&results), echo.to_toml()?)
        .map_err(|e| Failure::Run(format!("cannot write sidecar: {e}")))?;

    if cfg.emit.actions {
        for cell in &cells {
            let path = dir.join(format!("actions_{}_T{}.csv", file_stem(&cell.policy), cell.horizon));
            let mut w = io::actions_writer(create_file(&path)?, &header)?;
            for o in &cell.outcomes {
                if let Some(actions) = o.result.as_ref().ok().and_then(|r| r.actions.as_ref()) {
                    io::write_actions(&mut w, o.trial, actions)?;
                }
            }
            w.flush().map_err(mrw_bandit::Error::from)?;
        }
    }

    let aggregates = summary::aggregate(&rows);
    let plot_rows = summary::plot_rows(&aggregates);
    io::write_plot_data(create_file(&dir.join("plot_data.csv"))?, &plot_rows, &header)?;
    let fits = summary::fits(&plot_rows);
    let failures: u64 = aggregates.iter().map(|c| c.failures).sum();
    let report = Summary {
        tool: format!("{} {}", io::TOOL_NAME, io::TOOL_VERSION),
        seed_base: cfg.seed_base,
        trials: cfg.trials,
        rows: rows.len(),
        failures,
        fit: fits.clone(),
        cell: aggregates,
    };
    io::write_toml(&dir.join("summary.toml"), &report)?;

    if cfg.emit.plots {
        for (metric, name) in [("R", "regret_vs_T.svg"), ("M", "switches_vs_T.svg")] {
            let svg = summary::scaling_chart(&plot_rows, metric).render();
            std::fs::write(dir.join(name), svg).map_err(|e| Failure::Run(format!("cannot write {name}: {e}")))?;
        }
    }

    for f in fits.iter().filter(|f| f.metric != "loss_regret") {
        let ci = f.slope_ci.map_or(String::new(), |[lo, hi]| format!(" [{lo:.3}, {hi:.3}]"));
        println!("{:<20} {:<2} slope {:.3}{ci} over {} horizons", f.series, f.metric, f.slope, f.points);
    }
    println!("wrote {} rows to {}", rows.len(), results.display());
    if failures > 0 {
        for row in rows.iter().filter(|r| !r.error.is_empty()).take(5) {
            eprintln!("failed: {} T = {} trial {}: {}", row.policy, row.horizon, row.trial, row.error);
        }
        eprintln!("{failures} of {} trials failed", rows.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
