use std::process::ExitCode;

use mrw_bandit::config::ExperimentConfig;
use mrw_bandit::io::{self, LossMeta, TrajectoryMeta};
use mrw_bandit::{generate, AdversaryConfig, LossSequence};

use crate::args::{AdversaryArgs, GenerateArgs};
use crate::{create_dir, create_file, load_config, output_dir, CliResult, Failure};

/// Flags first, then the config, then defaults (k = 2, c = 1, clipped).
pub(crate) fn adversary_config(flags: &AdversaryArgs, config: Option<&ExperimentConfig>) -> CliResult<AdversaryConfig> {
    let block = config.map(|c| &c.adversary);
    let horizon = flags
        .horizon
        .or_else(|| block.and_then(|b| b.horizons.first().copied()))
        .ok_or_else(|| Failure::Usage("--T is required without a config".into()))?;
    let seed = flags
        .seed
        .or(config.map(|c| c.seed_base))
        .ok_or_else(|| Failure::Usage("--seed is required without a config".into()))?;
    if flags.chi == Some(0) {
        return Err(Failure::Usage("--chi is 1-based".into()));
    }
    let template = config.map(ExperimentConfig::adversary_template);
    let base = template.unwrap_or_else(|| AdversaryConfig::new(horizon, 2, 1.0, seed));
    Ok(AdversaryConfig {
        horizon,
        seed,
        arms: flags.k.unwrap_or(base.arms),
        switch_cost: flags.c.unwrap_or(base.switch_cost),
        variant: flags.variant.unwrap_or(base.variant),
        epsilon: flags.epsilon.or(base.epsilon),
        sigma: flags.sigma.or(base.sigma),
        chi: flags.chi.map(|c| c - 1).or(base.chi),
        baseline: flags.baseline.or(base.baseline),
        ..base
    })
}

/// Parameter echo for metadata lines.
pub(crate) fn describe(seq: &LossSequence, cfg: &AdversaryConfig) -> Vec<(&'static str, String)> {
    let mut params = vec![
        ("T", cfg.horizon.to_string()),
        ("k", cfg.arms.to_string()),
        ("c", cfg.switch_cost.to_string()),
        ("variant", cfg.variant.to_string()),
        ("seed", cfg.seed.to_string()),
        ("epsilon", seq.epsilon().to_string()),
        ("sigma", seq.sigma().to_string()),
    ];
    if let Some(chi) = cfg.chi {
        params.push(("chi", (chi + 1).to_string()));
    }
    if let Some(b) = cfg.baseline {
        params.push(("baseline", b.to_string()));
    }
    params
}

pub(crate) fn print_warnings(seq: &LossSequence) {
    for w in seq.warnings() {
        eprintln!("warning: {w}");
    }
}

pub(crate) fn run(args: GenerateArgs) -> CliResult<ExitCode> {
    let config = args.config.as_deref().map(load_config).transpose()?;
    let cfg = adversary_config(&args.adversary, config.as_ref())?;
    let seq = generate(&cfg)?;
    print_warnings(&seq);

    let dir = output_dir(args.out.as_deref(), config.as_ref().and_then(|c| c.output_dir.as_deref()));
    create_dir(&dir)?;
    let params = describe(&seq, &cfg);
    let header = io::metadata_line("generate", &params);

    let losses = dir.join("losses.csv");
    io::write_losses(create_file(&losses)?, &seq, &header)?;
    io::write_toml(&io::sidecar_path(&losses), &LossMeta::of(&seq))?;
    if let (Some(traj), false) = (seq.trajectory(), args.no_trajectory) {
        let path = dir.join("trajectory.csv");
        io::write_trajectory(create_file(&path)?, traj, &io::metadata_line("generate", &params))?;
        io::write_toml(&io::sidecar_path(&path), &TrajectoryMeta::of(traj))?;
    }

    println!(
        "wrote {} (T = {}, k = {}, chi = {}, epsilon = {:.6}, sigma = {:.6})",
        losses.display(),
        seq.horizon(),
        seq.arms(),
        seq.chi().map_or("-".into(), |c| (c + 1).to_string()),
        seq.epsilon(),
        seq.sigma()
    );
    Ok(ExitCode::SUCCESS)
}
