use std::process::ExitCode;

use mrw_bandit::engine::TrialOutcome;
use mrw_bandit::io::{self, LossMeta, ResultRow};
use mrw_bandit::{generate, run_game, GameConfig, LossSequence, PolicySpec};

use crate::args::PlayArgs;
use crate::generate::{adversary_config, describe, print_warnings};
use crate::{create_dir, create_file, load_config, open_file, output_dir, CliResult, Failure};

pub(crate) fn run(args: PlayArgs) -> CliResult<ExitCode> {
    let spec: PolicySpec = args.policy.parse()?;
    let config = args.config.as_deref().map(load_config).transpose()?;

    let mut params: Vec<(&str, String)> = Vec::new();
    let (seq, switch_cost, adversary_seed, chi) = match &args.losses {
        Some(path) => {
            let name = path.display().to_string();
            let seq = io::read_losses(open_file(path)?, &name)?;
            let sidecar = io::sidecar_path(path);
            let meta: Option<LossMeta> = sidecar.exists().then(|| io::read_toml(&sidecar)).transpose()?;
            let c = args
                .adversary
                .c
                .or(meta.as_ref().map(|m| m.switch_cost))
                .unwrap_or(1.0);
            let file = path.file_name().map_or(name.clone(), |f| f.to_string_lossy().into_owned());
            params.push(("losses", file));
            params.push(("T", seq.horizon().to_string()));
            params.push(("k", seq.arms().to_string()));
            let seed = meta.as_ref().and_then(|m| m.seed);
            let chi = meta.as_ref().and_then(|m| m.chi).map(|c| c - 1);
            if chi.is_some_and(|c| c >= seq.arms()) {
                return Err(Failure::Usage(format!("{}: chi is out of range", sidecar.display())));
            }
            (seq, c, seed, chi)
        }
        None => {
            let cfg = adversary_config(&args.adversary, config.as_ref())?;
            let seq = generate(&cfg)?;
            print_warnings(&seq);
            params.extend(describe(&seq, &cfg));
            let chi = seq.chi();
            (seq, cfg.switch_cost, Some(cfg.seed), chi)
        }
    };
    if !(switch_cost >= 0.0 && switch_cost.is_finite()) {
        return Err(Failure::Usage(format!("switch cost must be nonnegative, got {switch_cost}")));
    }
    params.push(("c", switch_cost.to_string()));
    params.push(("policy", spec.to_string()));
    params.push(("policy_seed", args.policy_seed.to_string()));
    params.push(("first_round_free", args.first_round_free.to_string()));

    let mut policy = spec.build()?;
    let game = GameConfig {
        switch_cost,
        record_actions: args.trace,
        first_round_free: args.first_round_free,
        policy_seed: args.policy_seed,
    };
    let mut result = run_game(&seq, policy.as_mut(), &game)?;
    result.chi = result.chi.or(chi);
    if let Err(e) = result.check_identities() {
        return Err(Failure::Run(format!("accounting check failed: {e}")));
    }

    let dir = output_dir(args.out.as_deref(), config.as_ref().and_then(|c| c.output_dir.as_deref()));
    create_dir(&dir)?;
    let header = io::metadata_line("play", &params);
    let outcome = TrialOutcome {
        trial: 0,
        adversary_seed: adversary_seed.unwrap_or(0),
        policy_seed: args.policy_seed,
        result: Ok(result.clone()),
    };
    let row = ResultRow::from_outcome(&outcome, &spec.to_string(), seq.horizon(), seq.arms(), switch_cost);
    let path = dir.join("play.csv");
    io::write_results(create_file(&path)?, &[row], &header)?;
    if let Some(actions) = &result.actions {
        let mut w = io::actions_writer(create_file(&dir.join("actions.csv"))?, &header)?;
        io::write_actions(&mut w, 0, actions)?;
        w.flush().map_err(mrw_bandit::Error::from)?;
    }

    print_summary(&seq, &result);
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn print_summary(seq: &LossSequence, r: &mrw_bandit::GameResult) {
    println!("policy           {}", r.policy);
    println!("T                {}", r.horizon);
    println!("k                {}", r.arms);
    println!("c                {}", r.switch_cost);
    println!("R                {}", r.regret);
    if let Some(rp) = r.regret_unclipped {
        println!("R'               {rp}");
    }
    println!("M                {}", r.switches);
    println!("best_fixed_loss  {}", r.best_fixed_loss);
    println!("best_arm         {}", r.best_arm + 1);
    if let Some(chi) = r.chi {
        println!("chi              {}", chi + 1);
        println!("N_chi            {}", r.plays_per_arm[chi]);
    }
    let plays: Vec<String> = r.plays_per_arm.iter().map(u64::to_string).collect();
    println!("N                {}", plays.join(" "));
    if seq.horizon() > 0 {
        println!("M/T              {:.4}", r.switches as f64 / seq.horizon() as f64);
    }
}
