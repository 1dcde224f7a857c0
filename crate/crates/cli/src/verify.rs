use std::process::ExitCode;

use mrw_bandit::verify::{self, CorruptedMrw, Level};
use mrw_bandit::ParentMap;

use crate::args::{VerifyArgs, VerifyLevel};
use crate::{with_jobs, CliResult};

pub(crate) fn run(args: VerifyArgs) -> CliResult<ExitCode> {
    let level = match args.level {
        VerifyLevel::Quick => Level::Quick,
        VerifyLevel::Full => Level::Full,
    };
    let fault = CorruptedMrw(level.max_horizon());
    let pf: Option<&dyn ParentMap> = args.inject_fault.then_some(&fault as &dyn ParentMap);
    let outcomes = with_jobs(args.jobs, || verify::run(level, pf, args.seed))??;

    let mut failed = 0;
    for o in &outcomes {
        if o.passed {
            println!("PASS {}: {}", o.name, o.detail);
        } else {
            failed += 1;
            let seed = o.seed.map_or(String::new(), |s| format!(" (seed {s})"));
            println!("FAIL {}: {}{seed}", o.name, o.detail);
        }
    }
    println!("{} checks, {failed} failed", outcomes.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
