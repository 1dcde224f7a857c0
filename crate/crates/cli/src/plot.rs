use std::process::ExitCode;

use mrw_bandit::io;
use mrw_bandit::plot::{Chart, Series};

use crate::args::{PlotArgs, PlotKind};
use crate::summary;
use crate::{create_dir, create_file, open_file, output_dir, CliResult, Failure};

fn kind_name(kind: PlotKind) -> &'static str {
    match kind {
        PlotKind::RegretVsT => "regret-vs-T",
        PlotKind::SwitchesVsT => "switches-vs-T",
        PlotKind::Trajectory => "trajectory",
    }
}

fn mismatch(input: &str, kind: PlotKind, columns: &[String]) -> Failure {
    Failure::Usage(format!(
        "{input}: columns {} do not fit a {} plot (expected {})",
        columns.join(","),
        kind_name(kind),
        match kind {
            PlotKind::Trajectory => "t,w".to_string(),
            _ => format!("{} or {}", io::RESULT_COLUMNS.join(","), io::PLOT_COLUMNS.join(",")),
        }
    ))
}

pub(crate) fn run(args: PlotArgs) -> CliResult<ExitCode> {
    let name = args.input.display().to_string();
    let columns = io::read_columns(open_file(&args.input)?)?;
    let is = |expected: &[&str]| columns.iter().map(String::as_str).eq(expected.iter().copied());

    let chart = match args.kind {
        PlotKind::Trajectory => {
            if !is(&["t", "w"]) {
                return Err(mismatch(&name, args.kind, &columns));
            }
            let points = io::read_trajectory(open_file(&args.input)?, &name)?;
            let max_abs = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
            Chart {
                title: "Walk trajectory".into(),
                x_label: "t".into(),
                y_label: "W_t".into(),
                series: vec![Series {
                    name: "W".into(),
                    points: points.into_iter().map(|(t, w)| (t as f64, w, 0.0)).collect(),
                    fit: None,
                }],
                notes: vec![format!("max |W| = {max_abs:.3}")],
                ..Chart::default()
            }
        }
        kind => {
            let rows = if is(&io::RESULT_COLUMNS) {
                summary::plot_rows(&summary::aggregate(&io::read_results(open_file(&args.input)?, &name)?))
            } else if is(&io::PLOT_COLUMNS) {
                io::read_plot_data(open_file(&args.input)?, &name)?
            } else {
                return Err(mismatch(&name, kind, &columns));
            };
            let metric = if kind == PlotKind::RegretVsT { "R" } else { "M" };
            summary::scaling_chart(&rows, metric)
        }
    };

    let out = match args.out {
        Some(path) => path,
        None => {
            let dir = output_dir(None, None);
            create_dir(&dir)?;
            dir.join(format!("{}.svg", kind_name(args.kind)))
        }
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    use std::io::Write as _;
    let mut w = create_file(&out)?;
    w.write_all(chart.render().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Run(format!("cannot write {}: {e}", out.display())))?;
    for (series, note) in chart.series.iter().zip(&chart.notes) {
        println!("{}: {note}", series.name);
    }
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
