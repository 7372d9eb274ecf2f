//! Command-line front end: run scenarios, compare sync on/off, score traces.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{
    epochs, switch_metrics, tracking_metrics, TraceColumn, DEFAULT_PEAK_WINDOW,
    DEFAULT_SETTLING_BAND,
};
use crate::scenario::Scenario;
use crate::sim::{run_comparison, ClosedLoopSim};
use crate::trace::Trace;

const USAGE: &str = "\
usage: synced-paths <command> [args]

commands:
  run <scenario> [--no-sync] [--out DIR]     simulate, write <stem>_sync.csv (or _nosync)
  compare <scenario> [--out DIR]             run sync on and off, write traces + metrics report
  metrics <trace.csv> --scenario <scenario>  score an existing trace against its scenario
  validate <scenario>                        parse and check a scenario
  demo <name> [--out DIR]                    compare a builtin: example1, example2a, example2b

a <scenario> is a file path or builtin:<name>
";

/// Runs the tool and returns its process exit code. Configuration and parse
/// problems exit 2, numeric aborts 3, i/o failures 4.
pub fn run_cli(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(CliFailure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            2
        }
        Err(CliFailure::Run(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

enum CliFailure {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        CliFailure::Run(e)
    }
}

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, CliFailure> {
    Err(CliFailure::Usage(msg.into()))
}

struct ParsedArgs {
    positional: Vec<String>,
    no_sync: bool,
    out_dir: Option<String>,
    scenario: Option<String>,
}

fn parse_args(args: &[String]) -> std::result::Result<ParsedArgs, CliFailure> {
    let mut parsed = ParsedArgs {
        positional: Vec::new(),
        no_sync: false,
        out_dir: None,
        scenario: None,
    };
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        match arg.as_str() {
            "--no-sync" => parsed.no_sync = true,
            "--out" => match iter.next() {
                Some(v) => parsed.out_dir = Some(v.clone()),
                None => return usage("--out needs a directory"),
            },
            "--scenario" => match iter.next() {
                Some(v) => parsed.scenario = Some(v.clone()),
                None => return usage("--scenario needs a file or builtin name"),
            },
            s if s.starts_with('-') => return usage(format!("unknown flag '{s}'")),
            _ => parsed.positional.push(arg.clone()),
        }
    }
    Ok(parsed)
}

fn dispatch(args: &[String]) -> std::result::Result<(), CliFailure> {
    let command = match args.first() {
        Some(c) => c.as_str(),
        None => return usage("missing command"),
    };
    if matches!(command, "help" | "--help" | "-h") {
        print!("{USAGE}");
        return Ok(());
    }
    let parsed = parse_args(&args[1..])?;
    match command {
        "run" => cmd_run(parsed),
        "compare" => cmd_compare(parsed),
        "metrics" => cmd_metrics(parsed),
        "validate" => cmd_validate(parsed),
        "demo" => cmd_demo(parsed),
        other => usage(format!("unknown command '{other}'")),
    }
}

/// Resolves a scenario argument, returning it and a stem for output names.
fn load_scenario(spec: &str) -> Result<(Scenario, String)> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok((Scenario::builtin(name)?, name.to_string()));
    }
    let path = Path::new(spec);
    let scenario = Scenario::from_file(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "scenario".to_string());
    Ok((scenario, stem))
}

fn prepare_out_dir(dir: &Option<String>) -> Result<PathBuf> {
    let path = PathBuf::from(dir.as_deref().unwrap_or("."));
    std::fs::create_dir_all(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn expect_one_positional<'a>(
    parsed: &'a ParsedArgs,
    what: &str,
) -> std::result::Result<&'a str, CliFailure> {
    match parsed.positional.as_slice() {
        [one] => Ok(one.as_str()),
        [] => usage(format!("missing {what}")),
        _ => usage(format!("expected exactly one {what}")),
    }
}

fn cmd_run(parsed: ParsedArgs) -> std::result::Result<(), CliFailure> {
    if parsed.scenario.is_some() {
        return usage("--scenario only applies to 'metrics'");
    }
    let spec = expect_one_positional(&parsed, "scenario argument")?;
    let (scenario, stem) = load_scenario(spec)?;
    let dir = prepare_out_dir(&parsed.out_dir)?;
    let sync = !parsed.no_sync;
    let trace = ClosedLoopSim::new(&scenario, sync)?.run()?;
    let suffix = if sync { "sync" } else { "nosync" };
    let path = dir.join(format!("{stem}_{suffix}.csv"));
    trace.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_compare(parsed: ParsedArgs) -> std::result::Result<(), CliFailure> {
    if parsed.no_sync {
        return usage("compare always runs both variants; drop --no-sync");
    }
    if parsed.scenario.is_some() {
        return usage("--scenario only applies to 'metrics'");
    }
    let spec = expect_one_positional(&parsed, "scenario argument")?;
    let (scenario, stem) = load_scenario(spec)?;
    compare_and_report(&scenario, &stem, &parsed.out_dir)?;
    Ok(())
}

fn cmd_demo(parsed: ParsedArgs) -> std::result::Result<(), CliFailure> {
    if parsed.no_sync || parsed.scenario.is_some() {
        return usage("demo takes only a builtin name and --out");
    }
    let name = expect_one_positional(&parsed, "builtin scenario name")?;
    let scenario = Scenario::builtin(name)?;
    compare_and_report(&scenario, name, &parsed.out_dir)?;
    Ok(())
}

fn cmd_validate(parsed: ParsedArgs) -> std::result::Result<(), CliFailure> {
    if parsed.no_sync || parsed.out_dir.is_some() || parsed.scenario.is_some() {
        return usage("validate takes only a scenario argument");
    }
    let spec = expect_one_positional(&parsed, "scenario argument")?;
    let (scenario, _) = load_scenario(spec)?;
    println!(
        "ok: {} plant stage(s), {} control path(s), {} steps",
        scenario.plants.len(),
        scenario.paths.len(),
        scenario.n_steps()
    );
    Ok(())
}

fn cmd_metrics(parsed: ParsedArgs) -> std::result::Result<(), CliFailure> {
    if parsed.no_sync || parsed.out_dir.is_some() {
        return usage("metrics takes a trace file and --scenario");
    }
    let trace_path = expect_one_positional(&parsed, "trace file")?;
    let spec = match &parsed.scenario {
        Some(s) => s.as_str(),
        None => return usage("metrics needs --scenario <file|builtin:name>"),
    };
    let (scenario, _) = load_scenario(spec)?;
    let trace = Trace::from_file(Path::new(trace_path))?;
    // Label by what the trace actually recorded for the sync gate.
    let label = if trace.u.iter().all(|&v| v == 0.0) {
        "sync_off"
    } else {
        "sync_on"
    };
    print!("{}", report_section(label, &scenario, &trace)?);
    Ok(())
}

fn compare_and_report(scenario: &Scenario, stem: &str, out_dir: &Option<String>) -> Result<()> {
    let dir = prepare_out_dir(out_dir)?;
    let (sync_on, sync_off) = run_comparison(scenario)?;
    let on_path = dir.join(format!("{stem}_sync.csv"));
    let off_path = dir.join(format!("{stem}_nosync.csv"));
    sync_on.write_csv(&on_path)?;
    sync_off.write_csv(&off_path)?;

    let mut report = String::new();
    report.push_str(&report_section("sync_on", scenario, &sync_on)?);
    report.push_str(&report_section("sync_off", scenario, &sync_off)?);
    let report_path = dir.join(format!("{stem}_metrics.txt"));
    std::fs::write(&report_path, &report).map_err(|source| Error::Io {
        path: report_path.clone(),
        source,
    })?;

    let switch_times = scenario
        .w_gate
        .transitions_in(sync_on.times[0], *sync_on.times.last().unwrap());
    if !switch_times.is_empty() {
        let max_jump = |trace: &Trace| -> Result<f64> {
            let reports = switch_metrics(
                trace,
                &switch_times,
                DEFAULT_PEAK_WINDOW,
                DEFAULT_SETTLING_BAND,
            )?;
            Ok(reports.iter().map(|r| r.jump).fold(0.0, f64::max))
        };
        println!(
            "{} switch instant(s); max |dy_c| at a switch: sync on {}, sync off {}",
            switch_times.len(),
            max_jump(&sync_on)?,
            max_jump(&sync_off)?
        );
    }
    println!(
        "wrote {}, {}, {}",
        on_path.display(),
        off_path.display(),
        report_path.display()
    );
    Ok(())
}

/// One labeled block of key=value metrics for a trace.
fn report_section(label: &str, scenario: &Scenario, trace: &Trace) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "# {label}: switch metrics and per-epoch tracking");
    let switch_times = scenario
        .w_gate
        .transitions_in(trace.times[0], *trace.times.last().unwrap());
    let reports = switch_metrics(
        trace,
        &switch_times,
        DEFAULT_PEAK_WINDOW,
        DEFAULT_SETTLING_BAND,
    )?;
    for (k, r) in reports.iter().enumerate() {
        let n = k + 1;
        let _ = writeln!(s, "{label}.switch.{n}.time = {}", r.switch_time);
        let _ = writeln!(s, "{label}.switch.{n}.jump = {}", r.jump);
        for (j, peak) in r.peak_deviation.iter().enumerate() {
            let _ = writeln!(s, "{label}.switch.{n}.peak_dev.y{} = {peak}", j + 1);
        }
        for (j, settle) in r.settling_time.iter().enumerate() {
            match settle {
                Some(v) => {
                    let _ = writeln!(s, "{label}.switch.{n}.settling.y{} = {v}", j + 1);
                }
                None => {
                    let _ = writeln!(s, "{label}.switch.{n}.settling.y{} = none", j + 1);
                }
            }
        }
    }
    for (k, (t0, t1)) in epochs(trace, &switch_times).iter().enumerate() {
        let n = k + 1;
        let i0 = trace.times.partition_point(|&t| t < t0 - 1e-9);
        let active = if trace.w[i0] == 1.0 || scenario.paths.len() == 1 {
            0
        } else {
            1
        };
        let path = &scenario.paths[active];
        let column = TraceColumn::StageOutput(path.measurement - 1);
        let report = tracking_metrics(trace, *t0, *t1, path.setpoint, column)?;
        let _ = writeln!(s, "{label}.epoch.{n}.start = {t0}");
        let _ = writeln!(s, "{label}.epoch.{n}.output = y{}", path.measurement);
        let _ = writeln!(s, "{label}.epoch.{n}.reference = {}", path.setpoint);
        let _ = writeln!(s, "{label}.epoch.{n}.iae = {}", report.iae);
        let _ = writeln!(s, "{label}.epoch.{n}.itae = {}", report.itae);
        let _ = writeln!(
            s,
            "{label}.epoch.{n}.steady_state_error = {}",
            report.steady_state_error
        );
        let _ = writeln!(
            s,
            "{label}.epoch.{n}.oscillation_energy = {}",
            report.oscillation_energy
        );
    }
    Ok(s)
}
