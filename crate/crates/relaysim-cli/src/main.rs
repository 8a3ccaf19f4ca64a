//! Command-line front end: TLE validation, density maps, selection traces,
//! scenario simulation, parameter sweeps, and report regeneration.
//!
//! Exit codes: 0 success, 1 usage error, 2 ingestion error, 3 runtime
//! failure. Output artifacts are written atomically (temp path + rename).

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use relaysim::geometry::density_grid;
use relaysim::quality::RadioConfig;
use relaysim::report::{bits_to_gb, cdf_samples, fmt_f, quantile, CsvBuilder};
use relaysim::selection::{selection_trace_default, SelectionConfig, TraceStrategy};
use relaysim::sgp4::{Propagator, WGS72};
use relaysim::sim::{
    run_scenario, BacklogLedger, ScenarioConfig, SimError, SimulationReport,
};
use relaysim::tle::parse_tle_file;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Ingest(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Ingest(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Ingest(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Ingest(_) | SimError::Config(_) | SimError::Quality(_) => {
                CliError::Ingest(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "relaysim",
    about = "Trace-driven simulator for EO downlink through a LEO relay constellation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse TLE files and report every malformed record.
    ValidateTle {
        /// TLE file(s) to check.
        #[arg(long, required = true, num_args = 1..)]
        tle: Vec<PathBuf>,
    },
    /// Satellite density grid over subpoint latitude/longitude.
    Density {
        #[arg(long)]
        tle: PathBuf,
        /// Grid cell size in degrees; must divide 180 evenly.
        #[arg(long, default_value_t = 5.0)]
        cell_size: f64,
        /// Sampling epoch (RFC3339); defaults to the newest record epoch.
        #[arg(long)]
        epoch: Option<String>,
        /// Output CSV path.
        #[arg(long, env = "RELAYSIM_OUT", default_value = "density.csv")]
        out: PathBuf,
    },
    /// Per-step relay selection trace for one EO satellite.
    TraceSelection {
        /// EO satellite TLE (first record is used).
        #[arg(long)]
        tle: PathBuf,
        /// Relay constellation TLE file.
        #[arg(long)]
        relay_tles: PathBuf,
        /// Strategy: nearest | min_velocity | vg_proximity | dual.
        #[arg(long, default_value = "dual")]
        strategy: String,
        /// Trace window in seconds.
        #[arg(long, default_value_t = 7200.0)]
        window: f64,
        /// Step in seconds.
        #[arg(long, default_value_t = 15.0)]
        step: f64,
        /// Output directory for the trace bundle.
        #[arg(long, env = "RELAYSIM_OUT", default_value = "trace_out")]
        out: PathBuf,
    },
    /// Run one scenario and write the report bundle.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dotted-path overrides into the scenario schema, e.g.
        /// `--set penalty_fraction=0.3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, env = "RELAYSIM_OUT", default_value = "sim_out")]
        out: PathBuf,
    },
    /// Run a scenario once per value of one overridden key.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted-path key to sweep.
        #[arg(long)]
        key: String,
        /// Comma-separated values for the swept key.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, env = "RELAYSIM_OUT", default_value = "sweep_out")]
        out: PathBuf,
    },
    /// Recompute summary statistics from a ledgers.csv.
    Report {
        /// ledgers.csv produced by `simulate`.
        #[arg(long)]
        ledgers: PathBuf,
        #[arg(long, env = "RELAYSIM_OUT", default_value = "report_out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ValidateTle { tle } => cmd_validate(&tle),
        Command::Density {
            tle,
            cell_size,
            epoch,
            out,
        } => cmd_density(&tle, cell_size, epoch.as_deref(), &out),
        Command::TraceSelection {
            tle,
            relay_tles,
            strategy,
            window,
            step,
            out,
        } => cmd_trace_selection(&tle, &relay_tles, &strategy, window, step, &out),
        Command::Simulate {
            scenario,
            seed,
            set,
            out,
        } => {
            let cfg = load_scenario_with_overrides(&scenario, &set)?;
            let report = run_scenario(&cfg, seed).map_err(CliError::from)?;
            write_report_bundle(&out, &report)
        }
        Command::Sweep {
            scenario,
            key,
            values,
            seed,
            set,
            out,
        } => cmd_sweep(&scenario, &key, &values, seed, &set, &out),
        Command::Report { ledgers, out } => cmd_report(&ledgers, &out),
    }
}

// ---------------------------------------------------------------------------
// validate-tle
// ---------------------------------------------------------------------------

fn cmd_validate(paths: &[PathBuf]) -> Result<(), CliError> {
    let mut total_records = 0usize;
    let mut total_issues = 0usize;
    for path in paths {
        let report = parse_tle_file(path)
            .map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
        for issue in &report.issues {
            eprintln!("{}: {issue}", path.display());
        }
        println!(
            "{}: {} records accepted, {} issues",
            path.display(),
            report.records.len(),
            report.issues.len()
        );
        total_records += report.records.len();
        total_issues += report.issues.len();
    }
    if total_issues > 0 {
        return Err(CliError::Ingest(format!(
            "{total_issues} issues across {} file(s)",
            paths.len()
        )));
    }
    if total_records == 0 {
        return Err(CliError::Ingest("no records found".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

fn cmd_density(
    tle: &Path,
    cell_size: f64,
    epoch: Option<&str>,
    out: &Path,
) -> Result<(), CliError> {
    let report = parse_tle_file(tle)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", tle.display())))?;
    if report.records.is_empty() {
        return Err(CliError::Ingest(format!(
            "{}: no valid records",
            tle.display()
        )));
    }
    for issue in &report.issues {
        eprintln!("{}: {issue}", tle.display());
    }
    let at = match epoch {
        Some(s) => parse_epoch_arg(s)?,
        None => report.records.iter().map(|r| r.epoch).max().unwrap(),
    };
    let mut states = Vec::with_capacity(report.records.len());
    let mut skipped = 0usize;
    for el in &report.records {
        match Propagator::new(el, WGS72).and_then(|p| p.state_at(at)) {
            Ok(s) => states.push(s),
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} satellites that failed propagation");
    }
    let grid = density_grid(&states, cell_size)
        .map_err(|e| CliError::Usage(format!("cell size: {e}")))?;
    let mut csv = CsvBuilder::new("lat_bin_center,lon_bin_center,count");
    for ((lat_bin, lon_bin), count) in &grid.counts {
        let (lat, lon) = grid.cell_center(*lat_bin, *lon_bin);
        csv.row(&[fmt_f(lat, 2), fmt_f(lon, 2), count.to_string()]);
    }
    write_file_atomic(out, &csv.finish())
}

// ---------------------------------------------------------------------------
// trace-selection
// ---------------------------------------------------------------------------

fn cmd_trace_selection(
    tle: &Path,
    relay_tles: &Path,
    strategy: &str,
    window: f64,
    step: f64,
    out: &Path,
) -> Result<(), CliError> {
    let strategy = TraceStrategy::parse(strategy)
        .ok_or_else(|| CliError::Usage(format!("unknown strategy `{strategy}`")))?;
    if step <= 0.0 || window <= 0.0 {
        return Err(CliError::Usage("window and step must be positive".into()));
    }
    let eo = parse_tle_file(tle)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", tle.display())))?;
    let relays = parse_tle_file(relay_tles)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", relay_tles.display())))?;
    let Some(user) = eo.records.first() else {
        return Err(CliError::Ingest(format!(
            "{}: no valid records",
            tle.display()
        )));
    };
    if relays.records.is_empty() {
        return Err(CliError::Ingest(format!(
            "{}: no valid records",
            relay_tles.display()
        )));
    }
    let radio = RadioConfig::default();
    let cfg = SelectionConfig::for_radio(&radio);
    let trace = selection_trace_default(
        user,
        &relays.records,
        user.epoch,
        window,
        step,
        strategy,
        &cfg,
        &radio,
    )
    .map_err(|e| CliError::Runtime(format!("trace: {e}")))?;

    let mut csv = CsvBuilder::new(
        "epoch,chosen_catalog_id,distance_km,relative_speed_kms,range_rate_kms,rule_fired",
    );
    for s in &trace.steps {
        csv.row(&[
            s.epoch.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            s.chosen_catalog_id
                .map(|id| id.to_string())
                .unwrap_or_default(),
            s.geometry.map(|g| fmt_f(g.distance_km, 3)).unwrap_or_default(),
            s.geometry
                .map(|g| fmt_f(g.relative_speed_kms, 4))
                .unwrap_or_default(),
            s.geometry
                .map(|g| fmt_f(g.range_rate_kms, 4))
                .unwrap_or_default(),
            s.rule.to_string(),
        ]);
    }

    let speeds = trace.chosen_speeds();
    let distances = trace.chosen_distances();
    let mut speed_cdf = CsvBuilder::new("relative_speed_kms,cumulative_probability");
    for (v, p) in cdf_samples(&speeds) {
        speed_cdf.row(&[fmt_f(v, 4), fmt_f(p, 6)]);
    }
    let mut dist_cdf = CsvBuilder::new("distance_km,cumulative_probability");
    for (v, p) in cdf_samples(&distances) {
        dist_cdf.row(&[fmt_f(v, 3), fmt_f(p, 6)]);
    }

    let connected = trace.steps.iter().filter(|s| s.chosen_catalog_id.is_some()).count();
    let mut summary = String::new();
    summary.push_str(&format!("strategy: {}\n", strategy.as_str()));
    summary.push_str(&format!("steps: {} x {} s\n", trace.steps.len(), step));
    summary.push_str(&format!("connected_steps: {connected}\n"));
    summary.push_str(&format!("sessions: {}\n", trace.sessions.len()));
    summary.push_str(&format!(
        "avg_connection_seconds: {}\n",
        fmt_f(trace.avg_connection_seconds(), 2)
    ));
    if !speeds.is_empty() {
        summary.push_str(&format!(
            "relative_speed_kms: median {} p95 {} max {}\n",
            fmt_f(quantile(&speeds, 0.5).unwrap(), 4),
            fmt_f(quantile(&speeds, 0.95).unwrap(), 4),
            fmt_f(speeds.iter().cloned().fold(f64::MIN, f64::max), 4),
        ));
        summary.push_str(&format!(
            "distance_km: median {} p95 {} max {}\n",
            fmt_f(quantile(&distances, 0.5).unwrap(), 3),
            fmt_f(quantile(&distances, 0.95).unwrap(), 3),
            fmt_f(distances.iter().cloned().fold(f64::MIN, f64::max), 3),
        ));
    }

    write_bundle(
        out,
        &[
            ("trace.csv", csv.finish()),
            ("speed_cdf.csv", speed_cdf.finish()),
            ("distance_cdf.csv", dist_cdf.finish()),
            ("summary.txt", summary),
        ],
    )
}

// ---------------------------------------------------------------------------
// simulate / sweep / report
// ---------------------------------------------------------------------------

fn load_scenario_with_overrides(
    path: &Path,
    sets: &[String],
) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Ingest(format!("{}: {e}", path.display())))?;
    let mut value = toml::Value::Table(table);
    for kv in sets {
        let (key, raw) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        apply_override(&mut value, key.trim(), raw.trim())
            .map_err(CliError::Usage)?;
    }
    let mut cfg = ScenarioConfig::from_toml_value(value).map_err(CliError::from)?;
    if cfg.name == "scenario" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            cfg.name = stem.to_string();
        }
    }
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

/// Sets a dotted-path key in a TOML tree, parsing the value as TOML scalar
/// (string fallback). Validation against the scenario schema happens at
/// deserialization.
fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<(), String> {
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(t) => t["v"].clone(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(format!("bad override key `{key}`"));
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("override key `{key}` crosses a non-table value"))?;
        if i == parts.len() - 1 {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!("empty key rejected above")
}

fn ledgers_csv(ledgers: &[BacklogLedger]) -> String {
    let mut csv = CsvBuilder::new(
        "user_id,name,generated_bits,delivered_bits,backlog_bits,disconnected_sessions,switch_count",
    );
    for l in ledgers {
        csv.row(&[
            l.user_id.to_string(),
            l.name.clone(),
            l.generated_bits.to_string(),
            l.delivered_bits.to_string(),
            l.backlog_bits.to_string(),
            l.disconnected_sessions.to_string(),
            l.switch_count.to_string(),
        ]);
    }
    csv.finish()
}

fn cdf_csv(cdf: &[(f64, f64)]) -> String {
    let mut csv = CsvBuilder::new("backlog_gb,cumulative_probability");
    for (bits, p) in cdf {
        csv.row(&[fmt_f(bits_to_gb(*bits), 4), fmt_f(*p, 6)]);
    }
    csv.finish()
}

fn summary_text(report: &SimulationReport) -> String {
    let s = &report.summary;
    let mut out = String::new();
    out.push_str(&format!("scenario: {}\n", report.scenario_name));
    out.push_str(&format!(
        "selection_mode: {}\n",
        report.selection_mode.as_str()
    ));
    out.push_str(&format!("seed: {}\n", report.seed));
    out.push_str(&format!(
        "sessions: {} x {} s\n",
        report.sessions, report.session_seconds
    ));
    out.push_str(&format!("users: {}\n", s.users));
    out.push_str(&format!(
        "median_backlog_gb: {}\n",
        fmt_f(bits_to_gb(s.median_backlog_bits), 4)
    ));
    out.push_str(&format!(
        "p90_backlog_gb: {}\n",
        fmt_f(bits_to_gb(s.p90_backlog_bits), 4)
    ));
    out.push_str(&format!(
        "delivered_fraction: {}\n",
        fmt_f(s.delivered_fraction, 6)
    ));
    out.push_str(&format!("total_switches: {}\n", s.total_switches));
    out.push_str(&format!(
        "total_disconnected_sessions: {}\n",
        s.total_disconnected_sessions
    ));
    out.push_str(&format!(
        "avg_connection_seconds: {}\n",
        fmt_f(s.avg_connection_seconds, 2)
    ));
    if let Some(b) = &report.baseline_summary {
        out.push_str("\n[wait_and_transfer_baseline]\n");
        out.push_str("note: baseline absolute results depend on the configured stations and contact rate\n");
        out.push_str(&format!(
            "median_backlog_gb: {}\n",
            fmt_f(bits_to_gb(b.median_backlog_bits), 4)
        ));
        out.push_str(&format!(
            "p90_backlog_gb: {}\n",
            fmt_f(bits_to_gb(b.p90_backlog_bits), 4)
        ));
        out.push_str(&format!(
            "delivered_fraction: {}\n",
            fmt_f(b.delivered_fraction, 6)
        ));
        out.push_str(&format!(
            "avg_contact_seconds: {}\n",
            fmt_f(b.avg_connection_seconds, 2)
        ));
    }
    out.push_str(&format!("\nwarnings: {}\n", report.warnings.len()));
    out
}

fn write_report_bundle(out: &Path, report: &SimulationReport) -> Result<(), CliError> {
    let mut plans = CsvBuilder::new("session_index,user_id,relay_id,pop_id,value_bits,was_switch");
    for p in &report.plans {
        plans.row(&[
            p.session_index.to_string(),
            p.user_id.to_string(),
            p.relay_id.to_string(),
            p.pop_id.clone(),
            fmt_f(p.value_bits, 1),
            (p.was_switch as u8).to_string(),
        ]);
    }
    let mut files = vec![
        ("report.txt", summary_text(report)),
        ("ledgers.csv", ledgers_csv(&report.ledgers)),
        ("plans.csv", plans.finish()),
        ("backlog_cdf.csv", cdf_csv(&report.summary.cdf)),
    ];
    if let (Some(ledgers), Some(summary)) =
        (&report.baseline_ledgers, &report.baseline_summary)
    {
        files.push(("baseline_ledgers.csv", ledgers_csv(ledgers)));
        files.push(("baseline_cdf.csv", cdf_csv(&summary.cdf)));
    }
    if !report.warnings.is_empty() {
        files.push(("warnings.txt", report.warnings.join("\n") + "\n"));
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    write_bundle(out, &files)
}

fn cmd_sweep(
    scenario: &Path,
    key: &str,
    values: &str,
    seed: u64,
    sets: &[String],
    out: &Path,
) -> Result<(), CliError> {
    let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Usage("--values must list at least one value".into()));
    }
    let mut rows = Vec::new();
    let mut bundles = Vec::new();
    for v in &values {
        let mut all_sets = sets.to_vec();
        all_sets.push(format!("{key}={v}"));
        let cfg = load_scenario_with_overrides(scenario, &all_sets)?;
        let report = run_scenario(&cfg, seed).map_err(CliError::from)?;
        rows.push([
            v.to_string(),
            fmt_f(bits_to_gb(report.summary.median_backlog_bits), 4),
            fmt_f(report.summary.delivered_fraction, 6),
            report.summary.total_switches.to_string(),
        ]);
        bundles.push((format!("run-{}", sanitize(v)), report));
    }
    let mut csv = CsvBuilder::new(&format!(
        "{key},median_backlog_gb,delivered_fraction,total_switches"
    ));
    for r in &rows {
        csv.row(r);
    }
    // Assemble everything under a temp dir, then rename into place.
    let staging = temp_sibling(out)?;
    std::fs::write(staging.join("sweep.csv"), csv.finish())?;
    for (name, report) in &bundles {
        let dir = staging.join(name);
        write_report_bundle_plain(&dir, report)?;
    }
    promote(&staging, out)?;
    Ok(())
}

fn cmd_report(ledgers_path: &Path, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(ledgers_path)
        .map_err(|e| CliError::Ingest(format!("{}: {e}", ledgers_path.display())))?;
    let mut backlogs = Vec::new();
    let mut generated = 0u64;
    let mut delivered = 0u64;
    for (no, line) in text.lines().enumerate() {
        if no == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(CliError::Ingest(format!(
                "{}: row {} has {} fields, expected 7",
                ledgers_path.display(),
                no + 1,
                f.len()
            )));
        }
        let parse = |s: &str| -> Result<u64, CliError> {
            s.parse::<u64>()
                .map_err(|e| CliError::Ingest(format!("row {}: {e}", no + 1)))
        };
        generated += parse(f[2])?;
        delivered += parse(f[3])?;
        backlogs.push(parse(f[4])? as f64);
    }
    if backlogs.is_empty() {
        return Err(CliError::Ingest("ledgers file has no data rows".into()));
    }
    let mut report = String::new();
    report.push_str(&format!("users: {}\n", backlogs.len()));
    report.push_str(&format!(
        "median_backlog_gb: {}\n",
        fmt_f(bits_to_gb(quantile(&backlogs, 0.5).unwrap()), 4)
    ));
    report.push_str(&format!(
        "p90_backlog_gb: {}\n",
        fmt_f(bits_to_gb(quantile(&backlogs, 0.9).unwrap()), 4)
    ));
    let frac = if generated > 0 {
        delivered as f64 / generated as f64
    } else {
        0.0
    };
    report.push_str(&format!("delivered_fraction: {}\n", fmt_f(frac, 6)));
    let mut cdf = CsvBuilder::new("backlog_gb,cumulative_probability");
    for (bits, p) in cdf_samples(&backlogs) {
        cdf.row(&[fmt_f(bits_to_gb(bits), 4), fmt_f(p, 6)]);
    }
    write_bundle(
        out,
        &[("report.txt", report), ("backlog_cdf.csv", cdf.finish())],
    )
}

// ---------------------------------------------------------------------------
// Atomic output helpers
// ---------------------------------------------------------------------------

fn parse_epoch_arg(s: &str) -> Result<DateTime<Utc>, CliError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| CliError::Usage(format!("--epoch: {e}")))
}

fn sanitize(v: &str) -> String {
    v.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn temp_sibling(target: &Path) -> Result<PathBuf, CliError> {
    let parent = target.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(p) = parent {
        std::fs::create_dir_all(p)?;
    }
    let name = target
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Usage("bad output path".into()))?;
    let tmp = target.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp)?;
    }
    std::fs::create_dir_all(&tmp)?;
    Ok(tmp)
}

fn promote(staging: &Path, target: &Path) -> Result<(), CliError> {
    if target.exists() {
        if target.is_dir() {
            std::fs::remove_dir_all(target)?;
        } else {
            std::fs::remove_file(target)?;
        }
    }
    std::fs::rename(staging, target)?;
    Ok(())
}

fn write_bundle(out: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    let staging = temp_sibling(out)?;
    for (name, content) in files {
        std::fs::write(staging.join(name), content)?;
    }
    promote(&staging, out)
}

fn write_report_bundle_plain(dir: &Path, report: &SimulationReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut plans = CsvBuilder::new("session_index,user_id,relay_id,pop_id,value_bits,was_switch");
    for p in &report.plans {
        plans.row(&[
            p.session_index.to_string(),
            p.user_id.to_string(),
            p.relay_id.to_string(),
            p.pop_id.clone(),
            fmt_f(p.value_bits, 1),
            (p.was_switch as u8).to_string(),
        ]);
    }
    std::fs::write(dir.join("report.txt"), summary_text(report))?;
    std::fs::write(dir.join("ledgers.csv"), ledgers_csv(&report.ledgers))?;
    std::fs::write(dir.join("plans.csv"), plans.finish())?;
    std::fs::write(dir.join("backlog_cdf.csv"), cdf_csv(&report.summary.cdf))?;
    Ok(())
}

fn write_file_atomic(out: &Path, content: &str) -> Result<(), CliError> {
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(p) = parent {
        std::fs::create_dir_all(p)?;
    }
    let name = out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Usage("bad output path".into()))?;
    let tmp = out.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, out)?;
    Ok(())
}
