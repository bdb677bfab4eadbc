//! Command-line front end: scenario runs, parameter sweeps and verification suites.

pub mod emit;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use qfluct::scenarios::{run_scenario, ScenarioConfig, ScenarioReport};
use qfluct::verify::{run_suite, Suite, SuiteReport, DEFAULT_SEED};
use qfluct::Tolerances;

pub use error::{CliError, CliResult};

use emit::{fmt_f64, json_bytes, series_csv, table_csv, Staged};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QFLUCT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "qfluct", version, about = "Fluctuation-growth bounds for driven quantum systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its series, report and manifest
    Run {
        /// Scenario config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print the results as JSON
    Verify {
        /// algebra, bounds, bloch, truncation or all
        suite: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run a scenario once per value of one config field
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dot path into the config, e.g. params.nu0
        #[arg(long)]
        param: String,
        /// Values; each is parsed as JSON and otherwise taken as a string
        #[arg(long, num_args = 0..)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteCounts {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub warnings: usize,
}

/// Record of one command invocation and every file it wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub output_dir: String,
    pub files: Vec<String>,
    pub counts: SuiteCounts,
    pub passed: bool,
    pub version: String,
    pub tolerances: Tolerances,
}

pub fn resolve_out_dir(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
    }
}

fn read_config_value(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config { path: "<root>".into(), reason: e.to_string() })
}

fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(ScenarioConfig::from_json_str(&text)?)
}

fn counts(rep: &ScenarioReport) -> SuiteCounts {
    let passed = rep.checks.iter().filter(|c| c.passed).count();
    SuiteCounts {
        checks: rep.checks.len(),
        passed,
        failed: rep.checks.len() - passed,
        warnings: rep.warnings().len(),
    }
}

fn stage_scenario(staged: &mut Staged, rep: &ScenarioReport, prefix: &str) -> CliResult<()> {
    staged.add(format!("{prefix}_series.csv"), series_csv(&rep.rows)?);
    staged.add(format!("{prefix}_report.json"), json_bytes(rep)?);
    Ok(())
}

/// Outcome of `run`, returned whether or not invariants held.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: ScenarioReport,
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
}

pub fn cmd_run(config: &Path, out: Option<&Path>) -> CliResult<RunOutcome> {
    let cfg = load_config(config)?;
    let report = run_scenario(&cfg)?;
    let dir = resolve_out_dir(out);
    let label = report.label.clone();

    let mut staged = Staged::default();
    stage_scenario(&mut staged, &report, &label)?;
    let manifest_name = format!("{label}_manifest.json");
    let mut files = staged.names();
    files.push(manifest_name.clone());
    let manifest = RunManifest {
        command: "run".into(),
        config_path: config.display().to_string(),
        output_dir: dir.display().to_string(),
        files,
        counts: counts(&report),
        passed: report.passed,
        version: env!("CARGO_PKG_VERSION").into(),
        tolerances: cfg.tolerances,
    };
    staged.add(manifest_name, json_bytes(&manifest)?);
    let files = staged.commit(&dir)?;
    Ok(RunOutcome { report, manifest, files })
}

pub fn cmd_verify(suite: &str, seed: u64) -> CliResult<Vec<SuiteReport>> {
    let suite: Suite = suite.parse().map_err(|e: qfluct::Error| CliError::Usage(e.to_string()))?;
    Ok(run_suite(suite, seed))
}

/// Set `value` at a dot-separated path of object keys, creating missing objects.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if path.is_empty() || keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("bad parameter path `{path}`")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| CliError::Config {
            path: keys[..i].join("."),
            reason: "not an object".into(),
        })?;
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn value_tag(raw: &str) -> String {
    raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

pub const SWEEP_COLUMNS: [&str; 6] = ["value", "min_residual_r2", "tight_fraction", "max_norm_defect", "passed", "series"];

#[derive(Debug)]
pub struct SweepOutcome {
    pub reports: Vec<ScenarioReport>,
    pub files: Vec<PathBuf>,
    pub manifest: RunManifest,
}

pub fn cmd_sweep(config: &Path, param: &str, values: &[String], out: Option<&Path>) -> CliResult<SweepOutcome> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let base = read_config_value(config)?;
    let cfgs = values
        .iter()
        .map(|raw| {
            let mut v = base.clone();
            set_path(&mut v, param, parse_value(raw))?;
            Ok(ScenarioConfig::from_value(v)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let reports = cfgs.par_iter().map(run_scenario).collect::<Result<Vec<_>, _>>()?;

    let dir = resolve_out_dir(out);
    let stem = format!("{}_sweep_{}", reports[0].label, value_tag(param));
    let mut staged = Staged::default();
    let mut rows = Vec::with_capacity(values.len());
    for (raw, rep) in values.iter().zip(&reports) {
        let prefix = format!("{stem}_{}", value_tag(raw));
        stage_scenario(&mut staged, rep, &prefix)?;
        rows.push(vec![
            raw.clone(),
            rep.summary.min_residual_r2.map(fmt_f64).unwrap_or_default(),
            fmt_f64(rep.summary.tight_fraction),
            fmt_f64(rep.summary.max_norm_defect),
            u8::from(rep.passed).to_string(),
            format!("{prefix}_series.csv"),
        ]);
    }
    staged.add(format!("{stem}_summary.csv"), table_csv(&SWEEP_COLUMNS, &rows)?);

    let manifest_name = format!("{stem}_manifest.json");
    let mut files = staged.names();
    files.push(manifest_name.clone());
    let all: Vec<&qfluct::scenarios::Check> = reports.iter().flat_map(|r| &r.checks).collect();
    let passed_checks = all.iter().filter(|c| c.passed).count();
    let manifest = RunManifest {
        command: format!("sweep {param}"),
        config_path: config.display().to_string(),
        output_dir: dir.display().to_string(),
        files,
        counts: SuiteCounts {
            checks: all.len(),
            passed: passed_checks,
            failed: all.len() - passed_checks,
            warnings: reports.iter().map(|r| r.warnings().len()).sum(),
        },
        passed: reports.iter().all(|r| r.passed),
        version: env!("CARGO_PKG_VERSION").into(),
        tolerances: cfgs[0].tolerances,
    };
    staged.add(manifest_name, json_bytes(&manifest)?);
    let files = staged.commit(&dir)?;
    Ok(SweepOutcome { reports, files, manifest })
}

/// Execute a parsed command line, printing results; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn print_warnings(rep: &ScenarioReport, value: Option<&str>) {
    let tag = value.map(|v| format!("[{v}] ")).unwrap_or_default();
    for w in rep.warnings() {
        eprintln!("warning: {tag}{} = {:e} (threshold {:e})", w.name, w.value, w.threshold);
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, out } => {
            let o = cmd_run(&config, out.as_deref())?;
            for f in &o.files {
                println!("{}", f.display());
            }
            print_warnings(&o.report, None);
            if o.report.passed {
                Ok(())
            } else {
                Err(CliError::Invariant(o.report.flags.join(", ")))
            }
        }
        Command::Verify { suite, seed } => {
            let reports = cmd_verify(&suite, seed)?;
            let text = serde_json::to_string_pretty(&reports)
                .map_err(|e| CliError::io("<stdout>", std::io::Error::other(e)))?;
            println!("{text}");
            let failed: usize = reports.iter().map(|r| r.failed).sum();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::VerifyFailed(failed))
            }
        }
        Command::Sweep { config, param, values, out } => {
            let o = cmd_sweep(&config, &param, &values, out.as_deref())?;
            for f in &o.files {
                println!("{}", f.display());
            }
            for (r, v) in o.reports.iter().zip(&values) {
                print_warnings(r, Some(v));
            }
            let flagged: Vec<String> = o
                .reports
                .iter()
                .zip(&values)
                .filter(|(r, _)| !r.passed)
                .map(|(r, v)| format!("{v}: {}", r.flags.join(", ")))
                .collect();
            if flagged.is_empty() {
                Ok(())
            } else {
                Err(CliError::Invariant(flagged.join("; ")))
            }
        }
    }
}
