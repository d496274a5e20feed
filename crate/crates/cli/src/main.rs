#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use tuntime::UnitSystem;

mod config;
mod run;

use config::{ConfigError, Observable, Scenario};
use run::{Status, Table};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "tuntime", version, about = "Tunnelling-time scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write one CSV per observable plus a manifest.
    Run {
        config: PathBuf,
        /// Worker threads for scan rows (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: `output.dir` in the config, else `<config stem>_out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario without running it.
    Validate { config: PathBuf },
    /// Print the unit system.
    Constants,
    /// List the observables a scenario may request.
    ListObservables,
}

fn report_config_errors(path: &Path, errors: &[ConfigError]) -> ExitCode {
    eprintln!("{}: invalid scenario", path.display());
    for e in errors {
        eprintln!("  {e}");
    }
    ExitCode::from(EXIT_CONFIG)
}

fn output_dir(config_path: &Path, s: &Scenario, out: Option<PathBuf>) -> PathBuf {
    let base = config_path.parent().unwrap_or(Path::new("."));
    match (out, &s.output.dir) {
        (Some(o), _) => o,
        (None, Some(d)) => base.join(d),
        (None, None) => {
            let stem = config_path.file_stem().and_then(|x| x.to_str()).unwrap_or("scenario");
            base.join(format!("{stem}_out"))
        }
    }
}

fn cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn is_boolean(column: &str) -> bool {
    column.ends_with("_passed") || column.ends_with("_applicable") || column == "superluminal"
}

fn write_table(dir: &Path, t: &Table) -> Result<PathBuf, csv::Error> {
    let path = dir.join(format!("{}.csv", t.observable.name()));
    let mut w = csv::Writer::from_path(&path)?;
    let mut header: Vec<String> = t.key_columns.clone();
    header.extend(t.value_columns.iter().map(|c| c.to_string()));
    header.extend(["tail_captured", "on_resonance", "opaque_warning", "status"].map(String::from));
    w.write_record(&header)?;
    for r in &t.rows {
        let mut rec: Vec<String> = r.keys.iter().map(|&v| cell(v)).collect();
        for (name, &v) in t.value_columns.iter().zip(&r.values) {
            rec.push(if is_boolean(name) && !v.is_nan() { (v != 0.0).to_string() } else { cell(v) });
        }
        rec.push(r.flags.tail_captured.to_string());
        rec.push(r.flags.on_resonance.to_string());
        rec.push(r.flags.opaque_warning.to_string());
        rec.push(match &r.status {
            Status::Ok => "ok".into(),
            Status::Skipped(m) => format!("skipped: {m}"),
            Status::Failed(m) => format!("failed: {m}"),
        });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

fn constants_json(u: &UnitSystem) -> Value {
    json!({
        "hbar_ev_fs": u.hbar,
        "hbar2_over_2m_ev_a2": u.hbar2_over_2m,
        "c_a_per_fs": u.c,
        "c_cm_per_s": tuntime::emguide::C_CM_PER_S,
    })
}

fn tolerances_json() -> Value {
    json!({
        "scattering_degeneracy": tuntime::scattering::DEGENERACY_TOL,
        "two_phase_reconstruction": tuntime::scattering::TWO_PHASE_TOL,
        "dwell_quadrature": tuntime::stationary_times::DWELL_QUADRATURE_TOL,
        "dwell_form_agreement": tuntime::flux_times::AnalysisOptions::default().dwell_tol,
        "min_relative_flux_mass": tuntime::flux_times::MIN_RELATIVE_MASS,
        "double_barrier_opaque_min": tuntime::double_barrier::OPAQUE_MIN,
        "double_barrier_opaque_warn": tuntime::double_barrier::OPAQUE_WARN,
        "resonance_denominator": tuntime::double_barrier::RESONANCE_DENOMINATOR_TOL,
        "waveguide_cutoff_degeneracy": tuntime::emguide::CUTOFF_DEGENERACY_TOL,
        "waveguide_opaque_min": tuntime::emguide::OPAQUE_MIN,
    })
}

fn run(config_path: &Path, workers: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let (scenario, raw) = match config::load(config_path) {
        Ok(x) => x,
        Err(errors) => return report_config_errors(config_path, &errors),
    };
    if workers == Some(0) {
        return report_config_errors(config_path, &[ConfigError {
            path: "--workers".into(),
            message: "must be at least 1".into(),
        }]);
    }
    let dir = output_dir(config_path, &scenario, out);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let points = run::expand(&scenario);
    let mut outputs = Vec::new();
    let (mut warnings, mut failures) = (0usize, 0usize);
    for &o in &scenario.observables {
        let t0 = Instant::now();
        let table = pool.install(|| run::table(&scenario, o, &points));
        let w = table.rows.iter().filter(|r| r.warns()).count();
        let f = table.rows.iter().filter(|r| matches!(r.status, Status::Failed(_))).count();
        warnings += w;
        failures += f;
        let path = match write_table(&dir, &table) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("cannot write {} table: {e}", o.name());
                return ExitCode::from(EXIT_NUMERICAL);
            }
        };
        println!("{}: {} rows, {w} flagged -> {}", o.name(), table.rows.len(), path.display());
        outputs.push(json!({
            "observable": o.name(),
            "file": path.file_name().and_then(|f| f.to_str()),
            "rows": table.rows.len(),
            "flagged_rows": w,
            "failed_rows": f,
            "wall_time_s": t0.elapsed().as_secs_f64(),
        }));
    }
    let manifest = json!({
        "tool": { "name": "tuntime", "version": env!("CARGO_PKG_VERSION") },
        "config_path": config_path.display().to_string(),
        "input": raw,
        "resolved": scenario,
        "constants": constants_json(&UnitSystem::electron()),
        "tolerances": tolerances_json(),
        "workers": workers.unwrap_or_else(|| pool.current_num_threads()),
        "started_unix_s": started,
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "outputs": outputs,
        "warnings": warnings,
        "failures": failures,
    });
    let mpath = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = std::fs::write(&mpath, text + "\n") {
        eprintln!("cannot write {}: {e}", mpath.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    if failures > 0 {
        eprintln!("{failures} rows failed numerically; see the status column");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    if warnings > 0 {
        eprintln!("{warnings} warnings (flagged rows)");
    }
    ExitCode::SUCCESS
}

fn validate(config_path: &Path) -> ExitCode {
    match config::load(config_path) {
        Ok((scenario, _)) => {
            println!("ok");
            println!("{}", serde_json::to_string_pretty(&scenario).expect("scenario serializes"));
            ExitCode::SUCCESS
        }
        Err(errors) => report_config_errors(config_path, &errors),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, workers, out } => run(&config, workers, out),
        Command::Validate { config } => validate(&config),
        Command::Constants => {
            let u = UnitSystem::electron();
            println!("hbar            {} eV·fs", u.hbar);
            println!("hbar^2/2m       {} eV·Å²", u.hbar2_over_2m);
            println!("c               {} Å/fs", u.c);
            println!("c               {} cm/s", tuntime::emguide::C_CM_PER_S);
            ExitCode::SUCCESS
        }
        Command::ListObservables => {
            for o in Observable::ALL {
                println!("{:<20} {}", o.name(), o.description());
                println!("{:<20} columns: {}", "", run::value_columns(o).join(", "));
            }
            ExitCode::SUCCESS
        }
    }
}
