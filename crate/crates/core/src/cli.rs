//! Batch front-end behind the `leaksync` binary.
//!
//! `leaksync analyze|simulate|compare|sweep <config> [--strict] [--out <dir>]
//! [--nmax <int>] [--convergence-check]`
//!
//! Every command prints its report to stdout and writes it next to any
//! data files in the output directory. Reports are flat `key = value`
//! lines that also parse as TOML.

use std::fmt::{self, Display};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::fock::C64;
use crate::metrics::AmplitudeError;
use crate::scenario::{compare_run, simulate, write_abort_marker, write_csv_rows, Comparison};
use crate::slmp::{analyze, check_conditions, mixing_angle, CVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CONDITIONS: i32 = 2;
pub const EXIT_PHYSICALITY: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

/// Thresholds applied by `--convergence-check` to the compare command.
pub const CONVERGENCE_FREQ_REL: f64 = 2e-3;
pub const CONVERGENCE_PHASE: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Single-leaking-mode analysis of the system.
    Analyze,
    /// Integrate the master equation and write the trajectory CSV.
    Simulate,
    /// Simulate, fit the tail and compare with the closed-form asymptote.
    Compare,
    /// Repeat compare along the `[sweep]` axis of the config.
    Sweep,
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "leaksync",
    version,
    about = "Synchronization through a leaking two-level system"
)]
pub struct Cli {
    pub command: Command,
    /// Scenario file (TOML).
    pub config: PathBuf,
    /// Exit with code 2 when the sufficient conditions do not hold.
    #[arg(long)]
    pub strict: bool,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override the Fock truncation.
    #[arg(long, value_name = "INT")]
    pub nmax: Option<usize>,
    /// Repeat the run at n_max + 2 and report the differences.
    #[arg(long)]
    pub convergence_check: bool,
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Physicality(_) | Error::StepSizeUnderflow { .. } => EXIT_PHYSICALITY,
                _ => EXIT_CONFIG,
            }
        }
    }
}

/// Flat `key = value` report.
#[derive(Clone, Debug, Default)]
pub struct FlatReport {
    entries: Vec<(String, String)>,
}

impl FlatReport {
    pub fn num(&mut self, key: impl Into<String>, v: f64) {
        self.entries.push((key.into(), fmt_num(v)));
    }

    pub fn int(&mut self, key: impl Into<String>, v: usize) {
        self.entries.push((key.into(), v.to_string()));
    }

    pub fn flag(&mut self, key: impl Into<String>, v: bool) {
        self.entries.push((key.into(), v.to_string()));
    }

    pub fn text(&mut self, key: impl Into<String>, v: &str) {
        self.entries.push((key.into(), format!("{v:?}")));
    }

    pub fn list(&mut self, key: impl Into<String>, v: impl IntoIterator<Item = f64>) {
        let items: Vec<String> = v.into_iter().map(fmt_num).collect();
        self.entries
            .push((key.into(), format!("[{}]", items.join(", "))));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

impl Display for FlatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = ScenarioConfig::load(&cli.config)?;
    if let Some(n) = cli.nmax {
        cfg.system.n_max = n;
        cfg.validate()?;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let stem = cli
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let files = OutputFiles {
        csv: out_dir.join(
            cfg.outputs
                .csv_path
                .clone()
                .unwrap_or(format!("{stem}.csv")),
        ),
        report: out_dir.join(
            cfg.outputs
                .report_path
                .clone()
                .unwrap_or(format!("{stem}.report")),
        ),
        analysis: out_dir.join(format!("{stem}_analysis.report")),
        sweep_csv: out_dir.join(format!("{stem}_sweep.csv")),
        sweep_report: out_dir.join(format!("{stem}_sweep.report")),
    };

    let mut report = FlatReport::default();
    report.text("config", &cli.config.display().to_string());
    let code = match cli.command {
        Command::Analyze => {
            report.text("command", "analyze");
            let sufficient = analysis_entries(&cfg, &mut report)?;
            emit(&report, &files.analysis)?;
            if cli.strict && sufficient == Some(false) {
                EXIT_CONDITIONS
            } else {
                EXIT_OK
            }
        }
        Command::Simulate | Command::Compare => {
            if cli.strict && !strict_gate(&cfg)? {
                return Ok(EXIT_CONDITIONS);
            }
            let compare = cli.command == Command::Compare;
            report.text("command", if compare { "compare" } else { "simulate" });
            run_single(&cfg, compare, cli.convergence_check, &files, &mut report)?
        }
        Command::Sweep => {
            if cli.strict && !strict_gate(&cfg)? {
                return Ok(EXIT_CONDITIONS);
            }
            report.text("command", "sweep");
            run_sweep(&cfg, &files, &mut report)?;
            EXIT_OK
        }
    };
    Ok(code)
}

struct OutputFiles {
    csv: PathBuf,
    report: PathBuf,
    analysis: PathBuf,
    sweep_csv: PathBuf,
    sweep_report: PathBuf,
}

fn emit(report: &FlatReport, path: &Path) -> Result<()> {
    print!("{report}");
    std::fs::write(path, report.to_string())?;
    Ok(())
}

/// `false` when a two-mode system misses a sufficient condition.
fn strict_gate(cfg: &ScenarioConfig) -> Result<bool> {
    let spec = cfg.spec()?;
    if spec.n_oscillators() != 2 || spec.n_tls() != 1 {
        return Ok(true);
    }
    let check = check_conditions(&spec, cfg.fit.condition_threshold)?;
    if !check.sufficient() {
        eprintln!(
            "sufficient conditions not met: r1 = {}, r2 = {}, r3 = {} (threshold {})",
            check.ratios.r1, check.ratios.r2, check.ratios.r3, check.threshold
        );
    }
    Ok(check.sufficient())
}

/// Writes the analysis keys; returns the condition verdict when defined.
fn analysis_entries(cfg: &ScenarioConfig, r: &mut FlatReport) -> Result<Option<bool>> {
    let spec = cfg.spec()?;
    let a = analyze(&spec, cfg.fit.condition_threshold)?;
    r.int("n_oscillators", spec.n_oscillators());
    r.int("n_tls", spec.n_tls());
    r.int("n_max", spec.n_max);
    if let Some(t) = &a.transform {
        r.num("gamma_angle", t.gamma_angle);
        r.num("omega_tilde1", t.omega_tilde[0]);
        r.num("omega_tilde2", t.omega_tilde[1]);
        r.num("g_tilde1", t.g_tilde[0]);
        r.num("g_tilde2", t.g_tilde[1]);
        r.num("xi12", t.xi12);
        r.num("eta", t.eta);
    }
    let verdict = a.conditions.map(|c| {
        r.num("r1", c.ratios.r1);
        r.num("r2", c.ratios.r2);
        r.num("r3", c.ratios.r3);
        r.num("condition_threshold", c.threshold);
        for (i, v) in c.verdicts.iter().enumerate() {
            r.flag(format!("condition{}", i + 1), *v);
        }
        r.flag("conditions_sufficient", c.sufficient());
        c.sufficient()
    });
    r.int("n_preserved", a.modes.preserved.len());
    r.int("n_leaking", a.modes.leaking.len());
    let mut vectors = |name: &str, vs: &[CVector]| {
        for (i, v) in vs.iter().enumerate() {
            r.list(format!("{name}{}.re", i + 1), v.iter().map(|z: &C64| z.re));
            r.list(format!("{name}{}.im", i + 1), v.iter().map(|z: &C64| z.im));
        }
    };
    vectors("preserved", &a.modes.preserved);
    vectors("leaking", &a.modes.leaking);
    r.list(
        "surviving_frequencies",
        a.modes.surviving_frequencies.iter().copied(),
    );
    r.num("frequency_spread", a.modes.frequency_spread());
    Ok(verdict)
}

fn write_csv(
    path: &Path,
    traj: &Trajectory,
    cfg: &ScenarioConfig,
    aborted_at: Option<f64>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv_rows(
        &mut w,
        traj,
        cfg.system.omega.len(),
        cfg.system.couplings.len(),
    )?;
    if let Some(t) = aborted_at {
        write_abort_marker(&mut w, t)?;
    }
    w.flush()?;
    Ok(())
}

fn run_single(
    cfg: &ScenarioConfig,
    compare: bool,
    convergence: bool,
    files: &OutputFiles,
    r: &mut FlatReport,
) -> Result<i32> {
    let start = Instant::now();
    let traj = match simulate(cfg) {
        Ok(t) => t,
        Err(Error::Physicality(v)) => {
            write_csv(&files.csv, &v.partial, cfg, Some(v.time))?;
            r.text("status", "aborted");
            r.num("aborted_at", v.time);
            r.text("violation", &v.detail);
            emit(r, &files.report)?;
            eprintln!("error: {v}");
            return Ok(EXIT_PHYSICALITY);
        }
        Err(e) => return Err(e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    write_csv(&files.csv, &traj, cfg, None)?;
    r.text("csv", &files.csv.display().to_string());
    r.text("status", "completed");
    r.int("n_max", cfg.system.n_max);
    r.int("n_points", traj.len());
    r.num("wall_time_s", elapsed);
    let s = traj.stats;
    r.int("solver.accepted_steps", s.accepted_steps);
    r.int("solver.rejected_steps", s.rejected_steps);
    r.int("solver.rhs_evaluations", s.rhs_evaluations);
    r.int("solver.positivity_checks", s.positivity_checks);
    r.num("solver.max_trace_error", s.max_trace_error);
    r.num("solver.max_hermiticity_error", s.max_hermiticity_error);
    r.num("solver.min_eigenvalue", s.min_eigenvalue);
    r.num("solver.global_error_estimate", s.global_error_estimate);
    if let Some(state) = traj.final_state() {
        let d = state.diagnostics();
        r.num("final.trace_error", d.trace_error);
        r.num("final.hermiticity_error", d.hermiticity_error);
        r.num("final.min_eigenvalue", d.min_eigenvalue);
    }
    for key in traj.keys() {
        if let Some(series) = traj.series(key) {
            let last = series[series.len() - 1];
            if key.starts_with('a') {
                r.num(format!("final.re_{key}"), last.re);
                r.num(format!("final.im_{key}"), last.im);
            } else {
                r.num(format!("final.{key}"), last.re);
            }
        }
    }

    let mut code = EXIT_OK;
    let comparison = if compare {
        let c = compare_run(cfg, &traj)?;
        comparison_entries(&c, r);
        if !c.agreement.pass() {
            code = EXIT_MISMATCH;
        }
        Some(c)
    } else {
        None
    };

    if convergence {
        let mut finer = cfg.clone();
        finer.system.n_max += 2;
        let traj2 = simulate(&finer)?;
        r.int("convergence.n_max", finer.system.n_max);
        let mut worst: f64 = 0.0;
        for key in traj.keys() {
            let (a, b) = (traj.series(key), traj2.series(key));
            if let (Some(a), Some(b)) = (a, b) {
                let diff = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                worst = worst.max(diff);
            }
        }
        r.num("convergence.max_observable_change", worst);
        if let Some(c) = comparison {
            let c2 = compare_run(&finer, &traj2)?;
            let dw = (c2.estimate.omega_fit - c.estimate.omega_fit).abs()
                / c.estimate.omega_fit.abs().max(f64::MIN_POSITIVE);
            let dphi =
                crate::metrics::phase_distance(c2.estimate.phase_diff, c.estimate.phase_diff);
            r.num("convergence.omega_fit_rel_change", dw);
            r.num("convergence.phase_diff_change", dphi);
            r.flag(
                "convergence.pass",
                dw < CONVERGENCE_FREQ_REL && dphi < CONVERGENCE_PHASE,
            );
        }
    }
    emit(r, &files.report)?;
    Ok(code)
}

fn comparison_entries(c: &Comparison, r: &mut FlatReport) {
    let p = &c.prediction;
    let e = &c.estimate;
    let a = &c.agreement;
    let [p1, p2] = p.position_amplitudes();
    r.num("predicted.omega_sync", p.omega_sync);
    r.num("predicted.phase_diff", p.phase_diff);
    r.num("predicted.amplitude1", p1);
    r.num("predicted.amplitude2", p2);
    r.flag("fit.oscillating", e.oscillating);
    r.num("fit.window_start", e.window.0);
    r.num("fit.window_end", e.window.1);
    r.num("fit.omega", e.omega_fit);
    r.num("fit.phase_diff", e.phase_diff);
    for (k, o) in e.oscillators.iter().enumerate() {
        r.num(format!("fit.amplitude{}", k + 1), o.amplitude);
        r.num(format!("fit.phase{}", k + 1), o.phase);
        r.num(format!("fit.offset{}", k + 1), o.offset);
    }
    r.num("fit.residual", e.fit_residual);
    r.num("error.freq_rel", a.freq_rel_error);
    r.num("error.phase", a.phase_error);
    for k in 0..2 {
        r.num(format!("error.amplitude{}", k + 1), a.amp_errors[k]);
        let kind = match a.amp_error_kind[k] {
            AmplitudeError::Relative => "relative",
            AmplitudeError::Absolute => "absolute",
        };
        r.text(format!("error.amplitude{}_kind", k + 1), kind);
    }
    r.flag("pass.frequency", a.freq_pass);
    r.flag("pass.phase", a.phase_pass);
    r.flag("pass.amplitude1", a.amp_pass[0]);
    r.flag("pass.amplitude2", a.amp_pass[1]);
    r.flag("missing_oscillation", a.missing_oscillation);
    r.flag("pass", a.pass());
}

/// One sweep row; failed runs keep NaN fit columns and `pass = false`.
#[derive(Clone, Copy, Debug)]
struct SweepRow {
    value: f64,
    ratios: [f64; 3],
    gamma_angle: f64,
    omega_fit: f64,
    phase_diff: f64,
    pass: bool,
}

fn sweep_row(base: &ScenarioConfig, field: &str, value: f64) -> Result<SweepRow> {
    let mut cfg = base.clone();
    cfg.set_field(field, value)?;
    cfg.validate()?;
    let spec = cfg.spec()?;
    let check = check_conditions(&spec, cfg.fit.condition_threshold)?;
    let gamma_angle = mixing_angle(spec.couplings[0][0], spec.couplings[0][1])?;
    let mut row = SweepRow {
        value,
        ratios: [check.ratios.r1, check.ratios.r2, check.ratios.r3],
        gamma_angle,
        omega_fit: f64::NAN,
        phase_diff: f64::NAN,
        pass: false,
    };
    match simulate(&cfg) {
        Ok(traj) => {
            let c = compare_run(&cfg, &traj)?;
            row.omega_fit = c.estimate.omega_fit;
            row.phase_diff = c.estimate.phase_diff;
            row.pass = c.agreement.pass();
        }
        Err(Error::Physicality(v)) => log::warn!("sweep value {value}: {v}"),
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn run_sweep(cfg: &ScenarioConfig, files: &OutputFiles, r: &mut FlatReport) -> Result<()> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("the sweep command needs a [sweep] section".into()))?;
    let rows: Vec<SweepRow> = sweep
        .values
        .par_iter()
        .map(|&v| sweep_row(cfg, &sweep.field, v))
        .collect::<Result<_>>()?;

    let mut w = BufWriter::new(File::create(&files.sweep_csv)?);
    writeln!(w, "value,r1,r2,r3,gamma_angle,omega_fit,phase_diff,pass")?;
    for row in &rows {
        let nums = [
            row.value,
            row.ratios[0],
            row.ratios[1],
            row.ratios[2],
            row.gamma_angle,
            row.omega_fit,
            row.phase_diff,
        ];
        let cells: Vec<String> = nums.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{},{}", cells.join(","), row.pass)?;
    }
    w.flush()?;

    r.text("sweep.field", &sweep.field);
    r.int("sweep.rows", rows.len());
    r.int("sweep.passed", rows.iter().filter(|row| row.pass).count());
    r.text("csv", &files.sweep_csv.display().to_string());
    emit(r, &files.sweep_report)
}
