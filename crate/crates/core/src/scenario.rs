//! End-to-end runs of a [`ScenarioConfig`]: simulate, fit, compare.

use std::io::Write;

use crate::config::ScenarioConfig;
use crate::dynamics::{evolve, prepare_state, Trajectory};
use crate::error::{Error, Result};
use crate::fock::{embed, embedded_annihilation, number, pauli, Pauli, QOperator, C64};
use crate::metrics::{
    analytic_asymptote, compare, fit_sync, position, AgreementReport, AsymptoticPrediction,
    SyncEstimate,
};
use crate::model::{build_lindblad, SystemSpec};

/// x{k}, n{k}, a{k} per oscillator, then pe{j} per two-level system (1-based).
pub fn standard_observables(spec: &SystemSpec) -> Result<Vec<(String, QOperator)>> {
    let layout = spec.layout()?;
    let dim = spec.n_max + 1;
    let mut obs = Vec::new();
    for (k, slot) in layout.oscillator_slots().into_iter().enumerate() {
        obs.push((format!("x{}", k + 1), position(&layout, slot)?));
        obs.push((format!("n{}", k + 1), embed(&number(dim)?, &layout, slot)?));
        obs.push((format!("a{}", k + 1), embedded_annihilation(&layout, slot)?));
    }
    let excited = &pauli(Pauli::Plus) * &pauli(Pauli::Minus);
    for (j, slot) in layout.tls_slots().into_iter().enumerate() {
        obs.push((format!("pe{}", j + 1), embed(&excited, &layout, slot)?));
    }
    Ok(obs)
}

/// Integrates the scenario and records [`standard_observables`].
pub fn simulate(cfg: &ScenarioConfig) -> Result<Trajectory> {
    let spec = cfg.spec()?;
    let generator = build_lindblad(&spec)?;
    let rho0 = prepare_state(generator.layout(), &cfg.initial_state())?;
    let grid = cfg.time.grid()?;
    evolve(
        &generator,
        &rho0,
        &grid,
        &standard_observables(&spec)?,
        &cfg.solver,
    )
}

#[derive(Clone, Copy, Debug)]
pub struct Comparison {
    pub prediction: AsymptoticPrediction,
    pub estimate: SyncEstimate,
    pub agreement: AgreementReport,
}

/// Closed-form prediction for the scenario's two-mode system.
pub fn predict(cfg: &ScenarioConfig) -> Result<AsymptoticPrediction> {
    let spec = cfg.spec()?;
    let a = cfg.initial_state.mean_amplitudes();
    if a.len() != 2 || spec.n_tls() != 1 {
        return Err(Error::Config(
            "the closed-form comparison needs two oscillators and one two-level system".into(),
        ));
    }
    analytic_asymptote(&spec, a[0], a[1])
}

/// Fits the tail of `traj` and compares it with [`predict`].
pub fn compare_run(cfg: &ScenarioConfig, traj: &Trajectory) -> Result<Comparison> {
    let prediction = predict(cfg)?;
    let estimate = fit_sync(traj, ("x1", "x2"), cfg.fit.window_fraction)?;
    let agreement = compare(&prediction, &estimate, &cfg.fit.tolerances);
    Ok(Comparison {
        prediction,
        estimate,
        agreement,
    })
}

/// CSV header matching [`write_csv_rows`].
pub fn csv_header(n_osc: usize, n_tls: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for k in 1..=n_osc {
        cols.extend([
            format!("x{k}"),
            format!("n{k}"),
            format!("re_a{k}"),
            format!("im_a{k}"),
        ]);
    }
    cols.extend((1..=n_tls).map(|j| format!("pe{j}")));
    cols.join(",")
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header plus one row per recorded time, 17 significant digits, LF endings.
pub fn write_csv_rows<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    n_osc: usize,
    n_tls: usize,
) -> Result<()> {
    writeln!(out, "{}", csv_header(n_osc, n_tls))?;
    let col =
        |key: String| -> Result<&[C64]> { traj.series(&key).ok_or(Error::UnknownObservable(key)) };
    let mut columns: Vec<(&[C64], bool)> = Vec::new();
    for k in 1..=n_osc {
        columns.push((col(format!("x{k}"))?, false));
        columns.push((col(format!("n{k}"))?, false));
        let a = col(format!("a{k}"))?;
        columns.push((a, false));
        columns.push((a, true));
    }
    for j in 1..=n_tls {
        columns.push((col(format!("pe{j}"))?, false));
    }
    for (i, t) in traj.times().iter().enumerate() {
        let mut line = fmt(*t);
        for (series, imag) in &columns {
            line.push(',');
            line.push_str(&fmt(if *imag { series[i].im } else { series[i].re }));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Marker row appended after a partial trajectory.
pub fn write_abort_marker<W: Write>(out: &mut W, time: f64) -> Result<()> {
    writeln!(out, "# ABORTED t={time}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{InitialConfig, Rates, SystemConfig, TimeConfig};

    fn free_config() -> ScenarioConfig {
        let text = r#"
[system]
omega = [1.0, 1.2]
couplings = [[0.0, 0.0]]
gamma_decay = 0.0
n_max = 5

[initial_state]
kind = "coherent"
alphas = [[0.7, 0.0], [0.0, 0.0]]

[time]
t_end = 20.0
n_points = 201
"#;
        ScenarioConfig::parse(text).unwrap()
    }

    #[test]
    fn observables_in_column_order() {
        let spec = free_config().spec().unwrap();
        let keys: Vec<String> = standard_observables(&spec)
            .unwrap()
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        assert_eq!(keys, ["x1", "n1", "a1", "x2", "n2", "a2", "pe1"]);
        assert_eq!(
            csv_header(2, 1),
            "t,x1,n1,re_a1,im_a1,x2,n2,re_a2,im_a2,pe1"
        );
    }

    #[test]
    fn free_run_keeps_occupation() {
        let traj = simulate(&free_config()).unwrap();
        let n1 = traj.real_series("n1").unwrap();
        let first = n1[0];
        assert!((first - 0.49).abs() < 1e-4);
        assert!(n1.iter().all(|v| (v - first).abs() < 1e-6));
    }

    #[test]
    fn csv_layout() {
        let traj = simulate(&free_config()).unwrap();
        let mut buf = Vec::new();
        write_csv_rows(&mut buf, &traj, 2, 1).unwrap();
        write_abort_marker(&mut buf, 1.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 201 + 1);
        assert_eq!(lines[lines.len() - 1], "# ABORTED t=1.5");
        let row: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[0], "0.0000000000000000e0");
        let mantissa = row[1].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }

    #[test]
    fn predict_needs_two_modes() {
        let cfg = ScenarioConfig {
            system: SystemConfig {
                omega: vec![1.0, 1.0, 1.0],
                omega0: 1.0,
                couplings: vec![vec![0.1, 0.1, 0.0], vec![0.0, 0.1, 0.1]],
                phases: None,
                gamma_decay: Rates::Shared(0.1),
                n_max: 2,
            },
            initial_state: InitialConfig::Fock {
                ns: vec![1, 0, 0],
                tls: crate::dynamics::TlsState::Minus,
            },
            time: TimeConfig::default(),
            solver: Default::default(),
            fit: Default::default(),
            outputs: Default::default(),
            sweep: None,
        };
        assert!(matches!(predict(&cfg), Err(Error::Config(_))));
    }
}
