//! Scenario files: TOML documents describing one run.
//!
//! ```toml
//! [system]
//! omega = [0.95, 1.01]
//! omega0 = 1.0
//! couplings = [[0.2, 0.21]]
//! phases = [[0.0, 0.7853981633974483]]
//! gamma_decay = 0.1          # one rate for every two-level system, or a list
//! n_max = 6
//!
//! [initial_state]
//! kind = "coherent"          # or "fock" with `ns = [2, 0]`
//! alphas = [[0.7, 0.0], [0.0, 0.0]]
//! tls = "minus"
//!
//! [time]
//! t_end = 400.0
//! n_points = 4001
//!
//! [solver]                   # optional, see `SolverOptions`
//! [fit]                      # optional, see `FitConfig`
//! [outputs]                  # optional file names, relative to --out
//! [sweep]                    # only read by the sweep command
//! field = "gamma_decay"
//! values = [0.05, 0.1, 0.2]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{uniform_grid, InitialState, OscillatorState, SolverOptions, TlsState};
use crate::error::{Error, Result};
use crate::fock::C64;
use crate::metrics::FitTolerances;
use crate::model::SystemSpec;
use crate::slmp::DEFAULT_CONDITION_THRESHOLD;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub initial_state: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub omega: Vec<f64>,
    #[serde(default = "unit")]
    pub omega0: f64,
    pub couplings: Vec<Vec<f64>>,
    /// Defaults to all zeros.
    #[serde(default)]
    pub phases: Option<Vec<Vec<f64>>>,
    pub gamma_decay: Rates,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn unit() -> f64 {
    1.0
}

fn default_n_max() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Shared(f64),
    PerTls(Vec<f64>),
}

impl SystemConfig {
    pub fn to_spec(&self) -> Result<SystemSpec> {
        let m = self.couplings.len();
        let phases = match &self.phases {
            Some(p) => p.clone(),
            None => self
                .couplings
                .iter()
                .map(|row| vec![0.0; row.len()])
                .collect(),
        };
        let gamma_decay = match &self.gamma_decay {
            Rates::Shared(g) => vec![*g; m],
            Rates::PerTls(v) => v.clone(),
        };
        let spec = SystemSpec {
            omega: self.omega.clone(),
            omega0: self.omega0,
            couplings: self.couplings.clone(),
            phases,
            gamma_decay,
            n_max: self.n_max,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    Coherent {
        /// `[re, im]` per oscillator.
        alphas: Vec<[f64; 2]>,
        #[serde(default = "minus")]
        tls: TlsState,
    },
    Fock {
        ns: Vec<usize>,
        #[serde(default = "minus")]
        tls: TlsState,
    },
}

fn minus() -> TlsState {
    TlsState::Minus
}

impl InitialConfig {
    pub fn to_state(&self, n_tls: usize) -> InitialState {
        match self {
            Self::Coherent { alphas, tls } => {
                let a: Vec<C64> = alphas.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                InitialState::coherent(&a, *tls, n_tls)
            }
            Self::Fock { ns, tls } => InitialState::fock(ns, *tls, n_tls),
        }
    }

    /// Initial ⟨a_k⟩ used by the closed-form asymptote.
    pub fn mean_amplitudes(&self) -> Vec<C64> {
        self.to_state(0)
            .oscillators
            .iter()
            .map(|s| match s {
                OscillatorState::Coherent(a) => *a,
                OscillatorState::Fock(_) => C64::new(0.0, 0.0),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub n_points: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_end: 400.0,
            n_points: 4001,
        }
    }
}

impl TimeConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        uniform_grid(self.t_end, self.n_points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Trailing fraction of the trajectory used by the sinusoid fit.
    pub window_fraction: f64,
    pub condition_threshold: f64,
    pub tolerances: FitTolerances,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            window_fraction: 0.25,
            condition_threshold: DEFAULT_CONDITION_THRESHOLD,
            tolerances: FitTolerances::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub field: String,
    pub values: Vec<f64>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn spec(&self) -> Result<SystemSpec> {
        self.system.to_spec()
    }

    pub fn initial_state(&self) -> InitialState {
        self.initial_state.to_state(self.system.couplings.len())
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        let n = spec.n_oscillators();
        let given = match &self.initial_state {
            InitialConfig::Coherent { alphas, .. } => alphas.len(),
            InitialConfig::Fock { ns, .. } => ns.len(),
        };
        if given != n {
            return Err(Error::Config(format!(
                "initial_state lists {given} oscillators, system has {n}"
            )));
        }
        if let InitialConfig::Fock { ns, .. } = &self.initial_state {
            if let Some(&bad) = ns.iter().find(|&&k| k > spec.n_max) {
                return Err(Error::FockIndex {
                    n: bad,
                    n_max: spec.n_max,
                });
            }
        }
        self.time.grid()?;
        self.solver.validate()?;
        let w = self.fit.window_fraction;
        if !(w > 0.0 && w <= 0.5) {
            return Err(Error::Config(format!(
                "fit.window_fraction = {w} must lie in (0, 0.5]"
            )));
        }
        if !(self.fit.condition_threshold > 0.0) {
            return Err(Error::Config(
                "fit.condition_threshold must be positive".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
            let mut probe = self.clone();
            probe.set_field(&sweep.field, sweep.values[0])?;
        }
        Ok(())
    }

    /// Sets one scalar system parameter by name.
    ///
    /// Accepts `omega0`, `gamma_decay` (all rates), `gamma_decay.J`,
    /// `omega.K`, `couplings.J.K`, `phases.J.K` with 1-based indices, and
    /// the two-mode aliases `omega1`, `omega2`, `g1`, `g2`, `theta1`, `theta2`.
    pub fn set_field(&mut self, field: &str, value: f64) -> Result<()> {
        let unknown = || Error::Config(format!("unknown sweep field '{field}'"));
        let canonical = match field {
            "omega1" => "omega.1".to_string(),
            "omega2" => "omega.2".to_string(),
            "g1" => "couplings.1.1".to_string(),
            "g2" => "couplings.1.2".to_string(),
            "theta1" => "phases.1.1".to_string(),
            "theta2" => "phases.1.2".to_string(),
            other => other.to_string(),
        };
        let mut parts = canonical.split('.');
        let name = parts.next().ok_or_else(unknown)?;
        let idx: Vec<usize> = parts
            .map(|p| p.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1))
            .collect::<Option<_>>()
            .ok_or_else(unknown)?;
        let n = self.system.omega.len();
        let m = self.system.couplings.len();
        let sys = &mut self.system;
        match (name, idx.as_slice()) {
            ("omega0", []) => sys.omega0 = value,
            ("gamma_decay", []) => sys.gamma_decay = Rates::Shared(value),
            ("gamma_decay", [j]) if *j < m => {
                let mut rates = match &sys.gamma_decay {
                    Rates::Shared(g) => vec![*g; m],
                    Rates::PerTls(v) => v.clone(),
                };
                rates[*j] = value;
                sys.gamma_decay = Rates::PerTls(rates);
            }
            ("omega", [k]) if *k < n => sys.omega[*k] = value,
            ("couplings", [j, k]) if *j < m && *k < n => sys.couplings[*j][*k] = value,
            ("phases", [j, k]) if *j < m && *k < n => {
                let phases = sys.phases.get_or_insert_with(|| vec![vec![0.0; n]; m]);
                phases[*j][*k] = value;
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"
[system]
omega = [0.95, 1.01]
couplings = [[0.2, 0.21]]
phases = [[0.0, 0.7853981633974483]]
gamma_decay = 0.1

[initial_state]
kind = "coherent"
alphas = [[0.7, 0.0], [0.0, 0.0]]
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::parse(FIG1).unwrap();
        assert_eq!(cfg.system.n_max, 6);
        assert_eq!(cfg.system.omega0, 1.0);
        assert_eq!(cfg.time, TimeConfig::default());
        assert_eq!(cfg.fit, FitConfig::default());
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.gamma_decay, vec![0.1]);
        assert_eq!(cfg.initial_state().tls, vec![TlsState::Minus]);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ScenarioConfig::parse(FIG1).unwrap();
        cfg.solver.max_step = Some(0.5);
        cfg.outputs.csv_path = Some("out.csv".into());
        cfg.sweep = Some(SweepConfig {
            field: "g2".into(),
            values: vec![0.1, 0.2],
        });
        let text = cfg.to_toml().unwrap();
        assert_eq!(ScenarioConfig::parse(&text).unwrap(), cfg);

        let fock = FIG1.replace(
            "kind = \"coherent\"\nalphas = [[0.7, 0.0], [0.0, 0.0]]",
            "kind = \"fock\"\nns = [2, 0]\ntls = \"plus\"",
        );
        let cfg = ScenarioConfig::parse(&fock).unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let typo = FIG1.replace("gamma_decay", "gamma_decy");
        let msg = ScenarioConfig::parse(&typo).unwrap_err().to_string();
        assert!(msg.contains("gamma_decy"), "{msg}");
        assert!(msg.contains("line"), "{msg}");

        let short = FIG1.replace("[[0.7, 0.0], [0.0, 0.0]]", "[[0.7, 0.0]]");
        assert!(matches!(
            ScenarioConfig::parse(&short),
            Err(Error::Config(_))
        ));

        let negative = FIG1.replace("gamma_decay = 0.1", "gamma_decay = -0.1");
        assert!(matches!(
            ScenarioConfig::parse(&negative),
            Err(Error::NegativeRate { .. })
        ));

        let high = FIG1.replace(
            "kind = \"coherent\"\nalphas = [[0.7, 0.0], [0.0, 0.0]]",
            "kind = \"fock\"\nns = [7, 0]",
        );
        assert!(matches!(
            ScenarioConfig::parse(&high),
            Err(Error::FockIndex { n: 7, n_max: 6 })
        ));

        let bad_time = format!("{FIG1}\n[time]\nt_end = -1.0\n");
        assert!(matches!(
            ScenarioConfig::parse(&bad_time),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn sweep_fields() {
        let mut cfg = ScenarioConfig::parse(FIG1).unwrap();
        cfg.set_field("g2", 0.3).unwrap();
        cfg.set_field("omega.1", 0.9).unwrap();
        cfg.set_field("theta2", 1.0).unwrap();
        cfg.set_field("gamma_decay.1", 0.2).unwrap();
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.couplings[0], vec![0.2, 0.3]);
        assert_eq!(spec.omega[0], 0.9);
        assert_eq!(spec.phases[0][1], 1.0);
        assert_eq!(spec.gamma_decay, vec![0.2]);
        for bad in [
            "omega.3",
            "omega.0",
            "g3",
            "n_max",
            "couplings.1",
            "phases.x.1",
        ] {
            assert!(
                matches!(cfg.set_field(bad, 1.0), Err(Error::Config(_))),
                "{bad}"
            );
        }
        let unknown = format!("{FIG1}\n[sweep]\nfield = \"mass\"\nvalues = [1.0]\n");
        assert!(matches!(
            ScenarioConfig::parse(&unknown),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn per_tls_rates_and_missing_phases() {
        let text = r#"
[system]
omega = [1.0, 1.0, 1.0]
couplings = [[0.1, 0.1, 0.0], [0.0, 0.1, 0.1]]
gamma_decay = [0.1, 0.2]
n_max = 2

[initial_state]
kind = "fock"
ns = [1, 0, 0]
"#;
        let cfg = ScenarioConfig::parse(text).unwrap();
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.gamma_decay, vec![0.1, 0.2]);
        assert_eq!(spec.phases, vec![vec![0.0; 3]; 2]);
        assert_eq!(cfg.initial_state().tls.len(), 2);
        assert_eq!(
            cfg.initial_state.mean_amplitudes(),
            vec![C64::new(0.0, 0.0); 3]
        );
    }
}
