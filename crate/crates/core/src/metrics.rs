//! Synchronization observables, closed-form asymptotes and their comparison.
//!
//! Positions are x_k = (a_k + a_k†)/√2, so a mode with ⟨a_k⟩ = z e^{−iωt}
//! traces ⟨x_k⟩ = √2|z| cos(ωt − arg z). Fitted phases follow the same
//! convention: a signal A cos(ωt − φ) has phase φ, which makes fitted and
//! predicted phase differences directly comparable.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DensityState, Trajectory};
use crate::error::{Error, Result};
use crate::fock::{embedded_annihilation, QOperator, SpaceLayout, C64};
use crate::model::SystemSpec;
use crate::slmp::transform_params;

/// Below this tail amplitude a signal counts as not oscillating.
pub const NO_OSCILLATION_AMPLITUDE: f64 = 1e-6;

/// Zero-padding factor of the frequency scan.
const SCAN_OVERSAMPLING: f64 = 8.0;

/// Wraps an angle into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// min(|Δ|, 2π − |Δ|) after wrapping.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// (a + a†)/√2 for the oscillator at `slot`.
pub fn position(layout: &SpaceLayout, slot: usize) -> Result<QOperator> {
    let a = embedded_annihilation(layout, slot)?;
    Ok((&a + &a.adjoint()).scale(C64::new(1.0 / SQRT_2, 0.0)))
}

/// tr(ρ O)
pub fn expectation(state: &DensityState, op: &QOperator) -> Result<C64> {
    state.expectation(op)
}

/// Long-time behaviour predicted by the single-leaking-mode analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticPrediction {
    /// Common frequency ω̃₁.
    pub omega_sync: f64,
    /// Time-independent prefactors of ⟨a_k⟩(t).
    pub amp: [C64; 2],
    /// arg(amp₂) − arg(amp₁), wrapped.
    pub phase_diff: f64,
}

impl AsymptoticPrediction {
    /// Peak ⟨x_k⟩ amplitude under the √2 position convention.
    pub fn position_amplitudes(&self) -> [f64; 2] {
        self.amp.map(|z| SQRT_2 * z.norm())
    }
}

/// Projects the initial amplitudes on the protected mode.
///
/// amp₁ = a₁cos²γ + a₂e^{−iφ}cosγ sinγ and amp₂ = a₁e^{iφ}cosγ sinγ + a₂sin²γ
/// with φ = π − (θ₂ − θ₁).
pub fn analytic_asymptote(spec: &SystemSpec, a1_0: C64, a2_0: C64) -> Result<AsymptoticPrediction> {
    let p = spec.two_mode()?;
    let t = transform_params(spec)?;
    let (s, c) = t.gamma_angle.sin_cos();
    let rel = C64::from_polar(1.0, PI - (p.theta[1] - p.theta[0]));
    let amp1 = a1_0 * (c * c) + a2_0 * rel.conj() * (c * s);
    let amp2 = a1_0 * rel * (c * s) + a2_0 * (s * s);
    let phase_diff = if amp1.norm() == 0.0 || amp2.norm() == 0.0 {
        0.0
    } else {
        wrap_phase(amp2.arg() - amp1.arg())
    };
    Ok(AsymptoticPrediction {
        omega_sync: t.omega_tilde[0],
        amp: [amp1, amp2],
        phase_diff,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct OscillatorFit {
    /// A in A cos(ωt − φ) + c.
    pub amplitude: f64,
    /// φ in A cos(ωt − φ) + c, wrapped.
    pub phase: f64,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncEstimate {
    pub omega_fit: f64,
    pub oscillators: [OscillatorFit; 2],
    /// φ₂ − φ₁, wrapped.
    pub phase_diff: f64,
    /// RMS residual over both signals.
    pub fit_residual: f64,
    pub window: (f64, f64),
    /// `false` when both tails are flat; the fit fields are then zero.
    pub oscillating: bool,
}

/// Fits a shared sinusoid to the tail of two recorded series.
pub fn fit_sync(
    traj: &Trajectory,
    keys: (&str, &str),
    window_fraction: f64,
) -> Result<SyncEstimate> {
    let x1 = traj
        .real_series(keys.0)
        .ok_or_else(|| Error::UnknownObservable(keys.0.to_string()))?;
    let x2 = traj
        .real_series(keys.1)
        .ok_or_else(|| Error::UnknownObservable(keys.1.to_string()))?;
    fit_signals(traj.times(), &x1, &x2, window_fraction)
}

/// [`fit_sync`] on plain slices.
pub fn fit_signals(
    times: &[f64],
    x1: &[f64],
    x2: &[f64],
    window_fraction: f64,
) -> Result<SyncEstimate> {
    if !(window_fraction > 0.0 && window_fraction <= 0.5) {
        return Err(Error::InvalidFit(format!(
            "window fraction {window_fraction} must lie in (0, 0.5]"
        )));
    }
    if times.len() != x1.len() || times.len() != x2.len() || times.len() < 2 {
        return Err(Error::InvalidFit(
            "series lengths differ or are too short".into(),
        ));
    }
    let t_first = times[0];
    let t_last = times[times.len() - 1];
    let t_start = t_last - window_fraction * (t_last - t_first);
    let begin = times.partition_point(|&t| t < t_start);
    let t = &times[begin..];
    let x1 = &x1[begin..];
    let x2 = &x2[begin..];
    if t.len() < 8 {
        return Err(Error::InvalidFit(format!(
            "only {} samples in the fit window",
            t.len()
        )));
    }
    let window = (t[0], t[t.len() - 1]);

    let swing = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
    };
    let (s1, s2) = (swing(x1), swing(x2));
    if s1 < NO_OSCILLATION_AMPLITUDE && s2 < NO_OSCILLATION_AMPLITUDE {
        return Ok(SyncEstimate {
            omega_fit: 0.0,
            oscillators: [OscillatorFit::default(); 2],
            phase_diff: 0.0,
            fit_residual: 0.0,
            window,
            oscillating: false,
        });
    }

    let probe = if s1 >= s2 { x1 } else { x2 };
    let (lo, hi) = spectral_peak(t, probe);
    let rss = |w: f64| linear_fit(t, x1, w).1 + linear_fit(t, x2, w).1;
    let omega = golden_section(rss, lo, hi, 1e-10 * hi);

    let (fit1, rss1) = linear_fit(t, x1, omega);
    let (fit2, rss2) = linear_fit(t, x2, omega);
    Ok(SyncEstimate {
        omega_fit: omega,
        oscillators: [fit1, fit2],
        phase_diff: wrap_phase(fit2.phase - fit1.phase),
        fit_residual: ((rss1 + rss2) / (2 * t.len()) as f64).sqrt(),
        window,
        oscillating: true,
    })
}

/// Bracket around the strongest nonzero frequency of `x` (mean removed).
fn spectral_peak(t: &[f64], x: &[f64]) -> (f64, f64) {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let min_dt = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let nyquist = PI / min_dt;
    let step = 2.0 * PI / (SCAN_OVERSAMPLING * span);
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut best = (step, -1.0);
    let mut k = 1usize;
    loop {
        let w = k as f64 * step;
        if w > nyquist {
            break;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (&ti, &xi) in t.iter().zip(x) {
            let (s, c) = (w * (ti - t[0])).sin_cos();
            re += (xi - mean) * c;
            im += (xi - mean) * s;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (w, power);
        }
        k += 1;
    }
    ((best.0 - step).max(0.5 * step), best.0 + step)
}

/// Least squares of x ≈ p cos ωt + q sin ωt + c at fixed ω.
fn linear_fit(t: &[f64], x: &[f64], omega: f64) -> (OscillatorFit, f64) {
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&ti, &xi) in t.iter().zip(x) {
        let (s, c) = (omega * ti).sin_cos();
        let row = Vector3::new(c, s, 1.0);
        normal += row * row.transpose();
        rhs += row * xi;
    }
    let coef = normal
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .unwrap_or_else(Vector3::zeros);
    let rss = t
        .iter()
        .zip(x)
        .map(|(&ti, &xi)| {
            let (s, c) = (omega * ti).sin_cos();
            let r = xi - (coef[0] * c + coef[1] * s + coef[2]);
            r * r
        })
        .sum();
    let fit = OscillatorFit {
        amplitude: coef[0].hypot(coef[1]),
        phase: coef[1].atan2(coef[0]),
        offset: coef[2],
    };
    (fit, rss)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Acceptance thresholds for [`compare`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitTolerances {
    /// |ω_fit − ω̃₁| / ω̃₁
    pub freq_rel: f64,
    /// Wrapped phase-difference distance in radians.
    pub phase: f64,
    /// Relative error of each fitted position amplitude.
    pub amp_rel: f64,
    /// Absolute amplitude error used when the prediction is zero.
    pub amp_abs: f64,
}

impl Default for FitTolerances {
    fn default() -> Self {
        Self {
            freq_rel: 0.02,
            phase: 0.15,
            amp_rel: 0.15,
            amp_abs: NO_OSCILLATION_AMPLITUDE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeError {
    Relative,
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgreementReport {
    pub freq_rel_error: f64,
    pub phase_error: f64,
    pub amp_errors: [f64; 2],
    pub amp_error_kind: [AmplitudeError; 2],
    pub freq_pass: bool,
    pub phase_pass: bool,
    pub amp_pass: [bool; 2],
    /// Oscillation was expected but the fit found a flat tail.
    pub missing_oscillation: bool,
}

impl AgreementReport {
    pub fn pass(&self) -> bool {
        self.freq_pass && self.phase_pass && self.amp_pass.iter().all(|&p| p)
    }
}

pub fn compare(
    prediction: &AsymptoticPrediction,
    estimate: &SyncEstimate,
    tol: &FitTolerances,
) -> AgreementReport {
    let predicted = prediction.position_amplitudes();
    let fitted = estimate.oscillators.map(|o| o.amplitude);
    let expects_motion = predicted.iter().any(|&a| a > tol.amp_abs);

    let mut amp_errors = [0.0; 2];
    let mut amp_error_kind = [AmplitudeError::Absolute; 2];
    let mut amp_pass = [true; 2];
    for k in 0..2 {
        if predicted[k] > tol.amp_abs {
            amp_errors[k] = (fitted[k] - predicted[k]).abs() / predicted[k];
            amp_error_kind[k] = AmplitudeError::Relative;
            amp_pass[k] = amp_errors[k] < tol.amp_rel;
        } else {
            amp_errors[k] = (fitted[k] - predicted[k]).abs();
            amp_pass[k] = amp_errors[k] < tol.amp_abs;
        }
    }

    let (freq_rel_error, phase_error) = if expects_motion && estimate.oscillating {
        (
            (estimate.omega_fit - prediction.omega_sync).abs() / prediction.omega_sync,
            phase_distance(estimate.phase_diff, prediction.phase_diff),
        )
    } else {
        (0.0, 0.0)
    };
    let missing_oscillation = expects_motion && !estimate.oscillating;
    AgreementReport {
        freq_rel_error,
        phase_error,
        amp_errors,
        amp_error_kind,
        freq_pass: !missing_oscillation && freq_rel_error < tol.freq_rel,
        phase_pass: !missing_oscillation && phase_error < tol.phase,
        amp_pass,
        missing_oscillation,
    }
}
