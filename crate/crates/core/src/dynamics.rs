//! Deterministic integration of the Lindblad master equation.
//!
//! The density matrix is advanced with the Dormand–Prince 5(4) pair and
//! step control on the max-norm of the embedded error estimate. The
//! generator is compiled once into row-sparse form: the two-mode
//! Hamiltonians have a handful of entries per row, so a dense product
//! would spend almost all of its time on zeros.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, PhysicalityViolation, Result};
use crate::fock::{
    coherent_fits, displacement, hermitian_eigenvalues, hermiticity_error, CMatrix, QOperator,
    SpaceLayout, Subsystem, C64, ONE, TLS_MINUS, TLS_PLUS, ZERO,
};
use crate::model::LindbladGenerator;

/// Trace and eigenvalue excursions beyond this abort the integration.
pub const HARD_LIMIT: f64 = 1e-6;

/// Tolerance on a caller-supplied initial state.
pub const INITIAL_STATE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step size; infinite when absent.
    pub max_step: Option<f64>,
    /// Smallest eigenvalue is computed every this many accepted steps.
    pub positivity_check_stride: usize,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            positivity_check_stride: 10,
            max_steps: 50_000_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("solver.rel_tol must be positive");
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad("solver.abs_tol must be positive");
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad("solver.max_step must be positive");
            }
        }
        if self.positivity_check_stride == 0 {
            return bad("solver.positivity_check_stride must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Diagnostics {
    /// |tr ρ − 1|
    pub trace_error: f64,
    /// ‖ρ − ρ†‖_max
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    pub fn of(matrix: &CMatrix) -> Self {
        Self {
            trace_error: (matrix.trace() - ONE).norm(),
            hermiticity_error: hermiticity_error(matrix),
            min_eigenvalue: hermitian_eigenvalues(matrix)
                .first()
                .copied()
                .unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    layout: SpaceLayout,
    matrix: CMatrix,
    diagnostics: Diagnostics,
}

impl DensityState {
    /// Wraps a matrix and computes its diagnostics; does not enforce validity.
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let dim = layout.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let diagnostics = Diagnostics::of(&matrix);
        Ok(Self {
            layout,
            matrix,
            diagnostics,
        })
    }

    /// |ψ⟩⟨ψ| for a normalized copy of `psi`.
    pub fn pure(layout: SpaceLayout, psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / C64::new(norm, 0.0);
        let matrix = &psi * psi.adjoint();
        Self::new(layout, matrix)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.diagnostics;
        if d.trace_error > tol || d.hermiticity_error > tol || d.min_eigenvalue < -tol {
            return Err(Error::InvalidState(format!(
                "density matrix outside tolerance {tol:e}: trace error {:e}, hermiticity error {:e}, min eigenvalue {:e}",
                d.trace_error, d.hermiticity_error, d.min_eigenvalue
            )));
        }
        Ok(())
    }

    /// tr(ρ O)
    pub fn expectation(&self, op: &QOperator) -> Result<C64> {
        if op.layout() != &self.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(trace_product(&self.matrix, op.matrix()))
    }
}

pub(crate) fn trace_product(rho: &CMatrix, op: &CMatrix) -> C64 {
    let d = rho.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += rho[(i, k)] * op[(k, i)];
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OscillatorState {
    Coherent(C64),
    Fock(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TlsState {
    Minus,
    Plus,
}

/// Product initial state; entries are consumed in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub oscillators: Vec<OscillatorState>,
    pub tls: Vec<TlsState>,
}

impl InitialState {
    pub fn coherent(alphas: &[C64], tls: TlsState, n_tls: usize) -> Self {
        Self {
            oscillators: alphas
                .iter()
                .map(|&a| OscillatorState::Coherent(a))
                .collect(),
            tls: vec![tls; n_tls],
        }
    }

    pub fn fock(ns: &[usize], tls: TlsState, n_tls: usize) -> Self {
        Self {
            oscillators: ns.iter().map(|&n| OscillatorState::Fock(n)).collect(),
            tls: vec![tls; n_tls],
        }
    }
}

/// Pure product density matrix; coherent factors are D(α)|0⟩ renormalized.
pub fn prepare_state(layout: &SpaceLayout, init: &InitialState) -> Result<DensityState> {
    let n_osc = layout.oscillator_slots().len();
    let n_tls = layout.tls_slots().len();
    if init.oscillators.len() != n_osc || init.tls.len() != n_tls {
        return Err(Error::InvalidState(format!(
            "layout has {n_osc} oscillators and {n_tls} two-level systems, initial state gives {} and {}",
            init.oscillators.len(),
            init.tls.len()
        )));
    }
    let mut oscillators = init.oscillators.iter();
    let mut tls = init.tls.iter();
    let mut psi = DVector::from_element(1, ONE);
    for s in layout.subsystems() {
        let factor = match *s {
            Subsystem::Oscillator { dim } => {
                let state = oscillators.next().expect("counted above");
                oscillator_ket(dim, *state)?
            }
            Subsystem::Tls => {
                let mut ket = DVector::zeros(2);
                match tls.next().expect("counted above") {
                    TlsState::Plus => ket[TLS_PLUS] = ONE,
                    TlsState::Minus => ket[TLS_MINUS] = ONE,
                }
                ket
            }
        };
        psi = psi.kronecker(&factor);
    }
    DensityState::pure(layout.clone(), &psi)
}

fn oscillator_ket(dim: usize, state: OscillatorState) -> Result<DVector<C64>> {
    match state {
        OscillatorState::Fock(n) => {
            if n >= dim {
                return Err(Error::FockIndex { n, n_max: dim - 1 });
            }
            let mut ket = DVector::zeros(dim);
            ket[n] = ONE;
            Ok(ket)
        }
        OscillatorState::Coherent(alpha) => {
            if !coherent_fits(dim, alpha) {
                return Err(Error::InvalidState(format!(
                    "coherent amplitude {alpha} needs more than {dim} Fock levels"
                )));
            }
            let d = displacement(dim, alpha)?;
            let ket = d.matrix().column(0).into_owned();
            let norm = ket.norm();
            Ok(ket / C64::new(norm, 0.0))
        }
    }
}

/// Row-compressed complex matrix.
#[derive(Clone, Debug)]
pub(crate) struct SparseRows {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    pub(crate) fn from_dense(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&k| m[(i, k)] != ZERO)
                    .map(|k| (k, m[(i, k)]))
                    .collect()
            })
            .collect();
        Self {
            dim: m.nrows(),
            rows,
        }
    }

    /// out = self · x  (column-major slices)
    fn mul_dense(&self, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for c in 0..d {
            let col = &x[c * d..(c + 1) * d];
            let dst = &mut out[c * d..(c + 1) * d];
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = ZERO;
                for &(k, v) in row {
                    acc += v * col[k];
                }
                dst[i] = acc;
            }
        }
    }

    /// tr(ρ · self)
    fn trace_with(&self, rho: &[C64]) -> C64 {
        let d = self.dim;
        let mut acc = ZERO;
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                // ρ[i, k] · O[k, i] summed; here O[i, k] · ρ[k, i]
                acc += v * rho[k + i * d];
            }
        }
        acc
    }

    fn abs_sum(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v.norm()).sum()
    }
}

/// Compiled right-hand side of the master equation.
struct Kernel {
    dim: usize,
    /// H − (i/2) Σ Γ L†L
    effective: SparseRows,
    /// (Γ, L)
    jumps: Vec<(f64, SparseRows)>,
    scratch: Vec<C64>,
    jump_scratch: Vec<C64>,
}

impl Kernel {
    fn new(generator: &LindbladGenerator) -> Self {
        let dim = generator.dim();
        let mut effective = generator.hamiltonian.matrix().clone();
        let mut jumps = Vec::new();
        for j in &generator.jump_ops {
            if j.rate == 0.0 {
                continue;
            }
            let l = j.op.matrix();
            effective -= l.adjoint() * l * C64::new(0.0, 0.5 * j.rate);
            jumps.push((j.rate, SparseRows::from_dense(l)));
        }
        Self {
            dim,
            effective: SparseRows::from_dense(&effective),
            jumps,
            scratch: vec![ZERO; dim * dim],
            jump_scratch: vec![ZERO; dim * dim],
        }
    }

    /// out = L(ρ) for Hermitian ρ; the result is exactly Hermitian.
    fn apply(&mut self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let m = &mut self.scratch;
        self.effective.mul_dense(rho, m);
        // −i(H_eff ρ − ρ H_eff†) = −i M + i M†
        for j in 0..d {
            for i in 0..=j {
                let z =
                    C64::new(0.0, -1.0) * m[i + j * d] + C64::new(0.0, 1.0) * m[j + i * d].conj();
                out[i + j * d] = z;
            }
        }
        for (rate, l) in &self.jumps {
            // T = L ρ, then (L ρ L†)[i, j] = Σ_k T[i, k] conj(L[j, k])
            let t = &mut self.jump_scratch;
            l.mul_dense(rho, t);
            for (j, row) in l.rows.iter().enumerate() {
                for i in 0..=j {
                    let mut acc = ZERO;
                    for &(k, v) in row {
                        acc += t[i + k * d] * v.conj();
                    }
                    out[i + j * d] += acc * *rate;
                }
            }
        }
        for j in 0..d {
            out[j + j * d] = C64::new(out[j + j * d].re, 0.0);
            for i in 0..j {
                out[j + i * d] = out[i + j * d].conj();
            }
        }
    }
}

/// Counters and worst-case diagnostics of one integration.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SolverStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub positivity_checks: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen at any positivity check.
    pub min_eigenvalue: f64,
    /// Sum of the unscaled local error estimates (max-norm over entries).
    pub global_error_estimate: f64,
}

/// Observables recorded on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    keys: Vec<String>,
    /// `values[key][time]`
    values: Vec<Vec<C64>>,
    /// Bound on the integration error of each observable.
    error_bounds: Vec<f64>,
    pub stats: SolverStats,
    final_state: Option<DensityState>,
}

impl Trajectory {
    /// Builds a trajectory from recorded series, e.g. for synthetic fits.
    pub fn from_series(times: Vec<f64>, series: Vec<(String, Vec<C64>)>) -> Result<Self> {
        check_grid(&times, false)?;
        for (key, values) in &series {
            if values.len() != times.len() {
                return Err(Error::InvalidGrid(format!(
                    "series '{key}' has {} samples for {} times",
                    values.len(),
                    times.len()
                )));
            }
        }
        let n = series.len();
        let (keys, values) = series.into_iter().unzip();
        Ok(Self {
            times,
            keys,
            values,
            error_bounds: vec![0.0; n],
            stats: SolverStats::default(),
            final_state: None,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, key: &str) -> Option<&[C64]> {
        self.keys
            .iter()
            .position(|k| k == key)
            .map(|i| self.values[i].as_slice())
    }

    pub fn real_series(&self, key: &str) -> Option<Vec<f64>> {
        self.series(key).map(|s| s.iter().map(|z| z.re).collect())
    }

    /// Observable values at grid index `i`, in key order.
    pub fn record(&self, i: usize) -> impl Iterator<Item = (&str, C64)> + '_ {
        self.keys
            .iter()
            .zip(&self.values)
            .map(move |(k, v)| (k.as_str(), v[i]))
    }

    pub fn error_bound(&self, key: &str) -> Option<f64> {
        self.keys
            .iter()
            .position(|k| k == key)
            .map(|i| self.error_bounds[i])
    }

    pub fn final_state(&self) -> Option<&DensityState> {
        self.final_state.as_ref()
    }
}

fn check_grid(times: &[f64], from_zero: bool) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if from_zero && times[0] != 0.0 {
        return Err(Error::InvalidGrid(format!(
            "grid must start at 0, starts at {}",
            times[0]
        )));
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(format!(
            "times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    Ok(())
}

/// `n_points` evenly spaced times on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || n_points < 2 {
        return Err(Error::InvalidGrid(format!(
            "need t_end > 0 and at least 2 points, got t_end = {t_end}, n_points = {n_points}"
        )));
    }
    let dt = t_end / (n_points - 1) as f64;
    let mut grid: Vec<f64> = (0..n_points).map(|i| i as f64 * dt).collect();
    grid[n_points - 1] = t_end;
    Ok(grid)
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper {
    kernel: Kernel,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    fsal_valid: bool,
}

impl Stepper {
    fn new(generator: &LindbladGenerator) -> Self {
        let n = generator.dim() * generator.dim();
        let zeros = || vec![ZERO; n];
        Self {
            kernel: Kernel::new(generator),
            k: std::array::from_fn(|_| zeros()),
            stage: zeros(),
            fsal_valid: false,
        }
    }

    /// Attempts one step; writes the candidate into `y_new` and returns the
    /// scaled error norm together with the unscaled max-norm error.
    fn attempt(
        &mut self,
        y: &[C64],
        h: f64,
        y_new: &mut [C64],
        opts: &SolverOptions,
        stats: &mut SolverStats,
    ) -> (f64, f64) {
        if !self.fsal_valid {
            let (k0, _) = self.k.split_at_mut(1);
            self.kernel.apply(y, &mut k0[0]);
            stats.rhs_evaluations += 1;
            self.fsal_valid = true;
        }
        for s in 1..7 {
            let n = y.len();
            for idx in 0..n {
                let mut acc = ZERO;
                for (r, &a) in A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        acc += self.k[r][idx] * a;
                    }
                }
                self.stage[idx] = y[idx] + acc * h;
            }
            let (_, rest) = self.k.split_at_mut(s);
            self.kernel.apply(&self.stage, &mut rest[0]);
            stats.rhs_evaluations += 1;
        }
        // the seventh stage input is the fifth-order solution
        y_new.copy_from_slice(&self.stage);

        let mut scaled: f64 = 0.0;
        let mut raw: f64 = 0.0;
        for idx in 0..y.len() {
            let mut e = ZERO;
            for (r, &w) in E.iter().enumerate() {
                if w != 0.0 {
                    e += self.k[r][idx] * w;
                }
            }
            let e = (e * h).norm();
            let sc = opts.abs_tol + opts.rel_tol * y[idx].norm().max(y_new[idx].norm());
            scaled = scaled.max(e / sc);
            raw = raw.max(e);
        }
        (scaled, raw)
    }

    fn accept(&mut self) {
        self.k.swap(0, 6);
    }
}

/// Integrates `rho0` over `t_grid`, recording ⟨O⟩ = tr(ρO) for every
/// observable at every grid time.
pub fn evolve(
    generator: &LindbladGenerator,
    rho0: &DensityState,
    t_grid: &[f64],
    observables: &[(String, QOperator)],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    check_grid(t_grid, true)?;
    if rho0.layout() != generator.layout() {
        return Err(Error::LayoutMismatch);
    }
    rho0.validate(INITIAL_STATE_TOLERANCE)?;
    for (key, op) in observables {
        if op.layout() != generator.layout() {
            return Err(Error::InvalidState(format!(
                "observable '{key}' lives on a different layout"
            )));
        }
    }

    let d = generator.dim();
    let compiled: Vec<SparseRows> = observables
        .iter()
        .map(|(_, op)| SparseRows::from_dense(op.matrix()))
        .collect();
    let mut values: Vec<Vec<C64>> = vec![Vec::with_capacity(t_grid.len()); observables.len()];
    let mut times = Vec::with_capacity(t_grid.len());

    let mut y: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let mut y_new = y.clone();
    let mut stepper = Stepper::new(generator);
    let mut stats = SolverStats {
        min_eigenvalue: rho0.diagnostics().min_eigenvalue,
        max_trace_error: rho0.diagnostics().trace_error,
        max_hermiticity_error: rho0.diagnostics().hermiticity_error,
        ..SolverStats::default()
    };

    let record = |y: &[C64], values: &mut Vec<Vec<C64>>| {
        for (series, op) in values.iter_mut().zip(&compiled) {
            series.push(op.trace_with(y));
        }
    };
    let partial = |times: &Vec<f64>, values: &Vec<Vec<C64>>, stats: SolverStats| Trajectory {
        times: times.clone(),
        keys: observables.iter().map(|(k, _)| k.clone()).collect(),
        values: values.clone(),
        error_bounds: vec![f64::NAN; observables.len()],
        stats,
        final_state: None,
    };

    times.push(t_grid[0]);
    record(&y, &mut values);

    let t_end = *t_grid.last().expect("grid checked non-empty");
    let max_step = opts.max_step.unwrap_or(f64::INFINITY);
    let mut h = initial_step(&mut stepper, &y, opts, &mut stats).min(max_step);
    let mut t = t_grid[0];
    let mut since_check = 0usize;
    let scale = t_end.abs().max(1.0);

    for &target in &t_grid[1..] {
        while t < target {
            let remaining = target - t;
            let truncated = h >= remaining || remaining - h < 1e-12 * scale;
            let h_try = if truncated { remaining } else { h };
            if h_try <= 1e-14 * scale {
                return Err(Error::StepSizeUnderflow { t });
            }
            let (err, raw) = stepper.attempt(&y, h_try, &mut y_new, opts, &mut stats);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !(err <= 1.0) {
                stats.rejected_steps += 1;
                h = (h_try * factor.min(1.0)).min(max_step);
                if !err.is_finite() {
                    h = h_try * 0.2;
                }
                continue;
            }

            stats.accepted_steps += 1;
            if stats.accepted_steps + stats.rejected_steps > opts.max_steps {
                return Err(Error::StepSizeUnderflow { t });
            }
            stats.global_error_estimate += raw;
            t = if truncated { target } else { t + h_try };
            std::mem::swap(&mut y, &mut y_new);
            stepper.accept();
            let h_next = (h_try * factor).min(max_step);
            h = if truncated && h_next >= h_try {
                h.max(h_next)
            } else {
                h_next
            };

            since_check += 1;
            let check_positivity = since_check >= opts.positivity_check_stride;
            if check_positivity {
                since_check = 0;
            }
            if let Some(detail) = check_physicality(&y, d, check_positivity, &mut stats) {
                return Err(Error::Physicality(Box::new(PhysicalityViolation {
                    time: t,
                    detail,
                    partial: partial(&times, &values, stats),
                })));
            }
        }
        times.push(target);
        record(&y, &mut values);
    }

    // final full check at the last grid point
    if let Some(detail) = check_physicality(&y, d, true, &mut stats) {
        return Err(Error::Physicality(Box::new(PhysicalityViolation {
            time: t,
            detail,
            partial: partial(&times, &values, stats),
        })));
    }

    let error_bounds = compiled
        .iter()
        .map(|op| op.abs_sum() * stats.global_error_estimate)
        .collect();
    let final_state = DensityState::new(
        generator.layout().clone(),
        CMatrix::from_column_slice(d, d, &y),
    )?;
    Ok(Trajectory {
        times,
        keys: observables.iter().map(|(k, _)| k.clone()).collect(),
        values,
        error_bounds,
        stats,
        final_state: Some(final_state),
    })
}

fn initial_step(
    stepper: &mut Stepper,
    y: &[C64],
    opts: &SolverOptions,
    stats: &mut SolverStats,
) -> f64 {
    let mut f = vec![ZERO; y.len()];
    stepper.kernel.apply(y, &mut f);
    stats.rhs_evaluations += 1;
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (yi, fi) in y.iter().zip(&f) {
        let sc = opts.abs_tol + opts.rel_tol * yi.norm();
        d0 = d0.max(yi.norm() / sc);
        d1 = d1.max(fi.norm() / sc);
    }
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1.0)
    }
}

fn check_physicality(
    y: &[C64],
    d: usize,
    positivity: bool,
    stats: &mut SolverStats,
) -> Option<String> {
    let trace: C64 = (0..d).map(|i| y[i + i * d]).sum();
    let trace_error = (trace - ONE).norm();
    let mut herm: f64 = 0.0;
    for j in 0..d {
        for i in 0..=j {
            herm = herm.max((y[i + j * d] - y[j + i * d].conj()).norm());
        }
    }
    stats.max_trace_error = stats.max_trace_error.max(trace_error);
    stats.max_hermiticity_error = stats.max_hermiticity_error.max(herm);
    if positivity {
        let m = CMatrix::from_column_slice(d, d, y);
        let min = hermitian_eigenvalues(&m)[0];
        stats.positivity_checks += 1;
        stats.min_eigenvalue = stats.min_eigenvalue.min(min);
        if min < -HARD_LIMIT {
            return Some(format!("minimum eigenvalue {min:e} below -{HARD_LIMIT:e}"));
        }
    }
    if trace_error > HARD_LIMIT {
        return Some(format!(
            "trace error {trace_error:e} exceeds {HARD_LIMIT:e}"
        ));
    }
    if herm > HARD_LIMIT {
        return Some(format!("hermiticity error {herm:e} exceeds {HARD_LIMIT:e}"));
    }
    None
}
