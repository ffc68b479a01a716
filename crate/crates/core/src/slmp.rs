//! Single-leaking-mode analysis.
//!
//! A phase rotation followed by a mode rotation by the mixing angle γ
//! (tan γ = g₁/g₂) brings the two-oscillator Hamiltonian into a frame in
//! which only one collective mode touches the two-level system. The other
//! mode is protected from dissipation apart from the residual tunnelling
//! ξ₁₂ = (ω₁ − ω₂) sin γ cos γ.
//!
//! For N oscillators and M two-level systems the protected modes are the
//! orthogonal complement of the coupling rows `g_{jk} e^{iθ_{jk}}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{embedded_annihilation, embedded_pauli, expm, CMatrix, Pauli, QOperator, C64};
use crate::model::{build_hamiltonian, SystemSpec, TwoModeParams};

/// Ratios below this count as "much smaller" by default.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 0.5;

/// Inner-block margin for checks on truncated rotations.
pub const EXCITATION_MARGIN: usize = 2;

const RANK_TOLERANCE: f64 = 1e-10;

pub type CVector = DVector<C64>;

/// γ = atan2(g₁, g₂), mapped into `[0, π)`.
pub fn mixing_angle(g1: f64, g2: f64) -> Result<f64> {
    if g1 == 0.0 && g2 == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    if g1 < 0.0 || !g1.is_finite() || !g2.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "mixing angle needs finite couplings with g1 >= 0, got ({g1}, {g2})"
        )));
    }
    let gamma = g1.atan2(g2);
    // g1 = 0 with g2 < 0 lands on π, which mixes exactly like 0.
    Ok(if gamma >= std::f64::consts::PI {
        0.0
    } else {
        gamma
    })
}

/// Scalar quantities of the rotated two-mode frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeTransform {
    pub gamma_angle: f64,
    pub omega_tilde: [f64; 2],
    pub g_tilde: [f64; 2],
    pub xi12: f64,
    pub eta: f64,
}

impl TwoModeTransform {
    /// Rotated coefficients for an arbitrary angle; `g_tilde[0]` vanishes only
    /// at the mixing angle.
    pub fn at_angle(p: &TwoModeParams, gamma: f64) -> Self {
        let (s, c) = gamma.sin_cos();
        let [w1, w2] = p.omega;
        let [g1, g2] = p.g;
        Self {
            gamma_angle: gamma,
            omega_tilde: [w1 * c * c + w2 * s * s, w1 * s * s + w2 * c * c],
            g_tilde: [g1 * c - g2 * s, g1 * s + g2 * c],
            xi12: (w1 - w2) * s * c,
            eta: ((g1 * g1 + g2 * g2) / (w1 * w1 + w2 * w2)).sqrt(),
        }
    }
}

pub fn transform_params(spec: &SystemSpec) -> Result<TwoModeTransform> {
    let p = spec.two_mode()?;
    let gamma = mixing_angle(p.g[0], p.g[1])?;
    Ok(TwoModeTransform::at_angle(&p, gamma))
}

/// Raw ratios for the three sufficient conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionRatios {
    /// |ω₁ − ω₂| |g₁g₂| / (g₁² + g₂²)^{3/2}
    pub r1: f64,
    /// |ξ₁₂| / Γ
    pub r2: f64,
    /// η
    pub r3: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionCheck {
    pub ratios: ConditionRatios,
    pub threshold: f64,
    pub verdicts: [bool; 3],
}

impl ConditionCheck {
    /// All three sufficient conditions hold. Failing them does not rule out
    /// synchronization.
    pub fn sufficient(&self) -> bool {
        self.verdicts.iter().all(|&v| v)
    }
}

pub fn check_conditions(spec: &SystemSpec, threshold: f64) -> Result<ConditionCheck> {
    let p = spec.two_mode()?;
    let t = transform_params(spec)?;
    let [g1, g2] = p.g;
    let norm2 = g1 * g1 + g2 * g2;
    let r1 = (p.omega[0] - p.omega[1]).abs() * (g1 * g2).abs() / norm2.powf(1.5);
    let r2 = if p.gamma > 0.0 {
        t.xi12.abs() / p.gamma
    } else {
        f64::INFINITY
    };
    let ratios = ConditionRatios { r1, r2, r3: t.eta };
    let verdicts = [r1, r2, t.eta].map(|r| r < threshold);
    Ok(ConditionCheck {
        ratios,
        threshold,
        verdicts,
    })
}

/// Protected and leaking collective modes as coefficient vectors over the
/// bare annihilation operators (mode = Σ_k u_k a_k).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeDecomposition {
    pub preserved: Vec<CVector>,
    pub leaking: Vec<CVector>,
    /// Ascending eigenvalues of Ω restricted to the preserved subspace.
    pub surviving_frequencies: Vec<f64>,
}

impl ModeDecomposition {
    /// max − min of the surviving frequencies; 0 with fewer than two.
    pub fn frequency_spread(&self) -> f64 {
        match (
            self.surviving_frequencies.first(),
            self.surviving_frequencies.last(),
        ) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// Splits C^N into the span of the coupling rows and its complement.
pub fn mode_decomposition(
    couplings: &[Vec<f64>],
    phases: &[Vec<f64>],
    omega: &[f64],
) -> Result<ModeDecomposition> {
    let n = omega.len();
    if couplings.len() != phases.len() || couplings.iter().chain(phases).any(|row| row.len() != n) {
        return Err(Error::InvalidSpec(
            "coupling and phase matrices must both be M x N".into(),
        ));
    }
    let rows: Vec<CVector> = couplings
        .iter()
        .zip(phases)
        .map(|(g, t)| {
            CVector::from_iterator(n, g.iter().zip(t).map(|(&g, &t)| C64::from_polar(g, t)))
        })
        .collect();

    let scale = rows.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        log::warn!("coupling matrix is zero: every mode is preserved");
    }
    let leaking = pivoted_gram_schmidt(&rows, &[], RANK_TOLERANCE * scale);
    let unit: Vec<CVector> = (0..n)
        .map(|k| {
            let mut e = CVector::zeros(n);
            e[k] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    let preserved = pivoted_gram_schmidt(&unit, &leaking, 1e-8);

    let surviving_frequencies = if preserved.is_empty() {
        vec![]
    } else {
        let q = DMatrix::from_columns(&preserved);
        let omega_diag = DMatrix::from_diagonal(&CVector::from_iterator(
            n,
            omega.iter().map(|&w| C64::new(w, 0.0)),
        ));
        crate::fock::hermitian_eigenvalues(&(q.adjoint() * omega_diag * &q))
    };

    Ok(ModeDecomposition {
        preserved: preserved.into_iter().map(fix_phase).collect(),
        leaking: leaking.into_iter().map(fix_phase).collect(),
        surviving_frequencies,
    })
}

/// Orthonormal basis of span(candidates) outside span(against).
///
/// At every round the candidate with the largest remaining norm is taken
/// (lowest index on ties); the loop stops once that norm falls below `tol`.
fn pivoted_gram_schmidt(candidates: &[CVector], against: &[CVector], tol: f64) -> Vec<CVector> {
    let project_out = |v: &mut CVector, basis: &[CVector]| {
        // two passes keep the result orthogonal to round-off
        for _ in 0..2 {
            for b in basis {
                let overlap = b.dotc(v);
                *v -= b * overlap;
            }
        }
    };
    let mut residual: Vec<CVector> = candidates.to_vec();
    for r in residual.iter_mut() {
        project_out(r, against);
    }
    let mut basis: Vec<CVector> = Vec::new();
    let mut used = vec![false; residual.len()];
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in residual.iter().enumerate() {
            if used[i] {
                continue;
            }
            let norm = r.norm();
            if best.is_none_or(|(_, b)| norm > b) {
                best = Some((i, norm));
            }
        }
        let Some((i, norm)) = best else { break };
        if norm <= tol || norm == 0.0 {
            break;
        }
        used[i] = true;
        let mut v = residual[i].clone();
        project_out(&mut v, &basis);
        let norm = v.norm();
        let v = v / C64::new(norm, 0.0);
        for (k, r) in residual.iter_mut().enumerate() {
            if !used[k] {
                let overlap = v.dotc(r);
                *r -= &v * overlap;
            }
        }
        basis.push(v);
    }
    basis
}

/// Makes the largest-magnitude component real and positive.
fn fix_phase(v: CVector) -> CVector {
    let mut pivot = 0;
    let mut largest = -1.0;
    for (k, z) in v.iter().enumerate() {
        // ties resolved towards the lowest index, with slack for round-off
        if z.norm() > largest * (1.0 + 1e-12) {
            largest = z.norm();
            pivot = k;
        }
    }
    let phase = v[pivot] / C64::new(v[pivot].norm(), 0.0);
    let mut out = v * phase.conj();
    out[pivot] = C64::new(out[pivot].re, 0.0);
    out
}

/// Full report for one system.
#[derive(Clone, Debug, PartialEq)]
pub struct SlmpReport {
    /// Present for two oscillators and one two-level system with a
    /// nonzero coupling.
    pub transform: Option<TwoModeTransform>,
    pub conditions: Option<ConditionCheck>,
    pub modes: ModeDecomposition,
}

pub fn analyze(spec: &SystemSpec, threshold: f64) -> Result<SlmpReport> {
    spec.validate()?;
    let modes = mode_decomposition(&spec.couplings, &spec.phases, &spec.omega)?;
    let two_mode = spec.n_oscillators() == 2 && spec.n_tls() == 1;
    let (transform, conditions) = if two_mode {
        match transform_params(spec) {
            Ok(t) => (Some(t), Some(check_conditions(spec, threshold)?)),
            Err(Error::UndefinedAngle) => (None, None),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };
    Ok(SlmpReport {
        transform,
        conditions,
        modes,
    })
}

/// U_p = exp(iθ₁n₁ + iθ₂n₂) and U_r = exp[γ(a₁a₂† − a₁†a₂)] on the
/// two-mode layout.
pub fn build_slmp_unitaries(spec: &SystemSpec) -> Result<(QOperator, QOperator)> {
    let p = spec.two_mode()?;
    let gamma = match mixing_angle(p.g[0], p.g[1]) {
        Ok(g) => g,
        Err(Error::UndefinedAngle) => 0.0,
        Err(e) => return Err(e),
    };
    unitaries_at(spec, p.theta, gamma)
}

fn unitaries_at(spec: &SystemSpec, theta: [f64; 2], gamma: f64) -> Result<(QOperator, QOperator)> {
    let layout = spec.layout()?;
    let dim = layout.total_dim();
    let phase = DVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let levels = layout.levels_of(i);
            C64::from_polar(
                1.0,
                theta[0] * levels[0] as f64 + theta[1] * levels[1] as f64,
            )
        }),
    );
    let u_p = QOperator::new(layout.clone(), CMatrix::from_diagonal(&phase))?;

    let a1 = embedded_annihilation(&layout, 0)?.into_matrix();
    let a2 = embedded_annihilation(&layout, 1)?.into_matrix();
    let generator = (&a1 * a2.adjoint() - a1.adjoint() * &a2) * C64::new(gamma, 0.0);
    let u_r = QOperator::new(layout, expm(&generator))?;
    Ok((u_p, u_r))
}

/// Basis indices whose total oscillator excitation is at most `n_max − margin`.
pub fn inner_block(spec: &SystemSpec, margin: usize) -> Result<Vec<usize>> {
    let layout = spec.layout()?;
    let n = spec.n_oscillators();
    let limit = spec.n_max.saturating_sub(margin);
    Ok((0..layout.total_dim())
        .filter(|&i| layout.levels_of(i)[..n].iter().sum::<usize>() <= limit)
        .collect())
}

/// Largest entry of `m` restricted to rows and columns in `block`.
pub fn block_max_abs(m: &CMatrix, block: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for &i in block {
        for &j in block {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

/// Transformed Hamiltonian assembled directly from ω̃_k, g̃_k and ξ₁₂.
pub fn build_transformed_hamiltonian(spec: &SystemSpec, t: &TwoModeTransform) -> Result<QOperator> {
    let p = spec.two_mode()?;
    let layout = spec.layout()?;
    let a1 = embedded_annihilation(&layout, 0)?.into_matrix();
    let a2 = embedded_annihilation(&layout, 1)?.into_matrix();
    let sz = embedded_pauli(Pauli::Z, &layout, 2)?.into_matrix();
    let sx = embedded_pauli(Pauli::X, &layout, 2)?.into_matrix();
    let re = |x: f64| C64::new(x, 0.0);
    let mut h =
        a1.adjoint() * &a1 * re(t.omega_tilde[0]) + a2.adjoint() * &a2 * re(t.omega_tilde[1]);
    h += sz * re(0.5 * p.omega0);
    let field = (&a1 + a1.adjoint()) * re(t.g_tilde[0]) + (&a2 + a2.adjoint()) * re(t.g_tilde[1]);
    h += field * sx;
    let hop = a1.adjoint() * &a2 * re(t.xi12);
    h += &hop + hop.adjoint();
    QOperator::new(layout, h)
}

/// ‖(U_r U_p) H (U_r U_p)† − H̃‖_max on the inner excitation block.
pub fn verify_slmp_equivalence(spec: &SystemSpec, n_max: usize) -> Result<f64> {
    if n_max < 4 {
        return Err(Error::InvalidDimension {
            dim: n_max + 1,
            reason: "equivalence check needs n_max >= 4",
        });
    }
    let mut spec = spec.clone();
    spec.n_max = n_max;
    let p = spec.two_mode()?;
    let (u_p, u_r) = build_slmp_unitaries(&spec)?;
    let gamma = mixing_angle(p.g[0], p.g[1]).unwrap_or(0.0);
    let t = TwoModeTransform::at_angle(&p, gamma);

    let h = build_hamiltonian(&spec)?;
    let u = u_r.matrix() * u_p.matrix();
    let rotated = &u * h.matrix() * u.adjoint();
    let direct = build_transformed_hamiltonian(&spec, &t)?;
    let block = inner_block(&spec, EXCITATION_MARGIN)?;
    Ok(block_max_abs(&(rotated - direct.matrix()), &block))
}

/// Closed-form two-mode vectors: preserved ∝ (e^{iθ₁}g₂, −e^{iθ₂}g₁) and
/// leaking ∝ (e^{iθ₁}g₁, e^{iθ₂}g₂), normalized but with no phase fixing.
pub fn two_mode_vectors(p: &TwoModeParams) -> Result<(CVector, CVector)> {
    let g = p.g[0].hypot(p.g[1]);
    if g == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    let e1 = C64::from_polar(1.0, p.theta[0]);
    let e2 = C64::from_polar(1.0, p.theta[1]);
    let preserved = CVector::from_vec(vec![e1 * (p.g[1] / g), -e2 * (p.g[0] / g)]);
    let leaking = CVector::from_vec(vec![e1 * (p.g[0] / g), e2 * (p.g[1] / g)]);
    Ok((preserved, leaking))
}

/// max_k |u_k − e^{iφ} v_k| minimized over the global phase φ.
pub fn distance_up_to_phase(u: &CVector, v: &CVector) -> f64 {
    let overlap = v.dotc(u);
    let phase = if overlap.norm() > 0.0 {
        overlap / C64::new(overlap.norm(), 0.0)
    } else {
        C64::new(1.0, 0.0)
    };
    u.iter()
        .zip(v.iter())
        .map(|(a, b)| (a - b * phase).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn fig1(n_max: usize) -> SystemSpec {
        TwoModeParams {
            omega: [0.95, 1.01],
            omega0: 1.0,
            g: [0.2, 0.21],
            theta: [0.0, FRAC_PI_4],
            gamma: 0.1,
            n_max,
        }
        .into_spec()
    }

    #[test]
    fn mixing_angle_examples() {
        assert_abs_diff_eq!(mixing_angle(0.3, 0.3).unwrap(), FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(mixing_angle(0.0, 0.4).unwrap(), 0.0);
        assert_eq!(mixing_angle(0.0, -0.4).unwrap(), 0.0);
        // arctan(20/21) by its series about 1: atan(x) = π/4 + atan((x−1)/(1+x))
        let x: f64 = 20.0 / 21.0;
        let y = (x - 1.0) / (1.0 + x);
        let series: f64 = (0..30)
            .map(|k| (-1f64).powi(k) * y.powi(2 * k + 1) / (2 * k + 1) as f64)
            .sum();
        let expect = FRAC_PI_4 + series;
        assert_abs_diff_eq!(mixing_angle(0.2, 0.21).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(expect, 0.761013, epsilon = 1e-6);
        assert!(matches!(mixing_angle(0.0, 0.0), Err(Error::UndefinedAngle)));
    }

    #[test]
    fn mixing_angle_cancels_first_coupling() {
        for (g1, g2) in [
            (0.2, 0.21),
            (1e-3, 0.5),
            (0.5, 1e-3),
            (0.3, 0.0),
            (0.0, 0.3),
            (0.1, -0.2),
        ] {
            let gamma = mixing_angle(g1, g2).unwrap();
            let residual = (g1 * gamma.cos() - g2 * gamma.sin()).abs();
            assert!(
                residual < 1e-12 * f64::max(g1, g2.abs()),
                "{g1} {g2}: {residual}"
            );
        }
    }

    #[test]
    fn fig1_transform() {
        let t = transform_params(&fig1(4)).unwrap();
        assert_abs_diff_eq!(t.omega_tilde[0], 0.97854, epsilon = 5e-6);
        assert_abs_diff_eq!(t.omega_tilde[1], 0.98146, epsilon = 5e-6);
        assert_abs_diff_eq!(t.g_tilde[1], 0.29, epsilon = 1e-12);
        assert_abs_diff_eq!(t.xi12, -0.02996, epsilon = 5e-6);
        assert_abs_diff_eq!(t.eta, 0.20915, epsilon = 5e-6);
        assert_abs_diff_eq!(
            t.omega_tilde[0] + t.omega_tilde[1],
            0.95 + 1.01,
            epsilon = 1e-14
        );
    }

    #[test]
    fn trivial_transform_cases() {
        let mut spec = fig1(4);
        spec.omega = vec![1.0, 1.0];
        assert_eq!(transform_params(&spec).unwrap().xi12, 0.0);

        let mut spec = fig1(4);
        spec.couplings = vec![vec![0.2, 0.0]];
        let t = transform_params(&spec).unwrap();
        assert_abs_diff_eq!(t.gamma_angle, FRAC_PI_2);
        assert_abs_diff_eq!(t.omega_tilde[0], 1.01, epsilon = 1e-15);
        let modes = mode_decomposition(&spec.couplings, &spec.phases, &spec.omega).unwrap();
        assert_eq!(modes.preserved.len(), 1);
        assert_abs_diff_eq!(modes.preserved[0][0].norm(), 0.0);
        assert_abs_diff_eq!(modes.preserved[0][1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wrong_shape_rejected() {
        let spec = SystemSpec::chain(&[1.0, 1.0, 1.0], 1.0, &[0.1, 0.1], 0.1, 2).unwrap();
        assert!(matches!(
            transform_params(&spec),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            check_conditions(&spec, 0.5),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn fig1_conditions() {
        let c = check_conditions(&fig1(4), DEFAULT_CONDITION_THRESHOLD).unwrap();
        assert_abs_diff_eq!(c.ratios.r1, 0.1033, epsilon = 5e-5);
        assert_abs_diff_eq!(c.ratios.r2, 0.2996, epsilon = 5e-5);
        assert_abs_diff_eq!(c.ratios.r3, 0.2091, epsilon = 5e-5);
        assert!(c.sufficient());
    }

    #[test]
    fn degenerate_and_weak_coupling_conditions() {
        let mut spec = fig1(4);
        spec.omega = vec![1.0, 1.0];
        let c = check_conditions(&spec, 0.5).unwrap();
        assert_eq!((c.ratios.r1, c.ratios.r2), (0.0, 0.0));

        let mut spec = fig1(4);
        spec.omega = vec![0.9, 1.1];
        spec.couplings = vec![vec![0.01, 0.01]];
        let c = check_conditions(&spec, 0.5).unwrap();
        let expect = 0.2 / (0.0002f64.powf(1.5) / 0.0001);
        assert_abs_diff_eq!(c.ratios.r1, expect, epsilon = 1e-9);
        assert!(c.ratios.r1 > 5.0);
        assert!(!c.verdicts[0]);
        assert!(!c.sufficient());

        let mut spec = fig1(4);
        spec.gamma_decay = vec![0.0];
        let c = check_conditions(&spec, 0.5).unwrap();
        assert!(c.ratios.r2.is_infinite());
        assert!(!c.verdicts[1]);
    }

    #[test]
    fn two_mode_decomposition_matches_closed_form() {
        let spec = fig1(2);
        let modes = mode_decomposition(&spec.couplings, &spec.phases, &spec.omega).unwrap();
        assert_eq!((modes.preserved.len(), modes.leaking.len()), (1, 1));
        let (preserved, leaking) = two_mode_vectors(&spec.two_mode().unwrap()).unwrap();
        assert!(distance_up_to_phase(&modes.preserved[0], &preserved) < 1e-12);
        assert!(distance_up_to_phase(&modes.leaking[0], &leaking) < 1e-12);

        // phase fixed on the largest component (g₂ > g₁ → first entry)
        let g = 0.2f64.hypot(0.21);
        let u = &modes.preserved[0];
        assert_abs_diff_eq!(u[0].re, 0.21 / g, epsilon = 1e-12);
        assert_abs_diff_eq!(u[0].im, 0.0);
        let expect = -C64::from_polar(0.2 / g, FRAC_PI_4);
        assert!((u[1] - expect).norm() < 1e-12);
    }

    #[test]
    fn chain_preserves_uniform_mode() {
        let spec = SystemSpec::chain(&[0.9, 1.0, 1.1], 1.0, &[0.1, 0.15], 0.1, 1).unwrap();
        let modes = mode_decomposition(&spec.couplings, &spec.phases, &spec.omega).unwrap();
        assert_eq!(modes.leaking.len(), 2);
        assert_eq!(modes.preserved.len(), 1);
        for z in modes.preserved[0].iter() {
            assert!((z - C64::new(1.0 / 3f64.sqrt(), 0.0)).norm() < 1e-12);
        }
        assert_abs_diff_eq!(modes.surviving_frequencies[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uncoupled_modes_survive() {
        let couplings = vec![vec![0.3, 0.0, 0.0]];
        let phases = vec![vec![0.0; 3]];
        let modes = mode_decomposition(&couplings, &phases, &[0.9, 1.0, 1.2]).unwrap();
        assert_eq!(modes.preserved.len(), 2);
        for u in &modes.preserved {
            assert_abs_diff_eq!(u[0].norm(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(modes.surviving_frequencies[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(modes.surviving_frequencies[1], 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(modes.frequency_spread(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn zero_couplings_preserve_everything() {
        let modes = mode_decomposition(&[vec![0.0, 0.0]], &[vec![0.0, 0.0]], &[1.0, 1.1]).unwrap();
        assert_eq!(modes.preserved.len(), 2);
        assert!(modes.leaking.is_empty());
    }

    #[test]
    fn dependent_rows_have_reduced_rank() {
        let couplings = vec![vec![0.1, 0.2, 0.0], vec![0.2, 0.4, 0.0]];
        let phases = vec![vec![0.3, 0.5, 0.0], vec![0.3, 0.5, 0.0]];
        let modes = mode_decomposition(&couplings, &phases, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(modes.leaking.len(), 1);
        assert_eq!(modes.preserved.len(), 2);
    }

    #[test]
    fn unitaries_trivial_cases() {
        let mut spec = fig1(3);
        spec.phases = vec![vec![0.0, 0.0]];
        let (u_p, _) = build_slmp_unitaries(&spec).unwrap();
        assert_eq!(u_p, QOperator::identity(u_p.layout()));

        let mut spec = fig1(3);
        spec.couplings = vec![vec![0.0, 0.3]];
        let (_, u_r) = build_slmp_unitaries(&spec).unwrap();
        assert!(max_abs(&(u_r.matrix() - CMatrix::identity(u_r.dim(), u_r.dim()))) < 1e-15);
    }

    #[test]
    fn rotation_mixes_ladder_operators() {
        let spec = fig1(8);
        let p = spec.two_mode().unwrap();
        let gamma = mixing_angle(p.g[0], p.g[1]).unwrap();
        let (_, u_r) = build_slmp_unitaries(&spec).unwrap();
        let layout = spec.layout().unwrap();
        let a1 = embedded_annihilation(&layout, 0).unwrap().into_matrix();
        let a2 = embedded_annihilation(&layout, 1).unwrap().into_matrix();
        let u = u_r.matrix();
        let block = inner_block(&spec, EXCITATION_MARGIN).unwrap();

        let rotated1 = u * &a1 * u.adjoint();
        let expect1 = &a1 * C64::new(gamma.cos(), 0.0) + &a2 * C64::new(gamma.sin(), 0.0);
        assert!(block_max_abs(&(rotated1 - expect1), &block) < 1e-8);

        let rotated2 = u * &a2 * u.adjoint();
        let expect2 = &a1 * C64::new(-gamma.sin(), 0.0) + &a2 * C64::new(gamma.cos(), 0.0);
        assert!(block_max_abs(&(rotated2 - expect2), &block) < 1e-8);

        let sx = embedded_pauli(Pauli::X, &layout, 2).unwrap().into_matrix();
        assert!(max_abs(&(u * &sx * u.adjoint() - &sx)) < 1e-12);
    }

    #[test]
    fn phase_unitary_rotates_ladders() {
        let spec = fig1(4);
        let (u_p, _) = build_slmp_unitaries(&spec).unwrap();
        let layout = spec.layout().unwrap();
        let a2 = embedded_annihilation(&layout, 1).unwrap().into_matrix();
        let lhs = u_p.matrix() * &a2 * u_p.matrix().adjoint();
        let rhs = &a2 * C64::from_polar(1.0, -FRAC_PI_4);
        assert!(max_abs(&(lhs - rhs)) < 1e-14);
    }

    #[test]
    fn equivalence_residuals() {
        let mut free = fig1(4);
        free.couplings = vec![vec![0.0, 0.0]];
        free.phases = vec![vec![0.0, 0.0]];
        assert!(verify_slmp_equivalence(&free, 4).unwrap() < 1e-15);

        assert!(verify_slmp_equivalence(&fig1(6), 8).unwrap() < 1e-6);

        let mut random_phase = fig1(4);
        random_phase.phases = vec![vec![0.3, 1.1]];
        assert!(verify_slmp_equivalence(&random_phase, 8).unwrap() < 1e-6);

        assert!(matches!(
            verify_slmp_equivalence(&fig1(4), 3),
            Err(Error::InvalidDimension { .. })
        ));
    }
}
