//! Hamiltonians and the zero-temperature Lindblad generator.
//!
//! Energies are measured in units of the two-level splitting ω₀, so the
//! parameters read exactly like dimensionless ratios ω_k/ω₀, g/ω₀, Γ/ω₀.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation, embedded_annihilation, embedded_pauli, pauli, CMatrix, Pauli, QOperator,
    SpaceLayout, Subsystem, C64, ONE,
};

/// Physical parameters of N oscillators coupled to M leaking two-level systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    /// Oscillator frequencies ω_k.
    pub omega: Vec<f64>,
    /// Two-level splitting ω₀, shared by every two-level system.
    pub omega0: f64,
    /// `couplings[j][k]` couples two-level system j to oscillator k.
    pub couplings: Vec<Vec<f64>>,
    /// Coupling phases θ_{jk} in radians, same shape as `couplings`.
    pub phases: Vec<Vec<f64>>,
    /// Decay rate Γ_j of each two-level system.
    pub gamma_decay: Vec<f64>,
    /// Fock truncation per oscillator.
    pub n_max: usize,
}

/// Two oscillators sharing one two-level system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeParams {
    pub omega: [f64; 2],
    pub omega0: f64,
    pub g: [f64; 2],
    pub theta: [f64; 2],
    pub gamma: f64,
    pub n_max: usize,
}

impl TwoModeParams {
    pub fn into_spec(self) -> SystemSpec {
        SystemSpec {
            omega: self.omega.to_vec(),
            omega0: self.omega0,
            couplings: vec![self.g.to_vec()],
            phases: vec![self.theta.to_vec()],
            gamma_decay: vec![self.gamma],
            n_max: self.n_max,
        }
    }
}

impl SystemSpec {
    pub fn n_oscillators(&self) -> usize {
        self.omega.len()
    }

    pub fn n_tls(&self) -> usize {
        self.couplings.len()
    }

    /// Nearest-neighbour chain: two-level system j couples to `a_j − a_{j+1}`.
    ///
    /// The minus sign is carried as a phase π on the second coupling of each row.
    pub fn chain(omega: &[f64], omega0: f64, g: &[f64], gamma: f64, n_max: usize) -> Result<Self> {
        let n = omega.len();
        if n < 2 || g.len() + 1 != n {
            return Err(Error::InvalidSpec(format!(
                "chain of {n} oscillators needs {} couplings, got {}",
                n.saturating_sub(1),
                g.len()
            )));
        }
        let mut couplings = vec![vec![0.0; n]; n - 1];
        let mut phases = vec![vec![0.0; n]; n - 1];
        for (j, &gj) in g.iter().enumerate() {
            couplings[j][j] = gj;
            couplings[j][j + 1] = gj;
            phases[j][j + 1] = PI;
        }
        let spec = Self {
            omega: omega.to_vec(),
            omega0,
            couplings,
            phases,
            gamma_decay: vec![gamma; n - 1],
            n_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.omega.len();
        let m = self.couplings.len();
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if n == 0 {
            return bad("at least one oscillator is required".into());
        }
        if self.n_max == 0 {
            return Err(Error::InvalidDimension {
                dim: 1,
                reason: "n_max must be at least 1",
            });
        }
        if let Some(w) = self.omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return bad(format!("oscillator frequency {w} must be positive"));
        }
        if !self.omega0.is_finite() {
            return bad("omega0 must be finite".into());
        }
        if self.phases.len() != m {
            return bad(format!(
                "phases has {} rows, couplings has {m}",
                self.phases.len()
            ));
        }
        for (j, (g_row, t_row)) in self.couplings.iter().zip(&self.phases).enumerate() {
            if g_row.len() != n || t_row.len() != n {
                return bad(format!(
                    "row {j} must have {n} entries (one per oscillator)"
                ));
            }
            if let Some(g) = g_row.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                return bad(format!("coupling {g} must be finite and non-negative"));
            }
            if t_row.iter().any(|t| !t.is_finite()) {
                return bad(format!("phase row {j} contains a non-finite value"));
            }
        }
        if self.gamma_decay.len() != m {
            return bad(format!(
                "{} decay rates given for {m} two-level systems",
                self.gamma_decay.len()
            ));
        }
        for (index, &rate) in self.gamma_decay.iter().enumerate() {
            if rate.is_nan() || rate < 0.0 {
                return Err(Error::NegativeRate { index, rate });
            }
        }
        Ok(())
    }

    /// Oscillators first (declaration order), then the two-level systems.
    pub fn layout(&self) -> Result<SpaceLayout> {
        SpaceLayout::oscillators_and_tls(self.n_oscillators(), self.n_max, self.n_tls())
    }

    /// Complex coupling row v_j with entries g_{jk} e^{iθ_{jk}}.
    pub fn coupling_row(&self, j: usize) -> Vec<C64> {
        self.couplings[j]
            .iter()
            .zip(&self.phases[j])
            .map(|(&g, &t)| C64::from_polar(g, t))
            .collect()
    }

    /// View of a one-TLS, two-oscillator spec.
    pub fn two_mode(&self) -> Result<TwoModeParams> {
        self.validate()?;
        if self.n_oscillators() != 2 || self.n_tls() != 1 {
            return Err(Error::InvalidSpec(format!(
                "expected 2 oscillators and 1 two-level system, got {} and {}",
                self.n_oscillators(),
                self.n_tls()
            )));
        }
        Ok(TwoModeParams {
            omega: [self.omega[0], self.omega[1]],
            omega0: self.omega0,
            g: [self.couplings[0][0], self.couplings[0][1]],
            theta: [self.phases[0][0], self.phases[0][1]],
            gamma: self.gamma_decay[0],
            n_max: self.n_max,
        })
    }
}

/// Σ_k ω_k a_k†a_k + Σ_j (ω₀/2)σ_z^j + Σ_{jk} g_{jk}(e^{iθ_{jk}} a_k + h.c.)σ_x^j
pub fn build_hamiltonian(spec: &SystemSpec) -> Result<QOperator> {
    spec.validate()?;
    let layout = spec.layout()?;
    let n = spec.n_oscillators();
    let mut h = QOperator::zeros(&layout).into_matrix();

    let ladders = (0..n)
        .map(|k| embedded_annihilation(&layout, k))
        .collect::<Result<Vec<_>>>()?;
    for (a, &w) in ladders.iter().zip(&spec.omega) {
        h += a.matrix().adjoint() * a.matrix() * C64::new(w, 0.0);
    }
    for j in 0..spec.n_tls() {
        let slot = n + j;
        let sz = embedded_pauli(Pauli::Z, &layout, slot)?;
        h += sz.matrix() * C64::new(0.5 * spec.omega0, 0.0);
        let mut field = CMatrix::zeros(layout.total_dim(), layout.total_dim());
        for (a, v) in ladders.iter().zip(spec.coupling_row(j)) {
            if v.norm() == 0.0 {
                continue;
            }
            field += a.matrix() * v + a.matrix().adjoint() * v.conj();
        }
        let sx = embedded_pauli(Pauli::X, &layout, slot)?;
        h += field * sx.matrix();
    }
    let h = symmetrize(h);
    QOperator::new(layout, h)
}

/// Jaynes–Cummings form ω a†a + (ω₀/2)σ_z + g(aσ₊ + a†σ₋) on oscillator ⊗ TLS.
pub fn build_rwa_hamiltonian(omega2: f64, omega0: f64, g2: f64, n_max: usize) -> Result<QOperator> {
    if n_max == 0 {
        return Err(Error::InvalidDimension {
            dim: 1,
            reason: "n_max must be at least 1",
        });
    }
    let dim = n_max + 1;
    let a = annihilation(dim)?.into_matrix();
    let id2 = CMatrix::identity(2, 2);
    let ida = CMatrix::identity(dim, dim);
    let a = a.kronecker(&id2);
    let sz = ida.kronecker(pauli(Pauli::Z).matrix());
    let sp = ida.kronecker(pauli(Pauli::Plus).matrix());
    let sm = ida.kronecker(pauli(Pauli::Minus).matrix());
    let h = a.adjoint() * &a * C64::new(omega2, 0.0)
        + sz * C64::new(0.5 * omega0, 0.0)
        + (&a * sp + a.adjoint() * sm) * C64::new(g2, 0.0);
    let layout = SpaceLayout::new(vec![Subsystem::oscillator(n_max), Subsystem::Tls])?;
    QOperator::new(layout, symmetrize(h))
}

/// Chain Hamiltonian Σω_k a_k†a_k + Σ(ω₀/2)σ_z^j + Σ_j g_j(a_j − a_{j+1} + h.c.)σ_x^j.
pub fn build_chain_hamiltonian(
    omega: &[f64],
    omega0: f64,
    g: &[f64],
    n_max: usize,
) -> Result<QOperator> {
    build_hamiltonian(&SystemSpec::chain(omega, omega0, g, 0.0, n_max)?)
}

#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub op: QOperator,
    pub rate: f64,
}

/// ρ̇ = −i[H, ρ] + Σ_j Γ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    pub hamiltonian: QOperator,
    pub jump_ops: Vec<JumpOperator>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: QOperator, jump_ops: Vec<JumpOperator>) -> Result<Self> {
        let herm = hamiltonian.hermiticity_error();
        if herm >= 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "Hamiltonian is not Hermitian (error {herm:e})"
            )));
        }
        for (index, j) in jump_ops.iter().enumerate() {
            if j.rate.is_nan() || j.rate < 0.0 {
                return Err(Error::NegativeRate {
                    index,
                    rate: j.rate,
                });
            }
            hamiltonian.check_layout(&j.op)?;
        }
        Ok(Self {
            hamiltonian,
            jump_ops,
        })
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.hamiltonian.layout()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Dense evaluation of the generator on an arbitrary matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h = self.hamiltonian.matrix();
        let minus_i = C64::new(0.0, -1.0);
        let mut out = (h * rho - rho * h) * minus_i;
        for jump in &self.jump_ops {
            if jump.rate == 0.0 {
                continue;
            }
            let l = jump.op.matrix();
            let ldl = l.adjoint() * l;
            out += (l * rho * l.adjoint() - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0))
                * C64::new(jump.rate, 0.0);
        }
        out
    }
}

/// Generator with bare σ₋^j jump operators at rates Γ_j.
pub fn build_lindblad(spec: &SystemSpec) -> Result<LindbladGenerator> {
    let hamiltonian = build_hamiltonian(spec)?;
    let layout = hamiltonian.layout().clone();
    let n = spec.n_oscillators();
    let jump_ops = spec
        .gamma_decay
        .iter()
        .enumerate()
        .map(|(j, &rate)| {
            Ok(JumpOperator {
                op: embedded_pauli(Pauli::Minus, &layout, n + j)?,
                rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LindbladGenerator::new(hamiltonian, jump_ops)
}

/// Averages `m` with its adjoint so round-off never breaks Hermiticity.
fn symmetrize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * (ONE * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{hermiticity_error, max_abs, TLS_MINUS, TLS_PLUS};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn two_mode(g: [f64; 2], theta: [f64; 2], n_max: usize) -> SystemSpec {
        TwoModeParams {
            omega: [0.95, 1.01],
            omega0: 1.0,
            g,
            theta,
            gamma: 0.1,
            n_max,
        }
        .into_spec()
    }

    #[test]
    fn decoupled_spectrum() {
        let spec = two_mode([0.0, 0.0], [0.0, 0.0], 1);
        let h = build_hamiltonian(&spec).unwrap();
        let ev = h.hermitian_eigenvalues();
        let mut expect = vec![];
        for n1 in 0..2 {
            for n2 in 0..2 {
                for s in [0.5, -0.5] {
                    expect.push(0.95 * n1 as f64 + 1.01 * n2 as f64 + s);
                }
            }
        }
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn vacuum_diagonal_element() {
        let spec = two_mode([0.2, 0.21], [0.0, FRAC_PI_4], 6);
        let h = build_hamiltonian(&spec).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        let idx = spec.layout().unwrap().index_of(&[0, 0, TLS_MINUS]).unwrap();
        assert_abs_diff_eq!(h.matrix()[(idx, idx)].re, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn interaction_matrix_element() {
        let spec = two_mode([0.2, 0.21], [0.0, 0.0], 1);
        let layout = spec.layout().unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        let row = layout.index_of(&[1, 0, TLS_PLUS]).unwrap();
        let col = layout.index_of(&[0, 0, TLS_MINUS]).unwrap();
        assert_abs_diff_eq!(h.matrix()[(row, col)].re, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(h.matrix()[(row, col)].im, 0.0, epsilon = 1e-15);
        let row2 = layout.index_of(&[0, 1, TLS_PLUS]).unwrap();
        assert_abs_diff_eq!(h.matrix()[(row2, col)].re, 0.21, epsilon = 1e-15);
    }

    #[test]
    fn inconsistent_shapes_rejected() {
        let mut spec = two_mode([0.2, 0.21], [0.0, 0.0], 2);
        spec.phases = vec![vec![0.0]];
        assert!(matches!(
            build_hamiltonian(&spec),
            Err(Error::InvalidSpec(_))
        ));
        let mut spec = two_mode([0.2, 0.21], [0.0, 0.0], 2);
        spec.gamma_decay = vec![];
        assert!(matches!(
            build_hamiltonian(&spec),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn rwa_ground_state_and_conservation() {
        let h = build_rwa_hamiltonian(0.98, 1.0, 0.29, 5).unwrap();
        let ground = 1; // |0, −⟩
        let col = h.matrix().column(ground);
        for (i, z) in col.iter().enumerate() {
            let expect = if i == ground { -0.5 } else { 0.0 };
            assert_abs_diff_eq!(z.re, expect, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0);
        }

        let dim = 6;
        let n = crate::fock::number(dim)
            .unwrap()
            .into_matrix()
            .kronecker(&CMatrix::identity(2, 2));
        let pp = pauli(Pauli::Plus).matrix() * pauli(Pauli::Minus).matrix();
        let excitations = n + CMatrix::identity(dim, dim).kronecker(&pp);
        let comm = h.matrix() * &excitations - &excitations * h.matrix();
        assert!(max_abs(&comm) < 1e-12);

        let free = build_rwa_hamiltonian(0.98, 1.0, 0.0, 5).unwrap();
        let m = free.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    assert_eq!(m[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn chain_two_oscillators_matches_general_builder() {
        let chain = build_chain_hamiltonian(&[0.95, 1.01], 1.0, &[0.2], 3).unwrap();
        let spec = SystemSpec {
            omega: vec![0.95, 1.01],
            omega0: 1.0,
            couplings: vec![vec![0.2, 0.2]],
            phases: vec![vec![0.0, PI]],
            gamma_decay: vec![0.0],
            n_max: 3,
        };
        let general = build_hamiltonian(&spec).unwrap();
        assert!(max_abs(&(chain.matrix() - general.matrix())) < 1e-14);
    }

    #[test]
    fn chain_coupling_rows() {
        let spec = SystemSpec::chain(&[1.0, 1.0, 1.0], 1.0, &[0.1, 0.2], 0.1, 2).unwrap();
        let r0 = spec.coupling_row(0);
        let r1 = spec.coupling_row(1);
        let expect0 = [0.1, -0.1, 0.0];
        let expect1 = [0.0, 0.2, -0.2];
        for k in 0..3 {
            assert!((r0[k] - C64::new(expect0[k], 0.0)).norm() < 1e-15);
            assert!((r1[k] - C64::new(expect1[k], 0.0)).norm() < 1e-15);
        }
        let h = build_chain_hamiltonian(&[0.9, 1.0, 1.1], 1.0, &[0.1, 0.2], 2).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        assert_eq!(h.dim(), 27 * 4);
        assert!(matches!(
            build_chain_hamiltonian(&[0.9, 1.0, 1.1], 1.0, &[0.1], 2),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn negative_rate_rejected() {
        let mut spec = two_mode([0.2, 0.21], [0.0, 0.0], 2);
        spec.gamma_decay = vec![-0.1];
        assert!(matches!(
            build_lindblad(&spec),
            Err(Error::NegativeRate { index: 0, .. })
        ));
    }

    #[test]
    fn lindblad_trace_preservation_and_hermiticity() {
        let spec = two_mode([0.2, 0.21], [0.0, FRAC_PI_4], 3);
        let gen = build_lindblad(&spec).unwrap();
        let d = gen.dim();
        let mixed = CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        let out = gen.apply(&mixed);
        assert!(out.trace().norm() < 1e-12);

        let mut herm = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                herm[(i, j)] = C64::new(((i * 7 + j * 3) % 5) as f64, 0.0)
                    + C64::new(0.0, (i as f64) - (j as f64));
            }
        }
        let herm = symmetrize(herm);
        let out = gen.apply(&herm);
        assert!(hermiticity_error(&out) < 1e-12);
        assert!(out.trace().norm() < 1e-12);
    }

    #[test]
    fn bare_ground_state_stationary_only_without_coupling() {
        for (g, stationary) in [([0.0, 0.0], true), ([0.2, 0.21], false)] {
            let spec = two_mode(g, [0.0, FRAC_PI_4], 2);
            let layout = spec.layout().unwrap();
            let gen = build_lindblad(&spec).unwrap();
            let idx = layout.index_of(&[0, 0, TLS_MINUS]).unwrap();
            let mut rho = CMatrix::zeros(gen.dim(), gen.dim());
            rho[(idx, idx)] = ONE;
            let out = max_abs(&gen.apply(&rho));
            assert_eq!(out < 1e-14, stationary, "g = {g:?}: |L rho| = {out}");
        }
    }

    #[test]
    fn diagonal_states_stationary_without_dissipation_or_coupling() {
        let mut spec = two_mode([0.0, 0.0], [0.0, 0.0], 2);
        spec.gamma_decay = vec![0.0];
        let gen = build_lindblad(&spec).unwrap();
        let d = gen.dim();
        let diag =
            nalgebra::DVector::from_iterator(d, (0..d).map(|i| C64::new(i as f64 + 1.0, 0.0)));
        let rho = CMatrix::from_diagonal(&diag);
        assert_eq!(max_abs(&gen.apply(&rho)), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn hamiltonian_is_hermitian(
            n in 1usize..=3,
            m in 1usize..=2,
            n_max in 1usize..=3,
            seed in proptest::collection::vec(0.0f64..1.0, 3 + 2 * 6),
        ) {
            let omega = (0..n).map(|k| 0.5 + seed[k]).collect::<Vec<_>>();
            let couplings = (0..m)
                .map(|j| (0..n).map(|k| 0.3 * seed[3 + j * 3 + k]).collect())
                .collect();
            let phases = (0..m)
                .map(|j| (0..n).map(|k| 6.0 * seed[9 + j * 3 + k] - 1.0).collect())
                .collect();
            let spec = SystemSpec {
                omega,
                omega0: 1.0,
                couplings,
                phases,
                gamma_decay: vec![0.1; m],
                n_max,
            };
            let h = build_hamiltonian(&spec).unwrap();
            prop_assert!(h.hermiticity_error() < 1e-12);
        }
    }
}
