//! Operators on truncated bosonic Fock spaces and two-level systems.
//!
//! A [`SpaceLayout`] fixes the ordering of the tensor factors; every
//! composite operator is the Kronecker product taken in that order, so the
//! first subsystem is the most significant digit of a basis index.
//!
//! Two-level systems use the σ_z eigenbasis ordered `{|+⟩, |−⟩}` with
//! σ_z|−⟩ = −|−⟩.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Index of `|+⟩` in a two-level factor.
pub const TLS_PLUS: usize = 0;
/// Index of `|−⟩` in a two-level factor.
pub const TLS_MINUS: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Subsystem {
    /// Truncated oscillator with `dim = n_max + 1` levels.
    Oscillator {
        dim: usize,
    },
    Tls,
}

impl Subsystem {
    pub fn oscillator(n_max: usize) -> Self {
        Subsystem::Oscillator { dim: n_max + 1 }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Subsystem::Oscillator { dim } => dim,
            Subsystem::Tls => 2,
        }
    }
}

/// Ordered list of tensor factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    subsystems: Vec<Subsystem>,
}

impl SpaceLayout {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "layout needs at least one subsystem",
            });
        }
        for s in &subsystems {
            if let Subsystem::Oscillator { dim } = *s {
                if dim < 2 {
                    return Err(Error::InvalidDimension {
                        dim,
                        reason: "oscillator dimension must be at least 2",
                    });
                }
            }
        }
        Ok(Self { subsystems })
    }

    /// `n_osc` oscillators truncated at `n_max` followed by `n_tls` two-level systems.
    pub fn oscillators_and_tls(n_osc: usize, n_max: usize, n_tls: usize) -> Result<Self> {
        let mut subsystems = vec![Subsystem::oscillator(n_max); n_osc];
        subsystems.extend(std::iter::repeat_n(Subsystem::Tls, n_tls));
        Self::new(subsystems)
    }

    pub fn single(subsystem: Subsystem) -> Result<Self> {
        Self::new(vec![subsystem])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(Subsystem::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(Subsystem::dim).product()
    }

    /// Slots of the oscillator factors, in layout order.
    pub fn oscillator_slots(&self) -> Vec<usize> {
        self.slots_where(|s| matches!(s, Subsystem::Oscillator { .. }))
    }

    pub fn tls_slots(&self) -> Vec<usize> {
        self.slots_where(|s| matches!(s, Subsystem::Tls))
    }

    fn slots_where(&self, pred: impl Fn(&Subsystem) -> bool) -> Vec<usize> {
        self.subsystems
            .iter()
            .enumerate()
            .filter(|(_, s)| pred(s))
            .map(|(i, _)| i)
            .collect()
    }

    /// Composite basis index of a product state given per-subsystem levels.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: levels.len(),
            });
        }
        let mut index = 0;
        for (&level, s) in levels.iter().zip(&self.subsystems) {
            if level >= s.dim() {
                return Err(Error::DimensionMismatch {
                    expected: s.dim(),
                    found: level + 1,
                });
            }
            index = index * s.dim() + level;
        }
        Ok(index)
    }

    /// Inverse of [`SpaceLayout::index_of`].
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.len()];
        for (slot, s) in self.subsystems.iter().enumerate().rev() {
            levels[slot] = index % s.dim();
            index /= s.dim();
        }
        levels
    }
}

/// Dense operator on the space described by its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl QOperator {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let dim = layout.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { layout, matrix })
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let dim = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let dim = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * factor,
        }
    }

    pub fn commutator(&self, other: &QOperator) -> Result<QOperator> {
        self.check_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// ‖A − A†‖_max.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Eigenvalues of a Hermitian operator in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub(crate) fn check_layout(&self, other: &QOperator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }
}

impl Add for &QOperator {
    type Output = QOperator;

    /// Panics if the layouts differ.
    fn add(self, rhs: &QOperator) -> QOperator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch in operator sum");
        QOperator {
            layout: self.layout.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &QOperator {
    type Output = QOperator;

    fn sub(self, rhs: &QOperator) -> QOperator {
        assert_eq!(
            self.layout, rhs.layout,
            "layout mismatch in operator difference"
        );
        QOperator {
            layout: self.layout.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &QOperator {
    type Output = QOperator;

    fn mul(self, rhs: &QOperator) -> QOperator {
        assert_eq!(
            self.layout, rhs.layout,
            "layout mismatch in operator product"
        );
        QOperator {
            layout: self.layout.clone(),
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

/// Ladder operator with `A[n−1, n] = √n`.
pub fn annihilation(dim: usize) -> Result<QOperator> {
    let layout = SpaceLayout::single(Subsystem::Oscillator { dim })?;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    QOperator::new(layout, m)
}

pub fn creation(dim: usize) -> Result<QOperator> {
    Ok(annihilation(dim)?.adjoint())
}

/// a†a = diag(0, 1, …, dim−1).
pub fn number(dim: usize) -> Result<QOperator> {
    let layout = SpaceLayout::single(Subsystem::Oscillator { dim })?;
    let diag = nalgebra::DVector::from_iterator(dim, (0..dim).map(|n| C64::new(n as f64, 0.0)));
    QOperator::new(layout, CMatrix::from_diagonal(&diag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// σ₊ = |+⟩⟨−|
    Plus,
    /// σ₋ = |−⟩⟨+|
    Minus,
}

pub fn pauli(which: Pauli) -> QOperator {
    let i = C64::i();
    let entries = match which {
        Pauli::X => [ZERO, ONE, ONE, ZERO],
        Pauli::Y => [ZERO, -i, i, ZERO],
        Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        Pauli::Plus => [ZERO, ONE, ZERO, ZERO],
        Pauli::Minus => [ZERO, ZERO, ONE, ZERO],
    };
    QOperator {
        layout: SpaceLayout {
            subsystems: vec![Subsystem::Tls],
        },
        matrix: CMatrix::from_row_slice(2, 2, &entries),
    }
}

/// Lifts a single-subsystem operator into `layout` at `slot`.
pub fn embed(op: &QOperator, layout: &SpaceLayout, slot: usize) -> Result<QOperator> {
    if slot >= layout.len() {
        return Err(Error::SlotOutOfRange {
            slot,
            len: layout.len(),
        });
    }
    let target = layout.subsystems()[slot].dim();
    if op.dim() != target {
        return Err(Error::DimensionMismatch {
            expected: target,
            found: op.dim(),
        });
    }
    let dims = layout.dims();
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let matrix = CMatrix::identity(left, left)
        .kronecker(op.matrix())
        .kronecker(&CMatrix::identity(right, right));
    QOperator::new(layout.clone(), matrix)
}

/// Annihilation operator of the oscillator at `slot`, embedded in `layout`.
pub fn embedded_annihilation(layout: &SpaceLayout, slot: usize) -> Result<QOperator> {
    let dim = layout
        .subsystems()
        .get(slot)
        .ok_or(Error::SlotOutOfRange {
            slot,
            len: layout.len(),
        })?
        .dim();
    embed(&annihilation(dim)?, layout, slot)
}

pub fn embedded_pauli(which: Pauli, layout: &SpaceLayout, slot: usize) -> Result<QOperator> {
    embed(&pauli(which), layout, slot)
}

/// `true` when `|α|² + 4|α|` fits below the top Fock level.
pub fn coherent_fits(dim: usize, alpha: C64) -> bool {
    let r = alpha.norm();
    r * r + 4.0 * r <= (dim - 1) as f64
}

/// D(α) = exp(α a† − α* a) on a truncated oscillator.
///
/// The truncated exponential is unitary but only approximates the
/// infinite-dimensional displacement away from the top Fock levels; a
/// warning is logged when `α` is too large for `dim`.
pub fn displacement(dim: usize, alpha: C64) -> Result<QOperator> {
    let a = annihilation(dim)?;
    if !coherent_fits(dim, alpha) {
        log::warn!(
            "displacement alpha = {alpha} is close to the truncation edge of a {dim}-level oscillator"
        );
    }
    let generator = a.adjoint().matrix() * alpha - a.matrix() * alpha.conj();
    QOperator::new(a.layout().clone(), expm(&generator))
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Truncated power series of exp(m); independent of the Padé path.
    fn expm_series(m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let mut sum = CMatrix::identity(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..200 {
            term = &term * m * c(1.0 / k as f64);
            sum += &term;
            if max_abs(&term) < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn annihilation_two_level() {
        let a = annihilation(2).unwrap();
        assert_eq!(
            a.matrix(),
            &CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
        );
    }

    #[test]
    fn number_identity() {
        let a = annihilation(4).unwrap();
        let n = &a.adjoint() * &a;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { i as f64 } else { 0.0 };
                assert_abs_diff_eq!(n.matrix()[(i, j)].re, expect, epsilon = 1e-14);
                assert_abs_diff_eq!(n.matrix()[(i, j)].im, 0.0);
            }
        }
        assert!((n.matrix() - number(4).unwrap().matrix()).norm() < 1e-14);
    }

    #[test]
    fn ladder_action() {
        let a = annihilation(3).unwrap();
        let mut ket = nalgebra::DVector::zeros(3);
        ket[2] = ONE;
        let out = a.matrix() * ket;
        assert_abs_diff_eq!(out[1].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].norm() + out[2].norm(), 0.0);
    }

    #[test]
    fn too_small_dimension() {
        assert!(matches!(
            annihilation(1),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            annihilation(0),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn canonical_commutator_inner_block() {
        for dim in [2, 5, 12] {
            let a = annihilation(dim).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            for i in 0..dim - 1 {
                for j in 0..dim - 1 {
                    let expect = if i == j { ONE } else { ZERO };
                    assert!((comm.matrix()[(i, j)] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let z = pauli(Pauli::Z);
        assert_eq!(
            z.matrix(),
            &CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
        );
        let proj = &pauli(Pauli::Plus) * &pauli(Pauli::Minus);
        assert_eq!(
            proj.matrix(),
            &CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])
        );
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let sq = &pauli(p) * &pauli(p);
            assert_eq!(sq.matrix(), &CMatrix::identity(2, 2));
        }
        // σ_z |−⟩ = −|−⟩
        assert_eq!(z.matrix()[(TLS_MINUS, TLS_MINUS)], -ONE);
        // σ₋|+⟩ = |−⟩
        assert_eq!(pauli(Pauli::Minus).matrix()[(TLS_MINUS, TLS_PLUS)], ONE);
    }

    #[test]
    fn embed_examples() {
        let layout = SpaceLayout::new(vec![Subsystem::oscillator(2), Subsystem::Tls]).unwrap();
        let sz = embed(&pauli(Pauli::Z), &layout, 1).unwrap();
        assert_abs_diff_eq!(sz.trace().norm(), 0.0);

        let n = embed(&number(3).unwrap(), &layout, 0).unwrap();
        let ev = n.hermitian_eigenvalues();
        let expect = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        for (a, b) in ev.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }

        let two =
            SpaceLayout::new(vec![Subsystem::oscillator(2), Subsystem::oscillator(2)]).unwrap();
        let a1 = embedded_annihilation(&two, 0).unwrap();
        let a2d = embedded_annihilation(&two, 1).unwrap().adjoint();
        assert_eq!(a1.commutator(&a2d).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn embed_errors() {
        let layout = SpaceLayout::new(vec![Subsystem::oscillator(2), Subsystem::Tls]).unwrap();
        assert!(matches!(
            embed(&pauli(Pauli::Z), &layout, 2),
            Err(Error::SlotOutOfRange { slot: 2, len: 2 })
        ));
        assert!(matches!(
            embed(&pauli(Pauli::Z), &layout, 0),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn index_round_trip() {
        let layout = SpaceLayout::oscillators_and_tls(2, 3, 1).unwrap();
        for idx in 0..layout.total_dim() {
            assert_eq!(layout.index_of(&layout.levels_of(idx)).unwrap(), idx);
        }
        assert_eq!(layout.index_of(&[1, 0, TLS_PLUS]).unwrap(), 8);
    }

    #[test]
    fn displacement_zero_is_identity() {
        let d = displacement(10, ZERO).unwrap();
        assert!((d.matrix() - CMatrix::identity(10, 10)).norm() < 1e-15);
    }

    #[test]
    fn displacement_matches_series_oracle() {
        let dim = 30;
        let alpha = c(0.7);
        let a = annihilation(dim).unwrap();
        let gen = a.adjoint().matrix() * alpha - a.matrix() * alpha.conj();
        let oracle = expm_series(&gen);
        let d = displacement(dim, alpha).unwrap();
        assert!(max_abs(&(d.matrix() - &oracle)) < 1e-12);

        let vac = oracle.column(0).into_owned();
        let mean_a = (vac.adjoint() * a.matrix() * &vac)[(0, 0)];
        let mean_n = (vac.adjoint() * number(dim).unwrap().matrix() * &vac)[(0, 0)];
        assert!((mean_a - c(0.7)).norm() < 1e-6);
        assert!((mean_n - c(0.49)).norm() < 1e-6);

        let dd = d.matrix().adjoint() * d.matrix();
        let inner = dd.view((0, 0), (20, 20)) - CMatrix::identity(20, 20);
        assert!(inner.iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn displacement_inverse_is_adjoint() {
        for alpha in [C64::new(0.3, -0.4), C64::new(-1.0, 0.0), C64::new(0.5, 0.8)] {
            let plus = displacement(24, alpha).unwrap();
            let minus = displacement(24, -alpha).unwrap();
            assert!(max_abs(&(minus.matrix() - plus.matrix().adjoint())) < 1e-10);
        }
    }

    #[test]
    fn builders_are_deterministic() {
        let a = displacement(16, C64::new(0.4, 0.2)).unwrap();
        let b = displacement(16, C64::new(0.4, 0.2)).unwrap();
        assert_eq!(a, b);
    }
}
