use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::state::{Arm, SystemState, C64};
use crate::error::{Error, Result};

/// Tolerance for Hermiticity and idempotence checks.
pub const OPERATOR_TOL: f64 = 1e-12;

/// Eigenvalues closer than this are treated as one degenerate eigenspace.
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableKind {
    /// `Ŷ = |arm><arm| ⊗ 𝟙`
    Spatial,
    /// `X̂ = |arm><arm| ⊗ σ₁`
    Diagonal,
}

/// 4×4 complex matrix on path ⊗ polarization, same basis order as
/// [`SystemState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOperator(pub Matrix4<C64>);

/// One eigenspace of a Hermitian operator.
#[derive(Debug, Clone, Copy)]
pub struct Eigenspace {
    pub value: f64,
    pub projector: SystemOperator,
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(0.0, 1.0, 1.0, 0.0).map(C64::from)
}

fn arm_projector(arm: Arm) -> Matrix2<C64> {
    let mut m = Matrix2::zeros();
    m[(arm.index(), arm.index())] = C64::from(1.0);
    m
}

fn kron(path: &Matrix2<C64>, pol: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| path[(r / 2, c / 2)] * pol[(r % 2, c % 2)])
}

impl SystemOperator {
    pub fn identity() -> Self {
        SystemOperator(Matrix4::identity())
    }

    pub fn zero() -> Self {
        SystemOperator(Matrix4::zeros())
    }

    /// `path ⊗ pol`.
    pub fn tensor(path: &Matrix2<C64>, pol: &Matrix2<C64>) -> Self {
        SystemOperator(kron(path, pol))
    }

    /// `𝟙_path ⊗ pol`.
    pub fn on_polarization(pol: &Matrix2<C64>) -> Self {
        Self::tensor(&Matrix2::identity(), pol)
    }

    /// `|s><s|` (not normalized by `<s|s>`).
    pub fn outer(s: &SystemState) -> Self {
        SystemOperator(s.vector() * s.vector().adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn apply(&self, s: &SystemState) -> SystemState {
        SystemState::from_vector(self.0 * s.vector(), false)
    }

    /// `<bra|self|ket>`.
    pub fn sandwich(&self, bra: &SystemState, ket: &SystemState) -> C64 {
        bra.vector().dotc(&(self.0 * ket.vector()))
    }

    pub fn adjoint(&self) -> Self {
        SystemOperator(self.0.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.0 - self.0.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && (self.0 * self.0 - self.0).iter().all(|z| z.norm() <= tol)
    }

    /// Row-major entries, the serialization order used in outputs.
    pub fn row_major(&self) -> [[C64; 4]; 4] {
        let mut out = [[C64::from(0.0); 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[(r, c)];
            }
        }
        out
    }

    /// Eigenvalues in ascending order, with multiplicity.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_hermitian(OPERATOR_TOL) {
            return Err(Error::NotHermitian);
        }
        let eig = SymmetricEigen::new(self.0);
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Spectral decomposition into eigenspaces, grouped within [`EIGEN_TOL`]
    /// and sorted by eigenvalue.
    pub fn spectrum(&self) -> Result<Vec<Eigenspace>> {
        if !self.is_hermitian(OPERATOR_TOL) {
            return Err(Error::NotHermitian);
        }
        let eig = SymmetricEigen::new(self.0);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut spaces: Vec<(Vec<f64>, Matrix4<C64>)> = Vec::new();
        for i in order {
            let value = eig.eigenvalues[i];
            let v = eig.eigenvectors.column(i);
            let p = v * v.adjoint();
            match spaces.last_mut() {
                Some((vals, proj)) if (value - vals[0]).abs() <= EIGEN_TOL => {
                    vals.push(value);
                    *proj += p;
                }
                _ => spaces.push((vec![value], p)),
            }
        }
        Ok(spaces
            .into_iter()
            .map(|(vals, projector)| {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                // Spectra here are small integers; snap to them when within tolerance.
                let value = if (mean - mean.round()).abs() <= EIGEN_TOL {
                    mean.round()
                } else {
                    mean
                };
                Eigenspace {
                    value,
                    projector: SystemOperator(projector),
                }
            })
            .collect())
    }

    /// Projector onto the eigenspace of `value`.
    pub fn eigenprojector(&self, value: f64) -> Result<SystemOperator> {
        self.spectrum()?
            .into_iter()
            .find(|e| (e.value - value).abs() <= EIGEN_TOL)
            .map(|e| e.projector)
            .ok_or(Error::NotAnEigenvalue { value })
    }
}

impl Add for SystemOperator {
    type Output = SystemOperator;
    fn add(self, rhs: Self) -> Self {
        SystemOperator(self.0 + rhs.0)
    }
}

impl Sub for SystemOperator {
    type Output = SystemOperator;
    fn sub(self, rhs: Self) -> Self {
        SystemOperator(self.0 - rhs.0)
    }
}

impl Mul for SystemOperator {
    type Output = SystemOperator;
    fn mul(self, rhs: Self) -> Self {
        SystemOperator(self.0 * rhs.0)
    }
}

/// `Ŷ_arm` for [`ObservableKind::Spatial`], `X̂_arm` for
/// [`ObservableKind::Diagonal`].
pub fn observable(kind: ObservableKind, arm: Arm) -> SystemOperator {
    let path = arm_projector(arm);
    match kind {
        ObservableKind::Spatial => SystemOperator::tensor(&path, &Matrix2::identity()),
        ObservableKind::Diagonal => SystemOperator::tensor(&path, &pauli_x()),
    }
}
