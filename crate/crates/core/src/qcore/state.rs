use super::linalg::{clamp_psd, eigh, ensure_hermitian};
use super::{CMatrix, CVector, RegisterLayout, C64};
use crate::{tol, Error, Result};

fn check_square(layout: &RegisterLayout, m: &CMatrix) -> Result<()> {
    let d = layout.total_dimension();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::LayoutMismatch(format!(
            "matrix is {}x{}, layout dimension {d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Unit vector over a register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dimension() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                layout.total_dimension()
            )));
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > tol::STRUCTURAL {
            return Err(Error::InvalidState(format!("norm {n} is not 1")));
        }
        Ok(StateVector { layout, amplitudes })
    }

    /// Normalizes `amplitudes` first.
    pub fn normalized(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n < 1e-300 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(layout, amplitudes.unscale(n))
    }

    pub(crate) fn from_parts_unchecked(layout: RegisterLayout, amplitudes: CVector) -> Self {
        StateVector { layout, amplitudes }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let d = layout.total_dimension();
        if index >= d {
            return Err(Error::param(format!("basis index {index} out of range {d}")));
        }
        let mut v = CVector::zeros(d);
        v[index] = C64::new(1.0, 0.0);
        Ok(StateVector { layout, amplitudes: v })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.layout.dims() != other.layout.dims() {
            return Err(Error::LayoutMismatch("inner product across layouts".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            layout: self.layout.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &StateVector, cap: usize) -> Result<StateVector> {
        let layout = self.layout.concat(&other.layout, cap)?;
        Ok(StateVector { layout, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    /// Same amplitudes reinterpreted over another layout of equal dimension.
    pub fn with_layout(&self, layout: RegisterLayout) -> Result<StateVector> {
        if layout.total_dimension() != self.layout.total_dimension() {
            return Err(Error::LayoutMismatch("relabel with different dimension".into()));
        }
        Ok(StateVector { layout, amplitudes: self.amplitudes.clone() })
    }
}

/// Operators that carry a register layout alongside a square matrix.
pub trait LayoutOperator: Sized + Clone {
    fn layout(&self) -> &RegisterLayout;
    fn matrix(&self) -> &CMatrix;
    /// Wraps parts that already satisfy the type's invariants.
    fn from_parts(layout: RegisterLayout, matrix: CMatrix) -> Self;
}

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    layout: RegisterLayout,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(layout: RegisterLayout, matrix: CMatrix) -> Result<Self> {
        check_square(&layout, &matrix)?;
        ensure_hermitian(&matrix)?;
        let tr = super::linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > tol::STRUCTURAL || tr.im.abs() > tol::STRUCTURAL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (values, _) = eigh(&matrix);
        if let Some(&low) = values.last() {
            if low < -tol::STRUCTURAL {
                return Err(Error::InvalidState(format!("negative eigenvalue {low:.3e}")));
            }
        }
        Ok(DensityOperator { layout, matrix })
    }

    pub(crate) fn from_parts_unchecked(layout: RegisterLayout, matrix: CMatrix) -> Self {
        DensityOperator { layout, matrix }
    }

    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.total_dimension();
        let matrix = CMatrix::identity(d, d).unscale(d as f64);
        DensityOperator { layout, matrix }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Spectral decomposition into `(weight, pure state)` pairs with non-negligible weight.
    pub fn pure_components(&self) -> Result<Vec<(f64, CVector)>> {
        let (values, vectors) = eigh(&self.matrix);
        let values = clamp_psd(&values)?;
        Ok(values
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 1e-15)
            .map(|(k, &w)| (w, vectors.column(k).into_owned()))
            .collect())
    }
}

impl LayoutOperator for DensityOperator {
    fn layout(&self) -> &RegisterLayout {
        &self.layout
    }
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    fn from_parts(layout: RegisterLayout, matrix: CMatrix) -> Self {
        DensityOperator { layout, matrix }
    }
}

/// Hermitian operator over a register layout (observables, POVM elements).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    layout: RegisterLayout,
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(layout: RegisterLayout, matrix: CMatrix) -> Result<Self> {
        check_square(&layout, &matrix)?;
        ensure_hermitian(&matrix)?;
        Ok(HermitianOperator { layout, matrix })
    }

    /// Like [`HermitianOperator::new`] but also requires `0 ≤ M ≤ I`.
    pub fn povm_element(layout: RegisterLayout, matrix: CMatrix) -> Result<Self> {
        let op = Self::new(layout, matrix)?;
        op.check_povm()?;
        Ok(op)
    }

    pub fn identity(layout: RegisterLayout) -> Self {
        let d = layout.total_dimension();
        HermitianOperator { layout, matrix: CMatrix::identity(d, d) }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn check_povm(&self) -> Result<()> {
        let (values, _) = eigh(&self.matrix);
        let hi = values.first().copied().unwrap_or(0.0);
        let lo = values.last().copied().unwrap_or(0.0);
        if lo < -tol::STRUCTURAL || hi > 1.0 + tol::STRUCTURAL {
            return Err(Error::InvalidOperator(format!(
                "spectrum [{lo:.3e}, {hi:.3e}] outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// `tr(M ρ)`.
    pub fn expectation(&self, rho: &DensityOperator) -> Result<f64> {
        if self.layout.dims() != rho.layout().dims() {
            return Err(Error::LayoutMismatch("expectation across layouts".into()));
        }
        Ok(super::linalg::trace(&(&self.matrix * rho.matrix())).re)
    }

    /// `⟨ψ|M|ψ⟩`.
    pub fn expectation_pure(&self, psi: &StateVector) -> Result<f64> {
        if self.layout.dims() != psi.layout().dims() {
            return Err(Error::LayoutMismatch("expectation across layouts".into()));
        }
        Ok(psi.amplitudes().dotc(&(&self.matrix * psi.amplitudes())).re)
    }
}

impl LayoutOperator for HermitianOperator {
    fn layout(&self) -> &RegisterLayout {
        &self.layout
    }
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    fn from_parts(layout: RegisterLayout, matrix: CMatrix) -> Self {
        HermitianOperator { layout, matrix }
    }
}
