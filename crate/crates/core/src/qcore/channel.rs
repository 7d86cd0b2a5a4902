use super::kernel::LocalPlan;
use super::state::LayoutOperator;
use super::{CMatrix, DensityOperator, HermitianOperator, RegisterLayout};
use crate::{tol, Error, Result};

/// One branch of a random-unitary channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTerm {
    pub probability: f64,
    /// Registers the unitary acts on, in the unitary's tensor order.
    pub registers: Vec<String>,
    pub unitary: CMatrix,
}

/// `ρ ↦ Σ p_i U_i ρ U_i†` with each `U_i` acting on a register subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingChannel {
    layout: RegisterLayout,
    terms: Vec<ChannelTerm>,
}

pub(crate) fn is_unitary(u: &CMatrix) -> bool {
    u.is_square()
        && (u * u.adjoint() - CMatrix::identity(u.nrows(), u.nrows()))
            .iter()
            .all(|z| z.norm() <= tol::STRUCTURAL)
}

impl MixingChannel {
    pub fn new(layout: RegisterLayout, terms: Vec<ChannelTerm>) -> Result<Self> {
        let total: f64 = terms.iter().map(|t| t.probability).sum();
        if terms.is_empty() || (total - 1.0).abs() > tol::PROBABILITY_SUM {
            return Err(Error::InvalidOperator(format!("probabilities sum to {total}")));
        }
        for t in &terms {
            if !(0.0..=1.0).contains(&t.probability) {
                return Err(Error::InvalidOperator(format!("probability {}", t.probability)));
            }
            let local: usize = layout
                .positions(&t.registers)?
                .iter()
                .map(|&p| layout.registers()[p].dim)
                .product();
            if t.unitary.nrows() != local || t.unitary.ncols() != local {
                return Err(Error::LayoutMismatch(format!(
                    "unitary of size {} on registers of dimension {local}",
                    t.unitary.nrows()
                )));
            }
            if !is_unitary(&t.unitary) {
                return Err(Error::InvalidOperator("channel matrix is not unitary".into()));
            }
        }
        Ok(MixingChannel { layout, terms })
    }

    pub fn identity(layout: RegisterLayout) -> Self {
        MixingChannel {
            layout,
            terms: vec![ChannelTerm { probability: 1.0, registers: Vec::new(), unitary: CMatrix::identity(1, 1) }],
        }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[ChannelTerm] {
        &self.terms
    }

    fn map<T: LayoutOperator>(&self, op: &T, adjoint: bool) -> Result<T> {
        if op.layout().dims() != self.layout.dims() {
            return Err(Error::LayoutMismatch("channel and operator layouts differ".into()));
        }
        let dims = self.layout.dims();
        let d = self.layout.total_dimension();
        let mut out = CMatrix::zeros(d, d);
        for t in &self.terms {
            let targets = self.layout.positions(&t.registers)?;
            let plan = LocalPlan::new(&dims, &targets);
            let u = if adjoint { t.unitary.adjoint() } else { t.unitary.clone() };
            out += plan.conjugate(&u, op.matrix()).scale(t.probability);
        }
        Ok(T::from_parts(op.layout().clone(), out))
    }

    /// `Σ p_i U_i† M U_i`, the Heisenberg-picture map.
    pub fn apply_adjoint(&self, m: &HermitianOperator) -> Result<HermitianOperator> {
        self.map(m, true)
    }

    /// `Σ p_i U_i M U_i†` applied to an observable.
    pub fn apply_to_operator(&self, m: &HermitianOperator) -> Result<HermitianOperator> {
        self.map(m, false)
    }
}

/// Applies a mixing channel to a state.
pub fn apply_channel(ch: &MixingChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    ch.map(rho, false)
}
