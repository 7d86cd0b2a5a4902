use serde::{Deserialize, Serialize};

use super::{BitString, BooleanFunction, OneWayProtocol};
use crate::qcore::linalg::top_eigenpair_dense;
use crate::qcore::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// A one-way QMA protocol: a proof goes to Alice, who applies `U_x` to
/// proof ⊗ ancilla and sends the whole output to Bob, who measures `M'_{y,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneWayQmaProtocol {
    /// A proof-free one-way protocol; the proof register has dimension one.
    Wrapped { protocol: OneWayProtocol },
    /// Inequality with a classical witness: the proof names an index `i`,
    /// Alice attaches `x_i`, and Bob accepts iff `x_i ≠ y_i`.
    IndexWitness { n: usize },
}

/// Unitary whose first column is `v` (Gram–Schmidt completion).
pub(crate) fn unitary_with_first_column(v: &CVector) -> CMatrix {
    let d = v.len();
    let mut cols: Vec<CVector> = vec![v.unscale(v.norm())];
    for j in 0..d {
        if cols.len() == d {
            break;
        }
        let mut e = CVector::zeros(d);
        e[j] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&e);
                e -= c * proj;
            }
        }
        let n = e.norm();
        if n > 1e-8 {
            cols.push(e.unscale(n));
        }
    }
    CMatrix::from_columns(&cols)
}

impl OneWayQmaProtocol {
    pub fn name(&self) -> String {
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => format!("wrapped[{}]", protocol.name()),
            OneWayQmaProtocol::IndexWitness { n } => format!("index_witness_neq[{n}]"),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => protocol.n(),
            OneWayQmaProtocol::IndexWitness { n } => *n,
        }
    }

    pub fn function(&self) -> BooleanFunction {
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => protocol.function(),
            OneWayQmaProtocol::IndexWitness { .. } => BooleanFunction::Neq,
        }
    }

    pub fn proof_dimension(&self) -> usize {
        match self {
            OneWayQmaProtocol::Wrapped { .. } => 1,
            OneWayQmaProtocol::IndexWitness { n } => *n,
        }
    }

    pub fn ancilla_dimension(&self) -> usize {
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => protocol.message_dimension(),
            OneWayQmaProtocol::IndexWitness { .. } => 2,
        }
    }

    /// Dimension of Alice's outgoing message (proof ⊗ ancilla).
    pub fn message_dimension(&self) -> usize {
        self.proof_dimension() * self.ancilla_dimension()
    }

    fn check_input(&self, x: &BitString) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::param(format!("input has {} bits, protocol expects {}", x.len(), self.n())));
        }
        Ok(())
    }

    /// `U_x` on proof ⊗ ancilla.
    pub fn alice_unitary(&self, x: &BitString) -> Result<CMatrix> {
        self.check_input(x)?;
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => Ok(unitary_with_first_column(&protocol.message(x)?)),
            OneWayQmaProtocol::IndexWitness { n } => {
                let mut u = CMatrix::zeros(2 * n, 2 * n);
                for i in 0..*n {
                    let flip = x.bit(i) as usize;
                    for b in 0..2 {
                        u[(2 * i + (b ^ flip), 2 * i + b)] = C64::new(1.0, 0.0);
                    }
                }
                Ok(u)
            }
        }
    }

    /// `M'_{y,1}` on proof ⊗ ancilla.
    pub fn bob_element(&self, y: &BitString) -> Result<CMatrix> {
        self.check_input(y)?;
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => protocol.accept_element(y),
            OneWayQmaProtocol::IndexWitness { n } => {
                let mut m = CMatrix::zeros(2 * n, 2 * n);
                for i in 0..*n {
                    let want = 1 - y.bit(i) as usize;
                    m[(2 * i + want, 2 * i + want)] = C64::new(1.0, 0.0);
                }
                Ok(m)
            }
        }
    }

    /// A proof achieving the completeness value, if `f(x, y) = 1`.
    pub fn honest_proof(&self, x: &BitString, y: &BitString) -> Result<Option<CVector>> {
        self.check_input(x)?;
        self.check_input(y)?;
        Ok(match self {
            OneWayQmaProtocol::Wrapped { .. } => Some(CVector::from_element(1, C64::new(1.0, 0.0))),
            OneWayQmaProtocol::IndexWitness { n } => x.first_difference(y).map(|i| {
                let mut v = CVector::zeros(*n);
                v[i] = C64::new(1.0, 0.0);
                v
            }),
        })
    }

    pub fn completeness(&self) -> f64 {
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => protocol.completeness(),
            OneWayQmaProtocol::IndexWitness { .. } => 1.0,
        }
    }

    pub fn soundness(&self) -> f64 {
        match self {
            OneWayQmaProtocol::Wrapped { protocol } => protocol.soundness(),
            OneWayQmaProtocol::IndexWitness { .. } => 0.0,
        }
    }

    /// Optimal two-party acceptance `max_ξ tr(M' U_x (ξ ⊗ |0⟩⟨0|) U_x†)`.
    pub fn two_party_value(&self, x: &BitString, y: &BitString) -> Result<f64> {
        let u = self.alice_unitary(x)?;
        let m = self.bob_element(y)?;
        let pulled = u.adjoint() * m * &u;
        let g = self.proof_dimension();
        let a = self.ancilla_dimension();
        let reduced = CMatrix::from_fn(g, g, |i, j| pulled[(i * a, j * a)]);
        Ok(top_eigenpair_dense(&reduced)?.0)
    }
}

/// A one-way protocol viewed as a one-way QMA protocol with a trivial proof.
pub fn wrap_oneway_as_qma(p: &OneWayProtocol) -> OneWayQmaProtocol {
    OneWayQmaProtocol::Wrapped { protocol: p.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::is_unitary;

    #[test]
    fn completion_is_unitary() {
        let v = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let u = unitary_with_first_column(&v);
        assert!(is_unitary(&u));
        assert!((u.column(0) - &v).norm() < 1e-12);
    }

    #[test]
    fn index_witness_values() {
        let q = OneWayQmaProtocol::IndexWitness { n: 3 };
        let x: BitString = "010".parse().unwrap();
        let y: BitString = "011".parse().unwrap();
        assert!(is_unitary(&q.alice_unitary(&x).unwrap()));
        assert!((q.two_party_value(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(q.two_party_value(&x, &x).unwrap().abs() < 1e-12);
    }
}
