//! Serializable descriptions of prepared states, channels and tests.

use serde::{Deserialize, Serialize};

use crate::fingerprint::{BitString, FingerprintScheme, OneWayProtocol, OneWayQmaProtocol};
use crate::qcore::{CMatrix, CVector, C64};
use crate::symmetric::{all_permutations, permutation_index_map, symmetric_projector_capped};
use crate::{Error, Result};

/// Dense complex matrix stored row-major as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMatrix> for MatrixData {
    fn from(m: &CMatrix) -> Self {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixData { rows: m.nrows(), cols: m.ncols(), re, im }
    }
}

impl MatrixData {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::param("matrix data length mismatch"));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            C64::new(self.re[k], self.im[k])
        }))
    }
}

/// A node-generated pure state, described by name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fingerprint { scheme: FingerprintScheme, x: BitString },
    /// `inner` placed in the first basis vectors of a `dim`-dimensional space.
    Embedded { inner: Box<StateSpec>, dim: usize },
    Basis { dim: usize, index: usize },
    OneWayMessage { protocol: OneWayProtocol, x: BitString },
    /// The honest proof of a one-way QMA protocol for inputs `(x, y)`.
    QmaProof { protocol: OneWayQmaProtocol, x: BitString, y: BitString },
    /// `U_x (ξ ⊗ |0⟩)` with `ξ` the honest QMA proof.
    QmaMessage { protocol: OneWayQmaProtocol, x: BitString, y: BitString },
    Explicit { amplitudes: Vec<[f64; 2]> },
}

impl StateSpec {
    pub fn amplitudes(&self) -> Result<CVector> {
        match self {
            StateSpec::Fingerprint { scheme, x } => scheme.amplitudes(x),
            StateSpec::Embedded { inner, dim } => {
                let v = inner.amplitudes()?;
                if v.len() > *dim {
                    return Err(Error::param("embedded state larger than target"));
                }
                let mut out = CVector::zeros(*dim);
                out.rows_mut(0, v.len()).copy_from(&v);
                Ok(out)
            }
            StateSpec::Basis { dim, index } => {
                if index >= dim {
                    return Err(Error::param(format!("basis index {index} ≥ {dim}")));
                }
                let mut v = CVector::zeros(*dim);
                v[*index] = C64::new(1.0, 0.0);
                Ok(v)
            }
            StateSpec::OneWayMessage { protocol, x } => protocol.message(x),
            StateSpec::QmaProof { protocol, x, y } => protocol
                .honest_proof(x, y)?
                .ok_or_else(|| Error::NotApplicable(format!("no honest proof for ({x}, {y})"))),
            StateSpec::QmaMessage { protocol, x, y } => {
                let xi = StateSpec::QmaProof { protocol: protocol.clone(), x: x.clone(), y: y.clone() }
                    .amplitudes()?;
                let mut anc = CVector::zeros(protocol.ancilla_dimension());
                anc[0] = C64::new(1.0, 0.0);
                Ok(protocol.alice_unitary(x)? * xi.kronecker(&anc))
            }
            StateSpec::Explicit { amplitudes } => {
                Ok(CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|z| C64::new(z[0], z[1]))))
            }
        }
    }

    pub fn explicit(v: &CVector) -> Self {
        StateSpec::Explicit { amplitudes: v.iter().map(|z| [z.re, z.im]).collect() }
    }
}

/// One branch of an explicit random-unitary channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTerm {
    pub probability: f64,
    pub unitary: MatrixData,
}

/// A random-unitary channel applied by a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Uniformly random permutation of equal-dimension register groups.
    Symmetrize { groups: Vec<Vec<String>> },
    /// Alice's unitary `U_x` of a one-way QMA protocol on (proof, ancilla).
    QmaAlice { registers: Vec<String>, protocol: OneWayQmaProtocol, x: BitString },
    Explicit { registers: Vec<String>, terms: Vec<ExplicitTerm> },
}

/// How a channel branch acts on its registers.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchAction {
    Identity,
    /// Basis permutation given as column → row map.
    Permutation(Vec<usize>),
    Unitary(CMatrix),
}

impl BranchAction {
    pub fn matrix(&self, dim: usize) -> CMatrix {
        match self {
            BranchAction::Identity => CMatrix::identity(dim, dim),
            BranchAction::Permutation(map) => {
                let mut m = CMatrix::zeros(dim, dim);
                for (col, &row) in map.iter().enumerate() {
                    m[(row, col)] = C64::new(1.0, 0.0);
                }
                m
            }
            BranchAction::Unitary(u) => u.clone(),
        }
    }
}

/// Registers flattened from groups, checking equal group dimensions.
pub(crate) fn flatten_groups(groups: &[Vec<String>], dim_of: &dyn Fn(&str) -> Result<usize>) -> Result<(Vec<String>, usize)> {
    let mut flat = Vec::new();
    let mut group_dim = None;
    for g in groups {
        if g.is_empty() {
            return Err(Error::param("empty register group"));
        }
        let d = g.iter().map(|id| dim_of(id)).product::<Result<usize>>()?;
        match group_dim {
            None => group_dim = Some(d),
            Some(prev) if prev != d => {
                return Err(Error::LayoutMismatch(format!("groups of unequal dimension {prev} and {d}")))
            }
            _ => {}
        }
        flat.extend(g.iter().cloned());
    }
    Ok((flat, group_dim.unwrap_or(1)))
}

impl ChannelSpec {
    /// Registers touched, in the order the branch matrices use.
    pub fn registers(&self) -> Vec<String> {
        match self {
            ChannelSpec::Symmetrize { groups } => groups.iter().flatten().cloned().collect(),
            ChannelSpec::QmaAlice { registers, .. } | ChannelSpec::Explicit { registers, .. } => registers.clone(),
        }
    }

    /// `(probability, action)` branches.
    pub fn branches(&self, dim_of: &dyn Fn(&str) -> Result<usize>) -> Result<Vec<(f64, BranchAction)>> {
        match self {
            ChannelSpec::Symmetrize { groups } => {
                let (_, d) = flatten_groups(groups, dim_of)?;
                let k = groups.len();
                if k > crate::symmetric::MAX_PERMUTED_REGISTERS {
                    return Err(Error::param(format!("cannot symmetrize {k} groups")));
                }
                let perms = all_permutations(k);
                let p = 1.0 / perms.len() as f64;
                Ok(perms
                    .iter()
                    .map(|perm| {
                        if perm.iter().enumerate().all(|(a, &b)| a == b) {
                            (p, BranchAction::Identity)
                        } else {
                            (p, BranchAction::Permutation(permutation_index_map(perm, d)))
                        }
                    })
                    .collect())
            }
            ChannelSpec::QmaAlice { registers, protocol, x } => {
                let d = registers.iter().map(|id| dim_of(id)).product::<Result<usize>>()?;
                let u = protocol.alice_unitary(x)?;
                if u.nrows() != d {
                    return Err(Error::LayoutMismatch("QMA unitary does not match registers".into()));
                }
                Ok(vec![(1.0, BranchAction::Unitary(u))])
            }
            ChannelSpec::Explicit { terms, .. } => terms
                .iter()
                .map(|t| Ok((t.probability, BranchAction::Unitary(t.unitary.to_matrix()?))))
                .collect(),
        }
    }
}

/// A two-outcome local measurement; the matrix is the accepting element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestSpec {
    /// Permutation test over groups (SWAP test for two groups).
    Symmetric { groups: Vec<Vec<String>> },
    /// Projection onto a fixed state.
    Projector { registers: Vec<String>, state: StateSpec },
    /// Bob's accepting element `M_{y,1}` of a one-way protocol.
    OneWay { registers: Vec<String>, protocol: OneWayProtocol, y: BitString },
    /// Bob's accepting element `M'_{y,1}` of a one-way QMA protocol.
    QmaBob { registers: Vec<String>, protocol: OneWayQmaProtocol, y: BitString },
    Explicit { registers: Vec<String>, matrix: MatrixData },
}

impl TestSpec {
    pub fn registers(&self) -> Vec<String> {
        match self {
            TestSpec::Symmetric { groups } => groups.iter().flatten().cloned().collect(),
            TestSpec::Projector { registers, .. }
            | TestSpec::OneWay { registers, .. }
            | TestSpec::QmaBob { registers, .. }
            | TestSpec::Explicit { registers, .. } => registers.clone(),
        }
    }

    /// Accepting element on [`TestSpec::registers`] in that order.
    pub fn element(&self, dim_of: &dyn Fn(&str) -> Result<usize>) -> Result<CMatrix> {
        let local: usize = self.registers().iter().map(|id| dim_of(id)).product::<Result<usize>>()?;
        let m = match self {
            TestSpec::Symmetric { groups } => {
                let (_, d) = flatten_groups(groups, dim_of)?;
                symmetric_projector_capped(groups.len(), d, usize::MAX)?.into_matrix()
            }
            TestSpec::Projector { state, .. } => {
                let v = state.amplitudes()?;
                &v * v.adjoint()
            }
            TestSpec::OneWay { protocol, y, .. } => protocol.accept_element(y)?,
            TestSpec::QmaBob { protocol, y, .. } => protocol.bob_element(y)?,
            TestSpec::Explicit { matrix, .. } => matrix.to_matrix()?,
        };
        if m.nrows() != local || m.ncols() != local {
            return Err(Error::LayoutMismatch(format!(
                "test element of size {} on registers of dimension {local}",
                m.nrows()
            )));
        }
        Ok(m)
    }
}
