use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_DIM_CAP};

/// What a register holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Supplied by the prover.
    Proof,
    /// Generated by a node (fingerprints, messages, ancillas in a fixed state).
    Prepared,
    /// Scratch space starting in a fixed basis state.
    Ancilla,
}

/// A named tensor factor of a Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub id: String,
    pub dim: usize,
    /// Node id, or `"prover"` for registers not yet assigned to a node.
    pub owner: String,
    pub role: Role,
}

impl Register {
    pub fn new(id: impl Into<String>, dim: usize, owner: impl Into<String>, role: Role) -> Self {
        Register { id: id.into(), dim, owner: owner.into(), role }
    }

    pub fn proof(id: impl Into<String>, dim: usize, owner: impl Into<String>) -> Self {
        Self::new(id, dim, owner, Role::Proof)
    }

    pub fn prepared(id: impl Into<String>, dim: usize, owner: impl Into<String>) -> Self {
        Self::new(id, dim, owner, Role::Prepared)
    }

    /// A prover-owned proof register; handy for stand-alone linear algebra.
    pub fn anonymous(id: impl Into<String>, dim: usize) -> Self {
        Self::new(id, dim, "prover", Role::Proof)
    }
}

/// Product of dimensions, saturating instead of overflowing.
pub(crate) fn dim_product(dims: impl IntoIterator<Item = usize>) -> u128 {
    dims.into_iter().fold(1u128, |acc, d| acc.saturating_mul(d as u128))
}

pub(crate) fn check_cap(needed: u128, cap: usize) -> Result<usize> {
    if needed > cap as u128 {
        Err(Error::DimensionCap { needed, cap })
    } else {
        Ok(needed as usize)
    }
}

/// Ordered list of registers defining a tensor-product factorization.
///
/// The first register is the most significant factor of the Kronecker
/// product. Layouts never reorder registers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Register>", into = "Vec<Register>")]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total: usize,
}

impl TryFrom<Vec<Register>> for RegisterLayout {
    type Error = Error;
    fn try_from(registers: Vec<Register>) -> Result<Self> {
        RegisterLayout::new(registers)
    }
}

impl From<RegisterLayout> for Vec<Register> {
    fn from(layout: RegisterLayout) -> Self {
        layout.registers
    }
}

impl RegisterLayout {
    /// Builds a layout bounded by [`DEFAULT_DIM_CAP`].
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        Self::with_cap(registers, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(registers: Vec<Register>, cap: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        for reg in &registers {
            if !seen.insert(reg.id.as_str()) {
                return Err(Error::DuplicateRegister(reg.id.clone()));
            }
            if reg.dim == 0 {
                return Err(Error::param(format!("register `{}` has dimension 0", reg.id)));
            }
        }
        let total = check_cap(dim_product(registers.iter().map(|r| r.dim)), cap)?;
        Ok(RegisterLayout { registers, total })
    }

    /// Layout with no registers (dimension one).
    pub fn empty() -> Self {
        RegisterLayout { registers: Vec::new(), total: 1 }
    }

    /// Layout of anonymous registers `q0, q1, ...` with the given dimensions.
    pub fn anonymous(dims: &[usize]) -> Result<Self> {
        Self::new(
            dims.iter()
                .enumerate()
                .map(|(i, &d)| Register::anonymous(format!("q{i}"), d))
                .collect(),
        )
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dimension(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.id.as_str()).collect()
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| Error::UnknownRegister(id.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.position(id.as_ref())).collect()
    }

    pub fn register(&self, id: &str) -> Result<&Register> {
        Ok(&self.registers[self.position(id)?])
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &RegisterLayout, cap: usize) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Self::with_cap(regs, cap)
    }

    /// The registers named in `keep`, in layout order.
    pub fn select<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        let positions = self.positions(keep)?;
        let mut sorted = positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return Err(Error::DuplicateRegister("repeated id in selection".into()));
        }
        let regs = sorted.iter().map(|&p| self.registers[p].clone()).collect();
        Self::with_cap(regs, usize::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        let a = Register::anonymous("a", 2);
        assert!(matches!(
            RegisterLayout::new(vec![a.clone(), a.clone()]),
            Err(Error::DuplicateRegister(_))
        ));
        assert!(RegisterLayout::new(vec![Register::anonymous("z", 0)]).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let regs: Vec<_> = (0..13).map(|i| Register::anonymous(format!("q{i}"), 2)).collect();
        assert!(matches!(RegisterLayout::new(regs.clone()), Err(Error::DimensionCap { .. })));
        assert_eq!(RegisterLayout::with_cap(regs, 1 << 13).unwrap().total_dimension(), 8192);
    }

    #[test]
    fn select_keeps_layout_order() {
        let l = RegisterLayout::anonymous(&[2, 3, 5]).unwrap();
        let s = l.select(&["q2", "q0"]).unwrap();
        assert_eq!(s.ids(), vec!["q0", "q2"]);
        assert_eq!(s.total_dimension(), 10);
    }

    #[test]
    fn serde_round_trip() {
        let l = RegisterLayout::anonymous(&[2, 3]).unwrap();
        let text = serde_json::to_string(&l).unwrap();
        let back: RegisterLayout = serde_json::from_str(&text).unwrap();
        assert_eq!(l, back);
    }
}
