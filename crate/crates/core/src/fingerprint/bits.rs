use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A bit string, most significant bit first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![false; n])
    }

    /// `value` written with `width` bits, MSB first.
    pub fn from_u64(value: u64, width: usize) -> Result<Self> {
        if width < 64 && value >> width != 0 {
            return Err(Error::param(format!("{value} does not fit in {width} bits")));
        }
        Ok(BitString((0..width).map(|i| (value >> (width - 1 - i)) & 1 == 1).collect()))
    }

    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Every string of length `n` in increasing numeric order.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        (0..1u64 << n).map(move |v| BitString::from_u64(v, n).expect("fits"))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// The first `len` bits.
    pub fn prefix(&self, len: usize) -> BitString {
        BitString(self.0[..len].to_vec())
    }

    /// Right-pads with zeros to `width` bits.
    pub fn padded(&self, width: usize) -> BitString {
        let mut bits = self.0.clone();
        bits.resize(width.max(bits.len()), false);
        BitString(bits)
    }

    pub fn hamming(&self, other: &BitString) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count() + self.len().abs_diff(other.len())
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Index of the first position where the strings differ.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        self.0.iter().zip(&other.0).position(|(a, b)| a != b)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("invalid bit `{other}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl TryFrom<String> for BitString {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

/// Named Boolean functions of two inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BooleanFunction {
    Eq,
    Neq,
    /// Hamming distance at most `d`.
    HamLe { d: usize },
    /// `x > y` as unsigned integers.
    Gt,
    Ge,
    Lt,
    Le,
    /// Explicit list of pairs mapping to one.
    Table { ones: Vec<(BitString, BitString)> },
}

impl BooleanFunction {
    pub fn eval(&self, x: &BitString, y: &BitString) -> bool {
        match self {
            BooleanFunction::Eq => x == y,
            BooleanFunction::Neq => x != y,
            BooleanFunction::HamLe { d } => x.hamming(y) <= *d,
            BooleanFunction::Gt => x.to_u64() > y.to_u64(),
            BooleanFunction::Ge => x.to_u64() >= y.to_u64(),
            BooleanFunction::Lt => x.to_u64() < y.to_u64(),
            BooleanFunction::Le => x.to_u64() <= y.to_u64(),
            BooleanFunction::Table { ones } => ones.iter().any(|(a, b)| a == x && b == y),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BooleanFunction::HamLe { d } => format!("ham_le_{d}"),
            BooleanFunction::Table { .. } => "table".into(),
            other => format!("{other:?}").to_lowercase(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first() {
        let b = BitString::from_u64(5, 3).unwrap();
        assert_eq!(b.to_string(), "101");
        assert!(b.bit(0) && !b.bit(1));
        assert_eq!(b.to_u64(), 5);
        assert!(BitString::from_u64(8, 3).is_err());
    }

    #[test]
    fn parse_and_serde() {
        let b: BitString = "0110".parse().unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"0110\"");
        let back: BitString = serde_json::from_str("\"0110\"").unwrap();
        assert_eq!(b, back);
        assert!("012".parse::<BitString>().is_err());
        let empty: BitString = serde_json::from_str("\"\"").unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn functions() {
        let a: BitString = "00".parse().unwrap();
        let b: BitString = "01".parse().unwrap();
        let c: BitString = "11".parse().unwrap();
        let ham = BooleanFunction::HamLe { d: 1 };
        assert!(ham.eval(&a, &b));
        assert!(!ham.eval(&a, &c));
        assert!(BooleanFunction::Gt.eval(&c, &b));
        assert_eq!(a.first_difference(&c), Some(0));
    }
}
