use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BitString;
use crate::qcore::{check_cap, CVector, Register, RegisterLayout, StateVector, C64};
use crate::{tol, Error, Result, DEFAULT_DIM_CAP};

/// How fingerprint states are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    /// `|h_x⟩ = 2^{-n/2} Σ_a (−1)^{x·a} |a⟩`.
    Hadamard,
    /// `|h_x⟩ = m^{-1/2} Σ_i (−1)^{E(x)_i} |i⟩` for a binary linear code `E`.
    CodeBased {
        m: usize,
        alphabet: usize,
        /// Generator rows; `E(x) = Σ_j x_j · row_j` over GF(2).
        encoder: Vec<BitString>,
        seed: Option<u64>,
    },
    /// One listed state per input, indexed by the input's integer value.
    Explicit { states: Vec<Vec<[f64; 2]>> },
}

/// A family of unit vectors `|h_x⟩` with bounded pairwise overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintScheme {
    #[serde(flatten)]
    pub kind: SchemeKind,
    pub n: usize,
    pub state_dimension: usize,
    /// `max_{x≠y} |⟨h_x|h_y⟩|`.
    pub overlap_bound: f64,
}

fn encode(rows: &[BitString], x: &BitString, m: usize) -> Vec<bool> {
    let mut out = vec![false; m];
    for (j, row) in rows.iter().enumerate() {
        if x.bit(j) {
            for (o, &b) in out.iter_mut().zip(row.bits()) {
                *o ^= b;
            }
        }
    }
    out
}

impl FingerprintScheme {
    pub fn hadamard(n: usize) -> Result<Self> {
        Self::hadamard_capped(n, DEFAULT_DIM_CAP)
    }

    pub fn hadamard_capped(n: usize, cap: usize) -> Result<Self> {
        if n >= 63 {
            return Err(Error::DimensionCap { needed: 1u128 << n.min(127), cap });
        }
        let state_dimension = check_cap(1u128 << n, cap)?;
        Ok(FingerprintScheme { kind: SchemeKind::Hadamard, n, state_dimension, overlap_bound: 0.0 })
    }

    /// Binary linear code from explicit generator rows.
    ///
    /// Errors unless every nonzero codeword has relative weight at least 1/3.
    pub fn from_encoder(n: usize, encoder: Vec<BitString>, seed: Option<u64>) -> Result<Self> {
        if encoder.len() != n || n == 0 || n > 16 {
            return Err(Error::param("encoder needs n rows with 1 ≤ n ≤ 16"));
        }
        let m = encoder[0].len();
        if m == 0 || encoder.iter().any(|r| r.len() != m) {
            return Err(Error::param("encoder rows must share a positive length"));
        }
        check_cap(m as u128, DEFAULT_DIM_CAP)?;
        let mut min_weight = m;
        let mut overlap = 0.0f64;
        for x in BitString::all(n).skip(1) {
            let w = encode(&encoder, &x, m).iter().filter(|&&b| b).count();
            min_weight = min_weight.min(w);
            overlap = overlap.max((1.0 - 2.0 * w as f64 / m as f64).abs());
        }
        if 3 * min_weight < m {
            return Err(Error::param(format!(
                "code relative distance {:.4} below 1/3",
                min_weight as f64 / m as f64
            )));
        }
        Ok(FingerprintScheme {
            kind: SchemeKind::CodeBased { m, alphabet: 2, encoder, seed },
            n,
            state_dimension: m,
            overlap_bound: overlap,
        })
    }

    /// Seeded random binary linear code of length `m`.
    pub fn code_based(n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n).map(|_| BitString::new((0..m).map(|_| rng.gen::<bool>()).collect())).collect();
        Self::from_encoder(n, rows, Some(seed))
    }

    /// Tries seeds `seed, seed+1, …` until a code meets the distance requirement.
    pub fn code_based_search(n: usize, m: usize, seed: u64, attempts: u64) -> Result<Self> {
        let mut last = Error::param("no attempts");
        for s in seed..seed.saturating_add(attempts) {
            match Self::code_based(n, m, s) {
                Ok(scheme) => return Ok(scheme),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// Scheme given by an explicit table of unit vectors, one per input.
    pub fn explicit(n: usize, states: Vec<CVector>) -> Result<Self> {
        if states.len() != 1usize << n {
            return Err(Error::param(format!("expected {} states, got {}", 1usize << n, states.len())));
        }
        let d = states[0].len();
        if d == 0 || states.iter().any(|s| s.len() != d) {
            return Err(Error::param("explicit states must share a positive dimension"));
        }
        for s in &states {
            if (s.norm() - 1.0).abs() > tol::STRUCTURAL {
                return Err(Error::InvalidState("explicit fingerprint is not normalized".into()));
            }
        }
        let mut overlap = 0.0f64;
        for a in 0..states.len() {
            for b in a + 1..states.len() {
                overlap = overlap.max(states[a].dotc(&states[b]).norm());
            }
        }
        let table = states.iter().map(|s| s.iter().map(|z| [z.re, z.im]).collect()).collect();
        Ok(FingerprintScheme {
            kind: SchemeKind::Explicit { states: table },
            n,
            state_dimension: d,
            overlap_bound: overlap,
        })
    }

    /// Codeword `E(x)` for code-based schemes.
    pub fn codeword(&self, x: &BitString) -> Option<Vec<bool>> {
        match &self.kind {
            SchemeKind::CodeBased { m, encoder, .. } => Some(encode(encoder, x, *m)),
            _ => None,
        }
    }

    /// Amplitudes of `|h_x⟩`.
    pub fn amplitudes(&self, x: &BitString) -> Result<CVector> {
        if x.len() != self.n {
            return Err(Error::param(format!("input has {} bits, scheme expects {}", x.len(), self.n)));
        }
        Ok(match &self.kind {
            SchemeKind::Hadamard => {
                let d = self.state_dimension;
                let amp = 1.0 / (d as f64).sqrt();
                let xv = x.to_u64();
                CVector::from_iterator(
                    d,
                    (0..d as u64).map(|a| {
                        let sign = if (xv & a).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        C64::new(sign * amp, 0.0)
                    }),
                )
            }
            SchemeKind::CodeBased { m, encoder, .. } => {
                let amp = 1.0 / (*m as f64).sqrt();
                CVector::from_iterator(
                    *m,
                    encode(encoder, x, *m).into_iter().map(|b| C64::new(if b { -amp } else { amp }, 0.0)),
                )
            }
            SchemeKind::Explicit { states } => {
                let s = &states[x.to_u64() as usize];
                CVector::from_iterator(s.len(), s.iter().map(|z| C64::new(z[0], z[1])))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SchemeKind::Hadamard => "hadamard",
            SchemeKind::CodeBased { .. } => "code_based",
            SchemeKind::Explicit { .. } => "explicit",
        }
    }
}

/// `|h_x⟩` on a single register named `h`.
pub fn fingerprint_state(scheme: &FingerprintScheme, x: &BitString) -> Result<StateVector> {
    let layout = RegisterLayout::new(vec![Register::prepared("h", scheme.state_dimension, "prover")])?;
    StateVector::new(layout, scheme.amplitudes(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_zero_is_uniform() {
        let s = FingerprintScheme::hadamard(3).unwrap();
        let v = s.amplitudes(&BitString::zeros(3)).unwrap();
        assert!(v.iter().all(|z| (z.re - 1.0 / 8f64.sqrt()).abs() < 1e-15 && z.im == 0.0));
    }

    #[test]
    fn hadamard_is_orthogonal() {
        let s = FingerprintScheme::hadamard(3).unwrap();
        for x in BitString::all(3) {
            for y in BitString::all(3) {
                let o = s.amplitudes(&x).unwrap().dotc(&s.amplitudes(&y).unwrap()).norm();
                assert!((o - if x == y { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn length_mismatch() {
        let s = FingerprintScheme::hadamard(2).unwrap();
        assert!(s.amplitudes(&BitString::zeros(3)).is_err());
        assert!(FingerprintScheme::hadamard(13).is_err());
    }

    #[test]
    fn weak_code_is_rejected() {
        // Repetition of the first bit only: x = 01 encodes to zero.
        let rows = vec!["111".parse().unwrap(), "000".parse().unwrap()];
        assert!(FingerprintScheme::from_encoder(2, rows, None).is_err());
    }

    #[test]
    fn encoder_serializes_as_row_strings() {
        let s = FingerprintScheme::code_based_search(3, 24, 7, 50).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert!(json["encoder"].as_array().unwrap().iter().all(|r| r.as_str().unwrap().len() == 24));
        let back: FingerprintScheme = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }
}
