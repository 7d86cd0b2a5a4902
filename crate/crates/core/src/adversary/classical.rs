use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fingerprint::BitString;
use crate::{Error, Result};

/// A classical proof-labelled protocol on a path `v0..vr`.
///
/// Node `j` holds `proof_bits[j]` proof bits and accepts with probability
/// `tables[j][table_index(j, input, left, own, right)]`, where `input` is
/// `x` at `v0`, `y` at `vr` and empty elsewhere, and `left`/`right` are the
/// neighbours' proofs (empty past the ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalDmaProtocol {
    pub name: String,
    pub n: usize,
    pub r: usize,
    pub proof_bits: Vec<usize>,
    pub tables: Vec<Vec<f64>>,
    /// Declared completeness `1 - p`.
    pub completeness: f64,
}

impl ClassicalDmaProtocol {
    fn bits_at(&self, j: isize) -> usize {
        if j < 0 || j as usize > self.r {
            0
        } else {
            self.proof_bits[j as usize]
        }
    }

    fn input_bits(&self, j: usize) -> usize {
        if j == 0 || j == self.r {
            self.n
        } else {
            0
        }
    }

    pub fn table_len(&self, j: usize) -> usize {
        let ji = j as isize;
        1usize << (self.input_bits(j) + self.bits_at(ji - 1) + self.bits_at(ji) + self.bits_at(ji + 1))
    }

    pub fn table_index(&self, j: usize, input: u64, left: u64, own: u64, right: u64) -> usize {
        let ji = j as isize;
        let (cl, co, cr) = (self.bits_at(ji - 1), self.bits_at(ji), self.bits_at(ji + 1));
        ((((input as usize) << cl | left as usize) << co | own as usize) << cr) | right as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 || self.proof_bits.len() != self.r + 1 || self.tables.len() != self.r + 1 {
            return Err(Error::param("classical protocol needs r >= 1 and one entry per node"));
        }
        if self.n > 16 || self.proof_bits.iter().any(|&c| c > 16) {
            return Err(Error::param("classical protocol widths are limited to 16 bits"));
        }
        for j in 0..=self.r {
            if self.tables[j].len() != self.table_len(j) {
                return Err(Error::param(format!("table of v{j} has the wrong length")));
            }
            if self.tables[j].iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::param(format!("table of v{j} has an entry outside [0,1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.completeness) {
            return Err(Error::param("completeness must lie in [0,1]"));
        }
        Ok(())
    }

    fn input_of(&self, j: usize, x: &BitString, y: &BitString) -> u64 {
        if j == 0 {
            x.to_u64()
        } else if j == self.r {
            y.to_u64()
        } else {
            0
        }
    }

    fn factor(&self, j: usize, input: u64, left: u64, own: u64, right: u64) -> f64 {
        self.tables[j][self.table_index(j, input, left, own, right)]
    }

    pub fn node_accept(&self, j: usize, x: &BitString, y: &BitString, proof: &[u64]) -> f64 {
        let left = if j == 0 { 0 } else { proof[j - 1] };
        let right = if j == self.r { 0 } else { proof[j + 1] };
        self.factor(j, self.input_of(j, x, y), left, proof[j], right)
    }

    pub fn accept_probability(&self, x: &BitString, y: &BitString, proof: &[u64]) -> Result<f64> {
        self.check_proof(proof)?;
        Ok((0..=self.r).map(|j| self.node_accept(j, x, y, proof)).product())
    }

    fn check_proof(&self, proof: &[u64]) -> Result<()> {
        if proof.len() != self.r + 1 {
            return Err(Error::param("proof needs one label per node"));
        }
        for (j, (&w, &c)) in proof.iter().zip(&self.proof_bits).enumerate() {
            if w >> c != 0 {
                return Err(Error::param(format!("label of v{j} exceeds {c} bits")));
            }
        }
        Ok(())
    }

    /// Proof maximizing the acceptance probability, by dynamic programming over `(w_j, w_{j+1})`.
    pub fn best_proof(&self, x: &BitString, y: &BitString) -> (f64, Vec<u64>) {
        let size = |j: usize| 1u64 << self.proof_bits[j];
        let next_size = |j: usize| if j == self.r { 1 } else { size(j + 1) };
        // score[(own, right)] after the factors of v0..=vj.
        let mut score: Vec<f64> = Vec::new();
        let mut back: Vec<Vec<u64>> = Vec::with_capacity(self.r + 1);
        for j in 0..=self.r {
            let input = self.input_of(j, x, y);
            let (so, sr) = (size(j), next_size(j));
            let mut next = vec![0.0; (so * sr) as usize];
            let mut arg = vec![0u64; (so * sr) as usize];
            for own in 0..so {
                for right in 0..sr {
                    let slot = (own * sr + right) as usize;
                    if j == 0 {
                        next[slot] = self.factor(0, input, 0, own, right);
                        continue;
                    }
                    let mut best = -1.0;
                    for left in 0..size(j - 1) {
                        let v = score[(left * so + own) as usize] * self.factor(j, input, left, own, right);
                        if v > best {
                            best = v;
                            arg[slot] = left;
                        }
                    }
                    next[slot] = best;
                }
            }
            score = next;
            back.push(arg);
        }
        let mut own = (0..size(self.r)).max_by(|a, b| score[*a as usize].total_cmp(&score[*b as usize]).then(b.cmp(a))).unwrap_or(0);
        let value = score[own as usize];
        let mut proof = vec![0u64; self.r + 1];
        for j in (0..=self.r).rev() {
            proof[j] = own;
            if j > 0 {
                let right = if j == self.r { 0 } else { proof[j + 1] };
                own = back[j][(own * next_size(j) + right) as usize];
            }
        }
        (value, proof)
    }

    /// Monte-Carlo estimate of the acceptance frequency.
    pub fn simulate(&self, x: &BitString, y: &BitString, proof: &[u64], shots: u64, seed: u64) -> Result<f64> {
        self.check_proof(proof)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probs: Vec<f64> = (0..=self.r).map(|j| self.node_accept(j, x, y, proof)).collect();
        let hits = (0..shots).filter(|_| probs.iter().all(|&p| rng.gen::<f64>() < p)).count();
        Ok(hits as f64 / shots.max(1) as f64)
    }
}

fn consistent(a: &BitString, b: &BitString) -> bool {
    let m = a.len().min(b.len());
    a.bits()[..m] == b.bits()[..m]
}

/// EQ with truncated labels: node `j` holds the first `proof_bits[j]` bits of the
/// input and checks that every pair among its input, its own label and its
/// neighbours' labels agrees on their common prefix.
pub fn truncated_eq(n: usize, r: usize, proof_bits: Vec<usize>) -> Result<ClassicalDmaProtocol> {
    if proof_bits.iter().any(|&c| c > n) {
        return Err(Error::param("labels cannot be longer than the input"));
    }
    let mut p = ClassicalDmaProtocol {
        name: "truncated_eq".into(),
        n,
        r,
        proof_bits,
        tables: Vec::new(),
        completeness: 1.0,
    };
    if p.r < 1 || p.proof_bits.len() != r + 1 {
        return Err(Error::param("truncated_eq needs r >= 1 and r + 1 label widths"));
    }
    for j in 0..=r {
        let ji = j as isize;
        let (ci, cl, co, cr) = (p.input_bits(j), p.bits_at(ji - 1), p.bits_at(ji), p.bits_at(ji + 1));
        let mut table = vec![0.0; p.table_len(j)];
        for input in 0..1u64 << ci {
            for left in 0..1u64 << cl {
                for own in 0..1u64 << co {
                    for right in 0..1u64 << cr {
                        let mut seen = vec![
                            BitString::from_u64(left, cl)?,
                            BitString::from_u64(own, co)?,
                            BitString::from_u64(right, cr)?,
                        ];
                        if ci > 0 {
                            seen.push(BitString::from_u64(input, ci)?);
                        }
                        let ok = seen.iter().enumerate().all(|(a, s)| seen[a + 1..].iter().all(|t| consistent(s, t)));
                        table[p.table_index(j, input, left, own, right)] = if ok { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        p.tables.push(table);
    }
    p.validate()?;
    Ok(p)
}

/// Honest labels of [`truncated_eq`] on input `x`.
pub fn truncated_eq_honest(p: &ClassicalDmaProtocol, x: &BitString) -> Vec<u64> {
    p.proof_bits.iter().map(|&c| x.prefix(c).to_u64()).collect()
}
