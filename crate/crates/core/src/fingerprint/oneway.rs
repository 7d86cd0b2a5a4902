use serde::{Deserialize, Serialize};

use super::{BitString, BooleanFunction, FingerprintScheme};
use crate::qcore::{check_cap, dim_product, CMatrix, CVector, C64};
use crate::{Error, Result, DEFAULT_DIM_CAP};

/// A one-way (Alice → Bob) quantum protocol with a single message.
///
/// Bob accepts with the POVM element `M_{y,1}`; `M_{y,0} = I − M_{y,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneWayProtocol {
    /// Alice sends `|h_x⟩`; Bob projects onto `|h_y⟩`.
    Fingerprint { scheme: FingerprintScheme },
    /// Alice sends `|x⟩`; Bob accepts on the strings with `f(x, y) = 1`.
    ExactSend { n: usize, function: BooleanFunction },
    /// Independent copies with a majority vote on Bob's outcomes.
    MajorityRepeat { inner: Box<OneWayProtocol>, times: usize },
}

fn binomial_upper_tail(times: usize, p: f64) -> f64 {
    let mut total = 0.0;
    for j in times / 2 + 1..=times {
        let c = crate::symmetric::binomial(times, j) as f64;
        total += c * p.powi(j as i32) * (1.0 - p).powi((times - j) as i32);
    }
    total
}

impl OneWayProtocol {
    pub fn name(&self) -> String {
        match self {
            OneWayProtocol::Fingerprint { scheme } => format!("fingerprint_eq[{}]", scheme.name()),
            OneWayProtocol::ExactSend { function, .. } => format!("exact_send[{}]", function.name()),
            OneWayProtocol::MajorityRepeat { inner, times } => format!("majority{times}[{}]", inner.name()),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            OneWayProtocol::Fingerprint { scheme } => scheme.n,
            OneWayProtocol::ExactSend { n, .. } => *n,
            OneWayProtocol::MajorityRepeat { inner, .. } => inner.n(),
        }
    }

    /// The function the protocol computes.
    pub fn function(&self) -> BooleanFunction {
        match self {
            OneWayProtocol::Fingerprint { .. } => BooleanFunction::Eq,
            OneWayProtocol::ExactSend { function, .. } => function.clone(),
            OneWayProtocol::MajorityRepeat { inner, .. } => inner.function(),
        }
    }

    pub fn message_dimension(&self) -> usize {
        match self {
            OneWayProtocol::Fingerprint { scheme } => scheme.state_dimension,
            OneWayProtocol::ExactSend { n, .. } => 1 << n,
            OneWayProtocol::MajorityRepeat { inner, times } => inner.message_dimension().pow(*times as u32),
        }
    }

    fn check_input(&self, x: &BitString) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::param(format!("input has {} bits, protocol expects {}", x.len(), self.n())));
        }
        Ok(())
    }

    /// Alice's message state.
    pub fn message(&self, x: &BitString) -> Result<CVector> {
        self.check_input(x)?;
        match self {
            OneWayProtocol::Fingerprint { scheme } => scheme.amplitudes(x),
            OneWayProtocol::ExactSend { n, .. } => {
                let mut v = CVector::zeros(1 << n);
                v[x.to_u64() as usize] = C64::new(1.0, 0.0);
                Ok(v)
            }
            OneWayProtocol::MajorityRepeat { inner, times } => {
                let one = inner.message(x)?;
                let mut v = CVector::from_element(1, C64::new(1.0, 0.0));
                for _ in 0..*times {
                    v = v.kronecker(&one);
                }
                Ok(v)
            }
        }
    }

    /// Bob's accepting POVM element `M_{y,1}`.
    pub fn accept_element(&self, y: &BitString) -> Result<CMatrix> {
        self.check_input(y)?;
        match self {
            OneWayProtocol::Fingerprint { scheme } => {
                let h = scheme.amplitudes(y)?;
                Ok(&h * h.adjoint())
            }
            OneWayProtocol::ExactSend { n, function } => {
                let d = 1usize << n;
                let mut m = CMatrix::zeros(d, d);
                for x in BitString::all(*n) {
                    if function.eval(&x, y) {
                        let i = x.to_u64() as usize;
                        m[(i, i)] = C64::new(1.0, 0.0);
                    }
                }
                Ok(m)
            }
            OneWayProtocol::MajorityRepeat { inner, times } => {
                let accept = inner.accept_element(y)?;
                let d = accept.nrows();
                let reject = CMatrix::identity(d, d) - &accept;
                let mut total = CMatrix::zeros(d.pow(*times as u32), d.pow(*times as u32));
                for outcome in 0u32..1 << times {
                    if outcome.count_ones() as usize * 2 <= *times {
                        continue;
                    }
                    let mut term = CMatrix::identity(1, 1);
                    for copy in 0..*times {
                        let bit = (outcome >> (times - 1 - copy)) & 1 == 1;
                        term = term.kronecker(if bit { &accept } else { &reject });
                    }
                    total += term;
                }
                Ok(total)
            }
        }
    }

    /// `⟨msg_x| M_{y,1} |msg_x⟩`.
    pub fn accept_probability(&self, x: &BitString, y: &BitString) -> Result<f64> {
        let v = self.message(x)?;
        Ok(v.dotc(&(self.accept_element(y)? * &v)).re)
    }

    /// Guaranteed acceptance probability on one-instances.
    pub fn completeness(&self) -> f64 {
        match self {
            OneWayProtocol::Fingerprint { .. } | OneWayProtocol::ExactSend { .. } => 1.0,
            OneWayProtocol::MajorityRepeat { inner, times } => binomial_upper_tail(*times, inner.completeness()),
        }
    }

    /// Largest acceptance probability on zero-instances.
    pub fn soundness(&self) -> f64 {
        match self {
            OneWayProtocol::Fingerprint { scheme } => scheme.overlap_bound.powi(2),
            OneWayProtocol::ExactSend { .. } => 0.0,
            OneWayProtocol::MajorityRepeat { inner, times } => binomial_upper_tail(*times, inner.soundness()),
        }
    }
}

/// The one-sided-error EQ protocol induced by a fingerprint scheme.
pub fn eq_one_way(scheme: &FingerprintScheme) -> Result<OneWayProtocol> {
    if 3.0 * scheme.overlap_bound.powi(2) > 1.0 + 1e-12 {
        return Err(Error::param(format!(
            "overlap bound {} gives soundness above 1/3",
            scheme.overlap_bound
        )));
    }
    Ok(OneWayProtocol::Fingerprint { scheme: scheme.clone() })
}

/// Alice sends her input in the computational basis.
pub fn exact_send_protocol(function: BooleanFunction, n: usize) -> Result<OneWayProtocol> {
    if n >= 63 {
        return Err(Error::DimensionCap { needed: u128::MAX, cap: DEFAULT_DIM_CAP });
    }
    check_cap(1u128 << n, DEFAULT_DIM_CAP)?;
    Ok(OneWayProtocol::ExactSend { n, function })
}

/// Majority vote over `times` independent runs (`times` odd).
pub fn majority_repeat(p: &OneWayProtocol, times: usize) -> Result<OneWayProtocol> {
    if times == 0 || times % 2 == 0 {
        return Err(Error::param("majority repetition needs an odd positive count"));
    }
    check_cap(dim_product(std::iter::repeat(p.message_dimension()).take(times)), DEFAULT_DIM_CAP)?;
    Ok(OneWayProtocol::MajorityRepeat { inner: Box::new(p.clone()), times })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_exact_send() {
        let p = exact_send_protocol(BooleanFunction::HamLe { d: 1 }, 2).unwrap();
        assert!((p.accept_probability(&bs("00"), &bs("01")).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.accept_probability(&bs("00"), &bs("11")).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eq_one_way_values() {
        let p = eq_one_way(&FingerprintScheme::hadamard(2).unwrap()).unwrap();
        assert!((p.accept_probability(&bs("10"), &bs("10")).unwrap() - 1.0).abs() < 1e-12);
        assert!(p.accept_probability(&bs("10"), &bs("11")).unwrap().abs() < 1e-12);
        assert_eq!(p.completeness(), 1.0);
        assert_eq!(p.soundness(), 0.0);
    }

    #[test]
    fn majority_amplifies() {
        let s = FingerprintScheme::code_based_search(2, 12, 1, 100).unwrap();
        let base = eq_one_way(&s).unwrap();
        let rep = majority_repeat(&base, 3).unwrap();
        assert!(rep.soundness() <= base.soundness() + 1e-15);
        for x in BitString::all(2) {
            for y in BitString::all(2) {
                let p = rep.accept_probability(&x, &y).unwrap();
                if x == y {
                    assert!(p >= rep.completeness() - 1e-12);
                } else {
                    assert!(p <= rep.soundness() + 1e-12);
                }
            }
        }
        assert!(majority_repeat(&base, 2).is_err());
    }
}
