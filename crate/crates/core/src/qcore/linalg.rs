//! Hermitian eigen-solvers and spectral helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CMatrix, CVector, C64};
use crate::{tol, Error, Result};

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    let defect = hermitian_defect(m);
    if defect > tol::STRUCTURAL {
        return Err(Error::InvalidOperator(format!("not Hermitian (defect {defect:.3e})")));
    }
    Ok(())
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition with eigenvalues sorted in descending order.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// Clamps eigenvalues in `[-STRUCTURAL, 0)` to zero; errors below that.
pub fn clamp_psd(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < -tol::STRUCTURAL {
                Err(Error::InvalidOperator(format!("negative eigenvalue {v:.3e}")))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// Rebuilds `V diag(f(λ)) V†`.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let s = C64::new(f(v), 0.0);
        for i in 0..n {
            scaled[(i, k)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    ensure_hermitian(m)?;
    let (values, vectors) = eigh(m);
    let values = clamp_psd(&values)?;
    Ok(spectral_map(&values, &vectors, f64::sqrt))
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|v| v.abs()).sum()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Residual `‖A v − λ v‖` given a matvec.
pub fn residual(apply: &dyn Fn(&[C64], &mut [C64]), value: f64, v: &[C64]) -> f64 {
    let mut y = vec![C64::new(0.0, 0.0); v.len()];
    apply(v, &mut y);
    y.iter().zip(v).map(|(a, b)| (a - b * value).norm_sqr()).sum::<f64>().sqrt()
}

/// Top eigenpair of a dense Hermitian matrix.
pub fn top_eigenpair_dense(m: &CMatrix) -> Result<(f64, CVector)> {
    ensure_hermitian(m)?;
    if m.nrows() == 0 {
        return Err(Error::InvalidOperator("empty operator".into()));
    }
    let (values, vectors) = eigh(m);
    let v: CVector = vectors.column(0).into_owned();
    let r = (m * &v - &v * C64::new(values[0], 0.0)).norm();
    if r > tol::EIGEN_RESIDUAL {
        return Err(Error::Numerical(format!("dense eigen residual {r:.3e}")));
    }
    Ok((values[0], v))
}

/// A Hermitian linear map given only by its action on vectors.
pub trait HermitianMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// Dense matrix obtained column by column.
    fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut y = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut y);
            m.column_mut(j).copy_from_slice(&y);
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }
}

impl HermitianMap for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *yi = acc;
        }
    }
}

/// Dimension up to which [`top_eigenpair_map`] densifies and calls LAPACK-style solvers.
pub const DENSE_EIGEN_LIMIT: usize = 256;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenpair of a Hermitian map.
///
/// Small maps are densified. Larger ones use restarted Lanczos with full
/// reorthogonalization, restarting from the current Ritz vector until the
/// residual target is met.
pub fn top_eigenpair_map(map: &dyn HermitianMap, seed: u64) -> Result<(f64, Vec<C64>)> {
    let n = map.dim();
    if n == 0 {
        return Err(Error::InvalidOperator("empty operator".into()));
    }
    if n <= DENSE_EIGEN_LIMIT {
        let (value, v) = top_eigenpair_dense(&map.to_dense())?;
        return Ok((value, v.as_slice().to_vec()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<C64> = super::random::haar_vector(n, &mut rng).as_slice().to_vec();
    let krylov = n.min(80);
    let mut best = (f64::NEG_INFINITY, start.clone(), f64::INFINITY);
    for _restart in 0..200 {
        let (value, ritz) = lanczos_pass(map, &start, krylov);
        let apply = |x: &[C64], y: &mut [C64]| map.apply(x, y);
        let r = residual(&apply, value, &ritz);
        if r < best.2 || value > best.0 + 1e-12 {
            best = (value, ritz.clone(), r);
        }
        if r <= tol::EIGEN_RESIDUAL * 0.1 {
            return Ok((value, ritz));
        }
        start = ritz;
    }
    if best.2 <= tol::EIGEN_RESIDUAL {
        Ok((best.0, best.1))
    } else {
        Err(Error::Numerical(format!("Lanczos residual {:.3e} above target", best.2)))
    }
}

fn lanczos_pass(map: &dyn HermitianMap, start: &[C64], m: usize) -> (f64, Vec<C64>) {
    let n = map.dim();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let s = norm(start);
    basis.push(start.iter().map(|x| x / s).collect());
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); n];
    for j in 0..m {
        map.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalization, applied twice for stability.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        if j + 1 == m || b < 1e-13 {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let coeffs: DVector<f64> = eig.eigenvectors.column(top).into_owned();
    let mut ritz = vec![C64::new(0.0, 0.0); n];
    for (q, &c) in basis.iter().zip(coeffs.iter()) {
        for (ri, qi) in ritz.iter_mut().zip(q) {
            *ri += qi * c;
        }
    }
    let rn = norm(&ritz);
    for x in ritz.iter_mut() {
        *x /= rn;
    }
    let mut y = vec![C64::new(0.0, 0.0); n];
    map.apply(&ritz, &mut y);
    (dot(&ritz, &y).re, ritz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random::random_hermitian;

    #[test]
    fn eigh_sorts_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(0.2, 0.0),
            C64::new(0.9, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        let (v, _) = eigh(&m);
        assert_eq!(v, vec![0.9, 0.2, -1.0]);
    }

    #[test]
    fn lanczos_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(300, &mut rng);
        let (dense, _) = top_eigenpair_dense(&m).unwrap();
        let (lz, v) = top_eigenpair_map(&m, 9).unwrap();
        assert!((dense - lz).abs() < 1e-9, "{dense} vs {lz}");
        let apply = |x: &[C64], y: &mut [C64]| m.apply(x, y);
        assert!(residual(&apply, lz, &v) <= tol::EIGEN_RESIDUAL);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(6, &mut rng);
        let p = &h * h.adjoint();
        let s = psd_sqrt(&p).unwrap();
        assert!((&s * &s - &p).norm() < 1e-9);
    }
}
