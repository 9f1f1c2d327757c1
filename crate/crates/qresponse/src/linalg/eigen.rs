use num_complex::Complex;
use num_traits::Zero;

use super::matrix::{CMatrix, Hermitian};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Eigendecomposition `A = U diag(values) U†` with ascending eigenvalues and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenSystem<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Matrix elements of `a` in the eigenbasis, `U† a U`.
    pub fn to_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        a.conjugate_by(&self.vectors)
    }

    /// Inverse of [`to_eigenbasis`](Self::to_eigenbasis): `U a U†`.
    pub fn from_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        &(&self.vectors * a) * &self.vectors.adjoint()
    }

    /// `U diag(d) U†` for complex diagonal entries.
    pub fn assemble(&self, d: &[Complex<T>]) -> CMatrix<T> {
        let n = self.dim();
        let u = &self.vectors;
        CMatrix::from_fn(n, |r, c| {
            (0..n).fold(Complex::zero(), |acc, k| acc + u[(r, k)] * d[k] * u[(c, k)].conj())
        })
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        let d: Vec<_> = self.values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.assemble(&d)
    }

    /// `U diag(f(λ)) U†`; fails if `f` is not finite on the spectrum.
    pub fn apply(&self, f: impl Fn(T) -> T) -> Result<Hermitian<T>> {
        let mut d = Vec::with_capacity(self.dim());
        for &v in &self.values {
            let fv = f(v);
            if !fv.is_finite() {
                return Err(Error::DomainError { value: v.to_f64().unwrap_or(f64::NAN) });
            }
            d.push(Complex::new(fv, T::zero()));
        }
        Ok(Hermitian::symmetrized(&self.assemble(&d)))
    }
}

/// Cyclic complex Jacobi diagonalization of a hermitian matrix.
pub fn eig_hermitian<T: Real>(a: &Hermitian<T>) -> Result<EigenSystem<T>> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    if n <= 1 || scale.is_zero() {
        return Ok(sorted(&m, v));
    }
    let eps = T::epsilon();
    let skip = eps * scale * T::lit(1e-3);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= eps * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g <= skip {
                    m[(p, q)] = Complex::zero();
                    m[(q, p)] = Complex::zero();
                    continue;
                }
                rotate(&mut m, &mut v, p, q, apq, g);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > eps * scale * T::lit(16.0) {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }
    Ok(sorted(&m, v))
}

fn off_diagonal_norm<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.dim();
    let mut s = T::zero();
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s = s + m[(p, q)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Zeroes `m[(p,q)]` with the unitary `G = D R` where `D` removes the phase of
/// the pivot and `R` is the real Jacobi rotation; updates `m <- G† m G`, `v <- v G`.
fn rotate<T: Real>(m: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize, apq: Complex<T>, g: T) {
    let n = m.dim();
    let phase = apq / g;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * g);
    let t = {
        let s = if theta >= T::zero() { T::one() } else { -T::one() };
        s / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let cz = Complex::new(c, T::zero());
    let sz = Complex::new(s, T::zero());
    let pc = phase.conj();
    // G restricted to (p,q): [[c, s], [-s*conj(phase), c*conj(phase)]]
    let g_pp = cz;
    let g_pq = sz;
    let g_qp = -sz * pc;
    let g_qq = cz * pc;

    for r in 0..n {
        let mp = m[(r, p)];
        let mq = m[(r, q)];
        m[(r, p)] = mp * g_pp + mq * g_qp;
        m[(r, q)] = mp * g_pq + mq * g_qq;
    }
    for col in 0..n {
        let mp = m[(p, col)];
        let mq = m[(q, col)];
        m[(p, col)] = g_pp.conj() * mp + g_qp.conj() * mq;
        m[(q, col)] = g_pq.conj() * mp + g_qq.conj() * mq;
    }
    m[(p, q)] = Complex::zero();
    m[(q, p)] = Complex::zero();
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());

    for r in 0..n {
        let vp = v[(r, p)];
        let vq = v[(r, q)];
        v[(r, p)] = vp * g_pp + vq * g_qp;
        v[(r, q)] = vp * g_pq + vq * g_qq;
    }
}

fn sorted<T: Real>(m: &CMatrix<T>, v: CMatrix<T>) -> EigenSystem<T> {
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    EigenSystem { values, vectors }
}

/// `f(A)` for hermitian `A` through its eigendecomposition.
pub fn matrix_function<T: Real>(a: &Hermitian<T>, f: impl Fn(T) -> T) -> Result<Hermitian<T>> {
    eig_hermitian(a)?.apply(f)
}
