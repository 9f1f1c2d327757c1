use num_complex::Complex;
use rand::Rng;

use super::matrix::{CMatrix, Hermitian};

pub fn random_matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix<f64> {
    CMatrix::from_fn(n, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> Hermitian<f64> {
    Hermitian::symmetrized(&random_matrix(n, rng))
}

/// Gram-Schmidt on the columns of a random complex matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix<f64> {
    let a = random_matrix(n, rng);
    let mut cols: Vec<Vec<Complex<f64>>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v: Vec<_> = (0..n).map(|r| a[(r, c)]).collect();
        for u in &cols {
            let proj: Complex<f64> = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    CMatrix::from_fn(n, |r, c| cols[c][r])
}
