//! Heisenberg operators, Lehmann sums for spectral functions and covariances,
//! retarded response kernels and relaxation functions.
//!
//! Conventions: `A^H(t) = e^{iKt} A e^{−iKt}` with `K = H − μN` and `t_i = 0`;
//! Fourier kernel `e^{−iωt}`, so a comb line at `ω` contributes
//! `(w/2π) e^{−iωt}` in the time domain.

mod comb;
mod response;

pub use comb::{Line, Line2, SpectralComb, ThreePointComb, MERGE_TOL};
pub use response::{
    linear_response, quadratic_response, relaxation_function, spectral_three_point, spectral_three_point_ops,
    QuadraticKernel, Relaxation, ResponseKernel,
};

use std::f64::consts::PI;

use crate::error::Result;
use crate::model::SystemSpec;
use crate::thermal::ThermalState;
use crate::{FTag, Matrix, C64};

/// `e^{iKt} A e^{−iKt}` through the eigenbasis phases.
pub fn heisenberg(state: &ThermalState, a: &Matrix, t: f64) -> Matrix {
    let at = state.to_eigenbasis(a);
    state.eig.from_eigenbasis(&heisenberg_eigenbasis(state, &at, t))
}

/// [`heisenberg`] acting on a matrix already in the eigenbasis.
pub fn heisenberg_eigenbasis(state: &ThermalState, at: &Matrix, t: f64) -> Matrix {
    let w = state.omegas();
    Matrix::from_fn(state.dim(), |j, k| at[(j, k)] * C64::from_polar(1.0, (w[j] - w[k]) * t))
}

/// Raw Lehmann lines `ω = ω_k − ω_j` with weight `2π g(j, k) A_jk B_kj`.
fn lehmann(state: &ThermalState, at: &Matrix, bt: &Matrix, g: impl Fn(usize, usize) -> f64) -> Vec<Line> {
    let n = state.dim();
    let w = state.omegas();
    let mut raw = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let weight = at[(j, k)] * bt[(k, j)] * (2.0 * PI * g(j, k));
            raw.push(Line { omega: w[k] - w[j], weight });
        }
    }
    raw
}

/// `Δ^ρ_AB(ω)` for explicit operators: `ω = ω_k − ω_j`, weight `2π(p_j − p_k)A_jk B_kj`.
pub fn spectral_two_point_ops(state: &ThermalState, a: &Matrix, b: &Matrix) -> SpectralComb {
    let (at, bt) = (state.to_eigenbasis(a), state.to_eigenbasis(b));
    let p = &state.weights;
    SpectralComb::from_lines(Vec::new(), lehmann(state, &at, &bt, |j, k| p[j] - p[k]))
}

/// Spectral function `Δ^ρ_mn(ω)` of `⟨[φ_m^H(t), φ_n^H(t')]⟩`.
pub fn spectral_two_point(state: &ThermalState, spec: &SystemSpec, m: usize, n: usize) -> Result<SpectralComb> {
    let mut c = spectral_two_point_ops(state, spec.phi(m)?, spec.phi(n)?);
    c.indices = vec![m, n];
    Ok(c)
}

/// `Tr{A K^f_ρ(B)}` resolved in frequency: weight `2π f(p_k/p_j) p_j A_jk B_kj`
/// at `ω = ω_k − ω_j`, with `p_k/p_j = e^{−βω}`.
pub fn generalized_covariance_ops(state: &ThermalState, a: &Matrix, b: &Matrix, f: &FTag) -> SpectralComb {
    let (at, bt) = (state.to_eigenbasis(a), state.to_eigenbasis(b));
    let p = &state.weights;
    SpectralComb::from_lines(Vec::new(), lehmann(state, &at, &bt, |j, k| f.kernel(p[k], p[j])))
}

/// Generalized covariance comb `Δ^f_mn(ω)` of `φ_m^H(t)` and `φ_n^H(t')`.
pub fn generalized_covariance(
    state: &ThermalState,
    spec: &SystemSpec,
    m: usize,
    n: usize,
    f: &FTag,
) -> Result<SpectralComb> {
    let mut c = generalized_covariance_ops(state, spec.phi(m)?, spec.phi(n)?, f);
    c.indices = vec![m, n];
    Ok(c)
}

/// Connected BKM correlator `⟨φ_m^H(t);φ_n^H(t')⟩_c` as a comb, using the
/// divided-difference kernel on log-weights (zero-frequency lines included).
pub fn bkm_comb(state: &ThermalState, spec: &SystemSpec, m: usize, n: usize) -> Result<SpectralComb> {
    let at = crate::thermal::centered(state, spec.phi(m)?);
    let bt = crate::thermal::centered(state, spec.phi(n)?);
    let kernel = state.bkm_kernel();
    let d = state.dim();
    let mut c = SpectralComb::from_lines(Vec::new(), lehmann(state, &at, &bt, |j, k| kernel[j * d + k]));
    c.indices = vec![m, n];
    Ok(c)
}

/// The fluctuation-dissipation coefficient `f(e^{−βω})/(1 − e^{−βω})`
/// that maps a spectral-function line onto the `f`-covariance line.
pub fn fdr_coefficient(f: &FTag, beta: f64, omega: f64) -> f64 {
    f.fdr_coefficient((-beta * omega).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::model::{build_qubit, build_transverse_ising};
    use crate::thermal::{bkm_inner_connected, gibbs};
    use crate::FTag;

    #[test]
    fn heisenberg_qubit_phase() {
        let spec = build_qubit(1.3).unwrap();
        let st = gibbs(&spec, 0.7, 0.0).unwrap();
        let t = 0.9;
        let x = heisenberg(&st, pauli::sigma_x::<f64>().matrix(), t);
        let expect = &pauli::sigma_x::<f64>().scale((1.3 * t).cos()).into_matrix()
            - &pauli::sigma_y::<f64>().scale((1.3 * t).sin()).into_matrix();
        assert!(x.max_diff(&expect) < 1e-14);
        assert!(heisenberg(&st, spec.h0(), 5.0).max_diff(spec.h0()) < 1e-14);
        assert!(heisenberg(&st, spec.phi(0).unwrap(), 0.0).max_diff(spec.phi(0).unwrap()) < 1e-14);
        assert!(x.hermitian_deviation() < 1e-14);
    }

    #[test]
    fn qubit_spectral_lines() {
        let (w0, beta) = (1.0, 0.8);
        let spec = build_qubit(w0).unwrap();
        let st = gibbs(&spec, beta, 0.0).unwrap();
        let c = spectral_two_point(&st, &spec, 0, 0).unwrap().pruned(1e-14);
        assert_eq!(c.len(), 2);
        let t = (beta * w0 / 2.0).tanh() * 2.0 * PI;
        assert!((c.weight_at(w0).unwrap() - C64::new(t, 0.0)).norm() < 1e-13);
        assert!((c.weight_at(-w0).unwrap() + C64::new(t, 0.0)).norm() < 1e-13);
        assert!(c.eval(0.0).norm() < 1e-15);
    }

    #[test]
    fn commuting_operators_give_null_comb() {
        let spec = build_qubit(1.0).unwrap().with_source("z", pauli::sigma_z(), 0.0, 1).unwrap();
        let st = gibbs(&spec, 1.0, 0.0).unwrap();
        assert!(spectral_two_point(&st, &spec, 1, 1).unwrap().is_null(1e-15));
    }

    #[test]
    fn antisymmetry_and_conjugation() {
        let spec = build_transverse_ising(3, 1.0, 0.6).unwrap();
        let st = gibbs(&spec, 0.9, 0.0).unwrap();
        for (m, n) in [(0, 3), (1, 4), (2, 2)] {
            let mn = spectral_two_point(&st, &spec, m, n).unwrap();
            let nm = spectral_two_point(&st, &spec, n, m).unwrap();
            for l in &mn.lines {
                let other = nm.weight_at(-l.omega).unwrap();
                assert!((l.weight + other).norm() < 1e-12);
                let mirror = mn.weight_at(-l.omega).unwrap();
                assert!((l.weight + mirror.conj()).norm() < 1e-12);
            }
            for t in [0.0, 0.4, 2.5] {
                assert!(mn.eval(t).re.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_at_zero_time_is_static_trace() {
        // (1/2π)Σ w = Tr{A K^f(B)}; for BKM this is the static inner product
        let spec = build_transverse_ising(2, 0.8, 0.5).unwrap();
        let st = gibbs(&spec, 1.1, 0.0).unwrap();
        let (a, b) = (spec.phi(0).unwrap(), spec.phi(1).unwrap());
        let c = generalized_covariance(&st, &spec, 0, 1, &FTag::Const1).unwrap();
        let direct = (&st.density_matrix() * &(a.matrix() * b.matrix())).trace();
        assert!((c.eval(0.0) - direct).norm() < 1e-13);
        let bkm = bkm_comb(&st, &spec, 0, 1).unwrap();
        assert!((bkm.eval(0.0).re - bkm_inner_connected(&st, a, b)).abs() < 1e-13);
    }

    #[test]
    fn fdr_holds_per_line() {
        let spec = build_transverse_ising(2, 1.0, 0.7).unwrap();
        let st = gibbs(&spec, 1.3, 0.0).unwrap();
        let rho = spectral_two_point(&st, &spec, 0, 1).unwrap();
        for f in FTag::whitelist() {
            let cov = generalized_covariance(&st, &spec, 0, 1, &f).unwrap();
            assert_eq!(cov.len(), rho.len());
            for (lr, lf) in rho.lines.iter().zip(&cov.lines) {
                if lr.weight.norm() > 1e-12 {
                    let ratio = lf.weight / lr.weight;
                    let coef = fdr_coefficient(&f, st.beta, lr.omega);
                    assert!((ratio - coef).norm() < 1e-11 * coef.abs(), "{f}");
                }
            }
        }
    }
}
