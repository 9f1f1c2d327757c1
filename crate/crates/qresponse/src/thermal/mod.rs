//! Grand-canonical states, BKM correlators and static susceptibilities.

mod bkm;
mod susceptibility;

pub use bkm::{bkm_inner, bkm_inner_connected, bkm_three, bkm_three_connected, lambda_weighted_trace};
pub use susceptibility::{
    chi_s_n, chi_s_n_at, chi_t_mu, chi_t_mu_at, suzuki_limit, suzuki_limit_at, thermo_jacobian, thermo_jacobian_at,
    SuzukiLimit, Susceptibility, ThermoJacobian, TIME_AVERAGE_DEGENERACY,
};
pub(crate) use bkm::centered;
pub(crate) use susceptibility::time_averaged_bkm;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, CMatrix, EigenSystem};
use crate::model::{SystemSpec, COMMUTATION_TOL};
use crate::{Eigen, Matrix, Operator};

/// Relative gap under which `H − μN` eigenvalues are treated as degenerate
/// when building the joint eigenbasis with `N`.
const CLUSTER_TOL: f64 = 1e-10;

/// `ρ = e^{−β(H(j) − μN)}/Z` stored through its eigendecomposition.
#[derive(Clone, Debug)]
pub struct ThermalState {
    pub beta: f64,
    pub mu: f64,
    /// Sources at which the state was prepared.
    pub j: Vec<f64>,
    /// Eigensystem of `H(j) − μN`, rotated within degenerate blocks so `N` is diagonal.
    pub eig: Eigen,
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub log_z: f64,
    /// Diagonal of `N` in the eigenbasis.
    pub number_diag: Vec<f64>,
}

/// Equilibrium expectation values.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoPoint {
    pub energy: f64,
    pub number: f64,
    pub entropy: f64,
    pub grand_potential: f64,
    pub phi: Vec<f64>,
}

/// Gibbs state at the initial sources. Requires `[H0, N] = 0`.
pub fn gibbs(spec: &SystemSpec, beta: f64, mu: f64) -> Result<ThermalState> {
    let scale = spec.h0().max_abs().max(spec.number().max_abs()).max(1.0);
    let comm = spec.h0().commutator(spec.number()).max_abs();
    if comm > COMMUTATION_TOL * scale * scale {
        return Err(Error::NonCommutingNumber { norm: comm });
    }
    ThermalState::at_sources(spec, spec.j_init(), beta, mu)
}

impl ThermalState {
    /// Gibbs state of `H(j) − μN` for arbitrary sources. `N` need not commute
    /// with `H(j)`; `number_diag` is then only the diagonal part of `N`.
    pub fn at_sources(spec: &SystemSpec, j: &[f64], beta: f64, mu: f64) -> Result<Self> {
        let k = spec.grand_hamiltonian_at(j, mu)?;
        let mut state = Self::from_generator(&k, beta, mu)?;
        state.j = j.to_vec();
        if spec.has_number() {
            state.diagonalize_number_within_blocks(spec.number())?;
        }
        Ok(state)
    }

    /// Gibbs state `e^{−βK}/Z` for a given generator `K`.
    pub fn from_generator(k: &Operator, beta: f64, mu: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let eig = eig_hermitian(k)?;
        let x: Vec<f64> = eig.values.iter().map(|&w| -beta * w).collect();
        let shift = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = shift + x.iter().map(|v| (v - shift).exp()).sum::<f64>().ln();
        let log_weights: Vec<f64> = x.iter().map(|v| v - log_z).collect();
        let weights = log_weights.iter().map(|v| v.exp()).collect();
        let n = eig.dim();
        Ok(Self { beta, mu, j: Vec::new(), eig, weights, log_weights, log_z, number_diag: vec![0.0; n] })
    }

    fn diagonalize_number_within_blocks(&mut self, number: &Operator) -> Result<()> {
        let n = self.dim();
        let scale = self.eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut start = 0;
        let mut vectors = self.eig.vectors.clone();
        let nt = self.eig.to_eigenbasis(number);
        while start < n {
            let mut end = start + 1;
            while end < n && self.eig.values[end] - self.eig.values[end - 1] <= CLUSTER_TOL * scale {
                end += 1;
            }
            let size = end - start;
            if size > 1 {
                let block = CMatrix::from_fn(size, |r, c| nt[(start + r, start + c)]);
                let sub = eig_hermitian(&Operator::symmetrized(&block))?;
                let old = vectors.clone();
                for r in 0..n {
                    for c in 0..size {
                        let mut acc = Complex::new(0.0, 0.0);
                        for q in 0..size {
                            acc += old[(r, start + q)] * sub.vectors[(q, c)];
                        }
                        vectors[(r, start + c)] = acc;
                    }
                }
            }
            start = end;
        }
        self.eig.vectors = vectors;
        let nt = self.eig.to_eigenbasis(number);
        self.number_diag = (0..n).map(|i| nt[(i, i)].re).collect();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Eigenvalues `ω_j` of `H − μN`.
    pub fn omegas(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn density_matrix(&self) -> Matrix {
        let d: Vec<_> = self.weights.iter().map(|&p| Complex::new(p, 0.0)).collect();
        self.eig.assemble(&d)
    }

    /// The density matrix as an eigensystem (weights as eigenvalues).
    pub fn density_eigensystem(&self) -> EigenSystem<f64> {
        EigenSystem { values: self.weights.clone(), vectors: self.eig.vectors.clone() }
    }

    pub fn to_eigenbasis(&self, a: &Matrix) -> Matrix {
        self.eig.to_eigenbasis(a)
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &Matrix) -> f64 {
        let at = self.to_eigenbasis(a);
        self.expectation_eigenbasis(&at)
    }

    pub fn expectation_eigenbasis(&self, at: &Matrix) -> f64 {
        self.weights.iter().enumerate().map(|(i, p)| p * at[(i, i)].re).sum()
    }

    /// Weighted mean of a diagonal quantity.
    pub(crate) fn mean(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    /// Joint cumulant of two diagonal quantities.
    pub(crate) fn cov(&self, a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (self.mean(a), self.mean(b));
        self.weights.iter().zip(a.iter().zip(b)).map(|(p, (x, y))| p * (x - ma) * (y - mb)).sum()
    }

    /// Third joint cumulant of three diagonal quantities.
    pub(crate) fn cum3(&self, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
        let (ma, mb, mc) = (self.mean(a), self.mean(b), self.mean(c));
        (0..self.dim()).map(|i| self.weights[i] * (a[i] - ma) * (b[i] - mb) * (c[i] - mc)).sum()
    }

    /// Von Neumann entropy `−Σ p ln p`.
    pub fn entropy(&self) -> f64 {
        -self.weights.iter().zip(&self.log_weights).map(|(p, l)| p * l).sum::<f64>()
    }
}

/// Energy, number, entropy, grand potential and source expectations.
pub fn thermo_point(state: &ThermalState, spec: &SystemSpec) -> Result<ThermoPoint> {
    let j = if state.j.is_empty() { spec.j_init().to_vec() } else { state.j.clone() };
    let number = state.expectation(spec.number().matrix());
    let k_mean = state.mean(state.omegas());
    let mut phi = Vec::with_capacity(spec.num_sources());
    for m in 0..spec.num_sources() {
        phi.push(state.expectation(spec.observable_at(m, &j)?.matrix()));
    }
    Ok(ThermoPoint {
        energy: k_mean + state.mu * number,
        number,
        entropy: state.entropy(),
        grand_potential: -state.log_z / state.beta,
        phi,
    })
}
