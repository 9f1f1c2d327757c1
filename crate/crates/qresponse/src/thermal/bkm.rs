//! BKM (Kubo-Mori) correlators evaluated in the eigenbasis of `ρ`.
//!
//! With `x_j = ln p_j`, the two-point kernel is the divided difference
//! `exp[x_j, x_k] = (p_j − p_k)/(x_j − x_k)` and the three-point kernel is
//! `exp[x_a, x_b, x_c]`, the simplex integral of `p_a^{λ₁} p_b^{λ₂} p_c^{λ₃}`.

use num_complex::Complex;

use super::ThermalState;
use crate::linalg::divdiff::{exp_dd1, exp_dd2};
use crate::Matrix;

impl ThermalState {
    /// Matrix of two-point kernels `c(p_j, p_k)`.
    pub fn bkm_kernel(&self) -> Vec<f64> {
        let n = self.dim();
        let x = &self.log_weights;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                out[j * n + k] = exp_dd1(x[j], x[k]);
            }
        }
        out
    }

    pub(crate) fn bkm_inner_eigenbasis(&self, at: &Matrix, bt: &Matrix) -> f64 {
        let n = self.dim();
        let x = &self.log_weights;
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += (at[(j, k)] * bt[(k, j)]).re * exp_dd1(x[j], x[k]);
            }
        }
        acc
    }

    pub(crate) fn bkm_three_eigenbasis(&self, at: &Matrix, bt: &Matrix, ct: &Matrix) -> f64 {
        let n = self.dim();
        let x = &self.log_weights;
        let mut acc = Complex::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let ab = (bt[(a, b)], ct[(a, b)]);
                if ab.0.norm_sqr() == 0.0 && ab.1.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let d = exp_dd2(x[a], x[b], x[c]);
                    let term = at[(c, a)] * (ab.0 * ct[(b, c)] + ab.1 * bt[(b, c)]);
                    acc += term * d;
                }
            }
        }
        acc.re
    }

    /// `∫₀¹ dλ λ [Tr{B ρ^{1−λ} A ρ^λ X} + Tr{A ρ^{1−λ} B ρ^λ X}]` for `X`
    /// diagonal in the eigenbasis (`x_diag` its diagonal).
    pub(crate) fn lambda_weighted_eigenbasis(&self, at: &Matrix, bt: &Matrix, x_diag: &[f64]) -> f64 {
        let n = self.dim();
        let x = &self.log_weights;
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                let w = exp_dd2(x[j], x[j], x[k]);
                acc += ((bt[(j, k)] * at[(k, j)]).re + (at[(j, k)] * bt[(k, j)]).re) * x_diag[j] * w;
            }
        }
        acc
    }
}

/// `⟨A;B⟩ = ∫₀¹ dλ Tr{A ρ^{1−λ} B ρ^λ}`.
pub fn bkm_inner(state: &ThermalState, a: &Matrix, b: &Matrix) -> f64 {
    state.bkm_inner_eigenbasis(&state.to_eigenbasis(a), &state.to_eigenbasis(b))
}

/// `⟨A;B⟩ − ⟨A⟩⟨B⟩`.
pub fn bkm_inner_connected(state: &ThermalState, a: &Matrix, b: &Matrix) -> f64 {
    let (ac, bc) = (centered(state, a), centered(state, b));
    state.bkm_inner_eigenbasis(&ac, &bc)
}

/// Three-point BKM correlator: the simplex integral of
/// `Tr{A ρ^{λ₁} B ρ^{λ₂} C ρ^{λ₃}}` plus the same with `B ↔ C`.
pub fn bkm_three(state: &ThermalState, a: &Matrix, b: &Matrix, c: &Matrix) -> f64 {
    state.bkm_three_eigenbasis(&state.to_eigenbasis(a), &state.to_eigenbasis(b), &state.to_eigenbasis(c))
}

/// Third cumulant built from [`bkm_three`] (operators centered first).
pub fn bkm_three_connected(state: &ThermalState, a: &Matrix, b: &Matrix, c: &Matrix) -> f64 {
    state.bkm_three_eigenbasis(&centered(state, a), &centered(state, b), &centered(state, c))
}

/// λ-weighted trace `∫λ[Tr{Bρ^{1−λ}Aρ^λX} + Tr{Aρ^{1−λ}Bρ^λX}]dλ` for `X`
/// commuting with `ρ`.
pub fn lambda_weighted_trace(state: &ThermalState, a: &Matrix, b: &Matrix, x: &Matrix) -> f64 {
    let xt = state.to_eigenbasis(x);
    let diag: Vec<f64> = (0..state.dim()).map(|i| xt[(i, i)].re).collect();
    state.lambda_weighted_eigenbasis(&state.to_eigenbasis(a), &state.to_eigenbasis(b), &diag)
}

/// Eigenbasis representation of `A − ⟨A⟩`.
pub(crate) fn centered(state: &ThermalState, a: &Matrix) -> Matrix {
    let mut at = state.to_eigenbasis(a);
    let mean = state.expectation_eigenbasis(&at);
    for i in 0..state.dim() {
        at[(i, i)] -= Complex::new(mean, 0.0);
    }
    at
}
