//! Static susceptibilities at fixed `(T, μ)` and fixed `(S, N)`.
//!
//! Derivatives of equilibrium averages with respect to `T` and `μ` are written
//! as cumulants over the joint eigenbasis of `K = H − μN` and `N`: with
//! `ω_j` the eigenvalues of `K`, `n_j` those of `N` and `x_j = ln p_j`,
//! `∂x_j/∂T = β²(ω_j − ⟨ω⟩)` and `∂x_j/∂μ = β(n_j − ⟨n⟩)`.

use super::bkm::centered;
use super::{gibbs, ThermalState};
use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::Matrix;

/// Rank cutoff for the pseudo-inverse of the normalized Jacobian.
const RANK_TOL: f64 = 1e-10;

/// Symmetric susceptibility tensor of order 2 or 3.
#[derive(Clone, Debug, PartialEq)]
pub enum Susceptibility {
    Order2(Vec<Vec<f64>>),
    Order3(Vec<Vec<Vec<f64>>>),
}

impl Susceptibility {
    pub fn order(&self) -> usize {
        match self {
            Self::Order2(_) => 2,
            Self::Order3(_) => 3,
        }
    }

    pub fn as_matrix(&self) -> Option<&Vec<Vec<f64>>> {
        match self {
            Self::Order2(m) => Some(m),
            Self::Order3(_) => None,
        }
    }

    pub fn as_cube(&self) -> Option<&Vec<Vec<Vec<f64>>>> {
        match self {
            Self::Order3(c) => Some(c),
            Self::Order2(_) => None,
        }
    }
}

/// Derivatives of the equilibrium state with respect to `(T, μ)` at fixed sources.
#[derive(Clone, Debug)]
pub struct ThermoJacobian {
    pub beta: f64,
    pub mu: f64,
    pub phi: Vec<f64>,
    /// `∂Φ_m/∂T = β²⟨(H−μN)φ_m⟩_c`
    pub dphi_dt: Vec<f64>,
    /// `∂Φ_m/∂μ = β⟨Nφ_m⟩_c`
    pub dphi_dmu: Vec<f64>,
    /// Hessian of `Φ_m` in `(T, μ)`.
    pub d2phi: Vec<[[f64; 2]; 2]>,
    /// `[[∂S/∂T, ∂N/∂T], [∂S/∂μ, ∂N/∂μ]] = −∂²Ω`, symmetric.
    pub jacobian: [[f64; 2]; 2],
    /// `∂/∂T` and `∂/∂μ` of [`jacobian`](Self::jacobian) (that is, `−∂³Ω`).
    pub djacobian: [[[f64; 2]; 2]; 2],
    /// `∂χ^{Tμ}_mn/∂T` and `∂χ^{Tμ}_mn/∂μ`.
    pub dchi: Vec<Vec<[f64; 2]>>,
}

impl ThermoJacobian {
    /// `a_m = (∂Φ_m/∂T, ∂Φ_m/∂μ)`.
    pub fn a(&self, m: usize) -> [f64; 2] {
        [self.dphi_dt[m], self.dphi_dmu[m]]
    }

    /// Moore-Penrose inverse of the Jacobian. Returns the inverse and its rank.
    ///
    /// The matrix is first scaled to unit diagonal so the rank decision does
    /// not depend on the units of `S` and `N`.
    pub fn inverse(&self) -> Result<([[f64; 2]; 2], usize)> {
        pseudo_inverse_sym(&self.jacobian)
    }
}

/// Both evaluations of the Suzuki term.
#[derive(Clone, Debug)]
pub struct SuzukiLimit {
    /// `a_mᵀ J⁻¹ a_n` from the thermodynamic Jacobian.
    pub closed_form: Vec<Vec<f64>>,
    /// Time average of `β⟨φ_m^H(t);φ_n⟩_c`: the degenerate-block projection
    /// `β(Σ_{ω_j=ω_k} p_j (φ_m)_jk (φ_n)_kj − Φ_m Φ_n)`.
    pub cesaro: Vec<Vec<f64>>,
}

impl SuzukiLimit {
    pub fn max_route_gap(&self) -> f64 {
        self.closed_form
            .iter()
            .flatten()
            .zip(self.cesaro.iter().flatten())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

pub(crate) fn pseudo_inverse_sym(m: &[[f64; 2]; 2]) -> Result<([[f64; 2]; 2], usize)> {
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::SingularJacobian("non-finite entries".into()));
    }
    let s = [scale_of(m[0][0]), scale_of(m[1][1])];
    let r = [[m[0][0] * s[0] * s[0], m[0][1] * s[0] * s[1]], [m[1][0] * s[1] * s[0], m[1][1] * s[1] * s[1]]];
    // eigen-decomposition of the symmetric 2x2
    let (a, b, d) = (r[0][0], 0.5 * (r[0][1] + r[1][0]), r[1][1]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let lams = [mean + rad, mean - rad];
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let vecs = [[theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]];
    let top = lams[0].abs().max(lams[1].abs());
    let mut inv = [[0.0; 2]; 2];
    let mut rank = 0;
    for (lam, v) in lams.iter().zip(vecs.iter()) {
        if top > 0.0 && lam.abs() > RANK_TOL * top {
            rank += 1;
            for i in 0..2 {
                for j in 0..2 {
                    inv[i][j] += v[i] * v[j] / lam;
                }
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            inv[i][j] *= s[i] * s[j];
        }
    }
    Ok((inv, rank))
}

fn scale_of(diag: f64) -> f64 {
    if diag > 0.0 {
        1.0 / diag.sqrt()
    } else {
        1.0
    }
}

fn mat_vec(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn quad(u: [f64; 2], m: &[[f64; 2]; 2], v: [f64; 2]) -> f64 {
    dot(u, mat_vec(m, v))
}

/// Eigenbasis data shared by the susceptibility routines.
struct Prepared<'a> {
    state: &'a ThermalState,
    /// `φ_m − Φ_m` in the eigenbasis.
    phi_c: Vec<Matrix>,
    phi_mean: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(state: &'a ThermalState, spec: &SystemSpec) -> Result<Self> {
        let s = spec.num_sources();
        let mut phi_c = Vec::with_capacity(s);
        let mut phi_mean = Vec::with_capacity(s);
        for m in 0..s {
            let op = spec.phi(m)?;
            phi_mean.push(state.expectation(op));
            phi_c.push(centered(state, op));
        }
        Ok(Self { state, phi_c, phi_mean })
    }

    fn diag(&self, m: &Matrix) -> Vec<f64> {
        (0..self.state.dim()).map(|i| m[(i, i)].re).collect()
    }
}

/// Second-order (or third-order) susceptibility at fixed `(T, μ)`.
pub fn chi_t_mu(spec: &SystemSpec, beta: f64, mu: f64, order: usize) -> Result<Susceptibility> {
    let state = gibbs(spec, beta, mu)?;
    chi_t_mu_at(&state, spec, order)
}

/// [`chi_t_mu`] for an already prepared state.
pub fn chi_t_mu_at(state: &ThermalState, spec: &SystemSpec, order: usize) -> Result<Susceptibility> {
    let p = Prepared::new(state, spec)?;
    match order {
        2 => Ok(Susceptibility::Order2(chi2(&p, spec)?)),
        3 => Ok(Susceptibility::Order3(chi3(&p, spec)?)),
        _ => Err(Error::InvalidParameter(format!("susceptibility order must be 2 or 3, got {order}"))),
    }
}

fn chi2(p: &Prepared, spec: &SystemSpec) -> Result<Vec<Vec<f64>>> {
    let s = spec.num_sources();
    let beta = p.state.beta;
    let mut out = vec![vec![0.0; s]; s];
    for m in 0..s {
        for n in m..s {
            let mut v = beta * p.state.bkm_inner_eigenbasis(&p.phi_c[m], &p.phi_c[n]);
            if let Some(op) = spec.phi2(m, n)? {
                v += p.state.expectation(op);
            }
            out[m][n] = v;
            out[n][m] = v;
        }
    }
    Ok(out)
}

fn chi3(p: &Prepared, spec: &SystemSpec) -> Result<Vec<Vec<Vec<f64>>>> {
    let s = spec.num_sources();
    let beta = p.state.beta;
    // φ_mn − ⟨φ_mn⟩ in the eigenbasis, computed once per pair
    let mut pair_c: Vec<Vec<Option<Matrix>>> = vec![vec![None; s]; s];
    for m in 0..s {
        for n in m..s {
            if let Some(op) = spec.phi2(m, n)? {
                let c = centered(p.state, op);
                pair_c[m][n] = Some(c.clone());
                pair_c[n][m] = Some(c);
            }
        }
    }
    let mut out = vec![vec![vec![0.0; s]; s]; s];
    for m in 0..s {
        for n in m..s {
            for k in n..s {
                let mut v = beta * beta * p.state.bkm_three_eigenbasis(&p.phi_c[m], &p.phi_c[n], &p.phi_c[k]);
                for (pair, single) in [((m, n), k), ((n, k), m), ((k, m), n)] {
                    if let Some(c) = &pair_c[pair.0][pair.1] {
                        v += beta * p.state.bkm_inner_eigenbasis(c, &p.phi_c[single]);
                    }
                }
                if let Some(op) = spec.phi3(m, n, k)? {
                    v += p.state.expectation(op);
                }
                for (a, b, c) in [(m, n, k), (m, k, n), (n, m, k), (n, k, m), (k, m, n), (k, n, m)] {
                    out[a][b][c] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Derivative bundle at the initial sources.
pub fn thermo_jacobian(spec: &SystemSpec, beta: f64, mu: f64) -> Result<ThermoJacobian> {
    let state = gibbs(spec, beta, mu)?;
    thermo_jacobian_at(&state, spec)
}

/// [`thermo_jacobian`] for an already prepared state.
pub fn thermo_jacobian_at(state: &ThermalState, spec: &SystemSpec) -> Result<ThermoJacobian> {
    let p = Prepared::new(state, spec)?;
    let beta = state.beta;
    let (b2, b3, b4, b5) = (beta * beta, beta.powi(3), beta.powi(4), beta.powi(5));
    let w = state.omegas().to_vec();
    let nn = state.number_diag.clone();
    let s = spec.num_sources();

    let mut dphi_dt = Vec::with_capacity(s);
    let mut dphi_dmu = Vec::with_capacity(s);
    let mut d2phi = Vec::with_capacity(s);
    for m in 0..s {
        let d = p.diag(&p.phi_c[m]);
        dphi_dt.push(b2 * state.cov(&w, &d));
        dphi_dmu.push(beta * state.cov(&nn, &d));
        let tt = b4 * state.cum3(&w, &w, &d) - 2.0 * b3 * state.cov(&w, &d);
        let tm = b3 * state.cum3(&nn, &w, &d) - b2 * state.cov(&nn, &d);
        let mm = b2 * state.cum3(&nn, &nn, &d);
        d2phi.push([[tt, tm], [tm, mm]]);
    }

    let k_ww = state.cov(&w, &w);
    let k_wn = state.cov(&w, &nn);
    let k_nn = state.cov(&nn, &nn);
    let jacobian = [[b3 * k_ww, b2 * k_wn], [b2 * k_wn, beta * k_nn]];
    let k_www = state.cum3(&w, &w, &w);
    let k_wwn = state.cum3(&w, &w, &nn);
    let k_wnn = state.cum3(&w, &nn, &nn);
    let k_nnn = state.cum3(&nn, &nn, &nn);
    let d_t = [
        [-3.0 * b4 * k_ww + b5 * k_www, -2.0 * b3 * k_wn + b4 * k_wwn],
        [-2.0 * b3 * k_wn + b4 * k_wwn, -b2 * k_nn + b3 * k_wnn],
    ];
    let d_mu = [
        [b4 * k_wwn - 2.0 * b3 * k_wn, b3 * k_wnn - b2 * k_nn],
        [b3 * k_wnn - b2 * k_nn, b2 * k_nnn],
    ];

    // ∂χ_mn/∂T and ∂χ_mn/∂μ through the λ-weighted traces:
    //   ∂(β⟨A;B⟩_c)/∂T = −β²⟨A;B⟩_c − β³(⟨K⟩⟨A;B⟩_c − LW_K(A,B))
    //   ∂(β⟨A;B⟩_c)/∂μ = −β²⟨N⟩⟨A;B⟩_c + β² LW_N(A,B)
    // evaluated on centered operators, plus the explicit drift of the centering.
    let k_mean = state.mean(&w);
    let n_mean = state.mean(&nn);
    let mut dchi = vec![vec![[0.0; 2]; s]; s];
    for m in 0..s {
        for n in m..s {
            let (a, b) = (&p.phi_c[m], &p.phi_c[n]);
            let inner = state.bkm_inner_eigenbasis(a, b);
            let lw_k = state.lambda_weighted_eigenbasis(a, b, &w);
            let lw_n = state.lambda_weighted_eigenbasis(a, b, &nn);
            // centering drift: ⟨A − a; B − b⟩ with a = Φ_m(T, μ) contributes
            // −∂a ⟨1; B−b⟩ = 0, so only the kernel derivative survives
            let mut dt = -b2 * inner - b3 * (k_mean * inner - lw_k);
            let mut dm = -b2 * n_mean * inner + b2 * lw_n;
            if let Some(op) = spec.phi2(m, n)? {
                let d = p.diag(&state.to_eigenbasis(op));
                dt += b2 * state.cov(&w, &d);
                dm += beta * state.cov(&nn, &d);
            }
            dchi[m][n] = [dt, dm];
            dchi[n][m] = [dt, dm];
        }
    }

    Ok(ThermoJacobian {
        beta,
        mu: state.mu,
        phi: p.phi_mean.clone(),
        dphi_dt,
        dphi_dmu,
        d2phi,
        jacobian,
        djacobian: [d_t, d_mu],
        dchi,
    })
}

/// Susceptibility at fixed `(S, N)` from the fixed-`(T, μ)` one and the
/// Jacobian bundle. A rank-deficient Jacobian (e.g. when `S` is a function
/// of `N`) is handled through its pseudo-inverse.
pub fn chi_s_n(spec: &SystemSpec, beta: f64, mu: f64, order: usize) -> Result<Susceptibility> {
    let state = gibbs(spec, beta, mu)?;
    chi_s_n_at(&state, spec, order)
}

/// [`chi_s_n`] for an already prepared state.
pub fn chi_s_n_at(state: &ThermalState, spec: &SystemSpec, order: usize) -> Result<Susceptibility> {
    let tj = thermo_jacobian_at(state, spec)?;
    let (inv, _) = tj.inverse()?;
    let s = spec.num_sources();
    match chi_t_mu_at(state, spec, order)? {
        Susceptibility::Order2(mut chi) => {
            for m in 0..s {
                for n in 0..s {
                    chi[m][n] -= quad(tj.a(m), &inv, tj.a(n));
                }
            }
            Ok(Susceptibility::Order2(chi))
        }
        Susceptibility::Order3(mut chi) => {
            let u: Vec<[f64; 2]> = (0..s).map(|m| mat_vec(&inv, tj.a(m))).collect();
            let b = |m: usize, n: usize| tj.dchi[m][n];
            let h = |m: usize| &tj.d2phi[m];
            for m in 0..s {
                for n in 0..s {
                    for k in 0..s {
                        let mut v = chi[m][n][k];
                        v -= dot(b(m, n), u[k]) + dot(b(m, k), u[n]) + dot(b(n, k), u[m]);
                        v += quad(u[k], h(m), u[n]) + quad(u[m], h(n), u[k]) + quad(u[m], h(k), u[n]);
                        let t_contract = |t: &[[f64; 2]; 2]| quad(u[m], t, u[n]);
                        v -= u[k][0] * t_contract(&tj.djacobian[0]) + u[k][1] * t_contract(&tj.djacobian[1]);
                        chi[m][n][k] = v;
                    }
                }
            }
            Ok(Susceptibility::Order3(chi))
        }
    }
}

/// The Suzuki term `L = χ^{Tμ} − χ^{SN}` by both routes.
pub fn suzuki_limit(spec: &SystemSpec, beta: f64, mu: f64) -> Result<SuzukiLimit> {
    let state = gibbs(spec, beta, mu)?;
    suzuki_limit_at(&state, spec)
}

/// Absolute gap under which `H − μN` levels count as degenerate in the time average.
pub const TIME_AVERAGE_DEGENERACY: f64 = 1e-10;

/// [`suzuki_limit`] for an already prepared state.
pub fn suzuki_limit_at(state: &ThermalState, spec: &SystemSpec) -> Result<SuzukiLimit> {
    let tj = thermo_jacobian_at(state, spec)?;
    let (inv, _) = tj.inverse()?;
    let p = Prepared::new(state, spec)?;
    let s = spec.num_sources();
    let mut closed_form = vec![vec![0.0; s]; s];
    let mut cesaro = vec![vec![0.0; s]; s];
    for m in 0..s {
        for n in 0..s {
            closed_form[m][n] = quad(tj.a(m), &inv, tj.a(n));
            cesaro[m][n] = time_averaged_bkm(state, &p.phi_c[m], &p.phi_c[n]);
        }
    }
    Ok(SuzukiLimit { closed_form, cesaro })
}

/// Time average of `β⟨A^H(t);B⟩` for eigenbasis matrices: only pairs with
/// equal `H − μN` eigenvalues survive, and there the BKM kernel is `p_j`.
pub(crate) fn time_averaged_bkm(state: &ThermalState, at: &Matrix, bt: &Matrix) -> f64 {
    let w = state.omegas();
    let n = state.dim();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if (w[j] - w[k]).abs() < TIME_AVERAGE_DEGENERACY {
                acc += state.weights[j] * (at[(j, k)] * bt[(k, j)]).re;
            }
        }
    }
    state.beta * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::model::{build_qubit, build_transverse_ising};
    use crate::thermal::thermo_point;

    #[test]
    fn pseudo_inverse_full_rank() {
        let m = [[2.0, 0.5], [0.5, 1.0]];
        let (inv, rank) = pseudo_inverse_sym(&m).unwrap();
        assert_eq!(rank, 2);
        let det = 2.0 - 0.25;
        assert!((inv[0][0] - 1.0 / det).abs() < 1e-14);
        assert!((inv[0][1] + 0.5 / det).abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_rank_one() {
        let m = [[4.0, 2.0], [2.0, 1.0]];
        let (inv, rank) = pseudo_inverse_sym(&m).unwrap();
        assert_eq!(rank, 1);
        // M M⁺ M = M
        let mm = |a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]| {
            let mut o = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            o
        };
        let back = mm(&mm(&m, &inv), &m);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - m[i][j]).abs() < 1e-12);
            }
        }
        let (zero, r0) = pseudo_inverse_sym(&[[0.0; 2]; 2]).unwrap();
        assert_eq!(r0, 0);
        assert_eq!(zero, [[0.0; 2]; 2]);
    }

    #[test]
    fn chi_symmetric_and_high_temperature_limit() {
        let spec = build_transverse_ising(2, 1.0, 0.5).unwrap();
        let chi = chi_t_mu(&spec, 1e-6, 0.0, 2).unwrap();
        let m = chi.as_matrix().unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(m[a][b], m[b][a]);
                assert!(m[a][b].abs() < 1e-5);
            }
        }
    }

    #[test]
    fn number_free_system_has_no_mu_derivative() {
        let spec = build_transverse_ising(2, 1.0, 0.5).unwrap();
        let tj = thermo_jacobian(&spec, 1.0, 0.0).unwrap();
        assert!(tj.dphi_dmu.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn qubit_number_response_closed_form() {
        let spec = build_qubit(1.0).unwrap();
        let (beta, mu) = (0.9, 0.2);
        let tj = thermo_jacobian(&spec, beta, mu).unwrap();
        // N ∈ {0, 1}, occupation f = 1/(e^{β(ω₀−μ)} + 1); ∂f/∂μ = β f (1 − f)
        let f = 1.0 / ((beta * (1.0 - mu)).exp() + 1.0);
        assert!((tj.jacobian[1][1] - beta * f * (1.0 - f)).abs() < 1e-14);
    }

    #[test]
    fn qubit_sigma_z_isolated_response_vanishes() {
        let spec = build_qubit(1.0).unwrap().with_source("z", pauli::sigma_z(), 0.0, 1).unwrap();
        let chi_tm = chi_t_mu(&spec, 1.0, 0.1, 2).unwrap();
        let chi_sn = chi_s_n(&spec, 1.0, 0.1, 2).unwrap();
        let l = suzuki_limit(&spec, 1.0, 0.1).unwrap();
        let (tm, sn) = (chi_tm.as_matrix().unwrap(), chi_sn.as_matrix().unwrap());
        assert!(sn[1][1].abs() < 1e-12);
        assert!((tm[1][1] - l.closed_form[1][1]).abs() < 1e-12);
        assert!(l.max_route_gap() < 1e-12);
    }

    #[test]
    fn off_diagonal_source_has_no_correction() {
        let spec = build_qubit(1.0).unwrap();
        let tm = chi_t_mu(&spec, 1.0, 0.0, 2).unwrap();
        let sn = chi_s_n(&spec, 1.0, 0.0, 2).unwrap();
        assert_eq!(tm, sn);
        let l = suzuki_limit(&spec, 1.0, 0.0).unwrap();
        assert_eq!(l.cesaro[0][0], 0.0);
    }

    #[test]
    fn suzuki_term_is_nonnegative() {
        let spec = build_transverse_ising(3, 1.0, 0.0).unwrap();
        let l = suzuki_limit(&spec, 0.7, 0.2).unwrap();
        for m in 0..6 {
            assert!(l.closed_form[m][m] >= -1e-14);
        }
        let _ = thermo_point(&gibbs(&spec, 0.7, 0.2).unwrap(), &spec).unwrap();
    }
}
