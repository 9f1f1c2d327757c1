//! Two-point-measurement work statistics: the work distribution, its
//! characteristic function, the measurement partition function `Z_M`, and
//! the Jarzynski and Crooks identities.
//!
//! Time reversal is complex conjugation in the computational basis, valid for
//! systems flagged `basis_real`.

use crate::dynamics::{check_inputs, propagate, DriveProtocol, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::divdiff::exp_dd1;
use crate::linalg::eig_hermitian;
use crate::model::SystemSpec;
use crate::thermal::ThermalState;
use crate::{Eigen, Matrix};

/// Work values closer than this are one outcome; also the relative gap under
/// which energy levels form one eigenspace.
pub const OUTCOME_TOL: f64 = 1e-10;
/// Step used for `ζ → 0` limits (followed by one Richardson step).
pub const ZETA_STEP: f64 = 1e-4;
/// Outcomes with smaller probability are rounding noise between orthogonal eigenspaces and are dropped.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reversed,
}

/// `p(W)` as a list of `(W, p)` sorted by `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkDistribution {
    pub outcomes: Vec<(f64, f64)>,
    pub direction: Direction,
}

impl WorkDistribution {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|(w, p)| w * p).sum()
    }

    /// `p(W)` of the outcome within [`OUTCOME_TOL`] of `w`, zero if none.
    pub fn probability_at(&self, w: f64, tol: f64) -> f64 {
        self.outcomes.iter().filter(|o| (o.0 - w).abs() <= tol).map(|o| o.1).sum()
    }
}

/// Eigenvalue clusters `[start, end)` of an ascending spectrum.
fn clusters(values: &[f64]) -> Vec<(usize, usize)> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= OUTCOME_TOL * scale {
            end += 1;
        }
        out.push((start, end));
        start = end;
    }
    out
}

fn final_eigen(spec: &SystemSpec, state: &ThermalState, protocol: &DriveProtocol) -> Result<Eigen> {
    eig_hermitian(&spec.grand_hamiltonian_at(&protocol.j_final(), state.mu)?)
}

/// `|⟨b_f|U|a_i⟩|²` indexed `[b][a]`.
fn transition_probabilities(state: &ThermalState, fin: &Eigen, u: &Matrix) -> Vec<Vec<f64>> {
    let m = &(&fin.vectors.adjoint() * u) * &state.eig.vectors;
    let n = m.dim();
    (0..n).map(|b| (0..n).map(|a| m[(b, a)].norm_sqr()).collect()).collect()
}

fn merge_outcomes(mut raw: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, usize, f64)> = Vec::new();
    for (w, p) in raw {
        match out.last_mut() {
            Some(last) if w - last.3 < OUTCOME_TOL => {
                last.0 += w;
                last.1 += p;
                last.2 += 1;
                last.3 = w;
            }
            _ => out.push((w, p, 1, w)),
        }
    }
    out.into_iter().map(|(sum, p, count, _)| (sum / count as f64, p)).collect()
}

/// Outcomes `W = ε^f_b − ε^i_a` with `p = p_a Tr{P_b U P_a U†}` over eigenspaces
/// of `H(j_i) − μN` and `H(j_f) − μN`.
pub fn work_distribution(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    u_final: &Matrix,
) -> Result<WorkDistribution> {
    work_distribution_directed(spec, state, protocol, u_final, Direction::Forward)
}

fn work_distribution_directed(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    u_final: &Matrix,
    direction: Direction,
) -> Result<WorkDistribution> {
    check_inputs(spec, state, protocol)?;
    if u_final.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: u_final.dim() });
    }
    let fin = final_eigen(spec, state, protocol)?;
    let probs = transition_probabilities(state, &fin, u_final);
    let ci = clusters(state.omegas());
    let cf = clusters(&fin.values);
    let mut raw = Vec::with_capacity(ci.len() * cf.len());
    for &(a0, a1) in &ci {
        let ea = state.omegas()[a0..a1].iter().sum::<f64>() / (a1 - a0) as f64;
        for &(b0, b1) in &cf {
            let eb = fin.values[b0..b1].iter().sum::<f64>() / (b1 - b0) as f64;
            let mut p = 0.0;
            for a in a0..a1 {
                for row in &probs[b0..b1] {
                    p += state.weights[a] * row[a];
                }
            }
            if p > PROBABILITY_FLOOR {
                raw.push((eb - ea, p));
            }
        }
    }
    Ok(WorkDistribution { outcomes: merge_outcomes(raw), direction })
}

/// `Z_W(ξ) = Σ p e^{−ξW}`.
pub fn characteristic_zw(dist: &WorkDistribution, xi: f64) -> f64 {
    if xi == 0.0 {
        return dist.total_probability();
    }
    dist.outcomes.iter().map(|(w, p)| p * (-xi * w).exp()).sum()
}

/// `Z_M = Tr{e^{−β(H_i − μN)} U† e^{−ζ(H_f − μN)} U}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementPartition {
    pub beta: f64,
    pub zeta: f64,
    pub mu: f64,
    pub value: f64,
    pub log_value: f64,
}

/// `Z_M(β, ζ)` with `β` taken from the state.
pub fn measurement_partition(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    zeta: f64,
    u_final: &Matrix,
) -> Result<MeasurementPartition> {
    measurement_partition_at(spec, state, protocol, state.beta, zeta, u_final)
}

/// `Z_M(β, ζ)` for arbitrary `β, ζ ≥ 0`; `state` only supplies `j_i`, `μ` and the
/// initial eigenbasis.
pub fn measurement_partition_at(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    beta: f64,
    zeta: f64,
    u_final: &Matrix,
) -> Result<MeasurementPartition> {
    if !(beta >= 0.0 && zeta >= 0.0 && beta.is_finite() && zeta.is_finite()) {
        return Err(Error::InvalidParameter(format!("need finite β, ζ ≥ 0, got ({beta}, {zeta})")));
    }
    check_inputs(spec, state, protocol)?;
    let fin = final_eigen(spec, state, protocol)?;
    let probs = transition_probabilities(state, &fin, u_final);
    let ei = state.omegas();
    let mut terms = Vec::with_capacity(ei.len() * ei.len());
    for (b, row) in probs.iter().enumerate() {
        for (a, &q) in row.iter().enumerate() {
            if q > 0.0 {
                terms.push(-beta * ei[a] - zeta * fin.values[b] + q.ln());
            }
        }
    }
    let shift = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_value = shift + terms.iter().map(|x| (x - shift).exp()).sum::<f64>().ln();
    Ok(MeasurementPartition { beta, zeta, mu: state.mu, value: log_value.exp(), log_value })
}

fn richardson(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    Ok(2.0 * f(0.5 * ZETA_STEP)? - f(ZETA_STEP)?)
}

/// `−∂ ln Z_M/∂ζ` at `ζ → 0`: the final expectation of `H(j_f) − μN`.
pub fn final_energy_from_zm(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    u_final: &Matrix,
) -> Result<f64> {
    let ln_zm = |z: f64| measurement_partition(spec, state, protocol, z, u_final).map(|p| p.log_value);
    let l0 = ln_zm(0.0)?;
    richardson(|h| Ok(-(ln_zm(h)? - l0) / h))
}

/// `(1/ζ) ∂ ln Z_M/∂j_f^m` at `ζ → 0`: the final expectation `Φ_m(t_f)`.
/// The source derivative is taken analytically through the divided
/// difference of `exp` in the final eigenbasis.
pub fn final_observable_from_zm(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    u_final: &Matrix,
    m: usize,
) -> Result<f64> {
    check_inputs(spec, state, protocol)?;
    let jf = protocol.j_final();
    let fin = final_eigen(spec, state, protocol)?;
    let obs = fin.to_eigenbasis(spec.observable_at(m, &jf)?.matrix());
    // S = V_f† U ρ_i U† V_f
    let w = &(&fin.vectors.adjoint() * u_final) * &state.eig.vectors;
    let n = w.dim();
    let s = Matrix::from_fn(n, |b, c| {
        (0..n).fold(crate::C64::new(0.0, 0.0), |acc, a| acc + w[(b, a)] * state.weights[a] * w[(c, a)].conj())
    });
    let e = &fin.values;
    let g = |zeta: f64| -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for b in 0..n {
            den += s[(b, b)].re * (-zeta * e[b]).exp();
            for c in 0..n {
                num += (s[(c, b)] * obs[(b, c)]).re * exp_dd1(-zeta * e[b], -zeta * e[c]);
            }
        }
        Ok(num / den)
    };
    richardson(g)
}

/// `ΔΩ = Ω(j_f) − Ω(j_i)` at the state's `β, μ`.
pub fn free_energy_change(spec: &SystemSpec, state: &ThermalState, protocol: &DriveProtocol) -> Result<f64> {
    let fin = ThermalState::at_sources(spec, &protocol.j_final(), state.beta, state.mu)?;
    Ok(-(fin.log_z - state.log_z) / state.beta)
}

/// `|⟨e^{−βW}⟩ − Z(β, μ, j_f)/Z(β, μ, j_i)|`.
pub fn jarzynski_check(
    dist: &WorkDistribution,
    state: &ThermalState,
    spec: &SystemSpec,
    protocol: &DriveProtocol,
) -> Result<f64> {
    let fin = ThermalState::at_sources(spec, &protocol.j_final(), state.beta, state.mu)?;
    let ratio = (fin.log_z - state.log_z).exp();
    Ok((characteristic_zw(dist, state.beta) - ratio).abs())
}

/// Forward and reversed work statistics from exact propagation.
#[derive(Clone, Debug)]
pub struct CrooksReport {
    pub forward: WorkDistribution,
    pub reversed: WorkDistribution,
    pub delta_omega: f64,
    /// Largest `|p_F(W)/p_R(−W) − e^{β(W − ΔΩ)}| / e^{β(W − ΔΩ)}` over outcomes with `p_F > 1e-12`.
    pub max_deviation: f64,
    pub reversed_trajectory: Trajectory,
}

/// Initial state of the reversed process: equilibrium at `ε j_f`.
pub fn reversed_state(spec: &SystemSpec, state: &ThermalState, reversed: &DriveProtocol) -> Result<ThermalState> {
    ThermalState::at_sources(spec, &reversed.j_initial(), state.beta, state.mu)
}

/// Checks `p_F(W)/p_R(−W) = e^{β(W − ΔΩ)}` with both processes propagated with `steps` steps.
pub fn crooks_check(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    u_forward: &Matrix,
    steps: usize,
) -> Result<CrooksReport> {
    let parity = spec.check_time_reversal()?;
    let ji = protocol.j_initial();
    for (m, &v) in ji.iter().enumerate() {
        if (parity.sign(m) * v - v).abs() > 0.0 {
            return Err(Error::NotTimeReversalSymmetric(format!("ε j_i ≠ j_i for source {m}")));
        }
    }
    let rev = protocol.time_reversed(parity)?;
    let rstate = reversed_state(spec, state, &rev)?;
    let rtraj = propagate(spec, &rstate, &rev, steps)?;
    let forward = work_distribution(spec, state, protocol, u_forward)?;
    let reversed = work_distribution_directed(spec, &rstate, &rev, &rtraj.u_final, Direction::Reversed)?;
    let delta_omega = free_energy_change(spec, state, protocol)?;
    let scale = forward.outcomes.iter().fold(1.0f64, |m, o| m.max(o.0.abs()));
    let mut max_deviation: f64 = 0.0;
    for &(w, p) in forward.outcomes.iter().filter(|o| o.1 > 1e-12) {
        let expected = (state.beta * (w - delta_omega)).exp();
        let pr = reversed.probability_at(-w, OUTCOME_TOL * scale);
        let dev = if pr > 0.0 { ((p / pr) - expected).abs() / expected } else { f64::INFINITY };
        max_deviation = max_deviation.max(dev);
    }
    Ok(CrooksReport { forward, reversed, delta_omega, max_deviation, reversed_trajectory: rtraj })
}
