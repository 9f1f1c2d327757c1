//! Exact unitary evolution under a time-dependent source, Volterra-series
//! prediction from equilibrium kernels, and the mean dissipated work.

mod protocol;
mod volterra;

pub use protocol::{DriveProtocol, Waveform};
pub use volterra::{volterra_predict, VolterraKernels};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::eig_hermitian;
use crate::model::SystemSpec;
use crate::thermal::ThermalState;
use crate::{Matrix, C64};

/// Default number of propagation steps across the drive window.
pub const DEFAULT_STEPS: usize = 2000;
/// Largest accepted mismatch between the protocol's initial sources and the state's.
pub const PLATEAU_TOL: f64 = 1e-9;

/// Expectation values along an exactly propagated path.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `phi[m][k] = Φ_m(t_k) = Tr{ρ(t_k) φ_m(j(t_k))}`.
    pub phi: Vec<Vec<f64>>,
    /// `U(t_f, t_i)`.
    pub u_final: Matrix,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `Φ(t_k)` for all sources.
    pub fn sample(&self, k: usize) -> Vec<f64> {
        self.phi.iter().map(|s| s[k]).collect()
    }

    /// `‖U†U − 1‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.u_final.dim();
        (&self.u_final.adjoint() * &self.u_final).max_diff(&Matrix::identity(n))
    }
}

pub(crate) fn check_inputs(spec: &SystemSpec, state: &ThermalState, protocol: &DriveProtocol) -> Result<()> {
    if protocol.num_sources() != spec.num_sources() {
        return Err(Error::DimensionMismatch { expected: spec.num_sources(), found: protocol.num_sources() });
    }
    let ji = protocol.j_initial();
    let reference = if state.j.is_empty() { spec.j_init() } else { &state.j };
    if let Some(m) = (0..ji.len()).find(|&m| (ji[m] - reference[m]).abs() > PLATEAU_TOL * reference[m].abs().max(1.0)) {
        return Err(Error::InvalidParameter(format!(
            "protocol starts at j[{m}] = {} but the state was prepared at {}",
            ji[m], reference[m]
        )));
    }
    Ok(())
}

/// `e^{−iK dt}` for hermitian `K`.
fn step_unitary(k: &crate::Operator, dt: f64) -> Result<Matrix> {
    let eig = eig_hermitian(k)?;
    let phases: Vec<C64> = eig.values.iter().map(|&w| Complex::from_polar(1.0, -w * dt)).collect();
    Ok(eig.assemble(&phases))
}

/// `Σ_a p_a (W† O W)_aa` with `W = U V`.
fn weighted_diagonal(w: &Matrix, o: &Matrix, p: &[f64]) -> f64 {
    let x = o * w;
    let n = w.dim();
    let mut acc = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        let mut d = C64::new(0.0, 0.0);
        for r in 0..n {
            d += w[(r, a)].conj() * x[(r, a)];
        }
        acc += pa * d.re;
    }
    acc
}

/// Propagates the equilibrium state through `protocol` with `steps` midpoint
/// sub-steps, each an exact exponential of `H(j(t_mid)) − μN`.
pub fn propagate(spec: &SystemSpec, state: &ThermalState, protocol: &DriveProtocol, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    check_inputs(spec, state, protocol)?;
    let times = protocol.grid(steps);
    let s = spec.num_sources();
    let mut phi = vec![Vec::with_capacity(steps + 1); s];
    let v = &state.eig.vectors;
    let mut w = v.clone();
    let record = |w: &Matrix, t: f64, phi: &mut Vec<Vec<f64>>| -> Result<()> {
        let j = protocol.sources_at(t);
        for (m, series) in phi.iter_mut().enumerate() {
            let o = spec.observable_at(m, &j)?;
            series.push(weighted_diagonal(w, o.matrix(), &state.weights));
        }
        Ok(())
    };
    record(&w, times[0], &mut phi)?;
    let mut cached: Option<(Vec<f64>, f64, Matrix)> = None;
    for k in 0..steps {
        let dt = times[k + 1] - times[k];
        let jm = protocol.sources_at(0.5 * (times[k] + times[k + 1]));
        let reuse = matches!(&cached, Some((jc, dc, _)) if *jc == jm && *dc == dt);
        if !reuse {
            let kop = spec.grand_hamiltonian_at(&jm, state.mu)?;
            cached = Some((jm, dt, step_unitary(&kop, dt)?));
        }
        let u = &cached.as_ref().expect("step unitary cached").2;
        w = u * &w;
        record(&w, times[k + 1], &mut phi)?;
    }
    let u_final = &w * &v.adjoint();
    Ok(Trajectory { times, phi, u_final })
}

/// [`propagate`] at `steps` and `2·steps`; fails with `StepTooCoarse` if any
/// shared sample moves by more than `tol`. Returns the finer trajectory.
pub fn propagate_checked(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    steps: usize,
    tol: f64,
) -> Result<Trajectory> {
    let coarse = propagate(spec, state, protocol, steps)?;
    let fine = propagate(spec, state, protocol, 2 * steps)?;
    let mut deviation: f64 = 0.0;
    for (c, f) in coarse.phi.iter().zip(&fine.phi) {
        for k in 0..=steps {
            deviation = deviation.max((c[k] - f[2 * k]).abs());
        }
    }
    if deviation > tol {
        return Err(Error::StepTooCoarse { deviation, tolerance: tol });
    }
    Ok(fine)
}

/// `⟨⟨W⟩⟩ = −Σ_m ∫ Φ_m dj^m` as a Stieltjes sum on the trajectory grid:
/// `Φ(t_k)` multiplies the change of the midpoint sources across `t_k`, with the
/// plateau values `j_i` and `j_f` beyond the ends. For sources that enter `H`
/// linearly this equals the energy difference of the propagated state exactly.
pub fn mean_work(trajectory: &Trajectory, protocol: &DriveProtocol) -> f64 {
    let t = &trajectory.times;
    let n = t.len();
    let mut mids: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    mids.push(protocol.j_initial());
    for k in 0..n - 1 {
        mids.push(protocol.sources_at(0.5 * (t[k] + t[k + 1])));
    }
    mids.push(protocol.j_final());
    let mut w = 0.0;
    for k in 0..n {
        for (m, series) in trajectory.phi.iter().enumerate() {
            w -= series[k] * (mids[k + 1][m] - mids[k][m]);
        }
    }
    w
}

/// `Tr{ρ_f (H(j_f) − μN)} − Tr{ρ_i (H(j_i) − μN)}` with `ρ_f = U ρ_i U†`.
pub fn energy_change(
    spec: &SystemSpec,
    state: &ThermalState,
    protocol: &DriveProtocol,
    trajectory: &Trajectory,
) -> Result<f64> {
    let k_i = spec.grand_hamiltonian_at(&protocol.j_initial(), state.mu)?;
    let k_f = spec.grand_hamiltonian_at(&protocol.j_final(), state.mu)?;
    let w = &trajectory.u_final * &state.eig.vectors;
    let e_f = weighted_diagonal(&w, k_f.matrix(), &state.weights);
    Ok(e_f - state.expectation(k_i.matrix()))
}

/// `ρ(t_f) = U ρ_i U†`.
pub fn final_density(state: &ThermalState, trajectory: &Trajectory) -> Matrix {
    state.density_matrix().conjugate_by(&trajectory.u_final.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::model::{build_qubit, build_transverse_ising};
    use crate::thermal::gibbs;

    #[test]
    fn equilibrium_is_stationary() {
        let spec = build_transverse_ising(2, 1.0, 0.4).unwrap();
        let st = gibbs(&spec, 1.0, 0.0).unwrap();
        let p = DriveProtocol::constant(0.0, 5.0, spec.j_init()).unwrap();
        let tr = propagate(&spec, &st, &p, 50).unwrap();
        for (m, series) in tr.phi.iter().enumerate() {
            let phi0 = st.expectation(spec.phi(m).unwrap());
            assert!(series.iter().all(|v| (v - phi0).abs() < 1e-10));
        }
        assert_eq!(mean_work(&tr, &p), 0.0);
    }

    #[test]
    fn unitarity_over_many_steps() {
        let spec = build_transverse_ising(2, 1.0, 0.4).unwrap();
        let st = gibbs(&spec, 1.0, 0.0).unwrap();
        let p = DriveProtocol::new(
            0.0,
            10.0,
            vec![
                Waveform::Sinusoid { base: 0.0, amp: 0.3, omega: 1.1, phase: 0.0 },
                Waveform::Constant(0.0),
                Waveform::Ramp { from: 0.0, to: 0.5 },
                Waveform::Constant(0.0),
            ],
        )
        .unwrap();
        let tr = propagate(&spec, &st, &p, 10_000).unwrap();
        assert!(tr.unitarity_error() < 1e-10, "{}", tr.unitarity_error());
    }

    #[test]
    fn circular_rabi_drive_matches_rotating_frame() {
        // H = (ω₀/2)σᶻ − A(cos ω₀t σˣ + sin ω₀t σʸ) is solved exactly by
        // U(t) = e^{−iω₀tσᶻ/2} e^{iAtσˣ}.
        let (w0, a, tf) = (1.0, 0.1, 6.0);
        let spec = build_qubit(w0).unwrap().with_source("y", pauli::sigma_y(), 0.0, -1).unwrap();
        let st = gibbs(&spec, 0.5, 0.0).unwrap();
        let p = DriveProtocol::new(
            0.0,
            tf,
            vec![
                Waveform::Sinusoid { base: 0.0, amp: a, omega: w0, phase: std::f64::consts::FRAC_PI_2 },
                Waveform::Sinusoid { base: 0.0, amp: a, omega: w0, phase: 0.0 },
            ],
        )
        .unwrap();
        // the cosine starts at A, so prepare the state at j = (A, 0)
        let st = ThermalState::at_sources(&spec, &p.j_initial(), st.beta, 0.0).unwrap();
        let tr = propagate(&spec, &st, &p, 20_000).unwrap();
        let (x, z) = (pauli::sigma_x::<f64>(), pauli::sigma_z::<f64>());
        let rot = |theta: f64, op: &crate::Operator| {
            let c = C64::new(theta.cos(), 0.0);
            let s = C64::new(0.0, theta.sin());
            &Matrix::identity(2).scale(c) + &op.matrix().scale(s)
        };
        let exact = &rot(-w0 * tf / 2.0, &z) * &rot(a * tf, &x);
        assert!(tr.u_final.max_diff(&exact) < 1e-6, "{}", tr.u_final.max_diff(&exact));
    }

    #[test]
    fn halving_the_step_converges_quadratically() {
        let spec = build_qubit(1.0).unwrap();
        let st = gibbs(&spec, 1.0, 0.0).unwrap();
        let p = DriveProtocol::new(0.0, 4.0, vec![Waveform::Sinusoid { base: 0.0, amp: 0.8, omega: 2.3, phase: 0.0 }])
            .unwrap();
        let reference = propagate(&spec, &st, &p, 6400).unwrap();
        let err = |steps: usize| {
            let tr = propagate(&spec, &st, &p, steps).unwrap();
            (tr.phi[0][steps] - reference.phi[0][6400]).abs()
        };
        let ratio = err(100) / err(200);
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
        assert!(matches!(propagate_checked(&spec, &st, &p, 10, 1e-8), Err(Error::StepTooCoarse { .. })));
        assert!(propagate_checked(&spec, &st, &p, 2000, 1e-4).is_ok());
    }

    #[test]
    fn work_routes_agree() {
        let spec = build_transverse_ising(2, 1.0, 0.6).unwrap();
        let st = gibbs(&spec, 0.8, 0.0).unwrap();
        let p = DriveProtocol::new(
            0.0,
            3.0,
            vec![
                Waveform::Ramp { from: 0.0, to: 0.7 },
                Waveform::Step { at: 1.3, before: 0.0, after: -0.4 },
                Waveform::Gaussian { base: 0.0, amp: 0.5, center: 1.5, width: 0.4 },
                Waveform::Constant(0.0),
            ],
        )
        .unwrap();
        let st = ThermalState::at_sources(&spec, &p.j_initial(), st.beta, 0.0).unwrap();
        let tr = propagate(&spec, &st, &p, 300).unwrap();
        let w = mean_work(&tr, &p);
        let e = energy_change(&spec, &st, &p, &tr).unwrap();
        assert!((w - e).abs() < 1e-10, "{w} vs {e}");
    }

    #[test]
    fn sudden_quench_work_closed_form() {
        // H = (ω₀/2)σᶻ − jσˣ prepared at j₀, quenched to j₁: W = −(j₁ − j₀)⟨σˣ⟩
        // with ⟨σˣ⟩ = tanh(βE) j₀/E and E = √(ω₀²/4 + j₀²).
        let (w0, j0, j1, beta) = (1.0, 0.3, -0.2, 1.4);
        let h0 = pauli::sigma_z::<f64>().scale(0.5 * w0).combine(1.0, &pauli::sigma_x(), -j0);
        let spec = SystemSpec::builder(h0).source("x", pauli::sigma_x(), j0).build().unwrap();
        let st = gibbs(&spec, beta, 0.0).unwrap();
        let p = DriveProtocol::new(0.0, 2.0, vec![Waveform::Step { at: 1.0, before: j0, after: j1 }]).unwrap();
        let tr = propagate(&spec, &st, &p, 200).unwrap();
        let e = (0.25 * w0 * w0 + j0 * j0).sqrt();
        let expect = -(j1 - j0) * (beta * e).tanh() * j0 / e;
        assert!((mean_work(&tr, &p) - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_protocol_that_does_not_start_at_the_state() {
        let spec = build_qubit(1.0).unwrap();
        let st = gibbs(&spec, 1.0, 0.0).unwrap();
        let p = DriveProtocol::constant(0.0, 1.0, &[0.5]).unwrap();
        assert!(matches!(propagate(&spec, &st, &p, 10), Err(Error::InvalidParameter(_))));
        assert!(propagate(&spec, &st, &DriveProtocol::constant(0.0, 1.0, &[0.0]).unwrap(), 0).is_err());
    }

    #[test]
    fn evolved_spectrum_is_conserved() {
        let spec = build_transverse_ising(2, 1.0, 0.5).unwrap();
        let st = gibbs(&spec, 1.2, 0.0).unwrap();
        let p = DriveProtocol::new(
            0.0,
            2.0,
            vec![
                Waveform::Ramp { from: 0.0, to: 1.0 },
                Waveform::Constant(0.0),
                Waveform::Constant(0.0),
                Waveform::Sinusoid { base: 0.0, amp: 0.4, omega: 3.0, phase: 0.0 },
            ],
        )
        .unwrap();
        let tr = propagate(&spec, &st, &p, 100).unwrap();
        let rho = crate::Operator::symmetrized(&final_density(&st, &tr));
        let mut ev = eig_hermitian(&rho).unwrap().values;
        let mut p0 = st.weights.clone();
        ev.sort_by(f64::total_cmp);
        p0.sort_by(f64::total_cmp);
        assert!(ev.iter().zip(&p0).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}
