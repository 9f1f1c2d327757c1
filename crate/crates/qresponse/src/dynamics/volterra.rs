//! First- and second-order Volterra prediction of `Φ(t)` from equilibrium kernels.
//!
//! Every kernel is a sum of exponentials, so each convolution reduces to one
//! cumulative trapezoid per comb line.

use std::f64::consts::PI;

use num_complex::Complex;

use super::DriveProtocol;
use crate::correlators::{linear_response, quadratic_response, QuadraticKernel, ResponseKernel, SpectralComb};
use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::thermal::ThermalState;
use crate::C64;

/// Relative tolerance on the spacing of a Volterra grid.
const GRID_TOL: f64 = 1e-9;

/// All kernels needed to predict every `Φ_m` up to a given order.
#[derive(Clone, Debug)]
pub struct VolterraKernels {
    /// `Φ_m^i`.
    pub phi_init: Vec<f64>,
    /// `linear[m][n]`.
    pub linear: Vec<Vec<ResponseKernel>>,
    /// `quadratic[m][n][k]`, present when built with order 2.
    pub quadratic: Option<Vec<Vec<Vec<QuadraticKernel>>>>,
}

impl VolterraKernels {
    pub fn build(state: &ThermalState, spec: &SystemSpec, order: usize) -> Result<Self> {
        check_order(order)?;
        let s = spec.num_sources();
        let phi_init = (0..s).map(|m| Ok(state.expectation(spec.phi(m)?))).collect::<Result<Vec<_>>>()?;
        let linear = (0..s)
            .map(|m| (0..s).map(|n| linear_response(state, spec, m, n)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let quadratic = if order == 2 {
            let mut q = Vec::with_capacity(s);
            for m in 0..s {
                let mut qm = Vec::with_capacity(s);
                for n in 0..s {
                    qm.push((0..s).map(|k| quadratic_response(state, spec, m, n, k)).collect::<Result<Vec<_>>>()?);
                }
                q.push(qm);
            }
            Some(q)
        } else {
            None
        };
        Ok(Self { phi_init, linear, quadratic })
    }

    pub fn num_sources(&self) -> usize {
        self.phi_init.len()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Volterra order must be 1 or 2, got {order}")))
    }
}

/// `∫_0^{τ_k} e^{iωτ} f(τ) dτ` for every grid point, trapezoidal.
fn cumulative(omega: f64, f: &[C64], tau: &[f64], h: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = C64::new(0.0, 0.0);
    let mut prev = f[0];
    out.push(acc);
    for k in 1..f.len() {
        let cur = Complex::from_polar(1.0, omega * tau[k]) * f[k];
        acc += 0.5 * h * (prev + cur);
        prev = cur;
        out.push(acc);
    }
    out
}

/// `∫_{t_i}^t K(t − t′) g(t′) dt′` where `K(s) = iθ(s)·comb(s)`.
fn delayed_convolution(comb: &SpectralComb, g: &[C64], tau: &[f64], h: f64, out: &mut [f64]) {
    for line in &comb.lines {
        if line.weight.norm() == 0.0 {
            continue;
        }
        let c = C64::i() * line.weight / (2.0 * PI);
        let acc = cumulative(line.omega, g, tau, h);
        for k in 0..out.len() {
            out[k] += (c * Complex::from_polar(1.0, -line.omega * tau[k]) * acc[k]).re;
        }
    }
}

/// Predicted `Φ_m(t_k)` on a uniform grid starting at `t_i`, truncated at `order`.
pub fn volterra_predict(
    kernels: &VolterraKernels,
    protocol: &DriveProtocol,
    times: &[f64],
    order: usize,
) -> Result<Vec<Vec<f64>>> {
    check_order(order)?;
    let s = kernels.num_sources();
    if protocol.num_sources() != s {
        return Err(Error::DimensionMismatch { expected: s, found: protocol.num_sources() });
    }
    if times.len() < 2 {
        return Err(Error::GridMismatch("need at least two grid points".into()));
    }
    if (times[0] - protocol.t_i).abs() > GRID_TOL * protocol.duration() {
        return Err(Error::GridMismatch(format!("grid starts at {} but the drive at {}", times[0], protocol.t_i)));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > GRID_TOL * h.abs().max(1e-300)) || !(h > 0.0) {
        return Err(Error::GridMismatch("grid must be uniform and ascending".into()));
    }
    let quadratic = match (order, &kernels.quadratic) {
        (2, None) => return Err(Error::InvalidParameter("second-order prediction needs quadratic kernels".into())),
        (2, Some(q)) => Some(q),
        _ => None,
    };
    let tau: Vec<f64> = times.iter().map(|t| t - times[0]).collect();
    let j0 = protocol.j_initial();
    let dj: Vec<Vec<f64>> = {
        let samples: Vec<Vec<f64>> = times.iter().map(|&t| protocol.sources_at(t)).collect();
        (0..s).map(|n| samples.iter().map(|j| j[n] - j0[n]).collect()).collect()
    };
    let djc: Vec<Vec<C64>> = dj.iter().map(|v| v.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
    let active: Vec<bool> = dj.iter().map(|v| v.iter().any(|&x| x != 0.0)).collect();
    let npts = times.len();
    let mut out = Vec::with_capacity(s);
    for m in 0..s {
        let mut phi = vec![kernels.phi_init[m]; npts];
        for n in (0..s).filter(|&n| active[n]) {
            let kern = &kernels.linear[m][n];
            for k in 0..npts {
                phi[k] += kern.instantaneous * dj[n][k];
            }
            delayed_convolution(&kern.spectral, &djc[n], &tau, h, &mut phi);
        }
        if let Some(q) = quadratic {
            for n in (0..s).filter(|&n| active[n]) {
                for k in (0..s).filter(|&k| active[k]) {
                    let kern = &q[m][n][k];
                    let mut mixed = vec![0.0; npts];
                    delayed_convolution(&kern.mixed, &djc[k], &tau, h, &mut mixed);
                    for t in 0..npts {
                        phi[t] += 0.5 * kern.instantaneous * dj[n][t] * dj[k][t] + dj[n][t] * mixed[t];
                    }
                    // −∫_{t_i}^t dt″ ∫_{t_i}^{t″} dt′ Re Δ^ρ_mnk(t − t′, t′ − t″) δj_n(t′) δj_k(t″);
                    // the other time ordering is covered by the (k, n) iteration.
                    for line in &kern.spectral.lines {
                        if line.weight.norm() == 0.0 {
                            continue;
                        }
                        let (w1, w2) = line.omega;
                        let inner = cumulative(w1 - w2, &djc[n], &tau, h);
                        let g: Vec<C64> = inner.iter().zip(&dj[k]).map(|(a, &b)| a * b).collect();
                        let outer = cumulative(w2, &g, &tau, h);
                        let c = line.weight / (4.0 * PI * PI);
                        for t in 0..npts {
                            phi[t] -= (c * Complex::from_polar(1.0, -w1 * tau[t]) * outer[t]).re;
                        }
                    }
                }
            }
        }
        out.push(phi);
    }
    Ok(out)
}
