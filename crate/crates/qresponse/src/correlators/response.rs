//! Retarded response kernels, the second-order spectral function and the
//! linear relaxation function.

use std::f64::consts::PI;

use super::comb::{Line2, SpectralComb, ThreePointComb};
use super::{bkm_comb, spectral_two_point, spectral_two_point_ops};
use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::thermal::{centered, time_averaged_bkm, ThermalState};
use crate::{Matrix, C64};

/// Default regulator relative to the spectral span.
pub const REGULATOR_REL: f64 = 1e-6;

/// `θ(s)` with the midpoint value at the edge.
fn step(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// Linear response `Δ^R_mn(s) = δ(s)Δ^∞_mn + Δ^𝓡_mn(s)` with
/// `Δ^𝓡_mn(s) = iθ(s)Δ^ρ_mn(s)`.
#[derive(Clone, Debug)]
pub struct ResponseKernel {
    pub indices: (usize, usize),
    /// `Δ^∞_mn = ⟨φ_mn⟩`.
    pub instantaneous: f64,
    /// `Δ^ρ_mn` as a comb.
    pub spectral: SpectralComb,
    /// `ε` used for `ω + iε` evaluations.
    pub regulator: f64,
}

impl ResponseKernel {
    /// Comb of the delayed part, `i·Δ^ρ`.
    pub fn delayed_comb(&self) -> SpectralComb {
        self.spectral.map_weights(|_, w| C64::i() * w)
    }

    /// `Δ^𝓡_mn(s)`, zero for `s < 0` and half the limit at `s = 0`.
    pub fn delayed_at(&self, s: f64) -> f64 {
        let th = step(s);
        if th == 0.0 {
            return 0.0;
        }
        th * (C64::i() * self.spectral.eval(s)).re
    }

    /// `Δ^𝓡_mn(ω) = G_mn(ω + iε)`.
    pub fn delayed_frequency(&self, omega: f64) -> C64 {
        self.spectral.resolvent(C64::new(omega, self.regulator))
    }

    /// `Δ^∞_mn + Δ^𝓡_mn(ω)`.
    pub fn frequency(&self, omega: f64) -> C64 {
        self.delayed_frequency(omega) + self.instantaneous
    }
}

fn regulator_for(comb: &SpectralComb) -> f64 {
    let span = comb.span();
    REGULATOR_REL * if span > 0.0 { span } else { 1.0 }
}

/// Linear response kernel of `Φ_m` to `j^n`. A missing quadratic table counts as zero.
pub fn linear_response(state: &ThermalState, spec: &SystemSpec, m: usize, n: usize) -> Result<ResponseKernel> {
    let spectral = spectral_two_point(state, spec, m, n)?;
    let instantaneous = match spec.phi2(m, n) {
        Ok(Some(op)) => state.expectation(op),
        Ok(None) | Err(Error::MissingCouplingTable { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let regulator = regulator_for(&spectral);
    Ok(ResponseKernel { indices: (m, n), instantaneous, spectral, regulator })
}

/// `Δ^ρ_ABC(τ₁, τ₂) = Tr{A^H(t)[[ρ, B^H(t′)], C^H(t″)]}` with `τ₁ = t − t′`,
/// `τ₂ = t′ − t″`, as a two-frequency comb.
///
/// In the eigenbasis the four terms pair into lines
/// `(ω_b − ω_a, ω_c − ω_a)` with weight `(2π)² A_ab B_bc C_ca (p_b − p_c)` and
/// `(ω_b − ω_a, ω_b − ω_c)` with weight `(2π)² A_ab C_bc B_ca (p_a − p_c)`.
pub fn spectral_three_point_ops(state: &ThermalState, a: &Matrix, b: &Matrix, c: &Matrix) -> ThreePointComb {
    let (at, bt, ct) = (state.to_eigenbasis(a), state.to_eigenbasis(b), state.to_eigenbasis(c));
    let n = state.dim();
    let w = state.omegas();
    let p = &state.weights;
    let norm = 4.0 * PI * PI;
    let mut raw = Vec::with_capacity(2 * n * n * n);
    for ia in 0..n {
        for ib in 0..n {
            let (a_ab, zero_ab) = (at[(ia, ib)], at[(ia, ib)].norm_sqr() == 0.0);
            if zero_ab {
                continue;
            }
            for ic in 0..n {
                let w1 = a_ab * bt[(ib, ic)] * ct[(ic, ia)] * ((p[ib] - p[ic]) * norm);
                raw.push(Line2 { omega: (w[ib] - w[ia], w[ic] - w[ia]), weight: w1 });
                let w2 = a_ab * ct[(ib, ic)] * bt[(ic, ia)] * ((p[ia] - p[ic]) * norm);
                raw.push(Line2 { omega: (w[ib] - w[ia], w[ib] - w[ic]), weight: w2 });
            }
        }
    }
    ThreePointComb::from_lines(Vec::new(), raw)
}

/// Second-order spectral function `Δ^ρ_mnk(ω₁, ω₂)`.
pub fn spectral_three_point(
    state: &ThermalState,
    spec: &SystemSpec,
    m: usize,
    n: usize,
    k: usize,
) -> Result<ThreePointComb> {
    let mut c = spectral_three_point_ops(state, spec.phi(m)?, spec.phi(n)?, spec.phi(k)?);
    c.indices = vec![m, n, k];
    Ok(c)
}

/// Quadratic response split into instantaneous, mixed and fully delayed parts.
#[derive(Clone, Debug)]
pub struct QuadraticKernel {
    pub indices: (usize, usize, usize),
    /// `Δ^∞_mnk = ⟨φ_mnk⟩`.
    pub instantaneous: f64,
    /// `Δ^ρ` of `(φ_mn, φ_k)`; `Δ^{∞𝓡}_mnk(s) = iθ(s)·(this comb)(s)`.
    pub mixed: SpectralComb,
    /// `Δ^ρ` of `(φ_mk, φ_n)`, giving `Δ^{∞𝓡}_mkn`.
    pub mixed_swapped: SpectralComb,
    /// `Δ^ρ_mnk`.
    pub spectral: ThreePointComb,
    /// `Δ^ρ_mkn`.
    pub spectral_swapped: ThreePointComb,
}

impl QuadraticKernel {
    /// `Δ^{∞𝓡}_mnk(s)`.
    pub fn mixed_at(&self, s: f64) -> f64 {
        step(s) * (C64::i() * self.mixed.eval(s)).re
    }

    /// `Δ^{∞𝓡}_mkn(s)`.
    pub fn mixed_swapped_at(&self, s: f64) -> f64 {
        step(s) * (C64::i() * self.mixed_swapped.eval(s)).re
    }

    /// `Δ^𝓡_mnk(s₁, s₂)` with `s₁ = t − t′`, `s₂ = t − t″`. The commutator with
    /// `ρ` is taken with the earlier source first:
    /// `−θ(s₂)θ(s₁−s₂)Δ^ρ_mnk(s₁, s₂−s₁) − θ(s₁)θ(s₂−s₁)Δ^ρ_mkn(s₂, s₁−s₂)`.
    pub fn delayed_at(&self, s1: f64, s2: f64) -> f64 {
        let mut v = 0.0;
        let a = step(s2) * step(s1 - s2);
        if a != 0.0 {
            v -= a * self.spectral.eval(s1, s2 - s1).re;
        }
        let b = step(s1) * step(s2 - s1);
        if b != 0.0 {
            v -= b * self.spectral_swapped.eval(s2, s1 - s2).re;
        }
        v
    }
}

/// Quadratic response kernel of `Φ_m` to `j^n j^k`. Both coupling tables must exist.
pub fn quadratic_response(
    state: &ThermalState,
    spec: &SystemSpec,
    m: usize,
    n: usize,
    k: usize,
) -> Result<QuadraticKernel> {
    let instantaneous = spec.phi3(m, n, k)?.map_or(0.0, |op| state.expectation(op));
    let zero = crate::Operator::zeros(spec.dim());
    let phi_mn = spec.phi2(m, n)?.unwrap_or(&zero);
    let phi_mk = spec.phi2(m, k)?.unwrap_or(&zero);
    let mut mixed = spectral_two_point_ops(state, phi_mn, spec.phi(k)?);
    mixed.indices = vec![m, n, k];
    let mut mixed_swapped = spectral_two_point_ops(state, phi_mk, spec.phi(n)?);
    mixed_swapped.indices = vec![m, k, n];
    Ok(QuadraticKernel {
        indices: (m, n, k),
        instantaneous,
        mixed,
        mixed_swapped,
        spectral: spectral_three_point(state, spec, m, n, k)?,
        spectral_swapped: spectral_three_point(state, spec, m, k, n)?,
    })
}

/// Linear relaxation function sampled on a grid.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `Ψ(0₋) = χ^{Tμ} − L`.
    pub before: f64,
    /// `Ψ(0₊) = Ψ(0₋) − Δ^∞`.
    pub after: f64,
    /// The time-averaged `L_mn` that fixes the integration constant.
    pub long_time: f64,
}

/// `Ψ_mn(s) = θ(s)[β⟨φ_m^H(s);φ_n⟩_c − β⟨φ_m;φ_n⟩_c − ⟨φ_mn⟩] + β⟨φ_m;φ_n⟩_c + ⟨φ_mn⟩ − L_mn`
/// with `L_mn` the time average (equal-energy projection) and `θ(0) = 0`,
/// so `s ≤ 0` gives `Ψ(0₋)`.
pub fn relaxation_function(
    state: &ThermalState,
    spec: &SystemSpec,
    m: usize,
    n: usize,
    t_grid: &[f64],
) -> Result<Relaxation> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("relaxation grid must be strictly ascending".into()));
    }
    let at = centered(state, spec.phi(m)?);
    let bt = centered(state, spec.phi(n)?);
    let long_time = time_averaged_bkm(state, &at, &bt);
    let inst = linear_response(state, spec, m, n)?.instantaneous;
    let comb = bkm_comb(state, spec, m, n)?;
    let beta = state.beta;
    let static_part = beta * comb.eval(0.0).re + inst;
    let before = static_part - long_time;
    let values =
        t_grid.iter().map(|&s| if s > 0.0 { beta * comb.eval(s).re - long_time } else { before }).collect();
    Ok(Relaxation { times: t_grid.to_vec(), values, before, after: before - inst, long_time })
}
