//! Time-dependent source protocols with constant plateaus outside `[t_i, t_f]`.

use crate::error::{Error, Result};
use crate::model::TimeParity;

/// Shape of one source inside the drive window. Outside the window the value is
/// held at the window edge, `j(t) = j(t_i)` for `t ≤ t_i` and `j(t) = j(t_f)` for `t ≥ t_f`.
#[derive(Clone, Debug, PartialEq)]
pub enum Waveform {
    Constant(f64),
    /// `before` for `t < at`, `after` from `at` on.
    Step { at: f64, before: f64, after: f64 },
    /// Linear from `from` at `t_i` to `to` at `t_f`.
    Ramp { from: f64, to: f64 },
    /// `base + amp·exp(−(t − center)²/(2 width²))`.
    Gaussian { base: f64, amp: f64, center: f64, width: f64 },
    /// `base + amp·sin(ω(t − t_i) + phase)`.
    Sinusoid { base: f64, amp: f64, omega: f64, phase: f64 },
    /// Piecewise-linear through strictly ascending `times`; held constant beyond the table.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl Waveform {
    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            Waveform::Constant(v) => finite(&[*v]),
            Waveform::Step { at, before, after } => finite(&[*at, *before, *after]),
            Waveform::Ramp { from, to } => finite(&[*from, *to]),
            Waveform::Gaussian { base, amp, center, width } => finite(&[*base, *amp, *center, *width]) && *width > 0.0,
            Waveform::Sinusoid { base, amp, omega, phase } => finite(&[*base, *amp, *omega, *phase]),
            Waveform::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::InvalidParameter("tabulated waveform needs equal, non-empty columns".into()));
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidParameter("tabulated times must be strictly ascending".into()));
                }
                finite(times) && finite(values)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid waveform parameters: {self:?}")))
        }
    }

    fn eval(&self, t: f64, t_i: f64, t_f: f64) -> f64 {
        match self {
            Waveform::Constant(v) => *v,
            Waveform::Step { at, before, after } => {
                if t < *at {
                    *before
                } else {
                    *after
                }
            }
            Waveform::Ramp { from, to } => from + (to - from) * (t - t_i) / (t_f - t_i),
            Waveform::Gaussian { base, amp, center, width } => {
                base + amp * (-(t - center).powi(2) / (2.0 * width * width)).exp()
            }
            Waveform::Sinusoid { base, amp, omega, phase } => base + amp * (omega * (t - t_i) + phase).sin(),
            Waveform::Tabulated { times, values } => {
                let i = times.partition_point(|&x| x <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let (t0, t1) = (times[i - 1], times[i]);
                    values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)
                }
            }
        }
    }

    /// `ε·w(t_i + t_f − t)` expressed as a waveform of the same kind.
    fn reversed(&self, eps: f64, t_i: f64, t_f: f64) -> Self {
        let mirror = |t: f64| t_i + t_f - t;
        match self {
            Waveform::Constant(v) => Waveform::Constant(eps * v),
            Waveform::Step { at, before, after } => {
                Waveform::Step { at: mirror(*at), before: eps * after, after: eps * before }
            }
            Waveform::Ramp { from, to } => Waveform::Ramp { from: eps * to, to: eps * from },
            Waveform::Gaussian { base, amp, center, width } => {
                Waveform::Gaussian { base: eps * base, amp: eps * amp, center: mirror(*center), width: *width }
            }
            Waveform::Sinusoid { base, amp, omega, phase } => Waveform::Sinusoid {
                base: eps * base,
                amp: -eps * amp,
                omega: *omega,
                phase: -(omega * (t_f - t_i) + phase),
            },
            Waveform::Tabulated { times, values } => Waveform::Tabulated {
                times: times.iter().rev().map(|&t| mirror(t)).collect(),
                values: values.iter().rev().map(|v| eps * v).collect(),
            },
        }
    }
}

/// Source history `j(t)` for all sources over the window `[t_i, t_f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveProtocol {
    pub t_i: f64,
    pub t_f: f64,
    pub waveforms: Vec<Waveform>,
}

impl DriveProtocol {
    pub fn new(t_i: f64, t_f: f64, waveforms: Vec<Waveform>) -> Result<Self> {
        if !(t_i.is_finite() && t_f.is_finite() && t_f > t_i) {
            return Err(Error::InvalidParameter(format!("need t_i < t_f, got [{t_i}, {t_f}]")));
        }
        for w in &waveforms {
            w.validate()?;
        }
        Ok(Self { t_i, t_f, waveforms })
    }

    /// Every source held at `j`.
    pub fn constant(t_i: f64, t_f: f64, j: &[f64]) -> Result<Self> {
        Self::new(t_i, t_f, j.iter().map(|&v| Waveform::Constant(v)).collect())
    }

    pub fn num_sources(&self) -> usize {
        self.waveforms.len()
    }

    pub fn duration(&self) -> f64 {
        self.t_f - self.t_i
    }

    /// `j(t)`, with the plateau values outside the window.
    pub fn sources_at(&self, t: f64) -> Vec<f64> {
        let tc = t.clamp(self.t_i, self.t_f);
        self.waveforms.iter().map(|w| w.eval(tc, self.t_i, self.t_f)).collect()
    }

    pub fn j_initial(&self) -> Vec<f64> {
        self.sources_at(self.t_i)
    }

    pub fn j_final(&self) -> Vec<f64> {
        self.sources_at(self.t_f)
    }

    /// `steps + 1` equally spaced times from `t_i` to `t_f`.
    pub fn grid(&self, steps: usize) -> Vec<f64> {
        let dt = self.duration() / steps as f64;
        (0..=steps).map(|k| if k == steps { self.t_f } else { self.t_i + k as f64 * dt }).collect()
    }

    /// `j_T(t) = ε j(t_i + t_f − t)`: the reversed history on the same window.
    pub fn time_reversed(&self, parity: &TimeParity) -> Result<Self> {
        if parity.eps.len() != self.num_sources() {
            return Err(Error::DimensionMismatch { expected: self.num_sources(), found: parity.eps.len() });
        }
        let waveforms = self
            .waveforms
            .iter()
            .enumerate()
            .map(|(m, w)| w.reversed(parity.sign(m), self.t_i, self.t_f))
            .collect();
        Ok(Self { t_i: self.t_i, t_f: self.t_f, waveforms })
    }

    /// Same protocol with every deviation from `j_i` multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let j0 = self.j_initial();
        let waveforms = self
            .waveforms
            .iter()
            .zip(&j0)
            .map(|(w, &base)| {
                let s = |v: f64| base + lambda * (v - base);
                match w {
                    Waveform::Constant(v) => Waveform::Constant(s(*v)),
                    Waveform::Step { at, before, after } => Waveform::Step { at: *at, before: s(*before), after: s(*after) },
                    Waveform::Ramp { from, to } => Waveform::Ramp { from: s(*from), to: s(*to) },
                    Waveform::Gaussian { base: b, amp, center, width } => {
                        Waveform::Gaussian { base: s(*b), amp: lambda * amp, center: *center, width: *width }
                    }
                    Waveform::Sinusoid { base: b, amp, omega, phase } => {
                        Waveform::Sinusoid { base: s(*b), amp: lambda * amp, omega: *omega, phase: *phase }
                    }
                    Waveform::Tabulated { times, values } => {
                        Waveform::Tabulated { times: times.clone(), values: values.iter().map(|&v| s(v)).collect() }
                    }
                }
            })
            .collect();
        Self { t_i: self.t_i, t_f: self.t_f, waveforms }
    }
}
