//! Delta-comb representations of spectral functions.

use std::f64::consts::PI;

use crate::C64;

/// Lines closer than this in frequency are merged.
pub const MERGE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub omega: f64,
    pub weight: C64,
}

/// `X(ω) = Σ_l w_l δ(ω − ω_l)`, so that `X(t) = ∫dω/2π e^{−iωt} X(ω) = (1/2π) Σ_l w_l e^{−iω_l t}`.
///
/// Lines are sorted by frequency. All combs built from the same state share
/// the same frequency list (zero weights are kept), so they can be compared
/// line by line.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralComb {
    /// Source indices the comb belongs to, e.g. `[m, n]`.
    pub indices: Vec<usize>,
    pub lines: Vec<Line>,
}

impl SpectralComb {
    /// Sorts and merges raw lines.
    pub fn from_lines(indices: Vec<usize>, mut raw: Vec<Line>) -> Self {
        raw.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        let mut lines: Vec<Line> = Vec::new();
        let mut cluster: Vec<Line> = Vec::new();
        let flush = |cluster: &mut Vec<Line>, lines: &mut Vec<Line>| {
            if cluster.is_empty() {
                return;
            }
            let omega = cluster.iter().map(|l| l.omega).sum::<f64>() / cluster.len() as f64;
            let weight = cluster.iter().map(|l| l.weight).sum();
            lines.push(Line { omega, weight });
            cluster.clear();
        };
        for line in raw {
            if let Some(last) = cluster.last() {
                if line.omega - last.omega >= MERGE_TOL {
                    flush(&mut cluster, &mut lines);
                }
            }
            cluster.push(line);
        }
        flush(&mut cluster, &mut lines);
        Self { indices, lines }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.lines.iter().fold(0.0, |m, l| f64::max(m, l.weight.norm()))
    }

    /// True when every weight is below `tol`.
    pub fn is_null(&self, tol: f64) -> bool {
        self.lines.iter().all(|l| l.weight.norm() <= tol)
    }

    /// Drops lines with `|w| ≤ tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self { indices: self.indices.clone(), lines: self.lines.iter().filter(|l| l.weight.norm() > tol).copied().collect() }
    }

    /// Weight of the line at `omega`, if one lies within [`MERGE_TOL`].
    pub fn weight_at(&self, omega: f64) -> Option<C64> {
        let i = self.lines.partition_point(|l| l.omega < omega - MERGE_TOL);
        self.lines.get(i).filter(|l| (l.omega - omega).abs() < MERGE_TOL).map(|l| l.weight)
    }

    /// `(1/2π) Σ w e^{−iωt}`.
    pub fn eval(&self, t: f64) -> C64 {
        let s: C64 = self.lines.iter().map(|l| l.weight * C64::from_polar(1.0, -l.omega * t)).sum();
        s / (2.0 * PI)
    }

    /// Applies `f(ω, w)` to every weight.
    pub fn map_weights(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        Self {
            indices: self.indices.clone(),
            lines: self.lines.iter().map(|l| Line { omega: l.omega, weight: f(l.omega, l.weight) }).collect(),
        }
    }

    /// `G(z) = −Σ w/(2π(z − ω))`; analytic off the real axis.
    pub fn resolvent(&self, z: C64) -> C64 {
        -self.lines.iter().map(|l| l.weight / (z - l.omega)).sum::<C64>() / (2.0 * PI)
    }

    /// Largest minus smallest line frequency (zero for fewer than two lines).
    pub fn span(&self) -> f64 {
        match (self.lines.first(), self.lines.last()) {
            (Some(a), Some(b)) => b.omega - a.omega,
            _ => 0.0,
        }
    }

    /// Lorentzian-broadened density `Σ w (η/π)/((ω − ω_l)² + η²)` on a grid, for plotting.
    pub fn broadened(&self, omegas: &[f64], eta: f64) -> Vec<C64> {
        omegas
            .iter()
            .map(|&w| self.lines.iter().map(|l| l.weight * (eta / PI / ((w - l.omega).powi(2) + eta * eta))).sum())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line2 {
    pub omega: (f64, f64),
    pub weight: C64,
}

/// Two-frequency comb: `X(s₁, s₂) = (1/2π)² Σ_l w_l e^{−i(ω₁ s₁ + ω₂ s₂)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreePointComb {
    pub indices: Vec<usize>,
    pub lines: Vec<Line2>,
}

impl ThreePointComb {
    /// Sorts and merges: lines are clustered in `ω₁` first, then in `ω₂`
    /// within each `ω₁` cluster.
    pub fn from_lines(indices: Vec<usize>, mut raw: Vec<Line2>) -> Self {
        raw.sort_by(|a, b| a.omega.0.total_cmp(&b.omega.0));
        let mut lines = Vec::new();
        let mut start = 0;
        while start < raw.len() {
            let mut end = start + 1;
            while end < raw.len() && raw[end].omega.0 - raw[end - 1].omega.0 < MERGE_TOL {
                end += 1;
            }
            let group = &raw[start..end];
            let w1 = group.iter().map(|l| l.omega.0).sum::<f64>() / group.len() as f64;
            let inner: Vec<Line> = group.iter().map(|l| Line { omega: l.omega.1, weight: l.weight }).collect();
            for l in SpectralComb::from_lines(Vec::new(), inner).lines {
                lines.push(Line2 { omega: (w1, l.omega), weight: l.weight });
            }
            start = end;
        }
        Self { indices, lines }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.lines.iter().fold(0.0, |m, l| f64::max(m, l.weight.norm()))
    }

    pub fn is_null(&self, tol: f64) -> bool {
        self.lines.iter().all(|l| l.weight.norm() <= tol)
    }

    pub fn pruned(&self, tol: f64) -> Self {
        Self { indices: self.indices.clone(), lines: self.lines.iter().filter(|l| l.weight.norm() > tol).copied().collect() }
    }

    pub fn weight_at(&self, omega: (f64, f64)) -> Option<C64> {
        self.lines
            .iter()
            .find(|l| (l.omega.0 - omega.0).abs() < MERGE_TOL && (l.omega.1 - omega.1).abs() < MERGE_TOL)
            .map(|l| l.weight)
    }

    /// `(1/2π)² Σ w e^{−i(ω₁s₁ + ω₂s₂)}`.
    pub fn eval(&self, s1: f64, s2: f64) -> C64 {
        let s: C64 =
            self.lines.iter().map(|l| l.weight * C64::from_polar(1.0, -(l.omega.0 * s1 + l.omega.1 * s2))).sum();
        s / (4.0 * PI * PI)
    }
}
