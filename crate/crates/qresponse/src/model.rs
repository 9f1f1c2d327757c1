//! Finite-dimensional systems with source-dependent Hamiltonians
//! `H(j) = H0 − Σ δj_m φ_m − ½ Σ δj_m δj_n φ_mn − ⅙ Σ δj_m δj_n δj_k φ_mnk`,
//! `δj = j − j_init`.

use std::collections::BTreeMap;

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{pauli, CMatrix, Hermitian};
use crate::{Matrix, Operator};

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 4096;
/// Relative tolerance for `[H0, N] = 0`.
pub const COMMUTATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SourceCoupling {
    pub label: String,
    pub phi: Operator,
}

/// Intrinsic time parities of the sources.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeParity {
    /// One sign per source, `+1` or `-1`.
    pub eps: Vec<i8>,
    /// Asserts that `H0`, `N` and every `φ` are real up to the parity sign in the computational basis.
    pub basis_real: bool,
}

impl TimeParity {
    pub fn even(n: usize) -> Self {
        Self { eps: vec![1; n], basis_real: true }
    }

    pub fn sign(&self, m: usize) -> f64 {
        f64::from(self.eps[m])
    }
}

type PairTable = BTreeMap<(usize, usize), Operator>;
type TripleTable = BTreeMap<(usize, usize, usize), Operator>;

#[derive(Clone, Debug)]
pub struct SystemSpec {
    h0: Operator,
    number: Operator,
    sources: Vec<SourceCoupling>,
    quadratic: Option<PairTable>,
    cubic: Option<TripleTable>,
    j_init: Vec<f64>,
    parity: Option<TimeParity>,
}

fn sorted2(m: usize, n: usize) -> (usize, usize) {
    if m <= n {
        (m, n)
    } else {
        (n, m)
    }
}

fn sorted3(m: usize, n: usize, k: usize) -> (usize, usize, usize) {
    let mut v = [m, n, k];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

/// Number of distinct orderings of a sorted index triple.
fn multiplicity3((a, b, c): (usize, usize, usize)) -> f64 {
    if a == b && b == c {
        1.0
    } else if a == b || b == c {
        3.0
    } else {
        6.0
    }
}

impl SystemSpec {
    pub fn builder(h0: Operator) -> SystemBuilder {
        SystemBuilder::new(h0)
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn number(&self) -> &Operator {
        &self.number
    }

    pub fn has_number(&self) -> bool {
        self.number.max_abs() > 0.0
    }

    pub fn sources(&self) -> &[SourceCoupling] {
        &self.sources
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.sources.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn j_init(&self) -> &[f64] {
        &self.j_init
    }

    pub fn parity(&self) -> Option<&TimeParity> {
        self.parity.as_ref()
    }

    pub fn phi(&self, m: usize) -> Result<&Operator> {
        self.sources
            .get(m)
            .map(|s| &s.phi)
            .ok_or(Error::IndexOutOfRange { index: m, len: self.sources.len() })
    }

    pub fn has_quadratic(&self) -> bool {
        self.quadratic.is_some()
    }

    pub fn has_cubic(&self) -> bool {
        self.cubic.is_some()
    }

    /// `φ_mn`, `None` if the entry is zero. Errors if no table was supplied.
    pub fn phi2(&self, m: usize, n: usize) -> Result<Option<&Operator>> {
        let t = self.quadratic.as_ref().ok_or(Error::MissingCouplingTable { order: 2 })?;
        Ok(t.get(&sorted2(m, n)))
    }

    /// `φ_mnk`, `None` if the entry is zero. Errors if no table was supplied.
    pub fn phi3(&self, m: usize, n: usize, k: usize) -> Result<Option<&Operator>> {
        let t = self.cubic.as_ref().ok_or(Error::MissingCouplingTable { order: 3 })?;
        Ok(t.get(&sorted3(m, n, k)))
    }

    /// `φ_mn` as an explicit matrix (zero when absent or when no table exists).
    pub fn phi2_or_zero(&self, m: usize, n: usize) -> Operator {
        match self.phi2(m, n) {
            Ok(Some(op)) => op.clone(),
            _ => Hermitian::zeros(self.dim()),
        }
    }

    pub fn phi3_or_zero(&self, m: usize, n: usize, k: usize) -> Operator {
        match self.phi3(m, n, k) {
            Ok(Some(op)) => op.clone(),
            _ => Hermitian::zeros(self.dim()),
        }
    }

    fn displacement(&self, j: &[f64]) -> Result<Vec<f64>> {
        if j.len() != self.j_init.len() {
            return Err(Error::DimensionMismatch { expected: self.j_init.len(), found: j.len() });
        }
        Ok(j.iter().zip(&self.j_init).map(|(a, b)| a - b).collect())
    }

    /// `H(j)`.
    pub fn hamiltonian_at(&self, j: &[f64]) -> Result<Operator> {
        let d = self.displacement(j)?;
        let mut h: Matrix = self.h0.matrix().clone();
        for (m, s) in self.sources.iter().enumerate() {
            if d[m] != 0.0 {
                h = &h - &s.phi.scale(d[m]);
            }
        }
        if let Some(t) = &self.quadratic {
            for (&(m, n), op) in t {
                let c = if m == n { 0.5 } else { 1.0 } * d[m] * d[n];
                if c != 0.0 {
                    h = &h - &op.scale(c);
                }
            }
        }
        if let Some(t) = &self.cubic {
            for (&key, op) in t {
                let (m, n, k) = key;
                let c = multiplicity3(key) / 6.0 * d[m] * d[n] * d[k];
                if c != 0.0 {
                    h = &h - &op.scale(c);
                }
            }
        }
        Ok(Hermitian::symmetrized(&h))
    }

    /// `H(j) − μN`.
    pub fn grand_hamiltonian_at(&self, j: &[f64], mu: f64) -> Result<Operator> {
        Ok(self.hamiltonian_at(j)?.combine(1.0, &self.number, -mu))
    }

    /// `φ_m(j) = −∂H/∂j_m`.
    pub fn observable_at(&self, m: usize, j: &[f64]) -> Result<Operator> {
        let base = self.phi(m)?;
        let d = self.displacement(j)?;
        let mut out: Matrix = base.matrix().clone();
        let s = self.num_sources();
        if self.quadratic.is_some() {
            for n in 0..s {
                if d[n] != 0.0 {
                    if let Some(op) = self.phi2(m, n)? {
                        out = &out + &op.scale(d[n]);
                    }
                }
            }
        }
        if self.cubic.is_some() {
            for n in 0..s {
                for k in 0..s {
                    let c = 0.5 * d[n] * d[k];
                    if c != 0.0 {
                        if let Some(op) = self.phi3(m, n, k)? {
                            out = &out + &op.scale(c);
                        }
                    }
                }
            }
        }
        Ok(Hermitian::symmetrized(&out))
    }

    /// A copy with one more linear source appended (initial value `j0`).
    pub fn with_source(&self, label: &str, phi: Operator, j0: f64, eps: i8) -> Result<Self> {
        let mut b = self.to_builder();
        b = b.source(label, phi, j0);
        if let Some(p) = &self.parity {
            let mut eps_all = p.eps.clone();
            eps_all.push(eps);
            b = b.parity(TimeParity { eps: eps_all, basis_real: p.basis_real });
        }
        b.build()
    }

    pub fn with_parity(&self, parity: TimeParity) -> Result<Self> {
        self.to_builder().parity(parity).build()
    }

    pub fn to_builder(&self) -> SystemBuilder {
        let mut b = SystemBuilder::new(self.h0.clone()).number(self.number.clone());
        for (s, &j0) in self.sources.iter().zip(&self.j_init) {
            b = b.source(&s.label, s.phi.clone(), j0);
        }
        if let Some(t) = &self.quadratic {
            b.quadratic = Some(t.iter().map(|(&(m, n), op)| ((m, n), op.clone())).collect());
        }
        if let Some(t) = &self.cubic {
            b.cubic = Some(t.iter().map(|(&key, op)| (key, op.clone())).collect());
        }
        if let Some(p) = &self.parity {
            b = b.parity(p.clone());
        }
        b
    }

    /// Checks the time-reversal assumptions: real `H0` and `N`,
    /// `conj(φ_m) = ε_m φ_m`, and `ε j_init = j_init`.
    pub fn check_time_reversal(&self) -> Result<&TimeParity> {
        let p = self
            .parity
            .as_ref()
            .ok_or_else(|| Error::NotTimeReversalSymmetric("no parity assignment".into()))?;
        if !p.basis_real {
            return Err(Error::NotTimeReversalSymmetric("basis_real flag unset".into()));
        }
        let tol = 1e-12;
        let real_dev = |op: &Operator| op.max_diff(&op.conj());
        if real_dev(&self.h0) > tol * self.h0.max_abs().max(1.0) || real_dev(&self.number) > tol {
            return Err(Error::NotTimeReversalSymmetric("H0 or N is not real".into()));
        }
        for (m, s) in self.sources.iter().enumerate() {
            let signed = s.phi.scale(p.sign(m));
            if s.phi.conj().max_diff(&signed) > tol * s.phi.max_abs().max(1.0) {
                return Err(Error::NotTimeReversalSymmetric(format!(
                    "source `{}` does not have parity {}",
                    s.label, p.eps[m]
                )));
            }
            if (p.sign(m) * self.j_init[m] - self.j_init[m]).abs() > 0.0 {
                return Err(Error::NotTimeReversalSymmetric(format!("ε j_init ≠ j_init for `{}`", s.label)));
            }
        }
        let tables_real = self.quadratic.iter().flat_map(|t| t.iter().map(|(&(m, n), op)| (vec![m, n], op)));
        let cubic_real = self.cubic.iter().flat_map(|t| t.iter().map(|(&(m, n, k), op)| (vec![m, n, k], op)));
        for (idx, op) in tables_real.chain(cubic_real) {
            let sign: f64 = idx.iter().map(|&i| p.sign(i)).product();
            if op.conj().max_diff(&op.scale(sign)) > tol * op.max_abs().max(1.0) {
                return Err(Error::NotTimeReversalSymmetric(format!("coupling {idx:?} has wrong parity")));
            }
        }
        Ok(p)
    }
}

/// Incremental construction of a [`SystemSpec`].
#[derive(Clone, Debug)]
pub struct SystemBuilder {
    h0: Operator,
    number: Option<Operator>,
    sources: Vec<SourceCoupling>,
    j_init: Vec<f64>,
    quadratic: Option<Vec<((usize, usize), Operator)>>,
    cubic: Option<Vec<((usize, usize, usize), Operator)>>,
    parity: Option<TimeParity>,
}

impl SystemBuilder {
    pub fn new(h0: Operator) -> Self {
        Self { h0, number: None, sources: Vec::new(), j_init: Vec::new(), quadratic: None, cubic: None, parity: None }
    }

    pub fn number(mut self, n: Operator) -> Self {
        self.number = Some(n);
        self
    }

    pub fn source(mut self, label: &str, phi: Operator, j0: f64) -> Self {
        self.sources.push(SourceCoupling { label: label.to_string(), phi });
        self.j_init.push(j0);
        self
    }

    /// Declares an (initially empty) quadratic coupling table.
    pub fn with_quadratic_table(mut self) -> Self {
        self.quadratic.get_or_insert_with(Vec::new);
        self
    }

    pub fn with_cubic_table(mut self) -> Self {
        self.cubic.get_or_insert_with(Vec::new);
        self
    }

    pub fn quadratic(mut self, m: usize, n: usize, op: Operator) -> Self {
        self.quadratic.get_or_insert_with(Vec::new).push(((m, n), op));
        self
    }

    pub fn cubic(mut self, m: usize, n: usize, k: usize, op: Operator) -> Self {
        self.cubic.get_or_insert_with(Vec::new).push(((m, n, k), op));
        self
    }

    pub fn parity(mut self, p: TimeParity) -> Self {
        self.parity = Some(p);
        self
    }

    pub fn build(self) -> Result<SystemSpec> {
        let dim = self.h0.dim();
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        let number = self.number.unwrap_or_else(|| Hermitian::zeros(dim));
        let check_dim = |op: &Operator| {
            if op.dim() == dim {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: dim, found: op.dim() })
            }
        };
        check_dim(&number)?;
        for s in &self.sources {
            check_dim(&s.phi)?;
        }
        let scale = self.h0.max_abs().max(number.max_abs()).max(1.0);
        let comm = self.h0.commutator(&number).max_abs();
        if comm > COMMUTATION_TOL * scale * scale {
            return Err(Error::NonCommutingNumber { norm: comm });
        }
        let s = self.sources.len();
        let quadratic = match self.quadratic {
            None => None,
            Some(entries) => Some(symmetrize(entries, s, |(a, b)| sorted2(a, b), dim)?),
        };
        let cubic = match self.cubic {
            None => None,
            Some(entries) => Some(symmetrize(entries, s, |(a, b, c)| sorted3(a, b, c), dim)?),
        };
        if let Some(p) = &self.parity {
            if p.eps.len() != s {
                return Err(Error::DimensionMismatch { expected: s, found: p.eps.len() });
            }
            if p.eps.iter().any(|&e| e != 1 && e != -1) {
                return Err(Error::InvalidParameter("parity signs must be +1 or -1".into()));
            }
        }
        Ok(SystemSpec { h0: self.h0, number, sources: self.sources, quadratic, cubic, j_init: self.j_init, parity: self.parity })
    }
}

trait IndexTuple: Copy + Ord + std::fmt::Debug {
    fn max_index(&self) -> usize;
}

impl IndexTuple for (usize, usize) {
    fn max_index(&self) -> usize {
        self.0.max(self.1)
    }
}

impl IndexTuple for (usize, usize, usize) {
    fn max_index(&self) -> usize {
        self.0.max(self.1).max(self.2)
    }
}

/// Groups entries by their sorted index tuple. Distinct orderings supplied for
/// the same tuple are averaged, with a warning if they disagree.
fn symmetrize<K: IndexTuple>(
    entries: Vec<(K, Operator)>,
    num_sources: usize,
    canonical: impl Fn(K) -> K,
    dim: usize,
) -> Result<BTreeMap<K, Operator>> {
    let mut groups: BTreeMap<K, Vec<(K, Operator)>> = BTreeMap::new();
    for (key, op) in entries {
        if key.max_index() >= num_sources {
            return Err(Error::IndexOutOfRange { index: key.max_index(), len: num_sources });
        }
        if op.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
        }
        groups.entry(canonical(key)).or_default().push((key, op));
    }
    let mut out = BTreeMap::new();
    for (key, ops) in groups {
        let first = &ops[0].1;
        if ops.iter().any(|(_, op)| op.max_diff(first) > 1e-12 * first.max_abs().max(1.0)) {
            warn!("coupling table entry {key:?} supplied asymmetrically; using the symmetric part");
        }
        let mut acc: Matrix = CMatrix::zeros(dim);
        for (_, op) in &ops {
            acc = &acc + op.matrix();
        }
        out.insert(key, Hermitian::symmetrized(&acc.scale_real(1.0 / ops.len() as f64)));
    }
    Ok(out)
}

/// `σ` acting on `site` of an `l`-site chain, site 0 being the leftmost factor.
pub fn site_operator(op: &Operator, site: usize, l: usize) -> Operator {
    let mut out = Hermitian::identity(1);
    for s in 0..l {
        let factor = if s == site { op.clone() } else { Hermitian::identity(op.dim()) };
        out = out.kron(&factor);
    }
    out
}

/// Chain boundary condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Transverse-field Ising chain `H0 = −J Σ σᶻσᶻ − h Σ σˣ` (open boundary).
pub fn build_transverse_ising(l: usize, coupling: f64, field: f64) -> Result<SystemSpec> {
    build_transverse_ising_with(l, coupling, field, Boundary::Open)
}

/// Sources are `x0..x{L-1}` (σˣ per site) then `z0..z{L-1}` (σᶻ per site),
/// all starting at zero. The number operator `Σ(1+σᶻ)/2` is attached only when
/// it is conserved, i.e. for `h = 0`; otherwise `N = 0`.
pub fn build_transverse_ising_with(l: usize, coupling: f64, field: f64, boundary: Boundary) -> Result<SystemSpec> {
    if l == 0 {
        return Err(Error::InvalidParameter("chain needs at least one site".into()));
    }
    if l > 12 {
        return Err(Error::DimensionTooLarge { dim: 1usize << l.min(62), max: MAX_DIM });
    }
    let dim = 1usize << l;
    let (x, z) = (pauli::sigma_x::<f64>(), pauli::sigma_z::<f64>());
    let xs: Vec<Operator> = (0..l).map(|i| site_operator(&x, i, l)).collect();
    let zs: Vec<Operator> = (0..l).map(|i| site_operator(&z, i, l)).collect();
    let mut h: Matrix = CMatrix::zeros(dim);
    let bonds = match boundary {
        Boundary::Open => l.saturating_sub(1),
        Boundary::Periodic if l > 2 => l,
        Boundary::Periodic => l.saturating_sub(1),
    };
    for i in 0..bonds {
        let zz = zs[i].matrix() * zs[(i + 1) % l].matrix();
        h = &h - &zz.scale_real(coupling);
    }
    for xi in &xs {
        h = &h - &xi.scale(field);
    }
    let mut b = SystemSpec::builder(Hermitian::symmetrized(&h));
    if field == 0.0 {
        let mut n: Matrix = CMatrix::zeros(dim);
        for zi in &zs {
            n = &n + &(&CMatrix::identity(dim) + zi.matrix()).scale_real(0.5);
        }
        b = b.number(Hermitian::symmetrized(&n));
    }
    for (i, xi) in xs.into_iter().enumerate() {
        b = b.source(&format!("x{i}"), xi, 0.0);
    }
    for (i, zi) in zs.into_iter().enumerate() {
        b = b.source(&format!("z{i}"), zi, 0.0);
    }
    b.with_quadratic_table().with_cubic_table().parity(TimeParity::even(2 * l)).build()
}

/// Two-level system `H0 = (ω₀/2)σᶻ`, source `σˣ`, `N = (1+σᶻ)/2`.
pub fn build_qubit(omega0: f64) -> Result<SystemSpec> {
    if omega0 <= 0.0 || !omega0.is_finite() {
        return Err(Error::InvalidParameter(format!("omega0 must be positive, got {omega0}")));
    }
    let z = pauli::sigma_z::<f64>();
    let n = Hermitian::symmetrized(&(&CMatrix::identity(2) + z.matrix()).scale_real(0.5));
    SystemSpec::builder(z.scale(0.5 * omega0))
        .number(n)
        .source("x", pauli::sigma_x(), 0.0)
        .with_quadratic_table()
        .with_cubic_table()
        .parity(TimeParity::even(1))
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig_hermitian;

    fn finite_difference_check(spec: &SystemSpec, j: &[f64]) {
        let h = 1e-4;
        for m in 0..spec.num_sources() {
            let mut jp = j.to_vec();
            let mut jm = j.to_vec();
            jp[m] += h;
            jm[m] -= h;
            let dh = (&*spec.hamiltonian_at(&jp).unwrap().matrix() - spec.hamiltonian_at(&jm).unwrap().matrix())
                .scale_real(-0.5 / h);
            let obs = spec.observable_at(m, j).unwrap();
            let err = dh.max_diff(&obs);
            assert!(err <= 1e-6 * obs.max_abs().max(1.0), "source {m}: {err}");
        }
    }

    #[test]
    fn init_gives_h0() {
        let spec = build_transverse_ising(3, 1.0, 0.7).unwrap();
        let h = spec.hamiltonian_at(spec.j_init()).unwrap();
        assert_eq!(h.matrix(), spec.h0().matrix());
        assert_eq!(spec.dim(), 8);
    }

    #[test]
    fn linear_term_only() {
        let spec = build_qubit(1.0).unwrap();
        let h = spec.hamiltonian_at(&[0.1]).unwrap();
        let expect = spec.h0().combine(1.0, &pauli::sigma_x(), -0.1);
        assert!(h.max_diff(&expect) < 1e-15);
    }

    #[test]
    fn quadratic_second_derivative() {
        let x = pauli::sigma_x::<f64>();
        let z = pauli::sigma_z::<f64>();
        let spec = SystemSpec::builder(z.scale(0.5))
            .source("a", x.clone(), 0.0)
            .source("b", z.clone(), 0.0)
            .quadratic(0, 1, x.scale(0.3))
            .quadratic(0, 0, z.scale(0.2))
            .build()
            .unwrap();
        let h = 1e-3;
        let hab = |a: f64, b: f64| spec.hamiltonian_at(&[a, b]).unwrap();
        let mixed = (&(&*hab(h, h).matrix() - hab(h, -h).matrix()) - &(&*hab(-h, h).matrix() - hab(-h, -h).matrix()))
            .scale_real(1.0 / (4.0 * h * h));
        assert!(mixed.max_diff(&x.scale(-0.3)) < 1e-8);
        let diag = (&(&*hab(h, 0.0).matrix() + hab(-h, 0.0).matrix()) - &hab(0.0, 0.0).scale(2.0))
            .scale_real(1.0 / (h * h));
        assert!(diag.max_diff(&z.scale(-0.2)) < 1e-6);
    }

    #[test]
    fn observable_is_minus_gradient() {
        let x = pauli::sigma_x::<f64>();
        let y = pauli::sigma_y::<f64>();
        let z = pauli::sigma_z::<f64>();
        let spec = SystemSpec::builder(z.scale(0.5))
            .source("a", x.clone(), 0.1)
            .source("b", y.clone(), -0.2)
            .quadratic(0, 1, z.scale(0.3))
            .quadratic(1, 1, x.scale(0.4))
            .cubic(0, 1, 1, y.scale(0.5))
            .cubic(0, 0, 0, z.scale(0.25))
            .build()
            .unwrap();
        finite_difference_check(&spec, &[0.35, 0.15]);
        let ising = build_transverse_ising(3, 1.0, 0.7).unwrap();
        finite_difference_check(&ising, &vec![0.05; 6]);
    }

    #[test]
    fn zero_tables_leave_observable_fixed() {
        let spec = build_transverse_ising(2, 1.0, 0.3).unwrap();
        let obs = spec.observable_at(1, &[0.3, -0.2, 0.1, 0.9]).unwrap();
        assert_eq!(obs.matrix(), spec.phi(1).unwrap().matrix());
    }

    #[test]
    fn ising_small_cases() {
        let one = build_transverse_ising(1, 5.0, 0.4).unwrap();
        assert!(one.h0().max_diff(&pauli::sigma_x::<f64>().scale(-0.4)) < 1e-15);
        let two = build_transverse_ising(2, 1.0, 0.0).unwrap();
        let mut e = eig_hermitian(two.h0()).unwrap().values;
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in e.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(two.has_number());
        assert!(!build_transverse_ising(2, 1.0, 0.5).unwrap().has_number());
        assert!(matches!(build_transverse_ising(13, 1.0, 1.0), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn periodic_chain_adds_closing_bond() {
        let open = build_transverse_ising(3, 1.0, 0.0).unwrap();
        let ring = build_transverse_ising_with(3, 1.0, 0.0, Boundary::Periodic).unwrap();
        // all-up state: open −2J, ring −3J
        assert!((open.h0()[(0, 0)].re + 2.0).abs() < 1e-15);
        assert!((ring.h0()[(0, 0)].re + 3.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_basics() {
        let q = build_qubit(1.0).unwrap();
        let e = eig_hermitian(q.h0()).unwrap();
        assert!((e.values[0] + 0.5).abs() < 1e-15 && (e.values[1] - 0.5).abs() < 1e-15);
        // ground state is |down⟩ = basis vector 1
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(q.h0().trace().re, 0.0);
    }

    #[test]
    fn shipped_builders_conserve_number() {
        for spec in [build_qubit(0.8).unwrap(), build_transverse_ising(3, 1.0, 0.0).unwrap(), build_transverse_ising(3, 1.0, 0.5).unwrap()] {
            assert!(spec.h0().commutator(spec.number()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_conserved_number() {
        let r = SystemSpec::builder(pauli::sigma_x()).number(pauli::sigma_z()).build();
        assert!(matches!(r, Err(Error::NonCommutingNumber { .. })));
    }

    #[test]
    fn asymmetric_table_is_symmetrized() {
        let x = pauli::sigma_x::<f64>();
        let spec = SystemSpec::builder(pauli::sigma_z())
            .source("a", x.clone(), 0.0)
            .source("b", x.clone(), 0.0)
            .quadratic(0, 1, x.scale(1.0))
            .quadratic(1, 0, x.scale(3.0))
            .build()
            .unwrap();
        assert!(spec.phi2(1, 0).unwrap().unwrap().max_diff(&x.scale(2.0)) < 1e-15);
    }

    #[test]
    fn missing_table_is_reported() {
        let spec = SystemSpec::builder(pauli::sigma_z()).source("a", pauli::sigma_x(), 0.0).build().unwrap();
        assert!(matches!(spec.phi2(0, 0), Err(Error::MissingCouplingTable { order: 2 })));
        assert!(matches!(spec.phi(3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn time_reversal_checks() {
        let q = build_qubit(1.0).unwrap();
        assert!(q.check_time_reversal().is_ok());
        let odd_wrong = q.with_source("y", pauli::sigma_y(), 0.0, 1).unwrap();
        assert!(odd_wrong.check_time_reversal().is_err());
        let odd = q.with_source("y", pauli::sigma_y(), 0.0, -1).unwrap();
        assert!(odd.check_time_reversal().is_ok());
    }
}
