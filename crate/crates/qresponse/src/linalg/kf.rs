use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use super::eigen::EigenSystem;
use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative tolerance under which two weights count as equal.
pub const DEGENERATE_WEIGHT_TOL: f64 = 1e-14;
/// Weights more negative than this are rejected rather than clamped.
pub const NEGATIVE_WEIGHT_TOL: f64 = 1e-12;

/// The supported operator-monotone functions `f` with `f(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MonotoneFn<T> {
    /// `f(z) = 1`
    Const1,
    /// `f(z) = z`
    Linear,
    /// `f(z) = (1 + z)/2`
    Symmetric,
    /// `f(z) = z^γ`, `0 ≤ γ ≤ 1`
    Power(T),
    /// `f(z) = (z - 1)/ln z`
    Bkm,
    /// `f(z) = (√z + 1)²/4`
    RootMean,
}

impl<T: Real> MonotoneFn<T> {
    pub fn power(gamma: T) -> Result<Self> {
        if gamma >= T::zero() && gamma <= T::one() {
            Ok(Self::Power(gamma))
        } else {
            Err(Error::UnknownFunctionTag(format!("power({gamma})")))
        }
    }

    /// Representative members of the whitelist, including three powers.
    pub fn whitelist() -> Vec<Self> {
        vec![
            Self::Const1,
            Self::Linear,
            Self::Symmetric,
            Self::Power(T::zero()),
            Self::Power(T::lit(0.3)),
            Self::Power(T::lit(0.5)),
            Self::Power(T::one()),
            Self::Bkm,
            Self::RootMean,
        ]
    }

    pub fn eval(&self, z: T) -> T {
        let one = T::one();
        match *self {
            Self::Const1 => one,
            Self::Linear => z,
            Self::Symmetric => (one + z) * T::lit(0.5),
            Self::Power(g) => z.powf(g),
            Self::Bkm => {
                if z == T::zero() {
                    return T::zero();
                }
                let u = z.ln();
                if u.abs() < T::lit(super::divdiff::SERIES_THRESHOLD) {
                    one + u * T::lit(0.5) + u * u / T::lit(6.0) + u * u * u / T::lit(24.0)
                } else {
                    (z - one) / u
                }
            }
            Self::RootMean => {
                let s = z.sqrt() + one;
                s * s * T::lit(0.25)
            }
        }
    }

    /// The dual `f̃(z) = z f(1/z)`, continued to `z = 0`.
    pub fn dual_eval(&self, z: T) -> T {
        if z == T::zero() {
            return match *self {
                Self::Const1 => T::zero(),
                Self::Linear => T::one(),
                Self::Symmetric => T::lit(0.5),
                Self::Power(g) => T::zero().powf(T::one() - g),
                Self::Bkm => T::zero(),
                Self::RootMean => T::lit(0.25),
            };
        }
        z * self.eval(T::one() / z)
    }

    /// The dual as a tag, when it is itself on the whitelist.
    pub fn dual(&self) -> Self {
        match *self {
            Self::Const1 => Self::Linear,
            Self::Linear => Self::Const1,
            Self::Power(g) => Self::Power(T::one() - g),
            other => other,
        }
    }

    /// Eigenbasis kernel `f(a/b)·b` with the degenerate and zero-weight conventions.
    pub fn kernel(&self, a: T, b: T) -> T {
        let scale = a.max(b);
        if scale == T::zero() {
            return T::zero();
        }
        if (a - b).abs() <= T::lit(DEGENERATE_WEIGHT_TOL) * scale {
            return self.eval(T::one()) * b;
        }
        if b == T::zero() {
            return self.dual_eval(b / a) * a;
        }
        self.eval(a / b) * b
    }

    /// Fluctuation-dissipation coefficient `f(z)/(1 - z)` at `z = e^{-βω}`.
    pub fn fdr_coefficient(&self, z: T) -> T {
        self.eval(z) / (T::one() - z)
    }
}

impl<T: Real> fmt::Display for MonotoneFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const1 => write!(f, "const1"),
            Self::Linear => write!(f, "linear"),
            Self::Symmetric => write!(f, "symmetric"),
            Self::Power(g) => write!(f, "power({g})"),
            Self::Bkm => write!(f, "bkm"),
            Self::RootMean => write!(f, "root-mean"),
        }
    }
}

impl<T: Real> FromStr for MonotoneFn<T> {
    type Err = Error;

    /// Accepts `const1`, `linear`, `symmetric`, `bkm`, `root-mean` and
    /// `power(γ)` / `power:γ`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        let unknown = || Error::UnknownFunctionTag(s.to_string());
        match t.as_str() {
            "const1" | "const" | "wightman" => Ok(Self::Const1),
            "linear" => Ok(Self::Linear),
            "symmetric" => Ok(Self::Symmetric),
            "bkm" => Ok(Self::Bkm),
            "root-mean" | "rootmean" => Ok(Self::RootMean),
            _ => {
                let arg = t
                    .strip_prefix("power(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| t.strip_prefix("power:"))
                    .ok_or_else(unknown)?;
                let g: f64 = arg.trim().parse().map_err(|_| unknown())?;
                Self::power(T::lit(g))
            }
        }
    }
}

/// `K^f_ρ(B)`: in the eigenbasis of `ρ`, `⟨j|K(B)|k⟩ = B_jk f(p_j/p_k) p_k`.
pub fn apply_kf<T: Real>(rho: &EigenSystem<T>, b: &CMatrix<T>, f: &MonotoneFn<T>) -> Result<CMatrix<T>> {
    if b.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: b.dim() });
    }
    let p = checked_weights(&rho.values)?;
    let bt = rho.to_eigenbasis(b);
    let n = rho.dim();
    let mut out = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            out[(j, k)] = bt[(j, k)] * Complex::new(f.kernel(p[j], p[k]), T::zero());
        }
    }
    Ok(rho.from_eigenbasis(&out))
}

/// Clamps rounding-level negatives to zero and rejects real negatives.
pub fn checked_weights<T: Real>(values: &[T]) -> Result<Vec<T>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            if v < -T::lit(NEGATIVE_WEIGHT_TOL) || !v.is_finite() {
                Err(Error::NegativeWeight { index, value: v.to_f64().unwrap_or(f64::NAN) })
            } else {
                Ok(v.max(T::zero()))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen::{eig_hermitian, matrix_function};
    use crate::linalg::matrix::{pauli::*, Hermitian};
    use crate::linalg::testutil::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gibbs_density(h: &Hermitian<f64>, beta: f64) -> EigenSystem<f64> {
        let e = eig_hermitian(h).unwrap();
        let w: Vec<f64> = e.values.iter().map(|&x| (-beta * x).exp()).collect();
        let z: f64 = w.iter().sum();
        EigenSystem { values: w.iter().map(|x| x / z).collect(), vectors: e.vectors }
    }

    #[test]
    fn const1_is_right_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = gibbs_density(&random_hermitian(4, &mut rng), 1.3);
        let b = random_hermitian(4, &mut rng);
        let k = apply_kf(&rho, &b, &MonotoneFn::Const1).unwrap();
        let expect = b.matrix() * &rho.reconstruct();
        assert!(k.max_diff(&expect) < 1e-13);
    }

    #[test]
    fn commuting_input_gives_b_rho() {
        let rho = gibbs_density(&sigma_z(), 0.7);
        let b = sigma_z::<f64>();
        let expect = b.matrix() * &rho.reconstruct();
        for f in MonotoneFn::whitelist() {
            let k = apply_kf(&rho, &b, &f).unwrap();
            assert!(k.max_diff(&expect) < 1e-14, "{f}");
        }
    }

    #[test]
    fn square_root_power_is_sandwich() {
        let h = Hermitian::symmetrized(&(&sigma_z::<f64>().scale(0.5).into_matrix() + &sigma_x::<f64>().scale(0.2).into_matrix()));
        let rho = gibbs_density(&h, 1.0);
        let b = sigma_x::<f64>();
        let sqrt_rho = matrix_function(&Hermitian::symmetrized(&rho.reconstruct()), |x| x.sqrt()).unwrap();
        let expect = &(sqrt_rho.matrix() * b.matrix()) * sqrt_rho.matrix();
        let k = apply_kf(&rho, &b, &MonotoneFn::Power(0.5)).unwrap();
        assert!(k.max_diff(&expect) < 1e-12);
    }

    #[test]
    fn transpose_relation_with_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = gibbs_density(&random_hermitian(5, &mut rng), 0.9);
        let a = random_hermitian(5, &mut rng);
        let b = random_hermitian(5, &mut rng);
        for f in MonotoneFn::whitelist() {
            let lhs = a.trace_product(&apply_kf(&rho, &b, &f).unwrap());
            let rhs = b.trace_product(&apply_kf(&rho, &a, &f.dual()).unwrap());
            assert!((lhs - rhs).norm() < 1e-13, "{f}");
        }
    }

    #[test]
    fn unit_trace_of_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = gibbs_density(&random_hermitian(6, &mut rng), 2.0);
        for f in MonotoneFn::whitelist() {
            let k = apply_kf(&rho, &CMatrix::identity(6), &f).unwrap();
            assert!((k.trace().re - 1.0).abs() < 1e-13, "{f}");
        }
    }

    #[test]
    fn zero_weight_conventions_are_finite_limits() {
        for f in MonotoneFn::<f64>::whitelist() {
            let at_zero = f.kernel(0.3, 0.0);
            // the bkm kernel approaches its limit like 1/ln(1/b), so probe far out
            let near = f.kernel(0.3, 1e-250);
            assert!((at_zero - near).abs() < 1e-3, "{f}: {at_zero} vs {near}");
            assert_eq!(f.kernel(0.0, 0.0), 0.0);
        }
    }

    #[test]
    fn rejects_negative_weights_and_unknown_tags() {
        let rho = EigenSystem { values: vec![1.1, -0.1], vectors: CMatrix::identity(2) };
        let r = apply_kf(&rho, &CMatrix::identity(2), &MonotoneFn::Linear);
        assert!(matches!(r, Err(Error::NegativeWeight { index: 1, .. })));
        assert!(matches!("sqrt".parse::<MonotoneFn<f64>>(), Err(Error::UnknownFunctionTag(_))));
        assert!("power(1.5)".parse::<MonotoneFn<f64>>().is_err());
        assert_eq!("power(0.25)".parse::<MonotoneFn<f64>>().unwrap(), MonotoneFn::Power(0.25));
        assert_eq!("ROOT_MEAN".parse::<MonotoneFn<f64>>().unwrap(), MonotoneFn::RootMean);
    }

    #[test]
    fn tags_round_trip_through_display() {
        for f in MonotoneFn::<f64>::whitelist() {
            assert_eq!(f.to_string().parse::<MonotoneFn<f64>>().unwrap(), f);
        }
    }
}
