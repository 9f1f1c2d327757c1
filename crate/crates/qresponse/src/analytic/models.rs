use num_complex::Complex;

use crate::error::{Error, Result};
use crate::Real;

/// Where to evaluate a reference model.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain<T: Real> {
    Time(Vec<T>),
    Frequency(Vec<T>),
}

fn step<T: Real>(t: T) -> T {
    if t > T::zero() {
        T::one()
    } else if t < T::zero() {
        T::zero()
    } else {
        T::lit(0.5)
    }
}

fn positive<T: Real>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Current through a series RC circuit after a voltage impulse: `θ(t) e^{−t/RC}/R`.
pub fn rc_time<T: Real>(r: T, c: T, t: T) -> T {
    let th = step(t);
    if th == T::zero() {
        return T::zero();
    }
    th * (-t / (r * c)).exp() / r
}

/// `1/(−iωR + 1/C)`, written as `C/(1 − iωRC)` so that `ω = 0` returns `C` exactly.
pub fn rc_frequency<T: Real>(r: T, c: T, omega: T) -> Complex<T> {
    let den = Complex::new(T::one(), -omega * r * c);
    den.conj().scale(c / den.norm_sqr())
}

/// The single pole `−i/(RC)`.
pub fn rc_pole<T: Real>(r: T, c: T) -> Complex<T> {
    Complex::new(T::zero(), -(r * c).recip())
}

pub fn rc_response<T: Real>(r: T, c: T, domain: &Domain<T>) -> Result<Vec<Complex<T>>> {
    positive("R", r)?;
    positive("C", c)?;
    Ok(match domain {
        Domain::Time(ts) => ts.iter().map(|&t| Complex::new(rc_time(r, c, t), T::zero())).collect(),
        Domain::Frequency(ws) => ws.iter().map(|&w| rc_frequency(r, c, w)).collect(),
    })
}

fn check_oscillator<T: Real>(omega0: T, zeta: T) -> Result<()> {
    positive("omega0", omega0)?;
    if !(zeta >= T::zero()) || !zeta.is_finite() {
        return Err(Error::InvalidParameter(format!("damping ratio must be non-negative, got {zeta}")));
    }
    if zeta >= T::one() {
        return Err(Error::OverdampedUnsupported { zeta: zeta.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

fn damped_frequency<T: Real>(omega0: T, zeta: T) -> T {
    omega0 * (T::one() - zeta * zeta).sqrt()
}

/// Pulse response of `ẍ + 2ζω₀ẋ + ω₀²x = δ(t)`: `θ(t) e^{−ζω₀t} sin(ω_d t)/ω_d`.
pub fn oscillator_time<T: Real>(omega0: T, zeta: T, t: T) -> Result<T> {
    check_oscillator(omega0, zeta)?;
    if t <= T::zero() {
        return Ok(T::zero());
    }
    let wd = damped_frequency(omega0, zeta);
    Ok((-zeta * omega0 * t).exp() * (wd * t).sin() / wd)
}

/// `1/(ω₀² − ω² − 2iζω₀ω)`.
pub fn oscillator_frequency<T: Real>(omega0: T, zeta: T, omega: T) -> Result<Complex<T>> {
    check_oscillator(omega0, zeta)?;
    let two = T::lit(2.0);
    Ok(Complex::new(omega0 * omega0 - omega * omega, -two * zeta * omega0 * omega).inv())
}

/// Both poles `(±√(1−ζ²) − iζ)ω₀`, negative real part first.
pub fn oscillator_poles<T: Real>(omega0: T, zeta: T) -> Result<[Complex<T>; 2]> {
    check_oscillator(omega0, zeta)?;
    let wd = damped_frequency(omega0, zeta);
    let im = -zeta * omega0;
    Ok([Complex::new(-wd, im), Complex::new(wd, im)])
}

pub fn oscillator_response<T: Real>(omega0: T, zeta: T, domain: &Domain<T>) -> Result<Vec<Complex<T>>> {
    check_oscillator(omega0, zeta)?;
    match domain {
        Domain::Time(ts) => ts.iter().map(|&t| Ok(Complex::new(oscillator_time(omega0, zeta, t)?, T::zero()))).collect(),
        Domain::Frequency(ws) => ws.iter().map(|&w| oscillator_frequency(omega0, zeta, w)).collect(),
    }
}

/// Transport coefficients of a diffusive conserved current.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams<T: Real> {
    /// Conductivity `σ`.
    pub sigma: T,
    /// Diffusion constant `D`.
    pub d: T,
    /// Relaxation time `τ`.
    pub tau: T,
}

impl<T: Real> FluidParams<T> {
    pub fn new(sigma: T, d: T, tau: T) -> Result<Self> {
        for (name, x) in [("sigma", sigma), ("D", d), ("tau", tau)] {
            if !(x >= T::zero()) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")));
            }
        }
        Ok(Self { sigma, d, tau })
    }

    /// Static charge susceptibility `σ/D`.
    pub fn susceptibility(&self) -> Result<T> {
        if self.d > T::zero() {
            Ok(self.sigma / self.d)
        } else {
            Err(Error::InvalidParameter("static susceptibility needs D > 0".into()))
        }
    }
}

/// Retarded current–current response `G^{μν}(p⁰, 𝐩)`, index 0 the charge density.
///
/// With `den = p⁰ − iτ(p⁰)² + iD𝐩²`:
/// `G^{00} = iσ𝐩²/den`, `G^{0j} = G^{j0} = iσp⁰p^j/den`,
/// `G^{jk} = iσp⁰δ^{jk}/(1 − iτp⁰) + Dσp⁰p^jp^k/(den(1 − iτp⁰))`.
pub fn fluid_current_response<T: Real>(
    params: &FluidParams<T>,
    p0: Complex<T>,
    p: [T; 3],
) -> Result<[[Complex<T>; 4]; 4]> {
    let FluidParams { sigma, d, tau } = *params;
    let i = Complex::<T>::i();
    let one = Complex::new(T::one(), T::zero());
    let p2 = p.iter().fold(T::zero(), |s, x| s + *x * *x);
    // den = i·diff with diff = D𝐩² − τ(p⁰)² − ip⁰.
    let diff = Complex::new(d * p2, T::zero()) - p0 * p0 * tau - i * p0;
    let relax = one - i * p0 * tau;
    let tiny = T::epsilon() * T::lit(64.0);
    let scale = d * p2 + tau * p0.norm_sqr() + p0.norm();
    if diff.norm() <= tiny * scale || relax.norm() <= tiny {
        return Err(Error::PoleHit);
    }
    let den = i * diff;
    // Multiplying through by −i keeps G^{00} = σ/D exact in the static limit.
    let g00 = if d > T::zero() {
        Complex::new(d * p2, T::zero()) / diff * (sigma / d)
    } else {
        Complex::new(sigma * p2, T::zero()) / diff
    };
    let mut g = [[Complex::new(T::zero(), T::zero()); 4]; 4];
    g[0][0] = g00;
    for j in 0..3 {
        let g0j = i * p0 * (sigma * p[j]) / den;
        g[0][j + 1] = g0j;
        g[j + 1][0] = g0j;
        for k in 0..3 {
            let mut v = p0 * (d * sigma * p[j] * p[k]) / (den * relax);
            if j == k {
                v = v + i * p0 * sigma / relax;
            }
            g[j + 1][k + 1] = v;
        }
    }
    Ok(g)
}

/// Largest relative Ward residual `|p_μG^{μν}| / Σ_μ|p_μ||G^{μν}|` over `ν` and
/// both index slots, with `p_μ = (−p⁰, 𝐩)`.
pub fn fluid_ward_residual<T: Real>(g: &[[Complex<T>; 4]; 4], p0: Complex<T>, p: [T; 3]) -> T {
    let lower = [-p0, Complex::from(p[0]), Complex::from(p[1]), Complex::from(p[2])];
    let mut worst = T::zero();
    for nu in 0..4 {
        for left in [true, false] {
            let entry = |mu: usize| if left { g[mu][nu] } else { g[nu][mu] };
            let mut sum = Complex::new(T::zero(), T::zero());
            let mut mag = T::zero();
            for mu in 0..4 {
                sum = sum + lower[mu] * entry(mu);
                mag = mag + lower[mu].norm() * entry(mu).norm();
            }
            if mag > T::zero() {
                worst = worst.max(sum.norm() / mag);
            }
        }
    }
    worst
}

/// Poles of `G^{μν}` in the complex `p⁰` plane: the zeros of
/// `p⁰ − iτ(p⁰)² + iD𝐩²` and, for `τ > 0`, the relaxation pole `−i/τ`.
pub fn fluid_poles<T: Real>(params: &FluidParams<T>, p: [T; 3]) -> Vec<Complex<T>> {
    let FluidParams { d, tau, .. } = *params;
    let p2 = p.iter().fold(T::zero(), |s, x| s + *x * *x);
    if tau == T::zero() {
        return vec![Complex::new(T::zero(), -d * p2)];
    }
    let one = Complex::new(T::one(), T::zero());
    let a = Complex::new(T::zero(), -tau);
    let s = (one - Complex::new(T::lit(4.0) * tau * d * p2, T::zero())).sqrt();
    // The larger root from the quadratic formula, the smaller from the product c/a.
    let big = (-one - s) / (a * T::lit(2.0));
    let product = Complex::new(-d * p2 / tau, T::zero());
    let small = if big.norm() > T::zero() { product / big } else { Complex::new(T::zero(), T::zero()) };
    vec![small, big, Complex::new(T::zero(), -tau.recip())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trapezoid_ft(f: impl Fn(f64) -> f64, omega: f64, t_max: f64, n: usize) -> Complex<f64> {
        let h = 2.0 * t_max / n as f64;
        let mut acc = Complex::new(0.0, 0.0);
        for k in 0..=n {
            let t = -t_max + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += Complex::from_polar(w * f(t), omega * t);
        }
        acc * h
    }

    #[test]
    fn rc_limits() {
        for &(r, c) in &[(1.0, 1.0), (2.0, 3.0), (0.7, 1e-3), (13.0, 0.1)] {
            assert_eq!(rc_frequency(r, c, 0.0), Complex::new(c, 0.0));
            assert_eq!(rc_time(r, c, -1e-9), 0.0);
            let pole = rc_pole(r, c);
            // 1/χ vanishes at the pole.
            let inv = Complex::new(0.0, -r) * pole + 1.0 / c;
            assert!(inv.norm() < 1e-12 / c);
        }
        assert!(rc_response(0.0, 1.0, &Domain::Time(vec![1.0])).is_err());
    }

    #[test]
    fn rc_fourier_transform_matches() {
        let (r, c) = (1.5, 0.8);
        let ws: Vec<f64> = (0..=40).map(|k| -5.0 + 0.25 * k as f64).collect();
        let direct = rc_response(r, c, &Domain::Frequency(ws.clone())).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (w, d) in ws.iter().zip(&direct) {
            let ft = trapezoid_ft(|t| rc_time(r, c, t), *w, 40.0, 160_000);
            num += (ft - d).norm_sqr();
            den += d.norm_sqr();
        }
        assert!((num / den).sqrt() < 1e-4, "{}", (num / den).sqrt());
    }

    #[test]
    fn oscillator_initial_conditions_and_undamped_limit() {
        let h = 1e-7;
        let x0 = oscillator_time(2.0f64, 0.3, 0.0).unwrap();
        let slope = oscillator_time(2.0f64, 0.3, h).unwrap() / h;
        assert_eq!(x0, 0.0);
        assert!((slope - 1.0).abs() < 1e-6);
        for t in [0.1f64, 1.0, 7.3] {
            let x = oscillator_time(1.7f64, 0.0, t).unwrap();
            assert!((x - (1.7 * t).sin() / 1.7).abs() < 1e-15);
        }
        assert_eq!(oscillator_time(1.0, 0.2, -0.5).unwrap(), 0.0);
    }

    #[test]
    fn oscillator_poles_zero_the_denominator() {
        for &(w0, z) in &[(1.0f64, 0.1f64), (2.5, 0.5), (0.3, 0.99)] {
            for pole in oscillator_poles(w0, z).unwrap() {
                assert!(pole.im < 0.0);
                let den = w0 * w0 - pole * pole - Complex::new(0.0, 2.0 * z * w0) * pole;
                assert!(den.norm() < 1e-12 * w0 * w0);
            }
        }
        assert!(matches!(oscillator_poles(1.0, 1.0), Err(Error::OverdampedUnsupported { .. })));
        assert!(oscillator_frequency(1.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn oscillator_fourier_transform_matches() {
        let (w0, z) = (1.2, 0.25);
        let ws: Vec<f64> = (0..=30).map(|k| -3.0 + 0.2 * k as f64).collect();
        let direct = oscillator_response(w0, z, &Domain::Frequency(ws.clone())).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (w, d) in ws.iter().zip(&direct) {
            let ft = trapezoid_ft(|t| oscillator_time(w0, z, t).unwrap(), *w, 80.0, 160_000);
            num += (ft - d).norm_sqr();
            den += d.norm_sqr();
        }
        assert!((num / den).sqrt() < 1e-4, "{}", (num / den).sqrt());
    }

    #[test]
    fn fluid_static_limit() {
        let params = FluidParams::new(1.0, 0.5, 0.1).unwrap();
        for p in [[1.0, 0.0, 0.0], [0.3, -0.2, 0.9], [1e-3, 0.0, 2e-3]] {
            let g = fluid_current_response(&params, Complex::new(0.0, 0.0), p).unwrap();
            assert_eq!(g[0][0], Complex::new(2.0, 0.0));
            for mu in 0..4 {
                for nu in 0..4 {
                    if mu + nu > 0 {
                        assert_eq!(g[mu][nu].norm(), 0.0);
                    }
                }
            }
        }
        assert!(matches!(
            fluid_current_response(&params, Complex::new(0.0, 0.0), [0.0; 3]),
            Err(Error::PoleHit)
        ));
    }

    #[test]
    fn fluid_ward_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let params = FluidParams::new(rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0), rng.gen_range(0.0..2.0))
                .unwrap();
            let p0 = Complex::new(rng.gen_range(-4.0..4.0), rng.gen_range(0.0..1.0));
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let g = fluid_current_response(&params, p0, p).unwrap();
            assert!(fluid_ward_residual(&g, p0, p) <= 1e-12);
        }
    }

    #[test]
    fn fluid_poles_lie_below_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let params =
                FluidParams::new(1.0, rng.gen_range(0.01..3.0), rng.gen_range(0.01..3.0)).unwrap();
            let p = [rng.gen_range(0.1..2.0), rng.gen_range(-2.0..2.0), 0.0];
            let p2: f64 = p.iter().map(|x| x * x).sum();
            let poles = fluid_poles(&params, p);
            assert_eq!(poles.len(), 3);
            for (k, z) in poles.iter().enumerate() {
                assert!(z.im < 0.0, "{z}");
                if k < 2 {
                    let den = *z - Complex::new(0.0, params.tau) * z * z + Complex::new(0.0, params.d * p2);
                    assert!(den.norm() < 1e-10 * (1.0 + z.norm_sqr()), "{den}");
                }
            }
        }
        let diffusive = fluid_poles(&FluidParams::new(1.0, 0.5, 0.0).unwrap(), [2.0, 0.0, 0.0]);
        assert_eq!(diffusive, vec![Complex::new(0.0, -2.0)]);
    }

    #[test]
    fn rejects_negative_parameters() {
        assert!(FluidParams::new(-1.0, 0.5, 0.1).is_err());
        assert!(FluidParams::new(1.0, 0.0, 0.1).unwrap().susceptibility().is_err());
    }
}
