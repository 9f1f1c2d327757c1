//! Divided differences of `exp`, i.e. integrals of `exp` over simplices
//! (Hermite-Genocchi). These are the eigenbasis kernels of the λ-integrated
//! correlators.

use crate::scalar::Real;

/// Spread below which the series expansions are used.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// `sinh(h)/h`.
pub fn sinhc<T: Real>(h: T) -> T {
    if h.abs() < T::lit(SERIES_THRESHOLD) {
        let h2 = h * h;
        T::one() + h2 / T::lit(6.0) + h2 * h2 / T::lit(120.0)
    } else {
        h.sinh() / h
    }
}

/// `exp[x, y] = ∫₀¹ e^{s x + (1-s) y} ds`.
pub fn exp_dd1<T: Real>(x: T, y: T) -> T {
    let half = T::lit(0.5);
    ((x + y) * half).exp() * sinhc((x - y) * half)
}

/// `exp[x, y, z]`, the integral of `e^{λ₁x + λ₂y + λ₃z}` over the unit 2-simplex.
pub fn exp_dd2<T: Real>(x: T, y: T, z: T) -> T {
    let mut v = [x, y, z];
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite arguments"));
    let [a, b, c] = v;
    if c - a < T::lit(SERIES_THRESHOLD) {
        let m = (a + b + c) / T::lit(3.0);
        let u = [a - m, b - m, c - m];
        // Σ_k h_k(u) / (k+2)!, h_k the complete homogeneous symmetric polynomials
        let mut sum = T::zero();
        let mut fact = T::lit(2.0);
        for k in 0..6 {
            sum = sum + complete_homogeneous(k, &u) / fact;
            fact = fact * T::lit((k + 3) as f64);
        }
        m.exp() * sum
    } else {
        (exp_dd1(b, c) - exp_dd1(a, b)) / (c - a)
    }
}

fn complete_homogeneous<T: Real>(k: usize, u: &[T; 3]) -> T {
    let mut total = T::zero();
    for i in 0..=k {
        for j in 0..=(k - i) {
            let l = k - i - j;
            total = total + u[0].powi(i as i32) * u[1].powi(j as i32) * u[2].powi(l as i32);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint-rule oracle for the simplex integral.
    fn simplex_quadrature(x: f64, y: f64, z: f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        // inner integral over λ₂ + λ₃ = 1 - λ₁ done in closed form
        for i in 0..n {
            let l1 = (i as f64 + 0.5) * h;
            let rest = 1.0 - l1;
            s += rest * (l1 * x).exp() * exp_dd1(rest * y, rest * z);
        }
        s * h
    }

    #[test]
    fn first_difference_limits() {
        assert!((exp_dd1(0.3, 0.3) - 0.3f64.exp()).abs() < 1e-15);
        let (x, y) = (0.7, -1.2);
        let direct = (f64::exp(x) - f64::exp(y)) / (x - y);
        assert!((exp_dd1(x, y) - direct).abs() < 1e-14);
    }

    #[test]
    fn second_difference_coincident() {
        let x = -0.4f64;
        assert!((exp_dd2(x, x, x) - 0.5 * x.exp()).abs() < 1e-15);
    }

    #[test]
    fn second_difference_continuous_across_threshold() {
        let base = 0.2f64;
        for d in [3e-5, 9.9e-5, 1.01e-4, 5e-4] {
            let a = exp_dd2(base, base + d, base + 0.5 * d);
            let b = simplex_quadrature(base, base + d, base + 0.5 * d, 20000);
            assert!((a - b).abs() < 1e-9 * a, "{d}: {a} vs {b}");
        }
    }

    #[test]
    fn second_difference_distinct_points() {
        let (x, y, z) = (0.3f64, -1.1, 2.0);
        let direct = x.exp() / ((x - y) * (x - z)) + y.exp() / ((y - x) * (y - z)) + z.exp() / ((z - x) * (z - y));
        assert!((exp_dd2(x, y, z) - direct).abs() < 1e-13);
        assert!((exp_dd2(z, x, y) - direct).abs() < 1e-13);
    }

    #[test]
    fn repeated_point_is_lambda_weighted_integral() {
        // exp[a,a,b] = ∫ s e^{s a + (1-s) b} ds
        let (a, b) = (0.5f64, -0.8);
        let n = 20000;
        let h = 1.0 / n as f64;
        let q: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                s * (s * a + (1.0 - s) * b).exp()
            })
            .sum::<f64>()
            * h;
        assert!((exp_dd2(a, a, b) - q).abs() < 1e-9);
    }
}
