use num_complex::Complex;

use crate::error::{Error, Result};
use crate::Real;

/// Relative tolerance on grid spacing and symmetry about zero (or 16 ulp, if coarser).
pub const GRID_TOL: f64 = 1e-12;
/// Largest edge-to-peak magnitude ratio tolerated without a leakage warning.
pub const EDGE_RATIO: f64 = 0.05;

/// Complex samples on a uniform grid symmetric about `ω = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid<T: Real> {
    pub omegas: Vec<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(omegas: Vec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), found: values.len() });
        }
        let n = omegas.len();
        if n < 3 {
            return Err(Error::NonUniformGrid);
        }
        let h = (omegas[n - 1] - omegas[0]) / T::from_usize(n - 1).unwrap();
        let tol = T::lit(GRID_TOL).max(T::epsilon() * T::lit(16.0)) * omegas[n - 1].abs().max(h);
        let uniform = h > T::zero() && omegas.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol);
        let symmetric = (0..n).all(|i| (omegas[i] + omegas[n - 1 - i]).abs() <= tol);
        if !uniform || !symmetric {
            return Err(Error::NonUniformGrid);
        }
        Ok(Self { omegas, values })
    }

    /// `n` points evenly spanning `[−half_width, half_width]`, sampled from `f`.
    pub fn sample(half_width: T, n: usize, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        if n < 3 || !(half_width > T::zero()) {
            return Err(Error::NonUniformGrid);
        }
        let h = (half_width + half_width) / T::from_usize(n - 1).unwrap();
        // Mirror the lower half so the grid is symmetric to the last bit.
        let lower = |i: usize| -half_width + T::from_usize(i).unwrap() * h;
        let omegas: Vec<T> = (0..n)
            .map(|i| match (2 * i + 1).cmp(&n) {
                std::cmp::Ordering::Less => lower(i),
                std::cmp::Ordering::Equal => T::zero(),
                std::cmp::Ordering::Greater => -lower(n - 1 - i),
            })
            .collect();
        let values = omegas.iter().map(|&w| f(w)).collect();
        Self::new(omegas, values)
    }

    pub fn spacing(&self) -> T {
        self.omegas[1] - self.omegas[0]
    }

    /// `max |edge value| / max |value|`; zero for an all-zero grid.
    pub fn edge_ratio(&self) -> T {
        let peak = self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()));
        if peak == T::zero() {
            return T::zero();
        }
        let edge = self.values[0].norm().max(self.values[self.values.len() - 1].norm());
        edge / peak
    }
}

/// Fails with [`Error::EdgeLeakage`] when the samples have not decayed at the grid edges.
pub fn check_edges<T: Real>(grid: &FrequencyGrid<T>) -> Result<()> {
    let ratio = grid.edge_ratio();
    if ratio >= T::lit(EDGE_RATIO) {
        Err(Error::EdgeLeakage { ratio: ratio.to_f64().unwrap_or(f64::NAN) })
    } else {
        Ok(())
    }
}

/// Number of inverse powers in the tail model beyond the grid.
const TAIL_TERMS: usize = 3;

/// `(1/π) P∫ f(ω′)/(ω′ − ω) dω′` on the grid for real samples `f`.
///
/// Each sample stands for the cell `[ω_j − h/2, ω_j + h/2]`. The singular
/// point is removed by subtracting `f(ω_i)`; the subtracted pole integrates to
/// a logarithm of the distances to the outer cell edges. Beyond the outer
/// cells each side is continued as `Σ_{p=1..3} c_p/ω^p`, fitted to three
/// samples near that edge, and the continuation is integrated in closed form.
pub fn hilbert<T: Real>(omegas: &[T], f: &[T]) -> Vec<T> {
    let n = omegas.len();
    let h = (omegas[n - 1] - omegas[0]) / T::from_usize(n - 1).unwrap();
    let half = h * T::lit(0.5);
    let (lo, hi) = (omegas[0] - half, omegas[n - 1] + half);
    let deriv = |i: usize| -> T {
        if i == 0 {
            (f[1] - f[0]) / h
        } else if i == n - 1 {
            (f[n - 1] - f[n - 2]) / h
        } else {
            (f[i + 1] - f[i - 1]) / (h + h)
        }
    };
    let upper = tail_fit(omegas, f, hi, |k| n - 1 - k);
    let lower = tail_fit(omegas, f, hi, |k| k);
    (0..n)
        .map(|i| {
            let w = omegas[i];
            let mut acc = T::zero();
            for j in 0..n {
                if j != i {
                    acc = acc + (f[j] - f[i]) / (omegas[j] - w);
                }
            }
            let mut total = h * acc + h * deriv(i) + f[i] * ((hi - w) / (w - lo)).ln();
            // ∫_{−∞}^{lo} f(u)/(u − ω) du = −∫_{hi}^{∞} f(−v)/(v + ω) dv on a symmetric grid.
            for p in 0..TAIL_TERMS {
                total = total + upper[p] * tail_integral(w / hi, p + 1) - lower[p] * tail_integral(-w / hi, p + 1);
            }
            total / T::PI()
        })
        .collect()
}

/// Coefficients `a_p` of `f(±v) ≈ Σ a_p (b/v)^p` for `v ≥ b`, from samples taken
/// through `index(0), index(m), index(2m)`. Zero when the grid is too short.
fn tail_fit<T: Real>(omegas: &[T], f: &[T], b: T, index: impl Fn(usize) -> usize) -> [T; TAIL_TERMS] {
    let n = omegas.len();
    let m = (n / 10).max(1);
    let zero = [T::zero(); TAIL_TERMS];
    if (TAIL_TERMS - 1) * m >= n / 2 {
        return zero;
    }
    let mut rows = [[T::zero(); TAIL_TERMS]; TAIL_TERMS];
    let mut rhs = [T::zero(); TAIL_TERMS];
    for k in 0..TAIL_TERMS {
        let i = index(k * m);
        let x = b / omegas[i].abs();
        let mut pow = x;
        for p in 0..TAIL_TERMS {
            rows[k][p] = pow;
            pow = pow * x;
        }
        rhs[k] = f[i];
    }
    solve3(rows, rhs).unwrap_or(zero)
}

fn det3<T: Real>(a: &[[T; 3]; 3]) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn solve3<T: Real>(a: [[T; 3]; 3], b: [T; 3]) -> Option<[T; 3]> {
    let det = det3(&a);
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    let mut x = [T::zero(); 3];
    for (col, slot) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *slot = det3(&m) / det;
    }
    Some(x)
}

/// `b^p ∫_b^∞ dv/(v^p (v − yb))` for `|y| < 1`, equal to `Σ_k y^k/(k + p)`.
fn tail_integral<T: Real>(y: T, p: usize) -> T {
    if y.abs() < T::lit(0.5) {
        let mut sum = T::zero();
        let mut pow = T::one();
        for k in 0..80 {
            sum = sum + pow / T::from_usize(k + p).unwrap();
            pow = pow * y;
        }
        return sum;
    }
    // −ln(1 − y)/y minus its first p − 1 series terms, divided by y^{p−1}.
    let mut rest = -(-y).ln_1p() / y;
    let mut pow = T::one();
    for k in 0..p - 1 {
        rest = rest - pow / T::from_usize(k + 1).unwrap();
        pow = pow * y;
    }
    rest / pow
}

/// Kramers–Kronig partner: `Re′ = H[Im]`, `Im′ = −H[Re]`.
///
/// Samples that have not decayed at the edges are transformed anyway with a
/// logged warning; call [`check_edges`] first to treat that as an error.
pub fn kramers_kronig<T: Real>(grid: &FrequencyGrid<T>) -> Result<FrequencyGrid<T>> {
    let checked = FrequencyGrid::new(grid.omegas.clone(), grid.values.clone())?;
    if let Err(e) = check_edges(&checked) {
        log::warn!("Kramers-Kronig input: {e}");
    }
    let re: Vec<T> = grid.values.iter().map(|v| v.re).collect();
    let im: Vec<T> = grid.values.iter().map(|v| v.im).collect();
    let re_new = hilbert(&grid.omegas, &im);
    let im_new = hilbert(&grid.omegas, &re);
    let values = re_new.into_iter().zip(im_new).map(|(r, i)| Complex::new(r, -i)).collect();
    Ok(FrequencyGrid { omegas: checked.omegas, values })
}

/// `‖a − b‖₂ / ‖b‖₂`; the absolute norm when `b` vanishes.
pub fn relative_l2<T: Real>(a: &[T], b: &[T]) -> T {
    let num = a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + (*x - *y) * (*x - *y)).sqrt();
    let den = b.iter().fold(T::zero(), |s, y| s + *y * *y).sqrt();
    if den == T::zero() {
        num
    } else {
        num / den
    }
}
