//! The two evaluations of the Suzuki term differ by the part of the diagonal
//! of a source that is not a linear function of the `H − μN` and `N` levels.

use qresponse::model::SystemSpec;
use qresponse::thermal::{suzuki_limit_at, ThermalState};
use qresponse::{Matrix, Operator, C64};

fn real_op(entries: [[f64; 4]; 4]) -> Operator {
    Operator::symmetrized(&Matrix::from_fn(4, |j, k| C64::new(entries[j][k], 0.0)))
}

/// Number-conserving four-level system with a non-degenerate spectrum.
fn system() -> SystemSpec {
    let h0 = real_op([[0.0, 0.0, 0.0, 0.0], [0.0, 0.7, 0.35, 0.0], [0.0, 0.35, 1.9, 0.0], [0.0, 0.0, 0.0, 3.3]]);
    let n = real_op([[0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 2.0]]);
    let a = real_op([[0.4, 0.1, -0.3, 0.2], [0.1, -0.8, 0.5, 0.0], [-0.3, 0.5, 1.1, -0.6], [0.2, 0.0, -0.6, 0.3]]);
    let b = real_op([[1.0, 0.0, 0.0, 0.0], [0.0, 0.2, 0.3, 0.0], [0.0, 0.3, -0.5, 0.0], [0.0, 0.0, 0.0, 0.9]]);
    SystemSpec::builder(h0).number(n).source("a", a, 0.0).source("b", b, 0.0).with_quadratic_table().with_cubic_table().build().unwrap()
}

/// Weighted least-squares residual `Σ p (d − fit)²` of `d` on the basis `{1, e, n}`.
fn residual_variance(p: &[f64], e: &[f64], n: &[f64], d: &[f64]) -> f64 {
    let basis = |j: usize| [1.0, e[j], n[j]];
    let mut g = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for j in 0..p.len() {
        let x = basis(j);
        for a in 0..3 {
            r[a] += p[j] * x[a] * d[j];
            for b in 0..3 {
                g[a][b] += p[j] * x[a] * x[b];
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &k| g[i][c].abs().total_cmp(&g[k][c].abs())).unwrap();
        g.swap(c, piv);
        r.swap(c, piv);
        for i in c + 1..3 {
            let f = g[i][c] / g[c][c];
            for k in c..3 {
                g[i][k] -= f * g[c][k];
            }
            r[i] -= f * r[c];
        }
    }
    let mut coef = [0.0; 3];
    for c in (0..3).rev() {
        coef[c] = (r[c] - (c + 1..3).map(|k| g[c][k] * coef[k]).sum::<f64>()) / g[c][c];
    }
    (0..p.len())
        .map(|j| {
            let x = basis(j);
            let fit: f64 = (0..3).map(|a| coef[a] * x[a]).sum();
            p[j] * (d[j] - fit).powi(2)
        })
        .sum()
}

#[test]
fn route_gap_is_regression_residual() {
    let spec = system();
    for &(beta, mu) in &[(1.0, 0.0), (0.6, 0.4), (2.0, -0.3)] {
        let st = ThermalState::at_sources(&spec, spec.j_init(), beta, mu).unwrap();
        let l = suzuki_limit_at(&st, &spec).unwrap();
        let e = st.omegas();
        let nb = st.to_eigenbasis(spec.number().matrix());
        let nd: Vec<f64> = (0..4).map(|j| nb[(j, j)].re).collect();
        for m in 0..2 {
            let ph = st.to_eigenbasis(spec.phi(m).unwrap().matrix());
            let d: Vec<f64> = (0..4).map(|j| ph[(j, j)].re).collect();
            let want = beta * residual_variance(&st.weights, &e, &nd, &d);
            let gap = l.cesaro[m][m] - l.closed_form[m][m];
            assert!((gap - want).abs() < 1e-10, "beta {beta}, mu {mu}, source {m}: {gap} vs {want}");
        }
        assert!(l.cesaro[0][0] - l.closed_form[0][0] > 1e-4);
    }
}
