//! The quadratic delayed kernel as time derivatives of the three-point BKM
//! correlator. The mixed second derivative alone misses the jump of the
//! imaginary-time-ordered product where the two sources meet; with that
//! term restored the identity holds pointwise:
//!
//! `Δ^𝓡(s₁, s₂) = β²∂_{t′}∂_{t″}⟨A;B(t′);C(t″)⟩ − β∂_{t_e}⟨A; i[X(t_e), Y(t_l)]⟩`
//!
//! where `X` is the source acting earlier (time `t_e`) and `Y` the later one.

use qresponse::correlators::{heisenberg, quadratic_response};
use qresponse::model::build_transverse_ising;
use qresponse::thermal::{bkm_inner, bkm_three, gibbs};
use qresponse::{Matrix, C64};

const H: f64 = 1e-3;

struct Pieces {
    kernel: f64,
    mixed: f64,
    jump: f64,
}

fn pieces(beta: f64, m: usize, n: usize, k: usize, s1: f64, s2: f64) -> Pieces {
    let spec = build_transverse_ising(2, 1.0, 0.6).unwrap();
    let st = gibbs(&spec, beta, 0.0).unwrap();
    let q = quadratic_response(&st, &spec, m, n, k).unwrap();
    let (a, b, c) = (spec.phi(m).unwrap().matrix(), spec.phi(n).unwrap().matrix(), spec.phi(k).unwrap().matrix());
    let g = |tp: f64, tpp: f64| bkm_three(&st, a, &heisenberg(&st, b, tp), &heisenberg(&st, c, tpp));
    let (tp, tpp) = (-s1, -s2);
    let mixed = (g(tp + H, tpp + H) - g(tp + H, tpp - H) - g(tp - H, tpp + H) + g(tp - H, tpp - H)) / (4.0 * H * H);
    let (early, late, te, tl) = if tp < tpp { (b, c, tp, tpp) } else { (c, b, tpp, tp) };
    let j = |t: f64| {
        let (x, y): (Matrix, Matrix) = (heisenberg(&st, early, t), heisenberg(&st, late, tl));
        let comm = &(&x * &y) - &(&y * &x);
        bkm_inner(&st, a, &comm.scale(C64::i()))
    };
    Pieces { kernel: q.delayed_at(s1, s2), mixed: beta * beta * mixed, jump: beta * (j(te + H) - j(te - H)) / (2.0 * H) }
}

#[test]
fn restored_identity_holds_in_both_orderings() {
    for &(m, n, k) in &[(0, 0, 0), (2, 3, 1), (1, 1, 0), (3, 2, 2)] {
        for &(s1, s2) in &[(0.7, 0.3), (1.5, 0.4), (0.3, 1.1), (2.0, 1.2)] {
            let p = pieces(0.9, m, n, k, s1, s2);
            let err = (p.kernel - (p.mixed - p.jump)).abs();
            assert!(err <= 1e-5 * p.kernel.abs().max(1.0), "({m},{n},{k}) at ({s1},{s2}): {err:e}");
        }
    }
}

#[test]
fn mixed_derivative_alone_is_not_the_kernel() {
    let p = pieces(0.9, 0, 0, 0, 0.7, 0.3);
    assert!(p.jump.abs() > 0.1);
    assert!((p.kernel - p.mixed).abs() > 0.1);
}

#[test]
fn jump_vanishes_for_sources_on_decoupled_sites() {
    // Without the bond the sites evolve independently, so the two sources commute at all times.
    let spec = build_transverse_ising(2, 0.0, 0.6).unwrap();
    let st = gibbs(&spec, 0.9, 0.0).unwrap();
    let (b, c) = (spec.phi(2).unwrap().matrix(), spec.phi(3).unwrap().matrix());
    let x = heisenberg(&st, b, -0.4);
    let y = heisenberg(&st, c, -1.3);
    assert!((&(&x * &y) - &(&y * &x)).max_abs() < 1e-12);
}
