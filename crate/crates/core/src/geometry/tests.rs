use super::*;
use approx::{assert_abs_diff_eq, assert_relative_eq};
use rand::Rng;

use crate::rng::{domains, stream};
use crate::symkernel::{sym_basis, unvech, vech, vech_len};

fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
    let v: Vec<f64> = (0..vech_len(n)).map(|_| rng.random_range(-0.8..0.8)).collect();
    unvech(n, &v).unwrap()
}

fn random_spd(n: usize, rng: &mut impl Rng) -> SpdMatrix {
    sym_exp(&random_sym(n, rng).scaled(1.5)).unwrap()
}

fn random_invertible(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        if m.determinant().abs() > 0.1 {
            return m;
        }
    }
}

fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = random_invertible(n, rng);
    nalgebra::QR::new(m).q()
}

const METRICS: [MetricKind; 3] = [
    MetricKind::Euclidean,
    MetricKind::LogEuclidean,
    MetricKind::AffineInvariant,
];

#[test]
fn metric_inner_euclidean_is_frobenius() {
    let mut rng = stream(50, domains::SIM, 0, 0);
    let p = random_spd(3, &mut rng);
    let s = TangentVector::new(p.clone(), random_sym(3, &mut rng)).unwrap();
    let g = metric_inner(MetricKind::Euclidean, &p, &s, &s).unwrap();
    assert_relative_eq!(g, s.vec().frobenius_inner(s.vec()), epsilon = 1e-14);
}

#[test]
fn metric_inner_ai_at_identity_is_frobenius() {
    let mut rng = stream(51, domains::SIM, 0, 0);
    let p = SpdMatrix::identity(3);
    let s1 = TangentVector::new(p.clone(), random_sym(3, &mut rng)).unwrap();
    let s2 = TangentVector::new(p.clone(), random_sym(3, &mut rng)).unwrap();
    let g = metric_inner(MetricKind::AffineInvariant, &p, &s1, &s2).unwrap();
    assert_relative_eq!(g, s1.vec().frobenius_inner(s2.vec()), epsilon = 1e-12);
}

#[test]
fn metric_inner_ai_congruence_invariance() {
    let mut rng = stream(52, domains::SIM, 0, 0);
    for _ in 0..50 {
        let p = random_spd(2, &mut rng);
        let s1 = random_sym(2, &mut rng);
        let s2 = random_sym(2, &mut rng);
        let r = random_invertible(2, &mut rng);
        let g = metric_inner(
            MetricKind::AffineInvariant,
            &p,
            &TangentVector::new(p.clone(), s1.clone()).unwrap(),
            &TangentVector::new(p.clone(), s2.clone()).unwrap(),
        )
        .unwrap();
        let rp = SpdMatrix::try_new(star(&r, p.as_matrix())).unwrap();
        let g2 = metric_inner(
            MetricKind::AffineInvariant,
            &rp,
            &TangentVector::new(rp.clone(), star(&r, s1.as_matrix())).unwrap(),
            &TangentVector::new(rp.clone(), star(&r, s2.as_matrix())).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(g, g2, epsilon = 1e-9 * (1.0 + g.abs()));
    }
}

#[test]
fn metric_inner_rejects_base_mismatch() {
    let mut rng = stream(53, domains::SIM, 0, 0);
    let p = random_spd(2, &mut rng);
    let q = random_spd(2, &mut rng);
    let s = TangentVector::new(q, random_sym(2, &mut rng)).unwrap();
    let s2 = TangentVector::new(p.clone(), random_sym(2, &mut rng)).unwrap();
    assert!(matches!(
        metric_inner(MetricKind::Euclidean, &p, &s, &s2),
        Err(Error::Contract(_))
    ));
}

#[test]
fn exp_map_of_zero_is_base() {
    let mut rng = stream(54, domains::SIM, 0, 0);
    let p = random_spd(3, &mut rng);
    for metric in METRICS {
        let out = exp_map(metric, &TangentVector::zero(p.clone())).unwrap();
        assert_relative_eq!(out.as_matrix(), p.as_matrix(), epsilon = 1e-12);
    }
}

#[test]
fn exp_map_ai_at_identity_is_sym_exp() {
    let mut rng = stream(55, domains::SIM, 0, 0);
    let s = random_sym(3, &mut rng);
    let out = exp_map(
        MetricKind::AffineInvariant,
        &TangentVector::new(SpdMatrix::identity(3), s.clone()).unwrap(),
    )
    .unwrap();
    let expect = sym_exp(&s).unwrap();
    assert_relative_eq!(out.as_matrix(), expect.as_matrix(), epsilon = 1e-12);
}

#[test]
fn exp_map_euclidean_is_elementwise_sum() {
    let mut rng = stream(56, domains::SIM, 0, 0);
    let p = random_spd(2, &mut rng);
    let s = random_sym(2, &mut rng).scaled(0.05);
    let out = exp_map(
        MetricKind::Euclidean,
        &TangentVector::new(p.clone(), s.clone()).unwrap(),
    )
    .unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(out.get(i, j), p.get(i, j) + s.get(i, j));
        }
    }
}

#[test]
fn exp_map_euclidean_boundary_failure() {
    let p = SpdMatrix::from_row_slice(2, &[0.1, 0.0, 0.0, 0.1]).unwrap();
    let s = SymMatrix::from_row_slice(2, &[-1.0, 0.0, 0.0, 0.0]).unwrap();
    let err = exp_map(
        MetricKind::Euclidean,
        &TangentVector::new(p, s).unwrap(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Boundary { .. }), "got {err}");
}

#[test]
fn log_map_of_base_is_zero_and_round_trips() {
    let mut rng = stream(57, domains::SIM, 0, 0);
    for metric in METRICS {
        for n in [2usize, 3, 5] {
            let p = random_spd(n, &mut rng);
            let z = log_map(metric, &p, &p).unwrap();
            assert_abs_diff_eq!(z.vec().frobenius_norm(), 0.0, epsilon = 1e-10);
            for _ in 0..30 {
                let q = random_spd(n, &mut rng);
                let lv = match log_map(metric, &p, &q) {
                    Ok(lv) => lv,
                    // Euclidean can fail only on construction of exp, not log
                    Err(e) => panic!("log_map failed: {e}"),
                };
                let back = exp_map(metric, &lv).unwrap();
                let rel = (back.as_matrix() - q.as_matrix()).norm() / q.as_matrix().norm();
                assert!(rel < 1e-8, "round trip off by {rel:.2e} for {metric} n = {n}");
            }
        }
    }
}

#[test]
fn log_map_ai_at_identity_is_sym_log() {
    let mut rng = stream(58, domains::SIM, 0, 0);
    let q = random_spd(3, &mut rng);
    let lv = log_map(MetricKind::AffineInvariant, &SpdMatrix::identity(3), &q).unwrap();
    assert_relative_eq!(
        lv.vec().as_matrix(),
        sym_log(&q).unwrap().as_matrix(),
        epsilon = 1e-11
    );
}

#[test]
fn log_map_le_is_dexp_of_log_difference() {
    let mut rng = stream(59, domains::SIM, 0, 0);
    let p = random_spd(3, &mut rng);
    let q = random_spd(3, &mut rng);
    let lv = log_map(MetricKind::LogEuclidean, &p, &q).unwrap();
    let diff = &sym_log(&q).unwrap() - &sym_log(&p).unwrap();
    let expect = dexp(&sym_log(&p).unwrap(), &diff).unwrap();
    assert_relative_eq!(lv.vec().as_matrix(), expect.as_matrix(), epsilon = 1e-12);
}

#[test]
fn geodesic_endpoints() {
    let mut rng = stream(60, domains::SIM, 0, 0);
    for metric in METRICS {
        let p = random_spd(3, &mut rng);
        let q = random_spd(3, &mut rng);
        let g0 = geodesic(metric, &p, &q, 0.0).unwrap();
        let g1 = geodesic(metric, &p, &q, 1.0).unwrap();
        assert_relative_eq!(g0.as_matrix(), p.as_matrix(), epsilon = 1e-9);
        assert_relative_eq!(g1.as_matrix(), q.as_matrix(), epsilon = 1e-9);
    }
}

// Geodesic endpoints P0, P1 with det 0.07 and 0.01: LE and AI midpoints both
// interpolate the determinant geometrically, the Euclidean midpoint swells.
#[test]
fn geodesic_determinant_interpolation_and_swelling() {
    let p0 = SpdMatrix::from_row_slice(2, &[0.4, 0.3, 0.3, 0.4]).unwrap();
    let p1 = SpdMatrix::from_row_slice(2, &[1.0, 0.1, 0.1, 0.02]).unwrap();
    assert_relative_eq!(p0.det(), 0.07, epsilon = 1e-12);
    assert_relative_eq!(p1.det(), 0.01, epsilon = 1e-12);

    let expect_mid = (0.07_f64 * 0.01).sqrt();
    for metric in [MetricKind::LogEuclidean, MetricKind::AffineInvariant] {
        let mid = geodesic(metric, &p0, &p1, 0.5).unwrap();
        assert_relative_eq!(mid.det(), expect_mid, epsilon = 1e-9);
        for t in [0.1, 0.3, 0.7, 0.9] {
            let g = geodesic(metric, &p0, &p1, t).unwrap();
            assert_relative_eq!(g.det(), 0.07_f64.powf(1.0 - t) * 0.01_f64.powf(t), epsilon = 1e-9);
        }
    }

    let mid = geodesic(MetricKind::Euclidean, &p0, &p1, 0.5).unwrap();
    assert_relative_eq!(mid.det(), 0.107, epsilon = 1e-12);
    assert!(mid.det() > 0.07_f64.max(0.01));
}

#[test]
fn dist2_examples_and_invariances() {
    let mut rng = stream(61, domains::SIM, 0, 0);
    for metric in METRICS {
        let p = random_spd(2, &mut rng);
        assert_abs_diff_eq!(dist2(metric, &p, &p).unwrap(), 0.0, epsilon = 1e-12);
    }

    // LE with diagonal inputs: logs are diag(2, 0) so d^2 = 4
    let p = SpdMatrix::identity(2);
    let q = SpdMatrix::from_row_slice(2, &[2.0_f64.exp().powi(1), 0.0, 0.0, 1.0]).unwrap();
    assert_relative_eq!(dist2(MetricKind::LogEuclidean, &p, &q).unwrap(), 4.0, epsilon = 1e-12);

    // AI congruence invariance under 50 random invertible R
    for _ in 0..50 {
        let p = random_spd(2, &mut rng);
        let q = random_spd(2, &mut rng);
        let r = random_invertible(2, &mut rng);
        let d = dist2(MetricKind::AffineInvariant, &p, &q).unwrap();
        let d2 = dist2(
            MetricKind::AffineInvariant,
            &SpdMatrix::try_new(star(&r, p.as_matrix())).unwrap(),
            &SpdMatrix::try_new(star(&r, q.as_matrix())).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(d, d2, epsilon = 1e-8 * (1.0 + d));
    }

    // inversion invariance (LE and AI) and LE similarity invariance
    for _ in 0..20 {
        let p = random_spd(3, &mut rng);
        let q = random_spd(3, &mut rng);
        let p_inv = SpdMatrix::try_new(
            SymMatrix::from_matrix(p.as_matrix().clone().try_inverse().unwrap()).unwrap(),
        )
        .unwrap();
        let q_inv = SpdMatrix::try_new(
            SymMatrix::from_matrix(q.as_matrix().clone().try_inverse().unwrap()).unwrap(),
        )
        .unwrap();
        for metric in [MetricKind::LogEuclidean, MetricKind::AffineInvariant] {
            let d = dist2(metric, &p, &q).unwrap();
            let di = dist2(metric, &p_inv, &q_inv).unwrap();
            assert_abs_diff_eq!(d, di, epsilon = 1e-9 * (1.0 + d));
        }
        let r = random_orthogonal(3, &mut rng);
        let d = dist2(MetricKind::LogEuclidean, &p, &q).unwrap();
        let ds = dist2(
            MetricKind::LogEuclidean,
            &SpdMatrix::try_new(star(&r.transpose(), p.as_matrix())).unwrap(),
            &SpdMatrix::try_new(star(&r.transpose(), q.as_matrix())).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(d, ds, epsilon = 1e-9 * (1.0 + d));
    }
}

#[test]
fn frames_at_identity_reduce_to_basis() {
    let p = SpdMatrix::identity(3);
    let basis = sym_basis(3);
    for metric in [MetricKind::LogEuclidean, MetricKind::AffineInvariant] {
        let f = frame(metric, &p).unwrap();
        for (e, s) in f.elements().iter().zip(basis.elements()) {
            assert_relative_eq!(e.vec().as_matrix(), s.as_matrix(), epsilon = 1e-12);
        }
    }
}

#[test]
fn frame_ai_diagonal_example() {
    // P = diag(4, 1): E_1 = P^{1/2} S_1 P^{1/2} = diag(4, 0)
    let p = SpdMatrix::from_row_slice(2, &[4.0, 0.0, 0.0, 1.0]).unwrap();
    let f = frame(MetricKind::AffineInvariant, &p).unwrap();
    let e1 = f.element(0).vec();
    assert_relative_eq!(e1.get(0, 0), 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(e1.get(0, 1), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(e1.get(1, 1), 0.0, epsilon = 1e-14);
}

#[test]
fn frame_gram_matrix_is_identity() {
    let mut rng = stream(62, domains::SIM, 0, 0);
    for metric in METRICS {
        for n in [2usize, 3] {
            let p = random_spd(n, &mut rng);
            let f = frame(metric, &p).unwrap();
            for i in 0..f.len() {
                for j in 0..f.len() {
                    let g = metric_inner(metric, &p, f.element(i), f.element(j)).unwrap();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(g, expect, epsilon = 1e-10);
                }
            }
        }
    }
}

#[test]
fn frame_apply_matches_materialized_frame() {
    let mut rng = stream(63, domains::SIM, 0, 0);
    for metric in METRICS {
        let p = random_spd(3, &mut rng);
        let f = frame(metric, &p).unwrap();
        let coeffs: Vec<f64> = (0..f.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = frame_apply(metric, &p, &coeffs).unwrap();
        let mut slow = SymMatrix::zeros(3);
        for (c, e) in coeffs.iter().zip(f.elements()) {
            slow = &slow + &e.vec().scaled(*c);
        }
        assert_relative_eq!(fast.vec().as_matrix(), slow.as_matrix(), epsilon = 1e-12);
    }
}

#[test]
fn grad_dist2_zero_at_coincident_points_and_le_closed_form() {
    let mut rng = stream(64, domains::SIM, 0, 0);
    let p = random_spd(3, &mut rng);
    for metric in METRICS {
        let g = grad_dist2(metric, &p, &p).unwrap();
        assert_abs_diff_eq!(g.vec().frobenius_norm(), 0.0, epsilon = 1e-10);
    }
    let q = random_spd(3, &mut rng);
    let g = grad_dist2(MetricKind::LogEuclidean, &p, &q).unwrap();
    let diff = &sym_log(&q).unwrap() - &sym_log(&p).unwrap();
    let expect = dexp(&sym_log(&p).unwrap(), &diff).unwrap().scaled(-2.0);
    assert_relative_eq!(g.vec().as_matrix(), expect.as_matrix(), epsilon = 1e-12);
}

#[test]
fn grad_dist2_matches_finite_differences() {
    let mut rng = stream(65, domains::SIM, 0, 0);
    let eps = 1e-5;
    for metric in [MetricKind::LogEuclidean, MetricKind::AffineInvariant] {
        for _ in 0..25 {
            let p = random_spd(2, &mut rng);
            let q = random_spd(2, &mut rng);
            let v_raw = random_sym(2, &mut rng);
            let v = TangentVector::new(p.clone(), v_raw).unwrap();
            let norm = v.norm2(metric).unwrap().sqrt();
            let v = v.scaled(1.0 / norm);
            let grad = grad_dist2(metric, &p, &q).unwrap();
            let plus = exp_map(metric, &v.scaled(eps)).unwrap();
            let minus = exp_map(metric, &v.scaled(-eps)).unwrap();
            let fd = (dist2(metric, &plus, &q).unwrap() - dist2(metric, &minus, &q).unwrap())
                / (2.0 * eps);
            let inner = metric_inner(metric, &p, &grad, &v).unwrap();
            assert_abs_diff_eq!(fd, inner, epsilon = 1e-5 * (1.0 + inner.abs()));
        }
    }
}

#[test]
fn christoffel_spot_values_and_symmetry() {
    let gamma = christoffel_ai(2);
    // hand-evaluated from the closed form with the n = 2 basis
    assert_abs_diff_eq!(gamma.get(0, 0, 0), -1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(gamma.get(2, 2, 0), -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(gamma.get(2, 2, 1), -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(gamma.get(2, 2, 2), 0.0, epsilon = 1e-15);
    for n in [2usize, 3] {
        let g = christoffel_ai(n);
        let d = g.dim();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    assert_eq!(g.get(i, j, k), g.get(j, i, k));
                }
            }
        }
    }
}

#[test]
fn christoffel_contracted_matrix_n2() {
    // Gamma = sum_{i,r} Gamma_ii^r S_r = -(3/2) I for n = 2
    let gamma = christoffel_ai(2);
    let m = gamma.contracted();
    assert_relative_eq!(
        m.as_matrix(),
        &(DMatrix::identity(2, 2) * -1.5),
        epsilon = 1e-14
    );
}

#[test]
fn chart_h_examples_and_isometry() {
    let mut rng = stream(66, domains::SIM, 0, 0);
    assert!(chart_h(&SpdMatrix::identity(3))
        .unwrap()
        .iter()
        .all(|x| x.abs() < 1e-14));

    let basis = sym_basis(2);
    for j in 0..basis.len() {
        let p = sym_exp(basis.element(j)).unwrap();
        let h = chart_h(&p).unwrap();
        for (k, &x) in h.iter().enumerate() {
            let expect = if k == j { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(x, expect, epsilon = 1e-12);
        }
    }

    for _ in 0..100 {
        let p = random_spd(2, &mut rng);
        let q = random_spd(2, &mut rng);
        let hp = chart_h(&p).unwrap();
        let hq = chart_h(&q).unwrap();
        let euclid: f64 = hp.iter().zip(&hq).map(|(a, b)| (a - b) * (a - b)).sum();
        let d = dist2(MetricKind::LogEuclidean, &p, &q).unwrap();
        assert_abs_diff_eq!(euclid, d, epsilon = 1e-9 * (1.0 + d));

        let back = chart_h_inv(&hp).unwrap();
        assert_relative_eq!(back.as_matrix(), p.as_matrix(), epsilon = 1e-10);
    }
}

#[test]
fn ai_metric_matrix_identity_and_inverse() {
    let (g, g_inv) = ai_metric_matrix(&SpdMatrix::identity(2)).unwrap();
    let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0]));
    assert_relative_eq!(g, expect, epsilon = 1e-14);

    let mut rng = stream(67, domains::SIM, 0, 0);
    for n in [2usize, 3] {
        let p = random_spd(n, &mut rng);
        let (g, g_inv) = ai_metric_matrix(&p).unwrap();
        let d = vech_len(n);
        assert_relative_eq!(&g * &g_inv, DMatrix::identity(d, d), epsilon = 1e-9);
    }
    let _ = g_inv;
}

#[test]
fn ai_metric_matrix_reconciles_with_metric_inner() {
    // nu-coordinate quadratic form nu(S)ᵀ G(P) nu(S) against the basis-free
    // inner product of the AI metric; pins the weight-2 convention on
    // off-diagonal entries.
    let mut rng = stream(68, domains::SIM, 0, 0);
    for _ in 0..50 {
        let p = random_spd(2, &mut rng);
        let s = random_sym(2, &mut rng);
        let (g, _) = ai_metric_matrix(&p).unwrap();
        let nu = nalgebra::DVector::from_vec(vech(&s));
        let quad = (nu.transpose() * &g * &nu)[(0, 0)];
        let inner = metric_inner(
            MetricKind::AffineInvariant,
            &p,
            &TangentVector::new(p.clone(), s.clone()).unwrap(),
            &TangentVector::new(p.clone(), s.clone()).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(quad, inner, epsilon = 1e-9 * (1.0 + inner));
    }
}

#[test]
fn ai_hessian_of_dist2_along_unit_geodesics_is_two() {
    let mut rng = stream(69, domains::SIM, 0, 0);
    let metric = MetricKind::AffineInvariant;
    for _ in 0..10 {
        let p = random_spd(2, &mut rng);
        let q = random_spd(2, &mut rng);
        let v_raw = random_sym(2, &mut rng);
        let v = TangentVector::new(p.clone(), v_raw).unwrap();
        let v = v.scaled(1.0 / v.norm2(metric).unwrap().sqrt());
        let h = 1e-3;
        let f = |s: f64| -> f64 {
            let x = exp_map(metric, &v.scaled(s)).unwrap();
            dist2(metric, &x, &q).unwrap()
        };
        let second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert_abs_diff_eq!(second, 2.0, epsilon = 1e-4);
    }
}

#[test]
fn matrix_dim_recovery() {
    assert_eq!(matrix_dim_for(1).unwrap(), 1);
    assert_eq!(matrix_dim_for(3).unwrap(), 2);
    assert_eq!(matrix_dim_for(6).unwrap(), 3);
    assert_eq!(matrix_dim_for(15).unwrap(), 5);
    assert!(matrix_dim_for(4).is_err());
}
