mod common;

use cartan_forge::catalog;
use cartan_forge::connection::{christoffel, contorsion, curvature, strain, ConnectionKind};
use cartan_forge::integrate::{exponential_map, integrate_autoparallel, norm_drift, CurveState, IntegratorConfig};
use cartan_forge::normal::{build_normal_chart, verify_gamma_derivative, NormalChartConfig};
use cartan_forge::tensor::{eta, max_abs};
use cartan_forge::transport::{build_fermi_chart, construct_imf, parallel_transport_frame};
use cartan_forge::Error;
use nalgebra::{DMatrix, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use ConnectionKind::{LeviCivita as LC, RiemannCartan as RC, Teleparallel as TP};

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn sphere_point(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

#[test]
fn minkowski_autoparallels_are_straight() {
    let spec = catalog::load("minkowski").unwrap();
    let start = CurveState::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.2, 0.3, -0.4, 0.1]);
    let curve = integrate_autoparallel(&spec, LC, &start, 3.0, &IntegratorConfig::fixed(0.1)).unwrap();
    for s in &curve {
        for a in 0..4 {
            assert!((s.point[a] - start.point[a] - start.velocity[a] * s.tau).abs() < 1e-13);
        }
    }
    assert_eq!(curve.last().unwrap().tau, 3.0);
    let p = exponential_map(&spec, LC, &[0.0; 4], &[0.3, 0.1, 0.0, 0.0], &cfg()).unwrap();
    assert!((p[0] - 0.3).abs() < 1e-15 && (p[1] - 0.1).abs() < 1e-15);
}

#[test]
fn sphere_great_circle_closes() {
    let spec = catalog::load("sphere2").unwrap();
    // from the equator at a 45 degree bearing; the circle peaks at latitude 45
    let b = FRAC_PI_4;
    let start = CurveState::new(vec![FRAC_PI_2, 0.0], vec![-b.cos(), b.sin()]);
    let curve = integrate_autoparallel(&spec, LC, &start, 2.0 * PI, &cfg()).unwrap();
    let p0 = sphere_point(FRAC_PI_2, 0.0);
    // tangent in R^3: -cos(b) e_theta... e_theta at the equator is -z
    let t0 = Vector3::new(0.0, b.sin(), b.cos());
    let mut worst: f64 = 0.0;
    for s in &curve {
        let oracle = p0 * s.tau.cos() + t0 * s.tau.sin();
        worst = worst.max((sphere_point(s.point[0], s.point[1]) - oracle).norm());
    }
    assert!(worst < 1e-8, "{worst}");
    let end = curve.last().unwrap();
    assert!((end.point[0] - FRAC_PI_2).abs() < 1e-6);
    assert!((end.point[1] - 2.0 * PI).abs() < 1e-6);
}

#[test]
fn exponential_map_toward_the_pole() {
    let spec = catalog::load("sphere2").unwrap();
    // the pole itself is a chart singularity; stop 0.01 short of it
    let p = exponential_map(&spec, LC, &[FRAC_PI_2, 0.3], &[-(FRAC_PI_2 - 0.01), 0.0], &cfg()).unwrap();
    assert!((p[0] - 0.01).abs() < 1e-6);
    assert!((p[1] - 0.3).abs() < 1e-12);
    // through the pole the chart fails and the error reports the last state
    match exponential_map(&spec, LC, &[FRAC_PI_2, 0.3], &[-PI, 0.0], &cfg()) {
        Err(Error::DomainExit { last, .. }) => assert!(last.point[0] < 0.01),
        other => panic!("{other:?}"),
    }
}

#[test]
fn exponential_map_is_homogeneous() {
    let spec = catalog::load("schwarzschild").unwrap();
    let p0 = [0.0, 6.0, 1.0, 0.2];
    let xi = [0.4, 0.2, 0.05, -0.03];
    let curve = integrate_autoparallel(&spec, LC, &CurveState::new(p0.to_vec(), xi.to_vec()), 1.0, &IntegratorConfig::fixed(1.0 / 64.0)).unwrap();
    for s in curve.iter().step_by(8) {
        let scaled: Vec<f64> = xi.iter().map(|v| v * s.tau).collect();
        let q = exponential_map(&spec, LC, &p0, &scaled, &cfg()).unwrap();
        for a in 0..4 {
            assert!((q[a] - s.point[a]).abs() < 1e-8);
        }
    }
}

#[test]
fn loxodromes_are_teleparallel_autoparallels() {
    let spec = catalog::load("sphere2-teleparallel").unwrap();
    let b = FRAC_PI_4;
    // frame components (cos b, sin b): theta-dot = cos b, sin(theta) phi-dot = sin b
    let start = CurveState::new(vec![FRAC_PI_2, 0.0], vec![-b.cos(), b.sin()]);
    let curve = integrate_autoparallel(&spec, TP, &start, 2.0, &cfg()).unwrap();
    let bearings: Vec<f64> = curve
        .iter()
        .map(|s| (s.point[0].sin() * s.velocity[1]).atan2(-s.velocity[0]))
        .collect();
    let mean = bearings.iter().sum::<f64>() / bearings.len() as f64;
    let std = (bearings.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / bearings.len() as f64).sqrt();
    assert!(std < 1e-6, "{std}");
    assert!((mean - b).abs() < 1e-6);
    // closed form: theta(tau) = pi/2 - tau cos b, phi = tan b * ln(tan(pi/4 + lat/2))
    for s in &curve {
        let lat = s.tau * b.cos();
        assert!((s.point[0] - (FRAC_PI_2 - lat)).abs() < 1e-9);
        let phi = b.tan() * (FRAC_PI_4 + lat / 2.0).tan().ln();
        assert!((s.point[1] - phi).abs() < 1e-8);
    }
    // the Levi-Civita geodesic with the same data is a great circle, not this curve
    let lc = integrate_autoparallel(&spec, LC, &start, 2.0, &cfg()).unwrap();
    let end_lc = lc.last().unwrap();
    let end_tp = curve.last().unwrap();
    assert!((end_lc.point[1] - end_tp.point[1]).abs() > 0.1);
}

#[test]
fn norm_is_conserved_on_metric_autoparallels() {
    let spec = catalog::load("schwarzschild").unwrap();
    let start = CurveState::new(vec![0.0, 8.0, FRAC_PI_2, 0.0], vec![1.2, -0.1, 0.0, 0.04]);
    let curve = integrate_autoparallel(&spec, LC, &start, 20.0, &cfg()).unwrap();
    assert!(norm_drift(&spec, &curve).unwrap() < 1e-8 * 20.0);

    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..3 {
        let spec = common::random_spec(&mut rng, true);
        let p = common::random_point(&mut rng, 4, 0.2);
        let start = CurveState::new(p, vec![1.0, 0.1, -0.1, 0.05]);
        let curve = integrate_autoparallel(&spec, RC, &start, 1.0, &cfg()).unwrap();
        assert!(norm_drift(&spec, &curve).unwrap() < 1e-8);
    }
}

#[test]
fn autoparallels_coincide_only_for_totally_antisymmetric_torsion() {
    let start = CurveState::new(vec![0.0; 4], vec![1.3, 0.5, 0.4, -0.6]);
    let anti = catalog::load("minkowski-antisymmetric-torsion").unwrap();
    let a = integrate_autoparallel(&anti, RC, &start, 5.0, &cfg()).unwrap();
    let b = integrate_autoparallel(&anti, LC, &start, 5.0, &cfg()).unwrap();
    let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max(common::max_diff(&x.point, &y.point)));
    assert!(diff < 1e-8);

    let skew = catalog::load("minkowski-skew-torsion").unwrap();
    let a = integrate_autoparallel(&skew, RC, &start, 5.0, &IntegratorConfig::fixed(0.01)).unwrap();
    let b = integrate_autoparallel(&skew, LC, &start, 5.0, &IntegratorConfig::fixed(0.01)).unwrap();
    let diff = a.last().unwrap().point.iter().zip(&b.last().unwrap().point).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff > 1e-3);
    // the skew case solves t'' = c x'^2, x'' = c t' x' (c = 0.1)
    let c = 0.1;
    let mut y = [0.0, 0.0, 1.3, 0.5];
    let h = 1e-4;
    let f = |y: &[f64; 4]| [y[2], y[3], c * y[3] * y[3], c * y[2] * y[3]];
    for _ in 0..50_000 {
        let k1 = f(&y);
        let y2 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = f(&y2);
        let y3 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = f(&y3);
        let y4 = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = f(&y4);
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    let end = &a.last().unwrap().point;
    assert!((end[0] - y[0]).abs() < 1e-8 && (end[1] - y[1]).abs() < 1e-8);
}

#[test]
fn levi_civita_normal_chart_postconditions() {
    let nc = NormalChartConfig::default();
    let spec = catalog::load("schwarzschild").unwrap();
    let p0 = [0.0, 6.0, FRAC_PI_2, 0.0];
    let chart = build_normal_chart(&spec, LC, &p0, &nc).unwrap();
    let origin = [0.0; 4];
    let m = chart.metric_at(&spec, &origin).unwrap();
    assert!(max_abs(&(&m.g - eta(&[1, -1, -1, -1]))) < 1e-10);
    assert!(m.jets.iter().all(|j| j.grad.iter().all(|v| v.abs() < 1e-6)));
    assert!(chart.christoffel_at(&spec, &origin, false).unwrap().gamma.max_abs() < 1e-8);

    let minkowski = catalog::load("minkowski").unwrap();
    let chart = build_normal_chart(&minkowski, LC, &[0.0; 4], &nc).unwrap();
    assert_eq!(chart.frame, DMatrix::identity(4, 4));
    assert_eq!(chart.gamma_at_p0.max_abs(), 0.0);

    let mut rng = StdRng::seed_from_u64(22);
    for name in catalog::names() {
        let spec = catalog::load(name).unwrap();
        for _ in 0..10 {
            let p0 = common::catalog_point(&mut rng, name, spec.dimension());
            let chart = build_normal_chart(&spec, LC, &p0, &nc).unwrap();
            let m = chart.metric_at(&spec, &vec![0.0; p0.len()]).unwrap();
            let conn = chart.christoffel_at(&spec, &vec![0.0; p0.len()], false).unwrap();
            assert!(conn.gamma.max_abs() < 1e-8, "{name}");
            assert!(max_abs(&(&m.g - eta(spec.signature()))) < 1e-10, "{name}");
            assert!(m.jets.iter().all(|j| j.grad.iter().all(|v| v.abs() < 1e-6)), "{name}");
        }
    }
}

#[test]
fn riemann_cartan_normal_chart_conditions() {
    let nc = NormalChartConfig::default();
    let anti = catalog::load("minkowski-antisymmetric-torsion").unwrap();
    let p0 = [0.0, 0.1, 0.2, 0.3];
    let chart = build_normal_chart(&anti, RC, &p0, &nc).unwrap();
    let o = [0.0; 4];
    let g = chart.rc_connection_at(&anti, &o).unwrap().gamma;
    let lc = chart.christoffel_at(&anti, &o, false).unwrap().gamma;
    assert!(lc.max_abs() < 1e-12);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                assert!((g[(a, b, c)] + g[(a, c, b)]).abs() < 1e-12);
            }
        }
    }
    assert!(g.max_abs() > 0.01);

    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..10 {
        let spec = common::random_spec(&mut rng, true);
        let p0 = common::random_point(&mut rng, 4, 0.4);
        let chart = build_normal_chart(&spec, RC, &p0, &nc).unwrap();
        let g = chart.rc_connection_at(&spec, &o).unwrap().gamma;
        let glc = chart.christoffel_at(&spec, &o, false).unwrap().gamma;
        let t = chart.torsion_at(&spec, &o).unwrap();
        let m = chart.metric_at(&spec, &o).unwrap();
        let s = cartan_forge::connection::strain_from(&m.g, &m.g_inv, &t);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    assert!((g[(a, b, c)] + g[(a, c, b)]).abs() < 1e-8);
                    assert!((t[(a, b, c)] - 2.0 * g[(a, b, c)]).abs() < 1e-8);
                    assert!((s[(a, b, c)] + 2.0 * glc[(a, b, c)]).abs() < 1e-8);
                }
            }
        }
        // sanity: the source chart has a nonzero symmetric part
        assert!(strain(&spec, &p0).unwrap().max_abs() > 1e-3 || contorsion(&spec, &p0).unwrap().max_abs() > 1e-3);
    }
}

#[test]
fn christoffel_derivative_identity() {
    let nc = NormalChartConfig::default();
    let minkowski = catalog::load("minkowski").unwrap();
    let chart = build_normal_chart(&minkowski, LC, &[0.0; 4], &nc).unwrap();
    let check = verify_gamma_derivative(&minkowski, &chart, 1e-3).unwrap();
    assert_eq!(check.max_abs_residual, 0.0);

    let spec = catalog::load("schwarzschild").unwrap();
    let chart = build_normal_chart(&spec, LC, &[0.0, 6.0, FRAC_PI_2, 0.0], &nc).unwrap();
    let check = verify_gamma_derivative(&spec, &chart, 1e-3).unwrap();
    assert!(check.relative_residual < 1e-3, "{}", check.relative_residual);
    // the derivative is nonzero where the curvature is
    assert!(check.finite_difference.max_abs() > 1e-4);

    let sphere = catalog::load("sphere2").unwrap();
    let chart = build_normal_chart(&sphere, LC, &[FRAC_PI_2, 0.0], &nc).unwrap();
    let check = verify_gamma_derivative(&sphere, &chart, 1e-3).unwrap();
    assert!(check.relative_residual < 1e-3, "{}", check.relative_residual);
    assert!(check.predicted.max_abs() > 0.1);
}

#[test]
fn normal_chart_agrees_with_exponential_map() {
    let spec = catalog::load("schwarzschild").unwrap();
    let p0 = [0.0, 6.0, 1.1, 0.0];
    let chart = build_normal_chart(&spec, LC, &p0, &NormalChartConfig::default()).unwrap();
    let dir = [0.3, 0.5, -0.2, 0.4];
    let mut errors = Vec::new();
    for scale in [0.1, 0.05] {
        let xi: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        let u: Vec<f64> = (0..4).map(|b| (0..4).map(|a| chart.frame[(b, a)] * xi[a]).sum()).collect();
        let via_exp = exponential_map(&spec, LC, &p0, &u, &cfg()).unwrap();
        errors.push(common::max_diff(&via_exp, &chart.from_normal(&xi)));
    }
    // fourth-order agreement: halving the radius shrinks the gap about 16x
    assert!(errors[0] < 1e-4);
    assert!(errors[1] < errors[0] / 10.0, "{errors:?}");
}

fn latitude_circle(theta: f64, samples: usize) -> Vec<CurveState> {
    (0..=samples)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / samples as f64;
            CurveState {
                tau: phi,
                point: vec![theta, phi],
                velocity: vec![0.0, 1.0],
            }
        })
        .collect()
}

#[test]
fn holonomy_on_the_sphere() {
    let spec = catalog::load("sphere2").unwrap();
    let id = DMatrix::identity(2, 2);
    let equator = parallel_transport_frame(&spec, LC, &latitude_circle(FRAC_PI_2, 400), &id, &cfg()).unwrap();
    assert!(max_abs(&(equator.frames.last().unwrap() - &id)) < 1e-6);

    let th = 1.0;
    let tf = parallel_transport_frame(&spec, LC, &latitude_circle(th, 400), &id, &cfg()).unwrap();
    // orthonormal components of the transported e_theta
    let last = tf.frames.last().unwrap();
    let (a, b) = (last[(0, 0)], last[(1, 0)] * th.sin());
    let angle = b.atan2(a);
    let expected = -2.0 * PI * th.cos();
    let wrapped = (angle - expected).rem_euclid(2.0 * PI);
    assert!(wrapped.min(2.0 * PI - wrapped) < 1e-6, "{angle} vs {expected}");
    // the holonomy angle 2 pi (1 - cos theta) up to orientation
    assert!(((2.0 * PI * (1.0 - th.cos())).cos() - angle.cos()).abs() < 1e-6);
    assert!(tf.gram_drift(&spec) < 1e-8);
}

#[test]
fn teleparallel_transport_reproduces_the_frame_field() {
    let spec = catalog::load("sphere2-teleparallel").unwrap();
    let frame = spec.frame.clone().unwrap();
    // an arbitrary wiggly curve
    let curve: Vec<CurveState> = (0..=300)
        .map(|k| {
            let t = k as f64 * 0.01;
            CurveState {
                tau: t,
                point: vec![1.0 + 0.3 * (2.0 * t).sin(), t * t],
                velocity: vec![0.6 * (2.0 * t).cos(), 2.0 * t],
            }
        })
        .collect();
    let lam0 = spec.eval_frame(&frame, &curve[0].point).unwrap().lambda;
    let tf = parallel_transport_frame(&spec, TP, &curve, &lam0, &cfg()).unwrap();
    for (s, lam) in curve.iter().zip(&tf.frames) {
        let field = spec.eval_frame(&frame, &s.point).unwrap().lambda;
        assert!(max_abs(&(lam - field)) < 1e-7);
    }
}

#[test]
fn transport_is_linear_and_preserves_inner_products() {
    let spec = catalog::load("schwarzschild").unwrap();
    let curve: Vec<CurveState> = (0..=200)
        .map(|k| {
            let t = k as f64 * 0.02;
            CurveState {
                tau: t,
                point: vec![t, 6.0 + 0.5 * t.sin(), 1.2 + 0.1 * t, 0.3 * t * t],
                velocity: vec![1.0, 0.5 * t.cos(), 0.1, 0.6 * t],
            }
        })
        .collect();
    let mut rng = StdRng::seed_from_u64(24);
    let lam0 = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { rng.gen_range(-0.2..0.2) });
    let c = DMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { rng.gen_range(-0.5..0.5) });
    let a = parallel_transport_frame(&spec, LC, &curve, &lam0, &cfg()).unwrap();
    let b = parallel_transport_frame(&spec, LC, &curve, &(&lam0 * &c), &cfg()).unwrap();
    for (x, y) in a.frames.iter().zip(&b.frames) {
        assert!(max_abs(&(x * &c - y)) < 1e-10);
    }
    assert!(a.gram_drift(&spec) < 1e-8);
    let minkowski = catalog::load("minkowski").unwrap();
    let flat = parallel_transport_frame(&minkowski, LC, &curve, &lam0, &cfg()).unwrap();
    assert!(flat.frames.iter().all(|f| max_abs(&(f - &lam0)) == 0.0));
    assert!(matches!(
        parallel_transport_frame(&spec, LC, &curve, &DMatrix::zeros(4, 4), &cfg()),
        Err(Error::FrameDegenerate { .. })
    ));
}

#[test]
fn inertial_moving_frames() {
    let c = cfg();
    let minkowski = catalog::load("minkowski").unwrap();
    let line = integrate_autoparallel(&minkowski, LC, &CurveState::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]), 2.0, &c).unwrap();
    let imf = construct_imf(&minkowski, LC, &line, &c).unwrap();
    assert!(imf.frames.iter().all(|f| max_abs(&(f - DMatrix::identity(4, 4))) < 1e-15));

    let spec = catalog::load("schwarzschild").unwrap();
    let r0: f64 = 10.0;
    let ut = 1.0 / (1.0 - 2.0 / r0).sqrt();
    let fall = integrate_autoparallel(&spec, LC, &CurveState::new(vec![0.0, r0, FRAC_PI_2, 0.0], vec![ut, 0.0, 0.0, 0.0]), 5.0, &c).unwrap();
    let imf = construct_imf(&spec, LC, &fall, &c).unwrap();
    assert!(imf.orthonormality_residual(&spec) < 1e-8);
    assert!(imf.tangent_alignment(&spec) < 1e-8);
    assert!(imf.max_residual() <= 1e-8);
    assert!(fall.last().unwrap().point[1] < r0 - 0.1);

    let anti = catalog::load("minkowski-antisymmetric-torsion").unwrap();
    let gamma = integrate_autoparallel(&anti, RC, &CurveState::new(vec![0.0; 4], vec![1.25, 0.75, 0.0, 0.0]), 3.0, &c).unwrap();
    let imf = construct_imf(&anti, RC, &gamma, &c).unwrap();
    assert!(imf.max_residual() <= 1e-8);
    assert!(imf.orthonormality_residual(&anti) < 1e-8);
    assert!(imf.tangent_alignment(&anti) < 1e-8);

    // a curve that is not an autoparallel is rejected
    let bent: Vec<CurveState> = fall
        .iter()
        .map(|s| CurveState {
            tau: s.tau,
            point: vec![s.point[0], s.point[1] + 0.01 * s.tau * s.tau, s.point[2], s.point[3]],
            velocity: s.velocity.clone(),
        })
        .collect();
    assert!(matches!(construct_imf(&spec, LC, &bent, &c), Err(Error::NotAutoparallel { .. })));
    let spacelike = integrate_autoparallel(&minkowski, LC, &CurveState::new(vec![0.0; 4], vec![0.0, 1.0, 0.0, 0.0]), 1.0, &c).unwrap();
    assert!(matches!(construct_imf(&minkowski, LC, &spacelike, &c), Err(Error::NotUnitTimelike { .. })));
}

#[test]
fn fermi_charts_along_a_geodesic() {
    let spec = catalog::load("schwarzschild").unwrap();
    let r0: f64 = 10.0;
    let ut = 1.0 / (1.0 - 2.0 / r0).sqrt();
    let fall = integrate_autoparallel(&spec, LC, &CurveState::new(vec![0.0, r0, FRAC_PI_2, 0.0], vec![ut, 0.0, 0.0, 0.0]), 1.0, &IntegratorConfig::fixed(0.1)).unwrap();
    let fermi = build_fermi_chart(&spec, &fall, &cfg(), &NormalChartConfig::default()).unwrap();
    for (chart, s) in fermi.charts.iter().zip(&fall) {
        let m = chart.metric_at(&spec, &[0.0; 4]).unwrap();
        assert!(max_abs(&(&m.g - eta(&[1, -1, -1, -1]))) < 1e-8);
        let conn = chart.christoffel_at(&spec, &[0.0; 4], true).unwrap();
        assert!(conn.gamma.max_abs() < 1e-8);
        // the time axis of the chart is the unit tangent
        for a in 0..4 {
            assert!((chart.frame[(a, 0)] - s.velocity[a]).abs() < 1e-8);
        }
        // curvature survives in the derivatives
        assert!(curvature(&conn, None).unwrap().components.max_abs() > 1e-3);
    }
    let _ = christoffel(&spec, &fall[0].point, false).unwrap();
}
