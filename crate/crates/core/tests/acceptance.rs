//! Acceptance checks. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line in order; the process fails if any criterion fails.

mod common;

use cartan_forge::catalog;
use cartan_forge::classify::{antisymmetry_condition, irf_obstruction_ricci, lirf_rc_check};
use cartan_forge::connection::{christoffel, curvature, curvature_split, ricci, ConnectionKind};
use cartan_forge::expr::{Expression, Scope};
use cartan_forge::integrate::{integrate_autoparallel, CurveState, IntegratorConfig};
use cartan_forge::kinematics::{decompose_levi_civita, ReferenceFrameField};
use cartan_forge::normal::{build_normal_chart, verify_gamma_derivative, NormalChartConfig};
use cartan_forge::tensor::{eta, max_abs};
use cartan_forge::transport::construct_imf;
use cartan_forge::SpacetimeSpec;
use nalgebra::Vector3;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use ConnectionKind::{LeviCivita as LC, RiemannCartan as RC, Teleparallel as TP};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn flatness() -> Outcome {
    let spec = catalog::load("minkowski").map_err(e)?;
    let mut rng = StdRng::seed_from_u64(101);
    let (mut g, mut r) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = common::random_point(&mut rng, 4, 10.0);
        let c = christoffel(&spec, &p, true).map_err(e)?;
        g = g.max(c.gamma.max_abs());
        r = r.max(curvature(&c, None).map_err(e)?.components.max_abs());
    }
    ensure(g <= 1e-12 && r <= 1e-12, format!("max |Γ| = {g:e}, max |R| = {r:e}"))
}

fn vacuum() -> Outcome {
    let spec = catalog::load("schwarzschild").map_err(e)?;
    let mut rng = StdRng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = [rng.gen_range(-5.0..5.0), rng.gen_range(3.0..20.0), rng.gen_range(0.2..2.9), rng.gen_range(-PI..PI)];
        let c = christoffel(&spec, &p, true).map_err(e)?;
        let ric = ricci(&curvature(&c, None).map_err(e)?);
        worst = worst.max(ric.abs().max());
    }
    ensure(worst <= 1e-8, format!("max |Ric| = {worst:e}"))
}

fn normal_chart() -> Outcome {
    let spec = catalog::load("schwarzschild").map_err(e)?;
    let nc = NormalChartConfig::default();
    let mut rng = StdRng::seed_from_u64(103);
    let (mut gam, mut met, mut dg) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let p0 = common::catalog_point(&mut rng, "schwarzschild", 4);
        let chart = build_normal_chart(&spec, LC, &p0, &nc).map_err(e)?;
        let origin = [0.0; 4];
        gam = gam.max(chart.christoffel_at(&spec, &origin, false).map_err(e)?.gamma.max_abs());
        let m = chart.metric_at(&spec, &origin).map_err(e)?;
        met = met.max(max_abs(&(&m.g - eta(spec.signature()))));
        dg = dg.max(m.jets.iter().flat_map(|j| j.grad.iter()).fold(0.0f64, |a, v| a.max(v.abs())));
    }
    ensure(
        gam <= 1e-8 && met <= 1e-10 && dg <= 1e-6,
        format!("|Γ(p0)| = {gam:e}, |g - η| = {met:e}, |∂g| = {dg:e}"),
    )
}

fn christoffel_derivative() -> Outcome {
    let nc = NormalChartConfig::default();
    let mut rng = StdRng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for name in ["schwarzschild", "sphere2"] {
        let spec = catalog::load(name).map_err(e)?;
        for _ in 0..3 {
            let p0 = common::catalog_point(&mut rng, name, spec.dimension());
            let chart = build_normal_chart(&spec, LC, &p0, &nc).map_err(e)?;
            let check = verify_gamma_derivative(&spec, &chart, 1e-3).map_err(e)?;
            worst = worst.max(check.relative_residual);
        }
    }
    ensure(worst <= 1e-3, format!("max relative residual = {worst:e}"))
}

fn random_field(rng: &mut StdRng, spec: &SpacetimeSpec) -> ReferenceFrameField {
    let names = spec.chart.names();
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.2..0.2)).collect();
    // angular components of the spherical chart are scaled down by r
    let scale = |i: usize| if spec.name == "schwarzschild" && i >= 2 { "/r" } else { "" };
    let comps = [
        format!("1 + {:.5}*sin({})", c[0], names[1]),
        format!("{:.5}*cos({}) + {:.5}", c[1], names[2], c[2]),
        format!("{:.5}*sin({})*{}{}", c[3], names[0], names[3], scale(2)),
        format!("{:.5}*exp({:.5}*{}){}", c[4], c[5], names[3], scale(3)),
    ];
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    ReferenceFrameField::parse(spec, &refs, true).expect("field parses")
}

fn reassembly() -> Outcome {
    let mut rng = StdRng::seed_from_u64(105);
    let named = ["minkowski", "schwarzschild", "flrw-power-law", "rindler-chart", "minkowski-skew-torsion"];
    let (mut re, mut tr, mut om, mut idem) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut triples = 0;
    let mut attempts = 0;
    while triples < 50 {
        attempts += 1;
        if attempts > 500 {
            return Err(format!("only {triples} timelike samples found"));
        }
        let spec = if triples % 2 == 0 {
            let name = named[(triples / 2) % named.len()];
            catalog::load(name).map_err(e)?
        } else {
            common::random_spec(&mut rng, false)
        };
        let p = if spec.name == "random" {
            common::random_point(&mut rng, 4, 0.5)
        } else {
            common::catalog_point(&mut rng, &spec.name, 4)
        };
        let z = random_field(&mut rng, &spec);
        let Ok(dec) = decompose_levi_civita(&spec, &z, &p) else { continue };
        let r = dec.residuals();
        re = re.max(r.reassembly);
        tr = tr.max(r.sigma_trace);
        om = om.max(r.omega_symmetric_part);
        idem = idem.max(r.projector_idempotence);
        triples += 1;
    }
    ensure(
        re <= 1e-9 && tr <= 1e-10 && om <= 1e-10 && idem <= 1e-10,
        format!("reassembly {re:e}, tr σ {tr:e}, ω sym {om:e}, h² - h {idem:e} over {triples} samples"),
    )
}

fn flrw() -> Outcome {
    let spec = catalog::load("flrw-power-law").map_err(e)?;
    let z = ReferenceFrameField::parse(&spec, &["1", "0", "0", "0"], false).map_err(e)?;
    let samples: Vec<Vec<f64>> = [0.3, 0.8, 1.5, 3.0, 7.0].iter().map(|t| vec![*t, 0.4, -1.0, 2.0]).collect();
    let (mut kin, mut rel) = (0.0f64, 0.0f64);
    for p in &samples {
        let dec = decompose_levi_civita(&spec, &z, p).map_err(e)?;
        kin = kin.max(dec.a.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(max_abs(&dec.omega)).max(max_abs(&dec.sigma));
        rel = rel.max((dec.expansion - 2.0 / p[0]).abs() / (2.0 / p[0]));
    }
    let ricci = irf_obstruction_ricci(&spec, &z, &samples, 1e-10).map_err(e)?;
    let min_zz = ricci.ricci_zz.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    ensure(
        kin <= 1e-9 && rel <= 1e-8 && min_zz > 1e-6 && ricci.obstructed,
        format!("a, ω, σ ≤ {kin:e}; E vs 2/t relative {rel:e}; min |Ric(Z,Z)| = {min_zz:e}"),
    )
}

fn rindler() -> Outcome {
    let spec = catalog::load("rindler-chart").map_err(e)?;
    let z = ReferenceFrameField::parse(&spec, &["1/x", "0", "0", "0"], false).map_err(e)?;
    let (mut acc, mut rest) = (0.0f64, 0.0f64);
    for x in [0.25, 0.7, 1.0, 2.0, 5.0] {
        let p = [0.3, x, -0.5, 1.0];
        let dec = decompose_levi_civita(&spec, &z, &p).map_err(e)?;
        let g_inv = spec.eval_metric(&p).map_err(e)?.g_inv;
        let norm2: f64 = (0..4).map(|a| (0..4).map(|b| g_inv[(a, b)] * dec.a[a] * dec.a[b]).sum::<f64>()).sum();
        acc = acc.max(((-norm2).sqrt() - 1.0 / x).abs() * x);
        rest = rest.max(max_abs(&dec.omega)).max(max_abs(&dec.sigma)).max(dec.expansion.abs());
    }
    ensure(acc <= 1e-8 && rest <= 1e-9, format!("|a| vs 1/x relative {acc:e}; ω, σ, E ≤ {rest:e}"))
}

fn coincidence() -> Outcome {
    let start = CurveState::new(vec![0.0; 4], vec![1.3, 0.5, 0.4, -0.6]);
    let cfg = IntegratorConfig::default();
    let sep = |spec: &SpacetimeSpec| -> Result<f64, String> {
        let a = integrate_autoparallel(spec, RC, &start, 5.0, &cfg).map_err(e)?;
        let b = integrate_autoparallel(spec, LC, &start, 5.0, &cfg).map_err(e)?;
        // compare on a common grid: the adaptive steps need not match
        let mut worst = 0.0f64;
        for k in 0..=50 {
            let tau = 0.1 * k as f64;
            let (x, y) = (sample(&a, tau), sample(&b, tau));
            worst = worst.max(common::max_diff(&x, &y));
        }
        Ok(worst)
    };
    let anti = catalog::load("minkowski-antisymmetric-torsion").map_err(e)?;
    let skew = catalog::load("minkowski-skew-torsion").map_err(e)?;
    let (sa, ss) = (sep(&anti)?, sep(&skew)?);
    let points = vec![vec![0.0; 4], vec![1.0, 2.0, -1.0, 0.5]];
    let va = antisymmetry_condition(&anti, &points, 1e-12).map_err(e)?;
    let vs = antisymmetry_condition(&skew, &points, 1e-12).map_err(e)?;
    let agree = (sa <= 1e-8) == va.totally_antisymmetric && (ss <= 1e-8) == vs.totally_antisymmetric;
    ensure(
        sa <= 1e-8 && ss > 1e-3 && agree,
        format!(
            "antisymmetric separation {sa:e}, skew separation {ss:e}; verdicts {} / {}",
            va.totally_antisymmetric, vs.totally_antisymmetric
        ),
    )
}

/// Point on a dense curve at `tau`, by cubic Hermite interpolation.
fn sample(curve: &[CurveState], tau: f64) -> Vec<f64> {
    let k = curve.partition_point(|s| s.tau < tau).clamp(1, curve.len() - 1);
    let (a, b) = (&curve[k - 1], &curve[k]);
    let h = b.tau - a.tau;
    let s = (tau - a.tau) / h;
    let (h00, h10, h01, h11) = (
        2.0 * s * s * s - 3.0 * s * s + 1.0,
        s * s * s - 2.0 * s * s + s,
        -2.0 * s * s * s + 3.0 * s * s,
        s * s * s - s * s,
    );
    (0..a.point.len())
        .map(|i| h00 * a.point[i] + h10 * h * a.velocity[i] + h01 * b.point[i] + h11 * h * b.velocity[i])
        .collect()
}

fn sphere_point(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

fn loxodrome() -> Outcome {
    let spec = catalog::load("sphere2-teleparallel").map_err(e)?;
    let cfg = IntegratorConfig::default();
    let b = FRAC_PI_4;
    let start = CurveState::new(vec![FRAC_PI_2, 0.0], vec![-b.cos(), b.sin()]);
    // long enough for the longitude to sweep through pi
    let tau_end = 2.1;
    let tp = integrate_autoparallel(&spec, TP, &start, tau_end, &cfg).map_err(e)?;
    let bearings: Vec<f64> = tp.iter().map(|s| (s.point[0].sin() * s.velocity[1]).atan2(-s.velocity[0])).collect();
    let mean = bearings.iter().sum::<f64>() / bearings.len() as f64;
    let std = (bearings.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / bearings.len() as f64).sqrt();
    let sweep = tp.last().unwrap().point[1];

    let lc = integrate_autoparallel(&spec, LC, &start, 2.0 * PI, &cfg).map_err(e)?;
    let p0 = sphere_point(FRAC_PI_2, 0.0);
    let t0 = Vector3::new(0.0, b.sin(), b.cos());
    let dev = lc
        .iter()
        .map(|s| (sphere_point(s.point[0], s.point[1]) - (p0 * s.tau.cos() + t0 * s.tau.sin())).norm())
        .fold(0.0f64, f64::max);
    ensure(
        std <= 1e-6 && sweep >= PI && dev <= 1e-6,
        format!("bearing std {std:e} over Δφ = {sweep:.3}; great-circle deviation {dev:e}"),
    )
}

fn imf() -> Outcome {
    let spec = catalog::load("minkowski-antisymmetric-torsion").map_err(e)?;
    let cfg = IntegratorConfig::default();
    let gamma = integrate_autoparallel(&spec, RC, &CurveState::new(vec![0.0; 4], vec![1.25, 0.75, 0.0, 0.0]), 5.0, &cfg)
        .map_err(e)?;
    let frame = construct_imf(&spec, RC, &gamma, &cfg).map_err(e)?;
    let transport = frame.max_residual();
    let drift = frame.gram_drift(&spec).max(frame.orthonormality_residual(&spec));
    let verdict = lirf_rc_check(&spec, &frame, 1e-8).map_err(e)?;
    ensure(
        transport <= 1e-8 && drift <= 1e-8 && verdict.holds,
        format!(
            "|De| {transport:e}, orthonormality drift {drift:e}, lirf_rc {} (worst residual {:e})",
            verdict.holds,
            verdict.residuals.values().fold(0.0f64, |m, v| m.max(*v))
        ),
    )
}

fn curvature_split_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(111);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let spec = common::random_spec(&mut rng, true);
        let p = common::random_point(&mut rng, 4, 0.5);
        worst = worst.max(curvature_split(&spec, &p).map_err(e)?.residual);
    }
    ensure(worst <= 1e-9, format!("max |R - R̊ - J| = {worst:e}"))
}

fn random_expression(rng: &mut StdRng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..5) {
            0 => format!("{}", rng.gen_range(0.0..50.0)),
            1 => format!("{:e}", rng.gen_range(1e-8..1e-3)),
            2 => "x".into(),
            3 => "y".into(),
            _ => "k".into(),
        };
    }
    let ops = ["+", "-", "*", "/", "^"];
    let funcs = ["sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs"];
    match rng.gen_range(0..4) {
        0 => format!("{} {} {}", random_expression(rng, depth - 1), ops[rng.gen_range(0..5)], random_expression(rng, depth - 1)),
        1 => format!("({}){}({})", random_expression(rng, depth - 1), ops[rng.gen_range(0..5)], random_expression(rng, depth - 1)),
        2 => format!("-({})", random_expression(rng, depth - 1)),
        _ => format!("{}({})", funcs[rng.gen_range(0..10)], random_expression(rng, depth - 1)),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
}

fn parser_and_jets() -> Outcome {
    let mut rng = StdRng::seed_from_u64(112);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for name in catalog::names() {
        let spec = catalog::load(name).map_err(e)?;
        let n = spec.dimension();
        for _ in 0..5 {
            let p = common::catalog_point(&mut rng, name, n);
            let m = spec.eval_metric(&p).map_err(e)?;
            for a in 0..n {
                for b in 0..n {
                    let jet = &m.jets[a * n + b];
                    for c in 0..n {
                        let fd = common::central(|q| vec![spec.metric_values(q)[(a, b)]], &p, c, h)[0];
                        worst = worst.max((jet.grad[c] - fd).abs() / jet.grad[c].abs().max(1.0));
                        let fd2 = common::central(
                            |q| spec.eval_metric(q).map(|m| m.jets[a * n + b].grad.clone()).unwrap_or_default(),
                            &p,
                            c,
                            h,
                        );
                        for d in 0..n {
                            worst = worst.max((jet.d2(d, c) - fd2[d]).abs() / fd2[d].abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    let coords = vec!["x".to_string(), "y".to_string()];
    let params = BTreeMap::from([("k".to_string(), 0.75)]);
    let scope = Scope { coordinates: &coords, parameters: &params };
    let mut mismatches = 0;
    for _ in 0..300 {
        let text = random_expression(&mut rng, 5);
        let first = Expression::parse(&text, scope).map_err(e)?;
        let again = Expression::parse(&first.to_string(), scope).map_err(e)?;
        for _ in 0..100 {
            let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            if !close(first.eval(&p), again.eval(&p)) {
                mismatches += 1;
            }
        }
    }
    ensure(
        worst <= 1e-6 && mismatches == 0,
        format!("jets vs differences relative {worst:e}; {mismatches} round-trip mismatches in 30000 evaluations"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("flatness baseline", flatness),
        ("vacuum Ricci", vacuum),
        ("normal chart postconditions", normal_chart),
        ("normal chart Christoffel derivative", christoffel_derivative),
        ("decomposition reassembly", reassembly),
        ("FLRW kinematics", flrw),
        ("Rindler kinematics", rindler),
        ("autoparallel coincidence", coincidence),
        ("loxodromes and great circles", loxodrome),
        ("inertial moving frame", imf),
        ("curvature split", curvature_split_identity),
        ("parser and jets", parser_and_jets),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.2}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
