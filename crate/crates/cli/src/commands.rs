use crate::report::{to_value, CliError, CliResult, Envelope};
use crate::{AutoparallelArgs, ClassifyArgs, DecomposeArgs, DescribeArgs, Format, NormalChartArgs, PredicateArg, Source};
use cartan_forge::catalog;
use cartan_forge::classify::{
    antisymmetry_condition, irf_check, irf_obstruction_ricci, lirf_lorentzian_check, lirf_rc_check, nacs_check,
    pirf_check,
};
use cartan_forge::connection::{
    christoffel, contorsion, curvature, curvature_split, metric_compatibility_residual, rc_connection, ricci,
    scalar_curvature, strain, structure_coefficients, teleparallel_from_frame, ConnectionCoefficients,
    ConnectionKind,
};
use cartan_forge::integrate::{integrate_autoparallel, norm_drift, CurveState, IntegratorConfig};
use cartan_forge::kinematics::{decompose_levi_civita, decompose_riemann_cartan, vorticity_covector, ReferenceFrameField};
use cartan_forge::normal::{build_normal_chart, postcondition_residuals, verify_gamma_derivative, NormalChartConfig};
use cartan_forge::spacetime::{lorentzian_time_sign, orthonormal_basis};
use cartan_forge::tensor::{matrix_rows, max_abs};
use cartan_forge::transport::{build_fermi_chart, construct_imf, parallel_transport_frame};
use cartan_forge::{parse_spacetime_spec_with, MetricEval, SpacetimeSpec};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

fn load(source: &Source) -> CliResult<(SpacetimeSpec, Value)> {
    let mut overrides = BTreeMap::new();
    for kv in &source.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param expects name=value, got `{kv}`")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--param {k}: `{v}` is not a number")))?;
        overrides.insert(k.trim().to_string(), value);
    }
    let (spec, origin) = match (&source.catalog, &source.file) {
        (Some(name), _) => (catalog::load_with(name, &overrides)?, json!({ "catalog": name })),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            (parse_spacetime_spec_with(&text, &overrides)?, json!({ "file": path.display().to_string() }))
        }
        (None, None) => return Err(CliError::Usage("one of --catalog or --file is required".into())),
    };
    let mut params = Map::new();
    params.insert("source".into(), origin);
    params.insert("overrides".into(), to_value(&overrides));
    Ok((spec, Value::Object(params)))
}

/// Comma-separated constant expressions (parameters and `pi` allowed).
fn parse_vector(spec: &SpacetimeSpec, text: &str, what: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(|t| {
            let e = spec.parse_expression(t.trim())?;
            e.constant_value()
                .ok_or_else(|| CliError::Usage(format!("{what} entry `{}` depends on coordinates", t.trim())))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.len() != spec.dimension() {
        return Err(CliError::Usage(format!(
            "{what} has {} entries, the chart has {} coordinates",
            values.len(),
            spec.dimension()
        )));
    }
    Ok(values)
}

fn parse_points(spec: &SpacetimeSpec, texts: &[String]) -> CliResult<Vec<Vec<f64>>> {
    texts.iter().map(|t| parse_vector(spec, t, "point")).collect()
}

fn reference_field(spec: &SpacetimeSpec, z: Option<&str>, normalize: bool) -> CliResult<ReferenceFrameField> {
    match z {
        Some(text) => {
            let parts: Vec<&str> = text.split(',').map(str::trim).collect();
            Ok(ReferenceFrameField::parse(spec, &parts, normalize)?)
        }
        None => {
            let frame = spec.require_frame()?;
            let mut field = ReferenceFrameField::from_frame(frame);
            field.normalized = normalize;
            Ok(field)
        }
    }
}

fn field_json(field: &ReferenceFrameField) -> Value {
    let comps: Vec<String> = field.components.iter().map(|e| e.to_string()).collect();
    json!({ "components": comps, "normalized": field.normalized })
}

/// Writes to stdout in one piece; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print_report(env: Envelope, started: Instant) {
    emit(&format!("{}\n", env.render(started)));
}

fn connection_json(conn: &ConnectionCoefficients, m: &MetricEval) -> CliResult<(Value, f64)> {
    let curv = curvature(conn, None)?;
    let ric = ricci(&curv);
    let value = json!({
        "gamma": to_value(&conn.gamma),
        "curvature": to_value(&curv.components),
        "ricci": matrix_rows(&ric),
        "scalar_curvature": scalar_curvature(&curv, &m.g_inv),
    });
    Ok((value, metric_compatibility_residual(conn, m)))
}

fn describe_at(spec: &SpacetimeSpec, p: &[f64]) -> CliResult<(Value, BTreeMap<String, f64>)> {
    let m = spec.eval_metric(p)?;
    let n = spec.dimension();
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "inverse_metric".into(),
        max_abs(&(&m.g * &m.g_inv - DMatrix::<f64>::identity(n, n))),
    );
    let mut results = Map::new();
    results.insert("point".into(), json!(p));
    results.insert("signature".into(), json!(spec.signature()));
    results.insert("metric".into(), json!(matrix_rows(&m.g)));
    results.insert("inverse_metric".into(), json!(matrix_rows(&m.g_inv)));

    let (lc, r) = connection_json(&christoffel(spec, p, true)?, &m)?;
    results.insert("levi_civita".into(), lc);
    residuals.insert("levi_civita_metric_compatibility".into(), r);

    if let Some(torsion) = &spec.torsion {
        let (rc, r) = connection_json(&rc_connection(spec, p, true)?, &m)?;
        results.insert("riemann_cartan".into(), rc);
        residuals.insert("riemann_cartan_metric_compatibility".into(), r);
        results.insert("torsion".into(), to_value(&torsion.eval(p)));
        results.insert("contorsion".into(), to_value(&contorsion(spec, p)?));
        results.insert("strain".into(), to_value(&strain(spec, p)?));
        residuals.insert("curvature_split".into(), curvature_split(spec, p)?.residual);
    }
    if let Some(frame) = &spec.frame {
        let fe = spec.eval_frame(frame, p)?;
        let (tp, frame_torsion) = teleparallel_from_frame(spec, frame, p, true)?;
        let (tp_json, r) = connection_json(&tp, &m)?;
        results.insert(
            "frame".into(),
            json!({
                "lambda": matrix_rows(&fe.lambda),
                "structure_coefficients": to_value(&structure_coefficients(spec, frame, p)?),
                "teleparallel": tp_json,
                "teleparallel_torsion": to_value(&frame_torsion.components),
            }),
        );
        residuals.insert("teleparallel_metric_compatibility".into(), r);
    }
    Ok((Value::Object(results), residuals))
}

pub fn describe(args: &DescribeArgs) -> CliResult<u8> {
    let started = Instant::now();
    let (spec, mut params) = load(&args.source)?;
    let p = parse_vector(&spec, &args.point, "point")?;
    params["point"] = json!(p);
    let (results, residuals) = describe_at(&spec, &p)?;
    let mut env = Envelope::new("describe", &spec.name, params);
    env.results = results;
    env.residuals = residuals;
    print_report(env, started);
    Ok(0)
}

pub fn self_test() -> CliResult<u8> {
    let started = Instant::now();
    let mut entries = Vec::new();
    let mut failures = 0;
    for name in catalog::names() {
        let outcome = catalog::load(name).map_err(CliError::from).and_then(|spec| {
            let p = catalog::reference_point(name)
                .ok_or_else(|| CliError::Usage(format!("no reference point for `{name}`")))?;
            describe_at(&spec, &p).map(|(_, r)| (p, r))
        });
        entries.push(match outcome {
            Ok((p, residuals)) => json!({ "name": name, "ok": true, "point": p, "residuals": residuals }),
            Err(e) => {
                failures += 1;
                let message = match e {
                    CliError::Core(e) => e.to_string(),
                    CliError::Io { message, .. } | CliError::Usage(message) => message,
                };
                json!({ "name": name, "ok": false, "error": message })
            }
        });
    }
    let mut env = Envelope::new("self-test", "catalog", json!({}));
    env.results = json!({ "entries": entries, "failures": failures });
    print_report(env, started);
    Ok(if failures == 0 { 0 } else { 1 })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

/// Velocity components in the document's frame along the curve.
fn frame_velocity(spec: &SpacetimeSpec, curve: &[CurveState]) -> CliResult<Option<Value>> {
    let Some(frame) = &spec.frame else { return Ok(None) };
    let n = spec.dimension();
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(curve.len()); n];
    let mut bearings = Vec::with_capacity(curve.len());
    for s in curve {
        let fe = spec.eval_frame(frame, &s.point)?;
        let c = &fe.lambda_inv * DVector::from_column_slice(&s.velocity);
        for mu in 0..n {
            comps[mu].push(c[mu]);
        }
        if n == 2 {
            bearings.push(c[1].atan2(c[0]));
        }
    }
    let stats: Vec<Value> = comps
        .iter()
        .map(|c| {
            let (mean, std) = mean_std(c);
            json!({ "mean": mean, "std": std })
        })
        .collect();
    let mut out = json!({ "components": stats });
    if n == 2 {
        let (mean, std) = mean_std(&bearings);
        // angle from e_0 towards e_1
        out["bearing"] = json!({ "mean": mean, "std": std });
    }
    Ok(Some(out))
}

fn trajectory_csv(spec: &SpacetimeSpec, curve: &[CurveState], frames: Option<&[DMatrix<f64>]>) -> String {
    let n = spec.dimension();
    let names = spec.chart.names();
    let mut header: Vec<String> = vec!["tau".into()];
    header.extend(names.iter().cloned());
    header.extend(names.iter().map(|c| format!("v_{c}")));
    if frames.is_some() {
        for mu in 0..n {
            for a in 0..n {
                header.push(format!("e[{mu}][{a}]"));
            }
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for (k, s) in curve.iter().enumerate() {
        let mut row = vec![format!("{:?}", s.tau)];
        row.extend(s.point.iter().map(|x| format!("{x:?}")));
        row.extend(s.velocity.iter().map(|x| format!("{x:?}")));
        if let Some(frames) = frames {
            for mu in 0..n {
                for a in 0..n {
                    row.push(format!("{:?}", frames[k][(a, mu)]));
                }
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn write_atomically(path: &Path, text: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn autoparallel(args: &AutoparallelArgs) -> CliResult<u8> {
    let started = Instant::now();
    let (spec, mut params) = load(&args.source)?;
    let kind = args.connection.kind();
    let p = parse_vector(&spec, &args.point, "point")?;
    let v = parse_vector(&spec, &args.velocity, "velocity")?;
    let mut cfg = match args.step {
        Some(h) => IntegratorConfig::fixed(h),
        None => IntegratorConfig::default(),
    };
    if let Some(tol) = args.tol {
        cfg.tolerance = tol;
    }
    params["connection"] = json!(kind.name());
    params["point"] = json!(p);
    params["velocity"] = json!(v);
    params["tau_end"] = json!(args.tau_end);
    params["integrator"] = to_value(&cfg);

    let class = match lorentzian_time_sign(spec.signature()) {
        Some(_) => Some(spec.classify_tangent(&p, &v)?),
        None => None,
    };
    let curve = integrate_autoparallel(&spec, kind, &CurveState::new(p.clone(), v.clone()), args.tau_end, &cfg)?;
    let frames = if args.frame {
        let g = spec.metric_values(&p);
        let initial = orthonormal_basis(&g, spec.signature(), None)?;
        Some(parallel_transport_frame(&spec, kind, &curve, &initial, &cfg)?)
    } else {
        None
    };
    let csv = trajectory_csv(&spec, &curve, frames.as_ref().map(|f| f.frames.as_slice()));
    if args.format == Format::Csv && args.out.is_none() {
        emit(&csv);
        return Ok(0);
    }
    let drift = norm_drift(&spec, &curve)?;
    let mut results = json!({
        "classification": class,
        "samples": curve.len(),
        "end": to_value(curve.last().expect("curve has its start")),
        "norm_drift": drift,
    });
    if let Some(fv) = frame_velocity(&spec, &curve)? {
        results["frame_velocity"] = fv;
    }
    let mut residuals = BTreeMap::from([("norm_drift".to_string(), drift)]);
    if let Some(f) = &frames {
        residuals.insert("frame_gram_drift".into(), f.gram_drift(&spec));
        residuals.insert("frame_transport".into(), f.max_residual());
    }
    match &args.out {
        Some(path) => {
            write_atomically(path, &csv)?;
            params["out"] = json!(path.display().to_string());
        }
        None => results["trajectory"] = to_value(&curve),
    }
    let mut env = Envelope::new("autoparallel", &spec.name, params);
    env.results = results;
    env.residuals = residuals;
    print_report(env, started);
    Ok(0)
}

pub fn normal_chart(args: &NormalChartArgs) -> CliResult<u8> {
    let started = Instant::now();
    let (spec, mut params) = load(&args.source)?;
    let kind = args.connection.kind();
    let p = parse_vector(&spec, &args.point, "point")?;
    let nc = NormalChartConfig {
        patch_radius: args.patch_radius,
        ..NormalChartConfig::default()
    };
    params["connection"] = json!(kind.name());
    params["point"] = json!(p);
    params["chart"] = to_value(&nc);
    let chart = build_normal_chart(&spec, kind, &p, &nc)?;
    let post = postcondition_residuals(&spec, &chart)?;
    let mut results = json!({ "chart": to_value(&chart), "postconditions": to_value(&post) });
    let mut residuals = post;
    if kind == ConnectionKind::LeviCivita {
        params["step"] = json!(args.step);
        let check = verify_gamma_derivative(&spec, &chart, args.step)?;
        results["gamma_derivative"] = json!({
            "max_abs_residual": check.max_abs_residual,
            "relative_residual": check.relative_residual,
            "step": check.step,
        });
        residuals.insert("gamma_derivative_relative".into(), check.relative_residual);
    }
    let mut env = Envelope::new("normal-chart", &spec.name, params);
    env.results = results;
    env.residuals = residuals;
    print_report(env, started);
    Ok(0)
}

fn raise(residuals: &mut BTreeMap<String, f64>, key: &str, value: f64) {
    let e = residuals.entry(key.to_string()).or_insert(0.0);
    *e = if value.is_nan() || e.is_nan() { f64::NAN } else { e.max(value) };
}

pub fn decompose(args: &DecomposeArgs) -> CliResult<u8> {
    let started = Instant::now();
    let (spec, mut params) = load(&args.source)?;
    let field = reference_field(&spec, args.z.as_deref(), args.normalize)?;
    let points = parse_points(&spec, &args.points)?;
    params["field"] = field_json(&field);
    params["points"] = json!(points);
    let mut residuals = BTreeMap::new();
    let mut entries = Vec::new();
    for p in &points {
        let lc = decompose_levi_civita(&spec, &field, p)?;
        let r = lc.residuals();
        raise(&mut residuals, "levi_civita", r.max());
        let mut entry = json!({
            "point": p,
            "levi_civita": to_value(&lc),
            "levi_civita_residuals": to_value(&r),
        });
        if spec.dimension() == 4 {
            entry["vorticity_vector"] = json!(vorticity_covector(&spec, &field, p)?);
        }
        if spec.torsion.is_some() {
            let (rc, corr) = decompose_riemann_cartan(&spec, &field, p)?;
            let r = rc.residuals();
            let identity = corr.identity_residual(&rc, &lc);
            raise(&mut residuals, "riemann_cartan", r.max());
            raise(&mut residuals, "torsion_identity", identity);
            entry["riemann_cartan"] = to_value(&rc);
            entry["riemann_cartan_residuals"] = to_value(&r);
            entry["torsion_corrections"] = to_value(&corr);
        }
        entries.push(entry);
    }
    let mut env = Envelope::new("decompose", &spec.name, params);
    env.results = json!({ "points": entries });
    env.residuals = residuals;
    print_report(env, started);
    Ok(0)
}

fn curve_from(spec: &SpacetimeSpec, args: &ClassifyArgs, kind: ConnectionKind) -> CliResult<Vec<CurveState>> {
    let p = parse_vector(spec, &args.points[0], "point")?;
    let v = args
        .velocity
        .as_deref()
        .ok_or_else(|| CliError::Usage("--velocity is required for this predicate".into()))?;
    let v = parse_vector(spec, v, "velocity")?;
    let tau_end = args
        .tau_end
        .ok_or_else(|| CliError::Usage("--tau-end is required for this predicate".into()))?;
    Ok(integrate_autoparallel(spec, kind, &CurveState::new(p, v), tau_end, &IntegratorConfig::fixed(args.step))?)
}

pub fn classify(args: &ClassifyArgs) -> CliResult<u8> {
    let started = Instant::now();
    let (spec, mut params) = load(&args.source)?;
    let tol = args.tol;
    params["tolerance"] = json!(tol);
    let (holds, results) = match args.predicate {
        PredicateArg::Irf | PredicateArg::Pirf | PredicateArg::Nacs => {
            let field = reference_field(&spec, args.z.as_deref(), args.normalize)?;
            let samples = parse_points(&spec, &args.points)?;
            params["field"] = field_json(&field);
            let kind = args.connection.kind();
            let verdict = match args.predicate {
                PredicateArg::Irf => {
                    params["connection"] = json!(kind.name());
                    irf_check(&spec, kind, &field, &samples, tol)?
                }
                PredicateArg::Pirf => {
                    params["connection"] = json!(kind.name());
                    pirf_check(&spec, kind, &field, &samples, tol)?
                }
                _ => nacs_check(&spec, &field, &samples, tol)?,
            };
            let mut results = json!({ "verdict": to_value(&verdict) });
            if matches!(args.predicate, PredicateArg::Irf) && kind == ConnectionKind::LeviCivita {
                results["ricci_obstruction"] = to_value(&irf_obstruction_ricci(&spec, &field, &samples, tol)?);
            }
            (verdict.holds, results)
        }
        PredicateArg::Lirf => {
            let curve = curve_from(&spec, args, ConnectionKind::LeviCivita)?;
            let nc = NormalChartConfig {
                patch_radius: args.patch_radius,
                ..NormalChartConfig::default()
            };
            params["step"] = json!(args.step);
            params["chart"] = to_value(&nc);
            let fermi = build_fermi_chart(&spec, &curve, &IntegratorConfig::default(), &nc)?;
            let verdict = lirf_lorentzian_check(&spec, &fermi, tol)?;
            (verdict.holds, json!({ "verdict": to_value(&verdict) }))
        }
        PredicateArg::LirfRc => {
            let curve = curve_from(&spec, args, ConnectionKind::RiemannCartan)?;
            params["step"] = json!(args.step);
            let imf = construct_imf(&spec, ConnectionKind::RiemannCartan, &curve, &IntegratorConfig::default())?;
            let verdict = lirf_rc_check(&spec, &imf, tol)?;
            (verdict.holds, json!({ "verdict": to_value(&verdict) }))
        }
        PredicateArg::Antisymmetry => {
            let samples = parse_points(&spec, &args.points)?;
            let report = antisymmetry_condition(&spec, &samples, tol)?;
            (report.totally_antisymmetric, json!({ "verdict": to_value(&report) }))
        }
    };
    let name = match args.predicate {
        PredicateArg::Irf => "irf",
        PredicateArg::Pirf => "pirf",
        PredicateArg::Nacs => "nacs",
        PredicateArg::Lirf => "lirf",
        PredicateArg::LirfRc => "lirf_rc",
        PredicateArg::Antisymmetry => "antisymmetry",
    };
    params["predicate"] = json!(name);
    let residuals: BTreeMap<String, f64> = results["verdict"]
        .get("residuals")
        .and_then(|r| serde_json::from_value(r.clone()).ok())
        .unwrap_or_default();
    let mut env = Envelope::new("classify", &spec.name, params);
    env.results = results;
    env.residuals = residuals;
    print_report(env, started);
    Ok(if holds { 0 } else { 1 })
}
