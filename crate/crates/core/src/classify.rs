//! Inertial-frame predicates. Every predicate reports the residual of each
//! criterion; it holds when all of them are within the tolerance.

use crate::connection::{
    christoffel, connection_at, curvature, rc_connection, ricci, strain_from, ConnectionKind,
};
use crate::error::{Error, Result};
use crate::integrate::{integrate_autoparallel, CurveState, IntegratorConfig};
use crate::kinematics::{corrections, decompose_from, wedge_of, FieldEval, ReferenceFrameField};
use crate::spacetime::{lorentzian_time_sign, SpacetimeSpec};
use crate::tensor::{self, Tensor3};
use crate::transport::{carry_frame, FermiChart, TransportedFrame};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Irf,
    Pirf,
    LirfLorentzian,
    LirfRc,
    Nacs,
}

impl Predicate {
    pub fn name(self) -> &'static str {
        match self {
            Predicate::Irf => "irf",
            Predicate::Pirf => "pirf",
            Predicate::LirfLorentzian => "lirf_lorentzian",
            Predicate::LirfRc => "lirf_rc",
            Predicate::Nacs => "nacs",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameVerdict {
    pub predicate: Predicate,
    pub holds: bool,
    /// Criterion name to the largest residual over all samples.
    pub residuals: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub samples: Vec<Vec<f64>>,
    /// Diagnostics that do not enter the verdict.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, f64>,
}

impl FrameVerdict {
    fn new(predicate: Predicate, residuals: BTreeMap<String, f64>, tolerance: f64, samples: Vec<Vec<f64>>) -> Self {
        let mut v = Self {
            predicate,
            holds: false,
            residuals,
            tolerance,
            samples,
            info: BTreeMap::new(),
        };
        v.holds = v.holds_at(tolerance);
        v
    }

    /// Whether the verdict would hold at another tolerance.
    pub fn holds_at(&self, tolerance: f64) -> bool {
        self.residuals.values().all(|r| *r <= tolerance)
    }
}

fn check_tolerance(tol: f64) -> Result<()> {
    if tol >= 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {tol}")))
    }
}

fn check_samples(samples: &[Vec<f64>]) -> Result<()> {
    if samples.is_empty() {
        Err(Error::InvalidArgument("at least one sample point is required".into()))
    } else {
        Ok(())
    }
}

/// Running maxima keyed by criterion.
#[derive(Default)]
struct Maxima(BTreeMap<String, f64>);

impl Maxima {
    fn put(&mut self, key: &str, value: f64) {
        let e = self.0.entry(key.to_string()).or_insert(0.0);
        // NaN must never pass
        *e = if value.is_nan() || e.is_nan() { f64::NAN } else { e.max(value) };
    }
}

fn vec_max(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Inertial reference frame: `Dα = 0` at every sample, i.e. no acceleration,
/// rotation, shear or expansion, for the connection `kind`.
pub fn irf_check(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    field: &ReferenceFrameField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<FrameVerdict> {
    check_tolerance(tol)?;
    check_samples(samples)?;
    let mut r = Maxima::default();
    for p in samples {
        let fe = field.eval(spec, p)?;
        let dec = decompose_from(&fe, &connection_at(spec, kind, p, false)?);
        r.put("d_alpha", tensor::max_abs(&dec.d_alpha));
        r.put("acceleration", vec_max(&dec.a));
        r.put("vorticity", tensor::max_abs(&dec.omega));
        r.put("shear", tensor::max_abs(&dec.sigma));
        r.put("expansion", dec.expansion.abs());
    }
    Ok(FrameVerdict::new(Predicate::Irf, r.0, tol, samples.to_vec()))
}

/// `Ricci(Z, e_ν)` over an orthonormal basis adapted to `Z`. A nonzero value
/// rules out any inertial reference frame containing `Z`.
#[derive(Debug, Clone, Serialize)]
pub struct RicciObstruction {
    pub max_abs: f64,
    /// `max_ν |Ricci(Z, e_ν)|` per sample.
    pub per_sample: Vec<f64>,
    /// `Ricci(Z, Z)` per sample.
    pub ricci_zz: Vec<f64>,
    pub tolerance: f64,
    pub obstructed: bool,
    pub samples: Vec<Vec<f64>>,
}

pub fn irf_obstruction_ricci(
    spec: &SpacetimeSpec,
    field: &ReferenceFrameField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<RicciObstruction> {
    check_tolerance(tol)?;
    check_samples(samples)?;
    let mut per_sample = Vec::with_capacity(samples.len());
    let mut ricci_zz = Vec::with_capacity(samples.len());
    for p in samples {
        let fe = field.eval(spec, p)?;
        let ric = ricci(&curvature(&christoffel(spec, p, true)?, None)?);
        let e = crate::kinematics::orthonormal_completion(spec, field, p)?;
        let z = DVector::from_column_slice(&fe.z);
        let row = z.transpose() * &ric * &e;
        per_sample.push(row.amax());
        ricci_zz.push((z.transpose() * &ric * &z)[(0, 0)]);
    }
    let max_abs = vec_max(&per_sample);
    Ok(RicciObstruction {
        max_abs,
        per_sample,
        ricci_zz,
        tolerance: tol,
        obstructed: max_abs > tol,
        samples: samples.to_vec(),
    })
}

/// Pseudo-inertial reference frame: free fall (`D_Z Z = 0`) and no rotation
/// (`α∧dα = 0`).
pub fn pirf_check(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    field: &ReferenceFrameField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<FrameVerdict> {
    check_tolerance(tol)?;
    check_samples(samples)?;
    let mut r = Maxima::default();
    for p in samples {
        let fe = field.eval(spec, p)?;
        let dec = decompose_from(&fe, &connection_at(spec, kind, p, false)?);
        r.put("acceleration", vec_max(&dec.a));
        r.put("alpha_wedge_dalpha", wedge_of(&fe).max_abs());
    }
    Ok(FrameVerdict::new(Predicate::Pirf, r.0, tol, samples.to_vec()))
}

/// Naturally adapted chart: the spatial components `Z^i` vanish.
pub fn nacs_check(
    spec: &SpacetimeSpec,
    field: &ReferenceFrameField,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<FrameVerdict> {
    check_tolerance(tol)?;
    check_samples(samples)?;
    let mut r = Maxima::default();
    for p in samples {
        let fe = field.eval(spec, p)?;
        r.put("spatial_components", vec_max(&fe.z[1..]));
    }
    Ok(FrameVerdict::new(Predicate::Nacs, r.0, tol, samples.to_vec()))
}

fn unit_tangent_residual(spec: &SpacetimeSpec, s: &CurveState) -> Result<f64> {
    let sign = lorentzian_time_sign(spec.signature()).ok_or_else(|| Error::NotLorentzian(spec.signature().to_vec()))?;
    let m = spec.eval_metric(&s.point)?;
    Ok((m.inner(&s.velocity, &s.velocity) - sign).abs())
}

/// Local inertial Lorentz frame along a geodesic, checked on the curve: in
/// the chart attached to each sample `∂/∂ξ^0 = γ*`, `α_L∧dα_L = 0`,
/// `g = η` and `∂g = 0`. The metric derivative half a patch radius off the
/// curve is reported under `info` only.
pub fn lirf_lorentzian_check(spec: &SpacetimeSpec, fermi: &FermiChart, tol: f64) -> Result<FrameVerdict> {
    check_tolerance(tol)?;
    let curve = &fermi.imf.curve;
    if curve.len() != fermi.charts.len() {
        return Err(Error::InvalidArgument("one chart per curve sample is required".into()));
    }
    let n = spec.dimension();
    let eta = tensor::eta(spec.signature());
    let origin = vec![0.0; n];
    let mut r = Maxima::default();
    for (s, chart) in curve.iter().zip(&fermi.charts) {
        if chart.kind != ConnectionKind::LeviCivita || tensor_diff(&chart.base_point, &s.point) > 0.0 {
            return Err(Error::InvalidArgument("chart is not a Levi-Civita chart based on the curve".into()));
        }
        let m = chart.metric_at(spec, &origin)?;
        let inv = chart
            .frame
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularFrame { point: s.point.clone() })?;
        let v = &inv * DVector::from_column_slice(&s.velocity);
        let tangent = (0..n).fold(0.0f64, |acc, a| acc.max((v[a] - if a == 0 { 1.0 } else { 0.0 }).abs()));
        r.put("tangent", tangent);
        r.put("unit_tangent", unit_tangent_residual(spec, s)?);
        r.put("metric", tensor::max_abs(&(&m.g - &eta)));
        let dg = m.jets.iter().fold(0.0f64, |acc, j| acc.max(vec_max(&j.grad)));
        r.put("metric_derivative", dg);
        // α_L = g(∂_0, ·): α_μ = g_{0μ}, ∂_ν α_μ = ∂_ν g_{0μ}
        let alpha: Vec<f64> = (0..n).map(|mu| m.g[(0, mu)]).collect();
        let d = DMatrix::from_fn(n, n, |mu, nu| m.dg(0, nu, mu) - m.dg(0, mu, nu));
        let wedge = Tensor3::from_fn(n, |l, a, b| alpha[l] * d[(a, b)] + alpha[a] * d[(b, l)] + alpha[b] * d[(l, a)]);
        r.put("alpha_wedge_dalpha", wedge.max_abs());
    }
    let samples = curve.iter().map(|s| s.point.clone()).collect();
    let mut verdict = FrameVerdict::new(Predicate::LirfLorentzian, r.0, tol, samples);
    let mid = &fermi.charts[fermi.charts.len() / 2];
    let mut off = vec![0.0; n];
    if n > 1 {
        off[1] = 0.5 * mid.patch_radius;
    }
    if let Ok(m) = mid.metric_at(spec, &off) {
        let dg = m.jets.iter().fold(0.0f64, |acc, j| acc.max(vec_max(&j.grad)));
        verdict.info.insert("off_curve_metric_derivative".into(), dg);
    }
    Ok(verdict)
}

fn tensor_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Riemann-Cartan local inertial frame along an autoparallel, from a frame
/// carried along the curve.
///
/// Criteria, on the curve only: `e_0 = γ*` (`tangent`, `unit_tangent`),
/// orthonormality, `D_{γ*} e_μ = 0` (`connection`: each sample's frame
/// carried to the next sample along the autoparallel, compared with the
/// frame given there), and `ω = -T⁰`
/// (`rotation`). For the last one the frame is extended off the curve by
/// `∂_b e_μ^a = -Γ^a_{bc} e_μ^c`, the section on which every frame-basis
/// coefficient vanishes at the sample.
pub fn lirf_rc_check(spec: &SpacetimeSpec, imf: &TransportedFrame, tol: f64) -> Result<FrameVerdict> {
    check_tolerance(tol)?;
    let torsion = spec.require_torsion()?;
    let curve = &imf.curve;
    if curve.is_empty() || curve.len() != imf.frames.len() {
        return Err(Error::InvalidArgument("frame and curve samples do not match".into()));
    }
    let n = spec.dimension();
    let time_sign = lorentzian_time_sign(spec.signature()).ok_or_else(|| Error::NotLorentzian(spec.signature().to_vec()))?;
    let cfg = IntegratorConfig {
        tolerance: 1e-13,
        step: 1e-2,
        ..IntegratorConfig::default()
    };
    let mut r = Maxima::default();
    r.put("tangent", imf.tangent_alignment(spec));
    r.put("orthonormality", imf.orthonormality_residual(spec));
    r.put("connection", 0.0);
    for k in 1..curve.len() {
        let carried = carry_frame(spec, ConnectionKind::RiemannCartan, &curve[k - 1], &imf.frames[k - 1], curve[k].tau, &cfg)?;
        r.put("connection", tensor::max_abs(&(&carried - &imf.frames[k])));
    }
    for (s, lam) in curve.iter().zip(&imf.frames) {
        r.put("unit_tangent", unit_tangent_residual(spec, s)?);
        let conn = rc_connection(spec, &s.point, false)?;
        let z: Vec<f64> = (0..n).map(|a| lam[(a, 0)]).collect();
        let dz = DMatrix::from_fn(n, n, |a, b| -(0..n).map(|c| conn.gamma[(a, b, c)] * z[c]).sum::<f64>());
        let fe = FieldEval {
            z,
            dz,
            metric: spec.eval_metric(&s.point)?,
            time_sign,
        };
        let lc = decompose_from(&fe, &christoffel(spec, &s.point, false)?);
        let corr = corrections(&fe, lam, &torsion.eval(&s.point));
        r.put("rotation", tensor::max_abs(&(&lc.omega + &corr.t0)));
    }
    let samples = curve.iter().map(|s| s.point.clone()).collect();
    let mut verdict = FrameVerdict::new(Predicate::LirfRc, r.0, tol, samples);
    verdict.info.insert("transport_error_estimate".into(), imf.max_residual());
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize)]
pub struct AntisymmetryReport {
    pub totally_antisymmetric: bool,
    /// `max |T_{μαν} - T_{[μαν]}|` with all indices lowered.
    pub max_violation: f64,
    /// `max |S^λ_{μν}|`; zero exactly when the lowered torsion is totally
    /// antisymmetric.
    pub max_strain: f64,
    pub tolerance: f64,
    pub samples: Vec<Vec<f64>>,
}

/// Whether the lowered torsion is totally antisymmetric, the condition under
/// which autoparallels and geodesics coincide. A spec without torsion passes
/// with zero violation.
pub fn antisymmetry_condition(spec: &SpacetimeSpec, samples: &[Vec<f64>], tol: f64) -> Result<AntisymmetryReport> {
    check_tolerance(tol)?;
    check_samples(samples)?;
    let n = spec.dimension();
    let mut max_violation: f64 = 0.0;
    let mut max_strain: f64 = 0.0;
    if let Some(torsion) = &spec.torsion {
        for p in samples {
            let m = spec.eval_metric(p)?;
            let t = torsion.eval(p);
            let low = Tensor3::from_fn(n, |m_, a, b| (0..n).map(|l| m.g[(m_, l)] * t[(l, a, b)]).sum());
            // T is antisymmetric in its last pair, so the total antisymmetrization
            // reduces to the cyclic mean
            let anti = Tensor3::from_fn(n, |a, b, c| (low[(a, b, c)] + low[(b, c, a)] + low[(c, a, b)]) / 3.0);
            max_violation = max_violation.max(low.max_abs_diff(&anti));
            max_strain = max_strain.max(strain_from(&m.g, &m.g_inv, &t).max_abs());
        }
    }
    Ok(AntisymmetryReport {
        totally_antisymmetric: max_violation <= tol,
        max_violation,
        max_strain,
        tolerance: tol,
        samples: samples.to_vec(),
    })
}

/// Largest coordinate distance between the Riemann-Cartan autoparallel and
/// the geodesic launched with the same data, compared at every step.
pub fn autoparallel_separation(
    spec: &SpacetimeSpec,
    start: &CurveState,
    tau_end: f64,
    step: f64,
) -> Result<f64> {
    let cfg = IntegratorConfig::fixed(step);
    let rc = integrate_autoparallel(spec, ConnectionKind::RiemannCartan, start, tau_end, &cfg)?;
    let lc = integrate_autoparallel(spec, ConnectionKind::LeviCivita, start, tau_end, &cfg)?;
    Ok(rc
        .iter()
        .zip(&lc)
        .fold(0.0, |m, (a, b)| m.max(tensor_diff(&a.point, &b.point))))
}
