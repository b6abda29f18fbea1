//! Parallel transport of frames along curves.
//!
//! A frame is a matrix `Λ` whose columns are the frame vectors in the
//! coordinate basis. Along a curve `x(τ)` it obeys
//! `dΛ^a_m/dτ = -Γ^a_{bc}(x) ẋ^b Λ^c_m`.

use crate::connection::{connection_at, ConnectionKind};
use crate::error::{Error, Result};
use crate::integrate::{halving_error, rk4_step, CurveState, IntegratorConfig};
use crate::normal::{build_levi_civita_chart, NormalChart, NormalChartConfig};
use crate::spacetime::{lorentzian_time_sign, orthonormal_basis, SpacetimeSpec};
use crate::tensor::{self, eta};
use nalgebra::DMatrix;
use serde::Serialize;

/// Largest condition number tolerated for a transported frame.
pub const MAX_FRAME_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Serialize)]
pub struct TransportedFrame {
    pub curve: Vec<CurveState>,
    #[serde(with = "tensor::serde_matrices")]
    pub frames: Vec<DMatrix<f64>>,
    /// Step-halving estimate of the transport error accumulated on the step
    /// into each state.
    pub residuals: Vec<f64>,
}

impl TransportedFrame {
    /// `max_k |Λ_k^T g Λ_k - Λ_0^T g Λ_0|`.
    pub fn gram_drift(&self, spec: &SpacetimeSpec) -> f64 {
        let gram = |k: usize| {
            let g = spec.metric_values(&self.curve[k].point);
            self.frames[k].transpose() * g * &self.frames[k]
        };
        let g0 = gram(0);
        (0..self.frames.len()).fold(0.0, |m, k| m.max(tensor::max_abs(&(gram(k) - &g0))))
    }

    /// `max_k |Λ_k^T g Λ_k - η|`.
    pub fn orthonormality_residual(&self, spec: &SpacetimeSpec) -> f64 {
        let eta = eta(spec.signature());
        (0..self.frames.len()).fold(0.0, |m, k| {
            let g = spec.metric_values(&self.curve[k].point);
            let gram = self.frames[k].transpose() * g * &self.frames[k];
            m.max(tensor::max_abs(&(gram - &eta)))
        })
    }

    /// `max_k |e_0 - γ̇ / |γ̇||` over the curve.
    pub fn tangent_alignment(&self, spec: &SpacetimeSpec) -> f64 {
        let n = spec.dimension();
        (0..self.frames.len()).fold(0.0, |m, k| {
            let s = &self.curve[k];
            let g = spec.metric_values(&s.point);
            let v = nalgebra::DVector::from_column_slice(&s.velocity);
            let norm = (v.transpose() * &g * &v)[(0, 0)].abs().sqrt();
            (0..n).fold(m, |m, a| m.max((self.frames[k][(a, 0)] - v[a] / norm).abs()))
        })
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Cubic Hermite interpolation of position and its derivative between two
/// curve samples.
fn hermite(s0: &CurveState, s1: &CurveState, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let h = s1.tau - s0.tau;
    let s = (tau - s0.tau) / h;
    let (s2, s3) = (s * s, s * s * s);
    let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
    let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
    let n = s0.point.len();
    let x = (0..n)
        .map(|a| h00 * s0.point[a] + h10 * h * s0.velocity[a] + h01 * s1.point[a] + h11 * h * s1.velocity[a])
        .collect();
    let v = (0..n)
        .map(|a| (d00 * s0.point[a] + d01 * s1.point[a]) / h + d10 * s0.velocity[a] + d11 * s1.velocity[a])
        .collect();
    (x, v)
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n * n).map(|k| m[(k / n, k % n)]).collect()
}

fn unflat(v: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |a, m| v[a * n + m])
}

/// `-Γ^a_{bc} v^b Λ^c_m`, flattened row-major.
fn transport_rhs(spec: &SpacetimeSpec, kind: ConnectionKind, x: &[f64], v: &[f64], lam: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let conn = connection_at(spec, kind, x, false)?;
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for c in 0..n {
            let mut w = 0.0;
            for b in 0..n {
                w += conn.gamma[(a, b, c)] * v[b];
            }
            if w != 0.0 {
                for m in 0..n {
                    out[a * n + m] -= w * lam[c * n + m];
                }
            }
        }
    }
    Ok(out)
}

/// One interval, split into substeps no longer than `cfg.step`, each taken as
/// a Richardson-extrapolated pair of half steps. Returns the new state and
/// the largest halving difference.
fn advance<F>(f: &mut F, tau0: f64, tau1: f64, y: Vec<f64>, cfg: &IntegratorConfig) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let span = tau1 - tau0;
    let m = ((span.abs() / cfg.step).ceil() as usize).max(1);
    let h = span / m as f64;
    let mut y = y;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let t = tau0 + i as f64 * h;
        let full = rk4_step(f, t, &y, h)?;
        let mid = rk4_step(f, t, &y, h / 2.0)?;
        let half = rk4_step(f, t + h / 2.0, &mid, h / 2.0)?;
        worst = worst.max(halving_error(&full, &half));
        y = half.iter().zip(&full).map(|(a, b)| a + (a - b) / 15.0).collect();
    }
    Ok((y, worst))
}

fn check_frame(lam: &DMatrix<f64>) -> Result<()> {
    let condition = condition_number(lam);
    if condition > MAX_FRAME_CONDITION || !condition.is_finite() {
        return Err(Error::FrameDegenerate { condition });
    }
    Ok(())
}

fn check_curve(spec: &SpacetimeSpec, curve: &[CurveState]) -> Result<()> {
    let n = spec.dimension();
    if curve.is_empty() {
        return Err(Error::InvalidArgument("curve has no states".into()));
    }
    for s in curve {
        if s.point.len() != n || s.velocity.len() != n {
            return Err(Error::DimensionMismatch(format!("curve states must have {n} components")));
        }
    }
    if curve.windows(2).any(|w| !(w[1].tau > w[0].tau)) {
        return Err(Error::InvalidArgument("curve parameter must be strictly increasing".into()));
    }
    Ok(())
}

/// Transports `initial_frame` (columns = frame vectors) along an arbitrary
/// sampled curve. Between samples the curve is the cubic Hermite interpolant
/// of the sampled points and velocities.
pub fn parallel_transport_frame(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    curve: &[CurveState],
    initial_frame: &DMatrix<f64>,
    cfg: &IntegratorConfig,
) -> Result<TransportedFrame> {
    cfg.validate()?;
    check_curve(spec, curve)?;
    let n = spec.dimension();
    if initial_frame.nrows() != n || initial_frame.ncols() != n {
        return Err(Error::DimensionMismatch(format!("initial frame must be {n}x{n}")));
    }
    check_frame(initial_frame)?;
    let mut frames = vec![initial_frame.clone()];
    let mut residuals = vec![0.0];
    let mut y = flat(initial_frame);
    for w in curve.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        let mut rhs = |tau: f64, lam: &[f64]| {
            let (x, v) = hermite(s0, s1, tau);
            transport_rhs(spec, kind, &x, &v, lam)
        };
        let (next, err) = advance(&mut rhs, s0.tau, s1.tau, y, cfg)?;
        let lam = unflat(&next, n);
        check_frame(&lam)?;
        frames.push(lam);
        residuals.push(err);
        y = next;
    }
    Ok(TransportedFrame {
        curve: curve.to_vec(),
        frames,
        residuals,
    })
}

/// Right-hand side for `(x, v, Λ)`: the autoparallel together with the
/// transport of `Λ` (row-major) along it.
fn augmented_rhs(spec: &SpacetimeSpec, kind: ConnectionKind, y: &[f64]) -> Result<Vec<f64>> {
    let n = spec.dimension();
    let (x, v, lam) = (&y[..n], &y[n..2 * n], &y[2 * n..]);
    let conn = connection_at(spec, kind, x, false)?;
    let mut dy = v.to_vec();
    dy.extend(conn.acceleration(v));
    let mut dl = vec![0.0; n * n];
    for a in 0..n {
        for c in 0..n {
            let w: f64 = (0..n).map(|b| conn.gamma[(a, b, c)] * v[b]).sum();
            for mu in 0..n {
                dl[a * n + mu] -= w * lam[c * n + mu];
            }
        }
    }
    dy.extend(dl);
    Ok(dy)
}

/// Carries `frame` along the autoparallel from `start` to parameter `tau1`.
pub(crate) fn carry_frame(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    start: &CurveState,
    frame: &DMatrix<f64>,
    tau1: f64,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    let n = spec.dimension();
    let mut y = start.point.clone();
    y.extend_from_slice(&start.velocity);
    y.extend(flat(frame));
    let mut rhs = |_tau: f64, y: &[f64]| augmented_rhs(spec, kind, y);
    let (next, _) = advance(&mut rhs, start.tau, tau1, y, cfg)?;
    Ok(unflat(&next[2 * n..], n))
}

/// Inertial moving frame along a timelike autoparallel: an orthonormal
/// tetrad with `e_0` the unit tangent, transported with the curve.
///
/// The curve is re-integrated together with the frame on the given parameter
/// grid; disagreement with the supplied states beyond `1e-6` (or a hundred
/// times the integrator tolerance) rejects the curve as not autoparallel.
/// A non-unit timelike tangent is normalized for `e_0`.
pub fn construct_imf(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    curve: &[CurveState],
    cfg: &IntegratorConfig,
) -> Result<TransportedFrame> {
    cfg.validate()?;
    check_curve(spec, curve)?;
    let n = spec.dimension();
    let time_sign = lorentzian_time_sign(spec.signature()).ok_or_else(|| Error::NotLorentzian(spec.signature().to_vec()))?;
    let s0 = &curve[0];
    let m0 = spec.eval_metric(&s0.point)?;
    let norm = m0.inner(&s0.velocity, &s0.velocity);
    if !(norm * time_sign > 0.0) {
        return Err(Error::NotUnitTimelike { norm });
    }
    let tetrad = orthonormal_basis(&m0.g, spec.signature(), Some(&s0.velocity))?;

    let mut rhs = |_tau: f64, y: &[f64]| augmented_rhs(spec, kind, y);

    let threshold = (100.0 * cfg.tolerance).max(1e-6);
    let mut y = s0.point.clone();
    y.extend_from_slice(&s0.velocity);
    y.extend(flat(&tetrad));
    let mut frames = vec![tetrad];
    let mut residuals = vec![0.0];
    let mut deviation: f64 = 0.0;
    for w in curve.windows(2) {
        let (next, err) = advance(&mut rhs, w[0].tau, w[1].tau, y, cfg)?;
        for a in 0..n {
            deviation = deviation
                .max((next[a] - w[1].point[a]).abs() / (1.0 + w[1].point[a].abs()))
                .max((next[n + a] - w[1].velocity[a]).abs() / (1.0 + w[1].velocity[a].abs()));
        }
        if deviation > threshold {
            return Err(Error::NotAutoparallel { residual: deviation });
        }
        let lam = unflat(&next[2 * n..], n);
        check_frame(&lam)?;
        frames.push(lam);
        residuals.push(err);
        y = next;
    }
    Ok(TransportedFrame {
        curve: curve.to_vec(),
        frames,
        residuals,
    })
}

/// Normal charts centred on the points of a timelike geodesic, each using the
/// transported tetrad as its coordinate basis. In the chart attached to a
/// sample, `∂/∂ξ^0` is the unit tangent, `g = η`, `∂g = 0` and `Γ̊ = 0` at that
/// sample, so together they realize Fermi-type coordinates along the curve
/// to first order.
#[derive(Debug, Clone, Serialize)]
pub struct FermiChart {
    pub imf: TransportedFrame,
    pub charts: Vec<NormalChart>,
}

pub fn build_fermi_chart(
    spec: &SpacetimeSpec,
    curve: &[CurveState],
    cfg: &IntegratorConfig,
    chart_cfg: &NormalChartConfig,
) -> Result<FermiChart> {
    let imf = construct_imf(spec, ConnectionKind::LeviCivita, curve, cfg)?;
    let charts = imf
        .curve
        .iter()
        .zip(&imf.frames)
        .map(|(s, lam)| build_levi_civita_chart(spec, &s.point, lam.clone(), chart_cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(FermiChart { imf, charts })
}
