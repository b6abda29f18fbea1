//! Normal coordinates around a point.
//!
//! The chart is the explicit polynomial map
//!
//! ```text
//! x = p0 + u - ½ Γ_(bc)(p0) u^b u^c + ⅙ C_bcd u^b u^c u^d,    u = E ξ
//! ```
//!
//! where `E` is a constant frame at `p0` and
//! `C^a_{bcd} = sym(-∂_d Γ^a_{bc} + 2 Γ^a_{ec} Γ^e_{bd})` is the cubic Taylor
//! coefficient of the exponential map. The quadratic term makes the
//! symmetric part of the connection vanish at `p0`; the cubic term makes the
//! chart agree with the exponential map to third order, which fixes the first
//! derivatives of the connection at `p0` to their normal-coordinate values.
//!
//! For the Levi-Civita connection `E` is `g`-orthonormal, so `g(p0) = η`.
//! For a Riemann-Cartan connection only the symmetric part of `Γ` is used,
//! `E` is the identity and no cubic term is added.

use crate::connection::{
    christoffel, christoffel_from, contorsion_from, curvature, rc_connection, strain_from, ConnectionCoefficients,
    ConnectionKind,
};
use crate::error::{Error, Result};
use crate::jet::ScalarJet;
use crate::spacetime::{orthonormal_basis, seed_jets, MetricEval, SpacetimeSpec};
use crate::tensor::{self, Tensor3, Tensor4};
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalChartConfig {
    /// Radius (in normal coordinates) over which the chart must be invertible.
    pub patch_radius: f64,
    /// Include the cubic term (Levi-Civita charts only).
    pub cubic: bool,
}

impl Default for NormalChartConfig {
    fn default() -> Self {
        Self {
            patch_radius: 0.1,
            cubic: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalChart {
    pub kind: ConnectionKind,
    pub base_point: Vec<f64>,
    /// Source-chart connection coefficients at the base point.
    pub gamma_at_p0: Tensor3,
    gamma_sym: Tensor3,
    /// Symmetrized cubic coefficients, when present.
    pub cubic: Option<Tensor4>,
    /// `frame[(i, a)]`: component `i` of the frame vector `∂/∂ξ^a` at `p0`.
    #[serde(with = "tensor::serde_matrix")]
    pub frame: DMatrix<f64>,
    #[serde(skip)]
    frame_inv: DMatrix<f64>,
    pub patch_radius: f64,
}

fn symmetric_part(g: &Tensor3) -> Tensor3 {
    Tensor3::from_fn(g.dim(), |a, b, c| 0.5 * (g[(a, b, c)] + g[(a, c, b)]))
}

fn cubic_coefficients(conn: &ConnectionCoefficients) -> Result<Tensor4> {
    let dg = conn.gamma_grad.as_ref().ok_or(Error::MissingGradient)?;
    let g = &conn.gamma;
    let n = conn.dim();
    let raw = Tensor4::from_fn(n, |a, b, c, d| {
        let mut v = -dg[(d, a, b, c)];
        for e in 0..n {
            v += 2.0 * g[(a, e, c)] * g[(e, b, d)];
        }
        v
    });
    let perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)];
    Ok(Tensor4::from_fn(n, |a, b, c, d| {
        let idx = [b, c, d];
        perms
            .iter()
            .map(|(i, j, k)| raw[(a, idx[*i], idx[*j], idx[*k])])
            .sum::<f64>()
            / 6.0
    }))
}

/// Normal chart at `p0` for the Levi-Civita or Riemann-Cartan connection.
pub fn build_normal_chart(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    p0: &[f64],
    cfg: &NormalChartConfig,
) -> Result<NormalChart> {
    match kind {
        ConnectionKind::LeviCivita => {
            let m = spec.eval_metric(p0)?;
            let frame = orthonormal_basis(&m.g, spec.signature(), None)?;
            build_levi_civita_chart(spec, p0, frame, cfg)
        }
        ConnectionKind::RiemannCartan => {
            let conn = rc_connection(spec, p0, false)?;
            let n = spec.dimension();
            finish(
                spec,
                NormalChart {
                    kind,
                    base_point: p0.to_vec(),
                    gamma_sym: symmetric_part(&conn.gamma),
                    gamma_at_p0: conn.gamma,
                    cubic: None,
                    frame: DMatrix::identity(n, n),
                    frame_inv: DMatrix::identity(n, n),
                    patch_radius: cfg.patch_radius,
                },
            )
        }
        other => Err(Error::InvalidArgument(format!(
            "normal charts are built for levi_civita or riemann_cartan, not {}",
            other.name()
        ))),
    }
}

/// Levi-Civita normal chart whose coordinate basis at `p0` is the given frame
/// (columns). With a `g`-orthonormal frame, `g(p0) = η`.
pub fn build_levi_civita_chart(
    spec: &SpacetimeSpec,
    p0: &[f64],
    frame: DMatrix<f64>,
    cfg: &NormalChartConfig,
) -> Result<NormalChart> {
    let conn = christoffel(spec, p0, cfg.cubic)?;
    let cubic = if cfg.cubic { Some(cubic_coefficients(&conn)?) } else { None };
    let frame_inv = frame
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularFrame { point: p0.to_vec() })?;
    finish(
        spec,
        NormalChart {
            kind: ConnectionKind::LeviCivita,
            base_point: p0.to_vec(),
            gamma_sym: symmetric_part(&conn.gamma),
            gamma_at_p0: conn.gamma,
            cubic,
            frame,
            frame_inv,
            patch_radius: cfg.patch_radius,
        },
    )
}

fn finish(spec: &SpacetimeSpec, chart: NormalChart) -> Result<NormalChart> {
    let n = spec.dimension();
    let r = chart.patch_radius;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("patch radius must be positive, got {r}")));
    }
    let mut probes = Vec::new();
    for a in 0..n {
        for s in [-1.0, 1.0] {
            let mut xi = vec![0.0; n];
            xi[a] = s * r;
            probes.push(xi);
        }
    }
    for s in [-1.0, 1.0] {
        probes.push(vec![s * r / (n as f64).sqrt(); n]);
    }
    for xi in &probes {
        let rel = &chart.frame_inv * chart.jacobian(xi);
        let det = rel.determinant();
        if !(det > 0.1) {
            return Err(Error::PatchNotInvertible { radius: r });
        }
    }
    Ok(chart)
}

impl NormalChart {
    pub fn dim(&self) -> usize {
        self.base_point.len()
    }

    fn u_of(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|b| (0..n).map(|a| self.frame[(b, a)] * xi[a]).sum()).collect()
    }

    /// Source-chart coordinates of the point with normal coordinates `xi`.
    pub fn from_normal(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let u = self.u_of(xi);
        (0..n)
            .map(|a| {
                let mut x = self.base_point[a] + u[a];
                for b in 0..n {
                    for c in 0..n {
                        x -= 0.5 * self.gamma_sym[(a, b, c)] * u[b] * u[c];
                        if let Some(cub) = &self.cubic {
                            for d in 0..n {
                                x += cub[(a, b, c, d)] * u[b] * u[c] * u[d] / 6.0;
                            }
                        }
                    }
                }
                x
            })
            .collect()
    }

    /// `∂x^i/∂ξ^a`.
    pub fn jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let u = self.u_of(xi);
        // d x / d u
        let dxdu = DMatrix::from_fn(n, n, |i, b| {
            let mut v = if i == b { 1.0 } else { 0.0 };
            for c in 0..n {
                v -= self.gamma_sym[(i, b, c)] * u[c];
                if let Some(cub) = &self.cubic {
                    for d in 0..n {
                        v += 0.5 * cub[(i, b, c, d)] * u[c] * u[d];
                    }
                }
            }
            v
        });
        dxdu * &self.frame
    }

    /// Normal coordinates of a source-chart point (Newton inversion of
    /// [`from_normal`](Self::from_normal)).
    pub fn to_normal(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let dx: Vec<f64> = (0..n).map(|a| x[a] - self.base_point[a]).collect();
        let guess: Vec<f64> = (0..n)
            .map(|a| {
                let mut v = dx[a];
                for b in 0..n {
                    for c in 0..n {
                        v += 0.5 * self.gamma_sym[(a, b, c)] * dx[b] * dx[c];
                    }
                }
                v
            })
            .collect();
        let mut xi: Vec<f64> = (0..n).map(|a| (0..n).map(|b| self.frame_inv[(a, b)] * guess[b]).sum()).collect();
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..60 {
            let fx = self.from_normal(&xi);
            let r = nalgebra::DVector::from_fn(n, |i, _| fx[i] - x[i]);
            if r.amax() <= 1e-15 * scale {
                return Ok(xi);
            }
            let step = self
                .jacobian(&xi)
                .lu()
                .solve(&r)
                .ok_or(Error::PatchNotInvertible { radius: self.patch_radius })?;
            for a in 0..n {
                xi[a] -= step[a];
            }
            if step.amax() <= 1e-16 * scale {
                return Ok(xi);
            }
        }
        let fx = self.from_normal(&xi);
        let res = (0..n).fold(0.0f64, |m, i| m.max((fx[i] - x[i]).abs()));
        if res <= 1e-10 * scale {
            Ok(xi)
        } else {
            Err(Error::PatchNotInvertible { radius: self.patch_radius })
        }
    }

    /// Jets of `x(ξ)` and of the Jacobian entries `J[i * n + a]`, seeded at `xi`.
    fn jets(&self, xi: &[f64]) -> (Vec<ScalarJet>, Vec<ScalarJet>) {
        let n = self.dim();
        let seeds = seed_jets(xi);
        let zero = ScalarJet::constant(0.0, n);
        let u: Vec<ScalarJet> = (0..n)
            .map(|b| {
                (0..n).fold(zero.clone(), |acc, a| &acc + &seeds[a].scale(self.frame[(b, a)]))
            })
            .collect();
        let mut x = Vec::with_capacity(n);
        let mut dxdu = Vec::with_capacity(n * n);
        for i in 0..n {
            let mut xi_jet = &u[i] + &ScalarJet::constant(self.base_point[i], n);
            for b in 0..n {
                let mut d = ScalarJet::constant(if i == b { 1.0 } else { 0.0 }, n);
                for c in 0..n {
                    let gs = self.gamma_sym[(i, b, c)];
                    if gs != 0.0 {
                        let uc = u[c].scale(gs);
                        xi_jet = &xi_jet - &(&u[b] * &uc).scale(0.5);
                        d = &d - &uc;
                    }
                    if let Some(cub) = &self.cubic {
                        let ucu: Vec<ScalarJet> = (0..n)
                            .filter(|dd| cub[(i, b, c, *dd)] != 0.0)
                            .map(|dd| (&u[c] * &u[dd]).scale(cub[(i, b, c, dd)]))
                            .collect();
                        for t in ucu {
                            xi_jet = &xi_jet + &(&u[b] * &t).scale(1.0 / 6.0);
                            d = &d + &t.scale(0.5);
                        }
                    }
                }
                dxdu.push(d);
            }
            x.push(xi_jet);
        }
        let jac: Vec<ScalarJet> = (0..n * n)
            .map(|k| {
                let (i, a) = (k / n, k % n);
                (0..n).fold(zero.clone(), |acc, b| &acc + &dxdu[i * n + b].scale(self.frame[(b, a)]))
            })
            .collect();
        (x, jac)
    }

    /// Metric in normal coordinates, with jets in `ξ`.
    pub fn metric_at(&self, spec: &SpacetimeSpec, xi: &[f64]) -> Result<MetricEval> {
        let n = self.dim();
        let (x, jac) = self.jets(xi);
        let point: Vec<f64> = x.iter().map(|j| j.value).collect();
        spec.chart.check_point(&point)?;
        let g = spec.metric_jets_at(&x);
        let zero = ScalarJet::constant(0.0, n);
        let mut out: Vec<ScalarJet> = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                if b < a {
                    let sym: ScalarJet = out[b * n + a].clone();
                    out.push(sym);
                    continue;
                }
                let mut acc = zero.clone();
                for i in 0..n {
                    for j in 0..n {
                        let gij = &g[i * n + j];
                        if gij.value == 0.0 && gij.grad.iter().all(|v| *v == 0.0) && gij.hess.iter().all(|v| *v == 0.0) {
                            continue;
                        }
                        acc = &acc + &(&(&jac[i * n + a] * gij) * &jac[j * n + b]);
                    }
                }
                out.push(acc);
            }
        }
        MetricEval::from_jets(xi, out, spec.signature())
    }

    /// Levi-Civita connection in normal coordinates.
    pub fn christoffel_at(&self, spec: &SpacetimeSpec, xi: &[f64], with_grad: bool) -> Result<ConnectionCoefficients> {
        Ok(christoffel_from(&self.metric_at(spec, xi)?, with_grad))
    }

    /// Torsion transformed to normal coordinates.
    pub fn torsion_at(&self, spec: &SpacetimeSpec, xi: &[f64]) -> Result<Tensor3> {
        let torsion = spec.require_torsion()?;
        let x = self.from_normal(xi);
        let t = torsion.eval(&x);
        let j = self.jacobian(xi);
        let jinv = j
            .clone()
            .try_inverse()
            .ok_or(Error::PatchNotInvertible { radius: self.patch_radius })?;
        let n = self.dim();
        Ok(Tensor3::from_fn(n, |a, b, c| {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += jinv[(a, i)] * t[(i, k, l)] * j[(k, b)] * j[(l, c)];
                    }
                }
            }
            s
        }))
    }

    /// Riemann-Cartan connection in normal coordinates (values only).
    pub fn rc_connection_at(&self, spec: &SpacetimeSpec, xi: &[f64]) -> Result<ConnectionCoefficients> {
        let m = self.metric_at(spec, xi)?;
        let t = self.torsion_at(spec, xi)?;
        let lc = christoffel_from(&m, false);
        let k = contorsion_from(&m.g, &m.g_inv, &t);
        Ok(ConnectionCoefficients {
            kind: ConnectionKind::RiemannCartan,
            gamma: lc.gamma.zip_map(&k, |a, b| a + b),
            gamma_grad: None,
            at_point: xi.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaDerivativeCheck {
    /// `fd[(m, a, b, c)] = ∂Γ^a_{bc}/∂ξ^m` by central differences at `p0`.
    pub finite_difference: Tensor4,
    /// `-(R_b^a_{cm} + R_c^a_{bm}) / 3`.
    pub predicted: Tensor4,
    pub max_abs_residual: f64,
    pub relative_residual: f64,
    pub step: f64,
}

/// Compares finite-difference derivatives of the normal-chart Christoffel
/// symbols at `p0` with the curvature expression.
pub fn verify_gamma_derivative(spec: &SpacetimeSpec, chart: &NormalChart, h: f64) -> Result<GammaDerivativeCheck> {
    if chart.kind != ConnectionKind::LeviCivita {
        return Err(Error::InvalidArgument("the derivative identity needs a levi_civita chart".into()));
    }
    let n = chart.dim();
    let origin = vec![0.0; n];
    let curv = curvature(&chart.christoffel_at(spec, &origin, true)?, None)?.components;
    let predicted = Tensor4::from_fn(n, |m, a, b, c| -(curv[(b, a, c, m)] + curv[(c, a, b, m)]) / 3.0);
    let mut finite_difference = Tensor4::zeros(n);
    for m in 0..n {
        let mut up = origin.clone();
        let mut dn = origin.clone();
        up[m] = h;
        dn[m] = -h;
        let gu = chart.christoffel_at(spec, &up, false)?.gamma;
        let gd = chart.christoffel_at(spec, &dn, false)?.gamma;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    finite_difference[(m, a, b, c)] = (gu[(a, b, c)] - gd[(a, b, c)]) / (2.0 * h);
                }
            }
        }
    }
    let max_abs_residual = finite_difference.max_abs_diff(&predicted);
    let scale = predicted.max_abs().max(finite_difference.max_abs());
    let relative_residual = if scale < 1e-12 { max_abs_residual } else { max_abs_residual / scale };
    Ok(GammaDerivativeCheck {
        finite_difference,
        predicted,
        max_abs_residual,
        relative_residual,
        step: h,
    })
}

/// Residuals of the defining conditions of a normal chart at its base point.
///
/// Levi-Civita: `gamma` (all Christoffel symbols), `metric_minus_eta` and
/// `metric_derivative`. Riemann-Cartan: `symmetric_part` of the connection,
/// `torsion_minus_2gamma` (`T = 2Γ`) and `strain_plus_2christoffel`
/// (`S = -2Γ̊`).
pub fn postcondition_residuals(spec: &SpacetimeSpec, chart: &NormalChart) -> Result<BTreeMap<String, f64>> {
    let n = chart.dim();
    let origin = vec![0.0; n];
    let m = chart.metric_at(spec, &origin)?;
    let lc = christoffel_from(&m, false).gamma;
    let mut out = BTreeMap::new();
    match chart.kind {
        ConnectionKind::LeviCivita => {
            out.insert("gamma".into(), lc.max_abs());
            out.insert(
                "metric_minus_eta".into(),
                tensor::max_abs(&(&m.g - tensor::eta(spec.signature()))),
            );
            let dg = m.jets.iter().flat_map(|j| j.grad.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
            out.insert("metric_derivative".into(), dg);
        }
        _ => {
            let g = chart.rc_connection_at(spec, &origin)?.gamma;
            let t = chart.torsion_at(spec, &origin)?;
            let s = strain_from(&m.g, &m.g_inv, &t);
            out.insert("symmetric_part".into(), symmetric_part(&g).max_abs());
            out.insert("torsion_minus_2gamma".into(), Tensor3::from_fn(n, |a, b, c| t[(a, b, c)] - 2.0 * g[(a, b, c)]).max_abs());
            out.insert("strain_plus_2christoffel".into(), Tensor3::from_fn(n, |a, b, c| s[(a, b, c)] + 2.0 * lc[(a, b, c)]).max_abs());
        }
    }
    Ok(out)
}
