//! Connection coefficients, torsion, contorsion and curvature at a point.
//!
//! Index convention: `gamma[(a, m, n)] = Γ^a_{mn}` is the coefficient in
//! `D_{e_m} e_n = Γ^a_{mn} e_a`, so the middle index is the derivative
//! direction. Gradients are stored as `grad[(s, a, m, n)] = e_s(Γ^a_{mn})`,
//! the derivative along the basis vector `e_s` (a plain partial in a
//! coordinate basis).

mod curvature;
mod frame;
mod torsion;

pub use curvature::{
    curvature, curvature_split, ricci, scalar_curvature, CurvatureSplit, CurvatureTensor,
};
pub use frame::{
    frame_connection, frame_parallel_residual, frame_torsion, structure_coefficients, structure_from_frame,
    teleparallel_from_frame, teleparallel_from_frame_eval,
};
pub use torsion::{
    contorsion, contorsion_forms, contorsion_from, contorsion_grad_from, strain, strain_from,
    strain_grad_from,
};

use crate::error::{Error, Result};
use crate::spacetime::{MetricEval, SpacetimeSpec};
use crate::tensor::{Tensor3, Tensor4};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    LeviCivita,
    RiemannCartan,
    Teleparallel,
    FrameBasis,
}

impl ConnectionKind {
    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::LeviCivita => "levi_civita",
            ConnectionKind::RiemannCartan => "riemann_cartan",
            ConnectionKind::Teleparallel => "teleparallel",
            ConnectionKind::FrameBasis => "frame_basis",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "levi_civita" | "lc" => Some(ConnectionKind::LeviCivita),
            "riemann_cartan" | "rc" => Some(ConnectionKind::RiemannCartan),
            "teleparallel" => Some(ConnectionKind::Teleparallel),
            "frame_basis" => Some(ConnectionKind::FrameBasis),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Coordinate,
    Frame,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionCoefficients {
    pub kind: ConnectionKind,
    pub gamma: Tensor3,
    pub gamma_grad: Option<Tensor4>,
    pub at_point: Vec<f64>,
}

impl ConnectionCoefficients {
    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    /// Torsion `T^a_{mn} = Γ^a_{mn} - Γ^a_{nm}`; valid in a coordinate basis.
    pub fn torsion(&self) -> Tensor3 {
        let g = &self.gamma;
        Tensor3::from_fn(g.dim(), |a, m, n| g[(a, m, n)] - g[(a, n, m)])
    }

    /// Right-hand side of the autoparallel equation, `-Γ^a_{mn} v^m v^n`.
    pub fn acceleration(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|a| {
                let mut s = 0.0;
                for m in 0..n {
                    for k in 0..n {
                        s += self.gamma[(a, m, k)] * v[m] * v[k];
                    }
                }
                -s
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TorsionTensor {
    pub basis: Basis,
    pub components: Tensor3,
}

/// Christoffel symbols from metric data.
pub fn christoffel_from(m: &MetricEval, with_grad: bool) -> ConnectionCoefficients {
    let n = m.dim();
    // B_{k m a} = d_m g_{ka} + d_a g_{km} - d_k g_{ma}
    let b = Tensor3::from_fn(n, |k, mu, a| m.dg(k, a, mu) + m.dg(k, mu, a) - m.dg(mu, a, k));
    let gamma = Tensor3::from_fn(n, |nu, mu, a| {
        0.5 * (0..n).map(|k| m.g_inv[(nu, k)] * b[(k, mu, a)]).sum::<f64>()
    });
    let gamma_grad = with_grad.then(|| {
        let dginv = m.dg_inv();
        Tensor4::from_fn(n, |s, nu, mu, a| {
            let mut acc = 0.0;
            for k in 0..n {
                let db = m.d2g(k, a, mu, s) + m.d2g(k, mu, a, s) - m.d2g(mu, a, k, s);
                acc += dginv[s][(nu, k)] * b[(k, mu, a)] + m.g_inv[(nu, k)] * db;
            }
            0.5 * acc
        })
    });
    ConnectionCoefficients {
        kind: ConnectionKind::LeviCivita,
        gamma,
        gamma_grad,
        at_point: m.point.clone(),
    }
}

pub fn christoffel(spec: &SpacetimeSpec, p: &[f64], with_grad: bool) -> Result<ConnectionCoefficients> {
    Ok(christoffel_from(&spec.eval_metric(p)?, with_grad))
}

/// Riemann-Cartan connection `Γ = Γ̊ + K` built from the spec's torsion.
pub fn rc_connection(spec: &SpacetimeSpec, p: &[f64], with_grad: bool) -> Result<ConnectionCoefficients> {
    let torsion = spec.require_torsion()?;
    let m = spec.eval_metric(p)?;
    let lc = christoffel_from(&m, with_grad);
    let (t, dt) = torsion.eval_with_grad(p);
    let k = contorsion_from(&m.g, &m.g_inv, &t);
    let n = m.dim();
    let gamma = lc.gamma.zip_map(&k, |a, b| a + b);
    let gamma_grad = lc.gamma_grad.map(|lg| {
        let dk = contorsion_grad_from(&m, &t, &dt);
        Tensor4::from_fn(n, |s, a, b, c| lg[(s, a, b, c)] + dk[(s, a, b, c)])
    });
    Ok(ConnectionCoefficients {
        kind: ConnectionKind::RiemannCartan,
        gamma,
        gamma_grad,
        at_point: p.to_vec(),
    })
}

/// Connection of the requested kind in the coordinate basis.
pub fn connection_at(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    p: &[f64],
    with_grad: bool,
) -> Result<ConnectionCoefficients> {
    match kind {
        ConnectionKind::LeviCivita => christoffel(spec, p, with_grad),
        ConnectionKind::RiemannCartan => rc_connection(spec, p, with_grad),
        ConnectionKind::Teleparallel => {
            let frame = spec.require_frame()?;
            Ok(teleparallel_from_frame(spec, frame, p, with_grad)?.0)
        }
        ConnectionKind::FrameBasis => Err(Error::InvalidArgument(
            "frame-basis coefficients are not a coordinate connection".into(),
        )),
    }
}

/// `max |d_m g_{ab} - Γ^l_{ma} g_{lb} - Γ^l_{mb} g_{al}|` for a coordinate-basis
/// connection.
pub fn metric_compatibility_residual(conn: &ConnectionCoefficients, m: &MetricEval) -> f64 {
    let n = m.dim();
    let mut worst: f64 = 0.0;
    for mu in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut r = m.dg(a, b, mu);
                for l in 0..n {
                    r -= conn.gamma[(l, mu, a)] * m.g[(l, b)] + conn.gamma[(l, mu, b)] * m.g[(a, l)];
                }
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::parse_spacetime_spec;

    const SPHERE: &str =
        "name = s\ncoordinates = theta, phi\nsignature = 1, 1\n[metric]\ng[0][0] = 1\ng[1][1] = sin(theta)^2\n";

    #[test]
    fn sphere_christoffel() {
        let spec = parse_spacetime_spec(SPHERE).unwrap();
        let th = std::f64::consts::FRAC_PI_3;
        let c = christoffel(&spec, &[th, 0.0], true).unwrap();
        assert!((c.gamma[(0, 1, 1)] + 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((c.gamma[(1, 0, 1)] - th.cos() / th.sin()).abs() < 1e-15);
        assert_eq!(c.gamma[(1, 0, 1)], c.gamma[(1, 1, 0)]);
        // d_theta of -sin cos = -cos(2 theta)
        let g = c.gamma_grad.unwrap();
        assert!((g[(0, 0, 1, 1)] + (2.0 * th).cos()).abs() < 1e-14);
    }

    #[test]
    fn christoffel_gradient_matches_finite_difference() {
        let spec = parse_spacetime_spec(SPHERE).unwrap();
        let p = [0.7, 0.2];
        let c = christoffel(&spec, &p, true).unwrap();
        let h = 1e-6;
        let up = christoffel(&spec, &[p[0] + h, p[1]], false).unwrap();
        let dn = christoffel(&spec, &[p[0] - h, p[1]], false).unwrap();
        let grad = c.gamma_grad.unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for d in 0..2 {
                    let fd = (up.gamma[(a, b, d)] - dn.gamma[(a, b, d)]) / (2.0 * h);
                    assert!((grad[(0, a, b, d)] - fd).abs() < 1e-8);
                }
            }
        }
    }
}
