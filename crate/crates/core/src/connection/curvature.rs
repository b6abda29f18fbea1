//! Curvature of a connection in an arbitrary basis.
//!
//! With `ρ(u, v) = ∇_u ∇_v - ∇_v ∇_u - ∇_[u,v]` and
//! `ρ(e_a, e_b) e_m = R_m^l_{ab} e_l`:
//!
//! ```text
//! R_m^l_{ab} = e_a(Γ^l_{bm}) - e_b(Γ^l_{am})
//!            + Γ^l_{ak} Γ^k_{bm} - Γ^l_{bk} Γ^k_{am} - c^k_{ab} Γ^l_{km}
//! ```
//!
//! Ricci is the contraction `Ric_{mb} = R_m^l_{lb}`.

use super::{christoffel_from, contorsion_from, contorsion_grad_from, ConnectionCoefficients, ConnectionKind};
use crate::error::{Error, Result};
use crate::spacetime::SpacetimeSpec;
use crate::tensor::{Tensor3, Tensor4};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureTensor {
    pub kind: ConnectionKind,
    /// `components[(m, l, a, b)] = R_m^l_{ab}`.
    pub components: Tensor4,
}

pub fn curvature(conn: &ConnectionCoefficients, structure: Option<&Tensor3>) -> Result<CurvatureTensor> {
    let dg = conn.gamma_grad.as_ref().ok_or(Error::MissingGradient)?;
    let g = &conn.gamma;
    let n = conn.dim();
    let components = Tensor4::from_fn(n, |m, l, a, b| {
        let mut r = dg[(a, l, b, m)] - dg[(b, l, a, m)];
        for k in 0..n {
            r += g[(l, a, k)] * g[(k, b, m)] - g[(l, b, k)] * g[(k, a, m)];
            if let Some(c) = structure {
                r -= c[(k, a, b)] * g[(l, k, m)];
            }
        }
        r
    });
    Ok(CurvatureTensor {
        kind: conn.kind,
        components,
    })
}

pub fn ricci(curv: &CurvatureTensor) -> DMatrix<f64> {
    let r = &curv.components;
    let n = r.dim();
    DMatrix::from_fn(n, n, |m, b| (0..n).map(|l| r[(m, l, l, b)]).sum())
}

pub fn scalar_curvature(curv: &CurvatureTensor, g_inv: &DMatrix<f64>) -> f64 {
    let ric = ricci(curv);
    g_inv.component_mul(&ric).sum()
}

/// `R = R̊ + J_[ab]` where
///
/// ```text
/// J_m^l_{ab} = D̊_a K^l_{bm} - K^s_{am} K^l_{bs}
/// J_[ab] = J_m^l_{ab} - J_m^l_{ba}
/// ```
///
/// and `D̊_a K^l_{bm}` is the Levi-Civita covariant derivative of the (1,2)
/// tensor `K^l_{bm}` in the direction `a`.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSplit {
    pub r: Tensor4,
    pub r_levi_civita: Tensor4,
    pub j: Tensor4,
    pub j_antisym: Tensor4,
    /// `max |R - R̊ - J_[ab]|`.
    pub residual: f64,
}

pub fn curvature_split(spec: &SpacetimeSpec, p: &[f64]) -> Result<CurvatureSplit> {
    let torsion = spec.require_torsion()?;
    let m = spec.eval_metric(p)?;
    let n = m.dim();
    let lc = christoffel_from(&m, true);
    let (t, dt) = torsion.eval_with_grad(p);
    let k = contorsion_from(&m.g, &m.g_inv, &t);
    let dk = contorsion_grad_from(&m, &t, &dt);

    let lcg = lc.gamma_grad.as_ref().expect("requested gradient");
    let rc = ConnectionCoefficients {
        kind: ConnectionKind::RiemannCartan,
        gamma: lc.gamma.zip_map(&k, |a, b| a + b),
        gamma_grad: Some(Tensor4::from_fn(n, |s, a, b, c| lcg[(s, a, b, c)] + dk[(s, a, b, c)])),
        at_point: p.to_vec(),
    };
    let r = curvature(&rc, None)?.components;
    let r_lc = curvature(&lc, None)?.components;

    let gl = &lc.gamma;
    // (D̊_a K)^l_{bm}
    let dk_cov = Tensor4::from_fn(n, |a, l, b, mu| {
        let mut v = dk[(a, l, b, mu)];
        for s in 0..n {
            v += gl[(l, a, s)] * k[(s, b, mu)];
            v -= gl[(s, a, b)] * k[(l, s, mu)];
            v -= gl[(s, a, mu)] * k[(l, b, s)];
        }
        v
    });
    let j = Tensor4::from_fn(n, |mu, l, a, b| {
        let quad: f64 = (0..n).map(|s| k[(s, a, mu)] * k[(l, b, s)]).sum();
        dk_cov[(a, l, b, mu)] - quad
    });
    let j_antisym = Tensor4::from_fn(n, |mu, l, a, b| j[(mu, l, a, b)] - j[(mu, l, b, a)]);
    let sum = Tensor4::from_fn(n, |mu, l, a, b| r_lc[(mu, l, a, b)] + j_antisym[(mu, l, a, b)]);
    let residual = r.max_abs_diff(&sum);
    Ok(CurvatureSplit {
        r,
        r_levi_civita: r_lc,
        j,
        j_antisym,
        residual,
    })
}
