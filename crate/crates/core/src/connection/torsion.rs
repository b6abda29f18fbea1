//! Strain and contorsion.
//!
//! `S^l_{mn} = -g^{ls}(g_{ma} T^a_{ns} + g_{na} T^a_{ms})` and
//! `K^l_{mn} = (T^l_{mn} + S^l_{mn}) / 2`. Both are linear in each of
//! `g`, `g^{-1}` and `T`, which gives their gradients by the product rule.

use crate::error::Result;
use crate::spacetime::{MetricEval, SpacetimeSpec};
use crate::tensor::{Tensor3, Tensor4};
use nalgebra::DMatrix;

pub fn strain_from(g: &DMatrix<f64>, g_inv: &DMatrix<f64>, t: &Tensor3) -> Tensor3 {
    let n = t.dim();
    // lowered on the first index: t_low[(m, n, s)] = g_{ma} T^a_{ns}
    let t_low = Tensor3::from_fn(n, |m, k, s| (0..n).map(|a| g[(m, a)] * t[(a, k, s)]).sum());
    Tensor3::from_fn(n, |l, m, k| {
        -(0..n)
            .map(|s| g_inv[(l, s)] * (t_low[(m, k, s)] + t_low[(k, m, s)]))
            .sum::<f64>()
    })
}

pub fn contorsion_from(g: &DMatrix<f64>, g_inv: &DMatrix<f64>, t: &Tensor3) -> Tensor3 {
    let s = strain_from(g, g_inv, t);
    t.zip_map(&s, |a, b| 0.5 * (a + b))
}

/// The contorsion written three ways: `(T + S)/2`, the expanded sum with
/// explicit metric factors, and the index-gymnastics form
/// `(T^l_{mn} - T_{mn}^l + T_n^l_m)/2`. They agree identically.
pub fn contorsion_forms(g: &DMatrix<f64>, g_inv: &DMatrix<f64>, t: &Tensor3) -> [Tensor3; 3] {
    let n = t.dim();
    let first = contorsion_from(g, g_inv, t);
    let second = Tensor3::from_fn(n, |l, m, k| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += 0.5 * g_inv[(l, b)] * g[(b, a)] * t[(a, m, k)];
                acc -= 0.5 * g_inv[(l, b)] * g[(m, a)] * t[(a, k, b)];
                acc -= 0.5 * g_inv[(l, b)] * g[(k, a)] * t[(a, m, b)];
            }
        }
        acc
    });
    // T_{mn}^l = g_{ma} T^a_{ns} g^{sl};  T_n^l_m = g_{na} g^{ls} T^a_{sm}
    let third = Tensor3::from_fn(n, |l, m, k| {
        let mut down_down_up = 0.0;
        let mut down_up_down = 0.0;
        for a in 0..n {
            for s in 0..n {
                down_down_up += g[(m, a)] * t[(a, k, s)] * g_inv[(s, l)];
                down_up_down += g[(k, a)] * g_inv[(l, s)] * t[(a, s, m)];
            }
        }
        0.5 * (t[(l, m, k)] - down_down_up + down_up_down)
    });
    [first, second, third]
}

/// `d_s S^l_{mn}` from metric jets and torsion partials `dt[s]`.
pub fn strain_grad_from(m: &MetricEval, t: &Tensor3, dt: &[Tensor3]) -> Tensor4 {
    let n = m.dim();
    let dginv = m.dg_inv();
    let mut out = Tensor4::zeros(n);
    for s in 0..n {
        let dg = DMatrix::from_fn(n, n, |i, j| m.dg(i, j, s));
        let parts = [
            strain_from(&dg, &m.g_inv, t),
            strain_from(&m.g, &dginv[s], t),
            strain_from(&m.g, &m.g_inv, &dt[s]),
        ];
        for l in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out[(s, l, a, b)] = parts.iter().map(|p| p[(l, a, b)]).sum();
                }
            }
        }
    }
    out
}

pub fn contorsion_grad_from(m: &MetricEval, t: &Tensor3, dt: &[Tensor3]) -> Tensor4 {
    let ds = strain_grad_from(m, t, dt);
    Tensor4::from_fn(m.dim(), |s, l, a, b| 0.5 * (dt[s][(l, a, b)] + ds[(s, l, a, b)]))
}

pub fn strain(spec: &SpacetimeSpec, p: &[f64]) -> Result<Tensor3> {
    let torsion = spec.require_torsion()?;
    let m = spec.eval_metric(p)?;
    Ok(strain_from(&m.g, &m.g_inv, &torsion.eval(p)))
}

pub fn contorsion(spec: &SpacetimeSpec, p: &[f64]) -> Result<Tensor3> {
    let torsion = spec.require_torsion()?;
    let m = spec.eval_metric(p)?;
    Ok(contorsion_from(&m.g, &m.g_inv, &torsion.eval(p)))
}
