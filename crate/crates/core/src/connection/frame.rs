//! Frame-basis quantities: structure coefficients, connection coefficients
//! in a frame, and the teleparallel connection of a frame.

use super::{Basis, ConnectionCoefficients, ConnectionKind, TorsionTensor};
use crate::error::{Error, Result};
use crate::spacetime::{orthonormality_residual, FrameEval, FrameFieldSpec, SpacetimeSpec, ORTHONORMAL_TOL};
use crate::tensor::{Tensor3, Tensor4};
use nalgebra::DMatrix;

/// `[e_m, e_n] = c^a_{mn} e_a`.
pub fn structure_from_frame(fe: &FrameEval) -> Tensor3 {
    let n = fe.dim();
    let (lam, inv) = (&fe.lambda, &fe.lambda_inv);
    // bracket components in the coordinate basis
    let bracket = Tensor3::from_fn(n, |a, m, k| {
        (0..n)
            .map(|b| lam[(b, m)] * fe.d(a, k, b) - lam[(b, k)] * fe.d(a, m, b))
            .sum()
    });
    Tensor3::from_fn(n, |al, m, k| (0..n).map(|a| inv[(al, a)] * bracket[(a, m, k)]).sum())
}

pub fn structure_coefficients(spec: &SpacetimeSpec, frame: &FrameFieldSpec, p: &[f64]) -> Result<Tensor3> {
    Ok(structure_from_frame(&spec.eval_frame(frame, p)?))
}

/// `∂_d Λ^{-1} = -Λ^{-1} (∂_d Λ) Λ^{-1}`.
fn d_lambda_inv(fe: &FrameEval) -> Vec<DMatrix<f64>> {
    let n = fe.dim();
    (0..n)
        .map(|d| {
            let dl = DMatrix::from_fn(n, n, |a, m| fe.d(a, m, d));
            -(&fe.lambda_inv * dl * &fe.lambda_inv)
        })
        .collect()
}

/// Coefficients `γ^a_{mn}` of a coordinate-basis connection in the frame:
/// `γ^a_{mn} = (Λ^{-1})^a_i [Λ^b_m ∂_b Λ^i_n + Λ^b_m Λ^c_n Γ^i_{bc}]`.
/// Gradients, when the input has them, are derivatives along the frame vectors.
pub fn frame_connection(conn: &ConnectionCoefficients, fe: &FrameEval) -> ConnectionCoefficients {
    let n = fe.dim();
    let (lam, inv) = (&fe.lambda, &fe.lambda_inv);
    let gc = &conn.gamma;
    let x = Tensor3::from_fn(n, |i, m, k| {
        let mut v = 0.0;
        for b in 0..n {
            v += lam[(b, m)] * fe.d(i, k, b);
            for c in 0..n {
                v += lam[(b, m)] * lam[(c, k)] * gc[(i, b, c)];
            }
        }
        v
    });
    let gamma = Tensor3::from_fn(n, |al, m, k| (0..n).map(|i| inv[(al, i)] * x[(i, m, k)]).sum());

    let gamma_grad = conn.gamma_grad.as_ref().map(|dgc| {
        let dinv = d_lambda_inv(fe);
        // partials along coordinate directions first
        let partial = Tensor4::from_fn(n, |d, al, m, k| {
            let mut v = 0.0;
            for i in 0..n {
                let mut dx = 0.0;
                for b in 0..n {
                    dx += fe.d(b, m, d) * fe.d(i, k, b) + lam[(b, m)] * fe.d2(i, k, b, d);
                    for c in 0..n {
                        dx += fe.d(b, m, d) * lam[(c, k)] * gc[(i, b, c)]
                            + lam[(b, m)] * fe.d(c, k, d) * gc[(i, b, c)]
                            + lam[(b, m)] * lam[(c, k)] * dgc[(d, i, b, c)];
                    }
                }
                v += dinv[d][(al, i)] * x[(i, m, k)] + inv[(al, i)] * dx;
            }
            v
        });
        Tensor4::from_fn(n, |s, al, m, k| (0..n).map(|d| lam[(d, s)] * partial[(d, al, m, k)]).sum())
    });

    ConnectionCoefficients {
        kind: ConnectionKind::FrameBasis,
        gamma,
        gamma_grad,
        at_point: conn.at_point.clone(),
    }
}

/// Torsion in a frame: `T^l_{mn} = γ^l_{mn} - γ^l_{nm} - c^l_{mn}`.
pub fn frame_torsion(gamma_frame: &Tensor3, structure: &Tensor3) -> Tensor3 {
    let n = gamma_frame.dim();
    Tensor3::from_fn(n, |l, m, k| gamma_frame[(l, m, k)] - gamma_frame[(l, k, m)] - structure[(l, m, k)])
}

/// The connection in which every frame vector is parallel:
/// `Γ^a_{bc} = -∂_b Λ^a_n (Λ^{-1})^n_c`, in the coordinate basis.
pub fn teleparallel_from_frame_eval(fe: &FrameEval, p: &[f64], with_grad: bool) -> ConnectionCoefficients {
    let n = fe.dim();
    let inv = &fe.lambda_inv;
    let gamma = Tensor3::from_fn(n, |a, b, c| -(0..n).map(|nu| fe.d(a, nu, b) * inv[(nu, c)]).sum::<f64>());
    let gamma_grad = with_grad.then(|| {
        let dinv = d_lambda_inv(fe);
        Tensor4::from_fn(n, |d, a, b, c| {
            -(0..n)
                .map(|nu| fe.d2(a, nu, b, d) * inv[(nu, c)] + fe.d(a, nu, b) * dinv[d][(nu, c)])
                .sum::<f64>()
        })
    });
    ConnectionCoefficients {
        kind: ConnectionKind::Teleparallel,
        gamma,
        gamma_grad,
        at_point: p.to_vec(),
    }
}

/// Teleparallel connection of an orthonormal frame together with its
/// coordinate-basis torsion.
pub fn teleparallel_from_frame(
    spec: &SpacetimeSpec,
    frame: &FrameFieldSpec,
    p: &[f64],
    with_grad: bool,
) -> Result<(ConnectionCoefficients, TorsionTensor)> {
    let fe = spec.eval_frame(frame, p)?;
    let g = spec.metric_values(p);
    let residual = orthonormality_residual(&g, &fe.lambda, spec.signature());
    if !(residual <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal { residual });
    }
    let conn = teleparallel_from_frame_eval(&fe, p, with_grad);
    let torsion = TorsionTensor {
        basis: Basis::Coordinate,
        components: conn.torsion(),
    };
    Ok((conn, torsion))
}

/// `max |∂_b Λ^a_n + Γ^a_{bc} Λ^c_n|`: how far the frame is from parallel.
pub fn frame_parallel_residual(conn: &ConnectionCoefficients, fe: &FrameEval) -> f64 {
    let n = fe.dim();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for nu in 0..n {
                let mut r = fe.d(a, nu, b);
                for c in 0..n {
                    r += conn.gamma[(a, b, c)] * fe.lambda[(c, nu)];
                }
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}
