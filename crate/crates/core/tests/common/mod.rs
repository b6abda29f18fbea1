#![allow(dead_code)]

use cartan_forge::{parse_spacetime_spec, SpacetimeSpec};
use nalgebra::DMatrix;
use rand::Rng;

/// A smooth, mildly curved Lorentzian metric on (t, x, y, z), optionally with
/// torsion. Coefficients are random; the perturbation is kept small so the
/// signature never flips near the origin.
pub fn random_document<R: Rng>(rng: &mut R, torsion: bool) -> String {
    let coords = ["t", "x", "y", "z"];
    let mut doc = String::from("name = random\ncoordinates = t, x, y, z\nsignature = 1, -1, -1, -1\n[metric]\n");
    let term = |rng: &mut R| {
        let a: f64 = rng.gen_range(-0.08..0.08);
        let b: f64 = rng.gen_range(-1.5..1.5);
        let c = coords[rng.gen_range(0..4)];
        let d = coords[rng.gen_range(0..4)];
        match rng.gen_range(0..3) {
            0 => format!("{a:.6}*sin({b:.6}*{c} + {d})"),
            1 => format!("{a:.6}*{c}*{d}"),
            _ => format!("{a:.6}*exp({b:.6}*{c})*cos({d})"),
        }
    };
    for i in 0..4 {
        for j in i..4 {
            let base = match (i, j) {
                (0, 0) => "1",
                (a, b) if a == b => "-1",
                _ => "0",
            };
            doc.push_str(&format!("g[{i}][{j}] = {base} + {}\n", term(rng)));
        }
    }
    if torsion {
        doc.push_str("[torsion]\n");
        for k in 0..4 {
            for i in 0..4 {
                for j in i + 1..4 {
                    let scale: f64 = rng.gen_range(-0.5..0.5);
                    doc.push_str(&format!("T[{k}][{i}][{j}] = {scale:.6} + {}\n", term(rng)));
                }
            }
        }
    }
    doc
}

pub fn random_spec<R: Rng>(rng: &mut R, torsion: bool) -> SpacetimeSpec {
    parse_spacetime_spec(&random_document(rng, torsion)).expect("random document parses")
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-radius..radius)).collect()
}

/// Central difference of a vector-valued function along coordinate `i`.
pub fn central<F: Fn(&[f64]) -> Vec<f64>>(f: F, p: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut up = p.to_vec();
    let mut dn = p.to_vec();
    up[i] += h;
    dn[i] -= h;
    f(&up)
        .iter()
        .zip(f(&dn))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// Christoffel symbols from finite differences of metric values,
/// `Γ^a_{bc} = g^{ad}(∂_b g_{dc} + ∂_c g_{db} - ∂_d g_{bc})/2`, flattened as
/// `[a][b][c]`.
pub fn fd_christoffel(spec: &SpacetimeSpec, p: &[f64], h: f64) -> Vec<f64> {
    let n = p.len();
    let flat = |q: &[f64]| spec.metric_values(q).iter().copied().collect::<Vec<_>>();
    // column-major DMatrix storage: index (i, j) at j * n + i, symmetric anyway
    let dg: Vec<Vec<f64>> = (0..n).map(|k| central(flat, p, k, h)).collect();
    let g = spec.metric_values(p);
    let ginv: DMatrix<f64> = g.try_inverse().unwrap();
    let d = |i: usize, j: usize, k: usize| dg[k][j * n + i];
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for e in 0..n {
                    s += ginv[(a, e)] * (d(e, c, b) + d(e, b, c) - d(b, c, e));
                }
                out[(a * n + b) * n + c] = 0.5 * s;
            }
        }
    }
    out
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Random point inside the comfortable part of a catalog entry's domain.
pub fn catalog_point<R: Rng>(rng: &mut R, name: &str, n: usize) -> Vec<f64> {
    if n == 2 {
        return vec![rng.gen_range(0.3..2.8), rng.gen_range(-3.0..3.0)];
    }
    let mut p = random_point(rng, n, 2.0);
    match name {
        "schwarzschild" => {
            p[1] = rng.gen_range(3.0..20.0);
            p[2] = rng.gen_range(0.3..2.8);
        }
        "flrw-power-law" => p[0] = rng.gen_range(0.5..3.0),
        "rindler-chart" => p[1] = rng.gen_range(0.5..3.0),
        _ => {}
    }
    p
}
