//! Spacetime specifications and their pointwise evaluation.
//!
//! A [`SpacetimeSpec`] bundles a coordinate chart, the metric components
//! `g_{mu nu}(x)`, an optional torsion `T^l_{mu nu}(x)` and an optional frame
//! field, all as [`Expression`]s. Evaluation at a point produces values
//! together with second-order jets so that connections and curvature can be
//! computed without finite differences.

mod document;

pub use document::{parse_spacetime_spec, parse_spacetime_spec_with};

use crate::error::{Error, Result};
use crate::expr::{Expression, Func};
use crate::jet::ScalarJet;
use crate::tensor::{self, Tensor3};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use std::collections::BTreeMap;

/// Default relative threshold below which `g(v, v)` counts as null.
pub const DEFAULT_LIGHTLIKE_TOL: f64 = 1e-10;

/// Tolerance for `g(e_a, e_b) = eta_ab` on frames declared orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateChart {
    names: Vec<String>,
    domain_hints: Vec<Option<Interval>>,
}

impl CoordinateChart {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "a chart needs at least 2 coordinates, got {}",
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            let mut chars = name.chars();
            let valid = matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
                && chars.all(|c| c.is_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidSpec(format!("invalid coordinate name `{name}`")));
            }
            if name == "pi" || Func::from_name(name).is_some() {
                return Err(Error::InvalidSpec(format!("coordinate name `{name}` is reserved")));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidSpec(format!("duplicate coordinate `{name}`")));
            }
        }
        let n = names.len();
        Ok(Self {
            names,
            domain_hints: vec![None; n],
        })
    }

    pub fn with_domain(mut self, coordinate: usize, interval: Interval) -> Self {
        self.domain_hints[coordinate] = Some(interval);
        self
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain_hints(&self) -> &[Option<Interval>] {
        &self.domain_hints
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.dimension()
            )));
        }
        for (i, x) in p.iter().enumerate() {
            let inside = x.is_finite() && self.domain_hints[i].map_or(true, |d| d.contains(*x));
            if !inside {
                return Err(Error::OutOfDomain {
                    point: p.to_vec(),
                    coordinate: self.names[i].clone(),
                });
            }
        }
        Ok(())
    }
}

/// Metric components `g_{mu nu}` (lower indices), stored as a full symmetric
/// `n x n` array.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    components: Vec<Expression>,
    signature: Vec<i8>,
}

impl MetricField {
    pub fn new(components: Vec<Expression>, signature: Vec<i8>) -> Result<Self> {
        let n = signature.len();
        if components.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "metric has {} components, signature implies {}",
                components.len(),
                n * n
            )));
        }
        if signature.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidSpec("signature entries must be +1 or -1".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if components[i * n + j] != components[j * n + i] {
                    return Err(Error::MetricNotSymmetric { i, j });
                }
            }
        }
        Ok(Self {
            components,
            signature,
        })
    }

    pub fn component(&self, i: usize, j: usize) -> &Expression {
        &self.components[i * self.signature.len() + j]
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }
}

/// Torsion `T^l_{mu nu}`. Only `mu < nu` entries are stored; the rest follow
/// from antisymmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionField {
    n: usize,
    /// `(l, mu, nu)` with `mu < nu`.
    entries: Vec<((usize, usize, usize), Expression)>,
}

impl TorsionField {
    pub fn new(n: usize, entries: Vec<((usize, usize, usize), Expression)>) -> Result<Self> {
        for ((l, mu, nu), _) in &entries {
            if *l >= n || *mu >= n || *nu >= n {
                return Err(Error::DimensionMismatch(format!(
                    "torsion index T[{l}][{mu}][{nu}] out of range for n = {n}"
                )));
            }
            if mu >= nu {
                return Err(Error::InvalidSpec(format!(
                    "torsion entries must have i < j, got T[{l}][{mu}][{nu}]"
                )));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn entries(&self) -> &[((usize, usize, usize), Expression)] {
        &self.entries
    }

    pub fn eval(&self, p: &[f64]) -> Tensor3 {
        let mut t = Tensor3::zeros(self.n);
        for ((l, mu, nu), e) in &self.entries {
            let v = e.eval(p);
            t[(*l, *mu, *nu)] = v;
            t[(*l, *nu, *mu)] = -v;
        }
        t
    }

    /// Values and first partials: returns `(T, dT)` with
    /// `dT[s][(l, mu, nu)] = d_s T^l_{mu nu}`.
    pub fn eval_with_grad(&self, p: &[f64]) -> (Tensor3, Vec<Tensor3>) {
        let n = self.n;
        let seeds = seed_jets(p);
        let mut t = Tensor3::zeros(n);
        let mut dt = vec![Tensor3::zeros(n); n];
        for ((l, mu, nu), e) in &self.entries {
            let jet = e.eval_jet(&seeds);
            t[(*l, *mu, *nu)] = jet.value;
            t[(*l, *nu, *mu)] = -jet.value;
            for (s, d) in dt.iter_mut().enumerate() {
                d[(*l, *mu, *nu)] = jet.grad[s];
                d[(*l, *nu, *mu)] = -jet.grad[s];
            }
        }
        (t, dt)
    }
}

/// A field of `n` vectors `e_mu = e_mu^a d/dx^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFieldSpec {
    /// `vectors[mu][a] = e_mu^a`.
    pub vectors: Vec<Vec<Expression>>,
    pub declared_orthonormal: bool,
}

/// Frame components at a point. `lambda[(a, mu)] = e_mu^a`, i.e. the frame
/// vectors are the columns.
#[derive(Debug, Clone)]
pub struct FrameEval {
    pub lambda: DMatrix<f64>,
    pub lambda_inv: DMatrix<f64>,
    /// `jets[a * n + mu]` carries first and second partials of `e_mu^a`.
    pub jets: Vec<ScalarJet>,
}

impl FrameEval {
    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    /// `d_b e_mu^a`.
    #[inline]
    pub fn d(&self, a: usize, mu: usize, b: usize) -> f64 {
        self.jets[a * self.dim() + mu].grad[b]
    }

    /// `d_b d_c e_mu^a`.
    #[inline]
    pub fn d2(&self, a: usize, mu: usize, b: usize, c: usize) -> f64 {
        self.jets[a * self.dim() + mu].d2(b, c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeSpec {
    pub name: String,
    pub chart: CoordinateChart,
    pub metric: MetricField,
    pub torsion: Option<TorsionField>,
    pub frame: Option<FrameFieldSpec>,
    pub parameters: BTreeMap<String, f64>,
}

/// Metric data at a point: components, inverse, and second-order jets.
#[derive(Debug, Clone, Serialize)]
pub struct MetricEval {
    pub point: Vec<f64>,
    #[serde(with = "tensor::serde_matrix")]
    pub g: DMatrix<f64>,
    #[serde(with = "tensor::serde_matrix")]
    pub g_inv: DMatrix<f64>,
    /// `jets[i * n + j]` for `g_{ij}`.
    #[serde(skip)]
    pub jets: Vec<ScalarJet>,
}

impl MetricEval {
    /// Validates jets of `g_{ij}` (finite, symmetric, invertible, matching
    /// signature) and assembles the evaluation.
    pub fn from_jets(point: &[f64], jets: Vec<ScalarJet>, signature: &[i8]) -> Result<Self> {
        let n = signature.len();
        if jets.iter().any(|j| !j.is_finite()) {
            return Err(Error::SingularMetric {
                point: point.to_vec(),
            });
        }
        let g = DMatrix::from_fn(n, n, |i, j| jets[i * n + j].value);
        let scale = tensor::max_abs(&g);
        for i in 0..n {
            for j in i + 1..n {
                if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::MetricNotSymmetric { i, j });
                }
            }
        }
        let det = g.determinant();
        if scale == 0.0 || !det.is_finite() || det.abs() <= 1e-13 * scale.powi(n as i32) {
            return Err(Error::SingularMetric {
                point: point.to_vec(),
            });
        }
        let g_inv = g.clone().try_inverse().ok_or_else(|| Error::SingularMetric {
            point: point.to_vec(),
        })?;
        let found = signature_of(&g);
        let mut expected = signature.to_vec();
        expected.sort_unstable_by(|a, b| b.cmp(a));
        if found != expected {
            return Err(Error::SignatureMismatch {
                point: point.to_vec(),
                expected: signature.to_vec(),
                found,
            });
        }
        Ok(Self {
            point: point.to_vec(),
            g,
            g_inv,
            jets,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `d_c g_{ab}`.
    #[inline]
    pub fn dg(&self, a: usize, b: usize, c: usize) -> f64 {
        self.jets[a * self.dim() + b].grad[c]
    }

    /// `d_c d_d g_{ab}`.
    #[inline]
    pub fn d2g(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.jets[a * self.dim() + b].d2(c, d)
    }

    /// `d_c g^{ab} = -g^{am} d_c g_{mn} g^{nb}`.
    pub fn dg_inv(&self) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        (0..n)
            .map(|c| {
                let dgc = DMatrix::from_fn(n, n, |i, j| self.dg(i, j, c));
                -(&self.g_inv * dgc * &self.g_inv)
            })
            .collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.g[(a, b)] * u[a] * v[b];
            }
        }
        s
    }

    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|a| (0..n).map(|b| self.g[(a, b)] * v[b]).sum()).collect()
    }
}

/// Sorted (descending) eigenvalue signs of a symmetric matrix.
pub fn signature_of(g: &DMatrix<f64>) -> Vec<i8> {
    let eig = SymmetricEigen::new(g.clone());
    let mut signs: Vec<i8> = eig
        .eigenvalues
        .iter()
        .map(|l| if *l > 0.0 { 1 } else { -1 })
        .collect();
    signs.sort_unstable_by(|a, b| b.cmp(a));
    signs
}

/// Jets seeding each coordinate as an independent variable at `p`.
pub fn seed_jets(p: &[f64]) -> Vec<ScalarJet> {
    let n = p.len();
    p.iter()
        .enumerate()
        .map(|(i, x)| ScalarJet::variable(*x, i, n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TangentClass {
    Timelike,
    Spacelike,
    Lightlike,
}

impl SpacetimeSpec {
    pub fn dimension(&self) -> usize {
        self.chart.dimension()
    }

    pub fn signature(&self) -> &[i8] {
        self.metric.signature()
    }

    pub fn is_lorentzian(&self) -> bool {
        lorentzian_time_sign(self.signature()).is_some()
    }

    pub fn require_torsion(&self) -> Result<&TorsionField> {
        self.torsion
            .as_ref()
            .ok_or_else(|| Error::MissingTorsion(self.name.clone()))
    }

    pub fn require_frame(&self) -> Result<&FrameFieldSpec> {
        self.frame
            .as_ref()
            .ok_or_else(|| Error::MissingFrame(self.name.clone()))
    }

    /// Metric jets evaluated with arbitrary coordinate jets; used to pull the
    /// metric back to another chart.
    pub fn metric_jets_at(&self, x: &[ScalarJet]) -> Vec<ScalarJet> {
        let n = self.dimension();
        let mut jets: Vec<ScalarJet> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    let sym: ScalarJet = jets[j * n + i].clone();
                    jets.push(sym);
                } else {
                    jets.push(self.metric.component(i, j).eval_jet(x));
                }
            }
        }
        jets
    }

    /// Metric, inverse and jets at `p`.
    pub fn eval_metric(&self, p: &[f64]) -> Result<MetricEval> {
        self.chart.check_point(p)?;
        let jets = self.metric_jets_at(&seed_jets(p));
        MetricEval::from_jets(p, jets, self.signature())
    }

    /// Plain metric values without jets or signature checks.
    pub fn metric_values(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.dimension();
        DMatrix::from_fn(n, n, |i, j| self.metric.component(i, j).eval(p))
    }

    pub fn classify_tangent(&self, p: &[f64], v: &[f64]) -> Result<TangentClass> {
        self.classify_tangent_with_tol(p, v, DEFAULT_LIGHTLIKE_TOL)
    }

    /// Classifies `v` by the sign of `g(v, v)`. The null threshold is relative
    /// to `sum |g_ab v^a v^b|`, so the result is invariant under scaling of `v`.
    pub fn classify_tangent_with_tol(
        &self,
        p: &[f64],
        v: &[f64],
        lightlike_tol: f64,
    ) -> Result<TangentClass> {
        let time_sign = lorentzian_time_sign(self.signature())
            .ok_or_else(|| Error::NotLorentzian(self.signature().to_vec()))?;
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} components, chart has {}",
                v.len(),
                self.dimension()
            )));
        }
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        self.chart.check_point(p)?;
        let g = self.metric_values(p);
        let n = self.dimension();
        let (mut norm, mut scale) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let term = g[(a, b)] * v[a] * v[b];
                norm += term;
                scale += term.abs();
            }
        }
        if norm.abs() <= lightlike_tol * scale {
            Ok(TangentClass::Lightlike)
        } else if norm * time_sign > 0.0 {
            Ok(TangentClass::Timelike)
        } else {
            Ok(TangentClass::Spacelike)
        }
    }

    pub fn eval_frame(&self, frame: &FrameFieldSpec, p: &[f64]) -> Result<FrameEval> {
        let n = self.dimension();
        if frame.vectors.len() != n || frame.vectors.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "frame must have {n} vectors of {n} components"
            )));
        }
        self.chart.check_point(p)?;
        let seeds = seed_jets(p);
        let mut jets = Vec::with_capacity(n * n);
        for a in 0..n {
            for mu in 0..n {
                let jet = frame.vectors[mu][a].eval_jet(&seeds);
                if !jet.is_finite() {
                    return Err(Error::NonFinite {
                        what: format!("frame component e[{mu}][{a}]"),
                        point: p.to_vec(),
                    });
                }
                jets.push(jet);
            }
        }
        let lambda = DMatrix::from_fn(n, n, |a, mu| jets[a * n + mu].value);
        let scale = tensor::max_abs(&lambda);
        let det = lambda.determinant();
        if scale == 0.0 || det.abs() <= 1e-12 * scale.powi(n as i32) {
            return Err(Error::SingularFrame { point: p.to_vec() });
        }
        let lambda_inv = lambda
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularFrame { point: p.to_vec() })?;
        if frame.declared_orthonormal {
            let g = self.metric_values(p);
            let residual = orthonormality_residual(&g, &lambda, self.signature());
            if !(residual <= ORTHONORMAL_TOL) {
                return Err(Error::NotOrthonormal { residual });
            }
        }
        Ok(FrameEval {
            lambda,
            lambda_inv,
            jets,
        })
    }

    /// Round-trippable document text for this spec.
    pub fn to_document(&self) -> String {
        document::print_spacetime_spec(self)
    }

    /// Parses an expression over this chart's coordinates and parameters.
    pub fn parse_expression(&self, text: &str) -> Result<Expression> {
        Expression::parse(
            text,
            crate::expr::Scope {
                coordinates: self.chart.names(),
                parameters: &self.parameters,
            },
        )
    }

    /// Parses a frame given as `vectors[mu][a]` component texts.
    pub fn parse_frame(&self, vectors: &[Vec<&str>], declared_orthonormal: bool) -> Result<FrameFieldSpec> {
        let vectors = vectors
            .iter()
            .map(|v| v.iter().map(|t| self.parse_expression(t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameFieldSpec {
            vectors,
            declared_orthonormal,
        })
    }
}

/// `max |Lambda^T g Lambda - eta|`.
pub fn orthonormality_residual(g: &DMatrix<f64>, lambda: &DMatrix<f64>, signature: &[i8]) -> f64 {
    let gram = lambda.transpose() * g * lambda;
    tensor::max_abs(&(gram - tensor::eta(signature)))
}

/// Gram-Schmidt for an arbitrary-signature metric.
///
/// Returns a matrix whose columns `e_a` satisfy `g(e_a, e_b) = eta_ab` for
/// the given signature. When `first` is supplied it is normalized and used as
/// the first vector of its causal type (for a Lorentzian signature with a
/// timelike `first`, that is `e_0`). The remaining vectors are completed from
/// coordinate directions, picking at each stage the direction with the
/// largest remaining norm.
pub fn orthonormal_basis(g: &DMatrix<f64>, signature: &[i8], first: Option<&[f64]>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += g[(a, b)] * u[a] * v[b];
            }
        }
        s
    };
    let scale = tensor::max_abs(g).max(f64::MIN_POSITIVE);
    let project = |v: &[f64], basis: &[(Vec<f64>, f64)]| -> Vec<f64> {
        let mut w = v.to_vec();
        for (e, eps) in basis {
            let c = eps * inner(v, e);
            for a in 0..n {
                w[a] -= c * e[a];
            }
        }
        w
    };
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    if let Some(v) = first {
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroVector);
        }
        let nv = inner(v, v);
        let size: f64 = v.iter().map(|x| x * x).sum::<f64>() * scale;
        if nv.abs() <= 1e-12 * size {
            return Err(Error::NotUnitTimelike { norm: nv });
        }
        let k = nv.abs().sqrt();
        basis.push((v.iter().map(|x| x / k).collect(), nv.signum()));
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    while basis.len() < n {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (pos, &i) in remaining.iter().enumerate() {
            let mut unit = vec![0.0; n];
            unit[i] = 1.0;
            let w = project(&unit, &basis);
            let nw = inner(&w, &w);
            if best.as_ref().map_or(true, |(_, _, b)| nw.abs() > b.abs()) {
                best = Some((pos, w, nw));
            }
        }
        let (pos, w, nw) = best.ok_or_else(|| Error::SingularMetric { point: vec![] })?;
        remaining.remove(pos);
        if nw.abs() <= 1e-12 * scale {
            continue;
        }
        // re-orthogonalize once for stability
        let w = project(&w, &basis);
        let nw = inner(&w, &w);
        let k = nw.abs().sqrt();
        basis.push((w.iter().map(|x| x / k).collect(), nw.signum()));
        if remaining.is_empty() && basis.len() < n {
            return Err(Error::SingularMetric { point: vec![] });
        }
    }
    // place vectors into signature slots of matching sign, keeping order
    let mut out = DMatrix::zeros(n, n);
    let mut used = vec![false; n];
    for (e, eps) in &basis {
        let slot = (0..n)
            .find(|&s| !used[s] && f64::from(signature[s]) == *eps)
            .ok_or_else(|| Error::SignatureMismatch {
                point: vec![],
                expected: signature.to_vec(),
                found: signature_of(g),
            })?;
        used[slot] = true;
        out.set_column(slot, &nalgebra::DVector::from_column_slice(e));
    }
    Ok(out)
}

/// For a Lorentzian signature, the sign of `g(v, v)` on timelike vectors.
pub fn lorentzian_time_sign(signature: &[i8]) -> Option<f64> {
    let plus = signature.iter().filter(|s| **s > 0).count();
    let minus = signature.len() - plus;
    if plus == 1 && minus >= 1 {
        Some(1.0)
    } else if minus == 1 && plus >= 2 {
        Some(-1.0)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINKOWSKI: &str = "name = minkowski\ncoordinates = t, x, y, z\nsignature = 1, -1, -1, -1\n[metric]\ng[0][0] = 1\ng[1][1] = -1\ng[2][2] = -1\ng[3][3] = -1\n";

    const SCHWARZSCHILD: &str = "name = schwarzschild
coordinates = t, r, theta, phi
signature = 1, -1, -1, -1
[parameters]
M = 1
[domain]
r = 2*M, inf
[metric]
g[t][t] = 1 - 2*M/r
g[r][r] = -1/(1 - 2*M/r)
g[theta][theta] = -r^2
g[phi][phi] = -r^2*sin(theta)^2
";

    const SPHERE: &str = "name = sphere
coordinates = theta, phi
signature = 1, 1
[parameters]
R = 1
[metric]
g[0][0] = R^2
g[1][1] = R^2*sin(theta)^2
";

    #[test]
    fn minkowski_metric_is_eta_with_flat_jets() {
        let spec = parse_spacetime_spec(MINKOWSKI).unwrap();
        assert!(spec.torsion.is_none());
        assert_eq!(spec.dimension(), 4);
        let m = spec.eval_metric(&[0.3, -1.0, 2.0, 5.0]).unwrap();
        assert_eq!(m.g, tensor::eta(&[1, -1, -1, -1]));
        assert!(m.jets.iter().all(|j| j.grad.iter().all(|x| *x == 0.0)));
        assert!(m.jets.iter().all(|j| j.hess.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn schwarzschild_gtt_at_r4() {
        let spec = parse_spacetime_spec(SCHWARZSCHILD).unwrap();
        let m = spec.eval_metric(&[0.0, 4.0, 1.0, 0.0]).unwrap();
        assert!((m.g[(0, 0)] - 0.5).abs() < 1e-15);
        let id = &m.g * &m.g_inv;
        assert!(tensor::max_abs(&(id - DMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn sphere_jets_at_equator() {
        let spec = parse_spacetime_spec(SPHERE).unwrap();
        let m = spec
            .eval_metric(&[std::f64::consts::FRAC_PI_2, 0.3])
            .unwrap();
        assert!((m.g[(1, 1)] - 1.0).abs() < 1e-15);
        assert!(m.dg(1, 1, 0).abs() < 1e-15);
        // d^2/dtheta^2 sin^2 = 2 cos(2 theta) = -2
        assert!((m.d2g(1, 1, 0, 0) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn horizon_and_domain_errors() {
        let spec = parse_spacetime_spec(SCHWARZSCHILD).unwrap();
        assert!(matches!(
            spec.eval_metric(&[0.0, 1.0, 1.0, 0.0]),
            Err(Error::OutOfDomain { .. })
        ));
        let mut unbounded = spec.clone();
        unbounded.chart = CoordinateChart::new(spec.chart.names().to_vec()).unwrap();
        assert!(matches!(
            unbounded.eval_metric(&[0.0, 2.0, 1.0, 0.0]),
            Err(Error::SingularMetric { .. })
        ));
        // inside the horizon the signature flips order but the sign multiset is unchanged
        assert!(unbounded.eval_metric(&[0.0, 1.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn classify_minkowski_tangents() {
        let spec = parse_spacetime_spec(MINKOWSKI).unwrap();
        let p = [0.0; 4];
        assert_eq!(
            spec.classify_tangent(&p, &[1.0, 0.0, 0.0, 0.0]).unwrap(),
            TangentClass::Timelike
        );
        assert_eq!(
            spec.classify_tangent(&p, &[1.0, 1.0, 0.0, 0.0]).unwrap(),
            TangentClass::Lightlike
        );
        assert_eq!(
            spec.classify_tangent(&p, &[0.0, 1.0, 0.0, 0.0]).unwrap(),
            TangentClass::Spacelike
        );
        assert_eq!(spec.classify_tangent(&p, &[0.0; 4]), Err(Error::ZeroVector));
        let sphere = parse_spacetime_spec(SPHERE).unwrap();
        assert!(matches!(
            sphere.classify_tangent(&[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::NotLorentzian(_))
        ));
    }

    #[test]
    fn frame_evaluation() {
        let doc = format!(
            "{SPHERE}[frame]\northonormal = true\ne[0][0] = 1\ne[1][1] = 1/sin(theta)\n"
        );
        let spec = parse_spacetime_spec(&doc).unwrap();
        let frame = spec.frame.clone().unwrap();
        let f = spec
            .eval_frame(&frame, &[std::f64::consts::FRAC_PI_6, 0.0])
            .unwrap();
        assert!((f.lambda[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((f.lambda[(1, 1)] - 2.0).abs() < 1e-14);
        assert_eq!(f.lambda[(0, 1)], 0.0);

        let bad = FrameFieldSpec {
            vectors: vec![
                vec![Expression::Num(1.0), Expression::Num(0.0)],
                vec![Expression::Num(0.0), Expression::Num(1.0)],
            ],
            declared_orthonormal: true,
        };
        assert!(matches!(
            spec.eval_frame(&bad, &[std::f64::consts::FRAC_PI_6, 0.0]),
            Err(Error::NotOrthonormal { .. })
        ));
    }
}
