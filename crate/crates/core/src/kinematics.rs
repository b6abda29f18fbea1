//! Kinematics of reference frames.
//!
//! For a unit timelike field `Z` with 1-form `α = g(Z, ·)` the covariant
//! derivative `M_{μν} = (D_ν α)_μ` splits as
//! `M = s a⊗α + ω + σ + E/(n-1) h`, where `s = g(Z, Z)` is the timelike sign,
//! `h = g - s α⊗α` the projector, `a = D_Z α` the acceleration, `ω` and `σ`
//! the antisymmetric and trace-free symmetric screen parts and `E = D_μ Z^μ`
//! the expansion.

use crate::connection::{
    christoffel, connection_at, frame_connection, rc_connection, strain_from, structure_from_frame, Basis,
    ConnectionCoefficients, ConnectionKind,
};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::jet::ScalarJet;
use crate::spacetime::{
    lorentzian_time_sign, orthonormal_basis, orthonormality_residual, seed_jets, FrameFieldSpec, MetricEval,
    SpacetimeSpec, ORTHONORMAL_TOL,
};
use crate::tensor::{self, serde_matrix, Tensor3};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Accepted deviation of `g(Z, Z)` from the unit timelike value.
pub const UNIT_TOL: f64 = 1e-9;

/// A timelike vector field `Z = Z^μ ∂_μ`.
///
/// With `normalized` set the components are divided by `sqrt(|g(Z, Z)|)`
/// before use; otherwise they must already be unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrameField {
    pub components: Vec<Expression>,
    pub normalized: bool,
}

/// `Z` and its first partials at a point.
#[derive(Debug, Clone)]
pub struct FieldEval {
    pub z: Vec<f64>,
    /// `dz[(mu, nu)] = ∂_ν Z^μ`.
    pub dz: DMatrix<f64>,
    pub metric: MetricEval,
    /// `g(Z, Z)` for unit timelike vectors: `+1` or `-1`.
    pub time_sign: f64,
}

impl FieldEval {
    pub fn alpha(&self) -> Vec<f64> {
        self.metric.lower(&self.z)
    }

    /// `dalpha[(mu, nu)] = ∂_ν α_μ`.
    pub fn d_alpha(&self) -> DMatrix<f64> {
        let n = self.z.len();
        let m = &self.metric;
        DMatrix::from_fn(n, n, |mu, nu| {
            (0..n)
                .map(|l| m.dg(mu, l, nu) * self.z[l] + m.g[(mu, l)] * self.dz[(l, nu)])
                .sum()
        })
    }

    /// Exterior derivative `(dα)_{μν} = ∂_μ α_ν - ∂_ν α_μ`.
    pub fn exterior_d_alpha(&self) -> DMatrix<f64> {
        let da = self.d_alpha();
        DMatrix::from_fn(da.nrows(), da.ncols(), |mu, nu| da[(nu, mu)] - da[(mu, nu)])
    }
}

impl ReferenceFrameField {
    pub fn new(components: Vec<Expression>) -> Self {
        Self {
            components,
            normalized: false,
        }
    }

    /// The field `Z / sqrt(|g(Z, Z)|)`.
    pub fn normalizing(components: Vec<Expression>) -> Self {
        Self {
            components,
            normalized: true,
        }
    }

    pub fn parse(spec: &SpacetimeSpec, components: &[&str], normalized: bool) -> Result<Self> {
        let components = components
            .iter()
            .map(|t| spec.parse_expression(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            normalized,
        })
    }

    /// The field `e_0` of a frame.
    pub fn from_frame(frame: &FrameFieldSpec) -> Self {
        Self::new(frame.vectors[0].clone())
    }

    pub fn eval(&self, spec: &SpacetimeSpec, p: &[f64]) -> Result<FieldEval> {
        let n = spec.dimension();
        let time_sign = lorentzian_time_sign(spec.signature())
            .ok_or_else(|| Error::NotLorentzian(spec.signature().to_vec()))?;
        if self.components.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "reference field has {} components, chart has {n}",
                self.components.len()
            )));
        }
        let metric = spec.eval_metric(p)?;
        let seeds = seed_jets(p);
        let mut jets: Vec<ScalarJet> = self.components.iter().map(|c| c.eval_jet(&seeds)).collect();
        if self.normalized {
            let mut norm = ScalarJet::constant(0.0, n);
            for a in 0..n {
                for b in 0..n {
                    norm = &norm + &(&metric.jets[a * n + b] * &(&jets[a] * &jets[b]));
                }
            }
            if !(norm.value * time_sign > 0.0) {
                return Err(Error::NotUnitTimelike { norm: norm.value });
            }
            let k = norm.scale(time_sign).powf(-0.5);
            jets = jets.iter().map(|j| j * &k).collect();
        }
        if jets.iter().any(|j| !j.is_finite()) {
            return Err(Error::NonFinite {
                what: "reference field".into(),
                point: p.to_vec(),
            });
        }
        let z: Vec<f64> = jets.iter().map(|j| j.value).collect();
        let norm = metric.inner(&z, &z);
        if !((norm - time_sign).abs() <= UNIT_TOL) {
            return Err(Error::NotUnitTimelike { norm });
        }
        let dz = DMatrix::from_fn(n, n, |mu, nu| jets[mu].grad[nu]);
        Ok(FieldEval {
            z,
            dz,
            metric,
            time_sign,
        })
    }
}

/// Orthonormal frame with `e_0 = Z`, completed on the screen of `Z`, where
/// the metric restricts to `g - s α⊗α`. The frame is positively oriented
/// relative to the chart. Columns are the frame vectors.
pub fn orthonormal_completion(spec: &SpacetimeSpec, field: &ReferenceFrameField, p: &[f64]) -> Result<DMatrix<f64>> {
    let fe = field.eval(spec, p)?;
    completion_of(spec, &fe)
}

fn completion_of(spec: &SpacetimeSpec, fe: &FieldEval) -> Result<DMatrix<f64>> {
    let sig = spec.signature();
    if f64::from(sig[0]) != fe.time_sign {
        return Err(Error::InvalidArgument(
            "the timelike slot of the signature must come first".into(),
        ));
    }
    let mut e = orthonormal_basis(&fe.metric.g, sig, Some(&fe.z))?;
    let n = e.ncols();
    if e.determinant() < 0.0 {
        let last = -e.column(n - 1).clone_owned();
        e.set_column(n - 1, &last);
    }
    Ok(e)
}

#[derive(Debug, Clone, Serialize)]
pub struct KinematicDecomposition {
    pub basis: Basis,
    pub alpha: Vec<f64>,
    /// Acceleration 1-form.
    pub a: Vec<f64>,
    #[serde(with = "serde_matrix")]
    pub omega: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub sigma: DMatrix<f64>,
    pub expansion: f64,
    #[serde(with = "serde_matrix")]
    pub h: DMatrix<f64>,
    /// `d_alpha[(mu, nu)] = (D_ν α)_μ`.
    #[serde(with = "serde_matrix")]
    pub d_alpha: DMatrix<f64>,
    pub z: Vec<f64>,
    #[serde(skip)]
    pub g_inv: DMatrix<f64>,
    #[serde(skip)]
    pub time_sign: f64,
}

/// Residuals of the algebraic identities a decomposition must satisfy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecompositionResiduals {
    pub reassembly: f64,
    pub omega_symmetric_part: f64,
    pub sigma_antisymmetric_part: f64,
    pub sigma_trace: f64,
    pub projector_idempotence: f64,
    pub projector_annihilates_z: f64,
    pub projector_trace: f64,
    pub acceleration_orthogonality: f64,
    pub screen_confinement: f64,
}

impl DecompositionResiduals {
    pub fn max(&self) -> f64 {
        [
            self.reassembly,
            self.omega_symmetric_part,
            self.sigma_antisymmetric_part,
            self.sigma_trace,
            self.projector_idempotence,
            self.projector_annihilates_z,
            self.projector_trace,
            self.acceleration_orthogonality,
            self.screen_confinement,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl KinematicDecomposition {
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `s a⊗α + ω + σ + E/(n-1) h`.
    pub fn reassembled(&self) -> DMatrix<f64> {
        let n = self.dim();
        let k = self.expansion / (n as f64 - 1.0);
        DMatrix::from_fn(n, n, |mu, nu| {
            self.time_sign * self.a[mu] * self.alpha[nu] + self.omega[(mu, nu)] + self.sigma[(mu, nu)] + k * self.h[(mu, nu)]
        })
    }

    pub fn residuals(&self) -> DecompositionResiduals {
        let n = self.dim();
        let z = DVector::from_column_slice(&self.z);
        let mixed = &self.g_inv * &self.h;
        let sym_part = |m: &DMatrix<f64>| tensor::max_abs(&((m + m.transpose()) * 0.5));
        let anti_part = |m: &DMatrix<f64>| tensor::max_abs(&((m - m.transpose()) * 0.5));
        let a_dot_z: f64 = self.a.iter().zip(&self.z).map(|(a, z)| a * z).sum();
        DecompositionResiduals {
            reassembly: tensor::max_abs(&(&self.d_alpha - self.reassembled())),
            omega_symmetric_part: sym_part(&self.omega),
            sigma_antisymmetric_part: anti_part(&self.sigma),
            sigma_trace: (&self.g_inv * &self.sigma).trace().abs(),
            projector_idempotence: tensor::max_abs(&(&mixed * &mixed - &mixed)),
            projector_annihilates_z: (&self.h * &z).amax(),
            projector_trace: (mixed.trace() - (n as f64 - 1.0)).abs(),
            acceleration_orthogonality: a_dot_z.abs(),
            screen_confinement: (&self.omega * &z).amax().max((&self.sigma * &z).amax()),
        }
    }

    /// Components in a frame whose vectors are the columns of `lambda`.
    pub fn to_frame(&self, lambda: &DMatrix<f64>) -> Result<Self> {
        let inv = lambda
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularFrame { point: vec![] })?;
        let co = |v: &[f64]| -> Vec<f64> { (lambda.transpose() * DVector::from_column_slice(v)).iter().copied().collect() };
        let two = |m: &DMatrix<f64>| lambda.transpose() * m * lambda;
        Ok(Self {
            basis: Basis::Frame,
            alpha: co(&self.alpha),
            a: co(&self.a),
            omega: two(&self.omega),
            sigma: two(&self.sigma),
            expansion: self.expansion,
            h: two(&self.h),
            d_alpha: two(&self.d_alpha),
            z: (&inv * DVector::from_column_slice(&self.z)).iter().copied().collect(),
            g_inv: &inv * &self.g_inv * inv.transpose(),
            time_sign: self.time_sign,
        })
    }

    /// Largest componentwise difference of every field.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let vec_diff = |u: &[f64], v: &[f64]| u.iter().zip(v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        [
            vec_diff(&self.alpha, &other.alpha),
            vec_diff(&self.a, &other.a),
            tensor::max_abs(&(&self.omega - &other.omega)),
            tensor::max_abs(&(&self.sigma - &other.sigma)),
            (self.expansion - other.expansion).abs(),
            tensor::max_abs(&(&self.h - &other.h)),
            tensor::max_abs(&(&self.d_alpha - &other.d_alpha)),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Decomposition from `M_{μν} = ∂_ν α_μ - Γ^λ_{νμ} α_λ` in the coordinate basis.
pub(crate) fn decompose_from(fe: &FieldEval, conn: &ConnectionCoefficients) -> KinematicDecomposition {
    let n = fe.z.len();
    let s = fe.time_sign;
    let g = &fe.metric.g;
    let alpha = fe.alpha();
    let da = fe.d_alpha();
    let gamma = &conn.gamma;
    let m = DMatrix::from_fn(n, n, |mu, nu| {
        da[(mu, nu)] - (0..n).map(|l| gamma[(l, nu, mu)] * alpha[l]).sum::<f64>()
    });
    let a: Vec<f64> = (0..n).map(|mu| (0..n).map(|nu| m[(mu, nu)] * fe.z[nu]).sum()).collect();
    let h = DMatrix::from_fn(n, n, |mu, nu| g[(mu, nu)] - s * alpha[mu] * alpha[nu]);
    // mixed projector h^μ_α
    let hm = DMatrix::from_fn(n, n, |mu, al| f64::from(u8::from(mu == al)) - s * fe.z[mu] * alpha[al]);
    let expansion = (&fe.metric.g_inv * &m).trace();
    let anti = (&m - m.transpose()) * 0.5;
    let sym = (&m + m.transpose()) * 0.5 - &h * (expansion / (n as f64 - 1.0));
    let project = |x: &DMatrix<f64>| hm.transpose() * x * &hm;
    KinematicDecomposition {
        basis: Basis::Coordinate,
        alpha,
        a,
        omega: project(&anti),
        sigma: project(&sym),
        expansion,
        h,
        d_alpha: m,
        z: fe.z.clone(),
        g_inv: fe.metric.g_inv.clone(),
        time_sign: s,
    }
}

/// Decomposition of `Dα` for the connection `kind` (coordinate components).
pub fn decompose(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    field: &ReferenceFrameField,
    p: &[f64],
) -> Result<KinematicDecomposition> {
    let fe = field.eval(spec, p)?;
    let conn = connection_at(spec, kind, p, false)?;
    Ok(decompose_from(&fe, &conn))
}

pub fn decompose_levi_civita(
    spec: &SpacetimeSpec,
    field: &ReferenceFrameField,
    p: &[f64],
) -> Result<KinematicDecomposition> {
    let fe = field.eval(spec, p)?;
    Ok(decompose_from(&fe, &christoffel(spec, p, false)?))
}

/// Levi-Civita decomposition computed in an orthonormal frame with
/// `e_0 = Z`, from the frame connection `γ` and structure coefficients `c`:
/// `a_i = -s γ^0_{0i}`, `ω_{ij} = s c^0_{ij}/2`,
/// `σ_{ij} = -s (γ^0_{ij} + γ^0_{ji})/2 - E η_{ij}/(n-1)`,
/// `E = -s η^{ij} γ^0_{ij}`. Components are in the frame basis.
pub fn decompose_orthonormal(
    spec: &SpacetimeSpec,
    frame: &FrameFieldSpec,
    p: &[f64],
) -> Result<KinematicDecomposition> {
    let n = spec.dimension();
    let sig = spec.signature();
    let s = lorentzian_time_sign(sig).ok_or_else(|| Error::NotLorentzian(sig.to_vec()))?;
    if f64::from(sig[0]) != s {
        return Err(Error::InvalidArgument(
            "the timelike slot of the signature must come first".into(),
        ));
    }
    let fe = spec.eval_frame(frame, p)?;
    let g = spec.metric_values(p);
    let residual = orthonormality_residual(&g, &fe.lambda, sig);
    if !(residual <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal { residual });
    }
    let gamma = frame_connection(&christoffel(spec, p, false)?, &fe).gamma;
    let c = structure_from_frame(&fe);
    let eta = tensor::eta(sig);
    let mut alpha = vec![0.0; n];
    alpha[0] = s;
    let mut a = vec![0.0; n];
    let mut expansion = 0.0;
    for i in 1..n {
        a[i] = -s * gamma[(0, 0, i)];
        expansion -= s * eta[(i, i)] * gamma[(0, i, i)];
    }
    let k = expansion / (n as f64 - 1.0);
    let mut omega = DMatrix::zeros(n, n);
    let mut sigma = DMatrix::zeros(n, n);
    for i in 1..n {
        for j in 1..n {
            omega[(i, j)] = 0.5 * s * c[(0, i, j)];
            sigma[(i, j)] = -0.5 * s * (gamma[(0, i, j)] + gamma[(0, j, i)]) - k * eta[(i, j)];
        }
    }
    let h = DMatrix::from_fn(n, n, |i, j| eta[(i, j)] - s * alpha[i] * alpha[j]);
    let d_alpha = DMatrix::from_fn(n, n, |mu, nu| -s * gamma[(0, nu, mu)]);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    Ok(KinematicDecomposition {
        basis: Basis::Frame,
        alpha,
        a,
        omega,
        sigma,
        expansion,
        h,
        d_alpha,
        z,
        g_inv: eta,
        time_sign: s,
    })
}

/// `T⁰` and `S⁰`: the screen parts of `Z_λ T^λ` and `Z_λ S^λ` that shift the
/// rotation and shear when torsion is present. In the adapted orthonormal
/// frame `T⁰_{ij} = T^0_{ij}/2` and `S⁰_{ij} = -S^0_{ij}/2`; stored here in
/// coordinate components together with the frame used.
#[derive(Debug, Clone, Serialize)]
pub struct TorsionCorrections {
    #[serde(with = "serde_matrix")]
    pub t0: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub s0: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub frame: DMatrix<f64>,
}

impl TorsionCorrections {
    /// Residual of `ω = ω̊ + T⁰` and `σ = σ̊ - (E - E̊)/(n-1) h + S⁰`.
    pub fn identity_residual(&self, rc: &KinematicDecomposition, lc: &KinematicDecomposition) -> f64 {
        let n = rc.dim() as f64;
        let k = (rc.expansion - lc.expansion) / (n - 1.0);
        let w = &rc.omega - &lc.omega - &self.t0;
        let s = &rc.sigma - &lc.sigma + &rc.h * k - &self.s0;
        tensor::max_abs(&w).max(tensor::max_abs(&s))
    }
}

pub(crate) fn corrections(fe: &FieldEval, frame: &DMatrix<f64>, t: &Tensor3) -> TorsionCorrections {
    let n = fe.z.len();
    let m = &fe.metric;
    let st = strain_from(&m.g, &m.g_inv, t);
    let theta = frame.clone().try_inverse().expect("orthonormal frame is invertible");
    // upper frame index 0 of a (1,2) tensor X evaluated on e_i, e_j
    let upper0 = |x: &Tensor3, i: usize, j: usize| -> f64 {
        let mut v = 0.0;
        for l in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    v += theta[(0, l)] * x[(l, mu, nu)] * frame[(mu, i)] * frame[(nu, j)];
                }
            }
        }
        v
    };
    let mut t0f = DMatrix::zeros(n, n);
    let mut s0f = DMatrix::zeros(n, n);
    for i in 1..n {
        for j in 1..n {
            t0f[(i, j)] = 0.5 * upper0(t, i, j);
            s0f[(i, j)] = -0.5 * upper0(&st, i, j);
        }
    }
    let back = |x: &DMatrix<f64>| theta.transpose() * x * &theta;
    TorsionCorrections {
        t0: back(&t0f),
        s0: back(&s0f),
        frame: frame.clone(),
    }
}

/// Riemann-Cartan decomposition with the torsion corrections relating it to
/// the Levi-Civita one.
pub fn decompose_riemann_cartan(
    spec: &SpacetimeSpec,
    field: &ReferenceFrameField,
    p: &[f64],
) -> Result<(KinematicDecomposition, TorsionCorrections)> {
    let torsion = spec.require_torsion()?;
    let fe = field.eval(spec, p)?;
    let dec = decompose_from(&fe, &rc_connection(spec, p, false)?);
    let frame = completion_of(spec, &fe)?;
    let corr = corrections(&fe, &frame, &torsion.eval(p));
    Ok((dec, corr))
}

/// Components of `α∧dα` as an antisymmetric array `[λ][μ][ν]`.
pub fn alpha_wedge_dalpha(spec: &SpacetimeSpec, field: &ReferenceFrameField, p: &[f64]) -> Result<Tensor3> {
    let fe = field.eval(spec, p)?;
    Ok(wedge_of(&fe))
}

pub(crate) fn wedge_of(fe: &FieldEval) -> Tensor3 {
    let alpha = fe.alpha();
    let d = fe.exterior_d_alpha();
    Tensor3::from_fn(alpha.len(), |l, m, k| {
        alpha[l] * d[(m, k)] + alpha[m] * d[(k, l)] + alpha[k] * d[(l, m)]
    })
}

/// Vorticity vector `w^i = ε^{0ijk} c^0_{jk}/2` in the adapted orthonormal
/// frame (positively oriented, `ε^{0123} = 1`), where
/// `c^0_{jk} = -s dα(e_j, e_k)`. Returns frame components; `w^0 = 0`.
pub fn vorticity_covector(spec: &SpacetimeSpec, field: &ReferenceFrameField, p: &[f64]) -> Result<Vec<f64>> {
    if spec.dimension() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "the vorticity vector needs dimension 4, chart has {}",
            spec.dimension()
        )));
    }
    let fe = field.eval(spec, p)?;
    let e = completion_of(spec, &fe)?;
    let d = fe.exterior_d_alpha();
    let c0 = -fe.time_sign * (e.transpose() * d * &e);
    Ok(vec![0.0, c0[(2, 3)], c0[(3, 1)], c0[(1, 2)]])
}
