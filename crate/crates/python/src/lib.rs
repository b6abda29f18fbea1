use cartan_forge::classify::{
    antisymmetry_condition, irf_check, irf_obstruction_ricci, lirf_lorentzian_check, lirf_rc_check, nacs_check,
    pirf_check,
};
use cartan_forge::connection::{
    connection_at, contorsion, curvature, curvature_split, ricci, scalar_curvature, strain, ConnectionKind,
};
use cartan_forge::integrate::{exponential_map, integrate_autoparallel, CurveState, IntegratorConfig};
use cartan_forge::kinematics::{decompose_levi_civita, decompose_riemann_cartan, ReferenceFrameField};
use cartan_forge::normal::{build_normal_chart, postcondition_residuals, verify_gamma_derivative, NormalChartConfig};
use cartan_forge::tensor::matrix_rows;
use cartan_forge::transport::{build_fermi_chart, construct_imf};
use cartan_forge::{catalog, parse_spacetime_spec_with, SpacetimeSpec, TangentClass};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

create_exception!(cartan_forge, CartanForgeError, PyException);

fn err(e: cartan_forge::Error) -> PyErr {
    CartanForgeError::new_err(format!("{}: {e}", e.kind()))
}

fn kind_of(name: &str) -> PyResult<ConnectionKind> {
    ConnectionKind::from_name(&name.replace('-', "_"))
        .ok_or_else(|| PyValueError::new_err(format!("unknown connection `{name}`")))
}

/// Serializable value as native Python objects (dicts, lists, floats).
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn field(spec: &SpacetimeSpec, z: Option<Vec<String>>, normalize: bool) -> PyResult<ReferenceFrameField> {
    match z {
        Some(parts) => {
            let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
            ReferenceFrameField::parse(spec, &refs, normalize).map_err(err)
        }
        None => {
            let mut f = ReferenceFrameField::from_frame(spec.require_frame().map_err(err)?);
            f.normalized = normalize;
            Ok(f)
        }
    }
}

/// A spacetime: chart, metric, optional torsion and frame.
#[pyclass(name = "Spacetime", module = "cartan_forge", frozen)]
struct PySpacetime {
    spec: SpacetimeSpec,
}

#[pymethods]
impl PySpacetime {
    /// Built-in spacetime with optional parameter overrides.
    #[staticmethod]
    #[pyo3(signature = (name, params = None))]
    fn catalog(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let spec = catalog::load_with(name, &params.unwrap_or_default()).map_err(err)?;
        Ok(Self { spec })
    }

    /// Spacetime from document text.
    #[staticmethod]
    #[pyo3(signature = (text, params = None))]
    fn parse(text: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let spec = parse_spacetime_spec_with(text, &params.unwrap_or_default()).map_err(err)?;
        Ok(Self { spec })
    }

    #[getter]
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    #[getter]
    fn coordinates(&self) -> Vec<String> {
        self.spec.chart.names().to_vec()
    }

    #[getter]
    fn signature(&self) -> Vec<i8> {
        self.spec.signature().to_vec()
    }

    #[getter]
    fn parameters(&self) -> BTreeMap<String, f64> {
        self.spec.parameters.clone()
    }

    #[getter]
    fn has_torsion(&self) -> bool {
        self.spec.torsion.is_some()
    }

    #[getter]
    fn has_frame(&self) -> bool {
        self.spec.frame.is_some()
    }

    fn to_document(&self) -> String {
        self.spec.to_document()
    }

    fn metric(&self, point: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix_rows(&self.spec.eval_metric(&point).map_err(err)?.g))
    }

    fn inverse_metric(&self, point: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix_rows(&self.spec.eval_metric(&point).map_err(err)?.g_inv))
    }

    /// `gamma[a][b][c] = Γ^a_{bc}` with `D_{e_b} e_c = Γ^a_{bc} e_a`.
    #[pyo3(signature = (point, connection = "levi_civita"))]
    fn christoffel<'py>(&self, py: Python<'py>, point: Vec<f64>, connection: &str) -> PyResult<Bound<'py, PyAny>> {
        let conn = connection_at(&self.spec, kind_of(connection)?, &point, false).map_err(err)?;
        to_py(py, &conn.gamma)
    }

    /// `R[m][l][a][b] = R_m^l_{ab}`.
    #[pyo3(signature = (point, connection = "levi_civita"))]
    fn curvature<'py>(&self, py: Python<'py>, point: Vec<f64>, connection: &str) -> PyResult<Bound<'py, PyAny>> {
        let conn = connection_at(&self.spec, kind_of(connection)?, &point, true).map_err(err)?;
        to_py(py, &curvature(&conn, None).map_err(err)?.components)
    }

    #[pyo3(signature = (point, connection = "levi_civita"))]
    fn ricci(&self, point: Vec<f64>, connection: &str) -> PyResult<Vec<Vec<f64>>> {
        let conn = connection_at(&self.spec, kind_of(connection)?, &point, true).map_err(err)?;
        Ok(matrix_rows(&ricci(&curvature(&conn, None).map_err(err)?)))
    }

    #[pyo3(signature = (point, connection = "levi_civita"))]
    fn scalar_curvature(&self, point: Vec<f64>, connection: &str) -> PyResult<f64> {
        let m = self.spec.eval_metric(&point).map_err(err)?;
        let conn = connection_at(&self.spec, kind_of(connection)?, &point, true).map_err(err)?;
        Ok(scalar_curvature(&curvature(&conn, None).map_err(err)?, &m.g_inv))
    }

    fn torsion<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let t = self.spec.require_torsion().map_err(err)?;
        self.spec.chart.check_point(&point).map_err(err)?;
        to_py(py, &t.eval(&point))
    }

    fn contorsion<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &contorsion(&self.spec, &point).map_err(err)?)
    }

    fn strain<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &strain(&self.spec, &point).map_err(err)?)
    }

    /// Largest residual of `R = R̊ + J_[ab]`.
    fn curvature_split_residual(&self, point: Vec<f64>) -> PyResult<f64> {
        Ok(curvature_split(&self.spec, &point).map_err(err)?.residual)
    }

    /// "timelike", "spacelike" or "lightlike".
    fn classify_tangent(&self, point: Vec<f64>, v: Vec<f64>) -> PyResult<&'static str> {
        Ok(match self.spec.classify_tangent(&point, &v).map_err(err)? {
            TangentClass::Timelike => "timelike",
            TangentClass::Spacelike => "spacelike",
            TangentClass::Lightlike => "lightlike",
        })
    }

    /// Samples `{tau, point, velocity}` of the autoparallel.
    #[pyo3(signature = (point, velocity, tau_end, connection = "levi_civita", step = None, tol = None))]
    fn autoparallel<'py>(
        &self,
        py: Python<'py>,
        point: Vec<f64>,
        velocity: Vec<f64>,
        tau_end: f64,
        connection: &str,
        step: Option<f64>,
        tol: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut cfg = step.map_or_else(IntegratorConfig::default, IntegratorConfig::fixed);
        if let Some(t) = tol {
            cfg.tolerance = t;
        }
        let curve = integrate_autoparallel(&self.spec, kind_of(connection)?, &CurveState::new(point, velocity), tau_end, &cfg)
            .map_err(err)?;
        to_py(py, &curve)
    }

    #[pyo3(signature = (point, xi, connection = "levi_civita"))]
    fn exponential_map(&self, point: Vec<f64>, xi: Vec<f64>, connection: &str) -> PyResult<Vec<f64>> {
        exponential_map(&self.spec, kind_of(connection)?, &point, &xi, &IntegratorConfig::default()).map_err(err)
    }

    /// Normal chart at `point` with its postcondition residuals.
    #[pyo3(signature = (point, connection = "levi_civita", patch_radius = 0.1, step = 1e-3))]
    fn normal_chart<'py>(
        &self,
        py: Python<'py>,
        point: Vec<f64>,
        connection: &str,
        patch_radius: f64,
        step: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let kind = kind_of(connection)?;
        let cfg = NormalChartConfig {
            patch_radius,
            ..NormalChartConfig::default()
        };
        let chart = build_normal_chart(&self.spec, kind, &point, &cfg).map_err(err)?;
        let mut residuals = postcondition_residuals(&self.spec, &chart).map_err(err)?;
        if kind == ConnectionKind::LeviCivita {
            let check = verify_gamma_derivative(&self.spec, &chart, step).map_err(err)?;
            residuals.insert("gamma_derivative_relative".into(), check.relative_residual);
        }
        let out = to_py(py, &chart)?;
        out.set_item("residuals", residuals)?;
        Ok(out)
    }

    /// Kinematic decomposition of the field `z` (expressions; defaults to
    /// the frame vector e_0) for the Levi-Civita connection and, with
    /// torsion, the Riemann-Cartan connection.
    #[pyo3(signature = (point, z = None, normalize = false))]
    fn decompose<'py>(
        &self,
        py: Python<'py>,
        point: Vec<f64>,
        z: Option<Vec<String>>,
        normalize: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let f = field(&self.spec, z, normalize)?;
        let lc = decompose_levi_civita(&self.spec, &f, &point).map_err(err)?;
        let out = pyo3::types::PyDict::new(py);
        out.set_item("levi_civita", to_py(py, &lc)?)?;
        out.set_item("levi_civita_residuals", to_py(py, &lc.residuals())?)?;
        if self.spec.torsion.is_some() {
            let (rc, corr) = decompose_riemann_cartan(&self.spec, &f, &point).map_err(err)?;
            out.set_item("riemann_cartan", to_py(py, &rc)?)?;
            out.set_item("riemann_cartan_residuals", to_py(py, &rc.residuals())?)?;
            out.set_item("torsion_identity_residual", corr.identity_residual(&rc, &lc))?;
            out.set_item("torsion_corrections", to_py(py, &corr)?)?;
        }
        Ok(out.into_any())
    }

    /// Frame verdict for `predicate` in irf, pirf, nacs, lirf, lirf_rc,
    /// antisymmetry. Field predicates use `z` and `points`; the curve
    /// predicates start at `points[0]` with `velocity`.
    #[pyo3(signature = (predicate, points, z = None, connection = "levi_civita", velocity = None, tau_end = None, step = 0.25, tol = 1e-8, normalize = false))]
    #[allow(clippy::too_many_arguments)]
    fn classify<'py>(
        &self,
        py: Python<'py>,
        predicate: &str,
        points: Vec<Vec<f64>>,
        z: Option<Vec<String>>,
        connection: &str,
        velocity: Option<Vec<f64>>,
        tau_end: Option<f64>,
        step: f64,
        tol: f64,
        normalize: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let spec = &self.spec;
        let curve = |kind| -> PyResult<Vec<CurveState>> {
            let start = points.first().ok_or_else(|| PyValueError::new_err("a start point is required"))?;
            let v = velocity.clone().ok_or_else(|| PyValueError::new_err("velocity is required"))?;
            let tau = tau_end.ok_or_else(|| PyValueError::new_err("tau_end is required"))?;
            integrate_autoparallel(spec, kind, &CurveState::new(start.clone(), v), tau, &IntegratorConfig::fixed(step))
                .map_err(err)
        };
        match predicate.replace('-', "_").as_str() {
            "irf" => {
                let f = field(spec, z, normalize)?;
                let kind = kind_of(connection)?;
                let out = to_py(py, &irf_check(spec, kind, &f, &points, tol).map_err(err)?)?;
                if kind == ConnectionKind::LeviCivita {
                    let obstruction = irf_obstruction_ricci(spec, &f, &points, tol).map_err(err)?;
                    out.set_item("ricci_obstruction", to_py(py, &obstruction)?)?;
                }
                Ok(out)
            }
            "pirf" => {
                let f = field(spec, z, normalize)?;
                to_py(py, &pirf_check(spec, kind_of(connection)?, &f, &points, tol).map_err(err)?)
            }
            "nacs" => to_py(py, &nacs_check(spec, &field(spec, z, normalize)?, &points, tol).map_err(err)?),
            "lirf" => {
                let c = curve(ConnectionKind::LeviCivita)?;
                let fermi = build_fermi_chart(spec, &c, &IntegratorConfig::default(), &NormalChartConfig::default())
                    .map_err(err)?;
                to_py(py, &lirf_lorentzian_check(spec, &fermi, tol).map_err(err)?)
            }
            "lirf_rc" => {
                let c = curve(ConnectionKind::RiemannCartan)?;
                let imf = construct_imf(spec, ConnectionKind::RiemannCartan, &c, &IntegratorConfig::default()).map_err(err)?;
                to_py(py, &lirf_rc_check(spec, &imf, tol).map_err(err)?)
            }
            "antisymmetry" => to_py(py, &antisymmetry_condition(spec, &points, tol).map_err(err)?),
            other => Err(PyValueError::new_err(format!("unknown predicate `{other}`"))),
        }
    }

    fn __repr__(&self) -> String {
        format!("Spacetime({:?}, coordinates={:?})", self.spec.name, self.spec.chart.names())
    }
}

#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    catalog::names()
}

#[pymodule(name = "cartan_forge")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpacetime>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add("CartanForgeError", m.py().get_type::<CartanForgeError>())?;
    Ok(())
}
