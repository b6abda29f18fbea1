//! Autoparallel integration and the exponential map.
//!
//! The autoparallel equation `ẍ^a + Γ^a_{bc} ẋ^b ẋ^c = 0` is integrated as a
//! first-order system in `(x, v)` with classical RK4, either at a fixed step
//! or with step halving: each step is compared against two half steps and
//! refined until the difference is within tolerance.

use crate::connection::{connection_at, ConnectionKind};
use crate::error::{Error, Result};
use crate::spacetime::SpacetimeSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveState {
    pub tau: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl CurveState {
    pub fn new(point: Vec<f64>, velocity: Vec<f64>) -> Self {
        Self {
            tau: 0.0,
            point,
            velocity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Fixed,
    Rk4Halving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    /// Fixed step, or initial and maximal step when halving.
    pub step: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
    /// Per-step error bound for step halving.
    pub tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-2,
            max_steps: 1_000_000,
            scheme: Scheme::Rk4Halving,
            tolerance: 1e-11,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(step: f64) -> Self {
        Self {
            step,
            scheme: Scheme::Rk4Fixed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct OdeSample {
    pub tau: f64,
    pub y: Vec<f64>,
}

/// Why an integration stopped early, with everything accepted so far.
#[derive(Debug)]
pub(crate) struct OdeStop {
    pub samples: Vec<OdeSample>,
    pub error: Error,
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

pub(crate) fn rk4_step<F>(f: &mut F, tau: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(tau, y)?;
    let k2 = f(tau + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(tau + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(tau + h, &axpy(y, h, &k3))?;
    let out: Vec<f64> = (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFinite {
            what: "integrator state".into(),
            point: out,
        })
    }
}

/// Difference between a full step and two half steps, scaled per component.
pub(crate) fn halving_error(full: &[f64], half: &[f64]) -> f64 {
    full.iter()
        .zip(half)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())))
}

/// Integrates `y' = f(tau, y)` from `tau0` to `tau_end` (either direction).
pub(crate) fn integrate_ode<F>(
    mut f: F,
    y0: Vec<f64>,
    tau0: f64,
    tau_end: f64,
    cfg: &IntegratorConfig,
) -> std::result::Result<Vec<OdeSample>, OdeStop>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let dir = if tau_end >= tau0 { 1.0 } else { -1.0 };
    let span = (tau_end - tau0).abs();
    let eps = 1e-13 * span.max(1.0);
    let mut samples = vec![OdeSample {
        tau: tau0,
        y: y0,
    }];
    let mut h = cfg.step;
    let mut steps = 0usize;
    let stop = |samples: Vec<OdeSample>, error: Error| Err(OdeStop { samples, error });
    loop {
        let last = samples.last().expect("non-empty");
        let (tau, y) = (last.tau, last.y.clone());
        let remaining = (tau_end - tau) * dir;
        if remaining <= eps {
            return Ok(samples);
        }
        if steps >= cfg.max_steps {
            return stop(
                samples,
                Error::MaxStepsExceeded {
                    tau,
                    max_steps: cfg.max_steps,
                },
            );
        }
        steps += 1;
        // land exactly on tau_end; absorb slivers into the final step
        let mut hs = h.min(remaining);
        if remaining - hs <= eps {
            hs = remaining;
        }
        let next_tau = if hs == remaining { tau_end } else { tau + dir * hs };
        match cfg.scheme {
            Scheme::Rk4Fixed => match rk4_step(&mut f, tau, &y, dir * hs) {
                Ok(y1) => samples.push(OdeSample {
                    tau: next_tau,
                    y: y1,
                }),
                Err(e) => return stop(samples, e),
            },
            Scheme::Rk4Halving => {
                let attempt = rk4_step(&mut f, tau, &y, dir * hs).and_then(|full| {
                    let mid = rk4_step(&mut f, tau, &y, dir * hs / 2.0)?;
                    let half = rk4_step(&mut f, tau + dir * hs / 2.0, &mid, dir * hs / 2.0)?;
                    Ok((full, half))
                });
                match attempt {
                    Ok((full, half)) => {
                        let err = halving_error(&full, &half);
                        if err <= cfg.tolerance {
                            // Richardson extrapolation of the two estimates
                            let y1 = half
                                .iter()
                                .zip(&full)
                                .map(|(a, b)| a + (a - b) / 15.0)
                                .collect();
                            samples.push(OdeSample {
                                tau: next_tau,
                                y: y1,
                            });
                            if err < cfg.tolerance / 64.0 {
                                h = (2.0 * hs).min(cfg.step);
                            } else {
                                h = hs;
                            }
                        } else {
                            h = hs / 2.0;
                        }
                    }
                    Err(e) => {
                        // a trial point may have overshot a boundary; refine first
                        h = hs / 2.0;
                        if h < eps {
                            return stop(samples, e);
                        }
                    }
                }
                if h < eps {
                    return stop(samples, Error::StepUnderflow { tau });
                }
            }
        }
    }
}

fn state_of(sample: &OdeSample, n: usize) -> CurveState {
    CurveState {
        tau: sample.tau,
        point: sample.y[..n].to_vec(),
        velocity: sample.y[n..2 * n].to_vec(),
    }
}

/// Converts an early stop into the public error, attaching the last good state.
pub(crate) fn stop_error(stop: OdeStop, n: usize) -> Error {
    match stop.error {
        e @ (Error::StepUnderflow { .. } | Error::MaxStepsExceeded { .. }) => e,
        e => {
            let last = stop.samples.last().expect("non-empty");
            Error::DomainExit {
                tau: last.tau,
                last: Box::new(state_of(last, n)),
                reason: e.to_string(),
            }
        }
    }
}

fn check_start(spec: &SpacetimeSpec, kind: ConnectionKind, start: &CurveState) -> Result<()> {
    let n = spec.dimension();
    if start.point.len() != n || start.velocity.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state must have {n} coordinates and {n} velocity components"
        )));
    }
    connection_at(spec, kind, &start.point, false).map(|_| ())
}

/// Integrates the autoparallel of `kind` from `start` to `start.tau + tau_end`
/// (`tau_end` is the parameter length and may be negative).
pub fn integrate_autoparallel(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    start: &CurveState,
    tau_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<CurveState>> {
    cfg.validate()?;
    check_start(spec, kind, start)?;
    let n = spec.dimension();
    let rhs = |_tau: f64, y: &[f64]| -> Result<Vec<f64>> {
        let conn = connection_at(spec, kind, &y[..n], false)?;
        let mut dy = y[n..].to_vec();
        dy.extend(conn.acceleration(&y[n..]));
        Ok(dy)
    };
    let mut y0 = start.point.clone();
    y0.extend_from_slice(&start.velocity);
    match integrate_ode(rhs, y0, start.tau, start.tau + tau_end, cfg) {
        Ok(samples) => Ok(samples.iter().map(|s| state_of(s, n)).collect()),
        Err(stop) => Err(stop_error(stop, n)),
    }
}

/// `exp_{p0}(xi)`: the point at parameter 1 along the autoparallel with
/// initial velocity `xi`.
pub fn exponential_map(
    spec: &SpacetimeSpec,
    kind: ConnectionKind,
    p0: &[f64],
    xi: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let curve = integrate_autoparallel(spec, kind, &CurveState::new(p0.to_vec(), xi.to_vec()), 1.0, cfg)?;
    Ok(curve.last().expect("non-empty").point.clone())
}

/// Largest change of `g(v, v)` along a curve relative to its initial value.
pub fn norm_drift(spec: &SpacetimeSpec, curve: &[CurveState]) -> Result<f64> {
    let norm = |s: &CurveState| -> Result<f64> {
        let g = spec.metric_values(&s.point);
        let n = s.velocity.len();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += g[(a, b)] * s.velocity[a] * s.velocity[b];
            }
        }
        Ok(acc)
    };
    let n0 = norm(&curve[0])?;
    curve
        .iter()
        .try_fold(0.0f64, |m, s| Ok(m.max((norm(s)? - n0).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_halving_solves_exponential_decay() {
        let cfg = IntegratorConfig {
            step: 0.1,
            tolerance: 1e-12,
            ..IntegratorConfig::default()
        };
        let out = integrate_ode(|_, y| Ok(vec![-y[0]]), vec![1.0], 0.0, 2.0, &cfg).unwrap();
        let last = out.last().unwrap();
        assert_eq!(last.tau, 2.0);
        assert!((last.y[0] - (-2f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn fixed_steps_run_backwards() {
        let cfg = IntegratorConfig::fixed(0.01);
        let out = integrate_ode(|_, y| Ok(vec![y[1], -y[0]]), vec![0.0, 1.0], 0.0, -1.0, &cfg).unwrap();
        let last = out.last().unwrap();
        assert_eq!(last.tau, -1.0);
        assert!((last.y[0] - (-1f64).sin()).abs() < 1e-9);
        assert_eq!(out.len(), 101);
    }

    #[test]
    fn failure_keeps_accepted_samples() {
        let cfg = IntegratorConfig::fixed(0.1);
        let stop = integrate_ode(
            |t, y| {
                if t > 0.45 {
                    Err(Error::ZeroVector)
                } else {
                    Ok(vec![y[0]])
                }
            },
            vec![1.0],
            0.0,
            1.0,
            &cfg,
        )
        .unwrap_err();
        assert!(stop.samples.last().unwrap().tau < 0.45);
    }
}
