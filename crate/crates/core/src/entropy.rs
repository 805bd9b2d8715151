//! Relative entropy `H(v) = sum_i vbar_i^2 H(v_i / vbar_i)` with respect to a
//! stationary state, its dissipation, the Lyapunov functional
//! `F = log(E(v) / beta(v)^2)` and the decomposition `v = lambda vbar + h`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::equilibrium::residual;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf};
use crate::model::Model;

/// Convex-or-not smooth kernel `H` with analytic derivative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EntropyKernel {
    Linear,
    Quadratic,
    /// `H(s) = sum_k coeffs[k] s^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl EntropyKernel {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            EntropyKernel::Linear => s,
            EntropyKernel::Quadratic => s * s,
            EntropyKernel::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            EntropyKernel::Linear => 1.0,
            EntropyKernel::Quadratic => 2.0 * s,
            EntropyKernel::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c),
        }
    }

    /// Sufficient condition for convexity on `(0, inf)`: no negative
    /// coefficient of degree two or more.
    pub fn is_convex(&self) -> bool {
        match self {
            EntropyKernel::Linear | EntropyKernel::Quadratic => true,
            EntropyKernel::Polynomial { coeffs } => coeffs.iter().skip(2).all(|&c| c >= 0.0),
        }
    }
}

impl FromStr for EntropyKernel {
    type Err = Error;

    /// Accepts `linear`, `quadratic` or `poly:c0,c1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "linear" => return Ok(EntropyKernel::Linear),
            "quadratic" => return Ok(EntropyKernel::Quadratic),
            _ => {}
        }
        let Some(rest) = s.strip_prefix("poly:") else {
            return Err(Error::InvalidArgument(format!(
                "unknown kernel `{s}`; expected linear, quadratic or poly:<coeffs>"
            )));
        };
        let coeffs = rest
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad kernel coefficient `{c}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "poly kernel needs coefficients".into(),
            ));
        }
        Ok(EntropyKernel::Polynomial { coeffs })
    }
}

impl fmt::Display for EntropyKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyKernel::Linear => f.write_str("linear"),
            EntropyKernel::Quadratic => f.write_str("quadratic"),
            EntropyKernel::Polynomial { coeffs } => {
                f.write_str("poly:")?;
                for (k, c) in coeffs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

fn check_reference(v: &[f64], v_bar: &[f64]) -> Result<()> {
    if v.len() != v_bar.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, reference {}",
            v.len(),
            v_bar.len()
        )));
    }
    if v_bar.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveReference);
    }
    Ok(())
}

pub fn entropy_value(v: &[f64], v_bar: &[f64], kernel: &EntropyKernel) -> Result<f64> {
    check_reference(v, v_bar)?;
    Ok(v.iter()
        .zip(v_bar)
        .map(|(x, b)| b * b * kernel.value(x / b))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub h_value: f64,
    pub d_value: f64,
    pub gamma_term: f64,
    /// `-D + gamma_term`.
    pub analytic_dt: f64,
}

/// Stationarity threshold for reference states, relative to `max(1, |vbar|_inf)`.
pub const STATIONARY_TOL: f64 = 1e-8;

fn check_model_reference(model: &Model, v_bar: &[f64]) -> Result<()> {
    if !model.mu_is_symmetric() {
        return Err(Error::AsymmetricMutation);
    }
    if v_bar.len() != model.n() {
        return Err(Error::DimensionMismatch("reference state".into()));
    }
    if v_bar.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveReference);
    }
    let res = residual(model, v_bar);
    if res > STATIONARY_TOL * norm_inf(v_bar).max(1.0) {
        return Err(Error::NotStationaryReference(res));
    }
    Ok(())
}

fn report_unchecked(
    model: &Model,
    v: &[f64],
    v_bar: &[f64],
    kernel: &EntropyKernel,
) -> EntropyReport {
    let n = model.n();
    let mu = model.mu();
    let x: Vec<f64> = v.iter().zip(v_bar).map(|(a, b)| a / b).collect();
    let hx: Vec<f64> = x.iter().map(|&s| kernel.value(s)).collect();
    let dhx: Vec<f64> = x.iter().map(|&s| kernel.derivative(s)).collect();
    let mut d = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = mu[(i, j)];
            if m != 0.0 {
                let w = m * v_bar[i] * v_bar[j];
                d += w * (hx[j] - hx[i]) + w * dhx[i] * (x[i] - x[j]);
            }
        }
    }
    let psi_bar = model.interaction_values(v_bar);
    let psi = model.interaction_values(v);
    let gamma_term = (0..n)
        .map(|i| v_bar[i] * dhx[i] * (psi_bar[i] - psi[i]) * v[i])
        .sum::<f64>()
        / model.big_k();
    let h_value = v_bar.iter().zip(&hx).map(|(b, h)| b * b * h).sum();
    EntropyReport {
        h_value,
        d_value: d,
        gamma_term,
        analytic_dt: -d + gamma_term,
    }
}

/// Entropy, dissipation and interaction term at `v`; needs symmetric mutation
/// and a stationary reference.
pub fn dissipation(
    model: &Model,
    v: &[f64],
    v_bar: &[f64],
    kernel: &EntropyKernel,
) -> Result<EntropyReport> {
    check_model_reference(model, v_bar)?;
    check_reference(v, v_bar)?;
    Ok(report_unchecked(model, v, v_bar, kernel))
}

pub const MIN_SAMPLES: usize = 100;

/// Second-order derivative of samples `f` on a possibly non-uniform grid, at
/// interior points `1..len-1`.
pub fn central_differences(times: &[f64], f: &[f64]) -> Vec<f64> {
    (1..times.len() - 1)
        .map(|k| {
            let h1 = times[k] - times[k - 1];
            let h2 = times[k + 1] - times[k];
            -h2 / (h1 * (h1 + h2)) * f[k - 1]
                + (h2 - h1) / (h1 * h2) * f[k]
                + h1 / (h2 * (h1 + h2)) * f[k + 1]
        })
        .collect()
}

/// `max_k |dH/dt (finite difference) - (-D + gamma_term)|`, normalised by
/// `max(1, max_k |H|)`.
pub fn identity_residual(
    model: &Model,
    trajectory: &Trajectory,
    v_bar: &[f64],
    kernel: &EntropyKernel,
) -> Result<f64> {
    if trajectory.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: trajectory.len(),
        });
    }
    check_model_reference(model, v_bar)?;
    let reports: Vec<EntropyReport> = trajectory
        .states
        .iter()
        .map(|v| {
            check_reference(v, v_bar)?;
            Ok(report_unchecked(model, v, v_bar, kernel))
        })
        .collect::<Result<_>>()?;
    let h: Vec<f64> = reports.iter().map(|r| r.h_value).collect();
    let scale = h.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let fd = central_differences(&trajectory.times, &h);
    Ok(fd
        .iter()
        .zip(&reports[1..])
        .map(|(d, r)| (d - r.analytic_dt).abs())
        .fold(0.0, f64::max)
        / scale)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub lambda_coef: f64,
    pub h: Vec<f64>,
    pub e_h: f64,
    pub e_v: f64,
    pub beta: f64,
    /// `log(E(v) / beta^2)`; `+inf` when `beta = 0`.
    pub f_value: f64,
}

impl Decomposition {
    pub fn reconstruct(&self, v_bar: &[f64]) -> Vec<f64> {
        v_bar
            .iter()
            .zip(&self.h)
            .map(|(b, h)| self.lambda_coef * b + h)
            .collect()
    }
}

pub fn decompose(v: &[f64], v_bar: &[f64]) -> Result<Decomposition> {
    if v.len() != v_bar.len() {
        return Err(Error::DimensionMismatch("decompose".into()));
    }
    let nb = dot(v_bar, v_bar);
    if nb == 0.0 {
        return Err(Error::ZeroReference);
    }
    let beta = dot(v, v_bar);
    let lambda_coef = beta / nb;
    let h: Vec<f64> = v
        .iter()
        .zip(v_bar)
        .map(|(x, b)| x - lambda_coef * b)
        .collect();
    let e_v = dot(v, v);
    Ok(Decomposition {
        lambda_coef,
        e_h: dot(&h, &h),
        h,
        e_v,
        beta,
        f_value: if beta == 0.0 {
            f64::INFINITY
        } else {
            (e_v / (beta * beta)).ln()
        },
    })
}

/// `Q(v) = sum_ij mu_ij vbar_i vbar_j (v_j / vbar_j - v_i / vbar_i)^2`.
pub fn quadratic_form(model: &Model, v: &[f64], v_bar: &[f64]) -> f64 {
    let n = model.n();
    let mu = model.mu();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = mu[(i, j)];
            if m != 0.0 {
                let d = v[j] / v_bar[j] - v[i] / v_bar[i];
                q += m * v_bar[i] * v_bar[j] * d * d;
            }
        }
    }
    q
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovSeries {
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    /// `-Q(v) / E(v)`.
    pub df_dt: Vec<f64>,
    /// Largest increase `F(t_{k+1}) - F(t_k)` (nonpositive when monotone).
    pub max_increase: f64,
    /// `log(1 / max_i vbar_i)`.
    pub stated_lower_bound: f64,
    /// `-log(sum_i vbar_i^2)`, the Cauchy–Schwarz floor `beta^2 <= E(vbar) E(v)`.
    pub sharp_lower_bound: f64,
    pub min_f: f64,
}

/// `F` and its analytic derivative along a trajectory; needs a shared linear
/// competition functional and symmetric mutation.
pub fn lyapunov_descent(
    model: &Model,
    trajectory: &Trajectory,
    v_bar: &[f64],
) -> Result<LyapunovSeries> {
    if model.uniform_weights().is_none() {
        return Err(Error::WrongInteractionKind(format!(
            "Lyapunov functional needs a shared linear interaction, got {}",
            model.interaction().kind()
        )));
    }
    check_model_reference(model, v_bar)?;
    let mut f = Vec::with_capacity(trajectory.len());
    let mut df = Vec::with_capacity(trajectory.len());
    for v in &trajectory.states {
        let d = decompose(v, v_bar)?;
        f.push(d.f_value);
        df.push(if d.e_v > 0.0 {
            -quadratic_form(model, v, v_bar) / d.e_v
        } else {
            0.0
        });
    }
    let max_increase = f
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let vmax = v_bar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LyapunovSeries {
        times: trajectory.times.clone(),
        min_f: f.iter().copied().fold(f64::INFINITY, f64::min),
        f,
        df_dt: df,
        max_increase,
        stated_lower_bound: (1.0 / vmax).ln(),
        sharp_lower_bound: -dot(v_bar, v_bar).ln(),
    })
}

/// Exact `d/dt log(E(h) / beta^2)` at `v` from the vector field; `None` when
/// `h` vanishes.
pub fn orthogonal_log_rate(model: &Model, v: &[f64], v_bar: &[f64]) -> Result<Option<f64>> {
    let d = decompose(v, v_bar)?;
    if d.e_h == 0.0 || d.beta == 0.0 {
        return Ok(None);
    }
    let vdot = model.rhs(v);
    let beta_dot = dot(&vdot, v_bar);
    let lambda_dot = beta_dot / dot(v_bar, v_bar);
    let h_dot: Vec<f64> = vdot
        .iter()
        .zip(v_bar)
        .map(|(a, b)| a - lambda_dot * b)
        .collect();
    Ok(Some(
        2.0 * dot(&d.h, &h_dot) / d.e_h - 2.0 * beta_dot / d.beta,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub h: f64,
    pub d: f64,
    pub gamma_term: f64,
    pub analytic_dt: f64,
    pub f: f64,
    pub e_h: f64,
    pub lambda: f64,
    pub beta: f64,
}

pub fn diagnostics(
    model: &Model,
    trajectory: &Trajectory,
    v_bar: &[f64],
    kernel: &EntropyKernel,
) -> Result<Vec<DiagnosticRow>> {
    check_model_reference(model, v_bar)?;
    trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, v)| {
            check_reference(v, v_bar)?;
            let r = report_unchecked(model, v, v_bar, kernel);
            let d = decompose(v, v_bar)?;
            Ok(DiagnosticRow {
                t,
                h: r.h_value,
                d: r.d_value,
                gamma_term: r.gamma_term,
                analytic_dt: r.analytic_dt,
                f: d.f_value,
                e_h: d.e_h,
                lambda: d.lambda_coef,
                beta: d.beta,
            })
        })
        .collect()
}

/// CSV with header `t,H,D,gamma_term,analytic_dt,F,E_h,lambda,beta`.
pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::from("t,H,D,gamma_term,analytic_dt,F,E_h,lambda,beta\n");
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.h, r.d, r.gamma_term, r.analytic_dt, r.f, r.e_h, r.lambda, r.beta
        )
        .unwrap();
    }
    out
}
