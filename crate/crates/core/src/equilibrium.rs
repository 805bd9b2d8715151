//! Positive stationary states: Perron scaling for shared competition and a
//! continuation in the interaction family for the general case.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    norm_inf, perron_eigenpair, solve_linear, symmetric_spectrum, Mat, PerronResult, PerronShift,
    PERRON_MAX_ITER, PERRON_TOL,
};
use crate::model::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    PerronScaling,
    Homotopy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub s: f64,
    pub v: Vec<f64>,
    pub residual: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub v_bar: Vec<f64>,
    /// `K lambda_p`; `None` when the competition is not shared by all genotypes.
    pub alpha_bar: Option<f64>,
    pub lambda_p: f64,
    pub residual: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Checkpoint>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EquilibriumResult {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialises")
    }
}

/// `max_i |rhs_i(v)|`.
pub fn residual(model: &Model, v: &[f64]) -> f64 {
    norm_inf(&model.rhs(v))
}

fn perron_of(model: &Model) -> Result<PerronResult> {
    let mu_bar = model
        .mutation_row_sums()
        .into_iter()
        .fold(0.0_f64, f64::max);
    let p = perron_eigenpair(
        &model.growth_matrix(),
        PerronShift::Explicit(mu_bar),
        PERRON_TOL,
        PERRON_MAX_ITER,
    )?;
    if !(p.lambda_p > 0.0) {
        return Err(Error::NonPositivePerron(p.lambda_p));
    }
    Ok(p)
}

/// Perron scaling `v_bar = (K lambda_p / sum_j a_j (v_p)_j) v_p` for a
/// competition functional shared by every genotype.
pub fn equilibrium_uniform(model: &Model) -> Result<EquilibriumResult> {
    let Some(a) = model.uniform_weights() else {
        return Err(Error::WrongInteractionKind(format!(
            "Perron scaling needs a shared linear interaction, got {}",
            model.interaction().kind()
        )));
    };
    let p = perron_of(model)?;
    let alpha_bar = model.big_k() * p.lambda_p;
    let scale = alpha_bar / a.iter().zip(&p.v_p).map(|(x, y)| x * y).sum::<f64>();
    let v_bar: Vec<f64> = p.v_p.iter().map(|x| scale * x).collect();
    Ok(EquilibriumResult {
        residual: residual(model, &v_bar),
        v_bar,
        alpha_bar: Some(alpha_bar),
        lambda_p: p.lambda_p,
        method: Method::PerronScaling,
        path: None,
        warnings: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopyConfig {
    pub s_steps: usize,
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Backtracking factor for the Newton corrector.
    pub damping: f64,
    /// Bounds on the total population; `None` derives them from the model.
    pub box_lo: Option<f64>,
    pub box_hi: Option<f64>,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            s_steps: 21,
            inner_tol: 1e-12,
            max_inner: 10_000,
            damping: 0.5,
            box_lo: None,
            box_hi: None,
        }
    }
}

const NEWTON_POLISH: usize = 50;

/// A-priori bounds on the total population of any positive fixed point along
/// the continuation, and whether the conservative fallback was used.
///
/// Pairing the stationarity equation with `v` gives
/// `c0 |v|^2 <= (1/K) sum_i Psi_i(v) v_i^2 <= lam_max |v|^2`
/// with `c0`, `lam_max` the extreme eigenvalues of the symmetric part of `R+M`;
/// bounding `Psi_i` between `c N - sigma` and `kappa N + sigma` (N the total)
/// turns this into bounds on `N`. The returned box is widened by a factor 2.
pub fn default_box(model: &Model) -> (f64, f64, bool) {
    let k = model.big_k();
    let g = model.growth_matrix();
    let sym = Mat::from_fn(g.n(), |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
    let lin = model.linear_part();
    let sigma = model.perturbation_bound();
    let n = model.n();
    let c = (0..n)
        .flat_map(|i| lin.row(i).to_vec())
        .fold(f64::INFINITY, f64::min);
    let kappa = (0..n)
        .flat_map(|i| lin.row(i).to_vec())
        .fold(0.0_f64, f64::max);
    let fallback = (1e-6 * k, 1e3 * k, true);
    let Ok(spec) = symmetric_spectrum(&sym) else {
        return fallback;
    };
    let c0 = spec.min_eigenvalue();
    let lam_max = spec.max_eigenvalue();
    let lo = (k * c0 - sigma) / kappa;
    let hi = (k * lam_max + sigma) / c;
    if lo > 0.0 && hi.is_finite() && c > 0.0 && lo < hi {
        (0.5 * lo, 2.0 * hi, false)
    } else {
        fallback
    }
}

struct Deformation<'a> {
    model: &'a Model,
    s: f64,
}

impl Deformation<'_> {
    /// `Psi^s_i = s Psi_i + (1 - s) Psi_1`.
    fn psi(&self, v: &[f64]) -> Vec<f64> {
        let psi = self.model.interaction_values(v);
        let anchor = psi[0];
        psi.iter()
            .map(|p| self.s * p + (1.0 - self.s) * anchor)
            .collect()
    }

    fn grad(&self, v: &[f64]) -> Mat {
        let g = self.model.interaction_gradient(v);
        Mat::from_fn(g.n(), |i, j| {
            self.s * g[(i, j)] + (1.0 - self.s) * g[(0, j)]
        })
    }

    /// `G(v) = (R+M) v - Psi^s(v) v / K`, which is the right-hand side.
    fn residual_vec(&self, rm: &Mat, v: &[f64]) -> Vec<f64> {
        let psi = self.psi(v);
        let inv_k = 1.0 / self.model.big_k();
        rm.mul_vec(v)
            .iter()
            .zip(psi.iter().zip(v))
            .map(|(a, (p, x))| a - p * x * inv_k)
            .collect()
    }

    fn jacobian(&self, rm: &Mat, v: &[f64]) -> Mat {
        let psi = self.psi(v);
        let grad = self.grad(v);
        let inv_k = 1.0 / self.model.big_k();
        let mut j = rm.clone();
        for r in 0..v.len() {
            j[(r, r)] -= psi[r] * inv_k;
            for c in 0..v.len() {
                j[(r, c)] -= v[r] * grad[(r, c)] * inv_k;
            }
        }
        j
    }
}

/// Positive root of `Psi_1(c v_p) = K lambda_p` by bisection.
fn anchor_scale(model: &Model, v_p: &[f64], target: f64) -> Result<f64> {
    let f = |c: f64| {
        let v: Vec<f64> = v_p.iter().map(|x| c * x).collect();
        model.interaction_values(&v)[0] - target
    };
    let mut hi = 1.0;
    let mut n = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 2000 || !hi.is_finite() {
            return Err(Error::InnerNoConvergence(0.0));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

struct Corrector<'a> {
    rm: &'a Mat,
    tol: f64,
    max_iter: usize,
    damping: f64,
    box_lo: f64,
    box_hi: f64,
}

impl Corrector<'_> {
    fn scale(&self, v: &[f64], model: &Model) -> f64 {
        let r_inf = model.r().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        (r_inf * norm_inf(v)).max(1.0)
    }

    /// Damped Newton with backtracking; iterates stay positive and inside the box.
    /// Returns the converged state and the iteration count.
    fn solve(&self, h: &Deformation, start: &[f64], polish: bool) -> Result<(Vec<f64>, usize)> {
        let mut v = start.to_vec();
        let mut g = h.residual_vec(self.rm, &v);
        let mut gn = norm_inf(&g);
        let mut converged_at = None;
        for it in 0..self.max_iter {
            let sc = self.scale(&v, h.model);
            if gn <= self.tol * sc && converged_at.is_none() {
                converged_at = Some(it);
                if !polish {
                    return Ok((v, it));
                }
            }
            if let Some(c) = converged_at {
                if it >= c + NEWTON_POLISH {
                    return Ok((v, it));
                }
            }
            let jac = h.jacobian(self.rm, &v);
            let neg: Vec<f64> = g.iter().map(|x| -x).collect();
            let delta = match solve_linear(&jac, &neg) {
                Ok(d) => d,
                Err(_) if converged_at.is_some() => return Ok((v, it)),
                Err(e) => return Err(e),
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = v.iter().zip(&delta).map(|(x, d)| x + t * d).collect();
                let mass: f64 = trial.iter().sum();
                if trial.iter().all(|&x| x > 0.0) && mass >= self.box_lo && mass <= self.box_hi {
                    let gt = h.residual_vec(self.rm, &trial);
                    let gtn = norm_inf(&gt);
                    if gtn < (1.0 - 1e-4 * t) * gn {
                        v = trial;
                        g = gt;
                        gn = gtn;
                        accepted = true;
                        break;
                    }
                }
                t *= self.damping;
            }
            if !accepted {
                // No decrease left: either at the rounding floor or stuck.
                if converged_at.is_some() || gn <= 1e2 * self.tol * self.scale(&v, h.model) {
                    return Ok((v, it));
                }
                return Err(Error::InnerNoConvergence(h.s));
            }
            let step = norm_inf(&delta) * t;
            if converged_at.is_some() && step <= 4.0 * f64::EPSILON * norm_inf(&v) {
                return Ok((v, it + 1));
            }
        }
        if converged_at.is_some() {
            Ok((v, self.max_iter))
        } else {
            Err(Error::InnerNoConvergence(h.s))
        }
    }
}

/// Continuation from the shared functional `Psi_1` (s = 0) to the full
/// family (s = 1), tracking the fixed point of
/// `(R+M) v = Psi^s(v) v / K` with a damped Newton corrector.
pub fn equilibrium_homotopy(model: &Model, config: &HomotopyConfig) -> Result<EquilibriumResult> {
    let rep = model.validate();
    let symmetric = model.mu_is_symmetric();
    if !(rep.h3_half || (!symmetric && rep.h4_third)) {
        return Err(Error::Hypothesis3Violated(
            "mutation budget exceeds half the growth rate".into(),
        ));
    }
    if config.s_steps < 2 {
        return Err(Error::InvalidArgument("s_steps must be at least 2".into()));
    }
    if !(config.damping > 0.0 && config.damping < 1.0) {
        return Err(Error::InvalidArgument(
            "backtracking damping must lie in (0, 1)".into(),
        ));
    }

    let mut warnings = Vec::new();
    let (dlo, dhi, fallback) = default_box(model);
    let box_lo = config.box_lo.unwrap_or(dlo);
    let box_hi = config.box_hi.unwrap_or(dhi);
    if fallback && (config.box_lo.is_none() || config.box_hi.is_none()) {
        warnings.push(format!(
            "a-priori box not computable from model constants; using [{box_lo:e}, {box_hi:e}]"
        ));
    }
    if !(box_lo > 0.0 && box_lo < box_hi) {
        return Err(Error::InvalidArgument(
            "box_lo must satisfy 0 < box_lo < box_hi".into(),
        ));
    }

    let p = perron_of(model)?;
    let alpha_bar = model.big_k() * p.lambda_p;
    let c = anchor_scale(model, &p.v_p, alpha_bar)?;
    let mut v: Vec<f64> = p.v_p.iter().map(|x| c * x).collect();

    let rm = model.growth_matrix();
    let corrector = Corrector {
        rm: &rm,
        tol: config.inner_tol,
        max_iter: config.max_inner,
        damping: config.damping,
        box_lo,
        box_hi,
    };

    let mut path = Vec::with_capacity(config.s_steps);
    let mut prev: Option<Vec<f64>> = None;
    for k in 0..config.s_steps {
        let s = k as f64 / (config.s_steps - 1) as f64;
        let h = Deformation { model, s };
        let mass: f64 = v.iter().sum();
        if mass < box_lo || mass > box_hi {
            return Err(Error::LeftAprioriBox { s, mass });
        }
        // Secant predictor when it stays admissible.
        let start = match &prev {
            Some(p) => {
                let pred: Vec<f64> = v.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect();
                let pm: f64 = pred.iter().sum();
                if pred.iter().all(|&x| x > 0.0) && pm >= box_lo && pm <= box_hi {
                    pred
                } else {
                    v.clone()
                }
            }
            None => v.clone(),
        };
        let last = k + 1 == config.s_steps;
        let (next, iters) = corrector.solve(&h, &start, last)?;
        let mass: f64 = next.iter().sum();
        if mass < box_lo || mass > box_hi {
            return Err(Error::LeftAprioriBox { s, mass });
        }
        path.push(Checkpoint {
            s,
            residual: norm_inf(&h.residual_vec(&rm, &next)),
            v: next.clone(),
            newton_iterations: iters,
        });
        prev = Some(std::mem::replace(&mut v, next));
    }

    let alpha_bar = model
        .uniform_weights()
        .map(|a| a.iter().zip(&v).map(|(x, y)| x * y).sum());
    Ok(EquilibriumResult {
        residual: residual(model, &v),
        v_bar: v,
        alpha_bar,
        lambda_p: p.lambda_p,
        method: Method::Homotopy,
        path: Some(path),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, point_mutation_generator, Interaction};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two(r: [f64; 2], m: f64, k: f64) -> Model {
        build_model(
            2,
            r.to_vec(),
            k,
            Mat::from_rows(&[vec![0.0, m], vec![m, 0.0]]).unwrap(),
            Interaction::UniformLinear { a: r.to_vec() },
        )
        .unwrap()
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let eq = equilibrium_uniform(&two([1.0, 1.0], 0.1, 10.0)).unwrap();
        assert_abs_diff_eq!(eq.v_bar[0], 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(eq.v_bar[1], 5.0, epsilon = 1e-10);
        assert_eq!(eq.method, Method::PerronScaling);
        assert_abs_diff_eq!(eq.alpha_bar.unwrap(), 10.0, epsilon = 1e-10);
    }

    #[test]
    fn asymmetric_pair_against_quadratic_oracle() {
        let m = two([1.0, 2.0], 0.1, 1.0);
        let eq = equilibrium_uniform(&m).unwrap();
        let lam = (2.8 + 1.04f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(eq.lambda_p, lam, epsilon = 1e-12);
        // Eigenvector (1, (lam - 0.9) / 0.1) scaled to total mass K = 1.
        let ratio = (lam - 0.9) / 0.1;
        assert_abs_diff_eq!(eq.v_bar[0], 1.0 / (1.0 + ratio), epsilon = 1e-12);
        assert_abs_diff_eq!(eq.v_bar[1], ratio / (1.0 + ratio), epsilon = 1e-12);
        assert_abs_diff_eq!(eq.v_bar[0], 0.0901, epsilon = 1e-4);
        assert!(eq.residual <= 1e-10);
        assert!(residual(&m, &eq.v_bar) <= 1e-10);
        assert_abs_diff_eq!(eq.v_bar.iter().sum::<f64>(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn point_mutation_preset_is_uniform() {
        let m = Model::from_generator(
            vec![1.0; 4],
            100.0,
            &point_mutation_generator(0.01),
            Interaction::UniformLinear { a: vec![1.0; 4] },
        )
        .unwrap();
        let eq = equilibrium_uniform(&m).unwrap();
        for x in &eq.v_bar {
            assert_abs_diff_eq!(*x, 25.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn residual_examples() {
        let m = two([1.0, 1.0], 0.1, 10.0);
        assert_eq!(residual(&m, &[0.0, 0.0]), 0.0);
        assert!(residual(&m, &[5.0, 5.0]) <= 1e-14);
    }

    #[test]
    fn perron_scaling_refuses_heterogeneous_crowding() {
        let m = two([1.0, 2.0], 0.1, 1.0)
            .with_interaction(Interaction::CrowdingLinear {
                alpha: Mat::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]).unwrap(),
            })
            .unwrap();
        assert!(matches!(
            equilibrium_uniform(&m),
            Err(Error::WrongInteractionKind(_))
        ));
    }

    #[test]
    fn homotopy_reproduces_perron_for_unit_crowding() {
        let base = two([1.0, 2.0], 0.1, 1.0);
        let crowd = base
            .with_interaction(Interaction::CrowdingLinear {
                alpha: Mat::from_fn(2, |_, _| 1.0),
            })
            .unwrap();
        let h = equilibrium_homotopy(&crowd, &HomotopyConfig::default()).unwrap();
        let p = equilibrium_uniform(&base).unwrap();
        for (a, b) in h.v_bar.iter().zip(&p.v_bar) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert!(h.residual <= 1e-12);
        assert_eq!(h.method, Method::Homotopy);
        assert_eq!(h.path.as_ref().unwrap().len(), 21);
    }

    #[test]
    fn homotopy_heterogeneous_crowding() {
        let m = build_model(
            3,
            vec![1.0, 1.4, 0.8],
            50.0,
            Mat::from_rows(&[
                vec![0.0, 0.05, 0.1],
                vec![0.05, 0.0, 0.02],
                vec![0.1, 0.02, 0.0],
            ])
            .unwrap(),
            Interaction::CrowdingLinear {
                alpha: Mat::from_rows(&[
                    vec![1.0, 0.6, 0.3],
                    vec![0.4, 1.0, 0.9],
                    vec![0.7, 0.2, 1.0],
                ])
                .unwrap(),
            },
        )
        .unwrap();
        let h = equilibrium_homotopy(&m, &HomotopyConfig::default()).unwrap();
        assert!(h.v_bar.iter().all(|&x| x > 0.0));
        assert!(h.residual <= 1e-12 * 50.0);
        assert!(h.alpha_bar.is_none());
        let (lo, hi, fallback) = default_box(&m);
        assert!(!fallback);
        for c in h.path.unwrap() {
            let mass: f64 = c.v.iter().sum();
            assert!(mass >= lo && mass <= hi);
        }
    }

    #[test]
    fn perturbed_eps_zero_matches_base() {
        let base = two([1.0, 2.0], 0.1, 1.0);
        let pert = base
            .with_interaction(Interaction::Perturbed {
                a: vec![1.0, 2.0],
                eps: 0.0,
                amp: vec![1.0, -1.0],
                w: Mat::from_fn(2, |i, j| if i == j { 1.0 } else { 0.5 }),
            })
            .unwrap();
        let h = equilibrium_homotopy(&pert, &HomotopyConfig::default()).unwrap();
        let p = equilibrium_uniform(&base).unwrap();
        for (a, b) in h.v_bar.iter().zip(&p.v_bar) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn perturbed_small_eps_stays_close() {
        let base = two([1.0, 1.0], 0.1, 10.0);
        let v0 = equilibrium_uniform(&base).unwrap().v_bar;
        let eps = 1e-3;
        let pert = base
            .with_interaction(Interaction::Perturbed {
                a: vec![1.0, 1.0],
                eps,
                amp: vec![1.0, -0.5],
                w: Mat::from_rows(&[vec![0.1, 0.0], vec![0.0, 0.1]]).unwrap(),
            })
            .unwrap();
        let h = equilibrium_homotopy(&pert, &HomotopyConfig::default()).unwrap();
        assert!(h.residual <= 1e-12 * 10.0);
        let dist: f64 = h.v_bar.iter().zip(&v0).map(|(a, b)| (a - b).abs()).sum();
        assert!(dist > 0.0 && dist <= 10.0 * eps.sqrt());
    }

    #[test]
    fn homotopy_requires_mutation_budget() {
        let m = two([1.0, 1.0], 0.6, 1.0);
        assert!(matches!(
            equilibrium_homotopy(&m, &HomotopyConfig::default()),
            Err(Error::Hypothesis3Violated(_))
        ));
    }

    #[test]
    fn homotopy_accepts_nonsymmetric_mutation_within_budget() {
        let m = build_model(
            2,
            vec![1.0, 1.5],
            5.0,
            Mat::from_rows(&[vec![0.0, 0.1], vec![0.2, 0.0]]).unwrap(),
            Interaction::UniformLinear { a: vec![1.0, 1.0] },
        )
        .unwrap();
        let h = equilibrium_homotopy(&m, &HomotopyConfig::default()).unwrap();
        let p = equilibrium_uniform(&m).unwrap();
        for (a, b) in h.v_bar.iter().zip(&p.v_bar) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn tiny_box_is_left() {
        let m = two([1.0, 2.0], 0.1, 1.0)
            .with_interaction(Interaction::CrowdingLinear {
                alpha: Mat::from_rows(&[vec![1.0, 0.1], vec![2.0, 1.0]]).unwrap(),
            })
            .unwrap();
        let cfg = HomotopyConfig {
            box_lo: Some(0.5),
            box_hi: Some(1.0000001),
            ..HomotopyConfig::default()
        };
        assert!(matches!(
            equilibrium_homotopy(&m, &cfg),
            Err(Error::LeftAprioriBox { .. } | Error::InnerNoConvergence(_))
        ));
    }

    #[test]
    fn json_shape() {
        let eq = equilibrium_uniform(&two([1.0, 1.0], 0.1, 10.0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&eq.to_json_pretty()).unwrap();
        for key in ["v_bar", "alpha_bar", "lambda_p", "residual", "method"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "PerronScaling");
        assert!(v.get("path").is_none());
    }

    fn sym3() -> impl Strategy<Value = Model> {
        (
            proptest::collection::vec(0.5f64..2.0, 3),
            proptest::collection::vec(0.01f64..0.12, 3),
            1.0f64..100.0,
        )
            .prop_map(|(r, m, k)| {
                build_model(
                    3,
                    r.clone(),
                    k,
                    Mat::from_rows(&[
                        vec![0.0, m[0], m[1]],
                        vec![m[0], 0.0, m[2]],
                        vec![m[1], m[2], 0.0],
                    ])
                    .unwrap(),
                    Interaction::UniformLinear { a: r },
                )
                .unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mass_law_and_positivity(m in sym3()) {
            let eq = equilibrium_uniform(&m).unwrap();
            prop_assert!(eq.lambda_p > 0.0);
            prop_assert!(eq.v_bar.iter().all(|&x| x > 0.0));
            let total: f64 = eq.v_bar.iter().sum();
            prop_assert!((total - m.big_k()).abs() <= 1e-8 * m.big_k());
            prop_assert!(eq.residual <= 1e-10 * 2.0 * norm_inf(&eq.v_bar));
        }

        #[test]
        fn solvers_agree_on_unit_crowding(m in sym3()) {
            let crowd = m.with_interaction(Interaction::CrowdingLinear { alpha: Mat::from_fn(3, |_, _| 1.0) }).unwrap();
            let h = equilibrium_homotopy(&crowd, &HomotopyConfig::default()).unwrap();
            let p = equilibrium_uniform(&m).unwrap();
            for (a, b) in h.v_bar.iter().zip(&p.v_bar) {
                prop_assert!((a - b).abs() <= 1e-7 * m.big_k().max(1.0));
            }
        }
    }
}
