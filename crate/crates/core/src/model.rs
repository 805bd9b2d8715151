//! Problem instance for the mutation–competition system
//!
//! ```text
//! dv_i/dt = v_i (r_i - Psi_i(v) / K) + sum_j mu_ij (v_j - v_i)
//! ```
//!
//! together with the closed family of interaction functionals `Psi` and the
//! checks of the standing hypotheses (positivity, symmetry, irreducibility,
//! monotonicity, coercivity and the two mutation-budget conditions).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};

/// Competition functionals `Psi_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InteractionJson", into = "InteractionJson")]
pub enum Interaction {
    /// `Psi_i(v) = sum_j a_j v_j` for every `i`.
    UniformLinear { a: Vec<f64> },
    /// `Psi_i(v) = sum_j alpha_ij r_j v_j` (crowding indices `alpha`).
    CrowdingLinear { alpha: Mat },
    /// `Psi_i(v) = sum_j a_j v_j + eps * amp_i * tanh(sum_j w_ij v_j)`.
    Perturbed {
        a: Vec<f64>,
        eps: f64,
        amp: Vec<f64>,
        w: Mat,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum InteractionKind {
    Uniform,
    Crowding,
    Perturbed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractionJson {
    kind: InteractionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<Vec<f64>>>,
}

fn required<T>(field: Option<T>, name: &str, kind: &str) -> Result<T> {
    field.ok_or_else(|| Error::InvalidInteraction(format!("`{kind}` interaction needs `{name}`")))
}

impl TryFrom<InteractionJson> for Interaction {
    type Error = Error;
    fn try_from(j: InteractionJson) -> Result<Interaction> {
        let stray = |names: &[(&str, bool)], kind: &str| -> Result<()> {
            match names.iter().find(|(_, present)| *present) {
                Some((name, _)) => Err(Error::InvalidInteraction(format!(
                    "`{name}` is not a parameter of a `{kind}` interaction"
                ))),
                None => Ok(()),
            }
        };
        match j.kind {
            InteractionKind::Uniform => {
                stray(
                    &[
                        ("alpha", j.alpha.is_some()),
                        ("eps", j.eps.is_some()),
                        ("amp", j.amp.is_some()),
                        ("w", j.w.is_some()),
                    ],
                    "uniform",
                )?;
                Ok(Interaction::UniformLinear {
                    a: required(j.a, "a", "uniform")?,
                })
            }
            InteractionKind::Crowding => {
                stray(
                    &[
                        ("a", j.a.is_some()),
                        ("eps", j.eps.is_some()),
                        ("amp", j.amp.is_some()),
                        ("w", j.w.is_some()),
                    ],
                    "crowding",
                )?;
                Ok(Interaction::CrowdingLinear {
                    alpha: Mat::from_rows(&required(j.alpha, "alpha", "crowding")?)?,
                })
            }
            InteractionKind::Perturbed => {
                stray(&[("alpha", j.alpha.is_some())], "perturbed")?;
                Ok(Interaction::Perturbed {
                    a: required(j.a, "a", "perturbed")?,
                    eps: required(j.eps, "eps", "perturbed")?,
                    amp: required(j.amp, "amp", "perturbed")?,
                    w: Mat::from_rows(&required(j.w, "w", "perturbed")?)?,
                })
            }
        }
    }
}

impl From<Interaction> for InteractionJson {
    fn from(i: Interaction) -> InteractionJson {
        let empty = InteractionJson {
            kind: InteractionKind::Uniform,
            a: None,
            alpha: None,
            eps: None,
            amp: None,
            w: None,
        };
        match i {
            Interaction::UniformLinear { a } => InteractionJson {
                a: Some(a),
                ..empty
            },
            Interaction::CrowdingLinear { alpha } => InteractionJson {
                kind: InteractionKind::Crowding,
                alpha: Some(alpha.to_rows()),
                ..empty
            },
            Interaction::Perturbed { a, eps, amp, w } => InteractionJson {
                kind: InteractionKind::Perturbed,
                a: Some(a),
                eps: Some(eps),
                amp: Some(amp),
                w: Some(w.to_rows()),
                ..empty
            },
        }
    }
}

impl Interaction {
    pub fn kind(&self) -> &'static str {
        match self {
            Interaction::UniformLinear { .. } => "uniform",
            Interaction::CrowdingLinear { .. } => "crowding",
            Interaction::Perturbed { .. } => "perturbed",
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Interaction::UniformLinear { a } => {
                if a.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "interaction.a has length {}, expected {n}",
                        a.len()
                    )));
                }
                if !finite(a) {
                    return Err(Error::NonFinite("interaction.a".into()));
                }
                if a.iter().any(|&x| x <= 0.0) {
                    return Err(Error::InvalidInteraction(
                        "uniform weights must be positive".into(),
                    ));
                }
            }
            Interaction::CrowdingLinear { alpha } => {
                if alpha.n() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "interaction.alpha is {0}x{0}, expected {n}x{n}",
                        alpha.n()
                    )));
                }
                if !alpha.is_finite() {
                    return Err(Error::NonFinite("interaction.alpha".into()));
                }
                if (0..n).any(|i| alpha.row(i).iter().any(|&x| x < 0.0)) {
                    return Err(Error::InvalidInteraction(
                        "crowding indices must be nonnegative".into(),
                    ));
                }
            }
            Interaction::Perturbed { a, eps, amp, w } => {
                Interaction::UniformLinear { a: a.clone() }.check(n)?;
                if amp.len() != n || w.n() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "perturbation amp/w must have dimension {n}"
                    )));
                }
                if !eps.is_finite() || !finite(amp) || !w.is_finite() {
                    return Err(Error::NonFinite("perturbation".into()));
                }
                if *eps < 0.0 {
                    return Err(Error::InvalidInteraction("eps must be >= 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Constants of the coercivity bound `c_i (sum v)^k_i <= Psi_i(v)` outside an
/// l1 ball, plus local Lipschitz bounds on the unit l1 ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoercivityParams {
    pub r_ball: f64,
    pub k_exp: Vec<f64>,
    pub c_low: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl CoercivityParams {
    pub fn kappa0(&self) -> f64 {
        self.kappa.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub h1_positivity: bool,
    pub h1_symmetry: bool,
    pub h1_irreducible: bool,
    pub h1_monotone: bool,
    pub h2_coercive: bool,
    pub h3_half: bool,
    pub h4_third: bool,
    pub details: Vec<String>,
}

impl HypothesisReport {
    pub fn h1(&self) -> bool {
        self.h1_positivity && self.h1_symmetry && self.h1_irreducible && self.h1_monotone
    }

    /// All of H1, H2 and H3.
    pub fn standing(&self) -> bool {
        self.h1() && self.h2_coercive && self.h3_half
    }
}

/// Relative tolerance used when comparing mutation rates for symmetry.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// A validated problem instance. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct Model {
    n: usize,
    r: Vec<f64>,
    big_k: f64,
    mu: Mat,
    interaction: Interaction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    n: usize,
    r: Vec<f64>,
    #[serde(rename = "K")]
    big_k: f64,
    mu: Vec<Vec<f64>>,
    interaction: Interaction,
}

impl TryFrom<ModelJson> for Model {
    type Error = Error;
    fn try_from(m: ModelJson) -> Result<Model> {
        let mu = Mat::from_rows(&m.mu)?;
        build_model(m.n, m.r, m.big_k, mu, m.interaction)
    }
}

impl From<Model> for ModelJson {
    fn from(m: Model) -> ModelJson {
        ModelJson {
            n: m.n,
            r: m.r,
            big_k: m.big_k,
            mu: m.mu.to_rows(),
            interaction: m.interaction,
        }
    }
}

/// Checks and canonicalises the inputs of a model; the diagonal of `mu` is zeroed.
pub fn build_model(
    n: usize,
    r: Vec<f64>,
    big_k: f64,
    mu: Mat,
    interaction: Interaction,
) -> Result<Model> {
    if n == 0 {
        return Err(Error::DimensionMismatch("n must be at least 1".into()));
    }
    if r.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "r has length {}, expected {n}",
            r.len()
        )));
    }
    if mu.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "mu is {0}x{0}, expected {n}x{n}",
            mu.n()
        )));
    }
    if !r.iter().all(|x| x.is_finite()) || !big_k.is_finite() || !mu.is_finite() {
        return Err(Error::NonFinite("r, K and mu must be finite".into()));
    }
    if let Some(i) = r.iter().position(|&x| x <= 0.0) {
        return Err(Error::NonPositiveRate(format!("r[{i}] = {}", r[i])));
    }
    if big_k <= 0.0 {
        return Err(Error::NonPositiveRate(format!("K = {big_k}")));
    }
    let mut mu = mu;
    for i in 0..n {
        mu[(i, i)] = 0.0;
        for j in 0..n {
            if mu[(i, j)] < 0.0 {
                return Err(Error::NegativeMutation {
                    i,
                    j,
                    value: mu[(i, j)],
                });
            }
        }
    }
    interaction.check(n)?;
    Ok(Model {
        n,
        r,
        big_k,
        mu,
        interaction,
    })
}

impl Model {
    /// Builds a model from a full mutation generator whose diagonal holds
    /// minus the row sum of the off-diagonal entries.
    pub fn from_generator(
        r: Vec<f64>,
        big_k: f64,
        generator: &Mat,
        interaction: Interaction,
    ) -> Result<Model> {
        let n = generator.n();
        for i in 0..n {
            let sum: f64 = generator.row(i).iter().sum();
            let scale = generator
                .row(i)
                .iter()
                .map(|x| x.abs())
                .sum::<f64>()
                .max(1.0);
            if sum.abs() > 1e-12 * scale {
                return Err(Error::RowSumNotZero { row: i, sum });
            }
        }
        build_model(n, r, big_k, generator.clone(), interaction)
    }

    pub fn from_json_str(s: &str) -> Result<Model> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("model serialises")
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn big_k(&self) -> f64 {
        self.big_k
    }
    pub fn mu(&self) -> &Mat {
        &self.mu
    }
    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    /// Same rates and mutation, different interaction.
    pub fn with_interaction(&self, interaction: Interaction) -> Result<Model> {
        build_model(
            self.n,
            self.r.clone(),
            self.big_k,
            self.mu.clone(),
            interaction,
        )
    }

    /// Row sums `mu_i = sum_j mu_ij`.
    pub fn mutation_row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.mu.row(i).iter().sum()).collect()
    }

    pub fn mu_is_symmetric(&self) -> bool {
        self.mu.max_asymmetry() <= SYMMETRY_RTOL * self.mu.max_abs().max(f64::MIN_POSITIVE)
    }

    /// The matrix `R + M`: `diag(r_i - mu_i) + (mu_ij)_{i != j}`.
    pub fn growth_matrix(&self) -> Mat {
        let sums = self.mutation_row_sums();
        let mut m = self.mu.clone();
        for i in 0..self.n {
            m[(i, i)] = self.r[i] - sums[i];
        }
        m
    }

    /// Weights of the shared linear functional when every `Psi_i` is the same
    /// linear map; `None` otherwise.
    pub fn uniform_weights(&self) -> Option<Vec<f64>> {
        match &self.interaction {
            Interaction::UniformLinear { a } => Some(a.clone()),
            Interaction::Perturbed { a, eps, .. } if *eps == 0.0 => Some(a.clone()),
            Interaction::Perturbed { .. } => None,
            Interaction::CrowdingLinear { alpha } => {
                let first = alpha.row(0);
                (1..self.n)
                    .all(|i| alpha.row(i) == first)
                    .then(|| first.iter().zip(&self.r).map(|(a, r)| a * r).collect())
            }
        }
    }

    /// True when `Psi_i(v) = sum_j r_j v_j` for every `i`.
    pub fn is_fitness_weighted(&self) -> bool {
        self.uniform_weights().is_some_and(|a| {
            a.iter()
                .zip(&self.r)
                .all(|(x, r)| (x - r).abs() <= 1e-12 * r.abs())
        })
    }

    /// Coefficients `Psi_i(v) = sum_j L_ij v_j + (bounded part)` of the linear part.
    pub fn linear_part(&self) -> Mat {
        match &self.interaction {
            Interaction::UniformLinear { a } | Interaction::Perturbed { a, .. } => {
                Mat::from_fn(self.n, |_, j| a[j])
            }
            Interaction::CrowdingLinear { alpha } => {
                Mat::from_fn(self.n, |i, j| alpha[(i, j)] * self.r[j])
            }
        }
    }

    /// Uniform bound `sigma = eps * max_i |amp_i|` on the bounded perturbation.
    pub fn perturbation_bound(&self) -> f64 {
        match &self.interaction {
            Interaction::Perturbed { eps, amp, .. } => {
                eps * amp.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
            }
            _ => 0.0,
        }
    }

    /// `(Psi_i(v))_i`.
    pub fn interaction_values(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.interaction_values_into(v, &mut out);
        out
    }

    fn interaction_values_into(&self, v: &[f64], out: &mut [f64]) {
        match &self.interaction {
            Interaction::UniformLinear { a } => {
                let s = dot(a, v);
                out.iter_mut().for_each(|o| *o = s);
            }
            Interaction::CrowdingLinear { alpha } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = alpha
                        .row(i)
                        .iter()
                        .zip(&self.r)
                        .zip(v)
                        .map(|((a, r), x)| a * r * x)
                        .sum();
                }
            }
            Interaction::Perturbed { a, eps, amp, w } => {
                let s = dot(a, v);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = s + eps * amp[i] * dot(w.row(i), v).tanh();
                }
            }
        }
    }

    /// Jacobian `(dPsi_i / dv_j)`.
    pub fn interaction_gradient(&self, v: &[f64]) -> Mat {
        match &self.interaction {
            Interaction::Perturbed { a, eps, amp, w } => {
                let mut g = Mat::from_fn(self.n, |_, j| a[j]);
                for i in 0..self.n {
                    let th = dot(w.row(i), v).tanh();
                    let f = eps * amp[i] * (1.0 - th * th);
                    for j in 0..self.n {
                        g[(i, j)] += f * w[(i, j)];
                    }
                }
                g
            }
            _ => self.linear_part(),
        }
    }

    /// Right-hand side of the evolution equation.
    pub fn rhs(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.rhs_into(v, &mut out);
        out
    }

    pub fn rhs_into(&self, v: &[f64], out: &mut [f64]) {
        self.interaction_values_into(v, out);
        let inv_k = 1.0 / self.big_k;
        for i in 0..self.n {
            let psi = out[i];
            let mut acc = v[i] * (self.r[i] - psi * inv_k);
            for j in 0..self.n {
                let m = self.mu[(i, j)];
                if m != 0.0 {
                    acc += m * (v[j] - v[i]);
                }
            }
            out[i] = acc;
        }
    }

    pub fn coercivity(&self) -> CoercivityParams {
        let n = self.n;
        let lin = self.linear_part();
        let row_min = |i: usize| lin.row(i).iter().fold(f64::INFINITY, |m, &x| m.min(x));
        let row_max = |i: usize| lin.row(i).iter().fold(0.0_f64, |m, &x| m.max(x));
        match &self.interaction {
            Interaction::Perturbed { eps, amp, w, .. } => {
                let c: Vec<f64> = (0..n).map(row_min).collect();
                let c_floor = c.iter().fold(f64::INFINITY, |m, &x| m.min(x));
                let sigma = self.perturbation_bound();
                // Outside the ball sum(v) >= 2 sigma / c the perturbation eats at most half.
                let r_ball = if c_floor > 0.0 {
                    (2.0 * sigma / c_floor).max(1.0)
                } else {
                    f64::INFINITY
                };
                let kappa = (0..n)
                    .map(|i| {
                        let wmax = w.row(i).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                        row_max(i) + eps * amp[i].abs() * wmax
                    })
                    .collect();
                CoercivityParams {
                    r_ball,
                    k_exp: vec![1.0; n],
                    c_low: c.iter().map(|x| 0.5 * x).collect(),
                    kappa,
                }
            }
            _ => CoercivityParams {
                r_ball: 1.0,
                k_exp: vec![1.0; n],
                c_low: (0..n).map(row_min).collect(),
                kappa: (0..n).map(row_max).collect(),
            },
        }
    }

    /// Sufficient condition for monotonicity of a perturbed family.
    fn perturbed_monotone(&self) -> Option<bool> {
        match &self.interaction {
            Interaction::Perturbed { a, eps, amp, w } => {
                let amin = a.iter().fold(f64::INFINITY, |m, &x| m.min(x));
                let worst = (0..self.n)
                    .map(|i| amp[i].abs() * w.row(i).iter().fold(0.0_f64, |m, x| m.max(x.abs())))
                    .fold(0.0_f64, f64::max);
                Some(amin > eps * worst)
            }
            _ => None,
        }
    }

    /// Evaluates the standing hypotheses. Never fails.
    pub fn validate(&self) -> HypothesisReport {
        let n = self.n;
        let mut details = Vec::new();

        let h1_positivity = self.r.iter().all(|&x| x > 0.0)
            && (0..n).all(|i| self.mu.row(i).iter().all(|&x| x >= 0.0));
        details.push(format!(
            "H1 positivity: r > 0 and mu >= 0: {}",
            pass(h1_positivity)
        ));

        let h1_symmetry = self.mu_is_symmetric();
        details.push(format!(
            "H1 symmetry: max |mu_ij - mu_ji| = {:e}: {}",
            self.mu.max_asymmetry(),
            pass(h1_symmetry)
        ));

        let h1_irreducible = self.mu.is_irreducible();
        details.push(format!(
            "H1 irreducibility: mutation graph strongly connected{}: {}",
            if n == 1 { " (vacuous, n = 1)" } else { "" },
            pass(h1_irreducible)
        ));

        let h1_monotone = match self.perturbed_monotone() {
            Some(ok) => {
                details.push(format!(
                    "H1 monotonicity: {}",
                    if ok {
                        "monotone (sufficient condition)"
                    } else {
                        "unverified"
                    }
                ));
                ok
            }
            None => {
                details.push("H1 monotonicity: nonnegative linear family: pass".into());
                true
            }
        };

        let coer = self.coercivity();
        let h2_coercive = coer.c_low.iter().all(|&c| c > 0.0) && coer.r_ball.is_finite();
        details.push(format!(
            "H2 coercivity: k = 1, min c = {:e}, R = {:e}: {}",
            coer.c_low.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
            coer.r_ball,
            pass(h2_coercive)
        ));

        let sums = self.mutation_row_sums();
        let h3_half = (0..n).all(|i| sums[i] <= 0.5 * self.r[i]);
        details.push(format!(
            "H3: sum_j mu_ij <= r_i / 2 for all i: {}",
            pass(h3_half)
        ));

        let h4_third = (0..n).all(|i| {
            let s: f64 = (0..n)
                .map(|j| 0.5 * (self.mu[(i, j)] + self.mu[(j, i)]))
                .sum();
            s <= self.r[i] / 3.0
        });
        details.push(format!(
            "H4: sum_j (mu_ij + mu_ji) / 2 <= r_i / 3 for all i: {}",
            pass(h4_third)
        ));

        HypothesisReport {
            h1_positivity,
            h1_symmetry,
            h1_irreducible,
            h1_monotone,
            h2_coercive,
            h3_half,
            h4_third,
            details,
        }
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// The four-variant point-mutation generator with per-site rate `p`.
pub fn point_mutation_generator(p: f64) -> Mat {
    let a = p * (1.0 - p);
    let b = p * p;
    let d = (1.0 - p) * (1.0 - p) - 1.0;
    Mat::from_rows(&[
        vec![d, a, a, b],
        vec![a, d, b, a],
        vec![a, b, d, a],
        vec![b, a, a, d],
    ])
    .expect("4x4")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two(r: [f64; 2], m12: f64, m21: f64, k: f64, a: Vec<f64>) -> Model {
        build_model(
            2,
            r.to_vec(),
            k,
            Mat::from_rows(&[vec![0.0, m12], vec![m21, 0.0]]).unwrap(),
            Interaction::UniformLinear { a },
        )
        .unwrap()
    }

    fn perturbed_model(eps: f64) -> Model {
        build_model(
            3,
            vec![1.0, 1.3, 0.8],
            20.0,
            Mat::from_rows(&[
                vec![0.0, 0.1, 0.05],
                vec![0.1, 0.0, 0.2],
                vec![0.05, 0.2, 0.0],
            ])
            .unwrap(),
            Interaction::Perturbed {
                a: vec![1.0, 1.3, 0.8],
                eps,
                amp: vec![0.7, -1.1, 0.4],
                w: Mat::from_rows(&[
                    vec![0.2, -0.1, 0.05],
                    vec![0.03, 0.1, -0.2],
                    vec![-0.15, 0.05, 0.1],
                ])
                .unwrap(),
            },
        )
        .unwrap()
    }

    #[test]
    fn single_genotype_logistic() {
        let m = build_model(
            1,
            vec![2.0],
            1.0,
            Mat::zeros(1),
            Interaction::UniformLinear { a: vec![1.0] },
        )
        .unwrap();
        let rep = m.validate();
        assert!(rep.h1_irreducible && rep.standing());
        assert_abs_diff_eq!(m.rhs(&[0.5])[0], 0.5 * (2.0 - 0.5), epsilon = 1e-15);
    }

    #[test]
    fn point_mutation_preset_rows_sum_to_zero() {
        let g = point_mutation_generator(0.01);
        for i in 0..4 {
            assert_abs_diff_eq!(g.row(i).iter().sum::<f64>(), 0.0, epsilon = 1e-15);
        }
        let m = Model::from_generator(
            vec![1.0; 4],
            100.0,
            &g,
            Interaction::UniformLinear { a: vec![1.0; 4] },
        )
        .unwrap();
        for i in 0..4 {
            assert_eq!(m.mu()[(i, i)], 0.0);
        }
        assert_abs_diff_eq!(m.mu()[(0, 1)], 0.0099, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mu()[(0, 3)], 1e-4, epsilon = 1e-15);
        assert!(m.validate().standing());
    }

    #[test]
    fn generator_with_bad_row_rejected() {
        let g = Mat::from_rows(&[vec![-0.1, 0.2], vec![0.1, -0.1]]).unwrap();
        let err = Model::from_generator(
            vec![1.0; 2],
            1.0,
            &g,
            Interaction::UniformLinear { a: vec![1.0; 2] },
        );
        assert!(matches!(err, Err(Error::RowSumNotZero { row: 0, .. })));
    }

    #[test]
    fn build_errors() {
        let neg = build_model(
            2,
            vec![1.0, 1.0],
            1.0,
            Mat::from_rows(&[vec![0.0, 0.1], vec![-0.1, 0.0]]).unwrap(),
            Interaction::UniformLinear { a: vec![1.0, 1.0] },
        );
        assert!(matches!(
            neg,
            Err(Error::NegativeMutation { i: 1, j: 0, .. })
        ));

        let bad_r = build_model(
            2,
            vec![1.0, 0.0],
            1.0,
            Mat::zeros(2),
            Interaction::UniformLinear { a: vec![1.0, 1.0] },
        );
        assert!(matches!(bad_r, Err(Error::NonPositiveRate(_))));

        let bad_k = build_model(
            1,
            vec![1.0],
            -2.0,
            Mat::zeros(1),
            Interaction::UniformLinear { a: vec![1.0] },
        );
        assert!(matches!(bad_k, Err(Error::NonPositiveRate(_))));

        let dims = build_model(
            2,
            vec![1.0],
            1.0,
            Mat::zeros(2),
            Interaction::UniformLinear { a: vec![1.0, 1.0] },
        );
        assert!(matches!(dims, Err(Error::DimensionMismatch(_))));

        let weights = build_model(
            2,
            vec![1.0, 1.0],
            1.0,
            Mat::zeros(2),
            Interaction::UniformLinear { a: vec![1.0, 0.0] },
        );
        assert!(matches!(weights, Err(Error::InvalidInteraction(_))));
    }

    #[test]
    fn diagonal_is_canonicalised() {
        let m = build_model(
            2,
            vec![1.0, 1.0],
            1.0,
            Mat::from_rows(&[vec![5.0, 0.1], vec![0.1, -3.0]]).unwrap(),
            Interaction::UniformLinear { a: vec![1.0, 1.0] },
        )
        .unwrap();
        assert_eq!(m.mu()[(0, 0)], 0.0);
        assert_eq!(m.mu()[(1, 1)], 0.0);
    }

    #[test]
    fn h3_threshold() {
        assert!(
            two([1.0, 1.0], 0.4, 0.4, 1.0, vec![1.0, 1.0])
                .validate()
                .h3_half
        );
        assert!(
            !two([1.0, 1.0], 0.6, 0.6, 1.0, vec![1.0, 1.0])
                .validate()
                .h3_half
        );
    }

    #[test]
    fn h4_reported_independently() {
        // Budget 0.4: H3 (<= 0.5) holds, H4 (<= 1/3) fails.
        let rep = two([1.0, 1.0], 0.4, 0.4, 1.0, vec![1.0, 1.0]).validate();
        assert!(rep.h3_half && !rep.h4_third);
        let rep = two([1.0, 1.0], 0.2, 0.2, 1.0, vec![1.0, 1.0]).validate();
        assert!(rep.h3_half && rep.h4_third);
    }

    #[test]
    fn disconnected_mutation_is_reducible() {
        let m = build_model(
            3,
            vec![1.0; 3],
            1.0,
            Mat::from_rows(&[
                vec![0.0, 0.1, 0.0],
                vec![0.2, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
            ])
            .unwrap(),
            Interaction::UniformLinear { a: vec![1.0; 3] },
        )
        .unwrap();
        let rep = m.validate();
        assert!(!rep.h1_irreducible);
        assert!(!rep.h1_symmetry);
    }

    #[test]
    fn perturbed_monotonicity_condition() {
        assert!(perturbed_model(0.1).validate().h1_monotone);
        // eps * max |amp| * max |w| = 10 * 1.1 * 0.2 = 2.2 > min a = 0.8
        let rep = perturbed_model(10.0).validate();
        assert!(!rep.h1_monotone);
        assert!(rep.details.iter().any(|d| d.contains("unverified")));
    }

    #[test]
    fn interaction_examples() {
        let m = two([1.0, 1.0], 0.1, 0.1, 1.0, vec![1.0, 1.0]);
        assert_eq!(m.interaction_values(&[3.0, 4.0]), vec![7.0, 7.0]);

        let c = build_model(
            2,
            vec![1.0, 2.0],
            1.0,
            Mat::zeros(2),
            Interaction::CrowdingLinear {
                alpha: Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap(),
            },
        )
        .unwrap();
        assert_eq!(c.interaction_values(&[1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(c.uniform_weights(), Some(vec![1.0, 2.0]));
        assert!(c.is_fitness_weighted());

        let g = two([1.0, 1.0], 0.1, 0.1, 1.0, vec![2.0, 3.0]).interaction_gradient(&[0.3, 0.9]);
        assert_eq!(g.to_rows(), vec![vec![2.0, 3.0], vec![2.0, 3.0]]);
    }

    #[test]
    fn eps_zero_reduces_to_base() {
        let p = perturbed_model(0.0);
        let base = p
            .with_interaction(Interaction::UniformLinear {
                a: vec![1.0, 1.3, 0.8],
            })
            .unwrap();
        let mut state = 12345u64;
        for _ in 0..100 {
            let v: Vec<f64> = (0..3)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 * 40.0
                })
                .collect();
            assert_eq!(p.interaction_values(&v), base.interaction_values(&v));
        }
    }

    #[test]
    fn gradient_at_tanh_origin() {
        let p = perturbed_model(0.3);
        let v = vec![0.0; 3];
        let g = p.interaction_gradient(&v);
        let Interaction::Perturbed { a, eps, amp, w } = p.interaction() else {
            unreachable!()
        };
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(g[(i, j)], a[j] + eps * amp[i] * w[(i, j)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rhs_vanishes_at_zero_and_symmetric_split() {
        let p = perturbed_model(0.5);
        assert!(p.rhs(&[0.0; 3]).iter().all(|&x| x == 0.0));
        let m = two([1.0, 1.0], 0.2, 0.2, 10.0, vec![1.0, 1.0]);
        assert_eq!(m.rhs(&[5.0, 5.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let p = perturbed_model(0.25);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"K\"") && s.contains("\"kind\":\"perturbed\""));
        assert_eq!(Model::from_json_str(&s).unwrap(), p);

        let bad = r#"{"n":2,"r":[1,1],"K":1,"mu":[[0,0.1],[0.1,0]],"interaction":{"kind":"uniform","a":"x"}}"#;
        match Model::from_json_str(bad) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "interaction.a"),
            other => panic!("{other:?}"),
        }
        let unknown =
            r#"{"n":1,"r":[1],"K":1,"mu":[[0]],"rr":1,"interaction":{"kind":"uniform","a":[1]}}"#;
        match Model::from_json_str(unknown) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("rr")),
            other => panic!("{other:?}"),
        }
    }

    fn random_model_strategy() -> impl Strategy<Value = Model> {
        (
            proptest::collection::vec(0.2f64..3.0, 3),
            proptest::collection::vec(0.0f64..0.2, 3),
            proptest::collection::vec(0.1f64..2.0, 9),
            0.0f64..0.2,
            proptest::collection::vec(-1.0f64..1.0, 3),
            proptest::collection::vec(-0.5f64..0.5, 9),
            0usize..3,
        )
            .prop_map(|(r, m, coef, eps, amp, w, kind)| {
                let mu = Mat::from_rows(&[
                    vec![0.0, m[0], m[1]],
                    vec![m[0], 0.0, m[2]],
                    vec![m[1], m[2], 0.0],
                ])
                .unwrap();
                let interaction = match kind {
                    0 => Interaction::UniformLinear {
                        a: coef[..3].to_vec(),
                    },
                    1 => Interaction::CrowdingLinear {
                        alpha: Mat::from_fn(3, |i, j| coef[3 * i + j]),
                    },
                    _ => Interaction::Perturbed {
                        a: coef[..3].to_vec(),
                        eps,
                        amp,
                        w: Mat::from_fn(3, |i, j| w[3 * i + j]),
                    },
                };
                build_model(3, r, 5.0, mu, interaction).unwrap()
            })
    }

    proptest! {
        #[test]
        fn symmetric_mutation_cancels_in_total(m in random_model_strategy(),
                                              v in proptest::collection::vec(0.0f64..10.0, 3)) {
            let total: f64 = m.rhs(&v).iter().sum();
            let psi = m.interaction_values(&v);
            let selection: f64 = (0..3).map(|i| v[i] * (m.r()[i] - psi[i] / m.big_k())).sum();
            prop_assert!((total - selection).abs() <= 1e-12 * (1.0 + selection.abs()));
        }

        #[test]
        fn interaction_monotone(m in random_model_strategy(),
                                v in proptest::collection::vec(0.0f64..10.0, 3),
                                d in proptest::collection::vec(0.0f64..5.0, 3)) {
            prop_assume!(m.validate().h1_monotone);
            let w: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + b).collect();
            let pv = m.interaction_values(&v);
            let pw = m.interaction_values(&w);
            for i in 0..3 {
                prop_assert!(pv[i] <= pw[i] + 1e-12);
            }
        }

        #[test]
        fn gradient_matches_central_differences(m in random_model_strategy(),
                                                v in proptest::collection::vec(0.0f64..10.0, 3)) {
            let g = m.interaction_gradient(&v);
            for j in 0..3 {
                let h = 1e-6 * (1.0 + v[j].abs());
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[j] += h;
                vm[j] -= h;
                let fp = m.interaction_values(&vp);
                let fm = m.interaction_values(&vm);
                for i in 0..3 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    prop_assert!((fd - g[(i, j)]).abs() <= 1e-6 * g[(i, j)].abs().max(1.0));
                }
            }
        }

        #[test]
        fn validate_is_pure(m in random_model_strategy()) {
            prop_assert_eq!(m.validate(), m.validate());
        }
    }
}
