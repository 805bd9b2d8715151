//! Spectral gap of the mutation operator around a stationary state, decay
//! rate fits, multi-start stability experiments and the perturbation sweep.

use rand_pcg::rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::Serialize;

use crate::dynamics::{integrate, Trajectory};
use crate::entropy::decompose;
use crate::equilibrium::{
    equilibrium_homotopy, equilibrium_uniform, EquilibriumResult, HomotopyConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, symmetric_spectrum, Mat};
use crate::model::{Interaction, Model};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralGapReport {
    /// Diagonal of `D`, `D_ii = (1 / vbar_i) sum_j mu_ij vbar_j`.
    pub d_diag: Vec<f64>,
    pub m_tilde: Mat,
    /// Eigenvalues of `D - M~`, ascending.
    pub eigenvalues_of_d_minus_m: Vec<f64>,
    pub c1: f64,
    /// Unit eigenvector of the zero eigenvalue, oriented positively.
    pub kernel_vector: Vec<f64>,
    /// Unit eigenvector of `c1`.
    pub gap_vector: Vec<f64>,
}

pub const KERNEL_TOL: f64 = 1e-8;

/// Builds `D - M~` and returns its spectrum; `c1` is the second-smallest
/// eigenvalue and the smallest one must be zero with eigenvector `vbar`.
pub fn spectral_gap(model: &Model, v_bar: &[f64]) -> Result<SpectralGapReport> {
    if !model.mu_is_symmetric() {
        return Err(Error::AsymmetricMutation);
    }
    let n = model.n();
    if v_bar.len() != n {
        return Err(Error::DimensionMismatch("reference state".into()));
    }
    if v_bar.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveReference);
    }
    let mu = model.mu();
    let m_tilde = Mat::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * (mu[(i, j)] + mu[(j, i)])
        }
    });
    let d_diag: Vec<f64> = (0..n)
        .map(|i| dot(m_tilde.row(i), v_bar) / v_bar[i])
        .collect();
    let op = Mat::from_fn(n, |i, j| if i == j { d_diag[i] } else { -m_tilde[(i, j)] });
    let spec = symmetric_spectrum(&op)?;
    let mut eigenvalues = spec.eigenvalues.clone();
    eigenvalues.reverse();

    let mut kernel_vector = spec.eigenvector(n - 1);
    if kernel_vector.iter().sum::<f64>() < 0.0 {
        kernel_vector.iter_mut().for_each(|x| *x = -*x);
    }
    let nb = norm2(v_bar);
    let deviation = kernel_vector
        .iter()
        .zip(v_bar)
        .map(|(k, b)| (k - b / nb).abs())
        .fold(0.0, f64::max);
    let op_scale = op.norm_inf().max(f64::MIN_POSITIVE);
    if deviation > KERNEL_TOL || eigenvalues[0].abs() > 1e-10 * op_scale.max(1.0) {
        return Err(Error::KernelMismatch(deviation));
    }
    let (c1, gap_vector) = if n >= 2 {
        (eigenvalues[1], spec.eigenvector(n - 2))
    } else {
        (0.0, vec![])
    };
    Ok(SpectralGapReport {
        d_diag,
        m_tilde,
        eigenvalues_of_d_minus_m: eigenvalues,
        c1,
        kernel_vector,
        gap_vector,
    })
}

/// `Q(h) / E(h)` with `Q(h) = sum_ij mu_ij vbar_i vbar_j (h_j/vbar_j - h_i/vbar_i)^2`.
///
/// On `vbar`-orthogonal `h` this is `2 <h, (D - M~) h> / |h|^2`, so it never
/// drops below `2 c1` and in particular never below `c1`.
pub fn rayleigh_quotient(model: &Model, v_bar: &[f64], h: &[f64]) -> f64 {
    crate::entropy::quadratic_form(model, h, v_bar) / dot(h, h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    /// Slope of `log E(h)` on the tail window.
    pub fitted_rate_eh: f64,
    /// Slope of `log |v - vbar|_inf` on the tail window.
    pub fitted_rate_sup: f64,
    pub predicted_c1: Option<f64>,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

pub const MIN_TAIL_POINTS: usize = 20;
/// Floor on `E(h)`: absolute, and relative to `E(vbar)`.
pub const TAIL_FLOOR_ABS: f64 = 1e-28;
pub const TAIL_FLOOR_REL: f64 = 1e-24;

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, r2)
}

/// Exponential decay fits over the last `tail_fraction` of the time span.
pub fn convergence_rate(
    model: &Model,
    trajectory: &Trajectory,
    v_bar: &[f64],
    tail_fraction: f64,
) -> Result<RateReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(
            "tail_fraction must lie in (0, 1]".into(),
        ));
    }
    let t0 = trajectory.times[0];
    let t1 = *trajectory.times.last().expect("nonempty");
    let start = t1 - tail_fraction * (t1 - t0);
    let floor = TAIL_FLOOR_ABS.max(TAIL_FLOOR_REL * dot(v_bar, v_bar));
    let mut ts = Vec::new();
    let mut le = Vec::new();
    let mut ls = Vec::new();
    for (t, v) in trajectory.times.iter().zip(&trajectory.states) {
        if *t < start {
            continue;
        }
        let d = decompose(v, v_bar)?;
        let sup = v
            .iter()
            .zip(v_bar)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if d.e_h > floor && sup > 0.0 {
            ts.push(*t);
            le.push(d.e_h.ln());
            ls.push(sup.ln());
        }
    }
    if ts.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail(format!(
            "{} usable points in [{start}, {t1}], need {MIN_TAIL_POINTS}",
            ts.len()
        )));
    }
    let (rate_eh, r2) = linear_fit(&ts, &le);
    let (rate_sup, _) = linear_fit(&ts, &ls);
    let predicted_c1 = if model.mu_is_symmetric() {
        spectral_gap(model, v_bar).ok().map(|g| g.c1)
    } else {
        None
    };
    Ok(RateReport {
        fitted_rate_eh: rate_eh,
        fitted_rate_sup: rate_sup,
        predicted_c1,
        window: (start, t1),
        r_squared: r2,
        points: ts.len(),
    })
}

/// Seeded sampler of nonnegative, nonzero initial states uniform on `[lo, hi]^n`.
pub struct InitialSampler {
    rng: Pcg64,
    lo: f64,
    hi: f64,
}

impl InitialSampler {
    pub fn new(seed: u64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sampler range [{lo}, {hi}] must satisfy 0 <= lo < hi"
            )));
        }
        Ok(InitialSampler {
            rng: Pcg64::seed_from_u64(seed),
            lo,
            hi,
        })
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn sample(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n)
                .map(|_| self.lo + (self.hi - self.lo) * self.uniform())
                .collect();
            if v.iter().any(|&x| x > 0.0) {
                return v;
            }
        }
    }
}

/// Integrator tolerances used by stability experiments.
pub const STABILITY_RTOL: f64 = 1e-10;
pub const STABILITY_ATOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub converged: bool,
    pub max_pairwise_gap: f64,
    pub max_gap_to_equilibrium: f64,
    pub attractor: Vec<f64>,
    pub initial_states: Vec<Vec<f64>>,
    pub endpoints: Vec<Vec<f64>>,
    pub t_end: f64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Equilibrium by Perron scaling when the competition is shared, by
/// continuation otherwise.
pub fn solve_equilibrium(model: &Model) -> Result<EquilibriumResult> {
    if model.uniform_weights().is_some() {
        equilibrium_uniform(model)
    } else {
        equilibrium_homotopy(model, &HomotopyConfig::default())
    }
}

/// Whether the global attraction results cover the model; `Err` carries the reason.
pub fn theorem_scope(model: &Model) -> std::result::Result<(), String> {
    let rep = model.validate();
    if !rep.standing() {
        return Err("standing hypotheses H1-H3 do not all hold".into());
    }
    match model.interaction() {
        Interaction::UniformLinear { .. } => Ok(()),
        Interaction::CrowdingLinear { .. } if model.uniform_weights().is_some() => Ok(()),
        Interaction::CrowdingLinear { .. } => {
            Err("heterogeneous crowding is not covered by a global attraction result".into())
        }
        Interaction::Perturbed { .. } => Ok(()),
    }
}

pub fn stability_with_initials(
    model: &Model,
    initials: Vec<Vec<f64>>,
    t_end: f64,
    tol: f64,
    force: bool,
) -> Result<StabilityReport> {
    let mut warnings = Vec::new();
    if let Err(why) = theorem_scope(model) {
        if !force {
            return Err(Error::OutOfTheoremScope(why));
        }
        warnings.push(format!("OUT OF THEOREM SCOPE (forced): {why}"));
    }
    let eq = solve_equilibrium(model)?;
    let mut endpoints = Vec::with_capacity(initials.len());
    for v0 in &initials {
        if v0.iter().all(|&x| x == 0.0) {
            warnings.push("zero initial state excluded: it is the trivial equilibrium".into());
            continue;
        }
        let tr = integrate(model, v0, t_end, STABILITY_RTOL, STABILITY_ATOL, t_end)?;
        endpoints.push(tr.final_state().to_vec());
    }
    let gap = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let mut max_pairwise = 0.0_f64;
    for i in 0..endpoints.len() {
        for j in i + 1..endpoints.len() {
            max_pairwise = max_pairwise.max(gap(&endpoints[i], &endpoints[j]));
        }
    }
    let max_eq = endpoints
        .iter()
        .map(|e| gap(e, &eq.v_bar))
        .fold(0.0, f64::max);
    Ok(StabilityReport {
        converged: max_pairwise <= tol && max_eq <= tol,
        max_pairwise_gap: max_pairwise,
        max_gap_to_equilibrium: max_eq,
        attractor: eq.v_bar,
        initial_states: initials,
        endpoints,
        t_end,
        tol,
        warnings,
    })
}

/// Integrates from `n_samples` seeded random starts uniform on `[0, 2K]^n`
/// and compares the endpoints with each other and with the solver equilibrium.
pub fn global_stability_experiment(
    model: &Model,
    n_samples: usize,
    seed: u64,
    t_end: f64,
    tol: f64,
    force: bool,
) -> Result<StabilityReport> {
    let mut sampler = InitialSampler::new(seed, 0.0, 2.0 * model.big_k())?;
    let initials = (0..n_samples).map(|_| sampler.sample(model.n())).collect();
    stability_with_initials(model, initials, t_end, tol, force)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationRow {
    pub eps: f64,
    pub v_bar: Option<Vec<f64>>,
    pub l1_distance: Option<f64>,
    /// `l1_distance / sqrt(eps)`; absent for the base row.
    pub ratio: Option<f64>,
    /// `eps * max_i |amp_i|`.
    pub sigma: f64,
    pub positive: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationTable {
    pub rows: Vec<PerturbationRow>,
    /// Set when distances fail to grow with eps.
    pub monotone_distances: bool,
}

impl PerturbationTable {
    /// Largest over smallest ratio among successful rows with `eps > 0`.
    pub fn ratio_spread(&self) -> Option<f64> {
        let r: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
        if r.is_empty() {
            return None;
        }
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,sigma,l1_distance,ratio,positive,error\n");
        let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{},{},{}\n",
                r.eps,
                r.sigma,
                f(r.l1_distance),
                f(r.ratio),
                r.positive.map_or(String::new(), |b| b.to_string()),
                r.error.clone().unwrap_or_default().replace(',', ";")
            ));
        }
        out
    }
}

/// Builds `Psi_i = sum_j a_j v_j + eps amp_i tanh(<w_i, v>)` on a uniform base.
pub fn perturbed_model(base: &Model, amp: &[f64], w: &Mat, eps: f64) -> Result<Model> {
    let Interaction::UniformLinear { a } = base.interaction() else {
        return Err(Error::WrongInteractionKind(format!(
            "perturbation needs a uniform base, got {}",
            base.interaction().kind()
        )));
    };
    base.with_interaction(Interaction::Perturbed {
        a: a.clone(),
        eps,
        amp: amp.to_vec(),
        w: w.clone(),
    })
}

/// Equilibria of the perturbed family along `eps_grid` and their l1 distance
/// to the unperturbed equilibrium. Failures are recorded per row.
pub fn perturbation_sweep(
    base: &Model,
    amp: &[f64],
    w: &Mat,
    eps_grid: &[f64],
    config: &HomotopyConfig,
) -> Result<PerturbationTable> {
    if eps_grid.iter().any(|&e| !(e > 0.0)) || eps_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument(
            "eps grid must be positive and ascending".into(),
        ));
    }
    perturbed_model(base, amp, w, 0.0)?;
    let v0 = equilibrium_uniform(base)?.v_bar;
    let amp_max = amp.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut rows = vec![PerturbationRow {
        eps: 0.0,
        v_bar: Some(v0.clone()),
        l1_distance: Some(0.0),
        ratio: None,
        sigma: 0.0,
        positive: Some(v0.iter().all(|&x| x > 0.0)),
        error: None,
    }];
    for &eps in eps_grid {
        let mut row = PerturbationRow {
            eps,
            v_bar: None,
            l1_distance: None,
            ratio: None,
            sigma: eps * amp_max,
            positive: None,
            error: None,
        };
        let solved = perturbed_model(base, amp, w, eps).and_then(|m| {
            if !m.validate().h1_monotone {
                return Err(Error::InvalidInteraction(
                    "monotonicity not certified at this eps".into(),
                ));
            }
            equilibrium_homotopy(&m, config)
        });
        match solved {
            Ok(eq) => {
                let d: f64 = eq.v_bar.iter().zip(&v0).map(|(a, b)| (a - b).abs()).sum();
                row.l1_distance = Some(d);
                row.ratio = Some(d / eps.sqrt());
                row.positive = Some(eq.v_bar.iter().all(|&x| x > 0.0));
                row.v_bar = Some(eq.v_bar);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    let dists: Vec<f64> = rows.iter().filter_map(|r| r.l1_distance).collect();
    Ok(PerturbationTable {
        monotone_distances: dists.windows(2).all(|p| p[1] >= p[0]),
        rows,
    })
}

/// Unit vector orthogonal to `v_bar` drawn from a seeded generator.
pub fn random_orthogonal(rng: &mut Pcg64, v_bar: &[f64]) -> Vec<f64> {
    let nb = dot(v_bar, v_bar);
    loop {
        let g: Vec<f64> = (0..v_bar.len())
            .map(|_| 2.0 * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64) - 1.0)
            .collect();
        let c = dot(&g, v_bar) / nb;
        let h: Vec<f64> = g.iter().zip(v_bar).map(|(x, b)| x - c * b).collect();
        let n = norm2(&h);
        if n > 1e-6 {
            return h.iter().map(|x| x / n).collect();
        }
    }
}

pub fn seeded_rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

/// Largest componentwise distance between two states.
pub fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    norm_inf(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}
