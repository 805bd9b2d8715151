//! The acceptance suite: twelve checks, each at a fixed tolerance, shared by
//! the `acceptance` test target and the `verify` command.

use std::fmt;

use serde::Serialize;

use crate::analysis::{
    convergence_rate, global_stability_experiment, perturbation_sweep, random_orthogonal,
    rayleigh_quotient, seeded_rng, spectral_gap, InitialSampler,
};
use crate::dynamics::{
    closed_form_uniform_linear, integrate, logistic_envelopes, positivity_floor, DEFAULT_ATOL,
    DEFAULT_RTOL,
};
use crate::entropy::{identity_residual, lyapunov_descent, orthogonal_log_rate, EntropyKernel};
use crate::equilibrium::{default_box, equilibrium_homotopy, equilibrium_uniform, HomotopyConfig};
use crate::error::Result;
use crate::linalg::{is_positive_definite, norm_inf, Mat};
use crate::model::{build_model, Interaction, Model};
use crate::presets::{self, pert2_shape, preset};
use crate::scenario::DEFAULT_EPS_GRID;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    check: fn() -> Result<(bool, String)>,
}

impl Criterion {
    pub fn run(&self) -> CriterionOutcome {
        let (passed, detail) = match (self.check)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionOutcome {
            id: self.id,
            title: self.title,
            passed,
            detail,
        }
    }
}

pub const CRITERIA: [Criterion; 12] = [
    Criterion {
        id: 1,
        title: "positivity and mass floor",
        check: c1_positivity,
    },
    Criterion {
        id: 2,
        title: "equilibrium correctness",
        check: c2_equilibrium,
    },
    Criterion {
        id: 3,
        title: "mass law",
        check: c3_mass_law,
    },
    Criterion {
        id: 4,
        title: "global stability",
        check: c4_global_stability,
    },
    Criterion {
        id: 5,
        title: "entropy identity",
        check: c5_entropy_identity,
    },
    Criterion {
        id: 6,
        title: "Lyapunov descent",
        check: c6_lyapunov,
    },
    Criterion {
        id: 7,
        title: "spectral gap",
        check: c7_spectral_gap,
    },
    Criterion {
        id: 8,
        title: "exponential rate",
        check: c8_rate,
    },
    Criterion {
        id: 9,
        title: "closed form",
        check: c9_closed_form,
    },
    Criterion {
        id: 10,
        title: "logistic envelopes",
        check: c10_envelopes,
    },
    Criterion {
        id: 11,
        title: "homotopy solver",
        check: c11_homotopy,
    },
    Criterion {
        id: 12,
        title: "perturbation bound",
        check: c12_perturbation,
    },
];

pub fn criterion(id: u32) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(Criterion::run).collect()
}

const FITNESS_PRESETS: [&str; 3] = ["sym2", "fit2asym", "mut4"];

fn verdict(ok: bool, detail: String) -> Result<(bool, String)> {
    Ok((ok, detail))
}

/// Random start with roughly half the components switched off.
fn sparse_start(sampler: &mut InitialSampler, rng: &mut rand_pcg::Pcg64, n: usize) -> Vec<f64> {
    use rand_pcg::rand_core::Rng;
    let mut v = sampler.sample(n);
    let keep = (rng.next_u64() % n as u64) as usize;
    for (i, x) in v.iter_mut().enumerate() {
        if i != keep && rng.next_u64().is_multiple_of(2) {
            *x = 0.0;
        }
    }
    v
}

fn c1_positivity() -> Result<(bool, String)> {
    let atol = DEFAULT_ATOL;
    let mut worst_state = f64::INFINITY;
    let mut worst_floor = f64::INFINITY;
    for (k, name) in FITNESS_PRESETS.iter().enumerate() {
        let p = preset(name)?;
        let m = &p.model;
        let mut sampler = InitialSampler::new(100 + k as u64, 0.0, 2.0 * m.big_k())?;
        let mut rng = seeded_rng(200 + k as u64);
        for s in 0..10 {
            let v0 = if s % 2 == 0 {
                sampler.sample(m.n())
            } else {
                sparse_start(&mut sampler, &mut rng, m.n())
            };
            let floor = positivity_floor(m, &v0)?;
            let tr = integrate(m, &v0, p.t_end, DEFAULT_RTOL, atol, p.t_end / 500.0)?;
            for st in &tr.states {
                worst_state = worst_state.min(st.iter().copied().fold(f64::INFINITY, f64::min));
                worst_floor = worst_floor.min(st.iter().sum::<f64>() - floor);
            }
        }
    }
    verdict(
        worst_state >= 0.0 && worst_floor >= -atol,
        format!("min component {worst_state:e}, min (total - floor) {worst_floor:e}, 30 runs"),
    )
}

fn c2_equilibrium() -> Result<(bool, String)> {
    let f = equilibrium_uniform(&presets::fit2asym())?;
    let lam = (2.8 + 1.04f64.sqrt()) / 2.0;
    let dl = (f.lambda_p - lam).abs();
    let s = equilibrium_uniform(&presets::sym2())?;
    let ds = s.v_bar.iter().map(|x| (x - 5.0).abs()).fold(0.0, f64::max);
    verdict(
        dl <= 1e-9 && f.residual <= 1e-10 && ds <= 1e-10,
        format!(
            "fit2asym |lambda_p - oracle| = {dl:e}, residual {:e}; sym2 |v_bar - (5,5)| = {ds:e}",
            f.residual
        ),
    )
}

fn c3_mass_law() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in presets::list_presets() {
        if !p.model.is_fitness_weighted() {
            continue;
        }
        let eq = equilibrium_uniform(&p.model)?;
        let k = p.model.big_k();
        let rel = (eq.v_bar.iter().sum::<f64>() - k).abs() / k;
        ok &= rel <= 1e-8;
        parts.push(format!("{} {rel:e}", p.name));
    }
    verdict(
        ok && !parts.is_empty(),
        format!("|sum v_bar - K| / K: {}", parts.join(", ")),
    )
}

fn c4_global_stability() -> Result<(bool, String)> {
    let m = presets::mut4();
    let r = global_stability_experiment(&m, 20, 2024, 200.0, 1e-6, false)?;
    // Same starts, longer horizon: reported for context, not part of the verdict.
    let long = global_stability_experiment(&m, 20, 2024, 1500.0, 1e-6, false)?;
    verdict(
        r.converged,
        format!(
            "t=200: pairwise gap {:e}, gap to equilibrium {:e} (tol 1e-6); at t=1500 the gap to equilibrium is {:e}",
            r.max_pairwise_gap, r.max_gap_to_equilibrium, long.max_gap_to_equilibrium
        ),
    )
}

fn c5_entropy_identity() -> Result<(bool, String)> {
    let p = preset("mut4")?;
    let m = &p.model;
    let vb = equilibrium_uniform(m)?.v_bar;
    let t_end = 20.0;
    let coarse = integrate(m, &p.initial, t_end, 1e-12, 1e-14, t_end / 999.0)?;
    let fine = integrate(m, &p.initial, t_end, 1e-12, 1e-14, t_end / 1998.0)?;
    let rc = identity_residual(m, &coarse, &vb, &EntropyKernel::Quadratic)?;
    let rf = identity_residual(m, &fine, &vb, &EntropyKernel::Quadratic)?;
    let ratio = rc / rf;
    verdict(
        coarse.len() == 1000 && rc <= 1e-4 && ratio >= 3.0,
        format!(
            "{} samples: residual {rc:e}; halved step: {rf:e} (ratio {ratio:.3})",
            coarse.len()
        ),
    )
}

fn c6_lyapunov() -> Result<(bool, String)> {
    let mut worst_increase = f64::NEG_INFINITY;
    let mut bound_ok = true;
    let mut parts = Vec::new();
    for (k, name) in FITNESS_PRESETS.iter().enumerate() {
        let p = preset(name)?;
        let m = &p.model;
        let vb = equilibrium_uniform(m)?.v_bar;
        let mut sampler = InitialSampler::new(300 + k as u64, 0.0, 2.0 * m.big_k())?;
        let mut starts = vec![p.initial.clone()];
        starts.extend((0..5).map(|_| sampler.sample(m.n())));
        let mut min_f = f64::INFINITY;
        let mut stated = 0.0;
        let mut sharp = 0.0;
        for v0 in &starts {
            let tr = integrate(m, v0, p.t_end, 1e-10, 1e-12, p.t_end / 500.0)?;
            let s = lyapunov_descent(m, &tr, &vb)?;
            worst_increase = worst_increase.max(s.max_increase);
            min_f = min_f.min(s.min_f);
            stated = s.stated_lower_bound;
            sharp = s.sharp_lower_bound;
        }
        bound_ok &= min_f >= stated;
        parts.push(format!(
            "{name}: min F {min_f:.6} vs log(1/max v_bar) {stated:.6} (-log sum v_bar^2 = {sharp:.6})"
        ));
    }
    verdict(
        worst_increase <= 1e-9 && bound_ok,
        format!("max F increase {worst_increase:e}; {}", parts.join("; ")),
    )
}

fn c7_spectral_gap() -> Result<(bool, String)> {
    let m = presets::sym2();
    let vb = equilibrium_uniform(&m)?.v_bar;
    let g = spectral_gap(&m, &vb)?;
    let mut rng = seeded_rng(7);
    let min_q = (0..1000)
        .map(|_| rayleigh_quotient(&m, &vb, &random_orthogonal(&mut rng, &vb)))
        .fold(f64::INFINITY, f64::min);
    let dc = (g.c1 - 0.2).abs();
    verdict(
        dc <= 1e-10 && min_q >= g.c1 - 1e-9,
        format!(
            "|c1 - 0.2| = {dc:e}; min Rayleigh quotient over 1000 draws {min_q:.12} vs c1 {:.12}",
            g.c1
        ),
    )
}

fn c8_rate() -> Result<(bool, String)> {
    let m = presets::sym2();
    let vb = equilibrium_uniform(&m)?.v_bar;
    let c1 = spectral_gap(&m, &vb)?.c1;
    let tr = integrate(&m, &[8.0, 2.0], 40.0, 1e-11, 1e-13, 0.1)?;
    let r = convergence_rate(&m, &tr, &vb, 0.5)?;
    let mut max_rate = f64::NEG_INFINITY;
    for v in &tr.states[1..tr.len() - 1] {
        if let Some(x) = orthogonal_log_rate(&m, v, &vb)? {
            max_rate = max_rate.max(x);
        }
    }
    verdict(
        r.fitted_rate_eh <= -0.95 * c1 && r.r_squared >= 0.999 && max_rate <= -c1 + 1e-6,
        format!(
            "fitted rate of E(h) {:.6} (need <= {:.6}), r^2 {:.6}; max d/dt log(E(h)/beta^2) {max_rate:.6} (need <= {:.6})",
            r.fitted_rate_eh,
            -0.95 * c1,
            r.r_squared,
            -c1 + 1e-6
        ),
    )
}

fn c9_closed_form() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for name in ["sym2", "mut4"] {
        let p = preset(name)?;
        let tr = integrate(&p.model, &p.initial, 20.0, 1e-11, 1e-13, 0.05)?;
        let cf = closed_form_uniform_linear(&p.model, &p.initial, &tr.times)?;
        for (a, b) in tr.states.iter().zip(&cf.states) {
            let gap = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            worst = worst.max(gap / norm_inf(b));
        }
    }
    verdict(
        worst <= 1e-6,
        format!("max relative sup-norm gap on [0, 20]: {worst:e}"),
    )
}

fn c10_envelopes() -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for (k, name) in FITNESS_PRESETS.iter().enumerate() {
        let p = preset(name)?;
        let m = &p.model;
        let mut sampler = InitialSampler::new(400 + k as u64, 0.0, 2.0 * m.big_k())?;
        let mut starts = vec![p.initial.clone()];
        starts.extend((0..3).map(|_| sampler.sample(m.n())));
        for v0 in &starts {
            let tr = integrate(m, v0, p.t_end, 1e-12, 1e-14, p.t_end / 500.0)?;
            let totals = tr.totals();
            let env = logistic_envelopes(m, totals[0], &tr.times)?;
            worst = worst.min(env.sandwich_slack(&totals));
        }
    }
    verdict(worst >= -1e-8, format!("min slack {worst:e} over 12 runs"))
}

fn random_h3_model(rng: &mut rand_pcg::Pcg64) -> Result<Model> {
    use rand_pcg::rand_core::Rng;
    let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let n = 2 + (u() * 5.0) as usize;
    let r: Vec<f64> = (0..n).map(|_| 0.5 + 1.5 * u()).collect();
    let mut mu = Mat::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let x = u();
            mu[(i, j)] = x;
            mu[(j, i)] = x;
        }
    }
    let worst = (0..n)
        .map(|i| mu.row(i).iter().sum::<f64>() / r[i])
        .fold(0.0, f64::max);
    let target = 0.5 * (0.05 + 0.95 * u());
    let mu = mu.scale(target / worst);
    build_model(
        n,
        r.clone(),
        1.0 + 99.0 * u(),
        mu,
        Interaction::UniformLinear { a: r },
    )
}

fn c11_homotopy() -> Result<(bool, String)> {
    let mut max_diff = 0.0_f64;
    let mut max_res = 0.0_f64;
    let mut in_box = true;
    for name in FITNESS_PRESETS {
        let base = preset(name)?.model;
        let n = base.n();
        let crowd = base.with_interaction(Interaction::CrowdingLinear {
            alpha: Mat::from_fn(n, |_, _| 1.0),
        })?;
        let h = equilibrium_homotopy(&crowd, &HomotopyConfig::default())?;
        let p = equilibrium_uniform(&base)?;
        max_diff = max_diff.max(
            h.v_bar
                .iter()
                .zip(&p.v_bar)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        max_res = max_res.max(h.residual);
        let (lo, hi, _) = default_box(&crowd);
        in_box &= h.path.iter().flatten().all(|c| {
            let mass: f64 = c.v.iter().sum();
            mass >= lo && mass <= hi
        });
    }
    let mut rng = seeded_rng(11);
    let mut pd = 0;
    let mut tried = 0;
    while tried < 50 {
        let m = random_h3_model(&mut rng)?;
        if !m.validate().standing() {
            continue;
        }
        tried += 1;
        if is_positive_definite(&m.growth_matrix())? {
            pd += 1;
        }
    }
    verdict(
        max_diff <= 1e-7 && max_res <= 1e-12 && in_box && pd == 50,
        format!(
            "unit crowding vs Perron: max diff {max_diff:e}, max residual {max_res:e}, path in box: {in_box}; R+M positive definite on {pd}/50 random models"
        ),
    )
}

fn c12_perturbation() -> Result<(bool, String)> {
    let base = presets::sym2();
    let (amp, w) = pert2_shape();
    let table = perturbation_sweep(
        &base,
        &amp,
        &w,
        &DEFAULT_EPS_GRID,
        &HomotopyConfig::default(),
    )?;
    let all_positive = table.rows.iter().all(|r| r.positive == Some(true));
    let mut worst_gap = 0.0_f64;
    let mut all_converged = true;
    for (k, &eps) in DEFAULT_EPS_GRID.iter().enumerate() {
        let m = presets::pert2(eps)?;
        let rep = global_stability_experiment(&m, 5, 500 + k as u64, 200.0, 1e-5, false)?;
        all_converged &= rep.converged;
        worst_gap = worst_gap.max(rep.max_gap_to_equilibrium);
    }
    let spread = table.ratio_spread().unwrap_or(f64::INFINITY);
    let ratios: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| r.ratio.map(|x| format!("{x:.4}")))
        .collect();
    verdict(
        all_positive && all_converged && spread <= 10.0,
        format!(
            "positive: {all_positive}; max gap to per-eps equilibrium {worst_gap:e}; ratios [{}], spread {spread:.4}",
            ratios.join(", ")
        ),
    )
}
