//! Time integration, the explicit solution for shared linear competition, and
//! the population bounds that come with it.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    norm_inf, perron_eigenpair, PerronShift, SymmetricExp, PERRON_MAX_ITER, PERRON_TOL,
};
use crate::model::{Interaction, Model};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

/// Recorded solution of the evolution equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub tol_used: (f64, f64),
    /// Set when the initial state is identically zero, which is stationary.
    pub trivial: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    /// Total population at every recorded time.
    pub fn totals(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.iter().sum()).collect()
    }

    /// CSV with header `t,v_1,...,v_N,total`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            write!(out, ",v_{i}").unwrap();
        }
        out.push_str(",total\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}").unwrap();
            for x in s {
                write!(out, ",{x:.16e}").unwrap();
            }
            writeln!(out, ",{:.16e}", s.iter().sum::<f64>()).unwrap();
        }
        out
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }

    /// One trial step from `y` (with `k[0] = f(y)`); returns the scaled error norm.
    fn attempt(&mut self, model: &Model, y: &[f64], h: f64, rtol: f64, atol: f64) -> f64 {
        let n = y.len();
        let rows: [&[f64]; 5] = [
            &[A21],
            &[A31, A32],
            &[A41, A42, A43],
            &[A51, A52, A53, A54],
            &[A61, A62, A63, A64, A65],
        ];
        for (s, coeffs) in rows.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (c, kk) in coeffs.iter().zip(&self.k) {
                    acc += c * kk[i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            model.rhs_into(&self.tmp, &mut self.k[s + 1]);
        }
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (B1 * self.k[0][i]
                    + B3 * self.k[2][i]
                    + B4 * self.k[3][i]
                    + B5 * self.k[4][i]
                    + B6 * self.k[5][i]);
        }
        let (head, tail) = self.k.split_at_mut(6);
        model.rhs_into(&self.y_new, &mut tail[0]);
        let k = head;
        let k7 = &tail[0];
        let mut sum = 0.0;
        for i in 0..n {
            self.err[i] = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(self.y_new[i].abs());
            sum += (self.err[i] / sc).powi(2);
        }
        (sum / n as f64).sqrt()
    }
}

fn output_grid(t_end: f64, record_every: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    let mut k = 1usize;
    loop {
        let t = k as f64 * record_every;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid.push(t_end);
    grid
}

/// Adaptive Dormand–Prince 5(4) integration with PI step control.
///
/// Output is written on the uniform grid `0, record_every, 2 record_every, ...`
/// plus `t_end`; the step size is clipped so every grid time is hit exactly.
/// A step leaving any component below `-atol` is rejected and halved; smaller
/// undershoots are clamped to zero.
pub fn integrate(
    model: &Model,
    v0: &[f64],
    t_end: f64,
    rtol: f64,
    atol: f64,
    record_every: f64,
) -> Result<Trajectory> {
    let n = model.n();
    if v0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, expected {n}",
            v0.len()
        )));
    }
    if !v0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    if v0.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument(
            "initial state must be nonnegative".into(),
        ));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    if !(record_every > 0.0) {
        return Err(Error::InvalidArgument(
            "record_every must be positive".into(),
        ));
    }

    let grid = output_grid(t_end, record_every);
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    times.push(0.0);
    states.push(v0.to_vec());

    let mut y = v0.to_vec();
    let mut st = Stages::new(n);
    model.rhs_into(&y, &mut st.k[0]);

    let h_min = 1e-14 * t_end;
    let mut h = initial_step(model, &y, &st.k[0], rtol, atol, t_end);
    let mut t = 0.0;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut err_prev = 1e-4_f64;
    let mut next_out = 1usize;

    const SAFETY: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - 0.75 * BETA;

    while next_out < grid.len() {
        let target = grid[next_out];
        let mut hit = false;
        let mut h_try = h;
        if t + h_try >= target - 1e-13 * t_end.max(1.0) {
            h_try = target - t;
            hit = true;
        }
        if h_try < h_min && !hit {
            return Err(Error::StepSizeUnderflow { t });
        }

        let err = st.attempt(model, &y, h_try, rtol, atol);
        if !err.is_finite() || st.y_new.iter().any(|x| !x.is_finite()) {
            rejected += 1;
            h = 0.25 * h_try;
            if h < h_min {
                return Err(Error::NonFiniteState { t });
            }
            continue;
        }
        if st.y_new.iter().any(|&x| x < -atol) {
            rejected += 1;
            h = 0.5 * h_try;
            if h < h_min {
                return Err(Error::StepSizeUnderflow { t });
            }
            continue;
        }
        if err > 1.0 {
            rejected += 1;
            h = h_try * (SAFETY * err.powf(-ALPHA)).max(FAC_MIN);
            if h < h_min {
                return Err(Error::StepSizeUnderflow { t });
            }
            continue;
        }

        accepted += 1;
        t = if hit { target } else { t + h_try };
        let mut clamped = false;
        for (yi, &ni) in y.iter_mut().zip(&st.y_new) {
            if ni < 0.0 {
                *yi = 0.0;
                clamped = true;
            } else {
                *yi = ni;
            }
        }
        if clamped {
            model.rhs_into(&y, &mut st.k[0]);
        } else {
            let k7 = std::mem::take(&mut st.k[6]);
            st.k[6] = std::mem::replace(&mut st.k[0], k7);
        }

        let e = err.max(1e-10);
        let fac = SAFETY * e.powf(-ALPHA) * err_prev.powf(BETA);
        err_prev = e;
        let h_next = h_try * fac.clamp(FAC_MIN, FAC_MAX);
        // A step shortened to land on the grid should not shrink the next one.
        h = if hit { h_next.max(h) } else { h_next };

        if hit {
            times.push(t);
            states.push(y.clone());
            next_out += 1;
        }
    }

    Ok(Trajectory {
        times,
        states,
        accepted_steps: accepted,
        rejected_steps: rejected,
        tol_used: (rtol, atol),
        trivial: v0.iter().all(|&x| x == 0.0),
    })
}

fn initial_step(model: &Model, y: &[f64], f0: &[f64], rtol: f64, atol: f64, t_end: f64) -> f64 {
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|x| atol + rtol * x.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0
        .iter()
        .zip(&sc)
        .map(|(a, s)| (a / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let f1 = model.rhs(&y1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end)
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|k| {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn gl_panel(f: &impl Fn(f64) -> f64, rule: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Adaptive Gauss–Legendre quadrature: a panel is bisected until its
/// estimate agrees with the sum over its halves.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = gauss_legendre(8);
    fn rec(
        f: &impl Fn(f64) -> f64,
        rule: &[(f64, f64)],
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl_panel(f, rule, a, m);
        let right = gl_panel(f, rule, m, b);
        let both = left + right;
        if depth >= 40 || (both - whole).abs() <= tol * both.abs().max(1.0) {
            both
        } else {
            rec(f, rule, a, m, left, tol, depth + 1) + rec(f, rule, m, b, right, tol, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let whole = gl_panel(&f, &rule, a, b);
    rec(&f, &rule, a, b, whole, tol, 0)
}

pub const CLOSED_FORM_QUAD_TOL: f64 = 1e-10;

/// Explicit solution for a shared linear functional with symmetric mutation:
///
/// ```text
/// v(t) = e^{(R+M)t} v0 / (1 + sum_j (a_j / K) int_0^t (e^{(R+M)s} v0)_j ds)
/// ```
pub fn closed_form_uniform_linear(model: &Model, v0: &[f64], times: &[f64]) -> Result<Trajectory> {
    let Interaction::UniformLinear { a } = model.interaction() else {
        return Err(Error::WrongInteractionKind(format!(
            "closed form needs a uniform interaction, got {}",
            model.interaction().kind()
        )));
    };
    if !model.mu_is_symmetric() {
        return Err(Error::AsymmetricMutation);
    }
    if v0.len() != model.n() {
        return Err(Error::DimensionMismatch("initial state".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument(
            "times must be nonnegative and strictly increasing".into(),
        ));
    }
    let exp = SymmetricExp::new(&model.growth_matrix())?;
    let coords = exp.project(v0);
    let weights: Vec<f64> = a.iter().map(|x| x / model.big_k()).collect();
    let wq = exp.project(&weights);
    let lambdas = exp.spectrum().eigenvalues.clone();
    let integrand = |s: f64| -> f64 {
        lambdas
            .iter()
            .zip(&coords)
            .zip(&wq)
            .map(|((l, c), w)| c * w * (l * s).exp())
            .sum()
    };

    let mut states = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &t in times {
        acc += integrate_gl(integrand, prev, t, CLOSED_FORM_QUAD_TOL);
        prev = t;
        let num = exp.apply(t, v0);
        let den = 1.0 + acc;
        states.push(num.iter().map(|x| (x / den).max(0.0)).collect());
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        accepted_steps: 0,
        rejected_steps: 0,
        tol_used: (CLOSED_FORM_QUAD_TOL, 0.0),
        trivial: v0.iter().all(|&x| x == 0.0),
    })
}

/// Logistic solutions bracketing the total population.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopePair {
    pub times: Vec<f64>,
    pub n_min: Vec<f64>,
    pub n_max: Vec<f64>,
    pub xi_minus: f64,
    pub xi_plus: f64,
}

impl EnvelopePair {
    /// Smallest signed distance of `totals` to the band between the envelopes.
    pub fn sandwich_slack(&self, totals: &[f64]) -> f64 {
        totals
            .iter()
            .zip(self.n_min.iter().zip(&self.n_max))
            .map(|(&x, (&a, &b))| (x - a.min(b)).min(a.max(b) - x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Logistic solution `K n0 e^{xi t} / (K + n0 (e^{xi t} - 1))`.
pub fn logistic(big_k: f64, n0: f64, xi: f64, t: f64) -> f64 {
    let em1 = (xi * t).exp_m1();
    if em1.is_infinite() {
        return big_k;
    }
    big_k * n0 * (em1 + 1.0) / (big_k + n0 * em1)
}

pub fn logistic_envelopes(model: &Model, n0: f64, times: &[f64]) -> Result<EnvelopePair> {
    if !model.is_fitness_weighted() {
        return Err(Error::WrongInteractionKind(
            "envelopes need fitness-weighted competition (a = r)".into(),
        ));
    }
    if !(n0 > 0.0) {
        return Err(Error::ZeroInitialMass);
    }
    let xi_minus = model.r().iter().copied().fold(f64::INFINITY, f64::min);
    let xi_plus = model.r().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = model.big_k();
    Ok(EnvelopePair {
        times: times.to_vec(),
        n_min: times
            .iter()
            .map(|&t| logistic(k, n0, xi_minus, t))
            .collect(),
        n_max: times.iter().map(|&t| logistic(k, n0, xi_plus, t)).collect(),
        xi_minus,
        xi_plus,
    })
}

/// Lower bound `min{1, N(0)/2, r_min / (2 kappa_0)}` on the total population.
pub fn positivity_floor(model: &Model, v0: &[f64]) -> Result<f64> {
    let mass: f64 = v0.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroInitialMass);
    }
    let r_min = model.r().iter().copied().fold(f64::INFINITY, f64::min);
    let kappa0 = model.coercivity().kappa0();
    Ok(1.0_f64.min(0.5 * mass).min(r_min / (2.0 * kappa0)))
}

/// Componentwise ceiling `e^{lambda_p t} |v0|_inf v_p / min(v_p)`.
pub fn perron_growth_ceiling(model: &Model, v0: &[f64], t: f64) -> Result<Vec<f64>> {
    let p = perron_eigenpair(
        &model.growth_matrix(),
        PerronShift::MinimalNonnegative,
        PERRON_TOL,
        PERRON_MAX_ITER,
    )?;
    let vmin = p.v_p.iter().copied().fold(f64::INFINITY, f64::min);
    let c0 = norm_inf(v0) / vmin;
    let g = (p.lambda_p * t).exp();
    Ok(p.v_p.iter().map(|x| c0 * g * x).collect())
}
