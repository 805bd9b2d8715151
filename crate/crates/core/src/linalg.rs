//! Dense linear algebra for small systems.
//!
//! Everything here works on square row-major matrices of modest size (the
//! genotype count). The routines are the classical ones: power iteration for
//! the Perron root of a nonnegative irreducible matrix, cyclic Jacobi for
//! symmetric spectra, Gaussian elimination with partial pivoting, and the
//! action of a symmetric matrix exponential through its eigendecomposition.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Strong connectivity of the directed graph `{i -> j : i != j, a_ij > 0}`.
    ///
    /// A 1x1 matrix is irreducible by convention.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n;
        if n <= 1 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let w = if forward { self[(i, j)] } else { self[(j, i)] };
                    if i != j && w > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Mat::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Diagonal shift applied before power iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PerronShift {
    /// Iterate on the matrix as given.
    None,
    /// Smallest shift that makes the diagonal nonnegative.
    MinimalNonnegative,
    /// Caller-provided shift, e.g. the largest mutation row sum.
    Explicit(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerronResult {
    /// Dominant eigenvalue of the shifted matrix.
    pub nu_p: f64,
    /// Dominant eigenvalue of the unshifted matrix, `nu_p - mu_bar`.
    pub lambda_p: f64,
    /// Positive eigenvector with unit Euclidean norm.
    pub v_p: Vec<f64>,
    pub mu_bar: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub const PERRON_TOL: f64 = 1e-13;
pub const PERRON_MAX_ITER: usize = 1_000_000;

/// Perron eigenpair by power iteration with Euclidean normalisation.
///
/// The matrix, after the shift, must have nonnegative off-diagonal and
/// diagonal entries and an irreducible pattern. Convergence is declared when
/// successive eigenvalue estimates differ by less than `tol` and the residual
/// `||A v - lambda v||_inf` is below `tol`, both scaled by `max(1, ||A||_inf)`.
pub fn perron_eigenpair(
    mat: &Mat,
    shift: PerronShift,
    tol: f64,
    max_iter: usize,
) -> Result<PerronResult> {
    perron_eigenpair_from(mat, shift, &vec![1.0; mat.n()], tol, max_iter)
}

/// Same as [`perron_eigenpair`] with a caller-chosen positive starting vector.
pub fn perron_eigenpair_from(
    mat: &Mat,
    shift: PerronShift,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<PerronResult> {
    let n = mat.n();
    if start.len() != n {
        return Err(Error::DimensionMismatch("start vector".into()));
    }
    let mu_bar = match shift {
        PerronShift::None => 0.0,
        PerronShift::MinimalNonnegative => (0..n).map(|i| -mat[(i, i)]).fold(0.0, f64::max),
        PerronShift::Explicit(s) => s,
    };
    let mut shifted = mat.clone();
    for i in 0..n {
        shifted[(i, i)] += mu_bar;
    }
    if shifted.data.iter().any(|&x| x < 0.0) {
        return Err(Error::NegativeEntry);
    }
    if !shifted.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    perron_from_start(mat, &shifted, mu_bar, start, tol, max_iter)
}

fn perron_from_start(
    mat: &Mat,
    shifted: &Mat,
    mu_bar: f64,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<PerronResult> {
    let scale = shifted.norm_inf().max(1.0);
    let mut v = start.to_vec();
    let nv = norm2(&v);
    if !(nv > 0.0) || v.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument(
            "power iteration needs a nonnegative nonzero start".into(),
        ));
    }
    v.iter_mut().for_each(|x| *x /= nv);

    let mut nu_old = f64::NAN;
    for it in 1..=max_iter {
        let w = shifted.mul_vec(&v);
        let nu = dot(&v, &w);
        let residual = w
            .iter()
            .zip(&v)
            .fold(0.0_f64, |m, (wi, vi)| m.max((wi - nu * vi).abs()));
        let nw = norm2(&w);
        if !(nw > 0.0) || !nw.is_finite() {
            return Err(Error::NoConvergence(it));
        }
        let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
        if (nu - nu_old).abs() < tol * scale && residual < tol * scale {
            let v_p = next;
            let lambda_p = nu - mu_bar;
            let av = mat.mul_vec(&v_p);
            let residual = av
                .iter()
                .zip(&v_p)
                .fold(0.0_f64, |m, (a, x)| m.max((a - lambda_p * x).abs()));
            if v_p.iter().any(|&x| x <= 0.0) {
                return Err(Error::NotIrreducible);
            }
            return Ok(PerronResult {
                nu_p: nu,
                lambda_p,
                v_p,
                mu_bar,
                iterations: it,
                residual,
            });
        }
        nu_old = nu;
        v = next;
    }
    Err(Error::NoConvergence(max_iter))
}

/// Eigendecomposition of a real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSpectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: Mat,
}

impl SymmetricSpectrum {
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.eigenvectors.n())
            .map(|i| self.eigenvectors[(i, k)])
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

pub const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(mat: &Mat) -> Result<()> {
    let asym = mat.max_asymmetry();
    if asym > SYMMETRY_TOL * mat.max_abs().max(1.0) || !mat.is_finite() {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_spectrum(mat: &Mat) -> Result<SymmetricSpectrum> {
    check_symmetric(mat)?;
    let n = mat.n();
    // Work on the exactly symmetrised copy.
    let mut a = Mat::from_fn(n, |i, j| 0.5 * (mat[(i, j)] + mat[(j, i)]));
    let mut q = Mat::identity(n);
    let total: f64 = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-14 * total;

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = order.iter().map(|&k| a[(k, k)]).collect();
    let eigenvectors = Mat::from_fn(n, |i, c| q[(i, order[c])]);
    Ok(SymmetricSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Solves `mat x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mat: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = mat.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix is {n}x{n}",
            b.len()
        )));
    }
    let threshold = 1e-14 * mat.norm_inf();
    let mut a = mat.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .expect("non-empty range");
        let pivot = a[(pivot_row, col)];
        if pivot.abs() <= threshold || pivot == 0.0 {
            return Err(Error::SingularMatrix);
        }
        if pivot_row != col {
            for k in 0..n {
                a.data.swap(col * n + k, pivot_row * n + k);
            }
            x.swap(col, pivot_row);
        }
        for i in (col + 1)..n {
            let factor = a[(i, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[(i, k)] -= factor * a[(col, k)];
            }
            x[i] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in (i + 1)..n {
            acc -= a[(i, k)] * x[k];
        }
        x[i] = acc / a[(i, i)];
    }
    Ok(x)
}

/// `exp(S t)` for a fixed symmetric `S`, applied through its eigendecomposition.
#[derive(Clone, Debug)]
pub struct SymmetricExp {
    spectrum: SymmetricSpectrum,
}

impl SymmetricExp {
    pub fn new(sym: &Mat) -> Result<Self> {
        Ok(SymmetricExp {
            spectrum: symmetric_spectrum(sym)?,
        })
    }

    pub fn spectrum(&self) -> &SymmetricSpectrum {
        &self.spectrum
    }

    /// Coordinates of `v` in the eigenbasis.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let q = &self.spectrum.eigenvectors;
        (0..q.n())
            .map(|k| (0..q.n()).map(|i| q[(i, k)] * v[i]).sum())
            .collect()
    }

    /// Maps eigenbasis coordinates back to the standard basis.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let q = &self.spectrum.eigenvectors;
        (0..q.n())
            .map(|i| (0..q.n()).map(|k| q[(i, k)] * coords[k]).sum())
            .collect()
    }

    pub fn apply(&self, t: f64, v0: &[f64]) -> Vec<f64> {
        if t == 0.0 {
            return v0.to_vec();
        }
        let c = self.project(v0);
        let scaled: Vec<f64> = c
            .iter()
            .zip(&self.spectrum.eigenvalues)
            .map(|(ck, lk)| ck * (lk * t).exp())
            .collect();
        self.reconstruct(&scaled)
    }
}

/// `exp(sym * t) v0` for symmetric `sym`.
pub fn expm_action(sym: &Mat, t: f64, v0: &[f64]) -> Result<Vec<f64>> {
    if v0.len() != sym.n() {
        return Err(Error::DimensionMismatch("expm_action vector".into()));
    }
    Ok(SymmetricExp::new(sym)?.apply(t, v0))
}

/// True iff the smallest eigenvalue of the symmetric matrix is positive.
pub fn is_positive_definite(mat: &Mat) -> Result<bool> {
    Ok(symmetric_spectrum(mat)?.min_eigenvalue() > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct SplitMix(u64);
    impl SplitMix {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn random_symmetric(n: usize, seed: u64) -> Mat {
        let mut rng = SplitMix(seed);
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let x = 2.0 * rng.next() - 1.0;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    /// Taylor series with scaling and squaring, independent of the eigensolver.
    fn expm_taylor(a: &Mat, t: f64) -> Mat {
        let at = a.scale(t);
        let norm = at.norm_inf();
        let mut squarings = 0;
        while norm / 2f64.powi(squarings) > 0.5 {
            squarings += 1;
        }
        let small = at.scale(1.0 / 2f64.powi(squarings));
        let n = a.n();
        let mut result = Mat::identity(n);
        let mut term = Mat::identity(n);
        for k in 1..=12 {
            term = term.mul(&small).scale(1.0 / k as f64);
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }

    #[test]
    fn perron_two_by_two_closed_form() {
        let m = Mat::from_rows(&[vec![0.9, 0.1], vec![0.1, 1.9]]).unwrap();
        let p =
            perron_eigenpair(&m, PerronShift::Explicit(0.1), PERRON_TOL, PERRON_MAX_ITER).unwrap();
        let expected = (2.8 + 1.04_f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(p.lambda_p, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(p.nu_p, expected + 0.1, epsilon = 1e-12);
        // (A - lambda) v = 0 gives v2/v1 = (lambda - 0.9)/0.1.
        let ratio = (expected - 0.9) / 0.1;
        assert_abs_diff_eq!(p.v_p[1] / p.v_p[0], ratio, epsilon = 1e-9);
        assert_abs_diff_eq!(ratio, 10.09902, epsilon = 1e-5);
        assert_abs_diff_eq!(norm2(&p.v_p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn perron_symmetric_pair() {
        let m = Mat::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let p = perron_eigenpair(&m, PerronShift::MinimalNonnegative, PERRON_TOL, 10_000).unwrap();
        assert_abs_diff_eq!(p.lambda_p, 1.0, epsilon = 1e-12);
        let s = 0.5_f64.sqrt();
        assert_abs_diff_eq!(p.v_p[0], s, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_p[1], s, epsilon = 1e-12);
    }

    #[test]
    fn perron_reducible_rejected() {
        let m = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(
            perron_eigenpair(&m, PerronShift::None, PERRON_TOL, 100),
            Err(Error::NotIrreducible)
        );
    }

    #[test]
    fn perron_negative_entries_rejected() {
        let m = Mat::from_rows(&[vec![1.0, -0.5], vec![0.5, 2.0]]).unwrap();
        assert_eq!(
            perron_eigenpair(&m, PerronShift::MinimalNonnegative, PERRON_TOL, 100),
            Err(Error::NegativeEntry)
        );
    }

    #[test]
    fn perron_budget_exhausted() {
        let m = Mat::from_rows(&[vec![1.0, 0.001], vec![0.001, 1.0001]]).unwrap();
        assert_eq!(
            perron_eigenpair(&m, PerronShift::None, 1e-15, 3),
            Err(Error::NoConvergence(3))
        );
    }

    #[test]
    fn jacobi_identity_and_swap() {
        let s = symmetric_spectrum(&Mat::identity(3)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        let m = 0.37;
        let s =
            symmetric_spectrum(&Mat::from_rows(&[vec![0.0, m], vec![m, 0.0]]).unwrap()).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], m, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eigenvalues[1], -m, epsilon = 1e-15);
    }

    #[test]
    fn jacobi_reconstructs_random() {
        for seed in 0..20 {
            let a = random_symmetric(6, seed);
            let s = symmetric_spectrum(&a).unwrap();
            let q = &s.eigenvectors;
            let recon = q.mul(&Mat::from_diag(&s.eigenvalues)).mul(&q.transpose());
            let err = recon.add(&a.scale(-1.0)).norm_inf();
            assert!(err <= 1e-10 * a.norm_inf(), "seed {seed}: {err}");
            let qtq = q
                .transpose()
                .mul(q)
                .add(&Mat::identity(6).scale(-1.0))
                .max_abs();
            assert!(qtq <= 1e-10, "seed {seed}: {qtq}");
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            symmetric_spectrum(&m),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn solve_cases() {
        let b = vec![3.0, -1.0, 2.5];
        assert_eq!(solve_linear(&Mat::identity(3), &b).unwrap(), b);
        let m = Mat::from_rows(&[vec![0.9, 0.1], vec![0.1, 1.9]]).unwrap();
        let x = solve_linear(&m, &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-14);
        assert_eq!(
            solve_linear(&Mat::zeros(2), &[1.0, 1.0]),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn expm_cases() {
        let v0 = vec![0.3, -1.2, 2.0];
        let a = random_symmetric(3, 7);
        let out = expm_action(&a, 0.0, &v0).unwrap();
        for (x, y) in out.iter().zip(&v0) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let d = Mat::from_diag(&[0.4, -1.5]);
        let out = expm_action(&d, 1.3, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(out[0], (0.4_f64 * 1.3).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], (-1.5_f64 * 1.3).exp(), epsilon = 1e-14);
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        for seed in 0..10 {
            let a = random_symmetric(4, 100 + seed);
            let v0 = vec![1.0, -0.5, 0.25, 2.0];
            let got = expm_action(&a, 0.5, &v0).unwrap();
            let want = expm_taylor(&a, 0.5).mul_vec(&v0);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9, "seed {seed}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn positive_definiteness() {
        let h3 = Mat::from_rows(&[vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        assert!(is_positive_definite(&h3).unwrap());
        let indefinite = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(!is_positive_definite(&indefinite).unwrap());
    }

    #[test]
    fn irreducibility() {
        let m = Mat::from_rows(&[
            vec![0.0, 0.1, 0.0],
            vec![0.1, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(!m.is_irreducible());
        let chain = Mat::from_rows(&[
            vec![0.0, 0.1, 0.0],
            vec![0.1, 0.0, 0.2],
            vec![0.0, 0.2, 0.0],
        ])
        .unwrap();
        assert!(chain.is_irreducible());
        assert!(Mat::zeros(1).is_irreducible());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sym_strategy(n: usize) -> impl Strategy<Value = Mat> {
            proptest::collection::vec(-2.0f64..2.0, n * n).prop_map(move |d| {
                Mat::from_fn(n, |i, j| {
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    d[a * n + b]
                })
            })
        }

        proptest! {
            #[test]
            fn expm_semigroup(a in sym_strategy(4), s in 0.0f64..1.0, t in 0.0f64..1.0,
                              v in proptest::collection::vec(-1.0f64..1.0, 4)) {
                let e = SymmetricExp::new(&a).unwrap();
                let direct = e.apply(s + t, &v);
                let composed = e.apply(s, &e.apply(t, &v));
                for (x, y) in direct.iter().zip(&composed) {
                    prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                }
            }

            #[test]
            fn solve_round_trip(d in proptest::collection::vec(-1.0f64..1.0, 25),
                                b in proptest::collection::vec(-1.0f64..1.0, 5)) {
                // Diagonal boost keeps the system well conditioned.
                let m = Mat::from_fn(5, |i, j| d[i * 5 + j] + if i == j { 6.0 } else { 0.0 });
                let x = solve_linear(&m, &b).unwrap();
                let back = m.mul_vec(&x);
                let bound = 1e-10 * (m.norm_inf() * norm_inf(&x) + norm_inf(&b));
                for (p, q) in back.iter().zip(&b) {
                    prop_assert!((p - q).abs() <= bound);
                }
            }

            #[test]
            fn perron_start_independent(diag in proptest::collection::vec(0.1f64..3.0, 4),
                                        off in proptest::collection::vec(0.01f64..0.5, 6),
                                        s1 in proptest::collection::vec(0.1f64..1.0, 4),
                                        s2 in proptest::collection::vec(0.1f64..1.0, 4)) {
                let mut m = Mat::from_diag(&diag);
                let mut k = 0;
                for i in 0..4 { for j in (i + 1)..4 { m[(i, j)] = off[k]; m[(j, i)] = off[k]; k += 1; } }
                let a = perron_eigenpair_from(&m, PerronShift::None, &s1, PERRON_TOL, PERRON_MAX_ITER).unwrap();
                let b = perron_eigenpair_from(&m, PerronShift::None, &s2, PERRON_TOL, PERRON_MAX_ITER).unwrap();
                prop_assert!((a.lambda_p - b.lambda_p).abs() <= 1e-10);
                for (x, y) in a.v_p.iter().zip(&b.v_p) {
                    prop_assert!((x - y).abs() <= 1e-8);
                }
            }
        }
    }
}
