//! Truncated Fock-space matrices and their spectral diagnostics.
//!
//! In the basis `|m,n⟩`, `m,n ≤ N`, the Hamiltonian
//! `H = a*a + bb* − γ(a*b* − ab)` only couples `|m,n⟩` to `|m±1,n±1⟩`, so the
//! difference `d = m − n` is conserved and the matrix splits into `2N+1`
//! tridiagonal blocks. Every solver here works block by block.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::linalg::{
    norm, sturm_count, tridiagonal_eigenvalue, tridiagonal_eigenvector, tridiagonal_min_singular_below,
    tridiagonal_spectral_norm, Tridiagonal,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MatrixKind {
    H,
    Hstar,
    /// `Re(e^{−iθ}H) = (e^{−iθ}H + e^{iθ}H*)/2`, requires `|θ| < π/2`.
    HermitianPart { theta: f64 },
}

/// States with a fixed `d = m − n`, ordered by `min(m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockBlock {
    pub d: i64,
    pub states: Vec<(usize, usize)>,
    pub matrix: Tridiagonal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockMatrix {
    pub kind: MatrixKind,
    pub truncation: usize,
    pub gamma: f64,
    /// Ordered by `d = −N..=N`.
    pub blocks: Vec<FockBlock>,
}

fn block_states(n_trunc: usize, d: i64) -> Vec<(usize, usize)> {
    let (dp, dm) = (d.max(0) as usize, (-d).max(0) as usize);
    (0..=n_trunc - d.unsigned_abs() as usize).map(|k| (k + dp, k + dm)).collect()
}

pub fn build_matrix(kind: MatrixKind, truncation: usize, gamma: f64) -> Result<FockMatrix> {
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("coupling must be finite, got {gamma}")));
    }
    if let MatrixKind::HermitianPart { theta } = kind {
        if !(theta.abs() < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "Hermitian part needs |θ| < π/2 to be bounded below, got θ = {theta}"
            )));
        }
    }
    let nt = truncation as i64;
    let blocks = (-nt..=nt)
        .map(|d| {
            let states = block_states(truncation, d);
            let diag: Vec<Complex64> = states
                .iter()
                .map(|&(m, n)| {
                    let e = (m + n + 1) as f64;
                    match kind {
                        MatrixKind::HermitianPart { theta } => Complex64::new(theta.cos() * e, 0.0),
                        _ => Complex64::new(e, 0.0),
                    }
                })
                .collect();
            // coupling between state j and j+1 along the block
            let c: Vec<f64> = states[..states.len() - 1]
                .iter()
                .map(|&(m, n)| gamma * (((m + 1) * (n + 1)) as f64).sqrt())
                .collect();
            let (sub, sup): (Vec<Complex64>, Vec<Complex64>) = match kind {
                MatrixKind::H => c.iter().map(|&g| (Complex64::new(-g, 0.0), Complex64::new(g, 0.0))).unzip(),
                MatrixKind::Hstar => c.iter().map(|&g| (Complex64::new(g, 0.0), Complex64::new(-g, 0.0))).unzip(),
                MatrixKind::HermitianPart { theta } => {
                    let s = theta.sin();
                    c.iter()
                        .map(|&g| (Complex64::new(0.0, g * s), Complex64::new(0.0, -g * s)))
                        .unzip()
                }
            };
            FockBlock {
                d,
                states,
                matrix: Tridiagonal { sub, diag, sup },
            }
        })
        .collect();
    Ok(FockMatrix {
        kind,
        truncation,
        gamma,
        blocks,
    })
}

impl FockMatrix {
    pub fn dimension(&self) -> usize {
        (self.truncation + 1).pow(2)
    }

    /// Lexicographic position of `|m,n⟩`.
    pub fn index(&self, m: usize, n: usize) -> usize {
        m * (self.truncation + 1) + n
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        (index / (self.truncation + 1), index % (self.truncation + 1))
    }

    pub fn block(&self, d: i64) -> &FockBlock {
        &self.blocks[(d + self.truncation as i64) as usize]
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let (m, n) = self.state(row);
        let (p, q) = self.state(col);
        let d = m as i64 - n as i64;
        if d != p as i64 - q as i64 {
            return Complex64::default();
        }
        let t = &self.block(d).matrix;
        let (j, k) = (m.min(n), p.min(q));
        if j == k {
            t.diag[j]
        } else if j == k + 1 {
            t.sub[k]
        } else if k == j + 1 {
            t.sup[j]
        } else {
            Complex64::default()
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dimension();
        DMatrix::from_fn(dim, dim, |r, c| self.entry(r, c))
    }

    pub fn is_real(&self) -> bool {
        self.blocks.iter().all(|b| {
            let t = &b.matrix;
            t.diag.iter().chain(&t.sub).chain(&t.sup).all(|z| z.im == 0.0)
        })
    }

    pub fn is_hermitian(&self) -> bool {
        self.blocks.iter().all(|b| {
            let t = &b.matrix;
            t.diag.iter().all(|z| z.im == 0.0) && t.sub.iter().zip(&t.sup).all(|(l, u)| *l == u.conj())
        })
    }

    /// `A·v` for a vector in lexicographic order.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dimension()];
        for b in &self.blocks {
            let local: Vec<Complex64> = b.states.iter().map(|&(m, n)| v[self.index(m, n)]).collect();
            for (&(m, n), r) in b.states.iter().zip(b.matrix.mul_vec(&local)) {
                out[self.index(m, n)] = r;
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().flat_map(|b| b.matrix.diag.iter()).sum()
    }

    /// Exact spectral norm, the largest over blocks.
    pub fn spectral_norm(&self) -> f64 {
        self.blocks
            .par_iter()
            .map(|b| tridiagonal_spectral_norm(&b.matrix))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of one block, sorted by real then imaginary part.
pub fn block_eigenvalues(block: &FockBlock) -> Result<Vec<Complex64>> {
    let t = &block.matrix;
    let n = t.len();
    let hermitian = t.diag.iter().all(|z| z.im == 0.0) && t.sub.iter().zip(&t.sup).all(|(l, u)| *l == u.conj());
    let mut eig: Vec<Complex64> = if hermitian {
        let diag: Vec<f64> = t.diag.iter().map(|z| z.re).collect();
        let off_sq: Vec<f64> = t.sub.iter().map(|z| z.norm_sqr()).collect();
        crate::linalg::tridiagonal_eigenvalues(&diag, &off_sq)
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect()
    } else {
        let entry = |r: usize, c: usize| -> Complex64 {
            if r == c {
                t.diag[r]
            } else if r == c + 1 {
                t.sub[c]
            } else if c == r + 1 {
                t.sup[r]
            } else {
                Complex64::default()
            }
        };
        let max_iter = 200 * n + 100;
        let real = t.diag.iter().chain(&t.sub).chain(&t.sup).all(|z| z.im == 0.0);
        if real {
            let m = DMatrix::from_fn(n, n, |r, c| entry(r, c).re);
            Schur::try_new(m, f64::EPSILON, max_iter)
                .ok_or(Error::BlockNoConvergence { block: block.d })?
                .complex_eigenvalues()
                .iter()
                .copied()
                .collect()
        } else {
            let m = DMatrix::from_fn(n, n, entry);
            Schur::try_new(m, f64::EPSILON, max_iter)
                .and_then(|s| s.eigenvalues())
                .ok_or(Error::BlockNoConvergence { block: block.d })?
                .iter()
                .copied()
                .collect()
        }
    };
    sort_complex(&mut eig);
    Ok(eig)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpectrum {
    pub d: i64,
    pub eigenvalues: Vec<Complex64>,
}

pub fn block_spectra(a: &FockMatrix) -> Result<Vec<BlockSpectrum>> {
    a.blocks
        .par_iter()
        .map(|b| {
            Ok(BlockSpectrum {
                d: b.d,
                eigenvalues: block_eigenvalues(b)?,
            })
        })
        .collect()
}

/// All eigenvalues, sorted by real then imaginary part.
pub fn eigenvalues(a: &FockMatrix) -> Result<Vec<Complex64>> {
    let mut all: Vec<Complex64> = block_spectra(a)?.into_iter().flat_map(|b| b.eigenvalues).collect();
    sort_complex(&mut all);
    Ok(all)
}

/// Eigenvalues of the assembled dense matrix, ignoring block structure.
pub fn dense_eigenvalues(a: &FockMatrix) -> Result<Vec<Complex64>> {
    let dim = a.dimension();
    let mut eig: Vec<Complex64> = Schur::try_new(a.to_dense(), f64::EPSILON, 200 * dim + 100)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::NoConvergence {
            what: "dense Schur decomposition".into(),
            residual: f64::NAN,
        })?
        .iter()
        .copied()
        .collect();
    sort_complex(&mut eig);
    Ok(eig)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub d: i64,
    pub value: Complex64,
    /// Unit eigenvector in the block's own state order.
    pub block_vector: Vec<Complex64>,
    /// `‖T v − λ v‖`
    pub residual: f64,
}

impl EigenPair {
    /// The eigenvector embedded in the lexicographic basis.
    pub fn full_vector(&self, a: &FockMatrix) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); a.dimension()];
        for (&(m, n), x) in a.block(self.d).states.iter().zip(&self.block_vector) {
            v[a.index(m, n)] = *x;
        }
        v
    }
}

/// Eigenvalues with inverse-iteration eigenvectors, each satisfying
/// `‖Av − λv‖ ≤ 1e−10·‖A‖`.
pub fn eigenpairs(a: &FockMatrix) -> Result<Vec<EigenPair>> {
    let norm_a = a.spectral_norm();
    let per_block: Vec<Result<Vec<EigenPair>>> = a
        .blocks
        .par_iter()
        .map(|b| {
            block_eigenvalues(b)?
                .into_iter()
                .map(|lambda| {
                    let v = tridiagonal_eigenvector(&b.matrix, lambda)?;
                    let tv = b.matrix.mul_vec(&v);
                    let r: Vec<Complex64> = tv.iter().zip(&v).map(|(t, x)| t - lambda * x).collect();
                    let residual = norm(&r);
                    if residual > 1e-10 * norm_a {
                        return Err(Error::NoConvergence {
                            what: format!("eigenvector for {lambda} in block d={}", b.d),
                            residual,
                        });
                    }
                    Ok(EigenPair {
                        d: b.d,
                        value: lambda,
                        block_vector: v,
                        residual,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_block {
        out.extend(r?);
    }
    out.sort_by(|x, y| x.value.re.total_cmp(&y.value.re).then(x.value.im.total_cmp(&y.value.im)));
    Ok(out)
}

// Extended precision for the convergence study. At N = 20 the truncation
// error of the lowest eigenvalues is far below f64 resolution, so comparing
// errors across N needs more digits than a double provides.

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// `√(1+γ²)` in double-double.
pub fn omega_extended(gamma: f64) -> TwoFloat {
    (dd(1.0) + dd(gamma) * dd(gamma)).sqrt()
}

/// Newton refinement of a real eigenvalue of an `H` or `H*` block on its
/// characteristic polynomial, evaluated in double-double.
///
/// The polynomial's coefficients are exact there: the diagonal is integral
/// and each coupling product is `−γ²(m+1)(n+1)`.
pub fn refine_real_eigenvalue(block: &FockBlock, gamma: f64, guess: f64) -> Option<TwoFloat> {
    let g2 = dd(gamma) * dd(gamma);
    let diag: Vec<TwoFloat> = block.states.iter().map(|&(m, n)| dd((m + n + 1) as f64)).collect();
    let products: Vec<TwoFloat> = block.states[..block.states.len() - 1]
        .iter()
        .map(|&(m, n)| -(g2 * dd(((m + 1) * (n + 1)) as f64)))
        .collect();
    let mut lambda = dd(guess);
    for _ in 0..60 {
        // p_j = (a_j − λ)p_{j−1} − β_{j−1}p_{j−2}, with derivatives; rescaled as it goes
        let (mut p_prev, mut p) = (dd(0.0), dd(1.0));
        let (mut dp_prev, mut dp) = (dd(0.0), dd(0.0));
        for (j, a) in diag.iter().enumerate() {
            let beta = if j > 0 { products[j - 1] } else { dd(0.0) };
            let shift = *a - lambda;
            let p_next = shift * p - beta * p_prev;
            let dp_next = shift * dp - p - beta * dp_prev;
            p_prev = p;
            p = p_next;
            dp_prev = dp;
            dp = dp_next;
            let size = p.hi().abs().max(dp.hi().abs());
            if size > 1e100 || (size < 1e-100 && size > 0.0) {
                let s = dd(size.recip());
                p *= s;
                p_prev *= s;
                dp *= s;
                dp_prev *= s;
            }
        }
        if dp.hi() == 0.0 || !dp.hi().is_finite() || !p.hi().is_finite() {
            return None;
        }
        let step = p / dp;
        lambda -= step;
        if step.hi().abs() <= 1e-31 * lambda.hi().abs() {
            return Some(lambda);
        }
    }
    None
}

/// One eigenvalue of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub truncation: usize,
    pub index: usize,
    pub d: i64,
    pub re: f64,
    /// Low part of the double-double value when refined, otherwise 0.
    pub re_lo: f64,
    pub im: f64,
    pub closed_form: f64,
    /// `|λ − (1+m+n)ω|`, from double-double values where `λ` is real.
    pub abs_err: f64,
    pub refined: bool,
}

/// Eigenvalues of `H_N` matched to the closed forms `(1+|d|+2k)ω`.
///
/// Within each block the `k`-th eigenvalue by real part is paired with
/// `(1+|d|+2k)ω`; the result is sorted by closed form, then by `d`.
pub fn spectrum_with_closed_forms(truncation: usize, gamma: f64) -> Result<Vec<ConvergenceRow>> {
    let a = build_matrix(MatrixKind::H, truncation, gamma)?;
    let spectra = block_spectra(&a)?;
    let w = omega_extended(gamma);
    let mut rows: Vec<(TwoFloat, ConvergenceRow)> = a
        .blocks
        .par_iter()
        .zip(spectra.par_iter())
        .flat_map_iter(|(b, s)| {
            s.eigenvalues.iter().enumerate().map(move |(k, &lambda)| {
                let closed = dd((1 + b.d.unsigned_abs() as usize + 2 * k) as f64) * w;
                let refined = if lambda.im == 0.0 {
                    refine_real_eigenvalue(b, gamma, lambda.re)
                        .filter(|r| (r.hi() - lambda.re).abs() <= 1e-8 * lambda.re.abs().max(1.0))
                } else {
                    None
                };
                let abs_err = match refined {
                    Some(r) => {
                        let e = r - closed;
                        e.hi().abs()
                    }
                    None => (lambda - Complex64::new(closed.hi(), 0.0)).norm(),
                };
                (
                    closed,
                    ConvergenceRow {
                        truncation,
                        index: 0,
                        d: b.d,
                        re: refined.map_or(lambda.re, |r| r.hi()),
                        re_lo: refined.map_or(0.0, |r| r.lo()),
                        im: lambda.im,
                        closed_form: closed.hi(),
                        abs_err,
                        refined: refined.is_some(),
                    },
                )
            })
        })
        .collect();
    rows.sort_by(|x, y| x.0.hi().total_cmp(&y.0.hi()).then(x.1.d.cmp(&y.1.d)));
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (_, mut r))| {
            r.index = i;
            r
        })
        .collect())
}

/// The `count` lowest rows of [`spectrum_with_closed_forms`].
pub fn lowest_eigenvalue_errors(truncation: usize, gamma: f64, count: usize) -> Result<Vec<ConvergenceRow>> {
    let mut rows = spectrum_with_closed_forms(truncation, gamma)?;
    rows.truncate(count);
    Ok(rows)
}

// Numerical range.

/// `E_θ = √(cos²θ − γ²sin²θ)`, the distance from the origin of the support
/// line of the numerical range in direction `θ`; `None` where it is not real.
pub fn support_energy(theta: f64, gamma: f64) -> Option<f64> {
    let (s, c) = theta.sin_cos();
    let e2 = c * c - gamma * gamma * s * s;
    (e2 > 0.0).then(|| e2.sqrt())
}

/// `dE_θ/dθ = −(1+γ²) sinθ cosθ / E_θ`.
pub fn support_energy_derivative(theta: f64, gamma: f64) -> Option<f64> {
    let e = support_energy(theta, gamma)?;
    let (s, c) = theta.sin_cos();
    Some(-(1.0 + gamma * gamma) * s * c / e)
}

/// `n` equally spaced angles on `[−θ_max, θ_max]`.
pub fn theta_grid(steps: usize, theta_max: f64) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps)
            .map(|i| -theta_max + 2.0 * theta_max * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Smallest eigenvalue of the truncated `Re(e^{−iθ}H)`.
pub fn hermitian_part_min_eigenvalue(truncation: usize, gamma: f64, theta: f64) -> Result<f64> {
    let a = build_matrix(MatrixKind::HermitianPart { theta }, truncation, gamma)?;
    Ok(a.blocks
        .iter()
        .map(|b| {
            let diag: Vec<f64> = b.matrix.diag.iter().map(|z| z.re).collect();
            let off_sq: Vec<f64> = b.matrix.sub.iter().map(|z| z.norm_sqr()).collect();
            tridiagonal_eigenvalue(&diag, &off_sq, 0)
        })
        .fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericalRangePoint {
    pub theta: f64,
    pub e_numeric: f64,
    pub e_closed: f64,
    pub x: f64,
    pub y: f64,
    pub envelope_y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericalRangeBoundary {
    pub gamma: f64,
    pub truncation: usize,
    pub points: Vec<NumericalRangePoint>,
    /// Angles where no real support line exists.
    pub skipped: Vec<f64>,
}

/// Support-line energies of the truncation against the closed form, with the
/// boundary point of the envelope `x cosθ + y sinθ = E_θ`.
pub fn numerical_range_boundary(truncation: usize, gamma: f64, thetas: &[f64]) -> Result<NumericalRangeBoundary> {
    if let Some(t) = thetas.iter().find(|t| !(t.abs() < FRAC_PI_2)) {
        return Err(Error::InvalidParameter(format!("θ = {t} is outside (−π/2, π/2)")));
    }
    let rows: Vec<Result<Option<NumericalRangePoint>>> = thetas
        .par_iter()
        .map(|&theta| {
            let (Some(e), Some(de)) = (support_energy(theta, gamma), support_energy_derivative(theta, gamma)) else {
                return Ok(None);
            };
            let e_numeric = hermitian_part_min_eigenvalue(truncation, gamma, theta)?;
            let (s, c) = theta.sin_cos();
            let x = e * c - de * s;
            let y = e * s + de * c;
            let envelope_y = y.signum() * gamma.abs() * (x * x - 1.0).max(0.0).sqrt();
            Ok(Some(NumericalRangePoint {
                theta,
                e_numeric,
                e_closed: e,
                x,
                y,
                envelope_y,
            }))
        })
        .collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (theta, r) in thetas.iter().zip(rows) {
        match r? {
            Some(p) => points.push(p),
            None => skipped.push(*theta),
        }
    }
    Ok(NumericalRangeBoundary {
        gamma,
        truncation,
        points,
        skipped,
    })
}

// Pseudospectra.

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// `[−1,8]×[−4,4]` at 161×161.
    pub const DEFAULT: GridSpec = GridSpec {
        re_min: -1.0,
        re_max: 8.0,
        im_min: -4.0,
        im_max: 4.0,
        nx: 161,
        ny: 161,
    };

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.re_min, self.re_max, self.im_min, self.im_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite".into()));
        }
        if !(1..=512).contains(&self.nx) || !(1..=512).contains(&self.ny) {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be within 1..=512 per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        if self.re_min > self.re_max || self.im_min > self.im_max {
            return Err(Error::InvalidParameter("grid bounds must satisfy min ≤ max".into()));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (min + max)];
        }
        (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
    }

    /// Grid points, imaginary part in the outer loop.
    pub fn points(&self) -> Vec<Complex64> {
        let re = Self::axis(self.re_min, self.re_max, self.nx);
        Self::axis(self.im_min, self.im_max, self.ny)
            .into_iter()
            .flat_map(|im| re.iter().map(move |&r| Complex64::new(r, im)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    pub spec: GridSpec,
    pub points: Vec<Complex64>,
    /// `σ_min(zI − A)` per point; `None` where the solver failed.
    pub sigma_min: Vec<Option<f64>>,
}

struct SolverBlock {
    matrix: Tridiagonal,
    /// Bounding box of the block's numerical range.
    re_range: (f64, f64),
    im_range: (f64, f64),
    eigenvalues: Vec<Complex64>,
}

impl SolverBlock {
    fn lower_bound(&self, z: Complex64) -> f64 {
        let gap = |v: f64, (lo, hi): (f64, f64)| (lo - v).max(v - hi).max(0.0);
        gap(z.re, self.re_range).hypot(gap(z.im, self.im_range))
    }

    fn eigen_distance(&self, z: Complex64) -> f64 {
        self.eigenvalues.iter().map(|l| (z - l).norm()).fold(f64::INFINITY, f64::min)
    }
}

fn hermitian_range(diag: Vec<f64>, off_sq: Vec<f64>) -> (f64, f64) {
    if diag.is_empty() {
        return (0.0, 0.0);
    }
    let lo = tridiagonal_eigenvalue(&diag, &off_sq, 0);
    let hi = tridiagonal_eigenvalue(&diag, &off_sq, diag.len() - 1);
    // bisection is accurate to a few ulps of the scale; widen to stay a bound
    let pad = 8.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    (lo - pad, hi + pad)
}

/// Smallest singular values of `zI − A` exploiting the block structure.
///
/// Each block is bounded below by the distance from `z` to a box containing
/// its numerical range, which prunes most blocks; candidates are visited in
/// order of distance to their eigenvalues.
pub struct ResolventSolver {
    blocks: Vec<SolverBlock>,
}

impl ResolventSolver {
    pub fn new(a: &FockMatrix) -> Result<Self> {
        let spectra = block_spectra(a)?;
        let blocks = a
            .blocks
            .iter()
            .zip(spectra)
            .map(|(b, s)| {
                let t = &b.matrix;
                let re_off: Vec<f64> = t.sub.iter().zip(&t.sup).map(|(l, u)| (0.5 * (l + u.conj())).norm_sqr()).collect();
                let im_off: Vec<f64> = t
                    .sub
                    .iter()
                    .zip(&t.sup)
                    .map(|(l, u)| (0.5 * (l - u.conj())).norm_sqr())
                    .collect();
                SolverBlock {
                    matrix: t.clone(),
                    re_range: hermitian_range(t.diag.iter().map(|z| z.re).collect(), re_off),
                    im_range: hermitian_range(t.diag.iter().map(|z| z.im).collect(), im_off),
                    eigenvalues: s.eigenvalues,
                }
            })
            .collect();
        Ok(Self { blocks })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut all: Vec<Complex64> = self.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect();
        sort_complex(&mut all);
        all
    }

    /// `σ_min(zI − A)`, or `None` if a block solve produced a non-finite value.
    pub fn sigma_min(&self, z: Complex64) -> Option<f64> {
        let mut order: Vec<(f64, f64, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.lower_bound(z), b.eigen_distance(z), i))
            .collect();
        order.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.2.cmp(&y.2)));
        let mut best = f64::INFINITY;
        for (lb, _, i) in order {
            if lb >= best {
                continue;
            }
            let t = self.blocks[i].matrix.shifted_negative(z);
            if let Some(est) = tridiagonal_min_singular_below(&t, best) {
                if !est.sigma.is_finite() {
                    return None;
                }
                best = best.min(est.sigma);
            }
        }
        best.is_finite().then_some(best)
    }
}

/// `σ_min(zI − A)` over a grid; points are independent and evaluated in parallel.
pub fn pseudospectrum(a: &FockMatrix, spec: &GridSpec) -> Result<SpectralGrid> {
    spec.validate()?;
    let solver = ResolventSolver::new(a)?;
    let points = spec.points();
    let sigma_min = points.par_iter().map(|&z| solver.sigma_min(z)).collect();
    Ok(SpectralGrid {
        spec: *spec,
        points,
        sigma_min,
    })
}

// Accretivity.

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolventRow {
    pub re: f64,
    pub im: f64,
    pub sigma_min: f64,
    /// `|Re z|`
    pub bound: f64,
    pub holds: bool,
}

/// Checks `σ_min(zI − A) ≥ |Re z|` at points of the open left half-plane.
pub fn resolvent_bounds(a: &FockMatrix, zs: &[Complex64]) -> Result<Vec<ResolventRow>> {
    if let Some(z) = zs.iter().find(|z| !(z.re < 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "resolvent sample {z} must have negative real part"
        )));
    }
    let solver = ResolventSolver::new(a)?;
    zs.iter()
        .map(|&z| {
            let sigma = solver.sigma_min(z).ok_or_else(|| Error::NoConvergence {
                what: format!("smallest singular value at {z}"),
                residual: f64::NAN,
            })?;
            Ok(ResolventRow {
                re: z.re,
                im: z.im,
                sigma_min: sigma,
                bound: z.re.abs(),
                holds: sigma >= z.re.abs(),
            })
        })
        .collect()
}

/// `⟨Aψ, ψ⟩` for `count` random unit vectors.
///
/// Even samples have independent complex Gaussian entries on the whole basis;
/// odd samples are supported on `m, n ≤ 3`, which probes the vertex region of
/// the numerical range where full-support vectors rarely land.
pub fn rayleigh_quotients(a: &FockMatrix, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = a.dimension();
    let low = 3.min(a.truncation);
    (0..count)
        .map(|s| {
            let mut v: Vec<Complex64> = (0..dim)
                .map(|i| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let (m, n) = a.state(i);
                    if s % 2 == 1 && (m > low || n > low) {
                        Complex64::default()
                    } else {
                        Complex64::new(re, im)
                    }
                })
                .collect();
            let nv = norm(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            let av = a.mul_vec(&v);
            v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
        })
        .collect()
}

/// `x ≥ 1 − 1e−10` and `y² − γ²(x² − 1) ≤ 1e−8`.
pub fn in_hyperbolic_region(q: Complex64, gamma: f64) -> bool {
    q.re >= 1.0 - 1e-10 && q.im * q.im - gamma * gamma * (q.re * q.re - 1.0) <= 1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayleighSample {
    pub re: f64,
    pub im: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccretivityReport {
    pub resolvent: Vec<ResolventRow>,
    pub rayleigh: Vec<RayleighSample>,
}

impl AccretivityReport {
    pub fn all_hold(&self) -> bool {
        self.resolvent.iter().all(|r| r.holds) && self.rayleigh.iter().all(|r| r.inside)
    }
}

pub fn accretivity_check(
    truncation: usize,
    gamma: f64,
    zs: &[Complex64],
    samples: usize,
    seed: u64,
) -> Result<AccretivityReport> {
    let a = build_matrix(MatrixKind::H, truncation, gamma)?;
    let resolvent = resolvent_bounds(&a, zs)?;
    let rayleigh = rayleigh_quotients(&a, samples, seed)
        .into_iter()
        .map(|q| RayleighSample {
            re: q.re,
            im: q.im,
            inside: in_hyperbolic_region(q, gamma),
        })
        .collect();
    Ok(AccretivityReport { resolvent, rayleigh })
}

/// Number of eigenvalues of the Hermitian block below `x`; exposed for tests
/// of the numerical-range bound.
pub fn hermitian_block_count_below(block: &FockBlock, x: f64) -> usize {
    let diag: Vec<f64> = block.matrix.diag.iter().map(|z| z.re).collect();
    let off_sq: Vec<f64> = block.matrix.sub.iter().map(|z| z.norm_sqr()).collect();
    sturm_count(&diag, &off_sq, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_truncation() {
        let a = build_matrix(MatrixKind::H, 0, 0.7).unwrap();
        assert_eq!(a.dimension(), 1);
        assert_eq!(a.entry(0, 0), c(1.0, 0.0));
    }

    #[test]
    fn ladder_rule_entry() {
        // oracle: a*b*|0,0⟩ = |1,1⟩, with coefficient −γ in H
        let a = build_matrix(MatrixKind::H, 2, 0.5).unwrap();
        assert_eq!(a.entry(a.index(1, 1), a.index(0, 0)), c(-0.5, 0.0));
        assert_eq!(a.entry(a.index(0, 0), a.index(1, 1)), c(0.5, 0.0));
        // ab|2,1⟩ = √2·√1 |1,0⟩
        assert!((a.entry(a.index(1, 0), a.index(2, 1)) - c(0.5 * 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(a.entry(a.index(1, 0), a.index(0, 0)), Complex64::default());
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let a = build_matrix(MatrixKind::H, 4, 0.0).unwrap();
        let dense = a.to_dense();
        for r in 0..a.dimension() {
            for col in 0..a.dimension() {
                let (m, n) = a.state(r);
                let expected = if r == col { (m + n + 1) as f64 } else { 0.0 };
                assert_eq!(dense[(r, col)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn adjoint_matrix_is_conjugate_transpose() {
        let h = build_matrix(MatrixKind::H, 3, 0.4).unwrap().to_dense();
        let hs = build_matrix(MatrixKind::Hstar, 3, 0.4).unwrap().to_dense();
        assert_eq!(h.adjoint(), hs);
    }

    #[test]
    fn hermitian_part_is_exactly_hermitian() {
        let a = build_matrix(MatrixKind::HermitianPart { theta: 0.7 }, 5, 0.5).unwrap();
        assert!(a.is_hermitian());
        let d = a.to_dense();
        assert_eq!(d.adjoint(), d);
        // equals (e^{−iθ}H + e^{iθ}H*)/2
        let h = build_matrix(MatrixKind::H, 5, 0.5).unwrap().to_dense();
        let e = Complex64::from_polar(1.0, -0.7);
        let expected = (h.map(|z| z * e) + h.adjoint().map(|z| z * e.conj())) * c(0.5, 0.0);
        assert!((expected - d).norm() < 1e-13);
    }

    #[test]
    fn hermitian_part_rejects_large_angles() {
        assert!(build_matrix(MatrixKind::HermitianPart { theta: FRAC_PI_2 }, 3, 0.5).is_err());
        assert!(build_matrix(MatrixKind::HermitianPart { theta: -2.0 }, 3, 0.5).is_err());
    }

    #[test]
    fn block_matvec_matches_dense() {
        let a = build_matrix(MatrixKind::H, 4, 0.3).unwrap();
        let v: Vec<Complex64> = (0..a.dimension()).map(|i| c(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        let dense = a.to_dense() * nalgebra::DVector::from_vec(v.clone());
        for (x, y) in a.mul_vec(&v).iter().zip(dense.iter()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_coupling_multiplicities() {
        let a = build_matrix(MatrixKind::H, 3, 0.0).unwrap();
        let eig = eigenvalues(&a).unwrap();
        for k in 0..=3usize {
            let count = eig.iter().filter(|z| (z.re - (k + 1) as f64).abs() < 1e-12).count();
            assert_eq!(count, k + 1);
        }
    }

    #[test]
    fn trace_is_independent_of_coupling() {
        let t0 = build_matrix(MatrixKind::H, 6, 0.0).unwrap().trace();
        let t1 = build_matrix(MatrixKind::H, 6, 0.8).unwrap().trace();
        assert_eq!(t0, t1);
        let sum: Complex64 = eigenvalues(&build_matrix(MatrixKind::H, 6, 0.8).unwrap()).unwrap().iter().sum();
        assert!((sum - t1).norm() < 1e-9);
    }

    #[test]
    fn blocks_agree_with_dense_solve() {
        let a = build_matrix(MatrixKind::H, 5, 0.5).unwrap();
        let blocks = eigenvalues(&a).unwrap();
        let mut dense = dense_eigenvalues(&a).unwrap();
        assert_eq!(blocks.len(), dense.len());
        for z in &blocks {
            let (i, dist) = dense
                .iter()
                .enumerate()
                .map(|(i, w)| (i, (w - z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            assert!(dist < 1e-10, "{z} unmatched ({dist:e})");
            dense.remove(i);
        }
    }

    #[test]
    fn eigenpair_residuals() {
        let a = build_matrix(MatrixKind::H, 12, 0.5).unwrap();
        let norm_a = a.spectral_norm();
        for p in eigenpairs(&a).unwrap() {
            let v = p.full_vector(&a);
            let av = a.mul_vec(&v);
            let r: f64 = av.iter().zip(&v).map(|(x, y)| (x - p.value * y).norm_sqr()).sum::<f64>().sqrt();
            assert!(r <= 1e-10 * norm_a);
        }
    }

    #[test]
    fn spectral_norm_matches_dense_svd() {
        let a = build_matrix(MatrixKind::H, 4, 0.6).unwrap();
        let svd = a.to_dense().singular_values();
        let max = svd.iter().fold(0.0f64, |m, s| m.max(*s));
        assert!((a.spectral_norm() - max).abs() < 1e-10 * max);
    }

    #[test]
    fn sigma_min_matches_dense_svd() {
        let a = build_matrix(MatrixKind::H, 4, 0.5).unwrap();
        let solver = ResolventSolver::new(&a).unwrap();
        for z in [c(-1.0, 0.0), c(2.1, 0.3), c(5.0, -2.0), c(1.118, 0.0)] {
            let shifted = DMatrix::from_diagonal_element(a.dimension(), a.dimension(), z) - a.to_dense();
            let oracle = shifted.singular_values().iter().fold(f64::INFINITY, |m, s| m.min(*s));
            let got = solver.sigma_min(z).unwrap();
            assert!((got - oracle).abs() < 1e-9 * oracle.max(1.0), "{z}: {got} vs {oracle}");
        }
    }

    #[test]
    fn lowest_eigenvalue_converges() {
        let rows = lowest_eigenvalue_errors(30, 0.5, 1).unwrap();
        assert!((rows[0].re - 1.25f64.sqrt()).abs() < 1e-6);
        assert!(rows[0].refined);
    }

    #[test]
    fn refinement_reaches_extended_precision() {
        // a 2×2 block with exactly known eigenvalues: d = 0, N = 1 has
        // diag (1, 3) and coupling product −γ², so λ = 2 ± √(1 − γ²)
        let a = build_matrix(MatrixKind::H, 1, 0.5).unwrap();
        let b = a.block(0);
        let r = refine_real_eigenvalue(b, 0.5, 1.2).unwrap();
        let exact = dd(2.0) - dd(0.75).sqrt();
        assert!((r - exact).hi().abs() < 1e-30);
    }

    #[test]
    fn support_energy_examples() {
        assert_eq!(support_energy(0.0, 0.5), Some(1.0));
        let e = support_energy(std::f64::consts::FRAC_PI_4, 0.75).unwrap();
        assert!((e - 0.21875f64.sqrt()).abs() < 1e-15);
        assert!(support_energy(1.2, 0.5).is_none());
    }

    #[test]
    fn boundary_vertex_and_self_adjoint_case() {
        let b = numerical_range_boundary(10, 0.5, &[0.0]).unwrap();
        let p = &b.points[0];
        assert!((p.e_numeric - 1.0).abs() < 1e-12);
        assert!((p.x - 1.0).abs() < 1e-15 && p.y.abs() < 1e-15);
        let b = numerical_range_boundary(6, 0.0, &theta_grid(9, 1.2)).unwrap();
        for p in &b.points {
            assert!(p.y.abs() < 1e-12 && p.x >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn ritz_values_bound_the_support_energy_from_above() {
        for &theta in &[-0.9, -0.3, 0.4, 0.8] {
            let e = support_energy(theta, 0.5).unwrap();
            let e10 = hermitian_part_min_eigenvalue(10, 0.5, theta).unwrap();
            let e20 = hermitian_part_min_eigenvalue(20, 0.5, theta).unwrap();
            assert!(e20 >= e - 1e-12);
            assert!(e10 >= e20 - 1e-12);
        }
    }

    #[test]
    fn skips_angles_without_support_line() {
        let b = numerical_range_boundary(5, 0.5, &[1.3, 0.0]).unwrap();
        assert_eq!(b.skipped, vec![1.3]);
        assert_eq!(b.points.len(), 1);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::DEFAULT.validate().is_ok());
        let mut g = GridSpec::DEFAULT;
        g.nx = 513;
        assert!(g.validate().is_err());
        g.nx = 10;
        g.re_min = 9.0;
        assert!(g.validate().is_err());
        assert_eq!(GridSpec::DEFAULT.points().len(), 161 * 161);
    }

    #[test]
    fn resolvent_rejects_right_half_plane() {
        let a = build_matrix(MatrixKind::H, 3, 0.5).unwrap();
        assert!(resolvent_bounds(&a, &[c(0.0, 1.0)]).is_err());
    }

    #[test]
    fn zero_coupling_rayleigh_quotients_are_real() {
        let a = build_matrix(MatrixKind::H, 5, 0.0).unwrap();
        for q in rayleigh_quotients(&a, 50, 7) {
            assert!(q.im.abs() < 1e-14);
            assert!(q.re >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn rayleigh_quotients_are_deterministic() {
        let a = build_matrix(MatrixKind::H, 5, 0.5).unwrap();
        assert_eq!(rayleigh_quotients(&a, 10, 3), rayleigh_quotients(&a, 10, 3));
    }
}
