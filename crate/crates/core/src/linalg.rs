//! Small structured kernels: symmetric/Hermitian tridiagonal bisection,
//! complex tridiagonal LU with partial pivoting, and a banded LDL* test for
//! positive definiteness of `T*T − s·I`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of eigenvalues strictly below `x` of the Hermitian tridiagonal
/// matrix with diagonal `diag` and squared off-diagonal moduli `off_sq`.
pub fn sturm_count(diag: &[f64], off_sq: &[f64], x: f64) -> usize {
    let scale = diag
        .iter()
        .map(|d| d.abs())
        .chain(off_sq.iter().map(|o| o.sqrt()))
        .fold(f64::MIN_POSITIVE, f64::max);
    let tiny = f64::EPSILON * scale;
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        q = if i == 0 {
            diag[0] - x
        } else {
            diag[i] - x - off_sq[i - 1] / q
        };
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Interval containing every eigenvalue (Gershgorin).
pub fn gershgorin(diag: &[f64], off_sq: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let off: Vec<f64> = off_sq.iter().map(|o| o.sqrt()).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1] } else { 0.0 } + if i + 1 < n { off[i] } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
pub fn tridiagonal_eigenvalue(diag: &[f64], off_sq: &[f64], k: usize) -> f64 {
    let (lo, hi) = gershgorin(diag, off_sq);
    bisect_between(diag, off_sq, k, lo, hi)
}

fn bisect_between(diag: &[f64], off_sq: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    let width = (hi - lo).abs().max(hi.abs()).max(lo.abs());
    lo -= f64::EPSILON * width;
    hi += f64::EPSILON * width;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(diag, off_sq, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// All eigenvalues in ascending order.
pub fn tridiagonal_eigenvalues(diag: &[f64], off_sq: &[f64]) -> Vec<f64> {
    let (lo, hi) = gershgorin(diag, off_sq);
    (0..diag.len())
        .map(|k| bisect_between(diag, off_sq, k, lo, hi))
        .collect()
}

/// LU factorization with partial pivoting of a complex tridiagonal matrix.
///
/// Row interchanges create one extra superdiagonal, so `U` has bandwidth two.
#[derive(Clone, Debug)]
pub struct TridiagonalLu {
    multipliers: Vec<Complex64>,
    swapped: Vec<bool>,
    u0: Vec<Complex64>,
    u1: Vec<Complex64>,
    u2: Vec<Complex64>,
}

impl TridiagonalLu {
    /// `sub[i] = A[i+1][i]`, `diag[i] = A[i][i]`, `sup[i] = A[i][i+1]`.
    ///
    /// Pivots below `ε·‖A‖` are replaced by that value so the factorization can
    /// still drive inverse iteration.
    pub fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64]) -> Self {
        let n = diag.len();
        let norm = diag
            .iter()
            .chain(sub)
            .chain(sup)
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let floor = f64::EPSILON * if norm > 0.0 { norm } else { 1.0 };
        let mut u0 = diag.to_vec();
        let mut u1: Vec<Complex64> = sup.to_vec();
        u1.push(Complex64::default());
        let mut u2 = vec![Complex64::default(); n];
        let mut lower: Vec<Complex64> = sub.to_vec();
        let mut multipliers = vec![Complex64::default(); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if lower[i].norm() > u0[i].norm() {
                // swap rows i and i+1
                swapped[i] = true;
                let next_diag = u0[i + 1];
                let next_sup = if i + 1 < n - 1 { u1[i + 1] } else { Complex64::default() };
                let m = u0[i] / lower[i];
                multipliers[i] = m;
                u0[i] = lower[i];
                let old_sup = u1[i];
                u1[i] = next_diag;
                u2[i] = next_sup;
                u0[i + 1] = old_sup - m * next_diag;
                if i + 1 < n - 1 {
                    u1[i + 1] = -m * next_sup;
                }
            } else {
                if u0[i].norm() < floor {
                    u0[i] = Complex64::new(floor, 0.0);
                }
                let m = lower[i] / u0[i];
                multipliers[i] = m;
                u0[i + 1] -= m * u1[i];
            }
            lower[i] = Complex64::default();
        }
        if n > 0 && u0[n - 1].norm() < floor {
            u0[n - 1] = Complex64::new(floor, 0.0);
        }
        Self {
            multipliers,
            swapped,
            u0,
            u1,
            u2,
        }
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.u0.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            let bi = b[i];
            b[i + 1] -= self.multipliers[i] * bi;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * b[i + 2];
            }
            b[i] = s / self.u0[i];
        }
    }
}

/// Complex tridiagonal matrix stored by diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.sub[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// `z·I − self`
    pub fn shifted_negative(&self, z: Complex64) -> Self {
        Self {
            sub: self.sub.iter().map(|a| -a).collect(),
            diag: self.diag.iter().map(|a| z - a).collect(),
            sup: self.sup.iter().map(|a| -a).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            sub: self.sup.iter().map(|a| a.conj()).collect(),
            diag: self.diag.iter().map(|a| a.conj()).collect(),
            sup: self.sub.iter().map(|a| a.conj()).collect(),
        }
    }

    /// Frobenius norm, an upper bound for the spectral norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.sub)
            .chain(&self.sup)
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Bands of the Hermitian pentadiagonal `T*T`: diagonal, first and second
    /// superdiagonal.
    pub fn gram_bands(&self) -> (Vec<f64>, Vec<Complex64>, Vec<Complex64>) {
        let n = self.len();
        // column j of T holds sup[j-1] (row j-1), diag[j] (row j), sub[j] (row j+1)
        let col = |j: usize, row: isize| -> Complex64 {
            let r = row - j as isize;
            match r {
                -1 if j >= 1 => self.sup[j - 1],
                0 => self.diag[j],
                1 if j + 1 < n => self.sub[j],
                _ => Complex64::default(),
            }
        };
        let dot = |i: usize, j: usize| -> Complex64 {
            let lo = (j as isize - 1).max(0);
            let hi = (i as isize + 1).min(n as isize - 1);
            (lo..=hi).map(|r| col(i, r).conj() * col(j, r)).sum()
        };
        let d0 = (0..n).map(|i| dot(i, i).re).collect();
        let d1 = (0..n.saturating_sub(1)).map(|i| dot(i, i + 1)).collect();
        let d2 = (0..n.saturating_sub(2)).map(|i| dot(i, i + 2)).collect();
        (d0, d1, d2)
    }
}

/// True if the Hermitian pentadiagonal matrix `M − shift·I` is positive definite.
///
/// `d0` is the real diagonal, `d1[i] = M[i][i+1]`, `d2[i] = M[i][i+2]`.
/// Uses an unpivoted LDL* factorization, which exists with positive pivots
/// exactly when the matrix is positive definite.
pub fn pentadiagonal_positive_definite(d0: &[f64], d1: &[Complex64], d2: &[Complex64], shift: f64) -> bool {
    let n = d0.len();
    let mut dm2 = 0.0; // D[i-2]
    let mut dm1 = 0.0; // D[i-1]
    let mut l1m1 = Complex64::default(); // L[i-1][i-2]
    for i in 0..n {
        let mut di = d0[i] - shift;
        let mut l2 = Complex64::default();
        if i >= 2 {
            l2 = d2[i - 2].conj() / dm2;
            di -= l2.norm_sqr() * dm2;
        }
        let mut l1 = Complex64::default();
        if i >= 1 {
            l1 = (d1[i - 1].conj() - l2 * dm2 * l1m1.conj()) / dm1;
            di -= l1.norm_sqr() * dm1;
        }
        if !(di > 0.0) {
            return false;
        }
        dm2 = dm1;
        dm1 = di;
        l1m1 = l1;
    }
    true
}

/// Smallest singular value of a complex tridiagonal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularEstimate {
    pub sigma: f64,
    /// True when the value came from inverse iteration (tight upper bound)
    /// rather than bisection on the Gram matrix alone.
    pub refined: bool,
}

/// Largest singular value of `t`, by bisection on definiteness of `s·I − T*T`.
pub fn tridiagonal_spectral_norm(t: &Tridiagonal) -> f64 {
    let (d0, d1, d2) = t.gram_bands();
    let neg0: Vec<f64> = d0.iter().map(|d| -d).collect();
    let neg1: Vec<Complex64> = d1.iter().map(|d| -d).collect();
    let neg2: Vec<Complex64> = d2.iter().map(|d| -d).collect();
    let mut lo = 0.0;
    let mut hi = t.frobenius_norm().powi(2) * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
    // sI − M positive definite ⇔ s > λ_max(M)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pentadiagonal_positive_definite(&neg0, &neg1, &neg2, -mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.sqrt()
}

/// Smallest singular value of `t`, or `None` if it is certainly not below `bound`.
///
/// Bisects on σ² using definiteness of `T*T − σ²I`. Small values, where the
/// Gram matrix loses relative accuracy, are refined by inverse iteration on `T`.
pub fn tridiagonal_min_singular_below(t: &Tridiagonal, bound: f64) -> Option<SingularEstimate> {
    let n = t.len();
    if n == 0 {
        return None;
    }
    let (d0, d1, d2) = t.gram_bands();
    let scale = t.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut hi = bound.min(scale * (1.0 + 1e-12));
    if pentadiagonal_positive_definite(&d0, &d1, &d2, hi * hi) {
        return None;
    }
    let mut lo = 0.0_f64;
    let tol = 1e-13 * scale;
    while hi - lo > tol.max(1e-12 * hi) {
        let mid = 0.5 * (lo + hi);
        if pentadiagonal_positive_definite(&d0, &d1, &d2, mid * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut sigma = hi;
    let mut refined = false;
    if sigma < 1e-2 * scale {
        if let Some(s) = inverse_iteration_sigma(t) {
            sigma = s;
            refined = true;
        }
    }
    Some(SingularEstimate { sigma, refined })
}

/// `‖T v‖` for the approximate right singular vector `v` of the smallest
/// singular value, found by inverse iteration on `T*T`.
pub fn inverse_iteration_sigma(t: &Tridiagonal) -> Option<f64> {
    let n = t.len();
    let lu = TridiagonalLu::factor(&t.sub, &t.diag, &t.sup);
    let adj = t.adjoint();
    let lu_adj = TridiagonalLu::factor(&adj.sub, &adj.diag, &adj.sup);
    // deterministic, generic start vector
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * (i as f64).sin(), 0.29 * (1.3 * i as f64).cos()))
        .collect();
    normalize(&mut v)?;
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        lu_adj.solve_in_place(&mut v);
        lu.solve_in_place(&mut v);
        normalize(&mut v)?;
        let r = norm(&t.mul_vec(&v));
        if r >= best * (1.0 - 1e-6) {
            best = best.min(r);
            break;
        }
        best = r;
    }
    best.is_finite().then_some(best)
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [Complex64]) -> Option<f64> {
    let nv = norm(v);
    if !(nv.is_finite() && nv > 0.0) {
        return None;
    }
    for z in v.iter_mut() {
        *z /= nv;
    }
    Some(nv)
}

/// Eigenvector of `t` for the (approximate) eigenvalue `lambda` by inverse iteration.
pub fn tridiagonal_eigenvector(t: &Tridiagonal, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = t.len();
    let scale = t.frobenius_norm().max(1.0);
    let shifted = t.shifted_negative(lambda);
    let lu = TridiagonalLu::factor(&shifted.sub, &shifted.diag, &shifted.sup);
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.41 * (i as f64).cos(), 0.23 * (0.7 * i as f64).sin()))
        .collect();
    normalize(&mut v).expect("nonzero start vector");
    let mut residual = f64::INFINITY;
    for _ in 0..6 {
        lu.solve_in_place(&mut v);
        if normalize(&mut v).is_none() {
            break;
        }
        let av = t.mul_vec(&v);
        residual = av
            .iter()
            .zip(&v)
            .map(|(a, x)| (a - lambda * x).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-13 * scale {
            break;
        }
    }
    if residual.is_finite() {
        Ok(v)
    } else {
        Err(Error::NoConvergence {
            what: "inverse iteration".into(),
            residual,
        })
    }
}
