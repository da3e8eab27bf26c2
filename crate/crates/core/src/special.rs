//! Hermite polynomials, Gauss–Hermite and Gauss–Legendre rules, and
//! integration against coupled Gaussians `e^{−Ax²−By²+2Cxy}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigenvalues;

/// Physicists' Hermite polynomial `H_n(t)` and its derivative `2n·H_{n−1}(t)`.
pub fn hermite_eval(n: usize, t: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = 2.0 * t * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    (cur, 2.0 * n as f64 * prev)
}

/// Values `ĥ_k(t) = π^{−1/4}(2^k k!)^{−1/2} H_k(t)` for `k = 0..=n_max`,
/// stored as `values[k]·e^{ln_scale}` so that large degrees and arguments
/// cannot overflow.
///
/// These are orthonormal for the weight `e^{−t²}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledHermite {
    pub values: Vec<f64>,
    pub ln_scale: f64,
}

impl ScaledHermite {
    pub fn new(n_max: usize, t: f64) -> Self {
        const LIMIT: f64 = 1e150;
        let mut values = Vec::with_capacity(n_max + 1);
        let mut ln_scale = 0.0;
        values.push(PI.powf(-0.25));
        if n_max >= 1 {
            values.push(2f64.sqrt() * t * values[0]);
        }
        for k in 1..n_max {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * t * values[k] - (kf / (kf + 1.0)).sqrt() * values[k - 1];
            values.push(next);
            if next.abs() > LIMIT {
                for v in values.iter_mut() {
                    *v /= LIMIT;
                }
                ln_scale += LIMIT.ln();
            }
        }
        Self { values, ln_scale }
    }

    /// `ĥ_k(t)`, possibly overflowing to infinity.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k] * self.ln_scale.exp()
    }

    /// Scaled `d^j/dt^j ĥ_k(t)` for `j ≤ 2`, using `ĥ_k′ = √(2k)·ĥ_{k−1}`.
    pub fn scaled_derivative(&self, k: usize, j: u32) -> f64 {
        let mut factor = 1.0;
        let mut idx = k;
        for _ in 0..j {
            if idx == 0 {
                return 0.0;
            }
            factor *= (2.0 * idx as f64).sqrt();
            idx -= 1;
        }
        factor * self.values[idx]
    }
}

/// Nodes and weights for `∫ f(t) w(t) dt ≈ Σ wᵢ f(tᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `ln wᵢ`, finite even where `wᵢ` underflows.
    pub ln_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Builds a symmetric rule from the nonnegative nodes of a Jacobi matrix,
/// polishing each by Newton's method and mirroring.
fn symmetric_rule(
    n: usize,
    diag_off_sq: Vec<f64>,
    what: &str,
    node_and_ln_weight: impl Fn(f64) -> (f64, f64, f64),
) -> Result<QuadratureRule> {
    let eig = tridiagonal_eigenvalues(&vec![0.0; n], &diag_off_sq);
    let half = n / 2;
    let mut upper = Vec::with_capacity(n - half);
    // eig ascending; the largest n−half are ≥ 0 (the middle one is 0 for odd n)
    for (i, &guess) in eig[half..].iter().enumerate() {
        let mut t = if n % 2 == 1 && i == 0 { 0.0 } else { guess };
        let mut converged = n % 2 == 1 && i == 0;
        let mut step = f64::INFINITY;
        for _ in 0..50 {
            if converged {
                break;
            }
            let (_, _, dt) = node_and_ln_weight(t);
            step = dt;
            t -= dt;
            if dt.abs() <= 1e-15 * t.abs().max(1.0) {
                converged = true;
            }
        }
        if !converged && step.abs() > 1e-14 * t.abs().max(1.0) {
            return Err(Error::NoConvergence {
                what: format!("{what} node {i} of {n}"),
                residual: step.abs(),
            });
        }
        upper.push(t);
    }
    let mut nodes: Vec<f64> = upper[n % 2..].iter().rev().map(|t| -t).collect();
    nodes.extend(&upper);
    debug_assert_eq!(nodes.len(), n);
    let ln_weights: Vec<f64> = nodes.iter().map(|&t| node_and_ln_weight(t).1).collect();
    let weights = ln_weights.iter().map(|l| l.exp()).collect();
    Ok(QuadratureRule {
        n,
        nodes,
        weights,
        ln_weights,
    })
}

fn hermite_newton(n: usize, t: f64) -> (f64, f64, f64) {
    let h = ScaledHermite::new(n, t);
    let p = h.values[n];
    let dp = h.scaled_derivative(n, 1);
    // Christoffel weight 1/Σ_{k<n} ĥ_k(t)²
    let sum: f64 = h.values[..n].iter().map(|v| v * v).sum();
    let ln_w = -(sum.ln() + 2.0 * h.ln_scale);
    (p, ln_w, p / dp)
}

/// Gauss–Hermite rule for the weight `e^{−t²}`, `1 ≤ n ≤ 512`. Cached per `n`.
pub fn gauss_hermite(n: usize) -> Result<Arc<QuadratureRule>> {
    cached(&HERMITE_CACHE, n, || {
        if !(1..=512).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Hermite node count must be in 1..=512, got {n}"
            )));
        }
        let off_sq = (1..n).map(|k| k as f64 / 2.0).collect();
        symmetric_rule(n, off_sq, "Gauss-Hermite", |t| hermite_newton(n, t))
    })
}

fn legendre_newton(n: usize, t: f64) -> (f64, f64, f64) {
    let mut prev = 1.0;
    let mut cur = t;
    if n == 0 {
        return (1.0, 2f64.ln(), 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    // P_n′(t) = n(P_{n−1} − tP_n)/(1 − t²)
    let dp = n as f64 * (prev - t * cur) / (1.0 - t * t);
    let ln_w = (2.0 / ((1.0 - t * t) * dp * dp)).ln();
    (cur, ln_w, cur / dp)
}

/// Gauss–Legendre rule on `[−1, 1]`, `1 ≤ n ≤ 4096`. Cached per `n`.
pub fn gauss_legendre(n: usize) -> Result<Arc<QuadratureRule>> {
    cached(&LEGENDRE_CACHE, n, || {
        if !(1..=4096).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Legendre node count must be in 1..=4096, got {n}"
            )));
        }
        let off_sq = (1..n)
            .map(|k| {
                let k = k as f64;
                k * k / (4.0 * k * k - 1.0)
            })
            .collect();
        symmetric_rule(n, off_sq, "Gauss-Legendre", |t| legendre_newton(n, t))
    })
}

type RuleCache = OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>>;
static HERMITE_CACHE: RuleCache = OnceLock::new();
static LEGENDRE_CACHE: RuleCache = OnceLock::new();

fn cached(
    cache: &'static RuleCache,
    n: usize,
    build: impl FnOnce() -> Result<QuadratureRule>,
) -> Result<Arc<QuadratureRule>> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = map.lock().expect("rule cache poisoned").get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(build()?);
    map.lock()
        .expect("rule cache poisoned")
        .entry(n)
        .or_insert_with(|| Arc::clone(&rule));
    Ok(rule)
}

/// Tensor Gauss–Hermite scheme for `∫∫ f(x,y) e^{−Ax²−By²+2Cxy} dx dy`.
///
/// The quadratic form is diagonalized by a rotation `(x,y) = u·e₁ + v·e₂`
/// to `αu² + βv²`, then each axis is rescaled to the standard weight.
#[derive(Clone, Debug)]
pub struct CoupledGaussianScheme {
    pub alpha: f64,
    pub beta: f64,
    pub axis_u: [f64; 2],
    pub axis_v: [f64; 2],
    /// `1/√α` and `1/√β`.
    pub scale_u: f64,
    pub scale_v: f64,
    pub rule: Arc<QuadratureRule>,
}

impl CoupledGaussianScheme {
    pub fn new(a: f64, b: f64, c: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a * b - c * c > 0.0) {
            return Err(Error::NotIntegrable { a, b, c });
        }
        // quadratic form matrix [[A, −C], [−C, B]]
        let (alpha, beta, axis_u, axis_v) = if a == b {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            (a - c, a + c, [r, r], [r, -r])
        } else {
            let mean = 0.5 * (a + b);
            let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
            // (cos φ, sin φ) is the eigenvector of the larger eigenvalue
            let phi = 0.5 * (-2.0 * c).atan2(a - b);
            let (s, co) = phi.sin_cos();
            (mean - rad, mean + rad, [-s, co], [co, s])
        };
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::NotIntegrable { a, b, c });
        }
        Ok(Self {
            alpha,
            beta,
            axis_u,
            axis_v,
            scale_u: alpha.sqrt().recip(),
            scale_v: beta.sqrt().recip(),
            rule: gauss_hermite(n)?,
        })
    }

    /// Quadrature points `(x, y, weight)` with nonzero weight; the weight
    /// includes the Jacobian but not the Gaussian.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let rule = &self.rule;
        let jac = self.scale_u * self.scale_v;
        let mut out = Vec::with_capacity(rule.n * rule.n);
        for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let w = ws * wt * jac;
                if w == 0.0 {
                    continue;
                }
                let (u, v) = (s * self.scale_u, t * self.scale_v);
                out.push((
                    u * self.axis_u[0] + v * self.axis_v[0],
                    u * self.axis_u[1] + v * self.axis_v[1],
                    w,
                ));
            }
        }
        out
    }

    pub fn integrate<T>(&self, f: impl Fn(f64, f64) -> T) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
    {
        let rule = &self.rule;
        let mut total = T::default();
        for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
            if ws == 0.0 {
                continue;
            }
            let u = s * self.scale_u;
            let mut row = T::default();
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                if wt == 0.0 {
                    continue;
                }
                let v = t * self.scale_v;
                let x = u * self.axis_u[0] + v * self.axis_v[0];
                let y = u * self.axis_u[1] + v * self.axis_v[1];
                row = row + f(x, y) * wt;
            }
            total = total + row * ws;
        }
        total * (self.scale_u * self.scale_v)
    }
}

/// `∫∫ f(x,y) e^{−Ax²−By²+2Cxy} dx dy` with `n` nodes per axis.
pub fn integrate_coupled<T>(f: impl Fn(f64, f64) -> T, a: f64, b: f64, c: f64, n: usize) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    Ok(CoupledGaussianScheme::new(a, b, c, n)?.integrate(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_eval(0, 0.3), (1.0, 0.0));
        // H₂ = 4t² − 2, H₂′ = 8t
        assert_eq!(hermite_eval(2, 1.0), (2.0, 8.0));
        let (h3, d3) = hermite_eval(3, 0.5);
        // oracle: 8t³ − 12t and 24t² − 12
        assert!((h3 - (8.0 * 0.125 - 6.0)).abs() < 1e-15);
        assert!((d3 - (24.0 * 0.25 - 12.0)).abs() < 1e-15);
    }

    #[test]
    fn normalized_hermite_matches_physicists() {
        let t = 0.7;
        let h = ScaledHermite::new(10, t);
        let mut fact = 1.0;
        for k in 0..=10 {
            if k > 0 {
                fact *= k as f64;
            }
            let expected = hermite_eval(k, t).0 / (PI.sqrt() * 2f64.powi(k as i32) * fact).sqrt();
            assert!((h.value(k) - expected).abs() < 1e-13 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn scaled_hermite_survives_large_degree() {
        let h = ScaledHermite::new(600, 35.0);
        assert!(h.ln_scale > 0.0);
        assert!(h.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gauss_hermite_small_rules() {
        let r1 = gauss_hermite(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert!((r1.weights[0] - PI.sqrt()).abs() < 1e-15);
        let r2 = gauss_hermite(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r2.nodes[0] + s).abs() < 1e-15 && (r2.nodes[1] - s).abs() < 1e-15);
        for w in &r2.weights {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-15);
        }
        let r3 = gauss_hermite(3).unwrap();
        assert_eq!(r3.nodes[1], 0.0);
        assert!((r3.nodes[2] - 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fourth_moment() {
        let r = gauss_hermite(16).unwrap();
        let m4 = r.integrate(|t| t.powi(4));
        assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_counts() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(513).is_err());
    }

    #[test]
    fn largest_rule_has_finite_log_weights() {
        let r = gauss_hermite(512).unwrap();
        assert!(r.ln_weights.iter().all(|l| l.is_finite()));
        let total: f64 = r.weights.iter().sum();
        assert!((total - PI.sqrt()).abs() < 1e-13 * PI.sqrt());
    }

    #[test]
    fn gauss_legendre_polynomials() {
        let r = gauss_legendre(10).unwrap();
        assert!((r.integrate(|_| 1.0) - 2.0).abs() < 1e-14);
        assert!((r.integrate(|t| t.powi(18)) - 2.0 / 19.0).abs() < 1e-14);
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert!((r1.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn coupled_integrals() {
        let v = integrate_coupled(|_, _| 1.0, 1.0, 1.0, 0.0, 8).unwrap();
        assert!((v - PI).abs() < 1e-13);
        let v = integrate_coupled(|x, _| x * x, 1.0, 1.0, 0.0, 8).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-13);
        let g: f64 = 0.5;
        let w = (1.0 + g * g).sqrt();
        let v = integrate_coupled(|_, _| 1.0, 2.0 * w, 2.0 * w, 2.0 * g, 16).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-13);
        assert!(matches!(
            integrate_coupled(|_, _| 1.0, 1.0, 1.0, 1.0, 8),
            Err(Error::NotIntegrable { .. })
        ));
    }

    #[test]
    fn unequal_diagonal_exponent() {
        // oracle: ∫∫ e^{−Ax²−By²+2Cxy} = π/√(AB−C²), and ⟨x²⟩ = B/(2(AB−C²))
        let (a, b, c) = (2.0, 0.7, 0.4);
        let det = a * b - c * c;
        let z = integrate_coupled(|_, _| 1.0, a, b, c, 24).unwrap();
        assert!((z - PI / det.sqrt()).abs() < 1e-13);
        let x2 = integrate_coupled(|x, _| x * x, a, b, c, 24).unwrap();
        assert!((x2 / z - b / (2.0 * det)).abs() < 1e-13);
        let xy = integrate_coupled(|x, y| x * y, a, b, c, 24).unwrap();
        assert!((xy / z - c / (2.0 * det)).abs() < 1e-13);
    }
}
