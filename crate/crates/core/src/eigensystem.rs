//! Closed-form eigenfunctions of `H₀`, `H` and `H*`, their inner products,
//! and expansions in the physical (metric-weighted) Hilbert space.
//!
//! With `ω = √(1+γ²)` the oscillator eigenfunctions are
//! `Φ_mn = p_m(x) p_n(y) e^{−ω(x²+y²)}`, `p_k(x) = (2ω)^{1/4} ĥ_k(√(2ω)x)`,
//! unit-normalized. Right eigenfunctions of `H` are `Ψ_mn = e^{2γxy}Φ_mn`,
//! those of `H*` are `Ψ̃_mn = e^{−2γxy}Φ_mn`, all with eigenvalue `(1+m+n)ω`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::algebra::{hamiltonian, oscillator_hamiltonian, OperatorPoly};
use crate::error::{Error, Result};
use crate::special::{CoupledGaussianScheme, ScaledHermite};

/// Default Gauss–Hermite nodes per axis for inner products.
pub const DEFAULT_NODES: usize = 64;

pub fn omega(gamma: f64) -> f64 {
    gamma.hypot(1.0)
}

/// `(1+m+n)√(1+γ²)`, shared by `H₀`, `H` and `H*`.
pub fn eigenvalue(m: usize, n: usize, gamma: f64) -> f64 {
    (1 + m + n) as f64 * omega(gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    /// `Φ_mn`, eigenfunction of `H₀`.
    PhiBase,
    /// `Ψ_mn = e^{2γxy}Φ_mn`, eigenfunction of `H`.
    RightPsi,
    /// `Ψ̃_mn = e^{−2γxy}Φ_mn`, eigenfunction of `H*`.
    LeftPsiTilde,
}

impl ModeKind {
    /// Sign `s` of the factor `e^{2sγxy}`.
    pub fn exponent_sign(self) -> f64 {
        match self {
            ModeKind::PhiBase => 0.0,
            ModeKind::RightPsi => 1.0,
            ModeKind::LeftPsiTilde => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub kind: ModeKind,
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
}

/// Value and partial derivatives up to second order at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModeValue {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
    pub dxy: f64,
}

impl ModeValue {
    /// `∂x^k ∂y^l f`, for `k + l ≤ 2`.
    pub fn partial(&self, k: u32, l: u32) -> Option<f64> {
        match (k, l) {
            (0, 0) => Some(self.value),
            (1, 0) => Some(self.dx),
            (0, 1) => Some(self.dy),
            (2, 0) => Some(self.dxx),
            (0, 2) => Some(self.dyy),
            (1, 1) => Some(self.dxy),
            _ => None,
        }
    }
}

impl ModeFunction {
    pub fn new(kind: ModeKind, m: usize, n: usize, gamma: f64) -> Self {
        Self { kind, m, n, gamma }
    }

    pub fn phi(m: usize, n: usize, gamma: f64) -> Self {
        Self::new(ModeKind::PhiBase, m, n, gamma)
    }

    pub fn psi(m: usize, n: usize, gamma: f64) -> Self {
        Self::new(ModeKind::RightPsi, m, n, gamma)
    }

    pub fn psi_tilde(m: usize, n: usize, gamma: f64) -> Self {
        Self::new(ModeKind::LeftPsiTilde, m, n, gamma)
    }

    pub fn eigenvalue(&self) -> f64 {
        eigenvalue(self.m, self.n, self.gamma)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_with_derivatives(x, y).value
    }

    /// Value and partials, computed analytically from Hermite recurrences.
    ///
    /// Hermite factors are carried with a logarithmic scale that is folded
    /// into the exponential at the end, so high indices do not overflow.
    pub fn eval_with_derivatives(&self, x: f64, y: f64) -> ModeValue {
        let w = omega(self.gamma);
        let k = (2.0 * w).sqrt();
        let pre = k.sqrt(); // (2ω)^{1/4}
        let hx = ScaledHermite::new(self.m, k * x);
        let hy = ScaledHermite::new(self.n, k * y);
        let px = [0, 1, 2].map(|j| pre * k.powi(j as i32) * hx.scaled_derivative(self.m, j));
        let py = [0, 1, 2].map(|j| pre * k.powi(j as i32) * hy.scaled_derivative(self.n, j));

        let s = self.kind.exponent_sign() * 2.0 * self.gamma;
        let phi = -w * (x * x + y * y) + s * x * y;
        let (fx, fy) = (-2.0 * w * x + s * y, -2.0 * w * y + s * x);
        let (fxx, fyy, fxy) = (-2.0 * w, -2.0 * w, s);

        let scale = (phi + hx.ln_scale + hy.ln_scale).exp();
        let p = px[0] * py[0];
        let (p_x, p_y) = (px[1] * py[0], px[0] * py[1]);
        let (p_xx, p_yy, p_xy) = (px[2] * py[0], px[0] * py[2], px[1] * py[1]);
        ModeValue {
            value: scale * p,
            dx: scale * (p_x + p * fx),
            dy: scale * (p_y + p * fy),
            dxx: scale * (p_xx + 2.0 * p_x * fx + p * (fxx + fx * fx)),
            dyy: scale * (p_yy + 2.0 * p_y * fy + p * (fyy + fy * fy)),
            dxy: scale * (p_xy + p_x * fy + p_y * fx + p * (fxy + fx * fy)),
        }
    }

    /// Polynomial factor `p_m(x) p_n(y)` without any exponential.
    fn polynomial_part(&self, x: f64, y: f64) -> f64 {
        let w = omega(self.gamma);
        let k = (2.0 * w).sqrt();
        let hx = ScaledHermite::new(self.m, k * x);
        let hy = ScaledHermite::new(self.n, k * y);
        k * hx.values[self.m] * hy.values[self.n] * (hx.ln_scale + hy.ln_scale).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WhichOperator {
    H,
    Hstar,
    H0,
}

/// The three differential operators with a numerical coupling substituted.
///
/// They are taken from the exact algebra, so a vanishing residual also
/// checks the symbolic side.
#[derive(Clone, Debug)]
pub struct HamiltonianOperators {
    pub gamma: f64,
    h: OperatorPoly<f64>,
    h_star: OperatorPoly<f64>,
    h0: OperatorPoly<f64>,
}

impl HamiltonianOperators {
    pub fn new(gamma: f64) -> Result<Self> {
        let ham = hamiltonian();
        Ok(Self {
            gamma,
            h: ham.evaluate(gamma),
            h_star: ham.formal_adjoint()?.evaluate(gamma),
            h0: oscillator_hamiltonian().evaluate(gamma),
        })
    }

    pub fn operator(&self, which: WhichOperator) -> &OperatorPoly<f64> {
        match which {
            WhichOperator::H => &self.h,
            WhichOperator::Hstar => &self.h_star,
            WhichOperator::H0 => &self.h0,
        }
    }

    pub fn apply(&self, which: WhichOperator, f: &ModeFunction, x: f64, y: f64) -> f64 {
        let v = f.eval_with_derivatives(x, y);
        self.operator(which)
            .apply_at(x, y, |k, l| v.partial(k, l))
            .expect("Hamiltonians are second order")
    }

    /// `max |A f − E f| / max |E f|` over the given points.
    pub fn relative_residual(&self, which: WhichOperator, f: &ModeFunction, points: &[(f64, f64)]) -> f64 {
        let e = f.eigenvalue();
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for &(x, y) in points {
            let af = self.apply(which, f, x, y);
            let ef = e * f.eval(x, y);
            num = num.max((af - ef).abs());
            den = den.max(ef.abs());
        }
        num / den
    }
}

pub fn apply_hamiltonian(f: &ModeFunction, x: f64, y: f64, which: WhichOperator) -> Result<f64> {
    Ok(HamiltonianOperators::new(f.gamma)?.apply(which, f, x, y))
}

/// Weight of an inner product: `e^{c·xy}` with `c` = 0, −4γ or +4γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InnerProductKind {
    Flat,
    /// Metric weight `e^{−4γxy}` of the physical Hilbert space.
    Physical,
    Dual,
}

impl InnerProductKind {
    pub fn weight_coefficient(self, gamma: f64) -> f64 {
        match self {
            InnerProductKind::Flat => 0.0,
            InnerProductKind::Physical => -4.0 * gamma,
            InnerProductKind::Dual => 4.0 * gamma,
        }
    }
}

fn check_same_gamma(f: &ModeFunction, g: &ModeFunction) -> Result<()> {
    if f.gamma != g.gamma {
        return Err(Error::InvalidParameter(format!(
            "mode functions have different couplings {} and {}",
            f.gamma, g.gamma
        )));
    }
    Ok(())
}

/// Exponent `(A, B, C)` of `f·g·weight` in the form `e^{−Ax²−By²+2Cxy}`.
fn product_exponent(f: &ModeFunction, g: &ModeFunction, kind: InnerProductKind) -> (f64, f64, f64) {
    let w = omega(f.gamma);
    let c = f.gamma * (f.kind.exponent_sign() + g.kind.exponent_sign()) + 0.5 * kind.weight_coefficient(f.gamma);
    (2.0 * w, 2.0 * w, c)
}

/// `∫∫ f g · weight`, with every exponential folded into the quadrature
/// exponent so only the polynomial parts are evaluated at nodes.
pub fn inner_product(f: &ModeFunction, g: &ModeFunction, kind: InnerProductKind, n_nodes: usize) -> Result<f64> {
    check_same_gamma(f, g)?;
    let (a, b, c) = product_exponent(f, g, kind);
    let scheme = CoupledGaussianScheme::new(a, b, c, n_nodes)?;
    Ok(scheme.integrate(|x, y| f.polynomial_part(x, y) * g.polynomial_part(x, y)))
}

/// Same integral, but `f`, `g` and the weight are each evaluated in full at
/// the nodes and divided by the reference Gaussian, so cancellations between
/// their exponential factors happen numerically.
pub fn inner_product_pointwise(
    f: &ModeFunction,
    g: &ModeFunction,
    kind: InnerProductKind,
    n_nodes: usize,
) -> Result<f64> {
    check_same_gamma(f, g)?;
    let (a, b, c) = product_exponent(f, g, kind);
    let wc = kind.weight_coefficient(f.gamma);
    integrate_pointwise(a, b, c, n_nodes, |x, y| f.eval(x, y) * g.eval(x, y) * (wc * x * y).exp())
}

/// Matrix of [`inner_product_pointwise`] values for every pair `(fs[i], gs[j])`.
///
/// Each function is evaluated once per node, so this is much cheaper than
/// pairwise calls. All pairs must share one quadrature exponent.
pub fn pointwise_gram(
    fs: &[ModeFunction],
    gs: &[ModeFunction],
    kind: InnerProductKind,
    n_nodes: usize,
) -> Result<Vec<Vec<f64>>> {
    let (Some(f0), Some(g0)) = (fs.first(), gs.first()) else {
        return Ok(vec![Vec::new(); fs.len()]);
    };
    let exponent = product_exponent(f0, g0, kind);
    for f in fs {
        for g in gs {
            check_same_gamma(f, g)?;
            if product_exponent(f, g, kind) != exponent {
                return Err(Error::InvalidParameter(
                    "all pairs in a Gram matrix must share the same Gaussian exponent".into(),
                ));
            }
        }
    }
    let (a, b, c) = exponent;
    let wc = kind.weight_coefficient(f0.gamma);
    let scheme = CoupledGaussianScheme::new(a, b, c, n_nodes)?;
    let points = scheme.points();
    let factor: Vec<f64> = points
        .iter()
        .map(|&(x, y, w)| {
            let gauss = (-a * x * x - b * y * y + 2.0 * c * x * y).exp();
            if gauss == 0.0 {
                0.0
            } else {
                w * (wc * x * y).exp() / gauss
            }
        })
        .collect();
    let sample = |f: &ModeFunction| -> Vec<f64> { points.iter().map(|&(x, y, _)| f.eval(x, y)).collect() };
    let g_vals: Vec<Vec<f64>> = gs.iter().map(sample).collect();
    Ok(fs
        .iter()
        .map(|f| {
            let fv = sample(f);
            g_vals
                .iter()
                .map(|gv| fv.iter().zip(gv).zip(&factor).map(|((a, b), w)| a * b * w).sum())
                .collect()
        })
        .collect())
}

/// `⟨e^{−2γxy}f, e^{−2γxy}g⟩_Flat`, the metric-operator form of the physical product.
pub fn metric_form_inner_product(f: &ModeFunction, g: &ModeFunction, n_nodes: usize) -> Result<f64> {
    check_same_gamma(f, g)?;
    let gamma = f.gamma;
    let (a, b, c) = product_exponent(f, g, InnerProductKind::Physical);
    integrate_pointwise(a, b, c, n_nodes, |x, y| {
        let damp = (-2.0 * gamma * x * y).exp();
        (damp * f.eval(x, y)) * (damp * g.eval(x, y))
    })
}

fn integrate_pointwise(a: f64, b: f64, c: f64, n_nodes: usize, h: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let scheme = CoupledGaussianScheme::new(a, b, c, n_nodes)?;
    Ok(scheme.integrate(|x, y| {
        let gauss = (-a * x * x - b * y * y + 2.0 * c * x * y).exp();
        if gauss == 0.0 {
            0.0
        } else {
            h(x, y) / gauss
        }
    }))
}

/// `‖Ψ_mm‖²` in the flat product for `m = 0..=m_max`.
pub fn norm_growth(gamma: f64, m_max: usize, n_nodes: usize) -> Result<Vec<f64>> {
    (0..=m_max)
        .map(|m| {
            let psi = ModeFunction::psi(m, m, gamma);
            inner_product(&psi, &psi, InnerProductKind::Flat, n_nodes)
        })
        .collect()
}

/// Finite combination `Σ c_mn Ψ_mn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSuperposition {
    pub gamma: f64,
    pub terms: Vec<(usize, usize, f64)>,
}

impl ModeSuperposition {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| c * ModeFunction::psi(m, n, self.gamma).eval(x, y))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Amplitude {
    pub m: usize,
    pub n: usize,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expansion {
    pub amplitudes: Vec<Amplitude>,
    /// `⟪ψ, ψ⟫`
    pub norm_sq: f64,
    /// `|Σ|c|² − ⟪ψ,ψ⟫|`
    pub normalization_defect: f64,
    /// `⟪ψ − Σ cΨ, ψ − Σ cΨ⟫`
    pub residual: f64,
}

impl Expansion {
    pub fn coefficient(&self, m: usize, n: usize) -> Option<f64> {
        self.amplitudes
            .iter()
            .find(|a| a.m == m && a.n == n)
            .map(|a| a.coefficient)
    }
}

/// Amplitudes `c_mn = ⟪ψ, Ψ_mn⟫` for `m, n ≤ cutoff`, from samples of `ψ`
/// at quadrature nodes.
///
/// `ψ` is expected to decay like the `Ψ_mn`, i.e. `ψ·e^{−2γxy}` carries the
/// Gaussian `e^{−ω(x²+y²)}`.
pub fn expand_amplitudes(
    psi: impl Fn(f64, f64) -> f64,
    gamma: f64,
    cutoff: usize,
    n_nodes: usize,
) -> Result<Expansion> {
    let w = omega(gamma);
    let scheme = CoupledGaussianScheme::new(2.0 * w, 2.0 * w, 0.0, n_nodes)?;
    // the physical weight and the reference Gaussian are divided out of each sample
    let points: Vec<(f64, f64, f64, f64)> = scheme
        .points()
        .into_iter()
        .filter_map(|(x, y, wq)| {
            let gauss = (-2.0 * w * (x * x + y * y)).exp();
            (gauss != 0.0).then(|| (x, y, wq * (-4.0 * gamma * x * y).exp() / gauss, psi(x, y)))
        })
        .collect();
    let modes: Vec<(usize, usize)> = (0..=cutoff).flat_map(|m| (0..=cutoff).map(move |n| (m, n))).collect();
    let basis: Vec<Vec<f64>> = modes
        .iter()
        .map(|&(m, n)| {
            let f = ModeFunction::psi(m, n, gamma);
            points.iter().map(|&(x, y, _, _)| f.eval(x, y)).collect()
        })
        .collect();
    let amplitudes: Vec<Amplitude> = modes
        .iter()
        .zip(&basis)
        .map(|(&(m, n), vals)| Amplitude {
            m,
            n,
            coefficient: points.iter().zip(vals).map(|(p, b)| p.2 * p.3 * b).sum(),
        })
        .collect();
    let norm_sq: f64 = points.iter().map(|p| p.2 * p.3 * p.3).sum();
    let residual: f64 = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let approx: f64 = amplitudes.iter().zip(&basis).map(|(a, b)| a.coefficient * b[i]).sum();
            p.2 * (p.3 - approx).powi(2)
        })
        .sum();
    let sum_sq: f64 = amplitudes.iter().map(|a| a.coefficient * a.coefficient).sum();
    if residual > 1e-6 {
        warn!("expansion residual {residual:e} exceeds 1e-6; ψ is not in the span of the retained modes");
    }
    Ok(Expansion {
        amplitudes,
        norm_sq,
        normalization_defect: (sum_sq - norm_sq).abs(),
        residual,
    })
}
