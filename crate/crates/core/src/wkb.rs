//! Leading-order WKB phases for `h = αp² + βx² + iδxp` and the three
//! semiclassical overlap integrals over the classically allowed interval.
//!
//! The phase solves the Jacobi equation `α(S′)² + iδxS′ + βx² = E`:
//! `S′ = [−iδx + √(4αE − (4αβ+δ²)x²)]/(2α)`. Its imaginary part
//! `−δx²/(4α)` sets the modulus of `e^{iS/ℏ}`; the eigenfunction of the
//! adjoint carries the opposite sign.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gauss_legendre;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSummand {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `S`, phase of the eigenfunction of `h`.
    Right,
    /// `S̃`, phase of the eigenfunction of `h*`.
    LeftAdjoint,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Right => 1.0,
            Branch::LeftAdjoint => -1.0,
        }
    }
}

impl QuadraticSummand {
    pub fn new(alpha: f64, beta: f64, delta: f64, energy: f64) -> Result<Self> {
        let ok = [alpha, beta, delta, energy].iter().all(|v| v.is_finite());
        if !ok || !(alpha > 0.0) || !(beta > 0.0) || !(energy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "summand needs α > 0, β > 0, E > 0 (got α={alpha}, β={beta}, δ={delta}, E={energy})"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            delta,
            energy,
        })
    }

    /// `P²/8 + 2X² + iXP`
    pub fn capital(energy: f64) -> Result<Self> {
        Self::new(0.125, 2.0, 1.0, energy)
    }

    /// `p²/2 + x²/2 + ixp`
    pub fn lower(energy: f64) -> Result<Self> {
        Self::new(0.5, 0.5, 1.0, energy)
    }

    fn c(&self) -> f64 {
        4.0 * self.alpha * self.energy
    }

    fn k(&self) -> f64 {
        4.0 * self.alpha * self.beta + self.delta * self.delta
    }

    /// `x_t = √(4αE/(4αβ+δ²))`
    pub fn turning_point(&self) -> f64 {
        (self.c() / self.k()).sqrt()
    }

    fn check_allowed(&self, x: f64) -> Result<()> {
        let xt = self.turning_point();
        if x.abs() < xt {
            Ok(())
        } else {
            Err(Error::OutsideAllowedRegion { x, turning: xt })
        }
    }

    /// `S(x)` from the closed antiderivative, with `S(0) = 0`.
    pub fn phase(&self, x: f64, branch: Branch) -> Result<Complex64> {
        self.check_allowed(x)?;
        let (c, k) = (self.c(), self.k());
        let root = (c - k * x * x).sqrt();
        let arc = (x * (k / c).sqrt()).clamp(-1.0, 1.0).asin();
        let re = (0.5 * x * root + c / (2.0 * k.sqrt()) * arc) / (2.0 * self.alpha);
        let im = -branch.sign() * self.delta * x * x / (4.0 * self.alpha);
        Ok(Complex64::new(re, im))
    }

    /// `S′(x)`
    pub fn phase_derivative(&self, x: f64, branch: Branch) -> Result<Complex64> {
        self.check_allowed(x)?;
        let root = (self.c() - self.k() * x * x).sqrt();
        Ok(Complex64::new(root, -branch.sign() * self.delta * x) / (2.0 * self.alpha))
    }

    /// `α(S′)² ± iδxS′ + βx² − E`, the sign following the branch's Hamiltonian.
    pub fn jacobi_residual(&self, x: f64, branch: Branch) -> Result<Complex64> {
        let sp = self.phase_derivative(x, branch)?;
        let i_delta_x = Complex64::new(0.0, branch.sign() * self.delta * x);
        Ok(self.alpha * sp * sp + i_delta_x * sp + self.beta * x * x - self.energy)
    }
}

pub fn wkb_phase(s: &QuadraticSummand, x: f64, branch: Branch) -> Result<Complex64> {
    s.phase(x, branch)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WkbRow {
    pub hbar: f64,
    /// `∫|Ψ|²`, grows without bound as `ℏ → 0`.
    pub i1: f64,
    /// `∫|Ψ̃|²`, vanishes as `ℏ → 0`.
    pub i2: f64,
    /// `Re ∫ Ψ̄ Ψ̃`, stays at the interval length.
    pub i3: f64,
    pub i3_im: f64,
    pub ln_i1: f64,
    pub ln_i2: f64,
}

const PANEL_NODES: usize = 32;
const MAX_PANELS: usize = 1 << 14;

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln ∫_{−L}^{L} e^{g(x)} dx` by composite Gauss–Legendre, doubling the
/// panel count until the result stabilizes.
fn log_integral(half_width: f64, g: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    let rule = gauss_legendre(PANEL_NODES)?;
    let g = &g;
    let eval = |panels: usize| -> f64 {
        let h = 2.0 * half_width / panels as f64;
        let ln_half = (0.5 * h).ln();
        log_sum_exp((0..panels).flat_map(|p| {
            let mid = -half_width + (p as f64 + 0.5) * h;
            rule.nodes
                .iter()
                .zip(&rule.ln_weights)
                .map(move |(&t, &lw)| lw + ln_half + g(mid + 0.5 * h * t))
        }))
    };
    let mut panels = 1;
    let mut prev = eval(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() <= 1e-14 * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: what.into(),
        residual: f64::NAN,
    })
}

fn complex_integral(half_width: f64, f: impl Fn(f64) -> Complex64, what: &str) -> Result<Complex64> {
    let rule = gauss_legendre(PANEL_NODES)?;
    let eval = |panels: usize| -> Complex64 {
        let h = 2.0 * half_width / panels as f64;
        (0..panels)
            .map(|p| {
                let mid = -half_width + (p as f64 + 0.5) * h;
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&t, &w)| f(mid + 0.5 * h * t) * (w * 0.5 * h))
                    .sum::<Complex64>()
            })
            .sum()
    };
    let mut panels = 1;
    let mut prev = eval(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).norm() <= 1e-14 * cur.norm().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: what.into(),
        residual: f64::NAN,
    })
}

/// The three overlap integrals over `(−x_t, x_t)` for each `ℏ`.
pub fn wkb_integrals(s: &QuadraticSummand, hbars: &[f64]) -> Result<Vec<WkbRow>> {
    if let Some(h) = hbars.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
        return Err(Error::InvalidParameter(format!("ℏ must be positive, got {h}")));
    }
    let xt = s.turning_point();
    hbars
        .par_iter()
        .map(|&hbar| {
            // |e^{iS/ℏ}|² = e^{−2 Im S/ℏ}
            let ln_i1 = log_integral(xt, |x| -2.0 * s.phase(x, Branch::Right).map_or(0.0, |p| p.im) / hbar, "I1")?;
            let ln_i2 = log_integral(
                xt,
                |x| -2.0 * s.phase(x, Branch::LeftAdjoint).map_or(0.0, |p| p.im) / hbar,
                "I2",
            )?;
            let i3 = complex_integral(
                xt,
                |x| {
                    let (Ok(sr), Ok(sl)) = (s.phase(x, Branch::Right), s.phase(x, Branch::LeftAdjoint)) else {
                        return Complex64::default();
                    };
                    (Complex64::i() * (sl - sr.conj()) / hbar).exp()
                },
                "I3",
            )?;
            Ok(WkbRow {
                hbar,
                i1: ln_i1.exp(),
                i2: ln_i2.exp(),
                i3: i3.re,
                i3_im: i3.im,
                ln_i1,
                ln_i2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_points() {
        assert!((QuadraticSummand::capital(1.0).unwrap().turning_point() - 0.5).abs() < 1e-15);
        // 4·½·E / (1 + 1) = E
        assert!((QuadraticSummand::lower(2.0).unwrap().turning_point() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn phase_at_origin_vanishes() {
        let s = QuadraticSummand::capital(1.0).unwrap();
        assert_eq!(s.phase(0.0, Branch::Right).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn phase_matches_integrated_derivative() {
        // oracle: Gauss–Legendre integration of S′ from 0 to X
        let s = QuadraticSummand::capital(1.0).unwrap();
        let x = 0.25;
        let rule = gauss_legendre(40).unwrap();
        let integral: Complex64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| s.phase_derivative(0.5 * x * (t + 1.0), Branch::Right).unwrap() * (0.5 * x * w))
            .sum();
        let got = s.phase(x, Branch::Right).unwrap();
        assert!((got - integral).norm() < 1e-12);
        assert!((got.re - 0.676427).abs() < 1e-6);
        assert!((got.im + 0.125).abs() < 1e-15);
    }

    #[test]
    fn closed_form_of_the_capital_summand() {
        // X√(2E − 8X²) + (E/√2)·arctan(2X/√(E − 4X²)) for the real part
        let s = QuadraticSummand::capital(1.3).unwrap();
        for &x in &[0.1, -0.3, 0.5] {
            let e = 1.3f64;
            let expected = x * (2.0 * e - 8.0 * x * x).sqrt()
                + e / 2f64.sqrt() * (2.0 * x / (e - 4.0 * x * x).sqrt()).atan();
            assert!((s.phase(x, Branch::Right).unwrap().re - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn branches_are_conjugate() {
        let s = QuadraticSummand::lower(1.0).unwrap();
        let a = s.phase(0.4, Branch::Right).unwrap();
        let b = s.phase(0.4, Branch::LeftAdjoint).unwrap();
        assert_eq!(a.conj(), b);
    }

    #[test]
    fn jacobi_equation_both_branches() {
        let s = QuadraticSummand::lower(0.7).unwrap();
        for &x in &[-0.5, 0.0, 0.2, 0.8] {
            assert!(s.jacobi_residual(x, Branch::Right).unwrap().norm() < 1e-14);
            assert!(s.jacobi_residual(x, Branch::LeftAdjoint).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn forbidden_region_rejected() {
        let s = QuadraticSummand::capital(1.0).unwrap();
        assert!(matches!(s.phase(0.5, Branch::Right), Err(Error::OutsideAllowedRegion { .. })));
        assert!(s.phase(-0.7, Branch::LeftAdjoint).is_err());
    }

    #[test]
    fn invalid_summands_rejected() {
        assert!(QuadraticSummand::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(QuadraticSummand::new(1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn integrals_at_moderate_hbar() {
        let s = QuadraticSummand::capital(1.0).unwrap();
        let rows = wkb_integrals(&s, &[0.5]).unwrap();
        // oracle: ∫_{−1/2}^{1/2} e^{±8X²} by a fine midpoint sum
        let mid = |sign: f64| -> f64 {
            let n = 200_000;
            let h = 1.0 / n as f64;
            (0..n).map(|i| (sign * 8.0 * (-0.5 + (i as f64 + 0.5) * h).powi(2)).exp() * h).sum()
        };
        assert!((rows[0].i1 - mid(1.0)).abs() < 1e-9);
        assert!((rows[0].i2 - mid(-1.0)).abs() < 1e-9);
        assert!((rows[0].i3 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_hbar() {
        let s = QuadraticSummand::capital(1.0).unwrap();
        assert!(wkb_integrals(&s, &[0.1, 0.0]).is_err());
    }

    #[test]
    fn tiny_hbar_stays_finite_in_log_form() {
        let s = QuadraticSummand::capital(1.0).unwrap();
        let r = &wkb_integrals(&s, &[1e-4]).unwrap()[0];
        assert!(r.ln_i1.is_finite() && r.ln_i1 > 700.0);
        assert!(r.i1.is_infinite());
    }
}
