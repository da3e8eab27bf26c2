//! Exact coefficients for operator polynomials.
//!
//! Elements live in `Q[γ, (1+γ²)⁻¹][ρ] / (ρ⁴ − (1+γ²))`, which is the smallest
//! ring that holds the coupling `γ`, the oscillator frequency `ω = ρ² = √(1+γ²)`
//! and the quarter powers `(1+γ²)^{±1/4}` used by the rescaled ladder operators.
//!
//! An element is stored as `(P₀ + P₁ρ + P₂ρ² + P₃ρ³) / (1+γ²)^e` with rational
//! polynomials `Pₖ(γ)`. The representation is canonical: `e` is zero or at least
//! one `Pₖ` is not divisible by `1+γ²`, so structural equality is ring equality.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Dense univariate polynomial in `γ` with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GammaPoly {
    coeffs: Vec<BigRational>,
}

impl GammaPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    /// `1 + γ²`
    pub fn omega_squared() -> Self {
        Self::from_coeffs(vec![rational(1), rational(0), rational(1)])
    }

    pub fn gamma() -> Self {
        Self::from_coeffs(vec![rational(0), rational(1)])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Substitutes `γ ↦ −γ`.
    pub fn flip_gamma(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c.clone() } else { c.clone() })
                .collect(),
        )
    }

    /// Exact division by `1 + γ²`, if the remainder vanishes.
    pub fn div_omega_squared(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        let n = self.coeffs.len();
        if n < 3 {
            return None;
        }
        // p = q·(γ² + 1); run synthetic division from the top.
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); n - 2];
        for k in (0..n - 2).rev() {
            let c = rem[k + 2].clone();
            rem[k] = &rem[k] - &c;
            rem[k + 2] = BigRational::zero();
            quot[k] = c;
        }
        if rem[0].is_zero() && rem[1].is_zero() {
            Some(Self::from_coeffs(quot))
        } else {
            None
        }
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * gamma + to_f64(c))
    }
}

impl Add for &GammaPoly {
    type Output = GammaPoly;
    fn add(self, rhs: &GammaPoly) -> GammaPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigRational::zero();
        GammaPoly::from_coeffs(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).unwrap_or(&zero) + rhs.coeffs.get(i).unwrap_or(&zero)
                })
                .collect(),
        )
    }
}

impl Neg for &GammaPoly {
    type Output = GammaPoly;
    fn neg(self) -> GammaPoly {
        GammaPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Sub for &GammaPoly {
    type Output = GammaPoly;
    fn sub(self, rhs: &GammaPoly) -> GammaPoly {
        self + &(-rhs)
    }
}

impl Mul for &GammaPoly {
    type Output = GammaPoly;
    fn mul(self, rhs: &GammaPoly) -> GammaPoly {
        if self.is_zero() || rhs.is_zero() {
            return GammaPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        GammaPoly::from_coeffs(out)
    }
}

impl fmt::Display for GammaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match (i, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (_, true) => {}
                (_, false) => write!(f, "{a}·")?,
            }
            match i {
                0 => {}
                1 => write!(f, "γ")?,
                _ => write!(f, "γ^{i}")?,
            }
        }
        Ok(())
    }
}

pub(crate) fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        // Fallback for values outside the direct conversion path.
        c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// Element of the coefficient ring `R`; see the module documentation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingElem {
    /// Coefficients of `ρ⁰..ρ³`.
    parts: [GammaPoly; 4],
    /// Power of `(1+γ²)` in the denominator.
    den_exp: u32,
}

impl RingElem {
    pub fn zero() -> Self {
        Self {
            parts: Default::default(),
            den_exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(rational(n))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(c: BigRational) -> Self {
        let mut e = Self::zero();
        e.parts[0] = GammaPoly::constant(c);
        e
    }

    /// The coupling constant `γ`.
    pub fn gamma() -> Self {
        let mut e = Self::zero();
        e.parts[0] = GammaPoly::gamma();
        e
    }

    /// `ρ = (1+γ²)^{1/4}`.
    pub fn rho() -> Self {
        let mut e = Self::zero();
        e.parts[1] = GammaPoly::constant(rational(1));
        e
    }

    /// `ρ⁻¹ = ρ³ / (1+γ²)`.
    pub fn rho_inv() -> Self {
        let mut parts: [GammaPoly; 4] = Default::default();
        parts[3] = GammaPoly::constant(rational(1));
        Self::from_parts(parts, 1)
    }

    /// `ω = ρ² = √(1+γ²)`.
    pub fn omega() -> Self {
        let mut e = Self::zero();
        e.parts[2] = GammaPoly::constant(rational(1));
        e
    }

    /// `1 + γ²` as a ring element.
    pub fn omega_squared() -> Self {
        let mut e = Self::zero();
        e.parts[0] = GammaPoly::omega_squared();
        e
    }

    /// `(1+γ²)⁻¹`.
    pub fn omega_squared_inv() -> Self {
        let mut parts: [GammaPoly; 4] = Default::default();
        parts[0] = GammaPoly::constant(rational(1));
        Self::from_parts(parts, 1)
    }

    fn from_parts(parts: [GammaPoly; 4], den_exp: u32) -> Self {
        let mut e = Self { parts, den_exp };
        e.normalize();
        e
    }

    fn normalize(&mut self) {
        if self.parts.iter().all(GammaPoly::is_zero) {
            self.den_exp = 0;
            return;
        }
        while self.den_exp > 0 {
            let reduced: Option<Vec<GammaPoly>> =
                self.parts.iter().map(GammaPoly::div_omega_squared).collect();
            match reduced {
                Some(v) => {
                    for (slot, p) in self.parts.iter_mut().zip(v) {
                        *slot = p;
                    }
                    self.den_exp -= 1;
                }
                None => break,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(GammaPoly::is_zero)
    }

    pub fn parts(&self) -> &[GammaPoly; 4] {
        &self.parts
    }

    pub fn denominator_exponent(&self) -> u32 {
        self.den_exp
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let parts = self.parts.clone().map(|p| p.scale(c));
        Self::from_parts(parts, self.den_exp)
    }

    /// Ring automorphism `γ ↦ −γ` (fixes `ρ`, since `ρ⁴ = 1+γ²` is even in `γ`).
    pub fn flip_gamma(&self) -> Self {
        let parts = self.parts.clone().map(|p| p.flip_gamma());
        Self::from_parts(parts, self.den_exp)
    }

    fn lift(&self, den_exp: u32) -> [GammaPoly; 4] {
        let mut factor = GammaPoly::constant(rational(1));
        for _ in self.den_exp..den_exp {
            factor = &factor * &GammaPoly::omega_squared();
        }
        self.parts.clone().map(|p| &p * &factor)
    }

    /// Numerical value at `γ = γ₀`, with `ρ = (1+γ₀²)^{1/4}`.
    pub fn evaluate(&self, gamma: f64) -> f64 {
        let w2 = 1.0 + gamma * gamma;
        let rho = w2.sqrt().sqrt();
        let mut acc = 0.0;
        let mut rho_k = 1.0;
        for p in &self.parts {
            acc += p.eval(gamma) * rho_k;
            rho_k *= rho;
        }
        acc / w2.powi(self.den_exp as i32)
    }
}

impl Default for RingElem {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for &RingElem {
    type Output = RingElem;
    fn add(self, rhs: &RingElem) -> RingElem {
        let e = self.den_exp.max(rhs.den_exp);
        let a = self.lift(e);
        let b = rhs.lift(e);
        let parts = [0, 1, 2, 3].map(|k| &a[k] + &b[k]);
        RingElem::from_parts(parts, e)
    }
}

impl Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem {
            parts: self.parts.clone().map(|p| -&p),
            den_exp: self.den_exp,
        }
    }
}

impl Sub for &RingElem {
    type Output = RingElem;
    fn sub(self, rhs: &RingElem) -> RingElem {
        self + &(-rhs)
    }
}

impl Mul for &RingElem {
    type Output = RingElem;
    fn mul(self, rhs: &RingElem) -> RingElem {
        if self.is_zero() || rhs.is_zero() {
            return RingElem::zero();
        }
        let mut parts: [GammaPoly; 4] = Default::default();
        let w2 = GammaPoly::omega_squared();
        for (i, a) in self.parts.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.parts.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let mut prod = a * b;
                let mut k = i + j;
                if k >= 4 {
                    // ρ⁴ = 1 + γ²
                    prod = &prod * &w2;
                    k -= 4;
                }
                parts[k] = &parts[k] + &prod;
            }
        }
        RingElem::from_parts(parts, self.den_exp + rhs.den_exp)
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $f:ident),*) => {$(
        impl $tr for RingElem {
            type Output = RingElem;
            fn $f(self, rhs: RingElem) -> RingElem {
                (&self).$f(&rhs)
            }
        }
    )*};
}
forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        -&self
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .parts
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| match k {
                0 => format!("({p})"),
                1 => format!("({p})·ρ"),
                _ => format!("({p})·ρ^{k}"),
            })
            .collect();
        let body = terms.join(" + ");
        match self.den_exp {
            0 => write!(f, "{body}"),
            1 => write!(f, "[{body}] / (1 + γ^2)"),
            e => write!(f, "[{body}] / (1 + γ^2)^{e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_to_the_fourth_reduces() {
        let rho = RingElem::rho();
        let r4 = &(&rho * &rho) * &(&rho * &rho);
        assert_eq!(r4, RingElem::omega_squared());
    }

    #[test]
    fn rho_inverse_is_inverse() {
        assert_eq!(&RingElem::rho() * &RingElem::rho_inv(), RingElem::one());
        assert_eq!(
            &RingElem::omega_squared() * &RingElem::omega_squared_inv(),
            RingElem::one()
        );
    }

    #[test]
    fn denominators_cancel_canonically() {
        // (γ² + 1)/(1+γ²) must collapse to 1 with zero denominator exponent
        let x = &RingElem::omega_squared() * &RingElem::omega_squared_inv();
        assert_eq!(x.denominator_exponent(), 0);
        // γ/(1+γ²) stays reduced
        let y = &RingElem::gamma() * &RingElem::omega_squared_inv();
        assert_eq!(y.denominator_exponent(), 1);
        assert!(!(&y - &y).parts().iter().any(|p| !p.is_zero()));
    }

    #[test]
    fn omega_squared_is_one_plus_gamma_squared() {
        let g = RingElem::gamma();
        let lhs = &RingElem::one() + &(&g * &g);
        assert_eq!(lhs, &RingElem::omega() * &RingElem::omega());
    }

    #[test]
    fn division_by_omega_squared() {
        let p = &GammaPoly::omega_squared() * &GammaPoly::gamma();
        assert_eq!(p.div_omega_squared(), Some(GammaPoly::gamma()));
        assert_eq!(GammaPoly::gamma().div_omega_squared(), None);
        let q = &p + &GammaPoly::constant(rational(1));
        assert_eq!(q.div_omega_squared(), None);
    }

    #[test]
    fn evaluation_matches_floats() {
        for &g0 in &[0.0, 0.3, -0.75, 1.7] {
            let w2: f64 = 1.0 + g0 * g0;
            let rho: f64 = w2.powf(0.25);
            let e = &(&RingElem::rho_inv() * &RingElem::gamma())
                + &RingElem::from_ratio(3, 7).scale(&rational(2));
            let direct = g0 / rho + 6.0 / 7.0;
            let got = e.evaluate(g0);
            assert!((got - direct).abs() <= 1e-14 * direct.abs().max(1.0), "{got} vs {direct}");
        }
    }

    #[test]
    fn flip_gamma_is_an_involutive_automorphism() {
        let a = &(&RingElem::gamma() * &RingElem::rho()) + &RingElem::omega_squared_inv();
        let b = &RingElem::gamma() + &RingElem::from_integer(2);
        assert_eq!(a.flip_gamma().flip_gamma(), a);
        assert_eq!((&a * &b).flip_gamma(), &a.flip_gamma() * &b.flip_gamma());
        assert_eq!(RingElem::rho().flip_gamma(), RingElem::rho());
    }

    #[test]
    fn display_is_readable() {
        let e = &RingElem::gamma() * &RingElem::rho_inv();
        assert_eq!(e.to_string(), "[(γ)·ρ^3] / (1 + γ^2)");
        assert_eq!(RingElem::zero().to_string(), "0");
    }
}
