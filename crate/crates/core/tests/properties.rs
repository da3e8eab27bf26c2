use nhbose_core::algebra::{commutator, lower_x, lower_y, Monomial, OperatorPoly};
use nhbose_core::eigensystem::{InnerProductKind, ModeFunction, ModeKind};
use nhbose_core::fock::{
    build_matrix, hermitian_part_min_eigenvalue, in_hyperbolic_region, pseudospectrum, rayleigh_quotients,
    support_energy, GridSpec, MatrixKind, ResolventSolver,
};
use nhbose_core::ring::RingElem;
use nhbose_core::special::{gauss_hermite, integrate_coupled};
use nhbose_core::wkb::{wkb_integrals, Branch, QuadraticSummand};
use num_complex::Complex64;
use proptest::prelude::*;

fn coefficient() -> impl Strategy<Value = RingElem> {
    (-3i64..=3, 1i64..=3, 0usize..4).prop_map(|(num, den, which)| {
        let base = RingElem::from_ratio(num, den);
        let unit = match which {
            0 => RingElem::one(),
            1 => RingElem::gamma(),
            2 => RingElem::omega(),
            _ => RingElem::rho_inv(),
        };
        &base * &unit
    })
}

fn operator() -> impl Strategy<Value = OperatorPoly> {
    prop::collection::vec(((0u32..=2, 0u32..=2, 0u32..=2, 0u32..=2), coefficient()), 0..4).prop_map(|terms| {
        let mut p = OperatorPoly::zero();
        for ((x, y, dx, dy), c) in terms {
            p = &p + &OperatorPoly::monomial(Monomial::new(x, y, dx, dy), c).unwrap();
        }
        p
    })
}

fn small_operator() -> impl Strategy<Value = OperatorPoly> {
    prop::collection::vec(((0u32..=1, 0u32..=1, 0u32..=1, 0u32..=1), coefficient()), 0..3).prop_map(|terms| {
        let mut p = OperatorPoly::zero();
        for ((x, y, dx, dy), c) in terms {
            p = &p + &OperatorPoly::monomial(Monomial::new(x, y, dx, dy), c).unwrap();
        }
        p
    })
}

fn kind() -> impl Strategy<Value = ModeKind> {
    prop_oneof![Just(ModeKind::PhiBase), Just(ModeKind::RightPsi), Just(ModeKind::LeftPsiTilde)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_reduces_rho_to_the_fourth(g in -3.0f64..3.0) {
        let rho = RingElem::rho();
        let r4 = &(&rho * &rho) * &(&rho * &rho);
        prop_assert_eq!(&r4, &RingElem::omega_squared());
        let direct = (1.0 + g * g).powf(0.25);
        prop_assert!((rho.evaluate(g) - direct).abs() <= 1e-14 * direct);
        prop_assert!((RingElem::rho_inv().evaluate(g) * direct - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn ring_evaluation_is_a_homomorphism(a in coefficient(), b in coefficient(), g in -2.0f64..2.0) {
        let (x, y) = (a.evaluate(g), b.evaluate(g));
        let scale = 1.0 + x.abs() * y.abs() + x.abs() + y.abs();
        prop_assert!(((&a * &b).evaluate(g) - x * y).abs() <= 1e-14 * scale);
        prop_assert!(((&a + &b).evaluate(g) - (x + y)).abs() <= 1e-14 * scale);
    }

    #[test]
    fn composition_is_associative(p in small_operator(), q in small_operator(), r in small_operator()) {
        let left = p.compose(&q).unwrap().compose(&r).unwrap();
        let right = p.compose(&q.compose(&r).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert_eq!(p.compose(&OperatorPoly::identity()).unwrap(), p.clone());
        prop_assert_eq!(OperatorPoly::identity().compose(&p).unwrap(), p);
    }

    #[test]
    fn jacobi_identity(p in small_operator(), q in small_operator(), r in small_operator()) {
        let a = commutator(&p, &commutator(&q, &r).unwrap()).unwrap();
        let b = commutator(&q, &commutator(&r, &p).unwrap()).unwrap();
        let c = commutator(&r, &commutator(&p, &q).unwrap()).unwrap();
        prop_assert!((&(&a + &b) + &c).is_zero());
    }

    #[test]
    fn adjoint_is_an_anti_multiplicative_involution(p in operator(), q in operator()) {
        prop_assert_eq!(p.formal_adjoint().unwrap().formal_adjoint().unwrap(), p.clone());
        let lhs = p.compose(&q).unwrap().formal_adjoint().unwrap();
        let rhs = q.formal_adjoint().unwrap().compose(&p.formal_adjoint().unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gaussian_conjugation_round_trips(p in operator()) {
        let there = p.conjugate_by_gaussian(1).unwrap();
        prop_assert_eq!(there.conjugate_by_gaussian(-1).unwrap(), p.clone());
        prop_assert_eq!(p.conjugate_by_gaussian(-1).unwrap().conjugate_by_gaussian(1).unwrap(), p);
    }

    #[test]
    fn evaluation_commutes_with_composition(p in operator(), q in operator(), g in -0.99f64..0.99) {
        let exact = p.compose(&q).unwrap().evaluate(g);
        let numeric = p.evaluate(g).compose(&q.evaluate(g)).unwrap();
        let scale = exact.max_abs_coefficient().max(numeric.max_abs_coefficient()).max(1.0);
        for (m, c) in exact.terms() {
            let other = numeric.coefficient(m).copied().unwrap_or(0.0);
            prop_assert!((c - other).abs() <= 1e-13 * scale);
        }
        for (m, c) in numeric.terms() {
            if exact.coefficient(m).is_none() {
                prop_assert!(c.abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn vacuum_is_annihilated(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        // at γ = 0 the ground state is a multiple of e^{−(x²+y²)}
        let vac = ModeFunction::phi(0, 0, 0.0);
        let v = vac.eval_with_derivatives(x, y);
        for op in [lower_x(), lower_y()] {
            let got = op.evaluate(0.0).apply_at(x, y, |k, l| v.partial(k, l)).unwrap();
            prop_assert!(got.abs() <= 1e-12);
        }
    }

    #[test]
    fn hermite_rule_invariants(n in 1usize..=200) {
        let r = gauss_hermite(n).unwrap();
        let sum: f64 = r.weights.iter().sum();
        prop_assert!((sum - std::f64::consts::PI.sqrt()).abs() <= 1e-13 * sum);
        for i in 0..n {
            prop_assert_eq!(r.nodes[i], -r.nodes[n - 1 - i]);
            prop_assert!(r.weights[i] >= 0.0);
        }
    }

    #[test]
    fn hermite_rule_is_exact_on_monomials(n in 1usize..=40, k in 0usize..80) {
        prop_assume!(k < 2 * n);
        let r = gauss_hermite(n).unwrap();
        let got = r.integrate(|t| t.powi(k as i32));
        // Γ((k+1)/2) for even k, zero for odd k
        let exact = if k % 2 == 1 {
            0.0
        } else {
            (1..=k / 2).fold(std::f64::consts::PI.sqrt(), |acc, j| acc * (j as f64 - 0.5))
        };
        let scale = (1..=k / 2 + 1).fold(std::f64::consts::PI.sqrt(), |acc, j| acc * (j as f64 - 0.5).max(1.0));
        prop_assert!((got - exact).abs() <= 1e-12 * scale, "k={} n={}: {} vs {}", k, n, got, exact);
    }

    #[test]
    fn coupled_integral_is_symmetric(a in 0.5f64..3.0, c in -0.45f64..0.45, i in 0i32..4, j in 0i32..4) {
        let f = |x: f64, y: f64| x.powi(i) * y.powi(j) + y.powi(i) * x.powi(j);
        let fs = |x: f64, y: f64| f(y, x);
        let c = c * a;
        let one: f64 = integrate_coupled(f, a, a, c, 24).unwrap();
        let two: f64 = integrate_coupled(fs, a, a, c, 24).unwrap();
        prop_assert!((one - two).abs() <= 1e-12 * one.abs().max(1.0));
    }

    #[test]
    fn mode_parity(k in kind(), m in 0usize..10, n in 0usize..10, g in -0.9f64..0.9, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let f = ModeFunction::new(k, m, n, g);
        let a = f.eval(x, y);
        let b = f.eval(-x, -y);
        let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((b - sign * a).abs() <= 1e-13 * a.abs().max(1e-300) + 1e-300);
        prop_assert!(a.is_finite());
    }

    #[test]
    fn modes_swap_indices_under_reflection(k in kind(), m in 0usize..8, n in 0usize..8, g in -0.9f64..0.9, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let a = ModeFunction::new(k, m, n, g).eval(x, y);
        let b = ModeFunction::new(k, n, m, g).eval(y, x);
        prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-12));
    }

    #[test]
    fn modes_decay_along_rays(k in kind(), m in 0usize..6, n in 0usize..6, g in -0.99f64..0.99, phi in 0.0f64..6.3) {
        let f = ModeFunction::new(k, m, n, g);
        let v = f.eval(40.0 * phi.cos(), 40.0 * phi.sin());
        prop_assert!(v.is_finite() && v.abs() < 1e-12);
    }

    #[test]
    fn weighted_products_reduce_to_flat_without_coupling(k in prop_oneof![Just(InnerProductKind::Flat), Just(InnerProductKind::Physical), Just(InnerProductKind::Dual)]) {
        prop_assert_eq!(k.weight_coefficient(0.0), 0.0);
    }

    #[test]
    fn hermitian_part_is_exactly_hermitian(n in 0usize..12, g in -0.95f64..0.95, theta in -1.5f64..1.5) {
        let a = build_matrix(MatrixKind::HermitianPart { theta }, n, g).unwrap();
        prop_assert!(a.is_hermitian());
        let d = a.to_dense();
        prop_assert_eq!(d.adjoint(), d);
    }

    #[test]
    fn hamiltonian_matrix_entries(n in 1usize..8, g in -1.5f64..1.5) {
        let a = build_matrix(MatrixKind::H, n, g).unwrap();
        prop_assert!(a.is_real());
        for m in 0..=n {
            for q in 0..=n {
                let i = a.index(m, q);
                prop_assert_eq!(a.entry(i, i), Complex64::new((m + q + 1) as f64, 0.0));
                if m < n && q < n {
                    let up = a.entry(a.index(m + 1, q + 1), i);
                    prop_assert!((up.re + g * (((m + 1) * (q + 1)) as f64).sqrt()).abs() < 1e-15);
                }
                if m > 0 && q > 0 {
                    let down = a.entry(a.index(m - 1, q - 1), i);
                    prop_assert!((down.re - g * ((m * q) as f64).sqrt()).abs() < 1e-15);
                }
            }
        }
        let tr: f64 = (0..=n).flat_map(|m| (0..=n).map(move |q| (m + q + 1) as f64)).sum();
        prop_assert_eq!(a.trace(), Complex64::new(tr, 0.0));
        let star = build_matrix(MatrixKind::Hstar, n, g).unwrap();
        prop_assert_eq!(star.to_dense(), a.to_dense().transpose());
    }

    #[test]
    fn block_mul_matches_dense(n in 0usize..7, g in -1.0f64..1.0, seed in 0u64..1000) {
        let a = build_matrix(MatrixKind::H, n, g).unwrap();
        let v: Vec<Complex64> = (0..a.dimension())
            .map(|i| Complex64::new(((i as u64 * 31 + seed) % 17) as f64 - 8.0, ((i as u64 * 7 + seed) % 5) as f64))
            .collect();
        let dense = a.to_dense() * nalgebra::DVector::from_vec(v.clone());
        for (x, y) in a.mul_vec(&v).iter().zip(dense.iter()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_quotients_lie_in_the_hyperbolic_region(n in 1usize..14, g in -0.95f64..0.95, seed in any::<u64>()) {
        let a = build_matrix(MatrixKind::H, n, g).unwrap();
        for q in rayleigh_quotients(&a, 40, seed) {
            prop_assert!(in_hyperbolic_region(q, g), "{} outside for γ={}", q, g);
            prop_assert!(q.re >= 1.0 - 1e-10);
            prop_assert!(q.im * q.im <= g * g * (q.re * q.re - 1.0) + 1e-8);
        }
    }

    #[test]
    fn support_energy_is_a_ritz_upper_bound(g in 0.05f64..0.95, t in -0.99f64..0.99) {
        let theta_max = (1.0 / g).atan();
        let theta = t * theta_max;
        let closed = support_energy(theta, g).unwrap();
        let coarse = hermitian_part_min_eigenvalue(8, g, theta).unwrap();
        let fine = hermitian_part_min_eigenvalue(24, g, theta).unwrap();
        prop_assert!(fine >= closed - 1e-10);
        prop_assert!(coarse >= fine - 1e-12);
        prop_assert!(fine >= 0.0);
    }

    #[test]
    fn pseudospectrum_is_deterministic(n in 2usize..10, g in 0.1f64..0.9) {
        let a = build_matrix(MatrixKind::H, n, g).unwrap();
        let spec = GridSpec { nx: 9, ny: 7, ..GridSpec::DEFAULT };
        let grid = pseudospectrum(&a, &spec).unwrap();
        let again = pseudospectrum(&a, &spec).unwrap();
        prop_assert_eq!(&grid.sigma_min, &again.sigma_min);
        let solver = ResolventSolver::new(&a).unwrap();
        for (z, s) in grid.points.iter().zip(&grid.sigma_min).rev() {
            prop_assert_eq!(solver.sigma_min(*z), *s);
        }
    }

    #[test]
    fn wkb_branches_are_conjugate(alpha in 0.05f64..2.0, beta in 0.05f64..3.0, delta in -2.0f64..2.0, e in 0.1f64..4.0, t in -0.999f64..0.999) {
        let s = QuadraticSummand::new(alpha, beta, delta, e).unwrap();
        let x = t * s.turning_point();
        let right = s.phase(x, Branch::Right).unwrap();
        let left = s.phase(x, Branch::LeftAdjoint).unwrap();
        prop_assert_eq!(right.re, left.re);
        prop_assert_eq!(right.im, -left.im);
        prop_assert!((right.im + delta * x * x / (4.0 * alpha)).abs() <= 1e-15 * (1.0 + right.im.abs()));
        for b in [Branch::Right, Branch::LeftAdjoint] {
            prop_assert!(s.jacobi_residual(x, b).unwrap().norm() <= 1e-12 * (1.0 + e + beta * x * x));
        }
    }

    #[test]
    fn wkb_integrals_are_monotone_in_hbar(e in 0.3f64..2.0, h in 0.02f64..1.0) {
        let s = QuadraticSummand::capital(e).unwrap();
        let rows = wkb_integrals(&s, &[2.0 * h, h]).unwrap();
        prop_assert!(rows[1].i1 > rows[0].i1);
        prop_assert!(rows[1].i2 < rows[0].i2);
        let length = 2.0 * s.turning_point();
        prop_assert!((rows[0].i3 - length).abs() <= 1e-12 && (rows[1].i3 - length).abs() <= 1e-12);
    }
}

#[test]
fn both_diagnostics_see_norm_growth() {
    let norms = nhbose_core::eigensystem::norm_growth(1.0, 6, 64).unwrap();
    assert!(norms.windows(2).all(|w| w[1] > w[0]));
    let s = QuadraticSummand::capital(1.0).unwrap();
    let rows = wkb_integrals(&s, &[0.4, 0.2, 0.1, 0.05]).unwrap();
    assert!(rows.windows(2).all(|w| w[1].i1 > w[0].i1));
}
