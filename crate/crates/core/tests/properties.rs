//! Property tests for the scalar kernels, maps, bodies and sup-convolutions.

use std::sync::OnceLock;

use gaussbm::distributions::{ou_smooth, EvenStrongLogConcave, OneD};
use gaussbm::entropy::trace_chain;
use gaussbm::functional::{psi, sup_convolution_1d, SearchSpec};
use gaussbm::gauss::{gaussian_relative_entropy, power_mean, sigma_comparison};
use gaussbm::geometry::{combo_membership, Membership, MinkowskiCombination, SymmetricBody};
use gaussbm::transport::Monotone1D;
use gaussbm::{ExtReal, SpdMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn quartic_map() -> &'static Monotone1D {
    static MAP: OnceLock<Monotone1D> = OnceLock::new();
    MAP.get_or_init(|| Monotone1D::from_target(&OneD::quartic(1.0).unwrap()))
}

fn truncated_map() -> &'static Monotone1D {
    static MAP: OnceLock<Monotone1D> = OnceLock::new();
    MAP.get_or_init(|| Monotone1D::from_target(&OneD::truncated_gaussian(0.7).unwrap()))
}

fn symmetric(n: usize, v: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    (&m + m.transpose()) * 0.5
}

fn orthogonal(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| v[i * n + j]).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn power_mean_is_monotone_in_p(
        x in 1e-3f64..10.0, y in 1e-3f64..10.0, t in 0.0f64..=1.0,
        p in -20.0f64..20.0, dp in 0.0f64..20.0,
    ) {
        let lo = power_mean(ExtReal::Finite(p), t, x, y).unwrap();
        let hi = power_mean(ExtReal::Finite(p + dp), t, x, y).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12), "{lo} > {hi}");
        prop_assert!(power_mean(ExtReal::NegInf, t, x, y).unwrap() <= lo * (1.0 + 1e-12));
        prop_assert!(power_mean(ExtReal::PosInf, t, x, y).unwrap() >= hi * (1.0 - 1e-12));
    }

    #[test]
    fn holder_form_for_power_means(
        a in 1e-3f64..10.0, b in 1e-3f64..10.0, x in 1e-3f64..10.0, y in 1e-3f64..10.0,
        t in 0.0f64..=1.0, p in 0.01f64..10.0, n in 1usize..8,
    ) {
        let q = 1.0 / n as f64;
        let r = 1.0 / (1.0 / p + 1.0 / q);
        let lhs = power_mean(ExtReal::Finite(p), t, a, b).unwrap() * power_mean(ExtReal::Finite(q), t, x, y).unwrap();
        let rhs = power_mean(ExtReal::Finite(r), t, a * x, b * y).unwrap();
        prop_assert!(lhs >= rhs * (1.0 - 1e-12), "{lhs} < {rhs}");
    }

    #[test]
    fn psi_is_jointly_convex(
        t in 0.0f64..=1.0, u0 in -20.0f64..20.0, v0 in -20.0f64..20.0,
        u1 in -20.0f64..20.0, v1 in -20.0f64..20.0, s in 0.0f64..=1.0,
    ) {
        let mid = psi(t, (1.0 - s) * u0 + s * u1, (1.0 - s) * v0 + s * v1);
        let chord = (1.0 - s) * psi(t, u0, v0) + s * psi(t, u1, v1);
        prop_assert!(mid <= chord + 1e-12 * (1.0 + chord.abs()));
    }

    #[test]
    fn sigma_dominates_t_and_increases_in_theta(
        n in 1usize..10, frac in 0.0f64..0.95, dfrac in 0.0f64..0.04, t in 0.0f64..=1.0,
    ) {
        let cap = (n as f64 / 2.0).sqrt() * std::f64::consts::PI;
        let s0 = sigma_comparison(n, frac * cap, t).unwrap();
        let s1 = sigma_comparison(n, (frac + dfrac) * cap, t).unwrap();
        prop_assert!(s0 >= t - 1e-15);
        prop_assert!(s1 >= s0 - 1e-12);
    }

    #[test]
    fn trace_chain_holds(
        n in 1usize..=6,
        a in prop::collection::vec(-3.0f64..3.0, 36),
        c in prop::collection::vec(-1.5f64..1.5, 36),
    ) {
        let a = symmetric(n, &a);
        let c = DMatrix::from_fn(n, n, |i, j| c[i * n + j]);
        let b = DMatrix::identity(n, n) + &c * c.transpose();
        let (t1, t2, t3) = trace_chain(&a, &b);
        let scale = 1e-10 * (1.0 + t1.abs());
        prop_assert!(t1 >= t2 - scale, "{t1} < {t2}");
        prop_assert!(t2 >= t3 - scale, "{t2} < {t3}");
    }

    #[test]
    fn gaussian_entropy_is_orthogonally_invariant(
        n in 1usize..=5,
        d in prop::collection::vec(0.05f64..3.0, 5),
        q in prop::collection::vec(-1.0f64..1.0, 25),
    ) {
        let sigma = SpdMatrix::from_diagonal(&d[..n]).unwrap();
        let o = orthogonal(n, &q);
        let rotated = SpdMatrix::new(&o * sigma.matrix() * o.transpose()).unwrap();
        let a = gaussian_relative_entropy(&sigma);
        let b = gaussian_relative_entropy(&rotated);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        prop_assert!(a >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn monotone_maps_are_odd_with_even_jacobian(z in -12.0f64..12.0) {
        for m in [quartic_map(), truncated_map()] {
            prop_assert_eq!(m.eval(-z), -m.eval(z));
            prop_assert_eq!(m.log_jac(-z), m.log_jac(z));
            prop_assert!(m.jac(z) <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn monotone_maps_are_nondecreasing(z in -10.0f64..10.0, dz in 0.0f64..1.0) {
        for m in [quartic_map(), truncated_map()] {
            prop_assert!(m.eval(z + dz) >= m.eval(z));
        }
    }

    #[test]
    fn one_dimensional_cdf_is_odd_about_one_half(x in 0.0f64..6.0) {
        let f = OneD::quartic(0.1).unwrap();
        let s = f.cdf(x) + f.cdf(-x);
        prop_assert!((s - 1.0).abs() < 1e-14);
        let g = OneD::truncated_gaussian(1.3).unwrap();
        prop_assert!((g.cdf(x) + g.cdf(-x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn minkowski_members_respect_the_support_function(
        x in prop::collection::vec(-2.5f64..2.5, 2),
        u in prop::collection::vec(-1.0f64..1.0, 2),
        t in 0.05f64..0.95,
    ) {
        let k0 = SymmetricBody::ellipsoid(SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap());
        let k1 = SymmetricBody::pnorm_ball(2, 1.0, 1.5).unwrap();
        let mc = MinkowskiCombination::new(k0, k1, t).unwrap();
        let norm = (u[0] * u[0] + u[1] * u[1]).sqrt();
        prop_assume!(norm > 1e-3);
        let u = [u[0] / norm, u[1] / norm];
        let h = mc.support(&u);
        match combo_membership(&mc, &x, 1e-9, 500).unwrap() {
            Membership::Inside => prop_assert!(x[0] * u[0] + x[1] * u[1] <= h + 1e-7),
            Membership::Outside | Membership::BoundaryUncertain => {}
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothed_potential_hessian_is_sandwiched(eps in 0.02f64..0.45, x in -6.0f64..6.0) {
        let d = EvenStrongLogConcave::OneDPotential(OneD::quartic(0.5).unwrap());
        let EvenStrongLogConcave::OneDPotential(s) = ou_smooth(&d, eps).unwrap() else {
            panic!("one-dimensional input stays one-dimensional");
        };
        let u2 = s.potential().second(x);
        prop_assert!(u2 >= 1.0 - 1e-6, "U'' = {u2}");
        prop_assert!(u2 <= 1.0 / eps + 1e-6, "U'' = {u2}");
    }

    #[test]
    fn sup_convolution_is_admissible(
        x0 in -4.0f64..4.0, x1 in -4.0f64..4.0, t in 0.05f64..0.95,
        p in prop_oneof![Just(0.0), 0.0f64..3.0], a in 0.2f64..4.0, b in 0.2f64..4.0,
    ) {
        let f = |x: f64| (-0.5 * a * x * x).exp();
        let g = |x: f64| if x.abs() <= 2.0 { (-0.5 * b * x * x).exp() } else { 0.0 };
        let x = (1.0 - t) * x0 + t * x1;
        let h = sup_convolution_1d(f, g, ExtReal::Finite(p), t, x, &SearchSpec::default()).unwrap();
        let m = power_mean(ExtReal::Finite(p), t, f(x0), g(x1)).unwrap();
        prop_assert!(h.value >= m - 1e-12, "h = {} < {m}", h.value);
    }
}
