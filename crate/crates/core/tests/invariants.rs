//! Property tests over randomized inputs.

mod common;

use common::*;
use hodgelab_core::exact::{parse_rational, rational, Rational};
use hodgelab_core::noether::*;
use hodgelab_core::periods::{self, compute_period_data, HyperellipticCurve};
use hodgelab_core::torus::{FourierTerm, TMonomial, Testbed, TorusTwistedConfig, Weight};
use hodgelab_core::{Complex64, Execution};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nonzero_u(g: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-20i64..=20, 1i64..=9), g)
        .prop_map(|v| v.into_iter().map(|(n, d)| rational(n, d)).collect::<Vec<_>>())
        .prop_filter("u must be nonzero", |u| u.iter().any(|x| !x.is_zero()))
}

fn genus_and_u() -> impl Strategy<Value = (usize, Vec<Rational>)> {
    (2usize..=7).prop_flat_map(|g| (Just(g), nonzero_u(g)))
}

#[test]
fn sym2_rank_for_all_small_genera() {
    for g in 2..=12 {
        assert_eq!(sym2_multiplication_rank(g).unwrap(), (2 * g - 1, g - 2), "g = {g}");
        let ck = common_kernel_dim(g).unwrap();
        assert_eq!(ck == 0, g == 2, "g = {g}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kernel_bounds_and_duality((g, u) in genus_and_u()) {
        let k = mult_by_u_kernel(g, &u).unwrap();
        prop_assert!(k >= 2 * g - 3);
        prop_assert!(k >= common_kernel_dim(g).unwrap());
        prop_assert_eq!(dual_kernel_basis(g, &u).unwrap().len(), k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_roundtrip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = rational(n, d);
        prop_assert_eq!(parse_rational(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn psi_is_real_valued(
        m1 in -2i32..=2, m2 in -2i32..=2,
        re in -1.0f64..1.0, im in -1.0f64..1.0,
        p in 0u32..3, q in 0u32..3,
        a in 0.0f64..1.0, b in 0.0f64..1.0, tr in -0.5f64..0.5, ti in -0.5f64..0.5,
    ) {
        let psi = vec![FourierTerm { m: [m1, m2], poly: vec![TMonomial { coeff: c(re, im), p, q }] }];
        let w = Weight::new(c(0.2, 0.9), 2, psi).unwrap();
        let t = c(tr, ti);
        let v = w.psi_der(t, a, b, Default::default());
        prop_assert!(v.im.abs() <= 1e-15 * (1.0 + v.re.abs()));
        let j = w.jets(t, a, b);
        prop_assert!((j.phi_tzb - j.phi_ztb.conj()).norm() <= 1e-12 * (1.0 + j.phi_tzb.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn harmonic_norm_is_frame_independent(seed in any::<u64>()) {
        let curve = HyperellipticCurve::new(real_desc(&[1.0, 0.0, -2.0, 0.5, 1.0, -0.3])).unwrap();
        let base = compute_period_data(&curve, 128, Execution::Sequential).unwrap();
        let norm_in = |d: &periods::PeriodData| {
            let alpha: Vec<Complex64> = d.pi.row(0).iter().map(|z| z.conj()).collect();
            let p = periods::pairings_from_periods(&alpha, &d.pi).unwrap();
            periods::harmonic_01_norm(&p, &d.gram).unwrap()
        };
        let reference = norm_in(&base);
        prop_assert!((reference - base.gram[(0, 0)].re).abs() <= 1e-10 * reference);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = periods::random_symplectic(2, 6, &mut rng);
        let moved = base.change_frame(&s).unwrap();
        prop_assert!((norm_in(&moved) - reference).abs() <= 1e-10 * reference);
    }

    #[test]
    fn box_prime_pairing_is_bounded(seed in any::<u64>()) {
        use rand::Rng;
        let cfg = TorusTwistedConfig::new(c(0.1, 1.0), 1, vec![
            FourierTerm { m: [1, 0], poly: vec![TMonomial { coeff: c(0.2, 0.0), p: 0, q: 0 }] },
        ]).with_grid(12);
        let bed = Testbed::new(cfg, Execution::Sequential).unwrap();
        let op = bed.operator(c(0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta: Vec<Complex64> = (0..bed.points())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let sol = bed.solve(&op, &eta).unwrap();
        prop_assert!(sol.pairing > 0.0 && sol.pairing <= sol.eta_norm2 * (1.0 + 1e-12));
    }
}
