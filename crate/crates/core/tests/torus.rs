use hodgelab_core::linalg::{self, CMat};
use hodgelab_core::torus::{
    self, bound_1_5_on, thm_1_2_on, FourierTerm, TMonomial, Testbed, TorusTwistedConfig,
};
use hodgelab_core::{Complex64, Execution};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mono(coeff: Complex64, p: u32, q: u32) -> TMonomial {
    TMonomial { coeff, p, q }
}

fn generic_psi() -> Vec<FourierTerm> {
    vec![
        FourierTerm { m: [0, 0], poly: vec![mono(c(1.0, 0.0), 1, 1)] },
        FourierTerm { m: [1, 0], poly: vec![mono(c(0.15, 0.0), 1, 0), mono(c(0.1, 0.0), 1, 1)] },
        FourierTerm { m: [0, 1], poly: vec![mono(c(0.0, 0.1), 0, 1)] },
        FourierTerm { m: [1, 1], poly: vec![mono(c(0.05, 0.0), 1, 0)] },
    ]
}

fn tau() -> Complex64 {
    c(0.15, 1.1)
}

fn basis(k: usize) -> Vec<Vec<Complex64>> {
    (0..k).map(|i| (0..k).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

#[test]
fn norm_squared_weight_gives_unit_curvature() {
    let cfg = TorusTwistedConfig::new(tau(), 2, TorusTwistedConfig::psi_norm_squared());
    let bed = Testbed::new(cfg, Execution::Parallel).unwrap();
    let u = [c(1.0, 0.0), c(0.4, -0.3)];
    let r = thm_1_2_on(&bed, &u).unwrap();
    assert!((r.lhs - r.scale).abs() <= 1e-6 * r.scale, "{r:?}");
    assert!((r.rhs - r.scale).abs() <= 1e-12 * r.scale, "{r:?}");
    assert_eq!(r.rhs_term2, 0.0);
    let b = bound_1_5_on(&bed, &u).unwrap();
    assert!(b.eta_vanishes && b.pass, "{b:?}");
}

#[test]
fn harmonic_reweighting_is_flat() {
    let cfg = TorusTwistedConfig::new(tau(), 2, TorusTwistedConfig::psi_harmonic(c(0.3, 0.2)));
    let bed = Testbed::new(cfg, Execution::Parallel).unwrap();
    for u in basis(2) {
        let r = thm_1_2_on(&bed, &u).unwrap();
        assert!(r.lhs.abs() <= 1e-8 * r.scale && r.rhs.abs() <= 1e-8 * r.scale, "{r:?}");
        assert!(r.vanishing && r.pass);
        let data = bed.fiber_field_data(&u, c(0.0, 0.0)).unwrap();
        assert!(data.c.iter().all(|v| *v == 0.0));
        assert!(data.eta.iter().all(|v| v.norm() == 0.0));
    }
}

#[test]
fn generic_weight_matches_for_degree_two_and_three() {
    for k in [2usize, 3] {
        let cfg = TorusTwistedConfig::new(tau(), k as u32, generic_psi());
        let bed = Testbed::new(cfg, Execution::Parallel).unwrap();
        for u in basis(k) {
            let r = thm_1_2_on(&bed, &u).unwrap();
            assert!(r.pass && r.rel_err <= 1e-3, "k = {k}: {r:?}");
            assert!(r.rhs_term2 > 0.0 && r.lhs > 0.0);
            assert!(r.rhs_term2 <= r.eta_norm2);
            assert!(r.lemma41_residual_max <= 1e-10 && r.det_identity_residual_max <= 1e-12);
            let b = bound_1_5_on(&bed, &u).unwrap();
            assert!(b.pass && b.margin > 0.0, "{b:?}");
        }
    }
}

#[test]
fn lowest_landau_level_against_dense_oracle() {
    let cfg = TorusTwistedConfig::new(tau(), 2, vec![]).with_grid(32);
    let bed = Testbed::new(cfg, Execution::Parallel).unwrap();
    let op = bed.operator(c(0.0, 0.0)).unwrap();
    let eta: Vec<Complex64> = (0..bed.points())
        .map(|p| {
            let (_, b) = bed.config.grid_point(p);
            bed.theta_values[p][0] * (-0.5 * bed.weight.phi0(b)).exp()
        })
        .collect();
    let sol = bed.solve(&op, &eta).unwrap();

    let dense: CMat = op.to_dense();
    assert!(linalg::hermitian_defect(&dense) <= 1e-12);
    let eig = dense.symmetric_eigen();
    let v = CMat::from_column_slice(eta.len(), 1, &eta);
    let coeffs = eig.eigenvectors.adjoint() * v;
    let oracle: f64 = coeffs
        .iter()
        .zip(eig.eigenvalues.iter())
        .map(|(z, l)| z.norm_sqr() / l)
        .sum::<f64>()
        * bed.config.area_element();
    assert!((sol.pairing - oracle).abs() <= 1e-8 * oracle, "{} {}", sol.pairing, oracle);
    // □′ = 1 on lowest-level forms.
    assert!((sol.pairing - sol.eta_norm2 / 2.0).abs() <= 1e-4 * sol.eta_norm2, "{sol:?}");
    assert!(eig.eigenvalues.iter().all(|l| *l >= 1.0 - 1e-10));
}

#[test]
fn random_eta_pairing_is_bounded() {
    let cfg = TorusTwistedConfig::new(tau(), 2, generic_psi()).with_grid(16);
    let bed = Testbed::new(cfg, Execution::Sequential).unwrap();
    let op = bed.operator(c(0.0, 0.0)).unwrap();
    let eta: Vec<Complex64> = (0..bed.points()).map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect();
    let sol = bed.solve(&op, &eta).unwrap();
    assert!(sol.pairing > 0.0 && sol.pairing <= sol.eta_norm2);
    let (defect, rayleigh) = op.self_adjointness_check(11, 2);
    assert!(defect <= 1e-12 && rayleigh >= 1.0);
}

#[test]
fn grid_refinement_is_stable() {
    let cfg = TorusTwistedConfig::new(tau(), 2, generic_psi());
    let u = [c(1.0, 0.0), c(0.4, -0.3)];
    let rows = torus::convergence_table(&cfg, &u, &[(32, 1e-2), (64, 1e-2)], Execution::Parallel).unwrap();
    let change = (rows[1].rhs - rows[0].rhs).abs() / rows[1].rhs.abs();
    assert!(change <= 1e-4, "{rows:?}");
}

#[test]
fn parallel_and_sequential_reports_agree() {
    let cfg = TorusTwistedConfig::new(tau(), 2, generic_psi()).with_grid(16);
    let u = [c(1.0, 0.0), c(0.0, 1.0)];
    let a = torus::verify_thm_1_2(&cfg, &u, Execution::Parallel).unwrap();
    let b = torus::verify_thm_1_2(&cfg, &u, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}
