use std::f64::consts::PI;

use cantilever::closedform::{
    bch_apply_coherent, bch_factorize, bch_operator, cdho_evolve, cdho_initial, cdho_state,
    dissipative_cat, realize, unitary_variance,
};
use cantilever::hilbert::{
    coherent_state, displacement_op, quadrature, two_photon_op, DensityMatrix, FockVector,
};
use cantilever::lindblad::{
    dissipator, frame_alpha, moment_rhs, steady_variance, BathParams, MomentVector,
};
use cantilever::model::{
    build_conditional, build_dho, build_full_hamiltonian, build_linear, build_nonlinear,
    diagonalize_conditional, propagator, Branch, CouplingSet,
};
use cantilever::scalar::safe_dim;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn complex(r: f64) -> impl Strategy<Value = C> {
    (-r..r, -r..r).prop_map(|(a, b)| C::new(a, b))
}

fn disc(r: f64) -> impl Strategy<Value = C> {
    (0.0..r, 0.0..2.0 * PI).prop_map(|(m, p)| C::from_polar(m, p))
}

fn branch() -> impl Strategy<Value = Branch> {
    prop_oneof![Just(Branch::Plus), Just(Branch::Minus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalize_gives_unit_norm(amps in prop::collection::vec(complex(3.0), 2..30)) {
        prop_assume!(amps.iter().any(|z| z.norm() > 1e-3));
        let v = FockVector::new(amps).unwrap().normalize();
        prop_assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hamiltonians_are_hermitian(
        gs in -3.0..3.0f64,
        w in 0.1..3.0f64,
        phi in -0.1..0.1f64,
        w0 in -1.0..1.0f64,
        k in branch(),
        dim in 4usize..24,
    ) {
        let cs = CouplingSet::from_flux(2.0, PI / 2.0, phi, w0);
        let hs = [
            build_dho(gs, w, dim).unwrap(),
            build_conditional(k, &cs, w, dim).unwrap(),
            build_linear(&cs, w, dim).unwrap(),
            build_nonlinear(&cs, w, dim).unwrap(),
            build_full_hamiltonian(&cs, w, dim).unwrap(),
        ];
        for h in &hs {
            prop_assert!(h.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn displacement_composition(a in disc(2.0), b in disc(2.0)) {
        let dim = 60;
        let lhs = &displacement_op(a, dim).unwrap() * &displacement_op(b, dim).unwrap();
        let rhs = displacement_op(a + b, dim).unwrap().scale(C::from_polar(1.0, (a * b.conj()).im));
        // action on the first ten levels, read off the lower half
        for n in 0..10 {
            for m in 0..dim / 2 {
                prop_assert!((lhs.get(m, n) - rhs.get(m, n)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn bch_matches_dense_exponential(
        t in 0.05..2.0f64,
        b1 in complex(1.0),
        b2 in -2.0..2.0f64,
    ) {
        let (dim, block) = (80, 20);
        let l = cantilever::hilbert::ladder_ops::<f64>(dim).unwrap();
        let (theta, b2, b3) = (C::new(0.0, -t), C::new(b2, 0.0), b1.conj());
        let gen = &(&l.a.scale(b1) + &l.n.scale(b2)) + &l.adag.scale(b3);
        let dense = gen.scale(theta).exp();
        let prod = bch_operator(&bch_factorize(theta, b1, b2, b3), dim).unwrap();
        prop_assert!((&dense - &prod).block(block).spectral_norm() < 1e-9);
    }

    #[test]
    fn bch_coherent_action_matches_operator(
        t in 0.05..1.5f64,
        b1 in complex(0.8),
        b2 in -1.5..1.5f64,
        ai in disc(1.0),
    ) {
        let dim = 60;
        let f = bch_factorize(C::new(0.0, -t), b1, C::new(b2, 0.0), b1.conj());
        let (eps, label) = bch_apply_coherent(&f, ai);
        let got = bch_operator(&f, dim).unwrap().apply(&coherent_state(ai, dim).unwrap()).unwrap();
        let want = coherent_state(label, dim).unwrap();
        let s = eps.exp();
        for n in 0..20 {
            prop_assert!((got.amplitudes()[n] - s * want.amplitudes()[n]).norm() < 1e-9);
        }
    }

    #[test]
    fn cdho_matches_dense_evolution(
        ai in disc(1.0),
        r in -3.0..3.0f64,
        wt in 0.0..2.0 * PI,
    ) {
        let dim = (safe_dim(ai.norm() + 2.0 * r.abs()) + 20).max(80);
        let cs = CouplingSet::from_flux(1.0, PI / 2.0, r, 0.0);
        let h = build_linear(&cs, 1.0, dim).unwrap();
        let psi = cdho_initial(ai, dim).unwrap().evolve(&propagator(&h, wt)).unwrap();
        let want = cdho_state(&cdho_evolve(ai, r, 1.0, wt).unwrap(), dim).unwrap();
        prop_assert!(psi.fidelity(&want).unwrap() >= 1.0 - 1e-7);
    }

    #[test]
    fn dissipator_is_traceless_and_hermitian(
        beta in disc(1.5),
        gamma in 0.0..2.0f64,
        nbar in 0.0..2.0f64,
    ) {
        let dim = 30;
        let rho = coherent_state(beta, dim).unwrap().to_density();
        let d = dissipator(&rho, &BathParams::from_nbar(gamma, nbar).unwrap());
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!(d.hermiticity_error() < 1e-14);
    }

    #[test]
    fn moment_flow_keeps_conjugate_symmetry(
        a in complex(2.0),
        a2 in complex(2.0),
        n in 0.0..5.0f64,
        k in branch(),
        nbar in 0.0..3.0f64,
    ) {
        let m = MomentVector { a, adag: a.conj(), a2, adag2: a2.conj(), n: C::new(n, 0.0) };
        let cs = CouplingSet::nonlinear(0.0115);
        let d = moment_rhs(&m, k, &cs, 1.0, &BathParams::from_nbar(0.01, nbar).unwrap());
        prop_assert!(d.conjugate_symmetry_error() < 1e-14);
    }

    #[test]
    fn realized_cat_has_unit_trace(t in 0.0..5.0f64, beta in disc(2.0), phi in 0.0..2.0 * PI) {
        let cat = dissipative_cat(beta, phi, -1.0, 1.0, 0.5, t).unwrap();
        let rho: DensityMatrix<f64> = realize(&cat, 60).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-9);
        prop_assert!(cat.delta_r <= 0.0);
    }

    #[test]
    fn decoherence_is_monotone(t in 0.0..5.0f64, dt in 1e-3..1.0f64, beta in disc(3.0)) {
        let a = dissipative_cat(beta, 0.3, -2.0, 1.0, 0.4, t).unwrap();
        let b = dissipative_cat(beta, 0.3, -2.0, 1.0, 0.4, t + dt).unwrap();
        prop_assert!(b.delta_r.exp() <= a.delta_r.exp());
    }

    #[test]
    fn unitary_variance_is_periodic(t in 0.0..50.0f64, gp in 0.001..0.2f64, k in branch()) {
        let cs = CouplingSet::nonlinear(gp);
        let Ok(spec) = diagonalize_conditional(k, &cs, 1.0) else { return Ok(()) };
        let p = PI / spec.big_omega_k;
        let a = unitary_variance(k, &cs, 1.0, t).unwrap();
        let b = unitary_variance(k, &cs, 1.0, t + p).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn anti_squeezing_branch_never_squeezes(temp in 0.0..5.0f64, gp in 0.001..0.1f64) {
        let cs = CouplingSet::nonlinear(gp);
        let bath = BathParams::new(0.01, temp, 1.0).unwrap();
        prop_assert!(steady_variance(Branch::Plus, &cs, 1.0, &bath).unwrap() >= 1.0);
    }

    #[test]
    fn frame_displacement_solves_its_equation(
        gs in -3.0..3.0f64,
        gamma in 0.0..1.0f64,
        w in 0.2..3.0f64,
        t in 0.0..10.0f64,
    ) {
        let h = 1e-5;
        let da = (frame_alpha(gs, gamma, w, t + h) - frame_alpha(gs, gamma, w, t - h)) / (2.0 * h);
        let res = da + C::new(0.0, gs) * C::from_polar(1.0, w * t)
            + frame_alpha(gs, gamma, w, t) * (gamma / 2.0);
        prop_assert!(res.norm() < 1e-6 * (1.0 + gs.abs()));
    }
}

#[test]
fn quiet_drive_decays_to_vacuum() {
    let cat = dissipative_cat(C::new(2.0, 1.0), 0.5, 0.0, 1.0, 0.3, 200.0).unwrap();
    assert!(cat.max_label() < 1e-12);
    assert_eq!(frame_alpha(1.0, 0.3, 2.0, 0.0), C::new(0.0, 0.0));
}

#[test]
fn two_photon_squeezes_position() {
    let dim = 60;
    let x = quadrature::<f64>(dim).unwrap();
    let x2 = &x * &x;
    let psi = two_photon_op(0.01, dim)
        .unwrap()
        .adjoint()
        .apply(&FockVector::vacuum(dim).unwrap())
        .unwrap();
    let var = psi.expectation(&x2).unwrap().re - psi.expectation(&x).unwrap().re.powi(2);
    assert!((var - (-0.04f64).exp()).abs() < 1e-6);
}

#[test]
fn single_precision_smoke() {
    let cat = dissipative_cat(
        num_complex::Complex32::new(1.0, 0.0),
        0.0f32,
        -1.0,
        1.0,
        0.5,
        0.7,
    )
    .unwrap();
    assert!((cat.trace() - 1.0).abs() < 1e-5);
    assert!(coherent_state(cat.beta_plus, 30).is_ok());
    let cs = CouplingSet::<f32>::nonlinear(0.0115);
    let v = unitary_variance(Branch::Minus, &cs, 1.0, PI as f32 / 2.0 / 1.022742).unwrap();
    assert!((v - 0.95602).abs() < 1e-4);
}
