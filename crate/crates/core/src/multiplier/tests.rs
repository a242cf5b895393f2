use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::random;
use crate::spectral::{inner, make_grid, multiply_dealiased, pairing, derivative, Grid, GridFunction, MultiIndex, Repr};
use crate::symbol::{generic_zeta, make_frame, p_symbol, Zeta};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn grid(n: usize) -> Grid {
    make_grid(3, n, 2.0 * PI, 0.9).unwrap()
}

fn basic_zeta() -> Zeta {
    Zeta::from_parts(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])
}

fn random_profile(rng: &mut impl Rng, r: f64, kind: ProfileKind) -> Profile {
    let rho = r * (0.3 + 0.3 * rng.random::<f64>());
    let dir = random::unit_vector(3, rng);
    let off = (r - rho) * 0.9 * rng.random::<f64>();
    Profile {
        kind,
        center: dir.iter().map(|x| x * off).collect(),
        radius: rho,
        amplitude: rng.random::<f64>() * 2.0 - 1.0,
        theta: 0.5,
    }
}

fn scalar_coefficient(g: &Grid, beta: Vec<u32>, profile: &Profile) -> DivergenceFormCoefficient {
    let piece = CoefficientPiece { component: 0, beta: MultiIndex(beta), field: profile.sample(g), theta_h: profile.theta };
    DivergenceFormCoefficient::new(g, CoefficientKind::Scalar, vec![piece], 2).unwrap()
}

fn vector_coefficient(g: &Grid, rng: &mut impl Rng) -> DivergenceFormCoefficient {
    let pieces = (0..3)
        .map(|j| CoefficientPiece {
            component: j,
            beta: MultiIndex::zero(3),
            field: random_profile(rng, g.radius(), ProfileKind::SmoothBump).sample(g),
            theta_h: 1.0,
        })
        .collect();
    DivergenceFormCoefficient::new(g, CoefficientKind::Vector, pieces, 2).unwrap()
}

#[test]
fn apply_p_examples() {
    let g = grid(16);
    let z = basic_zeta();
    let k = GridFunction::from_fn(&g, |_| c(3.0));
    assert!(apply_p(&k, 0.3, &z).sup_norm() < 1e-13);
    let wave = GridFunction::plane_wave(&g, &[1, -2, 2], c(1.0)).unwrap();
    let pw = apply_p(&wave, 0.3, &z);
    let expect = wave.clone().scale(p_symbol(&z, 0.3, &[1.0, -2.0, 2.0]));
    assert!(pw.sub(&expect).unwrap().sup_norm() < 1e-12);
}

#[test]
fn linear_amplitude_is_annihilated_inside() {
    let g = make_grid(3, 128, 2.0 * PI, 0.9).unwrap();
    let cut = Cutoff::default_for(&g).unwrap();
    let f = make_frame(&[0.0, 0.0, 1.0]).unwrap();
    let z = f.zeta0();
    let a = GridFunction::from_fn(&g, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l: Complex64 = (0..3).map(|j| Complex64::new(f.mu1[j], -f.mu2[j]) * x[j] / 2.0).sum();
        l * radial_profile(r, cut.r1, cut.r2)
    });
    for h in [0.125, 0.0625] {
        let pa = apply_p(&a, h, &z);
        let inner_val = pa.to_physical().values()[g.flat(&[64, 64, 64])];
        assert!((inner_val - c(-2.0 * h)).norm() < 1e-8, "P a = {inner_val}");
        let ppa = apply_p(&pa, h, &z);
        let err = ppa.sup_norm_in_ball(g.radius());
        assert!(err < 1e-8, "h={h}: {err:e}");
    }
}

#[test]
fn iphi_inverts_p_inside() {
    let g = make_grid(3, 128, 2.0 * PI, 0.9).unwrap();
    let cut = Cutoff::default_for(&g).unwrap();
    let f = make_frame(&[1.0, 0.0, 0.0]).unwrap();
    let mut rng = random::rng(4);
    for &h in &[0.125, 0.03125] {
        let z = crate::symbol::zeta_rot(&f, crate::symbol::Branch::First, h, 0.4).unwrap();
        let op = ConjugatedInverse::new(h, &z, &cut).unwrap();
        assert_eq!(op.report().clamped, 2, "ξ = 0 and ξ = ξ₀ are exact zeros");
        let u = random::bandlimited(&g, 16, &mut rng).into_physical();
        let back = op.apply_p(&op.apply_iphi(&u));
        let err = back.sub(&u).unwrap().sup_norm_in_ball(g.radius());
        assert!(err <= 1e-8 * u.sup_norm(), "h={h}: {err:e}");
    }
    let zero = GridFunction::zeros(&g, Repr::Physical);
    let (iz, _) = apply_iphi(&zero, 0.1, &basic_zeta(), &cut).unwrap();
    assert_eq!(iz.sup_norm(), 0.0);
}

#[test]
fn adjoints_are_consistent() {
    let g = grid(16);
    let cut = Cutoff::default_for(&g).unwrap();
    let f = make_frame(&[0.0, 1.0, 1.0]).unwrap();
    let h = 0.2;
    let z = crate::symbol::zeta_rot(&f, crate::symbol::Branch::Second, h, 1.0).unwrap();
    let op = ConjugatedInverse::new(h, &z, &cut).unwrap();
    assert!(op.report().clamped >= 1);
    let mut rng = random::rng(9);
    for _ in 0..3 {
        let u = random::bandlimited(&g, 9, &mut rng);
        let v = random::bandlimited(&g, 9, &mut rng);
        let a = inner(&op.apply_iphi(&u), &v).unwrap();
        let b = inner(&u, &op.apply_iphi_adjoint(&v)).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        let a = inner(&op.apply_jphi(&u), &v).unwrap();
        let b = inner(&u, &op.apply_jphi_adjoint(&v)).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }
}

#[test]
fn jphi_single_mode() {
    let g = grid(16);
    let cut = Cutoff::default_for(&g).unwrap();
    let z = basic_zeta();
    let h = 0.2371;
    let k = [2i64, 1, -1];
    let wave = GridFunction::plane_wave(&g, &k, c(1.0)).unwrap();
    let (j, rep) = apply_jphi(&wave, h, &z, &cut).unwrap();
    assert_eq!(rep.clamped, 1);
    let scale = p_symbol(&z, h, &[2.0, 1.0, -1.0]).norm().powf(-0.5);
    let expect = wave.mul_pointwise(&cut.phi).unwrap().scale(c(scale));
    assert!(j.sub(&expect).unwrap().sup_norm() < 1e-12);
    let (jz, _) = apply_jphi(&GridFunction::zeros(&g, Repr::Spectral), h, &z, &cut).unwrap();
    assert_eq!(jz.sup_norm(), 0.0);
}

#[test]
fn too_many_clamped_modes_is_an_error() {
    let g = grid(8);
    let cut = Cutoff::default_for(&g).unwrap();
    // h so large that the whole lattice sits within the clamp threshold
    let err = ConjugatedInverse::new(1e-12, &Zeta::from_parts(&[0.0; 3], &[0.0; 3]), &cut);
    assert!(matches!(err, Err(crate::LabError::TooManyClamped { .. })));
}

#[test]
fn coefficient_examples() {
    let g = grid(16);
    let mut rng = random::rng(21);
    let prof = random_profile(&mut rng, g.radius(), ProfileKind::SmoothBump);
    let q = scalar_coefficient(&g, vec![0, 0, 0], &prof);
    let u = random::bandlimited(&g, 4, &mut rng);
    let z = basic_zeta();
    let tu = apply_coefficient(&q, &u, 0.2, &z, &MultiIndex::zero(3)).unwrap();
    let direct = multiply_dealiased(&prof.sample(&g), &u).unwrap();
    assert!(tu.sub(&direct).unwrap().sup_norm() < 1e-13);

    // γ = e₁ on a constant: only the shift survives
    let one = GridFunction::from_fn(&g, |_| c(1.0));
    let h = 0.2;
    let t1 = apply_coefficient(&q, &one, h, &z, &MultiIndex::unit(3, 0)).unwrap();
    let expect = prof.sample(&g).scale(z.0[0] * Complex64::new(0.0, -1.0 / h));
    assert!(t1.sub(&expect).unwrap().sup_norm() < 1e-12);

    let zero_q = DivergenceFormCoefficient::zero(&g, CoefficientKind::Vector);
    let t = apply_coefficient_transpose(&zero_q, &u, h, &z).unwrap();
    assert_eq!(t.sup_norm(), 0.0);
}

#[test]
fn transpose_of_constant_is_divergence() {
    let g = grid(16);
    let mut rng = random::rng(22);
    let qv = vector_coefficient(&g, &mut rng);
    let syn = qv.synthesize().unwrap();
    let one = GridFunction::from_fn(&g, |_| c(1.0));
    // with h → ∞ the shift vanishes: −D·Q
    let h = 1e300;
    let z = basic_zeta();
    let t = apply_coefficient_transpose(&qv, &one, h, &z).unwrap();
    let mut div = GridFunction::zeros(&g, Repr::Spectral);
    for j in 0..3 {
        div = div.sub(&derivative(&syn.fields[j], &MultiIndex::unit(3, j)).unwrap()).unwrap();
    }
    assert!(t.sub(&div).unwrap().sup_norm() < 1e-12);
}

#[test]
fn support_and_order_are_validated() {
    let g = grid(16);
    let big = Profile { kind: ProfileKind::SmoothBump, center: vec![0.5, 0.0, 0.0], radius: 0.8, amplitude: 1.0, theta: 1.0 };
    let piece = CoefficientPiece { component: 0, beta: MultiIndex::zero(3), field: big.sample(&g), theta_h: 1.0 };
    assert!(DivergenceFormCoefficient::new(&g, CoefficientKind::Scalar, vec![piece], 2).is_err());
    let ok = Profile { center: vec![0.0; 3], radius: 0.8, ..big };
    let piece = CoefficientPiece { component: 0, beta: MultiIndex(vec![2, 0, 0]), field: ok.sample(&g), theta_h: 1.0 };
    assert!(DivergenceFormCoefficient::new(&g, CoefficientKind::Scalar, vec![piece.clone()], 2).is_ok());
    assert!(DivergenceFormCoefficient::new(&g, CoefficientKind::Vector, vec![piece], 2).is_err());
}

#[test]
fn leibniz_adjoint_identity() {
    let g = grid(16);
    let mut rng = random::rng(23);
    let h = 0.15;
    let z = generic_zeta(3);
    let shift = zeta_shift(&z, h);
    for (alpha, beta) in [(vec![1, 0, 0], vec![0, 1, 0]), (vec![0, 1, 1], vec![1, 0, 1]), (vec![0, 0, 0], vec![2, 0, 0])] {
        let prof = random_profile(&mut rng, g.radius(), ProfileKind::HolderBump);
        let f = prof.sample(&g);
        let q = scalar_coefficient(&g, alpha.clone(), &prof);
        let u = random::bandlimited(&g, 4, &mut rng);
        let v = random::bandlimited(&g, 4, &mut rng);
        let beta = MultiIndex(beta);
        let lhs = pairing(&apply_coefficient(&q, &u, h, &z, &beta).unwrap(), &v).unwrap();
        let mut sum = GridFunction::zeros(&g, Repr::Spectral);
        let fact = beta.factorial();
        for (b1, b2) in beta.splits() {
            let coef = fact / (b1.factorial() * b2.factorial()) * b2.power(&shift);
            let prod = multiply_dealiased(&derivative(&u, &b1).unwrap(), &v).unwrap();
            sum = sum.axpy(coef, &prod).unwrap();
        }
        let alpha = MultiIndex(alpha);
        let sign = if alpha.order().is_multiple_of(2) { 1.0 } else { -1.0 };
        let rhs = pairing(&f, &derivative(&sum, &alpha).unwrap()).unwrap() * sign;
        assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm(), "{lhs} vs {rhs}");
    }
}

#[test]
fn transpose_duality() {
    let g = grid(16);
    let mut rng = random::rng(24);
    let qv = vector_coefficient(&g, &mut rng);
    let z = generic_zeta(3);
    let minus = Zeta(z.0.iter().map(|x| -x).collect());
    let h = 0.3;
    for _ in 0..4 {
        let u = random::bandlimited(&g, 4, &mut rng);
        let v = random::bandlimited(&g, 4, &mut rng);
        let lhs = pairing(&apply_coefficient(&qv, &u, h, &z, &MultiIndex::zero(3)).unwrap(), &v).unwrap();
        let rhs = pairing(&u, &apply_coefficient_transpose(&qv, &v, h, &minus).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm());
    }
}

#[test]
fn smooth_multiply_examples() {
    let g = grid(16);
    let mut rng = random::rng(25);
    let u = random::bandlimited(&g, 4, &mut rng);
    let w = crate::symbol::XLambdaWeight::new(0.1, generic_zeta(3), 0.5);
    let one = GridFunction::from_fn(&g, |_| c(1.0));
    let (_, r) = smooth_multiply(&one, &u, &w).unwrap();
    assert!((r - 1.0).abs() < 1e-12);

    let cut = Cutoff::default_for(&g).unwrap();
    let wave = GridFunction::plane_wave(&g, &[1, 0, -2], c(1.0)).unwrap();
    let (prod, _) = smooth_multiply(&cut.phi, &wave, &w).unwrap();
    let phi_hat = cut.phi.to_spectral();
    for kk in [[1i64, 0, -2], [2, 1, -1], [0, 0, 0]] {
        let shifted = [kk[0] - 1, kk[1], kk[2] + 2];
        let got = prod.values()[g.flat_of_frequency(&kk).unwrap()];
        let want = phi_hat.values()[g.flat_of_frequency(&shifted).unwrap()];
        assert!((got - want).norm() < 1e-12 * phi_hat.values()[0].norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coefficient_action_is_linear(seed in 0u64..500, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = grid(8);
        let mut rng = random::rng(seed);
        let q1 = vector_coefficient(&g, &mut rng);
        let q2 = vector_coefficient(&g, &mut rng);
        let u = random::bandlimited(&g, 3, &mut rng);
        let v = random::bandlimited(&g, 3, &mut rng);
        let z = generic_zeta(3);
        let h = 0.25;
        let zero = MultiIndex::zero(3);
        let lhs = apply_coefficient(&q1, &u.axpy(c(a), &v).unwrap(), h, &z, &zero).unwrap();
        let rhs = apply_coefficient(&q1, &u, h, &z, &zero).unwrap()
            .axpy(c(a), &apply_coefficient(&q1, &v, h, &z, &zero).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * (1.0 + rhs.sup_norm()));
        let comb = q1.combine(b, &q2).unwrap();
        let lhs = apply_coefficient(&comb, &u, h, &z, &zero).unwrap();
        let rhs = apply_coefficient(&q1, &u, h, &z, &zero).unwrap()
            .axpy(c(b), &apply_coefficient(&q2, &u, h, &z, &zero).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn cutoff_stays_in_unit_interval(r1 in 1.0f64..1.5, w in 0.2f64..1.5) {
        let g = grid(8);
        let cut = build_cutoff(&g, r1, (r1 + w).min(3.1)).unwrap();
        for v in cut.phi.values() {
            prop_assert!(v.re >= 0.0 && v.re <= 1.0);
        }
    }
}
