use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::random;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rel_err(a: &GridFunction, b: &GridFunction) -> f64 {
    let a = a.to_physical();
    let b = b.to_physical();
    let num: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values().iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

#[test]
fn make_grid_examples() {
    let g = make_grid(3, 32, 2.0 * PI, 0.9).unwrap();
    assert_eq!(g.len(), 32768);
    assert!(make_grid(3, 32, 2.0 * PI, 3.0).is_err());
    assert!(make_grid(3, 48, 2.0 * PI, 0.9).is_err());
    assert!(make_grid(3, 4, 2.0 * PI, 0.9).is_err());
}

#[test]
fn forward_transform_matches_direct_sum() {
    let g = make_grid(2, 8, 3.0, 0.5).unwrap();
    let mut rng = random::rng(1);
    let vals = (0..g.len()).map(|_| random::complex_normal(&mut rng)).collect();
    let u = GridFunction::from_values(&g, Repr::Physical, vals).unwrap();
    let spec = u.to_spectral();
    let dx = g.spec().spacing();
    let mut xs = Vec::new();
    g.for_each_point(|_, x| xs.push(x.to_vec()));
    g.for_each_frequency(|i, xi| {
        let direct: Complex64 = xs
            .iter()
            .zip(u.values())
            .map(|(x, v)| v * Complex64::from_polar(1.0, -(x[0] * xi[0] + x[1] * xi[1])))
            .sum::<Complex64>()
            * dx
            * dx;
        assert!((direct - spec.values()[i]).norm() < 1e-12 * (1.0 + direct.norm()));
    });
}

#[test]
fn round_trip_and_parseval_all_sizes() {
    let mut rng = random::rng(7);
    for (d, n) in [(1, 8), (1, 64), (2, 16), (3, 8), (3, 16), (3, 32)] {
        let g = make_grid(d, n, 2.0 * PI, 0.5).unwrap();
        let u = random::bandlimited(&g, n as i64 / 2 + 1, &mut rng).into_physical();
        let back = u.to_spectral().into_physical();
        assert!(rel_err(&back, &u) < 1e-12, "round trip d={d} n={n}");
        let l2 = u.l2_norm();
        assert!((l2 - u.spectral_l2_norm()).abs() < 1e-12 * l2);
        assert!((sobolev_norm(&u, 0.0) - l2).abs() < 1e-12 * l2);
    }
}

#[test]
fn multiplier_examples() {
    let g = make_grid(3, 16, 2.0 * PI, 0.9).unwrap();
    let mut rng = random::rng(3);
    let u = random::bandlimited(&g, 4, &mut rng);
    let same = apply_multiplier(&u, |_| c(1.0)).unwrap();
    assert!(rel_err(&same, &u) < 1e-15);

    let k = [2i64, -1, 3];
    let wave = GridFunction::plane_wave(&g, &k, c(1.0)).unwrap();
    let jap = apply_multiplier(&wave, |xi| c(1.0 + xi.iter().map(|x| x * x).sum::<f64>())).unwrap();
    assert!(rel_err(&jap, &wave.clone().scale(c(15.0))) < 1e-13);

    // D^α e^{ix·ξ*} = (ξ*)^α e^{ix·ξ*}, checked against point values
    let alpha = MultiIndex(vec![2, 1, 0]);
    let d = derivative(&wave, &alpha).unwrap().into_physical();
    let expect = GridFunction::from_fn(&g, |x| {
        let phase = 2.0 * x[0] - x[1] + 3.0 * x[2];
        Complex64::from_polar(-4.0, phase)
    });
    assert!(rel_err(&d, &expect) < 1e-12);

    assert!(apply_multiplier(&wave, |_| c(f64::NAN)).is_err());
}

#[test]
fn derivative_examples() {
    let g = make_grid(3, 16, 2.0 * PI, 0.9).unwrap();
    let u = GridFunction::from_fn(&g, |x| Complex64::from_polar(1.0, x[0]));
    let du = derivative(&u, &MultiIndex::unit(3, 0)).unwrap();
    assert!(rel_err(&du, &u) < 1e-13);
    assert!(rel_err(&derivative(&u, &MultiIndex::zero(3)).unwrap(), &u) < 1e-15);
    let k = GridFunction::from_fn(&g, |_| c(2.5));
    assert!(derivative(&k, &MultiIndex(vec![0, 1, 1])).unwrap().sup_norm() < 1e-13);
}

#[test]
fn sobolev_single_mode() {
    let g = make_grid(3, 16, 2.0 * PI, 0.9).unwrap();
    assert_eq!(sobolev_norm(&GridFunction::zeros(&g, Repr::Physical), 1.3), 0.0);
    let amp = 0.7;
    let wave = GridFunction::plane_wave(&g, &[1, 2, 0], c(amp)).unwrap();
    let s = 1.5;
    let expect = amp * 6.0f64.powf(s / 2.0) * (2.0 * PI).powf(1.5);
    assert!((sobolev_norm(&wave, s) - expect).abs() < 1e-12 * expect);
}

#[test]
fn holder_examples() {
    let g = make_grid(3, 16, 2.0 * PI, 0.9).unwrap();
    let k = GridFunction::from_fn(&g, |_| Complex64::new(-1.5, 2.0));
    let hd = holder_data(&k, 0.5).unwrap();
    assert!((hd.sup - 2.5).abs() < 1e-15 && hd.quotient == 0.0);
    let lin = GridFunction::from_real_fn(&g, |x| x[0]);
    let hd = holder_data(&lin, 1.0).unwrap();
    assert!((hd.quotient - 1.0).abs() < 1e-12);
    let bump = GridFunction::from_real_fn(&g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let hd = holder_data(&bump, 0.7).unwrap();
    let max = bump.values().iter().fold(0.0f64, |m, v| m.max(v.re));
    assert!(hd.sup >= max);
    assert!(holder_data(&bump.to_spectral(), 0.5).is_err());
}

#[test]
fn mollify_constant_and_low_mode() {
    let g = make_grid(3, 16, 2.0 * PI, 0.9).unwrap();
    let one = GridFunction::from_fn(&g, |_| c(1.0));
    let split = mollify_split(&one, 0.3, 0.5).unwrap();
    assert!(split.rough_sup < 1e-13);
    assert!(rel_err(&split.smooth, &one) < 1e-13);
    let wave = GridFunction::from_fn(&g, |x| Complex64::from_polar(1.0, x[1]));
    let a = mollify_split(&wave, 0.25, 0.5).unwrap().rough_sup;
    let b = mollify_split(&wave, 0.0625, 0.5).unwrap().rough_sup;
    assert!(b < a / 10.0);
    assert!(mollify_split(&wave, 0.0, 0.5).is_err());
}

/// `|f^h(0)|` for `f = |sin x|^θ`, from direct quadrature of the Gaussian average.
fn mollified_cusp_oracle(theta: f64, h: f64) -> f64 {
    let m = 200_000;
    let span = 12.0 * h;
    let dy = 2.0 * span / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let y = -span + (i as f64 + 0.5) * dy;
        let g = (-0.5 * y * y / (h * h)).exp() / (h * (2.0 * PI).sqrt());
        acc += g * y.sin().abs().powf(theta) * dy;
    }
    acc
}

#[test]
fn mollify_holder_profile_slope() {
    let theta = 0.5;
    let g = make_grid(1, 1 << 14, 2.0 * PI, 1.0).unwrap();
    let f = GridFunction::from_real_fn(&g, |x| x[0].sin().abs().powf(theta));
    let hs: Vec<f64> = (3..=7).map(|k| 2f64.powi(-k)).collect();
    let mut logs = Vec::new();
    for &h in &hs {
        let split = mollify_split(&f, h, theta).unwrap();
        let oracle = mollified_cusp_oracle(theta, h);
        assert!((split.rough_sup - oracle).abs() < 0.02 * oracle, "h={h}: {} vs {oracle}", split.rough_sup);
        logs.push((h.log2(), split.rough_sup.log2()));
    }
    let slope = crate::fit::loglog_slope(&logs).slope;
    assert!((slope - theta).abs() < 0.1, "slope {slope}");
}

#[test]
fn dealiased_product_is_exact_on_band() {
    let g = make_grid(2, 16, 2.0 * PI, 0.5).unwrap();
    let mut rng = random::rng(11);
    let u = random::bandlimited(&g, 9, &mut rng);
    let v = random::bandlimited(&g, 9, &mut rng);
    let p = multiply_dealiased(&u, &v).unwrap();
    // direct convolution: (uv)^(k) = L^{-d} Σ_j û(j) v̂(k-j)
    let us = u.to_spectral();
    let vs = v.to_spectral();
    let w = g.length().powi(-2);
    let mut ki = [0i64; 2];
    let mut kj = [0i64; 2];
    for a in 0..g.len() {
        g.frequency_index(a, &mut ki);
        let mut acc = Complex64::default();
        for b in 0..g.len() {
            g.frequency_index(b, &mut kj);
            let diff = [ki[0] - kj[0], ki[1] - kj[1]];
            if diff.iter().all(|&t| (-8..8).contains(&t)) {
                let kb = [diff[0], diff[1]];
                acc += us.values()[b] * vs.values()[g.flat_of_frequency(&kb).unwrap()];
            }
        }
        acc *= w;
        assert!((acc - p.values()[a]).norm() < 1e-10 * (1.0 + acc.norm()));
    }
}

#[test]
fn io_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_grid(3, 8, 2.0 * PI, 0.9).unwrap();
    let mut rng = random::rng(5);
    let u = random::bandlimited(&g, 3, &mut rng);
    let path = dir.path().join("u.bin");
    io::save(&u, &path).unwrap();
    let back = io::load(&path).unwrap();
    assert_eq!(back.repr(), Repr::Spectral);
    assert_eq!(back.values(), u.values());
    assert_eq!(back.grid().spec(), u.grid().spec());
}

#[test]
fn multi_index_helpers() {
    assert_eq!(MultiIndex::all_of_order(3, 2).len(), 6);
    let a = MultiIndex(vec![2, 1]);
    assert_eq!(a.splits().len(), 6);
    assert_eq!(a.factorial(), 2.0);
    // multinomial: Σ_{|α|=m} m!/α! x^{2α} = |x|^{2m}
    let x = [0.3, -1.2, 0.7];
    let m = 3;
    let lhs: f64 = MultiIndex::all_of_order(3, m)
        .iter()
        .map(|al| 6.0 / al.factorial() * al.power_real(&x).powi(2))
        .sum();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    assert!((lhs - r2.powi(3)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivative_composes(a in prop::collection::vec(0u32..3, 3), b in prop::collection::vec(0u32..3, 3), seed in 0u64..1000) {
        let g = make_grid(3, 8, 2.0 * PI, 0.9).unwrap();
        let mut rng = random::rng(seed);
        let u = random::bandlimited(&g, 3, &mut rng);
        let a = MultiIndex(a);
        let b = MultiIndex(b);
        let lhs = derivative(&derivative(&u, &a).unwrap(), &b).unwrap();
        let rhs = derivative(&u, &a.plus(&b)).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn transform_is_linear(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let g = make_grid(2, 16, 5.0, 1.0).unwrap();
        let mut rng = random::rng(seed);
        let u = random::bandlimited(&g, 9, &mut rng).into_physical();
        let v = random::bandlimited(&g, 9, &mut rng).into_physical();
        let s = Complex64::new(re, im);
        let lhs = u.axpy(s, &v).unwrap().into_spectral();
        let rhs = u.to_spectral().axpy(s, &v.to_spectral()).unwrap();
        prop_assert!(rel_err(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn round_trip_random(seed in 0u64..1000, d in 1usize..4) {
        let n = if d == 3 { 8 } else { 32 };
        let g = make_grid(d, n, 2.0 * PI, 0.5).unwrap();
        let mut rng = random::rng(seed);
        let u = random::bandlimited(&g, n as i64 / 2 + 1, &mut rng);
        let back = u.to_physical().into_spectral();
        prop_assert!(rel_err(&back, &u) < 1e-12);
    }
}
