use num_rational::Ratio;
use proptest::prelude::*;

use carnot_verif::calculus::norm_jet;
use carnot_verif::keller_osserman::{big_f, KFunction, KVariant, KoOptions};
use carnot_verif::numerics::QuadOptions;
use carnot_verif::oracle::{classify_main, eta, h_constant, sigma_star, HBranch, ParamSet};
use carnot_verif::profile::ScalarFn;
use carnot_verif::witness::{sharpness_gap, verify_basamento, verify_main_sharpness, RadiusSamples};
use carnot_verif::{CarnotGroup64, PhiProfile64, RadialArg};

type Q = Ratio<i64>;

fn rq(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let s = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn heisenberg_group_axioms(m in 1usize..=2, seed in any::<u64>()) {
        let g = CarnotGroup64::heisenberg(m).unwrap();
        let n = 2 * m + 1;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let mut pick = || -> Vec<f64> { (0..n).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect() };
        let (x, y, z) = (pick(), pick(), pick());
        let l = g.compose(&g.compose(&x, &y).unwrap().0, &z).unwrap().0;
        let r = g.compose(&x, &g.compose(&y, &z).unwrap().0).unwrap().0;
        prop_assert!(rel(&l, &r) <= 1e-10);
        let e = g.origin().0;
        prop_assert!(rel(&g.compose(&x, &e).unwrap().0, &x) <= 1e-12);
        prop_assert!(rel(&g.compose(&e, &x).unwrap().0, &x) <= 1e-12);
        let xi = g.inverse(&x).unwrap().0;
        prop_assert!(rel(&g.compose(&x, &xi).unwrap().0, &e) <= 1e-12);
    }

    #[test]
    fn norm_is_homogeneous(x in coords(3), r in 0.1..10.0f64) {
        for g in [CarnotGroup64::heisenberg(1).unwrap(), CarnotGroup64::euclidean(3).unwrap()] {
            let d = g.dilate(r, &x).unwrap().0;
            let (a, b) = (g.hom_norm(&d), r * g.hom_norm(&x));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn horizontal_norm_gradient_bounded(x in coords(5)) {
        let g = CarnotGroup64::heisenberg(2).unwrap();
        prop_assume!(g.hom_norm(&x) > 1e-3);
        let j = norm_jet(&g, &x, RadialArg::R).unwrap();
        let n2: f64 = j.grad.iter().map(|c| c * c).sum();
        prop_assert!(n2.sqrt() <= 1.0 + 1e-9);
    }

    #[test]
    fn eta_equivalence(p in 2i64..=40, chi in 0i64..40, mu in -40i64..40, sigma in -40i64..80) {
        // tenths; χ < p − 1 required
        let (p, chi, mu, sigma) = (rq(p, 10) + rq(1, 1), rq(chi, 10), rq(mu, 10), rq(sigma, 10));
        prop_assume!(chi < p - rq(1, 1));
        let ss = sigma_star(p, chi, mu).unwrap();
        prop_assert_eq!(sigma <= ss, sigma >= eta(p, chi, mu, sigma));
    }

    #[test]
    fn classify_main_is_monotone(
        p in 10i64..=40, chi in 0i64..=40, mu in -20i64..=40, omega in -10i64..=40,
        dw in 0i64..=20, dm in 0i64..=20,
    ) {
        let (p, chi, mu, omega) = (rq(p, 10), rq(chi, 10), rq(mu, 10), rq(omega, 10));
        let base = classify_main(&ParamSet::new(p, chi, mu, 3).with_omega(omega));
        let moved = classify_main(&ParamSet::new(p, chi, mu - rq(dm, 10), 3).with_omega(omega + rq(dw, 10)));
        prop_assert!(!base.applies() || moved.applies());
    }

    #[test]
    fn largest_p_dominates(k in 2i64..=4, pt in 0i64..=20, eta in 0i64..=30, mu in -10i64..=40, omega in 0i64..=40) {
        // mean curvature profiles are (WpC) on [k/2, k]; fix η = p − 1 − χ
        let prof = PhiProfile64::mean_curvature(k as f64).unwrap();
        let (lo, hi) = prof.p_interval().unwrap();
        prop_assert_eq!((lo, hi), (k as f64 / 2.0, k as f64));
        let pm = rq(k, 1);
        let p = rq(k, 2) + rq(k, 2) * rq(pt, 20);
        prop_assume!(p > rq(1, 1));
        let (eta, mu, omega) = (rq(eta, 10), rq(mu, 10), rq(omega, 10));
        let at = |p: Q| classify_main(&ParamSet::new(p, p - rq(1, 1) - eta, mu, 3).with_omega(omega));
        prop_assert!(!at(p).applies() || at(pm).applies());
    }

    #[test]
    fn h_constant_closed_form_and_left_continuity(
        p in 11i64..=40, chi in 0i64..=30, mu in -20i64..=30, q in 1u32..=8, below in 1i64..=50,
    ) {
        let (p, chi, mu) = (rq(p, 10), rq(chi, 10), rq(mu, 10));
        prop_assume!(chi < p - rq(1, 1) && mu <= p - chi);
        let ss = sigma_star(p, chi, mu).unwrap();
        prop_assume!(ss >= rq(0, 1));
        let at = h_constant(ss, chi, p, mu, q).unwrap();
        let (s, pf, cf) = (*ss.numer() as f64 / *ss.denom() as f64, to_f(p), to_f(chi));
        let closed = s.powf(pf - cf - 1.0) * ((pf - 1.0) * (s - 1.0) + q as f64 - 1.0);
        if at.branch == HBranch::CriticalPositive {
            prop_assert!(closed > 0.0);
            prop_assert!((at.h - closed).abs() <= 1e-12 * closed.max(1.0));
        } else {
            prop_assert_eq!(at.h, 0.0);
            let left = ss - rq(below, 1000);
            if left >= rq(0, 1) {
                prop_assert_eq!(h_constant(left, chi, p, mu, q).unwrap().h, 0.0);
            }
        }
    }

    #[test]
    fn sharpness_gap_vanishes_at_sigma_star(chi in 0.0..0.95f64, mu in -1.0..1.0f64) {
        prop_assume!(mu < 2.0 - chi);
        let ss = (2.0 - chi - mu) / (1.0 - chi);
        prop_assert!(sharpness_gap(chi, mu, ss).abs() <= 1e-12 * ss.max(1.0));
    }

    #[test]
    fn big_f_is_monotone(omega in 0.0..3.0f64, t in 0.01..100.0f64, dt in 0.0..10.0f64) {
        let f: ScalarFn<f64> = std::sync::Arc::new(move |s: f64| s.max(0.0).powf(omega));
        let q = QuadOptions::default();
        prop_assert!(big_f(&f, t + dt, &q).unwrap() >= big_f(&f, t, &q).unwrap());
    }
}

fn to_f(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn k_is_increasing_and_inverts(p in 1.2..4.0f64, a in -0.5..0.9f64) {
        prop_assume!(p - a > 0.3);
        let prof = PhiProfile64::p_laplacian(p).unwrap();
        let l: ScalarFn<f64> = std::sync::Arc::new(move |t: f64| t.powf(a));
        let k = KFunction::new(&prof, l, KVariant::Modified, &KoOptions::default()).unwrap();
        let ts: Vec<f64> = (0..60).map(|i| 10f64.powf(-4.0 + 10.0 * i as f64 / 59.0)).collect();
        let ks: Vec<f64> = ts.iter().map(|&t| k.eval(t).unwrap()).collect();
        for w in ks.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        for (&t, &kv) in ts.iter().zip(&ks) {
            let back = k.inverse(kv).unwrap();
            prop_assert!((back - t).abs() <= 1e-8 * t, "t={} back={}", t, back);
        }
    }

    #[test]
    fn profiles_vanish_at_zero_and_are_positive(p in 1.0..5.0f64, k in 1.0..2.0f64) {
        let ts: Vec<f64> = (0..1000).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 999.0)).collect();
        let pl = PhiProfile64::p_laplacian(p).unwrap();
        let mc = PhiProfile64::mean_curvature(k).unwrap();
        prop_assert_eq!(pl.phi(0.0), 0.0);
        prop_assert_eq!(mc.phi(0.0), 0.0);
        for &t in &ts {
            prop_assert!(pl.phi(t) > 0.0 && mc.phi(t) > 0.0);
            prop_assert!(mc.phi(t) <= 1.0 + 1e-12);
            prop_assert!(pl.s(t) >= 1.0 / pl.wpc_c() - 1e-12);
        }
    }
}

#[test]
fn witness_margins_reproduce_under_doubled_density() {
    let base = RadiusSamples::default();
    let dense = base.doubled();
    let pairs = [
        (verify_basamento(2.0, 3, &base).unwrap(), verify_basamento(2.0, 3, &dense).unwrap()),
        (verify_basamento(0.5, 4, &base).unwrap(), verify_basamento(0.5, 4, &dense).unwrap()),
        (
            verify_main_sharpness(0.3, 0.2, (2.0 - 0.5) / 0.7, 3, &base).unwrap(),
            verify_main_sharpness(0.3, 0.2, (2.0 - 0.5) / 0.7, 3, &dense).unwrap(),
        ),
    ];
    for (a, b) in pairs {
        assert!(a.certified() && b.certified());
        assert!((a.c_star - b.c_star).abs() <= 0.01 * a.c_star, "{} vs {}", a.c_star, b.c_star);
        assert!((a.min_margin - b.min_margin).abs() <= 0.01 * a.min_margin.abs());
    }
}
