use carnot_verif::keller_osserman::{ko_test, KVariant, KoOptions, KoVerdict, NonlinearityTriple};
use carnot_verif::PhiProfile64;

#[test]
fn power_law_verdicts_match_exponent_criterion() {
    let opts = KoOptions::default();
    let mut checked = 0;
    for &p in &[1.5, 2.0, 2.5, 3.0, 4.0] {
        let prof = PhiProfile64::p_laplacian(p).unwrap();
        for &a in &[-0.5, 0.0, 0.25, 0.5, 0.75] {
            for &omega in &[0.1, 0.5, 1.0, 2.0, 3.0] {
                let triple = NonlinearityTriple::<f64>::power_law(0.0, omega, a, p);
                let rep = ko_test(&prof, &triple, KVariant::Modified, &opts).unwrap();
                let lambda = (omega + 1.0) / (p - a);
                if (lambda - 1.0).abs() < opts.delta_band {
                    continue;
                }
                let want = if lambda > 1.0 { KoVerdict::Holds } else { KoVerdict::Fails };
                assert_eq!(rep.verdict, want, "p={p} a={a} omega={omega}: {rep:?}");
                assert!((rep.tail_exponent + lambda).abs() < 1e-2, "p={p} a={a} omega={omega}: {rep:?}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 100, "{checked}");
}
