//! `F`, `K`, `K⁻¹` and the Keller–Osserman test `1/(K⁻¹∘F) ∈ L¹(+∞)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::CheckResult;
use crate::numerics::{integrate, log_grid, loglog_slope, QuadOptions};
use crate::profile::{PhiProfile, ScalarFn};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KVariant {
    /// `K(t) = ∫₀ᵗ sφ′(s)/l(s) ds`
    Derivative,
    /// `K(t) = ∫₀ᵗ φ(s)/l(s) ds`
    #[default]
    Modified,
}

/// A lower bound `value ≥ constant · (power law with exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub constant: f64,
    pub exponent: f64,
}

/// `(b, f, l)` with the certificates
/// `b ≥ C_b(1+r)^{−μ}`, `f(t) ≥ C_f t^ω` for large `t`,
/// `l(t) ≥ C_l φ(t)/t^{p−1−χ}`.
#[derive(Clone)]
pub struct NonlinearityTriple<T> {
    pub b: ScalarFn<T>,
    pub b_cert: Certificate,
    pub f: ScalarFn<T>,
    pub f_cert: Certificate,
    /// `C` in `t f(t) ≥ C|t|^{ω+1}` on ℝ, when it holds.
    pub f_symmetric: Option<f64>,
    pub l: ScalarFn<T>,
    pub l_cert: Certificate,
    pub l_at_zero_positive: bool,
}

impl<T: Real> NonlinearityTriple<T> {
    pub fn mu(&self) -> f64 {
        self.b_cert.exponent
    }

    pub fn omega(&self) -> f64 {
        self.f_cert.exponent
    }

    pub fn chi(&self) -> f64 {
        self.l_cert.exponent
    }

    /// `b = (1+r)^{−μ}`, `f = t^ω` (odd extension), `l = t^a`.
    pub fn power_law(mu: f64, omega: f64, a: f64, p: f64) -> Self {
        let (tm, to, ta) = (T::lit(mu), T::lit(omega), T::lit(a));
        NonlinearityTriple {
            b: Arc::new(move |r: T| (T::one() + r).powf(-tm)),
            b_cert: Certificate { constant: 1.0, exponent: mu },
            f: Arc::new(move |t: T| if t > T::zero() { t.powf(to) } else { -(-t).powf(to) }),
            f_cert: Certificate { constant: 1.0, exponent: omega },
            f_symmetric: Some(1.0),
            l: Arc::new(move |t: T| t.powf(ta)),
            // t^a = t^{p-1}/t^{p-1-χ} with χ = a for φ = t^{p-1}
            l_cert: Certificate { constant: 1.0, exponent: a.min(p - 1.0) },
            l_at_zero_positive: a == 0.0,
        }
    }

    /// The mean curvature family `l(t) = t^χ/(1+t)`, `f = t^ω`,
    /// `b = (1+r)^{−μ}`; `C_l = 2^{−1/2}` against `φ = t/√(1+t²)`, `p = 2`.
    pub fn mean_curvature_family(mu: f64, omega: f64, chi: f64) -> Self {
        let (tm, to, tc) = (T::lit(mu), T::lit(omega), T::lit(chi));
        NonlinearityTriple {
            b: Arc::new(move |r: T| (T::one() + r).powf(-tm)),
            b_cert: Certificate { constant: 1.0, exponent: mu },
            f: Arc::new(move |t: T| if t > T::zero() { t.powf(to) } else { -(-t).powf(to) }),
            f_cert: Certificate { constant: 1.0, exponent: omega },
            f_symmetric: Some(1.0),
            l: Arc::new(move |t: T| t.powf(tc) / (T::one() + t)),
            l_cert: Certificate {
                constant: std::f64::consts::FRAC_1_SQRT_2,
                exponent: chi,
            },
            l_at_zero_positive: chi == 0.0,
        }
    }

    /// Sampled checks of positivity and of the three certificates; `f` is
    /// checked on `[t_large, 1e8]`.
    pub fn verify(&self, profile: &PhiProfile<T>, t_large: f64) -> Vec<CheckResult> {
        let p = profile.wpc_p().as_f64();
        let ts = log_grid(1e-6, 1e8, 400);
        let mut out = Vec::new();
        let worst = |vals: &mut dyn Iterator<Item = f64>| vals.fold(0.0_f64, |a, v| a.max(v));

        let b_pos = worst(&mut ts.iter().map(|&r| if (self.b)(T::lit(r)).as_f64() > 0.0 { 0.0 } else { 1.0 }));
        out.push(CheckResult::new("b_positive", b_pos, 0.0));
        let b_def = worst(&mut ts.iter().map(|&r| {
            let lower = self.b_cert.constant * (1.0 + r).powf(-self.b_cert.exponent);
            ((lower - (self.b)(T::lit(r)).as_f64()) / lower).max(0.0)
        }));
        out.push(CheckResult::new("b_certificate", b_def, 1e-12));

        let l_pos = worst(&mut ts.iter().map(|&t| if (self.l)(T::lit(t)).as_f64() > 0.0 { 0.0 } else { 1.0 }));
        out.push(CheckResult::new("l_positive", l_pos, 0.0));
        let chi = self.l_cert.exponent;
        let l_def = worst(&mut ts.iter().map(|&t| {
            let lower = self.l_cert.constant * profile.phi(T::lit(t)).as_f64() / t.powf(p - 1.0 - chi);
            ((lower - (self.l)(T::lit(t)).as_f64()) / lower).max(0.0)
        }));
        out.push(CheckResult::new("l_certificate", l_def, 1e-12));

        let tf = log_grid(t_large, 1e8_f64.max(t_large * 10.0), 200);
        let f_def = worst(&mut tf.iter().map(|&t| {
            let lower = self.f_cert.constant * t.powf(self.f_cert.exponent);
            ((lower - (self.f)(T::lit(t)).as_f64()) / lower).max(0.0)
        }));
        out.push(CheckResult::new("f_certificate", f_def, 1e-12));

        if let Some(c) = self.f_symmetric {
            let w = self.f_cert.exponent;
            let s_def = worst(&mut ts.iter().flat_map(|&t| [t, -t]).map(|t| {
                let lower = c * t.abs().powf(w + 1.0);
                ((lower - t * (self.f)(T::lit(t)).as_f64()) / lower).max(0.0)
            }));
            out.push(CheckResult::new("f_symmetric_certificate", s_def, 1e-12));
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KoOptions {
    /// Below `t0` the `K` integrand is replaced by its fitted power law.
    pub t0: f64,
    /// Lower end of the reported quadrature of `1/(K⁻¹∘F)`.
    pub t_start: f64,
    /// Tail fit runs over `[t1/100, t1]`.
    pub t1: f64,
    pub delta_band: f64,
    pub fit_points: usize,
    /// Tabulation of `K` stops here.
    pub cap: f64,
    pub quad: QuadOptions,
}

impl Default for KoOptions {
    fn default() -> Self {
        KoOptions {
            t0: 1e-6,
            t_start: 1.0,
            t1: 1e8,
            delta_band: 0.05,
            fit_points: 41,
            cap: 1e150,
            quad: QuadOptions::default(),
        }
    }
}

/// `F(t) = ∫₀ᵗ f`.
pub fn big_f<T: Real>(f: &ScalarFn<T>, t: T, quad: &QuadOptions) -> Result<T> {
    if t < T::zero() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t.as_f64(),
            reason: "F is evaluated for t >= 0".into(),
        });
    }
    Ok(integrate(|s| f(s), T::zero(), t, quad)?.value)
}

/// `K` tabulated cumulatively on a doubling grid from `t0`, with the power
/// law `A s^a` standing in for the integrand on `(0, t0]`.
#[derive(Clone)]
pub struct KFunction<T> {
    profile: PhiProfile<T>,
    l: ScalarFn<T>,
    variant: KVariant,
    quad: QuadOptions,
    ts: Vec<T>,
    ks: Vec<T>,
    head_exponent: T,
    head_coef: T,
    t0: T,
}

impl<T: Real> KFunction<T> {
    pub fn new(profile: &PhiProfile<T>, l: ScalarFn<T>, variant: KVariant, opts: &KoOptions) -> Result<Self> {
        if variant == KVariant::Derivative && !profile.has_phi_prime() {
            return Err(Error::MissingDerivative("phi_prime (derivative K variant)"));
        }
        let mut k = KFunction {
            profile: profile.clone(),
            l,
            variant,
            quad: opts.quad,
            ts: Vec::new(),
            ks: Vec::new(),
            head_exponent: T::zero(),
            head_coef: T::zero(),
            t0: T::lit(opts.t0),
        };
        let t0 = k.t0;
        let ten = T::lit(10.0);
        let (g0, g1) = (k.integrand(t0), k.integrand(t0 / ten));
        let a = (g0 / g1).ln() / ten.ln();
        if !a.is_finite() || a <= -T::one() {
            return Err(Error::NotIntegrableAtZero { exponent: a.as_f64() });
        }
        k.head_exponent = a;
        k.head_coef = g0 / t0.powf(a);
        let mut t = t0;
        let mut acc = k.head_coef * t0.powf(a + T::one()) / (a + T::one());
        k.ts.push(t);
        k.ks.push(acc);
        let cap = T::lit(opts.cap);
        while t < cap {
            let next = t + t;
            let piece = match integrate(|s| k.integrand(s), t, next, &k.quad) {
                Ok(q) => q.value,
                // overflow ends the table
                Err(Error::NonFinite(_)) => break,
                Err(e) => return Err(e),
            };
            acc = acc + piece;
            if !acc.is_finite() {
                break;
            }
            t = next;
            k.ts.push(t);
            k.ks.push(acc);
        }
        Ok(k)
    }

    pub fn variant(&self) -> KVariant {
        self.variant
    }

    /// Fitted exponent of the integrand at `0⁺`.
    pub fn head_exponent(&self) -> f64 {
        self.head_exponent.as_f64()
    }

    pub fn integrand(&self, s: T) -> T {
        let num = match self.variant {
            KVariant::Modified => self.profile.phi(s),
            KVariant::Derivative => s * self.profile.phi_prime(s).unwrap_or(T::nan()),
        };
        num / (self.l)(s)
    }

    /// Largest tabulated value of `K`.
    pub fn bound(&self) -> T {
        *self.ks.last().unwrap()
    }

    pub fn eval(&self, t: T) -> Result<T> {
        if t <= T::zero() {
            return Ok(T::zero());
        }
        if t <= self.t0 {
            let a1 = self.head_exponent + T::one();
            return Ok(self.head_coef * t.powf(a1) / a1);
        }
        let idx = self.ts.partition_point(|&s| s <= t) - 1;
        Ok(self.ks[idx] + integrate(|s| self.integrand(s), self.ts[idx], t, &self.quad)?.value)
    }

    /// `K⁻¹(s)` by bisection inside the tabulated bracket, to relative `1e-12`.
    pub fn inverse(&self, s: T) -> Result<T> {
        if s <= T::zero() {
            return Ok(T::zero());
        }
        let a1 = self.head_exponent + T::one();
        if s <= self.ks[0] {
            return Ok((a1 * s / self.head_coef).powf(T::one() / a1));
        }
        let idx = self.ks.partition_point(|&k| k < s);
        if idx >= self.ks.len() {
            return Err(Error::KBounded { bound: self.bound().as_f64() });
        }
        let (mut lo, mut hi) = (self.ts[idx - 1], self.ts[idx]);
        let base = self.ks[idx - 1];
        let tol = T::lit(1e-12);
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            let v = base + integrate(|x| self.integrand(x), self.ts[idx - 1], mid, &self.quad)?.value;
            if v < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= tol * hi {
                break;
            }
        }
        Ok(T::lit(0.5) * (lo + hi))
    }
}

/// One-shot `K(t)`.
pub fn big_k<T: Real>(profile: &PhiProfile<T>, l: ScalarFn<T>, t: T, variant: KVariant) -> Result<T> {
    let opts = KoOptions {
        cap: t.as_f64().max(1.0) * 2.0,
        ..KoOptions::default()
    };
    KFunction::new(profile, l, variant, &opts)?.eval(t)
}

/// One-shot `K⁻¹(s)`.
pub fn k_inverse<T: Real>(profile: &PhiProfile<T>, l: ScalarFn<T>, s: T, variant: KVariant) -> Result<T> {
    KFunction::new(profile, l, variant, &KoOptions::default())?.inverse(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KoVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KoReport {
    pub variant: KVariant,
    /// Fitted exponent of the `K` integrand at `0⁺`; `> −1` means `L¹(0⁺)`.
    pub k_integrand_head_exponent: f64,
    /// Fitted exponent of the `K` integrand at `+∞`; `≥ −1` means not `L¹(+∞)`.
    pub k_integrand_tail_exponent: f64,
    pub k_integrand_in_l1_at_zero: bool,
    pub k_integrand_not_in_l1_at_infinity: bool,
    pub f_positive_on_samples: bool,
    pub f_at_fit_start: f64,
    pub k_tail_exponent: f64,
    pub f_tail_exponent: f64,
    /// Tail exponent of `1/(K⁻¹∘F)`.
    pub tail_exponent: f64,
    /// `∫_{t_start}^{t1} 1/(K⁻¹∘F)` by log-grid trapezoid.
    pub integral_to_t1: f64,
    /// `−1 − tail_exponent`: positive when the tail is integrable.
    pub margin: f64,
    pub delta_band: f64,
    pub verdict: KoVerdict,
    pub note: Option<String>,
}

/// Decides `1/(K⁻¹∘F) ∈ L¹(+∞)` from the log-log slope of `1/(K⁻¹∘F)` over
/// `[t1/100, t1]`: holds below `−1−δ`, fails above `−1+δ`, inconclusive in
/// between. If `F ≤ 0` at the start of the fit no verdict is given.
pub fn ko_test<T: Real>(
    profile: &PhiProfile<T>,
    triple: &NonlinearityTriple<T>,
    variant: KVariant,
    opts: &KoOptions,
) -> Result<KoReport> {
    let k = KFunction::new(profile, triple.l.clone(), variant, opts)?;
    let f = &triple.f;

    let probe = log_grid(opts.t0, opts.t1, 200);
    let f_positive = probe.iter().all(|&t| f(T::lit(t)) > T::zero());

    let fit_lo = opts.t1 / 100.0;
    let grid = log_grid(opts.t_start.min(fit_lo), opts.t1, 400);
    // cumulative F on the grid
    let mut fs = Vec::with_capacity(grid.len());
    let mut acc = big_f(f, T::lit(grid[0]), &opts.quad)?;
    fs.push(acc);
    for w in grid.windows(2) {
        acc = acc + integrate(|s| f(s), T::lit(w[0]), T::lit(w[1]), &opts.quad)?.value;
        fs.push(acc);
    }
    let f_fit_start = {
        let i = grid.partition_point(|&t| t < fit_lo).min(grid.len() - 1);
        fs[i].as_f64()
    };

    let tail_t = log_grid(opts.t1 * 1e-2, opts.t1 * 1e2, 9);
    let tail_g: Vec<f64> = tail_t.iter().map(|&t| k.integrand(T::lit(t)).as_f64()).collect();
    let integrand_tail = loglog_slope(&tail_t, &tail_g);
    let base = KoReport {
        variant,
        k_integrand_head_exponent: k.head_exponent(),
        k_integrand_tail_exponent: integrand_tail,
        k_integrand_in_l1_at_zero: k.head_exponent() > -1.0,
        k_integrand_not_in_l1_at_infinity: integrand_tail >= -1.0,
        f_positive_on_samples: f_positive,
        f_at_fit_start: f_fit_start,
        k_tail_exponent: f64::NAN,
        f_tail_exponent: f64::NAN,
        tail_exponent: f64::NAN,
        integral_to_t1: f64::NAN,
        margin: f64::NAN,
        delta_band: opts.delta_band,
        verdict: KoVerdict::Inconclusive,
        note: None,
    };
    if !(f_fit_start > 0.0) {
        return Ok(KoReport {
            note: Some(format!("F = {f_fit_start:e} <= 0 at the start of the tail fit; no verdict")),
            ..base
        });
    }

    let mut gs = Vec::with_capacity(grid.len());
    for &fv in &fs {
        let kinv = if fv > T::zero() { k.inverse(fv)? } else { T::zero() };
        gs.push(T::one() / kinv);
    }
    let start = grid.partition_point(|&t| t < opts.t_start.max(grid[0]));
    let mut integral = 0.0;
    for i in start.max(1)..grid.len() {
        let (a, b) = (gs[i - 1].as_f64(), gs[i].as_f64());
        if a.is_finite() && b.is_finite() {
            integral += 0.5 * (a * grid[i - 1] + b * grid[i]) * (grid[i] / grid[i - 1]).ln();
        }
    }

    let fit_t = log_grid(fit_lo, opts.t1, opts.fit_points);
    let mut fit_f = Vec::with_capacity(fit_t.len());
    let mut fit_kinv = Vec::with_capacity(fit_t.len());
    for &t in &fit_t {
        let i = grid.partition_point(|&s| s <= t).max(1) - 1;
        let fv = fs[i] + integrate(|s| f(s), T::lit(grid[i]), T::lit(t), &opts.quad)?.value;
        fit_f.push(fv.as_f64());
        fit_kinv.push(k.inverse(fv)?.as_f64());
    }
    let f_tail = loglog_slope(&fit_t, &fit_f);
    let kinv_tail = loglog_slope(&fit_t, &fit_kinv);
    let kvals: Vec<f64> = fit_kinv.iter().map(|&t| k.eval(T::lit(t)).map(|v| v.as_f64())).collect::<Result<_>>()?;
    let k_tail = loglog_slope(&fit_kinv, &kvals);
    let tail = -kinv_tail;
    let d = opts.delta_band;
    let verdict = if tail < -1.0 - d {
        KoVerdict::Holds
    } else if tail > -1.0 + d {
        KoVerdict::Fails
    } else {
        KoVerdict::Inconclusive
    };
    Ok(KoReport {
        k_tail_exponent: k_tail,
        f_tail_exponent: f_tail,
        tail_exponent: tail,
        integral_to_t1: integral,
        margin: -1.0 - tail,
        verdict,
        note: if f_positive {
            None
        } else {
            Some("f is not positive on all samples".into())
        },
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one<T: Real>() -> ScalarFn<T> {
        Arc::new(|_| T::one())
    }

    #[test]
    fn big_f_examples() {
        let q = QuadOptions::default();
        let f: ScalarFn<f64> = Arc::new(|s| s);
        assert_relative_eq!(big_f(&f, 2.0, &q).unwrap(), 2.0, epsilon = 1e-12);
        let f: ScalarFn<f64> = Arc::new(|s| s * s);
        assert_relative_eq!(big_f(&f, 3.0, &q).unwrap(), 9.0, epsilon = 1e-12);
        let f: ScalarFn<f64> = Arc::new(|s: f64| s.exp());
        assert_relative_eq!(big_f(&f, 1.0, &q).unwrap(), std::f64::consts::E - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn k_closed_forms() {
        for p in [1.5, 2.0, 3.0] {
            let prof = PhiProfile::<f64>::p_laplacian(p).unwrap();
            for t in [0.5, 2.0, 10.0] {
                let km = big_k(&prof, one(), t, KVariant::Modified).unwrap();
                assert_relative_eq!(km, t.powf(p) / p, max_relative = 1e-8);
                let kd = big_k(&prof, one(), t, KVariant::Derivative).unwrap();
                assert_relative_eq!(kd, (p - 1.0) * t.powf(p) / p, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn k_inverse_examples() {
        let p2 = PhiProfile::<f64>::p_laplacian(2.0).unwrap();
        assert_relative_eq!(k_inverse(&p2, one(), 2.0, KVariant::Modified).unwrap(), 2.0, max_relative = 1e-10);
        assert_eq!(k_inverse(&p2, one(), 0.0, KVariant::Modified).unwrap(), 0.0);
        let p3 = PhiProfile::<f64>::p_laplacian(3.0).unwrap();
        assert_relative_eq!(
            k_inverse(&p3, one(), 2.0 / 3.0, KVariant::Derivative).unwrap(),
            1.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn k_bounded_is_detected() {
        let p2 = PhiProfile::<f64>::p_laplacian(2.0).unwrap();
        // φ/l = t/(1+t)^3 is integrable at infinity, with total 1/2
        let l: ScalarFn<f64> = Arc::new(|t: f64| (1.0 + t).powi(3));
        let err = k_inverse(&p2, l, 1.0, KVariant::Modified).unwrap_err();
        match err {
            Error::KBounded { bound } => assert!((bound - 0.5).abs() < 1e-6),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn non_integrable_head_is_rejected() {
        let p2 = PhiProfile::<f64>::p_laplacian(2.0).unwrap();
        let l: ScalarFn<f64> = Arc::new(|t: f64| t * t * t);
        assert!(matches!(
            KFunction::new(&p2, l, KVariant::Modified, &KoOptions::default()),
            Err(Error::NotIntegrableAtZero { .. })
        ));
    }

    #[test]
    fn derivative_variant_needs_phi_prime() {
        let phi: ScalarFn<f64> = Arc::new(|t| t);
        let prof = PhiProfile::custom("lin", phi, None, 2.0, 1.0, None).unwrap();
        assert!(matches!(
            big_k(&prof, one(), 1.0, KVariant::Derivative),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn mean_curvature_k_growth() {
        let mc = PhiProfile::<f64>::mean_curvature(2.0).unwrap();
        let chi = 0.5;
        let l: ScalarFn<f64> = Arc::new(move |t: f64| t.powf(chi) / (1.0 + t));
        let k = KFunction::new(&mc, l, KVariant::Modified, &KoOptions::default()).unwrap();
        let ts = log_grid(1e6, 1e8, 9);
        let ks: Vec<f64> = ts.iter().map(|&t| k.eval(t).unwrap()).collect();
        assert_relative_eq!(loglog_slope(&ts, &ks), 2.0 - chi, epsilon = 1e-4);
    }

    #[test]
    fn ko_examples() {
        let o = KoOptions::default();
        let p2 = PhiProfile::<f64>::p_laplacian(2.0).unwrap();
        let holds = ko_test(&p2, &NonlinearityTriple::power_law(0.0, 1.5, 0.0, 2.0), KVariant::Modified, &o).unwrap();
        assert_eq!(holds.verdict, KoVerdict::Holds);
        assert_relative_eq!(holds.tail_exponent, -1.25, epsilon = 1e-6);
        let fails = ko_test(&p2, &NonlinearityTriple::power_law(0.0, 0.5, 0.0, 2.0), KVariant::Modified, &o).unwrap();
        assert_eq!(fails.verdict, KoVerdict::Fails);
        let mc = PhiProfile::<f64>::mean_curvature(2.0).unwrap();
        let r = ko_test(&mc, &NonlinearityTriple::mean_curvature_family(0.0, 1.0, 0.5), KVariant::Modified, &o).unwrap();
        assert_eq!(r.verdict, KoVerdict::Holds);
        assert_relative_eq!(r.tail_exponent, -4.0 / 3.0, epsilon = 1e-3);
        let b = ko_test(&mc, &NonlinearityTriple::mean_curvature_family(0.0, 0.5, 0.5), KVariant::Modified, &o).unwrap();
        assert_ne!(b.verdict, KoVerdict::Holds);
    }

    #[test]
    fn negative_f_on_initial_interval() {
        let o = KoOptions::default();
        let p2 = PhiProfile::<f64>::p_laplacian(2.0).unwrap();
        let mut tr = NonlinearityTriple::<f64>::power_law(0.0, 1.5, 0.0, 2.0);
        tr.f = Arc::new(|t: f64| t.powf(1.5) - 1.0);
        let r = ko_test(&p2, &tr, KVariant::Modified, &o).unwrap();
        assert!(!r.f_positive_on_samples);
        assert_eq!(r.verdict, KoVerdict::Holds);
        // F stays negative up to the fit start: refuse
        tr.f = Arc::new(|t: f64| if t < 1e7 { -1.0 } else { 1.0 });
        let r = ko_test(&p2, &tr, KVariant::Modified, &o).unwrap();
        assert_eq!(r.verdict, KoVerdict::Inconclusive);
        assert!(r.note.unwrap().contains("F ="));
    }

    #[test]
    fn certificates_of_shipped_families() {
        let mc = PhiProfile::<f64>::mean_curvature(2.0).unwrap();
        for c in NonlinearityTriple::<f64>::mean_curvature_family(0.5, 1.0, 0.3).verify(&mc, 1.0) {
            assert!(c.passed, "{c:?}");
        }
        let p3 = PhiProfile::<f64>::p_laplacian(3.0).unwrap();
        for c in NonlinearityTriple::<f64>::power_law(1.0, 2.5, 1.0, 3.0).verify(&p3, 1.0) {
            assert!(c.passed, "{c:?}");
        }
    }
}
