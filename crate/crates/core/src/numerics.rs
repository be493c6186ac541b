//! Small numerical kernels: log grids, least-squares slopes, adaptive
//! Gauss–Kronrod quadrature, monotone inversion and an embedded RK45 stepper.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2, "log_grid({a}, {b}, {n})");
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn slope_fit(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slope of `ln y` against `ln x` for positive samples.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    slope_fit(&pts)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = h * T::lit(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * T::lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + s * T::lit(WG[i / 2]);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 4000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod 15 quadrature on `[a, b]`: the interval
/// with the largest error estimate is bisected until the total estimate is
/// below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, opts: &QuadOptions) -> Result<Quadrature<T>> {
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let (v, e) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    let mut total = v;
    let mut err = e;
    loop {
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "integrand on [{}, {}]",
                lo.as_f64(),
                hi.as_f64()
            )));
        }
        let tol = T::lit(opts.abs_tol).max(T::lit(opts.rel_tol) * total.abs());
        if err <= tol {
            break;
        }
        if parts.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                a: lo.as_f64(),
                b: hi.as_f64(),
                err: err.as_f64(),
            });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pv, pe) = parts.swap_remove(idx);
        let mid = T::lit(0.5) * (pa + pb);
        if !(mid > pa && mid < pb) {
            // interval exhausted at working precision
            return Err(Error::Quadrature {
                a: pa.as_f64(),
                b: pb.as_f64(),
                err: pe.as_f64(),
            });
        }
        let (v1, e1) = gk15(&f, pa, mid);
        let (v2, e2) = gk15(&f, mid, pb);
        total = total - pv + v1 + v2;
        err = err - pe + e1 + e2;
        parts.push((pa, mid, v1, e1));
        parts.push((mid, pb, v2, e2));
    }
    // re-sum to shed the accumulated cancellation in the running totals
    let value: T = parts.iter().map(|p| p.2).sum();
    let error: T = parts.iter().map(|p| p.3).sum();
    Ok(Quadrature {
        value: sign * value,
        error,
    })
}

/// Solves `g(t) = target` for nondecreasing `g` with `g(0) = 0`, by geometric
/// bracket growth from `t0` followed by bisection. Returns `Err(bound)` with
/// the last value of `g` if no bracket exists below `cap`.
pub fn invert_increasing<G: Fn(f64) -> Result<f64>>(
    g: G,
    target: f64,
    t0: f64,
    cap: f64,
    rel_tol: f64,
) -> Result<std::result::Result<f64, f64>> {
    if target <= 0.0 {
        return Ok(Ok(0.0));
    }
    let mut lo = 0.0;
    let mut hi = t0;
    loop {
        let v = g(hi)?;
        if v >= target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Ok(Err(v));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi * 0.25 {
            break;
        }
    }
    Ok(Ok(0.5 * (lo + hi)))
}

/// Why an RK45 integration stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeStop {
    /// `|y|` crossed the guard at `t`.
    Guard,
    /// Reached `t_end`.
    End,
    /// Step budget used up.
    Budget,
}

#[derive(Clone, Debug)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: f64,
    pub steps: usize,
    pub stop: OdeStop,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub guard: f64,
    pub max_steps: usize,
    pub h0: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            guard: 1e8,
            max_steps: 200_000,
            h0: 1e-4,
        }
    }
}

/// Runge–Kutta–Fehlberg 4(5) with local extrapolation and standard step
/// control, for a scalar `y′ = f(t, y)`.
pub fn rkf45<F: Fn(f64, f64) -> f64>(f: F, t0: f64, y0: f64, t_end: f64, opts: &OdeOptions) -> Result<OdeOutcome> {
    let (mut t, mut y, mut h) = (t0, y0, opts.h0.min(t_end - t0));
    let mut steps = 0usize;
    while steps < opts.max_steps {
        if y.abs() >= opts.guard {
            return Ok(OdeOutcome { t, y, steps, stop: OdeStop::Guard });
        }
        if t >= t_end {
            return Ok(OdeOutcome { t, y, steps, stop: OdeStop::End });
        }
        h = h.min(t_end - t);
        let k1 = f(t, y);
        let k2 = f(t + h / 4.0, y + h * k1 / 4.0);
        let k3 = f(t + 3.0 * h / 8.0, y + h * (3.0 * k1 + 9.0 * k2) / 32.0);
        let k4 = f(
            t + 12.0 * h / 13.0,
            y + h * (1932.0 * k1 - 7200.0 * k2 + 7296.0 * k3) / 2197.0,
        );
        let k5 = f(
            t + h,
            y + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 - 845.0 / 4104.0 * k4),
        );
        let k6 = f(
            t + h / 2.0,
            y + h * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 + 1859.0 / 4104.0 * k4 - 11.0 / 40.0 * k5),
        );
        let y5 = y + h
            * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4 - 9.0 / 50.0 * k5
                + 2.0 / 55.0 * k6);
        let y4 = y + h * (25.0 / 216.0 * k1 + 1408.0 / 2565.0 * k3 + 2197.0 / 4104.0 * k4 - k5 / 5.0);
        let err = (y5 - y4).abs();
        let tol = opts.atol + opts.rtol * y.abs().max(y5.abs());
        if !y5.is_finite() || !err.is_finite() {
            h *= 0.25;
        } else if err <= tol {
            t += h;
            y = y5;
            steps += 1;
            let fac = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0) };
            h *= fac;
        } else {
            h *= (0.9 * (tol / err).powf(0.25)).clamp(0.1, 0.9);
        }
        if h < 1e-15 * t.abs().max(1.0) {
            return Err(Error::Ode {
                t,
                reason: format!("step size underflow (h = {h:e}, y = {y:e})"),
            });
        }
    }
    Ok(OdeOutcome { t, y, steps, stop: OdeStop::Budget })
}
