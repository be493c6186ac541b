//! Radial witnesses `u = h(r²)` on `ℝ^Q` for the mean curvature operator and
//! sampled certification of the inequalities they satisfy.
//!
//! All quantities are carried as logarithms (`ln u`, `ln h′`, `ln|∇u|`) so the
//! exponential witness can be evaluated out to `r = 1e6`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RadialArg, RadialField};
use crate::numerics::{log_grid, rkf45, slope_fit, OdeOptions, OdeStop};

/// Fitted tail exponents above `−TAIL_TOL` count as non-negative.
pub const TAIL_TOL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// `h(t) = (1+t)^{σ/2}`
    Power,
    /// `h(t) = exp{(1+t)^{σ/2}}`
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialWitness {
    pub kind: WitnessKind,
    pub sigma: f64,
    pub q: u32,
}

/// Log-scaled jet of a witness at radius `r`.
#[derive(Clone, Copy, Debug)]
pub struct WitnessPoint {
    pub r: f64,
    pub ln_u: f64,
    /// `ln h′(r²)`
    pub ln_hp: f64,
    /// `h″/h′` at `r²`
    pub q: f64,
    /// `ln|∇u| = ln(2r h′)`
    pub ln_grad: f64,
    /// `ln(1 + |∇u|²)`
    pub ln_one_plus_grad2: f64,
    /// `ln(|∇u|/u)`, computed without forming `ln u` or `ln|∇u|`
    pub ln_grad_over_u: f64,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl WitnessPoint {
    pub fn grad(&self) -> f64 {
        self.ln_grad.exp()
    }

    /// Bracket of `div(∇u/√(1+|∇u|²)) = h′ [2(Q−1) + (4r²h″/h′ + 2)/(1+|∇u|²)] / √(1+|∇u|²)`.
    pub fn bracket(&self, q_dim: u32) -> f64 {
        2.0 * (q_dim as f64 - 1.0) + (4.0 * self.r * self.r * self.q + 2.0) * (-self.ln_one_plus_grad2).exp()
    }

    /// `ln(h′/√(1+|∇u|²)) = −ln(2r) − ½ln(1+|∇u|⁻²)`
    pub fn ln_prefactor(&self) -> f64 {
        -(2.0 * self.r).ln() - 0.5 * softplus(-2.0 * self.ln_grad)
    }

    /// The mean curvature operator of `u` at this radius.
    pub fn lhs(&self, q_dim: u32) -> f64 {
        self.bracket(q_dim) * self.ln_prefactor().exp()
    }
}

impl RadialWitness {
    pub fn new(kind: WitnessKind, sigma: f64, q: u32) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "sigma > 0 required".into(),
            });
        }
        if q < 2 {
            return Err(Error::InvalidParameter {
                name: "Q",
                value: q as f64,
                reason: "witnesses live on R^Q with Q >= 2".into(),
            });
        }
        Ok(RadialWitness { kind, sigma, q })
    }

    /// `(ln h, ln h′, h″/h′)` at `t = r²`.
    pub fn log_jet(&self, t: f64) -> (f64, f64, f64) {
        let a = 0.5 * self.sigma;
        let l1 = t.ln_1p();
        match self.kind {
            WitnessKind::Power => (a * l1, a.ln() + (a - 1.0) * l1, (a - 1.0) / (1.0 + t)),
            WitnessKind::Exponential => {
                let g = (a * l1).exp();
                let gp = a * ((a - 1.0) * l1).exp();
                (g, g + gp.ln(), (a - 1.0) / (1.0 + t) + gp)
            }
        }
    }

    pub fn point(&self, r: f64) -> WitnessPoint {
        let (ln_u, ln_hp, q) = self.log_jet(r * r);
        let ln_grad = (2.0 * r).ln() + ln_hp;
        let (a, l1) = (0.5 * self.sigma, (r * r).ln_1p());
        let ln_grad_over_u = (2.0 * r).ln()
            + a.ln()
            + match self.kind {
                WitnessKind::Power => -l1,
                WitnessKind::Exponential => (a - 1.0) * l1,
            };
        WitnessPoint {
            r,
            ln_u,
            ln_hp,
            q,
            ln_grad,
            ln_one_plus_grad2: softplus(2.0 * ln_grad),
            ln_grad_over_u,
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        self.log_jet(r * r).0.exp()
    }

    /// `|∇u| = 2r h′(r²)`
    pub fn grad_norm(&self, r: f64) -> f64 {
        self.point(r).grad()
    }

    /// The witness as a field `h(r²)` with exact `h, h′, h″`.
    pub fn field(&self) -> RadialField<f64> {
        let a = 0.5 * self.sigma;
        let name = format!("{:?}(sigma={})", self.kind, self.sigma);
        match self.kind {
            WitnessKind::Power => RadialField::new(
                name,
                Arc::new(move |t: f64| {
                    let b = 1.0 + t;
                    (b.powf(a), a * b.powf(a - 1.0), a * (a - 1.0) * b.powf(a - 2.0))
                }),
                RadialArg::RSquared,
            ),
            WitnessKind::Exponential => RadialField::new(
                name,
                Arc::new(move |t: f64| {
                    let b = 1.0 + t;
                    let g = b.powf(a);
                    let gp = a * b.powf(a - 1.0);
                    let gpp = a * (a - 1.0) * b.powf(a - 2.0);
                    let h = g.exp();
                    (h, h * gp, h * (gpp + gp * gp))
                }),
                RadialArg::RSquared,
            ),
        }
    }
}

pub fn power_witness(sigma: f64, q: u32) -> Result<RadialWitness> {
    RadialWitness::new(WitnessKind::Power, sigma, q)
}

pub fn exponential_witness(sigma: f64, q: u32) -> Result<RadialWitness> {
    RadialWitness::new(WitnessKind::Exponential, sigma, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSamples {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

impl Default for RadiusSamples {
    fn default() -> Self {
        RadiusSamples {
            r_min: 1e-3,
            r_max: 1e6,
            n: 4000,
        }
    }
}

impl RadiusSamples {
    pub fn doubled(self) -> Self {
        RadiusSamples { n: 2 * self.n, ..self }
    }

    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.r_min, self.r_max, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MarginVerdict {
    Certified,
    ViolatedAt { r: f64 },
    AsymptoticFailure { exponent_gap: f64 },
}

/// Sampled comparison of `LHS = Δ^φ u` with `RHS = C·shape(r)`.
///
/// `ratio = LHS/shape`; `c_star` is its sampled minimum, `c_certified = c_star/2`,
/// and `margin = 1 − c_certified/ratio` is the margin relative to `LHS`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginReport {
    pub label: String,
    pub witness: RadialWitness,
    pub radii: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratio: Vec<f64>,
    pub margin: Vec<f64>,
    pub min_margin: f64,
    pub c_star: f64,
    pub r_at_c_star: f64,
    pub c_certified: f64,
    /// Fitted log-log slope of `ratio` over the last two decades.
    pub tail_exponent: f64,
    /// Closed-form tail exponent of `ratio`, when known.
    pub analytic_gap: Option<f64>,
    pub gamma: Option<f64>,
    pub r_gamma: Option<f64>,
    pub c0: Option<f64>,
    pub verdict: MarginVerdict,
}

impl MarginReport {
    pub fn certified(&self) -> bool {
        self.verdict == MarginVerdict::Certified
    }

    /// `(r, LHS, RHS, margin)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.radii.len()).map(|i| (self.radii[i], self.lhs[i], self.rhs[i], self.margin[i]))
    }
}

fn assess<S>(label: String, w: &RadialWitness, radii: Vec<f64>, ln_shape: S, analytic_gap: Option<f64>) -> MarginReport
where
    S: Fn(&WitnessPoint) -> f64 + Sync,
{
    let pts: Vec<(f64, f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let pt = w.point(r);
            let ls = ln_shape(&pt);
            let lhs = pt.lhs(w.q);
            let ratio = pt.bracket(w.q) * (pt.ln_prefactor() - ls).exp();
            (lhs, ls, ratio)
        })
        .collect();
    let mut c_star = f64::INFINITY;
    let mut r_star = f64::NAN;
    let mut bad = None;
    for (i, &(_, _, ratio)) in pts.iter().enumerate() {
        if !(ratio > 0.0) || !ratio.is_finite() {
            bad.get_or_insert(radii[i]);
        } else if ratio < c_star {
            c_star = ratio;
            r_star = radii[i];
        }
    }
    let c_cert = 0.5 * c_star;
    let lhs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = pts.iter().map(|p| c_cert * p.1.exp()).collect();
    let ratio: Vec<f64> = pts.iter().map(|p| p.2).collect();
    let margin: Vec<f64> = ratio.iter().map(|&q| 1.0 - c_cert / q).collect();
    let min_margin = margin.iter().cloned().fold(f64::INFINITY, f64::min);

    let r_hi = *radii.last().unwrap();
    let tail: Vec<(f64, f64)> = radii
        .iter()
        .zip(&ratio)
        .filter(|(r, q)| **r >= r_hi / 100.0 && **q > 0.0)
        .map(|(r, q)| (r.ln(), q.ln()))
        .collect();
    let tail_exponent = if tail.len() >= 2 { slope_fit(&tail) } else { f64::NAN };

    let verdict = if let Some(r) = bad {
        MarginVerdict::ViolatedAt { r }
    } else if !(min_margin > 0.0) {
        MarginVerdict::ViolatedAt { r: r_star }
    } else if !(tail_exponent >= -TAIL_TOL) {
        MarginVerdict::AsymptoticFailure {
            exponent_gap: tail_exponent,
        }
    } else {
        MarginVerdict::Certified
    };
    MarginReport {
        label,
        witness: *w,
        radii,
        lhs,
        rhs,
        ratio,
        margin,
        min_margin,
        c_star,
        r_at_c_star: r_star,
        c_certified: c_cert,
        tail_exponent,
        analytic_gap,
        gamma: None,
        r_gamma: None,
        c0: None,
        verdict,
    }
}

fn ln_1pr(r: f64) -> f64 {
    r.ln_1p()
}

fn pow_term(e: f64, ln_x: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * ln_x
    }
}

/// `div(∇u/√(1+|∇u|²)) ≥ C(1+r)^{σ−2}/√(1+|∇u|²)` for the power witness.
pub fn verify_basamento(sigma: f64, q: u32, samples: &RadiusSamples) -> Result<MarginReport> {
    let w = power_witness(sigma, q)?;
    Ok(assess(
        format!("growth bound sigma={sigma} Q={q}"),
        &w,
        samples.grid(),
        |pt| (sigma - 2.0) * ln_1pr(pt.r) - 0.5 * pt.ln_one_plus_grad2,
        Some(0.0),
    ))
}

fn out_of_range(constraint: &str, residual: f64) -> Error {
    Error::OutOfRange {
        constraint: constraint.into(),
        residual,
    }
}

/// `(σ−2) − (χ(σ−1) − μ)`: tail exponent of `LHS/shape` for the power witness.
pub fn sharpness_gap(chi: f64, mu: f64, sigma: f64) -> f64 {
    (sigma - 2.0) - (chi * (sigma - 1.0) - mu)
}

/// `div(∇u/√(1+|∇u|²)) ≥ C₄(1+r)^{−μ}|∇u|^χ/√(1+|∇u|²)` for the power witness,
/// on `0 ≤ χ < 1`, `μ < 2−χ`.
pub fn verify_main_sharpness(chi: f64, mu: f64, sigma: f64, q: u32, samples: &RadiusSamples) -> Result<MarginReport> {
    if chi < 0.0 {
        return Err(out_of_range("chi >= 0", chi));
    }
    if chi >= 1.0 {
        return Err(out_of_range("chi < 1", chi - 1.0));
    }
    if mu >= 2.0 - chi {
        return Err(out_of_range("mu < 2 - chi", mu - (2.0 - chi)));
    }
    let w = power_witness(sigma, q)?;
    Ok(assess(
        format!("gradient bound chi={chi} mu={mu} sigma={sigma} Q={q}"),
        &w,
        samples.grid(),
        |pt| -mu * ln_1pr(pt.r) + pow_term(chi, pt.ln_grad) - 0.5 * pt.ln_one_plus_grad2,
        Some(sharpness_gap(chi, mu, sigma)),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub chi: f64,
    pub mu: f64,
    pub omega: f64,
    /// Case 1 defaults to the smallest admissible `σ`, case 2 to `2`; ignored in case 3.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_q")]
    pub q: u32,
}

fn default_q() -> u32 {
    3
}

const EXACT_TOL: f64 = 1e-12;

/// Smallest `σ` with `σδ ≥ 2−χ−μ`, `δ = 1−χ−ω`.
pub fn case1_sigma(chi: f64, mu: f64, omega: f64) -> f64 {
    (2.0 - chi - mu) / (1.0 - chi - omega)
}

/// Counterexamples outside the a-priori range, on `{u > γ}`:
///
/// 1. `0 ≤ χ ≤ 1`, `μ < 2−χ`, `ω < 1−χ`: power witness with `σδ ≥ 2−χ−μ`;
/// 2. `0 ≤ χ ≤ 1`, `μ ≥ 2−χ`, `ω = 1−χ`: power witness, any `σ > 0`;
/// 3. `0 ≤ χ < 1`, `μ < 2−χ`, `ω = 1−χ`: exponential witness with
///    `σ = (2−χ−μ)/(1−χ)` above a threshold `γ`.
///
/// Certifies `div(∇u/√(1+|∇u|²)) ≥ C(1+r)^{−μ} u^ω |∇u|^χ/√(1+|∇u|²)`.
pub fn verify_theorem_main_counterexamples(
    case: u8,
    params: &CounterexampleParams,
    samples: &RadiusSamples,
) -> Result<MarginReport> {
    let CounterexampleParams { chi, mu, omega, sigma, q } = *params;
    if chi < 0.0 {
        return Err(out_of_range("chi >= 0", chi));
    }
    // ω ln u + χ ln|∇u| − ½ln(1+|∇u|²) regrouped so that ln u and ln|∇u|, both
    // of order r^σ for the exponential witness, never meet in a difference
    let shape = move |pt: &WitnessPoint| {
        let l = pt.ln_grad;
        -mu * ln_1pr(pt.r) + pow_term(omega + chi - 1.0, l) - pow_term(omega, pt.ln_grad_over_u) - 0.5 * softplus(-2.0 * l)
    };
    match case {
        1 => {
            if chi > 1.0 {
                return Err(out_of_range("chi <= 1", chi - 1.0));
            }
            if mu >= 2.0 - chi {
                return Err(out_of_range("mu < 2 - chi", mu - (2.0 - chi)));
            }
            if omega >= 1.0 - chi {
                return Err(out_of_range("omega < 1 - chi", omega - (1.0 - chi)));
            }
            let delta = 1.0 - chi - omega;
            let s_min = case1_sigma(chi, mu, omega);
            let s = sigma.unwrap_or(s_min);
            if s * delta < 2.0 - chi - mu - EXACT_TOL {
                return Err(out_of_range("sigma*delta >= 2 - chi - mu", s * delta - (2.0 - chi - mu)));
            }
            let w = power_witness(s, q)?;
            Ok(assess(
                format!("counterexample case 1 chi={chi} mu={mu} omega={omega} sigma={s} Q={q}"),
                &w,
                samples.grid(),
                shape,
                Some(s * delta - (2.0 - chi - mu)),
            ))
        }
        2 => {
            if chi > 1.0 {
                return Err(out_of_range("chi <= 1", chi - 1.0));
            }
            if mu < 2.0 - chi {
                return Err(out_of_range("mu >= 2 - chi", mu - (2.0 - chi)));
            }
            if (omega - (1.0 - chi)).abs() > EXACT_TOL {
                return Err(out_of_range("omega = 1 - chi", omega - (1.0 - chi)));
            }
            let s = sigma.unwrap_or(2.0);
            let w = power_witness(s, q)?;
            Ok(assess(
                format!("counterexample case 2 chi={chi} mu={mu} omega={omega} sigma={s} Q={q}"),
                &w,
                samples.grid(),
                shape,
                Some(mu - (2.0 - chi)),
            ))
        }
        3 => {
            if chi >= 1.0 {
                return Err(out_of_range("chi < 1", chi - 1.0));
            }
            if mu >= 2.0 - chi {
                return Err(out_of_range("mu < 2 - chi", mu - (2.0 - chi)));
            }
            if (omega - (1.0 - chi)).abs() > EXACT_TOL {
                return Err(out_of_range("omega = 1 - chi", omega - (1.0 - chi)));
            }
            let s = (2.0 - chi - mu) / (1.0 - chi);
            let w = exponential_witness(s, q)?;
            let radii = samples.grid();
            let pts: Vec<WitnessPoint> = radii.iter().map(|&r| w.point(r)).collect();
            // C₀ = sup |4r²h″|/(1+4r²h′²); γ = first u with 2(Q−1)h′ − C₀ > 0
            let c0 = pts
                .iter()
                .map(|p| 4.0 * p.r * p.r * p.q.abs() * (p.ln_hp - p.ln_one_plus_grad2).exp())
                .fold(0.0, f64::max);
            let k = pts
                .iter()
                .position(|p| 2.0 * (q as f64 - 1.0) * p.ln_hp.exp() - c0 > 0.0)
                .ok_or_else(|| out_of_range("superlevel threshold", c0))?;
            let mut rep = assess(
                format!("counterexample case 3 chi={chi} mu={mu} omega={omega} sigma={s} Q={q}"),
                &w,
                radii[k..].to_vec(),
                shape,
                Some(0.0),
            );
            rep.gamma = Some(pts[k].ln_u.exp());
            rep.r_gamma = Some(radii[k]);
            rep.c0 = Some(c0);
            Ok(rep)
        }
        c => Err(Error::InvalidParameter {
            name: "case",
            value: c as f64,
            reason: "case must be 1, 2 or 3".into(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProbeOutcome {
    /// `h′` crossed the guard at `t_guard`; `t_blowup` adds the remaining
    /// time from `w = 1/h′²`, whose slope near `w = 0` is `−2(1+t)^a`.
    BlowUp { t_guard: f64, t_blowup: f64 },
    BudgetExhausted { t: f64, slope: f64 },
    Equilibrium,
    StepFailure { t: f64, reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRun {
    pub initial_slope: f64,
    pub steps: usize,
    pub outcome: ProbeOutcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub mu: f64,
    pub t_start: f64,
    pub t_budget: f64,
    pub guard: f64,
    pub runs: Vec<ProbeRun>,
}

impl ProbeReport {
    pub fn all_blow_up(&self) -> bool {
        self.runs
            .iter()
            .filter(|r| r.initial_slope > 0.0)
            .all(|r| matches!(r.outcome, ProbeOutcome::BlowUp { .. }))
    }
}

/// `h′` is integrated directly up to `Y_SWITCH`, then as `w = 1/h′²`, which
/// obeys `w′ = −(1+t)^a (w + 4t)/(2t)` and reaches `0` at the blow-up time.
const Y_SWITCH: f64 = 1e2;

fn probe_one(a: f64, t0: f64, y0: f64, t_budget: f64, guard: f64) -> Result<(usize, ProbeOutcome)> {
    let y_rhs = move |t: f64, y: f64| (1.0 + t).powf(a) * y * (1.0 + 4.0 * t * y * y) / (4.0 * t);
    let w_rhs = move |t: f64, w: f64| -(1.0 + t).powf(a) * (w + 4.0 * t) / (2.0 * t);
    let mut steps = 0;
    let (mut t, y) = if y0.abs() < Y_SWITCH {
        let o = rkf45(y_rhs, t0, y0, t_budget, &OdeOptions { guard: Y_SWITCH, ..OdeOptions::default() })?;
        steps += o.steps;
        match o.stop {
            OdeStop::Guard => (o.t, o.y),
            _ if o.y == 0.0 => return Ok((steps, ProbeOutcome::Equilibrium)),
            _ => return Ok((steps, ProbeOutcome::BudgetExhausted { t: o.t, slope: o.y })),
        }
    } else {
        (t0, y0)
    };
    if y < 0.0 {
        return Ok((steps, ProbeOutcome::BudgetExhausted { t, slope: y }));
    }
    let w_guard = 1.0 / (guard * guard);
    let mut w = 1.0 / (y * y);
    let opts = OdeOptions {
        guard: f64::INFINITY,
        rtol: 1e-11,
        atol: 1e-300,
        ..OdeOptions::default()
    };
    for _ in 0..400 {
        let slope = -w_rhs(t, w);
        // half of the predicted time to w = 0
        let dt = 0.5 * w / slope;
        if w <= w_guard || dt < 1e-10 * t.max(1.0) {
            // w is linear to O(dt²) from here on
            return Ok((
                steps,
                ProbeOutcome::BlowUp {
                    t_guard: t + (w - w_guard).max(0.0) / slope,
                    t_blowup: t + w.max(0.0) / slope,
                },
            ));
        }
        if t + dt > t_budget {
            return Ok((steps, ProbeOutcome::BudgetExhausted { t, slope: w.powf(-0.5) }));
        }
        let o = rkf45(w_rhs, t, w, t + dt, &OdeOptions { h0: dt / 8.0, ..opts })?;
        steps += o.steps;
        t = o.t;
        w = o.y;
    }
    Err(Error::Ode {
        t,
        reason: "no convergence towards the blow-up time".into(),
    })
}

/// Integrates the equality case of `4t h″/(1 + 4t h′²) ≥ (1+t)^{(1−μ)/2} h′`,
/// i.e. `y′ = (1+t)^a y (1 + 4t y²)/(4t)` for `y = h′`, from each initial slope.
pub fn ode_nonexistence_probe(mu: f64, t_start: f64, t_budget: f64, slopes: &[f64]) -> Result<ProbeReport> {
    if !(mu < 1.0) {
        return Err(out_of_range("mu < 1", mu - 1.0));
    }
    if !(t_start > 0.0) || !(t_budget > t_start) {
        return Err(Error::InvalidParameter {
            name: "t_start",
            value: t_start,
            reason: "need 0 < t_start < t_budget".into(),
        });
    }
    let a = 0.5 * (1.0 - mu);
    let opts = OdeOptions::default();
    let guard = opts.guard;
    let runs = slopes
        .iter()
        .map(|&y0| {
            if y0 == 0.0 {
                return ProbeRun {
                    initial_slope: y0,
                    steps: 0,
                    outcome: ProbeOutcome::Equilibrium,
                };
            }
            let (steps, outcome) = match probe_one(a, t_start, y0, t_budget, guard) {
                Ok(v) => v,
                Err(Error::Ode { t, reason }) => (0, ProbeOutcome::StepFailure { t, reason }),
                Err(e) => (
                    0,
                    ProbeOutcome::StepFailure {
                        t: t_start,
                        reason: e.to_string(),
                    },
                ),
            };
            ProbeRun {
                initial_slope: y0,
                steps,
                outcome,
            }
        })
        .collect();
    Ok(ProbeReport {
        mu,
        t_start,
        t_budget,
        guard: opts.guard,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::phi_laplacian_radial;
    use crate::group::CarnotGroup;
    use crate::oracle::{classify_main, ParamSet, TheoremTag};
    use crate::profile::PhiProfile;
    use approx::assert_relative_eq;

    #[test]
    fn power_witness_examples() {
        let w = power_witness(2.0, 3).unwrap();
        for r in [0.1, 1.0, 7.0] {
            assert_relative_eq!(w.u(r), 1.0 + r * r, max_relative = 1e-14);
            assert_relative_eq!(w.grad_norm(r), 2.0 * r, max_relative = 1e-14);
            let exact = (4.0 + 2.0 / (1.0 + 4.0 * r * r)) / (1.0 + 4.0 * r * r).sqrt();
            assert_relative_eq!(w.point(r).lhs(3), exact, max_relative = 1e-13);
        }
        let w = power_witness(1.0, 3).unwrap();
        assert_relative_eq!(w.u(1e3) / 1e3, 1.0, max_relative = 1e-6);
        assert!(power_witness(0.0, 3).is_err());
        assert!(power_witness(1.0, 1).is_err());
    }

    #[test]
    fn exponential_witness_origin_value() {
        let w = exponential_witness(2.0, 3).unwrap();
        assert_relative_eq!(w.field().eval(0.0).0, std::f64::consts::E, max_relative = 1e-15);
        assert_relative_eq!(power_witness(3.0, 3).unwrap().field().eval(0.0).0, 1.0);
    }

    #[test]
    fn log_form_agrees_with_generic_operator() {
        let g = CarnotGroup::<f64>::euclidean(3).unwrap();
        let mc = PhiProfile::<f64>::mean_curvature(2.0).unwrap();
        for w in [power_witness(0.5, 3).unwrap(), power_witness(3.0, 3).unwrap(), exponential_witness(1.5, 3).unwrap()] {
            let f = w.field();
            for r in [0.05, 0.5, 1.3, 2.0] {
                let generic = phi_laplacian_radial(&g, &mc, &f, r).unwrap();
                assert_relative_eq!(w.point(r).lhs(3), generic, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn growth_bound_lower_estimate_holds_pointwise() {
        let g = CarnotGroup::<f64>::euclidean(3).unwrap();
        let mc = PhiProfile::<f64>::mean_curvature(2.0).unwrap();
        for sigma in [0.5, 1.0, 2.0, 3.5] {
            let w = power_witness(sigma, 3).unwrap();
            let f = w.field();
            for r in log_grid(1e-2, 1e2, 50) {
                let lhs = phi_laplacian_radial(&g, &mc, &f, r).unwrap();
                let r2 = r * r;
                let grad = w.grad_norm(r);
                let lower = sigma * (1.0 + r2).powf((sigma - 4.0) / 2.0) / (1.0 + grad * grad).sqrt()
                    * (2.0 * (1.0 + r2) + (1.0 + r2 * (sigma - 1.0)) / (1.0 + sigma * sigma * r2 * (1.0 + r2).powf(sigma - 2.0)));
                assert!(lhs >= lower * (1.0 - 1e-12), "sigma={sigma} r={r}: {lhs} < {lower}");
            }
        }
    }

    #[test]
    fn basamento_examples() {
        let s = RadiusSamples::default();
        let rep = verify_basamento(2.0, 3, &s).unwrap();
        assert!(rep.certified());
        assert!((rep.c_star - 4.0).abs() < 1e-6);
        let rep = verify_basamento(0.5, 3, &s).unwrap();
        assert!(rep.certified());
        assert!(rep.c_star >= 0.5 * (3.0 + 0.5 - 2.0));
        assert!(verify_basamento(1.0, 2, &s).unwrap().c_star > 0.0);
    }

    #[test]
    fn sharpness_examples() {
        let s = RadiusSamples::default();
        assert!(verify_main_sharpness(0.0, 0.0, 2.0, 3, &s).unwrap().certified());
        assert!(verify_main_sharpness(0.5, 1.0, 1.0, 3, &s).unwrap().certified());
        let rep = verify_main_sharpness(0.0, 0.0, 1.5, 3, &s).unwrap();
        match rep.verdict {
            MarginVerdict::AsymptoticFailure { exponent_gap } => assert!((exponent_gap + 0.5).abs() < 1e-2),
            v => panic!("{v:?}"),
        }
        assert!(verify_main_sharpness(1.0, 0.0, 2.0, 3, &s).is_err());
    }

    #[test]
    fn counterexample_examples() {
        let s = RadiusSamples::default();
        let p1 = CounterexampleParams { chi: 0.5, mu: 0.0, omega: 0.25, sigma: None, q: 3 };
        let rep = verify_theorem_main_counterexamples(1, &p1, &s).unwrap();
        assert_eq!(rep.witness.sigma, 6.0);
        assert!(rep.certified(), "{:?}", rep.verdict);
        let v = classify_main(&ParamSet::new(2.0, 0.5, 0.0, 3).with_omega(0.25));
        assert_eq!(v.tag, TheoremTag::None);

        let p2 = CounterexampleParams { chi: 0.5, mu: 1.5, omega: 0.5, sigma: Some(0.3), q: 3 };
        assert!(verify_theorem_main_counterexamples(2, &p2, &s).unwrap().certified());

        let p3 = CounterexampleParams { chi: 0.0, mu: 0.0, omega: 1.0, sigma: None, q: 3 };
        let rep = verify_theorem_main_counterexamples(3, &p3, &s).unwrap();
        assert_eq!(rep.witness.sigma, 2.0);
        assert!(rep.certified(), "{:?}", rep.verdict);
        assert!(rep.gamma.unwrap() >= std::f64::consts::E);

        // σ = 11/3: ln u and ln|∇u| reach 1e22 at the top of the grid
        let p4 = CounterexampleParams { chi: 0.25, mu: -1.0, omega: 0.75, sigma: None, q: 3 };
        let rep = verify_theorem_main_counterexamples(3, &p4, &s).unwrap();
        assert!(rep.certified(), "{:?}", rep.verdict);
        assert!(rep.tail_exponent.abs() < 1e-3);

        assert!(verify_theorem_main_counterexamples(3, &p1, &s).is_err());
        assert!(verify_theorem_main_counterexamples(4, &p1, &s).is_err());
    }

    #[test]
    fn exponential_beats_powers() {
        let w = exponential_witness(1.0, 3).unwrap();
        for n in 1..=10 {
            let tail: Vec<f64> = [1e2, 1e3, 1e4, 1e5].iter().map(|&r| w.point(r).ln_u - n as f64 * f64::ln(r)).collect();
            assert!(tail.windows(2).all(|p| p[1] > p[0]), "N={n}");
        }
    }

    #[test]
    fn probe_examples() {
        let rep = ode_nonexistence_probe(0.0, 1.0, 1e12, &[1.0, 0.0]).unwrap();
        match rep.runs[0].outcome {
            ProbeOutcome::BlowUp { t_blowup, .. } => assert!(t_blowup.is_finite() && t_blowup > 1.0),
            ref o => panic!("{o:?}"),
        }
        assert_eq!(rep.runs[1].outcome, ProbeOutcome::Equilibrium);
        let late = ode_nonexistence_probe(0.9, 1.0, 1e12, &[1.0]).unwrap();
        let t = |r: &ProbeReport| match r.runs[0].outcome {
            ProbeOutcome::BlowUp { t_blowup, .. } => t_blowup,
            _ => f64::NAN,
        };
        assert!(t(&late) > t(&rep));
        assert!(ode_nonexistence_probe(1.0, 1.0, 10.0, &[1.0]).is_err());
    }
}
