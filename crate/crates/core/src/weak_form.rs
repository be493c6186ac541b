//! Weak-form residuals by lattice quadrature, and the pasting construction.
//!
//! For a test function `ψ ≥ 0`,
//! `R(ψ) = ∫ φ(|∇₀u|)/|∇₀u| ⟨∇₀u, ∇₀ψ⟩ + B(x, u, ∇₀u) ψ dx`,
//! and `u` is a weak solution of `Δ^φ u ≥ B` iff `R(ψ) ≤ 0` for every `ψ`.
//! Integration by parts gives `R(ψ) = ∫ (B − Δ^φ u) ψ` for smooth `u`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{fd_gradient, field_jet, flux, phi_laplacian, EPS_GRAD};
use crate::error::{Error, Result};
use crate::field::{GridField, Lattice, ScalarField};
use crate::group::CarnotGroup;
use crate::profile::{PhiProfile, ProfileDescriptor};
use crate::scalar::Dual;
use crate::witness::{
    power_witness, verify_theorem_main_counterexamples, CounterexampleParams, RadialWitness, RadiusSamples,
};

type Group = CarnotGroup<f64>;
type Field = ScalarField<f64>;
type Profile = PhiProfile<f64>;

/// `B(x, u, ∇₀u)`.
pub type Coefficient = Arc<dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync>;

pub fn constant_coefficient(c: f64) -> Coefficient {
    Arc::new(move |_, _, _| c)
}

/// Polynomial bump `ψ(x) = (1 − d(x)²/ρ²)³₊` with `d(x) = r(c⁻¹∘x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub rho: f64,
}

impl TestFunction {
    pub fn new(center: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "bump radius must be positive".into(),
            });
        }
        Ok(TestFunction { center, rho })
    }

    /// `(ψ, ∇₀ψ)` at `x`, or `None` off the support.
    pub fn eval(&self, g: &Group, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let y = g.compose_unchecked(&g.inverse(&self.center).ok()?.0, x);
        let rho2 = self.rho * self.rho;
        let (d2, dgrad) = norm_sq_with_gradient(g, &y, rho2);
        if d2 >= rho2 {
            return None;
        }
        let s = 1.0 - d2 / rho2;
        let a = -3.0 * s * s / rho2;
        Some((s * s * s, dgrad.iter().map(|&c| a * c).collect()))
    }

    pub fn value(&self, g: &Group, x: &[f64]) -> f64 {
        self.eval(g, x).map_or(0.0, |(v, _)| v)
    }

    /// Ambient box containing the support.
    pub fn support_box(&self, g: &Group) -> (Vec<f64>, Vec<f64>) {
        let n = g.topological_dim();
        let pad = if g.has_generic_law() { 1.0 } else { 1.25 };
        let half: Vec<f64> = (0..n)
            .map(|a| pad * g.unit_ball_box()[a] * self.rho.powi(g.layer_of(a) as i32))
            .collect();
        if g.is_euclidean() {
            let lo = self.center.iter().zip(&half).map(|(c, h)| c - h).collect();
            let hi = self.center.iter().zip(&half).map(|(c, h)| c + h).collect();
            return (lo, hi);
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for mask in 0..(1usize << n) {
            let y: Vec<f64> = (0..n).map(|a| if mask >> a & 1 == 1 { half[a] } else { -half[a] }).collect();
            let x = g.compose_unchecked(&self.center, &y);
            for a in 0..n {
                lo[a] = lo[a].min(x[a]);
                hi[a] = hi[a].max(x[a]);
            }
        }
        (lo, hi)
    }
}

/// `r(y)²` and `∇₀(r²)(y)`; skips the gradient when `r ≥ ρ`.
fn norm_sq_with_gradient(g: &Group, y: &[f64], cutoff2: f64) -> (f64, Vec<f64>) {
    let m1 = g.horizontal_dim();
    if g.is_euclidean() {
        let d2 = y.iter().map(|c| c * c).sum();
        return (d2, y.iter().map(|c| 2.0 * c).collect());
    }
    if g.has_generic_law() {
        let d2 = g.norm_squared_generic(y).expect("built-in norm");
        if d2 == 0.0 || d2 >= cutoff2 {
            return (d2, vec![0.0; m1]);
        }
        let ys: Vec<Dual<f64>> = y.iter().map(|&c| Dual::constant(c)).collect();
        let grad = (0..m1)
            .map(|j| {
                let mut e = vec![Dual::constant(0.0); y.len()];
                e[j] = Dual::variable(0.0);
                let w = g.compose_generic(&ys, &e).expect("built-in law");
                g.norm_squared_generic(&w).expect("built-in norm").eps
            })
            .collect();
        return (d2, grad);
    }
    let r = g.hom_norm(y);
    let d2 = r * r;
    if d2 >= cutoff2 {
        return (d2, vec![0.0; m1]);
    }
    let h = 1e-6 * r.max(1e-3);
    let grad = (0..m1)
        .map(|j| {
            let a = g.hom_norm(&g.flow(y, j, h));
            let b = g.hom_norm(&g.flow(y, j, -h));
            (a * a - b * b) / (2.0 * h)
        })
        .collect();
    (d2, grad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GradientRule {
    /// Exact jets for closed forms; central differences with the horizontal
    /// spacing for lattice fields.
    Auto,
    FiniteDifference { step: f64 },
}

/// Quadrature nodes `anchor + k·spacing`, each with weight `Π spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub anchor: Vec<f64>,
    pub spacing: Vec<f64>,
    pub gradient: GradientRule,
}

impl QuadratureSpec {
    pub fn uniform(n: usize, h: f64) -> Self {
        QuadratureSpec {
            anchor: vec![0.0; n],
            spacing: vec![h; n],
            gradient: GradientRule::Auto,
        }
    }

    pub fn from_lattice(lat: &Lattice) -> Self {
        QuadratureSpec {
            anchor: lat.origin.clone(),
            spacing: lat.spacing.clone(),
            gradient: GradientRule::Auto,
        }
    }

    pub fn with_gradient(mut self, rule: GradientRule) -> Self {
        self.gradient = rule;
        self
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.anchor.len() != n || self.spacing.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.spacing.len(),
            });
        }
        if self.spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "spacing",
                value: 0.0,
                reason: "quadrature spacing must be positive".into(),
            });
        }
        Ok(())
    }
}

/// A set `Ω` given by its indicator.
#[derive(Clone)]
pub struct Domain {
    name: String,
    contains: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl std::fmt::Debug for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Domain({})", self.name)
    }
}

impl Domain {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Domain {
            name: name.into(),
            contains: Arc::new(f),
        }
    }

    pub fn all() -> Self {
        Self::new("all", |_| true)
    }

    pub fn empty() -> Self {
        Self::new("empty", |_| false)
    }

    /// `{r(c⁻¹∘x) < radius}`
    pub fn ball(g: &Group, center: Vec<f64>, radius: f64) -> Self {
        let g = g.clone();
        Self::new(format!("ball(r<{radius})"), move |x| {
            let ci = g.inverse(&center).expect("dimension checked by caller").0;
            g.hom_norm(&g.compose_unchecked(&ci, x)) < radius
        })
    }

    /// `{u > level}`
    pub fn superlevel(g: &Group, u: Field, level: f64) -> Self {
        let g = g.clone();
        Self::new(format!("{{u > {level}}}"), move |x| u.value(&g, x).map_or(false, |v| v > level))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.contains)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpResidual {
    pub center: Vec<f64>,
    pub rho: f64,
    pub residual: f64,
    /// `|R_h − R_2h|/3` from the even sub-lattice.
    pub quad_error: f64,
    /// `∫ |integrand|`
    pub abs_integral: f64,
    pub n_points: usize,
    /// Support meets both `Ω` and its complement.
    pub straddles: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakFormReport {
    pub label: String,
    pub residuals: Vec<BumpResidual>,
    pub tolerance: f64,
    pub max_residual: f64,
    pub passed: bool,
    pub warnings: Vec<String>,
}

impl WeakFormReport {
    fn new(label: String, residuals: Vec<BumpResidual>, tolerance: f64, warnings: Vec<String>) -> Self {
        let max_residual = residuals.iter().map(|r| r.residual).fold(f64::NEG_INFINITY, f64::max);
        let passed = residuals.iter().all(|r| r.residual <= tolerance);
        WeakFormReport {
            label,
            residuals,
            tolerance,
            max_residual,
            passed,
            warnings,
        }
    }

    pub fn n_straddling(&self) -> usize {
        self.residuals.iter().filter(|r| r.straddles).count()
    }
}

#[derive(Clone, Copy, Default)]
struct Sums {
    fine: f64,
    coarse: f64,
    abs: f64,
    n: usize,
    inside: usize,
    outside: usize,
}

impl Sums {
    fn add(mut self, o: Sums) -> Sums {
        self.fine += o.fine;
        self.coarse += o.coarse;
        self.abs += o.abs;
        self.n += o.n;
        self.inside += o.inside;
        self.outside += o.outside;
        self
    }
}

struct Integrand<'a> {
    g: &'a Group,
    u: &'a Field,
    prof: &'a Profile,
    b: &'a Coefficient,
    spec: &'a QuadratureSpec,
}

impl Integrand<'_> {
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let fd = |s: f64| -> Result<(f64, Vec<f64>)> {
            let f = |y: &[f64]| self.u.value(self.g, y);
            Ok((f(x)?, fd_gradient(self.g, &f, x, s)?))
        };
        match self.spec.gradient {
            GradientRule::FiniteDifference { step } => fd(step),
            GradientRule::Auto if self.u.is_closed_form() => match field_jet(self.g, self.u, x) {
                Ok(j) => Ok((j.value, j.grad)),
                Err(Error::Degenerate(_)) => fd(self.spec.spacing[0]),
                Err(e) => Err(e),
            },
            GradientRule::Auto => fd(self.spec.spacing[0]),
        }
    }

    fn integrate(&self, terms: &[(f64, &TestFunction)], mask: Option<&Domain>) -> Result<Sums> {
        let n = self.g.topological_dim();
        self.spec.check(n)?;
        let (mut lo, mut hi) = (vec![f64::INFINITY; n], vec![f64::NEG_INFINITY; n]);
        for (_, psi) in terms {
            if psi.center.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: psi.center.len(),
                });
            }
            let (l, h) = psi.support_box(self.g);
            for a in 0..n {
                lo[a] = lo[a].min(l[a]);
                hi[a] = hi[a].max(h[a]);
            }
        }
        let sp = &self.spec.spacing;
        let an = &self.spec.anchor;
        let klo: Vec<i64> = (0..n).map(|a| ((lo[a] - an[a]) / sp[a]).floor() as i64).collect();
        let khi: Vec<i64> = (0..n).map(|a| ((hi[a] - an[a]) / sp[a]).ceil() as i64).collect();
        let cell: f64 = sp.iter().product();
        let coarse_w = cell * (1u64 << n) as f64;

        let partial: Vec<Sums> = (klo[0]..=khi[0])
            .into_par_iter()
            .map(|k0| -> Result<Sums> {
                let mut acc = Sums::default();
                let mut k = klo.clone();
                k[0] = k0;
                let mut x = vec![0.0; n];
                loop {
                    for a in 0..n {
                        x[a] = an[a] + k[a] as f64 * sp[a];
                    }
                    acc = acc.add(self.point(&x, &k, terms, mask, cell, coarse_w)?);
                    // odometer over axes 1..n
                    let mut a = n;
                    loop {
                        if a == 1 {
                            return Ok(acc);
                        }
                        a -= 1;
                        if k[a] < khi[a] {
                            k[a] += 1;
                            break;
                        }
                        k[a] = klo[a];
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(partial.into_iter().fold(Sums::default(), Sums::add))
    }

    fn point(
        &self,
        x: &[f64],
        k: &[i64],
        terms: &[(f64, &TestFunction)],
        mask: Option<&Domain>,
        cell: f64,
        coarse_w: f64,
    ) -> Result<Sums> {
        let m1 = self.g.horizontal_dim();
        let mut psi = 0.0;
        let mut dpsi = vec![0.0; m1];
        let mut hit = false;
        for (c, tf) in terms {
            if let Some((v, d)) = tf.eval(self.g, x) {
                hit = true;
                psi += c * v;
                for j in 0..m1 {
                    dpsi[j] += c * d[j];
                }
            }
        }
        if !hit || (psi == 0.0 && dpsi.iter().all(|&d| d == 0.0)) {
            return Ok(Sums::default());
        }
        let (uv, grad) = self.value_and_gradient(x)?;
        let fl = flux(self.prof, &grad, EPS_GRAD);
        let bv = (self.b)(x, uv, &grad);
        if bv.is_nan() {
            return Err(Error::NonFinite(format!("B is NaN at {x:?}")));
        }
        let val = fl.iter().zip(&dpsi).map(|(f, d)| f * d).sum::<f64>() + bv * psi;
        if !val.is_finite() {
            return Err(Error::NonFinite(format!("weak-form integrand at {x:?}")));
        }
        let even = k.iter().all(|&i| i.rem_euclid(2) == 0);
        let inside = mask.map_or(false, |m| m.contains(x));
        Ok(Sums {
            fine: val * cell,
            coarse: if even { val * coarse_w } else { 0.0 },
            abs: val.abs() * cell,
            n: 1,
            inside: inside as usize,
            outside: (mask.is_some() && !inside) as usize,
        })
    }
}

fn to_residual(center: Vec<f64>, rho: f64, s: Sums) -> BumpResidual {
    BumpResidual {
        center,
        rho,
        residual: s.fine,
        quad_error: (s.fine - s.coarse).abs() / 3.0,
        abs_integral: s.abs,
        n_points: s.n,
        straddles: s.inside > 0 && s.outside > 0,
    }
}

/// `R(ψ)` by composite midpoint quadrature over the support of `ψ`.
pub fn weak_residual(
    g: &Group,
    u: &Field,
    prof: &Profile,
    b: &Coefficient,
    psi: &TestFunction,
    spec: &QuadratureSpec,
) -> Result<BumpResidual> {
    let it = Integrand { g, u, prof, b, spec };
    let s = it.integrate(&[(1.0, psi)], None)?;
    Ok(to_residual(psi.center.clone(), psi.rho, s))
}

/// `R(Σ aᵢψᵢ)` on one quadrature pass.
pub fn weak_residual_combination(
    g: &Group,
    u: &Field,
    prof: &Profile,
    b: &Coefficient,
    terms: &[(f64, TestFunction)],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let it = Integrand { g, u, prof, b, spec };
    let refs: Vec<(f64, &TestFunction)> = terms.iter().map(|(c, t)| (*c, t)).collect();
    Ok(it.integrate(&refs, None)?.fine)
}

/// Residuals against every bump, in parallel.
#[allow(clippy::too_many_arguments)]
pub fn weak_form_report(
    label: impl Into<String>,
    g: &Group,
    u: &Field,
    prof: &Profile,
    b: &Coefficient,
    bumps: &[TestFunction],
    spec: &QuadratureSpec,
    tolerance: f64,
    mask: Option<&Domain>,
) -> Result<WeakFormReport> {
    if bumps.is_empty() {
        return Err(Error::InvalidParameter {
            name: "bumps",
            value: 0.0,
            reason: "at least one test function is required".into(),
        });
    }
    let it = Integrand { g, u, prof, b, spec };
    let residuals = bumps
        .par_iter()
        .map(|psi| Ok(to_residual(psi.center.clone(), psi.rho, it.integrate(&[(1.0, psi)], mask)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakFormReport::new(label.into(), residuals, tolerance, Vec::new()))
}

fn neighbours<'a>(lat: &'a Lattice, flat: usize, strides: &[usize]) -> impl Iterator<Item = usize> + 'a {
    let strides = strides.to_vec();
    (0..lat.ndim()).flat_map(move |a| {
        let i = flat / strides[a] % lat.dims[a];
        let mut out = Vec::with_capacity(2);
        if i > 0 {
            out.push(flat - strides[a]);
        }
        if i + 1 < lat.dims[a] {
            out.push(flat + strides[a]);
        }
        out
    })
}

/// `v = max{inner, outer}` on `Ω`, `outer` elsewhere, sampled on `lattice`.
///
/// The hypothesis `outer ≥ inner` on `∂Ω` is checked on lattice edges
/// crossing `∂Ω`: an edge fails when `outer < inner` at both ends.
pub fn paste(g: &Group, inner: &Field, outer: &Field, omega: &Domain, lattice: &Lattice) -> Result<GridField<f64>> {
    if lattice.ndim() != g.topological_dim() {
        return Err(Error::DimensionMismatch {
            expected: g.topological_dim(),
            got: lattice.ndim(),
        });
    }
    let nodes: Vec<(bool, f64, f64)> = (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let x = lattice.node(i);
            Ok((omega.contains(&x), inner.value(g, &x)?, outer.value(g, &x)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let below = |(_, iv, ov): (bool, f64, f64)| ov < iv - 1e-12 * iv.abs().max(1.0);
    let strides = lattice.strides();
    for (i, &node) in nodes.iter().enumerate() {
        if !node.0 || !below(node) {
            continue;
        }
        for nb in neighbours(lattice, i, &strides) {
            if !nodes[nb].0 && below(nodes[nb]) {
                return Err(Error::PastingBoundary {
                    point: lattice.node(i),
                    outer: node.2,
                    inner: node.1,
                });
            }
        }
    }
    let values = nodes
        .iter()
        .map(|&(inside, iv, ov)| if inside { iv.max(ov) } else { ov })
        .collect();
    GridField::new(lattice.clone(), values)
}

fn sampled_non_decreasing(prof: &Profile) -> bool {
    let ts: Vec<f64> = (0..=240).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 240.0)).collect();
    ts.windows(2).all(|w| {
        let (a, b) = (prof.phi(w[0]), prof.phi(w[1]));
        b >= a - 1e-12 * a.abs().max(1.0)
    })
}

/// Checks that `max{u₁, u₂}` passes when `u₁` and `u₂` do.
#[allow(clippy::too_many_arguments)]
pub fn max_solution_check(
    g: &Group,
    u1: &Field,
    u2: &Field,
    prof: &Profile,
    b: &Coefficient,
    bumps: &[TestFunction],
    spec: &QuadratureSpec,
    tolerance: f64,
) -> Result<WeakFormReport> {
    let mut warnings = Vec::new();
    for (name, u) in [("u1", u1), ("u2", u2)] {
        let rep = weak_form_report(name, g, u, prof, b, bumps, spec, tolerance, None)?;
        if !rep.passed {
            warnings.push(format!(
                "{name} is not a supersolution on these bumps (max residual {:e})",
                rep.max_residual
            ));
        }
    }
    let constant = |u: &Field| matches!(u, ScalarField::Constant(_));
    if !constant(u1) && !constant(u2) {
        if !sampled_non_decreasing(prof) {
            return Err(Error::Precondition(format!("{} is not non-decreasing on sampled points", prof.name())));
        }
        if matches!(prof.descriptor(), ProfileDescriptor::Custom { .. }) {
            warnings.push(format!(
                "monotonicity of {} checked on samples in [1e-6, 1e6] only",
                prof.name()
            ));
        }
    }
    let v = ScalarField::max(u1.clone(), u2.clone());
    let mut rep = weak_form_report("max(u1, u2)", g, &v, prof, b, bumps, spec, tolerance, None)?;
    rep.warnings = warnings;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PasteVerifyOptions {
    /// Total bumps, straddling ones included.
    pub n_bumps: usize,
    pub n_straddle: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for PasteVerifyOptions {
    fn default() -> Self {
        PasteVerifyOptions {
            n_bumps: 50,
            n_straddle: 10,
            rho_min: 0.15,
            rho_max: 0.4,
            seed: 0,
            tolerance: 0.0,
        }
    }
}

fn fits(g: &Group, lat: &Lattice, psi: &TestFunction) -> bool {
    let (lo, hi) = psi.support_box(g);
    let hmax = lo.iter().zip(&hi).take(g.horizontal_dim()).map(|(l, h)| l.abs().max(h.abs())).fold(0.0, f64::max);
    (0..lat.ndim()).all(|a| {
        let shift = if g.layer_of(a) > 1 { 2.0 * hmax * lat.spacing[0] } else { 0.0 };
        let margin = 3.0 * lat.spacing[a] + shift;
        let top = lat.origin[a] + (lat.dims[a] - 1) as f64 * lat.spacing[a];
        lo[a] - margin >= lat.origin[a] && hi[a] + margin <= top
    })
}

/// Lattice nodes in `Ω` with a neighbour outside.
pub fn interface_nodes(lattice: &Lattice, omega: &Domain) -> Vec<usize> {
    let inside: Vec<bool> = (0..lattice.len())
        .into_par_iter()
        .map(|i| omega.contains(&lattice.node(i)))
        .collect();
    let strides = lattice.strides();
    (0..lattice.len())
        .filter(|&i| inside[i] && neighbours(lattice, i, &strides).any(|nb| !inside[nb]))
        .collect()
}

/// Random bumps inside the lattice; the last `n_straddle` are centred on
/// interface nodes of `Ω`.
pub fn verification_bumps(
    g: &Group,
    lattice: &Lattice,
    omega: &Domain,
    opts: &PasteVerifyOptions,
) -> Result<Vec<TestFunction>> {
    if opts.n_straddle > opts.n_bumps || !(opts.rho_min > 0.0 && opts.rho_max >= opts.rho_min) {
        return Err(Error::InvalidParameter {
            name: "n_straddle",
            value: opts.n_straddle as f64,
            reason: "need n_straddle <= n_bumps and 0 < rho_min <= rho_max".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let radius = |rng: &mut ChaCha8Rng| {
        if opts.rho_max > opts.rho_min {
            rng.gen_range(opts.rho_min..opts.rho_max)
        } else {
            opts.rho_min
        }
    };
    let n = lattice.ndim();
    let budget = 1000 * opts.n_bumps.max(1);
    let mut out = Vec::with_capacity(opts.n_bumps);
    let mut tries = 0;
    while out.len() < opts.n_bumps - opts.n_straddle {
        tries += 1;
        if tries > budget {
            return Err(Error::Precondition("no room for random bumps inside the lattice".into()));
        }
        let c: Vec<f64> = (0..n)
            .map(|a| lattice.origin[a] + rng.gen_range(0.0..1.0) * (lattice.dims[a] - 1) as f64 * lattice.spacing[a])
            .collect();
        let psi = TestFunction::new(c, radius(&mut rng))?;
        if fits(g, lattice, &psi) {
            out.push(psi);
        }
    }
    if opts.n_straddle > 0 {
        let iface = interface_nodes(lattice, omega);
        if iface.is_empty() {
            return Err(Error::Precondition(format!("{} has no interface nodes on the lattice", omega.name())));
        }
        while out.len() < opts.n_bumps {
            tries += 1;
            if tries > 2 * budget {
                return Err(Error::Precondition("no room for straddling bumps inside the lattice".into()));
            }
            let c = lattice.node(iface[rng.gen_range(0..iface.len())]);
            let psi = TestFunction::new(c, radius(&mut rng))?;
            if fits(g, lattice, &psi) {
                out.push(psi);
            }
        }
    }
    Ok(out)
}

/// Five times the largest `|R|` of a case whose exact residual is zero.
pub fn calibrate_tolerance(
    g: &Group,
    smooth: &Field,
    prof: &Profile,
    exact_b: &Coefficient,
    bumps: &[TestFunction],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let rep = weak_form_report("calibration", g, smooth, prof, exact_b, bumps, spec, f64::INFINITY, None)?;
    Ok(5.0 * rep.residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max))
}

/// Pastes and tests the result against random and straddling bumps.
#[allow(clippy::too_many_arguments)]
pub fn paste_verify(
    g: &Group,
    inner: &Field,
    outer: &Field,
    omega: &Domain,
    lattice: &Lattice,
    prof: &Profile,
    b: &Coefficient,
    opts: &PasteVerifyOptions,
) -> Result<(GridField<f64>, WeakFormReport)> {
    let v = paste(g, inner, outer, omega, lattice)?;
    let bumps = verification_bumps(g, lattice, omega, opts)?;
    let spec = QuadratureSpec::from_lattice(lattice);
    let vf = ScalarField::grid(v.clone());
    let rep = weak_form_report("pasted", g, &vf, prof, b, &bumps, &spec, opts.tolerance, Some(omega))?;
    Ok((v, rep))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StampacchiaReport {
    pub coincidence_points: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// On lattice nodes where `u₁ = u₂` across the whole difference stencil,
/// compares the stored gradient of `v` with both one-sided gradients.
pub fn stampacchia_check(
    g: &Group,
    u1: &Field,
    u2: &Field,
    v: &GridField<f64>,
    coincide_tol: f64,
    tolerance: f64,
) -> Result<StampacchiaReport> {
    let lat = &v.lattice;
    let s = lat.spacing[0];
    let m1 = g.horizontal_dim();
    let vf = ScalarField::grid(v.clone());
    let found: Vec<Option<f64>> = (0..lat.len())
        .into_par_iter()
        .map(|i| -> Result<Option<f64>> {
            let x = lat.node(i);
            let mut stencil = vec![x.clone()];
            for j in 0..m1 {
                stencil.push(g.flow(&x, j, s));
                stencil.push(g.flow(&x, j, -s));
            }
            if stencil.iter().any(|y| lat.margin(y) < 0.0) {
                return Ok(None);
            }
            for y in &stencil {
                if (u1.value(g, y)? - u2.value(g, y)?).abs() > coincide_tol {
                    return Ok(None);
                }
            }
            let grad = |u: &Field| fd_gradient(g, &|y: &[f64]| u.value(g, y), &x, s);
            let (gv, g1, g2) = match (grad(&vf), grad(u1), grad(u2)) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                (Err(Error::OutsideLattice { .. }), _, _) => return Ok(None),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err(e),
            };
            let d = (0..m1)
                .map(|j| (gv[j] - g1[j]).abs().max((gv[j] - g2[j]).abs()))
                .fold(0.0, f64::max);
            Ok(Some(d))
        })
        .collect::<Result<Vec<_>>>()?;
    let ds: Vec<f64> = found.into_iter().flatten().collect();
    let max_discrepancy = ds.iter().copied().fold(0.0, f64::max);
    Ok(StampacchiaReport {
        coincidence_points: ds.len(),
        max_discrepancy,
        tolerance,
        passed: max_discrepancy <= tolerance,
    })
}

/// `max_k |R_k|` at each spacing for a closed-form `u` with `B = Δ^φ u`;
/// the gradient is a central difference at the quadrature spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpReport {
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub fn ibp_consistency(
    g: &Group,
    u: &Field,
    prof: &Profile,
    bumps: &[TestFunction],
    spacings: &[f64],
) -> Result<IbpReport> {
    let n = g.topological_dim();
    let (gg, uu, pp) = (g.clone(), u.clone(), prof.clone());
    let b: Coefficient = Arc::new(move |x, _, _| phi_laplacian(&gg, &pp, &uu, x, 0.0).unwrap_or(f64::NAN));
    let errors = spacings
        .iter()
        .map(|&h| {
            let spec = QuadratureSpec::uniform(n, h).with_gradient(GradientRule::FiniteDifference { step: h });
            let rep = weak_form_report("ibp", g, u, prof, &b, bumps, &spec, f64::INFINITY, None)?;
            Ok(rep.residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(IbpReport {
        spacings: spacings.to_vec(),
        errors,
        ratios,
    })
}

/// Constant `2γ` pasted with a power witness on `{u > 2γ}` in `ℝ^Q`, for
/// the mean curvature operator with
/// `B = C(1+r)^{−μ} f(v)|∇v|^χ/√(1+|∇v|²)`, where `f` vanishes below `2γ`,
/// ramps linearly in `t^ω` up to `3γ` and equals `t^ω` above.
#[derive(Clone, Debug)]
pub struct SharpnessGlue {
    pub group: Group,
    pub profile: Profile,
    pub params: CounterexampleParams,
    pub witness: RadialWitness,
    /// Sampled `min LHS/shape` of the witness.
    pub c_star: f64,
    /// Constant in `B`, half of `c_star`.
    pub c_coef: f64,
    pub gamma: f64,
    pub lattice: Lattice,
    pub inner: Field,
    pub outer: Field,
    pub omega: Domain,
}

impl SharpnessGlue {
    /// Case-1 witness `χ = 1/2, μ = 0, ω = 1/4, σ = 6` on `ℝ³`, glued at
    /// radius `r_glue`, on `nodes³` nodes over `[−1.2, 1.2]³`.
    pub fn new(nodes: usize, r_glue: f64) -> Result<Self> {
        let params = CounterexampleParams {
            chi: 0.5,
            mu: 0.0,
            omega: 0.25,
            sigma: Some(6.0),
            q: 3,
        };
        let rep = verify_theorem_main_counterexamples(1, &params, &RadiusSamples::default())?;
        if !rep.certified() {
            return Err(Error::Precondition("case-1 witness is not certified".into()));
        }
        let group = CarnotGroup::euclidean(3)?;
        let witness = power_witness(6.0, 3)?;
        let gamma = 0.5 * witness.u(r_glue);
        let inner = ScalarField::radial(witness.field());
        let outer = ScalarField::Constant(2.0 * gamma);
        let omega = Domain::superlevel(&group, inner.clone(), 2.0 * gamma);
        let h = 2.4 / (nodes - 1) as f64;
        let lattice = Lattice::new(vec![-1.2; 3], vec![h; 3], vec![nodes; 3])?;
        Ok(SharpnessGlue {
            group,
            profile: PhiProfile::mean_curvature(2.0)?,
            params,
            witness,
            c_star: rep.c_star,
            c_coef: 0.5 * rep.c_star,
            gamma,
            lattice,
            inner,
            outer,
            omega,
        })
    }

    pub fn f(&self, t: f64) -> f64 {
        let g = self.gamma;
        let w = t.max(0.0).powf(self.params.omega);
        if t <= 2.0 * g {
            0.0
        } else if t < 3.0 * g {
            w * (t - 2.0 * g) / g
        } else {
            w
        }
    }

    pub fn coefficient(&self) -> Coefficient {
        let me = self.clone();
        Arc::new(move |x, v, grad| {
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let gn2: f64 = grad.iter().map(|c| c * c).sum();
            me.c_coef * (1.0 + r).powf(-me.params.mu) * me.f(v) * gn2.sqrt().powf(me.params.chi) / (1.0 + gn2).sqrt()
        })
    }

    /// `B = Δ^φ w` of the smooth witness, for calibration.
    pub fn exact_coefficient(&self) -> Coefficient {
        let (g, p, w) = (self.group.clone(), self.profile.clone(), self.inner.clone());
        Arc::new(move |x, _, _| phi_laplacian(&g, &p, &w, x, 0.0).unwrap_or(f64::NAN))
    }

    /// Runs calibration and verification on the same bumps.
    pub fn verify(&self, opts: &PasteVerifyOptions) -> Result<GlueVerification> {
        let g = &self.group;
        let bumps = verification_bumps(g, &self.lattice, &self.omega, opts)?;
        let spec = QuadratureSpec::from_lattice(&self.lattice);
        let w = &self.witness;
        let smooth = GridField::sample(self.lattice.clone(), |x: &[f64]| {
            w.u(x.iter().map(|c| c * c).sum::<f64>().sqrt())
        })?;
        let tolerance = calibrate_tolerance(
            g,
            &ScalarField::grid(smooth),
            &self.profile,
            &self.exact_coefficient(),
            &bumps,
            &spec,
        )?;
        let v = paste(g, &self.inner, &self.outer, &self.omega, &self.lattice)?;
        let mut report = weak_form_report(
            "glued",
            g,
            &ScalarField::grid(v),
            &self.profile,
            &self.coefficient(),
            &bumps,
            &spec,
            tolerance,
            Some(&self.omega),
        )?;
        if report.n_straddling() < opts.n_straddle {
            report.warnings.push(format!(
                "only {} of {} bumps straddle the interface",
                report.n_straddling(),
                opts.n_straddle
            ));
        }
        Ok(GlueVerification {
            gamma: self.gamma,
            c_star: self.c_star,
            spacing: self.lattice.spacing[0],
            tolerance,
            report,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueVerification {
    pub gamma: f64,
    pub c_star: f64,
    pub spacing: f64,
    pub tolerance: f64,
    pub report: WeakFormReport,
}

/// `h(r²)` sampled on a lattice; convenience for examples and the CLI.
pub fn sample_field(g: &Group, u: &Field, lattice: &Lattice) -> Result<GridField<f64>> {
    let vals = (0..lattice.len())
        .into_par_iter()
        .map(|i| u.value(g, &lattice.node(i)))
        .collect::<Result<Vec<_>>>()?;
    GridField::new(lattice.clone(), vals)
}
