//! Horizontal gradient, sub-Laplacian and `Δ^φ`.
//!
//! Closed-form fields on the built-in groups are differentiated exactly by
//! pushing second-order jets through the group law: `X_j X_k u(x)` is the
//! mixed derivative of `s, τ ↦ u(x ∘ s e_j ∘ τ e_k)` at the origin. Custom
//! groups and lattice fields use central differences along the flows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Polynomial, RadialArg, RadialField, ScalarField};
use crate::group::CarnotGroup;
use crate::profile::PhiProfile;
use crate::scalar::{Dual, HyperDual, Real};

/// Default clamp for `|∇₀u|` in the flux `φ(|∇₀u|)/|∇₀u| ∇₀u`.
pub const EPS_GRAD: f64 = 1e-12;

/// Components of a horizontal vector in the orthonormal frame `{X_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalVector<T> {
    pub components: Vec<T>,
}

impl<T: Real> HorizontalVector<T> {
    pub fn norm(&self) -> T {
        self.components.iter().map(|&c| c * c).sum::<T>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.components.iter().zip(&other.components).map(|(&a, &b)| a * b).sum()
    }
}

/// Value, horizontal gradient and `hess[j][k] = X_j X_k u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Vec<Vec<T>>,
}

fn hd<T: Real>(a: T, b: T, c: T, d: T) -> HyperDual<T> {
    Dual::new(Dual::new(a, b), Dual::new(c, d))
}

/// Exact jets of `f` at `x` on a built-in group. `None` on custom groups.
pub fn group_jet<T: Real, F>(g: &CarnotGroup<T>, x: &[T], f: F) -> Option<Jet2<T>>
where
    F: Fn(&[HyperDual<T>]) -> HyperDual<T>,
{
    if !g.has_generic_law() {
        return None;
    }
    let m1 = g.horizontal_dim();
    let n = x.len();
    let z = T::zero();
    let xs: Vec<HyperDual<T>> = x.iter().map(|&c| HyperDual::lift(c)).collect();
    let mut value = z;
    let mut grad = vec![z; m1];
    let mut hess = vec![vec![z; m1]; m1];
    for j in 0..m1 {
        let mut sj = vec![HyperDual::lift(z); n];
        sj[j] = hd(z, T::one(), z, z);
        let y = g.compose_generic(&xs, &sj)?;
        for k in 0..m1 {
            let mut tk = vec![HyperDual::lift(z); n];
            tk[k] = hd(z, z, T::one(), z);
            let w = g.compose_generic(&y, &tk)?;
            let v = f(&w);
            value = v.re.re;
            if j == k {
                grad[j] = v.re.eps;
            }
            hess[j][k] = v.eps.eps;
        }
    }
    Some(Jet2 { value, grad, hess })
}

/// Jets by central differences along the flows with step `s`.
pub fn fd_jet<T: Real, F>(g: &CarnotGroup<T>, x: &[T], s: T, f: F) -> Result<Jet2<T>>
where
    F: Fn(&[T]) -> Result<T>,
{
    let m1 = g.horizontal_dim();
    let two = T::lit(2.0);
    let value = f(x)?;
    let mut grad = vec![T::zero(); m1];
    let mut hess = vec![vec![T::zero(); m1]; m1];
    for j in 0..m1 {
        let xp = g.flow(x, j, s);
        let xm = g.flow(x, j, -s);
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        grad[j] = (fp - fm) / (two * s);
        for k in 0..m1 {
            hess[j][k] = if j == k {
                (fp - two * value + fm) / (s * s)
            } else {
                let pp = f(&g.flow(&xp, k, s))?;
                let pm = f(&g.flow(&xp, k, -s))?;
                let mp = f(&g.flow(&xm, k, s))?;
                let mm = f(&g.flow(&xm, k, -s))?;
                (pp - pm - mp + mm) / (T::lit(4.0) * s * s)
            };
        }
    }
    Ok(Jet2 { value, grad, hess })
}

/// Jets of `ρ = r` or `ρ = r²`.
pub fn norm_jet<T: Real>(g: &CarnotGroup<T>, x: &[T], arg: RadialArg) -> Result<Jet2<T>> {
    let exact = match arg {
        RadialArg::R => group_jet(g, x, |y| g.norm_generic(y).unwrap()),
        RadialArg::RSquared => group_jet(g, x, |y| g.norm_squared_generic(y).unwrap()),
    };
    match exact {
        Some(j) => Ok(j),
        None => {
            let s = T::lit(1e-4) * g.hom_norm(x).max(T::lit(1e-2));
            fd_jet(g, x, s, |y| {
                let r = g.hom_norm(y);
                Ok(match arg {
                    RadialArg::R => r,
                    RadialArg::RSquared => r * r,
                })
            })
        }
    }
}

fn is_origin<T: Real>(x: &[T]) -> bool {
    x.iter().all(|c| *c == T::zero())
}

/// Exact jets of a closed-form field (finite differences on custom groups).
pub fn field_jet<T: Real>(g: &CarnotGroup<T>, u: &ScalarField<T>, x: &[T]) -> Result<Jet2<T>> {
    if x.len() != g.topological_dim() {
        return Err(Error::DimensionMismatch {
            expected: g.topological_dim(),
            got: x.len(),
        });
    }
    let m1 = g.horizontal_dim();
    match u {
        ScalarField::Constant(c) => Ok(Jet2 {
            value: *c,
            grad: vec![T::zero(); m1],
            hess: vec![vec![T::zero(); m1]; m1],
        }),
        ScalarField::Polynomial(p) => polynomial_jet(g, p, x),
        ScalarField::Radial(f) => radial_jet(g, f, x),
        ScalarField::Grid(_) => Err(Error::Precondition(
            "lattice fields have no closed-form jet; use a finite-difference step".into(),
        )),
        ScalarField::Max(a, b) => {
            let ja = field_jet(g, a, x)?;
            let jb = field_jet(g, b, x)?;
            Ok(if jb.value > ja.value { jb } else { ja })
        }
    }
}

fn polynomial_jet<T: Real>(g: &CarnotGroup<T>, p: &Polynomial, x: &[T]) -> Result<Jet2<T>> {
    match group_jet(g, x, |y| p.eval(y)) {
        Some(j) => Ok(j),
        None => fd_jet(g, x, T::lit(1e-4), |y| Ok(p.eval(y))),
    }
}

fn radial_jet<T: Real>(g: &CarnotGroup<T>, f: &RadialField<T>, x: &[T]) -> Result<Jet2<T>> {
    let m1 = g.horizontal_dim();
    if is_origin(x) {
        let (h0, h1, _) = f.eval(T::zero());
        return match f.arg {
            RadialArg::RSquared if g.is_euclidean() => {
                // r² = |x|², X_jX_k r² = 2δ_jk
                let mut hess = vec![vec![T::zero(); m1]; m1];
                for (j, row) in hess.iter_mut().enumerate() {
                    row[j] = T::lit(2.0) * h1;
                }
                Ok(Jet2 {
                    value: h0,
                    grad: vec![T::zero(); m1],
                    hess,
                })
            }
            _ => Err(Error::Degenerate(format!(
                "second derivatives of {}({:?}) at the origin",
                f.name, f.arg
            ))),
        };
    }
    let rho = norm_jet(g, x, f.arg)?;
    let (h0, h1, h2) = f.eval(rho.value);
    let grad: Vec<T> = rho.grad.iter().map(|&d| h1 * d).collect();
    let hess = (0..m1)
        .map(|j| {
            (0..m1)
                .map(|k| h2 * rho.grad[j] * rho.grad[k] + h1 * rho.hess[j][k])
                .collect()
        })
        .collect();
    Ok(Jet2 { value: h0, grad, hess })
}

fn grid_fn<'a, T: Real>(g: &'a CarnotGroup<T>, u: &'a ScalarField<T>) -> impl Fn(&[T]) -> Result<T> + 'a {
    move |y: &[T]| u.value(g, y)
}

/// `∇₀u(x)`. Closed forms are exact and ignore `step`; lattice fields use
/// central differences `[u(x∘s e_j) − u(x∘(−s) e_j)]/(2s)`.
pub fn horizontal_gradient<T: Real>(
    g: &CarnotGroup<T>,
    u: &ScalarField<T>,
    x: &[T],
    step: T,
) -> Result<HorizontalVector<T>> {
    let components = if u.is_closed_form() {
        field_jet(g, u, x)?.grad
    } else {
        fd_gradient(g, &grid_fn(g, u), x, step)?
    };
    Ok(HorizontalVector { components })
}

pub fn fd_gradient<T: Real>(g: &CarnotGroup<T>, f: &dyn Fn(&[T]) -> Result<T>, x: &[T], s: T) -> Result<Vec<T>> {
    (0..g.horizontal_dim())
        .map(|j| Ok((f(&g.flow(x, j, s))? - f(&g.flow(x, j, -s))?) / (s + s)))
        .collect()
}

/// `Δ_𝔾 u = Σ_j X_j X_j u`.
pub fn sub_laplacian<T: Real>(g: &CarnotGroup<T>, u: &ScalarField<T>, x: &[T], step: T) -> Result<T> {
    if u.is_closed_form() {
        let j = field_jet(g, u, x)?;
        Ok((0..j.grad.len()).map(|i| j.hess[i][i]).sum())
    } else {
        fd_sub_laplacian(g, &grid_fn(g, u), x, step)
    }
}

pub fn fd_sub_laplacian<T: Real>(g: &CarnotGroup<T>, f: &dyn Fn(&[T]) -> Result<T>, x: &[T], s: T) -> Result<T> {
    let f0 = f(x)?;
    let mut acc = T::zero();
    for j in 0..g.horizontal_dim() {
        acc = acc + (f(&g.flow(x, j, s))? - (f0 + f0) + f(&g.flow(x, j, -s))?) / (s * s);
    }
    Ok(acc)
}

/// `φ(|G|)/|G| · G`, zero at `G = 0`, with `|G|` clamped below by `eps`.
pub fn flux<T: Real>(prof: &PhiProfile<T>, grad: &[T], eps: T) -> Vec<T> {
    let n = grad.iter().map(|&c| c * c).sum::<T>().sqrt();
    if n == T::zero() {
        return vec![T::zero(); grad.len()];
    }
    let n = n.max(eps);
    let a = prof.phi(n) / n;
    grad.iter().map(|&c| a * c).collect()
}

/// `Δ^φ u` from exact jets:
/// `a(g) Σ_j X_jX_j u + a′(g)/g · Σ_{j,k} X_j u X_k u X_jX_k u`
/// with `g = |∇₀u|` and `a = φ(g)/g`.
pub fn phi_laplacian_from_jet<T: Real>(prof: &PhiProfile<T>, jet: &Jet2<T>) -> Result<T> {
    let m1 = jet.grad.len();
    let trace: T = (0..m1).map(|i| jet.hess[i][i]).sum();
    let gn = jet.grad.iter().map(|&c| c * c).sum::<T>().sqrt();
    if gn == T::zero() {
        if jet.hess.iter().flatten().all(|h| *h == T::zero()) {
            return Ok(T::zero());
        }
        // isotropic limit when φ(t) ~ L t at 0
        let (t1, t2) = (T::lit(1e-8), T::lit(1e-9));
        let (l1, l2) = (prof.phi(t1) / t1, prof.phi(t2) / t2);
        if l1.is_finite() && ((l1 - l2).abs() <= T::lit(1e-6) * l1.abs().max(T::one())) {
            return Ok(l2 * trace);
        }
        return Err(Error::Degenerate(format!(
            "∇₀u = 0 with non-zero second derivatives for {}",
            prof.name()
        )));
    }
    let phi = prof.phi(gn);
    let dphi = prof.phi_prime_or_fd(gn);
    let a = phi / gn;
    let da_over_g = (dphi * gn - phi) / (gn * gn * gn);
    let mut quad = T::zero();
    for j in 0..m1 {
        for k in 0..m1 {
            quad = quad + jet.grad[j] * jet.grad[k] * jet.hess[j][k];
        }
    }
    Ok(a * trace + da_over_g * quad)
}

/// `Δ^φ_𝔾 u(x)`; exact for closed forms, flux divergence for lattices.
pub fn phi_laplacian<T: Real>(
    g: &CarnotGroup<T>,
    prof: &PhiProfile<T>,
    u: &ScalarField<T>,
    x: &[T],
    step: T,
) -> Result<T> {
    if u.is_closed_form() {
        phi_laplacian_from_jet(prof, &field_jet(g, u, x)?)
    } else {
        fd_phi_laplacian(g, prof, &grid_fn(g, u), x, step, T::lit(EPS_GRAD))
    }
}

/// `Σ_j [F_j(x∘s e_j) − F_j(x∘(−s) e_j)]/(2s)` with the flux
/// `F = φ(|∇₀u|)/|∇₀u| ∇₀u` itself computed by central differences.
pub fn fd_phi_laplacian<T: Real>(
    g: &CarnotGroup<T>,
    prof: &PhiProfile<T>,
    f: &dyn Fn(&[T]) -> Result<T>,
    x: &[T],
    s: T,
    eps: T,
) -> Result<T> {
    let mut acc = T::zero();
    for j in 0..g.horizontal_dim() {
        let xp = g.flow(x, j, s);
        let xm = g.flow(x, j, -s);
        let fp = flux(prof, &fd_gradient(g, f, &xp, s)?, eps);
        let fm = flux(prof, &fd_gradient(g, f, &xm, s)?, eps);
        acc = acc + (fp[j] - fm[j]) / (s + s);
    }
    Ok(acc)
}

/// `Δ^φ u` for `u = h(r)` or `h(r²)` on Euclidean space, at radius `r`:
/// `φ′(|U′|) U″ + (Q−1) sgn(U′) φ(|U′|)/r` where `U(r) = u`.
pub fn phi_laplacian_radial<T: Real>(g: &CarnotGroup<T>, prof: &PhiProfile<T>, u: &RadialField<T>, r: T) -> Result<T> {
    if !g.is_euclidean() {
        return Err(Error::Precondition("radial φ-Laplacian formula needs a Euclidean group".into()));
    }
    if r < T::zero() {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r.as_f64(),
            reason: "radius must be nonnegative".into(),
        });
    }
    let q = T::lit(g.homogeneous_dim() as f64);
    let two = T::lit(2.0);
    let (d1, d2) = match u.arg {
        RadialArg::R => {
            let (_, h1, h2) = u.eval(r);
            (h1, h2)
        }
        RadialArg::RSquared => {
            let (_, h1, h2) = u.eval(r * r);
            (two * r * h1, two * h1 + T::lit(4.0) * r * r * h2)
        }
    };
    if r == T::zero() {
        if u.arg == RadialArg::R && d1 != T::zero() {
            return Err(Error::Degenerate("cone point of h(r) at the origin".into()));
        }
        if d2 == T::zero() {
            return Ok(T::zero());
        }
        let t = T::lit(1e-9);
        let slope = prof.phi(t) / t;
        if !slope.is_finite() {
            return Err(Error::Degenerate("φ′(0) is not finite".into()));
        }
        return Ok(q * slope * d2);
    }
    let gabs = d1.abs();
    if gabs == T::zero() {
        if d2 == T::zero() {
            return Ok(T::zero());
        }
        return Err(Error::Degenerate(format!("critical radius r = {r} with U″ ≠ 0")));
    }
    let sign = d1.signum();
    Ok(prof.phi_prime_or_fd(gabs) * d2 + (q - T::one()) * sign * prof.phi(gabs) / r)
}

/// `⟨∇₀|∇₀r|², ∇₀r⟩` at `x`; vanishes where `r` is ∞-harmonic.
pub fn infinity_harmonic_residual<T: Real>(g: &CarnotGroup<T>, x: &[T]) -> Result<T> {
    let j = norm_jet(g, x, RadialArg::R)?;
    let m1 = j.grad.len();
    let mut acc = T::zero();
    for k in 0..m1 {
        let d: T = (0..m1).map(|i| T::lit(2.0) * j.grad[i] * j.hess[k][i]).sum();
        acc = acc + j.grad[k] * d;
    }
    Ok(acc)
}

/// Polynomial test functions used for the commutator identity on ℍ^m.
pub fn heisenberg_test_polynomials(m: usize) -> Vec<Polynomial> {
    let n = 2 * m + 1;
    let mono = |pairs: &[(usize, u32)]| {
        let mut e = vec![0u32; n];
        for &(i, k) in pairs {
            e[i] += k;
        }
        e
    };
    let t = n - 1;
    let last = n - 2;
    vec![
        Polynomial::coordinate(n, t),
        Polynomial::new(vec![(1.0, mono(&[(0, 1), (t, 1)])), (1.0, mono(&[(last, 2)]))]),
        Polynomial::new(vec![(1.0, mono(&[(t, 2)])), (-0.5, mono(&[(0, 2), (1, 1)]))]),
        Polynomial::new(vec![(2.0, mono(&[(0, 1), (1, 1), (t, 1)])), (1.0, mono(&[(t, 3)]))]),
        Polynomial::new(vec![
            (1.0, mono(&[(last, 3), (t, 1)])),
            (-3.0, mono(&[(1, 1), (t, 2)])),
            (0.25, mono(&[(0, 4)])),
        ]),
    ]
}

/// Max over test polynomials and random points of
/// `|(X_jY_k − Y_kX_j)u + 4δ_{jk}∂_t u|`.
pub fn heisenberg_commutator_residual<T: Real>(m: usize, n_points: usize, seed: u64) -> f64 {
    let g = match CarnotGroup::<T>::heisenberg(m) {
        Ok(g) => g,
        Err(_) => return f64::INFINITY,
    };
    let n = 2 * m + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for p in heisenberg_test_polynomials(m) {
        for _ in 0..n_points {
            let x = g.random_point(&mut rng, 1.5);
            let jet = match polynomial_jet(&g, &p, &x) {
                Ok(j) => j,
                Err(_) => return f64::INFINITY,
            };
            let xd: Vec<Dual<T>> = x
                .iter()
                .enumerate()
                .map(|(i, &c)| if i == n - 1 { Dual::variable(c) } else { Dual::constant(c) })
                .collect();
            let dt = p.eval(&xd).eps;
            for j in 0..m {
                for k in 0..m {
                    let (xj, yk) = (2 * j, 2 * k + 1);
                    let comm = jet.hess[xj][yk] - jet.hess[yk][xj];
                    let expect = if j == k { -T::lit(4.0) * dt } else { T::zero() };
                    let scale = dt.abs().max(T::one());
                    worst = worst.max(((comm - expect).abs() / scale).as_f64());
                }
            }
        }
    }
    worst
}
