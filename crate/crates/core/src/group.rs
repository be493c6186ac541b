//! Homogeneous Carnot groups `(ℝⁿ, ∘, δ_R)`.
//!
//! Built-in groups (Euclidean space and the Heisenberg groups) have their
//! group law and homogeneous norm written generically over [`Real`], so the
//! calculus layer can push dual numbers through them and obtain exact
//! horizontal derivatives. Custom groups are closures over `T` and fall back
//! to finite differences.
//!
//! Heisenberg coordinates are interleaved: `(x₁, y₁, …, x_m, y_m, t)` with
//! `z_k = x_k + i y_k`, and the law is
//! `(z,t)∘(z',t') = (z+z', t+t'+2 Im Σ z_k conj(z'_k))`. With this hermitian
//! convention the left-invariant fields generated at the origin are
//! `X_k = ∂_{x_k} + 2y_k ∂_t` and `Y_k = ∂_{y_k} − 2x_k ∂_t`, which satisfy
//! `[X_j, Y_k] = −4δ_{jk} ∂_t` and `|∇₀r|² = |z|²/r²` for the gauge norm.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Dual, Real};

/// A point of the group in the induced coordinates.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Point<T>(pub Vec<T>);

impl<T> Deref for Point<T> {
    type Target = Vec<T>;
    fn deref(&self) -> &Vec<T> {
        &self.0
    }
}

impl<T> DerefMut for Point<T> {
    fn deref_mut(&mut self) -> &mut Vec<T> {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for Point<T> {
    fn from(v: Vec<T>) -> Self {
        Point(v)
    }
}

impl<T: Real> Point<T> {
    pub fn from_f64(coords: &[f64]) -> Self {
        Point(coords.iter().map(|&c| T::lit(c)).collect())
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![T::zero(); n])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.as_f64()).collect()
    }
}

pub type LawFn<T> = Arc<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>;
pub type InverseFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type FrameFn<T> = Arc<dyn Fn(usize, &[T]) -> Vec<T> + Send + Sync>;
pub type NormFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// User supplied group structure.
///
/// `unit_ball_box` holds per-coordinate half widths of a box containing the
/// unit ball `{norm < 1}` of the supplied (unrescaled) norm.
#[derive(Clone)]
pub struct CustomLaw<T> {
    pub name: String,
    pub layer_dims: Vec<usize>,
    pub compose: LawFn<T>,
    pub inverse: InverseFn<T>,
    pub frame: Option<FrameFn<T>>,
    pub norm: NormFn<T>,
    pub unit_ball_box: Vec<T>,
}

#[derive(Clone)]
enum Structure<T> {
    Euclidean,
    Heisenberg { m: usize },
    Custom(Arc<CustomLaw<T>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Euclidean,
    Heisenberg,
    Custom,
}

/// Serializable group descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupDescriptor {
    Euclidean { dim: usize },
    Heisenberg { m: usize },
    Custom { name: String },
}

/// A homogeneous Carnot group. Immutable and cheap to clone.
#[derive(Clone)]
pub struct CarnotGroup<T> {
    layer_dims: Vec<usize>,
    layer_of: Vec<usize>,
    structure: Structure<T>,
    norm_scale: T,
    ball_box: Vec<T>,
}

impl<T: Real> fmt::Debug for CarnotGroup<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CarnotGroup")
            .field("name", &self.name())
            .field("layer_dims", &self.layer_dims)
            .field("homogeneous_dim", &self.homogeneous_dim())
            .finish()
    }
}

fn layer_index(layer_dims: &[usize]) -> Vec<usize> {
    layer_dims
        .iter()
        .enumerate()
        .flat_map(|(j, &m)| std::iter::repeat(j + 1).take(m))
        .collect()
}

impl<T: Real> CarnotGroup<T> {
    /// `(ℝ^Q, +)` with the Euclidean norm.
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("Euclidean dimension must be >= 1".into()));
        }
        Ok(CarnotGroup {
            layer_dims: vec![dim],
            layer_of: vec![1; dim],
            structure: Structure::Euclidean,
            norm_scale: T::one(),
            ball_box: vec![T::one(); dim],
        })
    }

    /// The Heisenberg group ℍ^m of real dimension 2m+1 with the gauge norm
    /// `(|z|⁴ + t²)^{1/4}`, which already satisfies `|∇₀r| ≤ 1`.
    pub fn heisenberg(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDimension("Heisenberg index m must be >= 1".into()));
        }
        let layer_dims = vec![2 * m, 1];
        Ok(CarnotGroup {
            layer_of: layer_index(&layer_dims),
            layer_dims,
            structure: Structure::Heisenberg { m },
            norm_scale: T::one(),
            ball_box: vec![T::one(); 2 * m + 1],
        })
    }

    /// Wraps a custom law without running the sampled invariant checks.
    pub fn custom_unchecked(law: CustomLaw<T>) -> Result<Self> {
        if law.layer_dims.is_empty() || law.layer_dims.iter().any(|&m| m == 0) {
            return Err(Error::InvalidDimension(format!(
                "layer dims {:?} must be non-empty and positive",
                law.layer_dims
            )));
        }
        let n: usize = law.layer_dims.iter().sum();
        if law.unit_ball_box.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: law.unit_ball_box.len(),
            });
        }
        Ok(CarnotGroup {
            layer_of: layer_index(&law.layer_dims),
            layer_dims: law.layer_dims.clone(),
            ball_box: law.unit_ball_box.clone(),
            structure: Structure::Custom(Arc::new(law)),
            norm_scale: T::one(),
        })
    }

    /// Wraps a custom law, rescales its norm so that the sampled sup of
    /// `|∇₀r|` is at most one, and rejects it if any sampled invariant fails.
    pub fn custom(law: CustomLaw<T>) -> Result<Self> {
        let mut g = Self::custom_unchecked(law)?;
        let sup = g.sampled_sup_horizontal_norm_gradient(400, 0x5eed);
        if sup > T::one() {
            g.rescale_norm(sup);
        }
        let report = g.self_check(&SelfCheckOptions::quick());
        if let Some(bad) = report.checks.iter().find(|c| !c.passed) {
            return Err(Error::GroupCheck(format!(
                "{}: residual {:e} > {:e}",
                bad.name, bad.residual, bad.tolerance
            )));
        }
        Ok(g)
    }

    /// Divides the homogeneous norm by `factor`; the bounding box of the unit
    /// ball is dilated accordingly.
    pub fn rescale_norm(&mut self, factor: T) {
        self.norm_scale = self.norm_scale * factor;
        for (a, b) in self.ball_box.iter_mut().enumerate() {
            *b = *b * factor.powi(self.layer_of[a] as i32);
        }
    }

    pub fn from_descriptor(desc: &GroupDescriptor, registry: &GroupRegistry<T>) -> Result<Self> {
        match desc {
            GroupDescriptor::Euclidean { dim } => Self::euclidean(*dim),
            GroupDescriptor::Heisenberg { m } => Self::heisenberg(*m),
            GroupDescriptor::Custom { name } => registry
                .get(name)
                .ok_or_else(|| Error::Format(format!("unknown custom group {name:?}")))
                .and_then(|law| Self::custom(law.clone())),
        }
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        match &self.structure {
            Structure::Euclidean => GroupDescriptor::Euclidean {
                dim: self.topological_dim(),
            },
            Structure::Heisenberg { m } => GroupDescriptor::Heisenberg { m: *m },
            Structure::Custom(law) => GroupDescriptor::Custom {
                name: law.name.clone(),
            },
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self.structure {
            Structure::Euclidean => GroupKind::Euclidean,
            Structure::Heisenberg { .. } => GroupKind::Heisenberg,
            Structure::Custom(_) => GroupKind::Custom,
        }
    }

    pub fn name(&self) -> String {
        match &self.structure {
            Structure::Euclidean => format!("R^{}", self.topological_dim()),
            Structure::Heisenberg { m } => format!("H^{m}"),
            Structure::Custom(law) => law.name.clone(),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.structure, Structure::Euclidean)
    }

    pub fn topological_dim(&self) -> usize {
        self.layer_of.len()
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Layer (1-based) of coordinate `alpha`.
    pub fn layer_of(&self, alpha: usize) -> usize {
        self.layer_of[alpha]
    }

    /// `Q = Σ j·m_j`.
    pub fn homogeneous_dim(&self) -> usize {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(j, &m)| (j + 1) * m)
            .sum()
    }

    /// Dimension `m₁` of the first layer.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Half widths of a box containing `{r < 1}`.
    pub fn unit_ball_box(&self) -> &[T] {
        &self.ball_box
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.topological_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.topological_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn origin(&self) -> Point<T> {
        Point::origin(self.topological_dim())
    }

    pub fn compose(&self, x: &[T], y: &[T]) -> Result<Point<T>> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(Point(self.compose_unchecked(x, y)))
    }

    pub(crate) fn compose_unchecked(&self, x: &[T], y: &[T]) -> Vec<T> {
        match &self.structure {
            Structure::Custom(law) => (law.compose)(x, y),
            _ => self
                .compose_generic(x, y)
                .expect("built-in structure has a generic law"),
        }
    }

    /// Group law for built-in structures over any scalar, including jets.
    /// Returns `None` for custom groups.
    pub fn compose_generic<S: Real>(&self, x: &[S], y: &[S]) -> Option<Vec<S>> {
        match &self.structure {
            Structure::Euclidean => Some(x.iter().zip(y).map(|(&a, &b)| a + b).collect()),
            Structure::Heisenberg { m } => {
                let n = 2 * m + 1;
                let mut out: Vec<S> = x.iter().zip(y).map(|(&a, &b)| a + b).collect();
                let mut symp = S::zero();
                for k in 0..*m {
                    let (x1, x2) = (x[2 * k], x[2 * k + 1]);
                    let (y1, y2) = (y[2 * k], y[2 * k + 1]);
                    // Im(z conj z') = x2 y1 - x1 y2
                    symp = symp + x2 * y1 - x1 * y2;
                }
                out[n - 1] = out[n - 1] + S::lit(2.0) * symp;
                Some(out)
            }
            Structure::Custom(_) => None,
        }
    }

    pub fn inverse(&self, x: &[T]) -> Result<Point<T>> {
        self.check_dim(x)?;
        Ok(Point(match &self.structure {
            Structure::Euclidean | Structure::Heisenberg { .. } => x.iter().map(|&a| -a).collect(),
            Structure::Custom(law) => (law.inverse)(x),
        }))
    }

    /// `δ_R`, scaling layer j by `R^j`.
    pub fn dilate(&self, scale: T, x: &[T]) -> Result<Point<T>> {
        if !(scale > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "R",
                value: scale.as_f64(),
                reason: "dilation factor must be positive".into(),
            });
        }
        self.check_dim(x)?;
        Ok(Point(self.dilate_unchecked(scale, x)))
    }

    fn dilate_unchecked(&self, scale: T, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.layer_of)
            .map(|(&c, &j)| c * scale.powi(j as i32))
            .collect()
    }

    /// Homogeneous norm `r(x)`, rescaled so that `|∇₀r| ≤ 1`.
    pub fn hom_norm(&self, x: &[T]) -> T {
        match &self.structure {
            Structure::Custom(law) => (law.norm)(x) / self.norm_scale,
            _ => self.norm_generic(x).expect("built-in norm"),
        }
    }

    /// Homogeneous norm of built-in groups over any scalar.
    pub fn norm_generic<S: Real>(&self, x: &[S]) -> Option<S> {
        match &self.structure {
            Structure::Euclidean => Some(x.iter().map(|&c| c * c).sum::<S>().sqrt()),
            Structure::Heisenberg { .. } => {
                let n = x.len();
                let z2: S = x[..n - 1].iter().map(|&c| c * c).sum();
                let t = x[n - 1];
                Some((z2 * z2 + t * t).sqrt().sqrt())
            }
            Structure::Custom(_) => None,
        }
    }

    /// Squared homogeneous norm of built-in groups; smooth at the origin for
    /// Euclidean space.
    pub fn norm_squared_generic<S: Real>(&self, x: &[S]) -> Option<S> {
        match &self.structure {
            Structure::Euclidean => Some(x.iter().map(|&c| c * c).sum()),
            Structure::Heisenberg { .. } => {
                let n = x.len();
                let z2: S = x[..n - 1].iter().map(|&c| c * c).sum();
                let t = x[n - 1];
                Some((z2 * z2 + t * t).sqrt())
            }
            Structure::Custom(_) => None,
        }
    }

    pub fn has_generic_law(&self) -> bool {
        !matches!(self.structure, Structure::Custom(_))
    }

    /// Ambient coefficients `c_{j·}(x)` of the left-invariant field `X_j`.
    pub fn frame_vector(&self, j: usize, x: &[T]) -> Result<Vec<T>> {
        let m1 = self.horizontal_dim();
        if j >= m1 {
            return Err(Error::FrameIndex { index: j, m1 });
        }
        self.check_dim(x)?;
        Ok(self.frame_unchecked(j, x))
    }

    pub(crate) fn frame_unchecked(&self, j: usize, x: &[T]) -> Vec<T> {
        let n = self.topological_dim();
        match &self.structure {
            Structure::Euclidean => {
                let mut e = vec![T::zero(); n];
                e[j] = T::one();
                e
            }
            Structure::Heisenberg { .. } => {
                let mut c = vec![T::zero(); n];
                c[j] = T::one();
                let two = T::lit(2.0);
                c[n - 1] = if j % 2 == 0 { two * x[j + 1] } else { -two * x[j - 1] };
                c
            }
            Structure::Custom(law) => match &law.frame {
                Some(f) => f(j, x),
                None => self.frame_from_law(j, x),
            },
        }
    }

    /// `d/ds [x ∘ s e_j]` at s = 0; exact for built-ins via duals, central
    /// differences for custom laws.
    fn frame_from_law(&self, j: usize, x: &[T]) -> Vec<T> {
        if self.has_generic_law() {
            let xs: Vec<Dual<T>> = x.iter().map(|&c| Dual::constant(c)).collect();
            let mut e = vec![Dual::constant(T::zero()); x.len()];
            e[j] = Dual::variable(T::zero());
            return self
                .compose_generic(&xs, &e)
                .unwrap()
                .iter()
                .map(|d| d.eps)
                .collect();
        }
        let h = T::lit(1e-5);
        let plus = self.flow(x, j, h);
        let minus = self.flow(x, j, -h);
        plus.iter()
            .zip(&minus)
            .map(|(&a, &b)| (a - b) / (h + h))
            .collect()
    }

    /// `x ∘ (s e_j)`: the flow of `X_j` through `x` at time `s`.
    pub fn flow(&self, x: &[T], j: usize, s: T) -> Vec<T> {
        let mut e = vec![T::zero(); x.len()];
        e[j] = s;
        self.compose_unchecked(x, &e)
    }

    /// Horizontal gradient of the homogeneous norm by finite differences along
    /// flows; used to rescale custom norms and in self checks.
    pub fn fd_norm_gradient(&self, x: &[T], h: T) -> Vec<T> {
        (0..self.horizontal_dim())
            .map(|j| {
                let a = self.hom_norm(&self.flow(x, j, h));
                let b = self.hom_norm(&self.flow(x, j, -h));
                (a - b) / (h + h)
            })
            .collect()
    }

    fn sampled_sup_horizontal_norm_gradient(&self, n: usize, seed: u64) -> T {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sup = T::zero();
        for _ in 0..n {
            let x = self.random_point(&mut rng, 2.0);
            if self.hom_norm(&x) < T::lit(1e-3) {
                continue;
            }
            let g = self.fd_norm_gradient(&x, T::lit(1e-6));
            let norm = g.iter().map(|&c| c * c).sum::<T>().sqrt();
            if norm > sup {
                sup = norm;
            }
        }
        sup
    }

    /// Uniform sample in the box `[-a, a]^{m1} × [-a², a²]^{m2} × …`.
    pub fn random_point<R: Rng>(&self, rng: &mut R, a: f64) -> Vec<T> {
        self.layer_of
            .iter()
            .map(|&j| {
                let w = a.powi(j as i32);
                T::lit(rng.gen_range(-w..w))
            })
            .collect()
    }

    /// Monte Carlo estimate of the Lebesgue measure of `B_R = {r < R}` over
    /// the dilated bounding box of the unit ball.
    pub fn ball_volume_estimate(&self, radius: T, n_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "R",
                value: radius.as_f64(),
                reason: "radius must be positive".into(),
            });
        }
        if n_samples < 1000 {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                value: n_samples as f64,
                reason: "at least 1000 samples are required".into(),
            });
        }
        let half: Vec<f64> = self
            .ball_box
            .iter()
            .zip(&self.layer_of)
            .map(|(&b, &j)| (b * radius.powi(j as i32)).as_f64())
            .collect();
        let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
        const CHUNK: usize = 1 << 14;
        let n_chunks = n_samples.div_ceil(CHUNK);
        let hits: usize = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let count = CHUNK.min(n_samples - c * CHUNK);
                let mut x = vec![T::zero(); half.len()];
                let mut hits = 0usize;
                for _ in 0..count {
                    for (xi, &h) in x.iter_mut().zip(&half) {
                        *xi = T::lit(rng.gen_range(-h..h));
                    }
                    if self.hom_norm(&x) < radius {
                        hits += 1;
                    }
                }
                hits
            })
            .sum();
        let p = hits as f64 / n_samples as f64;
        let volume = p * box_volume;
        let std_error = box_volume * (p * (1.0 - p) / n_samples as f64).sqrt();
        Ok(VolumeEstimate {
            volume,
            std_error,
            relative_std_error: if volume > 0.0 { std_error / volume } else { f64::INFINITY },
            n_samples,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub std_error: f64,
    pub relative_std_error: f64,
    pub n_samples: usize,
}

/// Named custom groups available to descriptors of kind `custom`.
pub struct GroupRegistry<T> {
    laws: BTreeMap<String, CustomLaw<T>>,
}

impl<T: Real> Default for GroupRegistry<T> {
    fn default() -> Self {
        let mut r = GroupRegistry { laws: BTreeMap::new() };
        r.register(engel_law());
        r
    }
}

impl<T: Real> GroupRegistry<T> {
    pub fn empty() -> Self {
        GroupRegistry { laws: BTreeMap::new() }
    }

    pub fn register(&mut self, law: CustomLaw<T>) {
        self.laws.insert(law.name.clone(), law);
    }

    pub fn get(&self, name: &str) -> Option<&CustomLaw<T>> {
        self.laws.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.laws.keys().map(|s| s.as_str())
    }
}

/// The Engel group: step 3, layers `[2, 1, 1]`, `Q = 7`, in exponential
/// coordinates of the second kind.
///
/// `x∘y = (x₁+y₁, x₂+y₂, x₃+y₃+x₁y₂, x₄+y₄+x₁y₃+½x₁²y₂)`. The norm is the
/// symmetrization `½(ρ(x)+ρ(x⁻¹))` of `ρ = (|x_h|¹² + x₃⁶ + x₄⁴)^{1/12}`.
pub fn engel_law<T: Real>() -> CustomLaw<T> {
    fn inv<T: Real>(x: &[T]) -> Vec<T> {
        let half = T::lit(0.5);
        vec![
            -x[0],
            -x[1],
            -x[2] + x[0] * x[1],
            -x[3] + x[0] * x[2] - half * x[0] * x[0] * x[1],
        ]
    }
    fn rho<T: Real>(x: &[T]) -> T {
        let h2 = x[0] * x[0] + x[1] * x[1];
        (h2.powi(6) + x[2].powi(6) + x[3].powi(4)).powf(T::lit(1.0 / 12.0))
    }
    CustomLaw {
        name: "engel".into(),
        layer_dims: vec![2, 1, 1],
        compose: Arc::new(|x: &[T], y: &[T]| {
            let half = T::lit(0.5);
            vec![
                x[0] + y[0],
                x[1] + y[1],
                x[2] + y[2] + x[0] * y[1],
                x[3] + y[3] + x[0] * y[2] + half * x[0] * x[0] * y[1],
            ]
        }),
        inverse: Arc::new(|x: &[T]| inv(x)),
        frame: Some(Arc::new(|j: usize, x: &[T]| {
            if j == 0 {
                vec![T::one(), T::zero(), T::zero(), T::zero()]
            } else {
                vec![T::zero(), T::one(), x[0], T::lit(0.5) * x[0] * x[0]]
            }
        })),
        norm: Arc::new(|x: &[T]| T::lit(0.5) * (rho(x) + rho(&inv(x)))),
        // ρ(x) < 2 on {norm < 1}
        unit_ball_box: vec![T::lit(2.0), T::lit(2.0), T::lit(4.0), T::lit(8.0)],
    }
}

/// One sampled invariant with its measured residual.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub group: String,
    pub checks: Vec<CheckResult>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug)]
pub struct SelfCheckOptions {
    pub n_triples: usize,
    pub seed: u64,
    pub volume_samples: Option<usize>,
}

impl SelfCheckOptions {
    pub fn quick() -> Self {
        SelfCheckOptions {
            n_triples: 200,
            seed: 7,
            volume_samples: None,
        }
    }
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        SelfCheckOptions {
            n_triples: 1000,
            seed: 7,
            volume_samples: Some(200_000),
        }
    }
}

fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs().as_f64())
        .fold(0.0, f64::max)
}

fn scale_of<T: Real>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs().as_f64()).fold(1.0, f64::max)
}

impl<T: Real> CarnotGroup<T> {
    /// Sampled group axioms, dilation automorphism, norm identities and frame
    /// structure. Residuals are relative to the magnitude of the compared
    /// coordinates.
    pub fn self_check(&self, opts: &SelfCheckOptions) -> SelfCheckReport {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let n = self.topological_dim();
        let origin = vec![T::zero(); n];
        let eps = T::epsilon().as_f64();
        let tight = (1e-12_f64).max(64.0 * eps);
        let loose = (1e-10_f64).max(1024.0 * eps);

        let mut assoc = 0.0_f64;
        let mut ident = 0.0_f64;
        let mut inverse = 0.0_f64;
        let mut dil = 0.0_f64;
        let mut hom = 0.0_f64;
        let mut sym = 0.0_f64;
        let mut pos = 0.0_f64;
        let mut frame_dep = 0.0_f64;
        let mut grad = 0.0_f64;

        for _ in 0..opts.n_triples {
            let x = self.random_point(&mut rng, 1.5);
            let y = self.random_point(&mut rng, 1.5);
            let z = self.random_point(&mut rng, 1.5);
            let r = T::lit(rng.gen_range(0.25..4.0));

            let xy_z = self.compose_unchecked(&self.compose_unchecked(&x, &y), &z);
            let x_yz = self.compose_unchecked(&x, &self.compose_unchecked(&y, &z));
            assoc = assoc.max(max_abs_diff(&xy_z, &x_yz) / scale_of(&xy_z));

            ident = ident
                .max(max_abs_diff(&self.compose_unchecked(&x, &origin), &x) / scale_of(&x))
                .max(max_abs_diff(&self.compose_unchecked(&origin, &x), &x) / scale_of(&x));

            let xi = self.inverse(&x).unwrap();
            inverse = inverse
                .max(max_abs_diff(&self.compose_unchecked(&x, &xi), &origin) / scale_of(&x))
                .max(max_abs_diff(&self.compose_unchecked(&xi, &x), &origin) / scale_of(&x));

            let lhs = self.dilate_unchecked(r, &self.compose_unchecked(&x, &y));
            let rhs = self.compose_unchecked(&self.dilate_unchecked(r, &x), &self.dilate_unchecked(r, &y));
            dil = dil.max(max_abs_diff(&lhs, &rhs) / scale_of(&lhs));

            let nx = self.hom_norm(&x);
            let ndx = self.hom_norm(&self.dilate_unchecked(r, &x));
            hom = hom.max(((ndx - r * nx).abs() / (r * nx).max(T::one())).as_f64());
            sym = sym.max(((self.hom_norm(&xi) - nx).abs() / nx.max(T::one())).as_f64());
            if !(nx > T::zero()) {
                pos = f64::INFINITY;
            }

            for j in 0..self.horizontal_dim() {
                let c = self.frame_unchecked(j, &x);
                for alpha in 0..n {
                    let mut xp = x.clone();
                    xp[alpha] = xp[alpha] + T::lit(0.37);
                    let cp = self.frame_unchecked(j, &xp);
                    frame_dep = frame_dep.max((cp[alpha] - c[alpha]).abs().as_f64());
                }
            }

            if nx > T::lit(1e-2) {
                let g = self.fd_norm_gradient(&x, T::lit(1e-6));
                let gn = g.iter().map(|&c| c * c).sum::<T>().sqrt().as_f64();
                grad = grad.max(gn - 1.0);
            }
        }
        let origin_norm = self.hom_norm(&origin).abs().as_f64();

        let mut checks = vec![
            CheckResult::new("associativity", assoc, loose),
            CheckResult::new("identity", ident, tight),
            CheckResult::new("inverse", inverse, tight),
            CheckResult::new("dilation_automorphism", dil, loose),
            CheckResult::new("norm_homogeneity", hom, tight.max(1e-11)),
            CheckResult::new("norm_symmetry", sym, tight.max(1e-11)),
            CheckResult::new("norm_positivity", pos + origin_norm, tight),
            CheckResult::new("frame_coordinate_independence", frame_dep, (1e-9_f64).max(1e4 * eps)),
            CheckResult::new("horizontal_norm_gradient_bound", grad.max(0.0), (1e-6_f64).max(1e6 * eps)),
        ];

        if let Structure::Heisenberg { m } = self.structure {
            checks.push(CheckResult::new(
                "heisenberg_commutators",
                crate::calculus::heisenberg_commutator_residual::<T>(m, 20, opts.seed),
                1e-9,
            ));
        }

        if let Some(ns) = opts.volume_samples {
            let q = self.homogeneous_dim() as f64;
            let est: Vec<VolumeEstimate> = [1.0, 2.0]
                .iter()
                .map(|&r| self.ball_volume_estimate(T::lit(r), ns, opts.seed).unwrap())
                .collect();
            let c1 = est[0].volume;
            let c2 = est[1].volume / 2f64.powf(q);
            let se = (est[0].std_error.powi(2) + (est[1].std_error / 2f64.powf(q)).powi(2)).sqrt();
            checks.push(CheckResult::new(
                "volume_scaling_in_std_errors",
                // the ball can fill the sampling box exactly (ℝ¹), leaving no spread
                if se > 0.0 { (c1 - c2).abs() / se } else { (c1 - c2).abs() / (c1.abs() * 1e-12) },
                3.0,
            ));
        }

        SelfCheckReport {
            group: self.name(),
            checks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_basics() {
        let g = CarnotGroup::<f64>::euclidean(3).unwrap();
        assert_eq!(g.compose(&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0]).unwrap().0, vec![1.0, 3.0, 1.0]);
        assert_relative_eq!(g.hom_norm(&[3.0, 4.0, 0.0]), 5.0);
        assert_eq!(CarnotGroup::<f64>::euclidean(5).unwrap().homogeneous_dim(), 5);
        assert_eq!(g.compose(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap().0, vec![1.0, 2.0, 3.0]);
        assert!(matches!(CarnotGroup::<f64>::euclidean(0), Err(Error::InvalidDimension(_))));
        let x = [0.3, -1.2, 2.0];
        assert_eq!(g.dilate(1.0, &x).unwrap().0, x.to_vec());
        let d = g.dilate(2.5, &x).unwrap();
        for (a, b) in d.iter().zip(&x) {
            assert_relative_eq!(*a, 2.5 * b);
        }
        assert_eq!(g.frame_vector(1, &x).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn heisenberg_law_and_structure() {
        let g = CarnotGroup::<f64>::heisenberg(1).unwrap();
        // z = 1, z' = i: 2 Im(1 · conj(i)) = -2
        assert_eq!(g.compose(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap().0, vec![1.0, 1.0, -2.0]);
        assert_relative_eq!(g.hom_norm(&[0.0, 0.0, 4.0]), 2.0);
        assert_eq!(g.topological_dim(), 3);
        assert_eq!(g.homogeneous_dim(), 4);
        assert_eq!(CarnotGroup::<f64>::heisenberg(2).unwrap().homogeneous_dim(), 6);
        assert_eq!(CarnotGroup::<f64>::heisenberg(2).unwrap().layer_dims(), &[4, 1]);
        assert!(CarnotGroup::<f64>::heisenberg(0).is_err());
    }

    #[test]
    fn heisenberg_is_not_commutative() {
        let g = CarnotGroup::<f64>::heisenberg(1).unwrap();
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0];
        let ab = g.compose(&a, &b).unwrap();
        let ba = g.compose(&b, &a).unwrap();
        assert_eq!(ab[2], -ba[2]);
        assert_ne!(ab, ba);
    }

    #[test]
    fn heisenberg_inverse_and_dilation() {
        let g = CarnotGroup::<f64>::heisenberg(1).unwrap();
        let x = [0.4, -1.1, 0.7];
        let xi = g.inverse(&x).unwrap();
        assert!(g.compose(&x, &xi).unwrap().iter().all(|c| c.abs() < 1e-15));
        assert_eq!(g.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap().0, vec![2.0, 2.0, 4.0]);
        assert!(g.dilate(0.0, &x).is_err());
        assert!(g.dilate(-1.0, &x).is_err());
    }

    #[test]
    fn heisenberg_frame_matches_flow_derivative() {
        let g = CarnotGroup::<f64>::heisenberg(1).unwrap();
        let x = [0.3, -0.8, 1.7];
        assert_eq!(g.frame_vector(0, &x).unwrap(), vec![1.0, 0.0, 2.0 * x[1]]);
        assert_eq!(g.frame_vector(1, &x).unwrap(), vec![0.0, 1.0, -2.0 * x[0]]);
        for j in 0..2 {
            let exact = g.frame_vector(j, &x).unwrap();
            let from_law = g.frame_from_law(j, &x);
            for (a, b) in exact.iter().zip(&from_law) {
                assert_relative_eq!(*a, *b, epsilon = 1e-14);
            }
        }
        assert!(matches!(g.frame_vector(2, &x), Err(Error::FrameIndex { .. })));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = CarnotGroup::<f64>::heisenberg(1).unwrap();
        assert!(matches!(
            g.compose(&[1.0, 2.0], &[0.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn builtin_self_checks_pass() {
        for g in [
            CarnotGroup::<f64>::euclidean(1).unwrap(),
            CarnotGroup::<f64>::euclidean(3).unwrap(),
            CarnotGroup::<f64>::heisenberg(1).unwrap(),
            CarnotGroup::<f64>::heisenberg(2).unwrap(),
        ] {
            let rep = g.self_check(&SelfCheckOptions::quick());
            assert!(rep.passed(), "{}: {:?}", g.name(), rep.checks);
        }
    }

    #[test]
    fn engel_group_passes_checks() {
        let g = CarnotGroup::<f64>::custom(engel_law()).unwrap();
        assert_eq!(g.homogeneous_dim(), 7);
        assert_eq!(g.step(), 3);
        let rep = g.self_check(&SelfCheckOptions::quick());
        assert!(rep.passed(), "{:?}", rep.checks);
    }

    #[test]
    fn broken_dilation_is_detected() {
        let mut law = engel_law::<f64>();
        // drop the quadratic term: still associative? no, and no longer homogeneous
        law.compose = Arc::new(|x: &[f64], y: &[f64]| {
            vec![x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1], x[3] + y[3] + x[0] * x[0] * y[1] * y[1]]
        });
        let g = CarnotGroup::custom_unchecked(law.clone()).unwrap();
        let rep = g.self_check(&SelfCheckOptions::quick());
        let dil = rep.checks.iter().find(|c| c.name == "dilation_automorphism").unwrap();
        assert!(!dil.passed);
        assert!(matches!(CarnotGroup::custom(law), Err(Error::GroupCheck(_))));
    }

    #[test]
    fn descriptor_roundtrip() {
        let reg = GroupRegistry::<f64>::default();
        for desc in [
            GroupDescriptor::Euclidean { dim: 2 },
            GroupDescriptor::Heisenberg { m: 1 },
            GroupDescriptor::Custom { name: "engel".into() },
        ] {
            let json = serde_json::to_string(&desc).unwrap();
            let back: GroupDescriptor = serde_json::from_str(&json).unwrap();
            let g = CarnotGroup::from_descriptor(&back, &reg).unwrap();
            assert_eq!(g.descriptor(), desc);
        }
        let json = r#"{"kind":"heisenberg","m":2}"#;
        let d: GroupDescriptor = serde_json::from_str(json).unwrap();
        assert_eq!(d, GroupDescriptor::Heisenberg { m: 2 });
    }

    #[test]
    fn euclidean_unit_disc_volume() {
        let g = CarnotGroup::<f64>::euclidean(2).unwrap();
        let v = g.ball_volume_estimate(1.0, 200_000, 3).unwrap();
        assert!((v.volume - std::f64::consts::PI).abs() < 4.0 * v.std_error);
        assert!(g.ball_volume_estimate(1.0, 10, 3).is_err());
    }

    #[test]
    fn f32_group_is_usable() {
        let g = CarnotGroup::<f32>::heisenberg(1).unwrap();
        let x = [0.5_f32, 0.25, -0.5];
        let r = g.hom_norm(&g.dilate(2.0, &x).unwrap());
        assert!((r - 2.0 * g.hom_norm(&x)).abs() < 1e-5);
    }
}
