//! Scalar fields on a group: closed-form radial composites, polynomials,
//! lattice samples and pointwise maxima.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::CarnotGroup;
use crate::scalar::{second_derivative, HyperDual, Real};

/// Which power of the homogeneous norm a radial profile is composed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialArg {
    R,
    RSquared,
}

pub type ProfileJet<T> = Arc<dyn Fn(T) -> (T, T, T) + Send + Sync>;

/// `u(x) = h(r(x))` or `u(x) = h(r²(x))` with `h, h′, h″` supplied.
#[derive(Clone)]
pub struct RadialField<T> {
    pub name: String,
    pub h: ProfileJet<T>,
    pub arg: RadialArg,
}

impl<T: Real> RadialField<T> {
    pub fn new(name: impl Into<String>, h: ProfileJet<T>, arg: RadialArg) -> Self {
        RadialField {
            name: name.into(),
            h,
            arg,
        }
    }

    /// Derivatives obtained by pushing a second-order jet through `h`.
    pub fn from_jet_fn<F>(name: impl Into<String>, h: F, arg: RadialArg) -> Self
    where
        F: Fn(HyperDual<T>) -> HyperDual<T> + Send + Sync + 'static,
    {
        Self::new(name, Arc::new(move |t| second_derivative(&h, t)), arg)
    }

    /// `h(t) = t`, i.e. `u = r` or `u = r²`.
    pub fn identity(arg: RadialArg) -> Self {
        Self::new("id", Arc::new(|t| (t, T::one(), T::zero())), arg)
    }

    #[inline]
    pub fn eval(&self, t: T) -> (T, T, T) {
        (self.h)(t)
    }

    /// Largest relative disagreement between the supplied `h′, h″` and
    /// central differences of `h` at the given arguments.
    pub fn derivative_consistency(&self, ts: &[T]) -> f64 {
        ts.iter()
            .map(|&t| {
                let s = T::lit(1e-4) * t.abs().max(T::one());
                let (_, d1, d2) = self.eval(t);
                let (fp, dp, _) = self.eval(t + s);
                let (fm, dm, _) = self.eval(t - s);
                let fd1 = (fp - fm) / (s + s);
                let fd2 = (dp - dm) / (s + s);
                let e1 = ((fd1 - d1).abs() / d1.abs().max(T::one())).as_f64();
                let e2 = ((fd2 - d2).abs() / d2.abs().max(T::one())).as_f64();
                e1.max(e2)
            })
            .fold(0.0, f64::max)
    }
}

impl<T: Real> fmt::Debug for RadialField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialField({}, {:?})", self.name, self.arg)
    }
}

/// `Σ c · Π x_i^{a_i}` in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<u32>)>) -> Self {
        Polynomial { terms }
    }

    /// The coordinate function `x_i` in dimension `n`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Polynomial::new(vec![(1.0, e)])
    }

    pub fn eval<S: Real>(&self, x: &[S]) -> S {
        self.terms
            .iter()
            .map(|(c, a)| {
                a.iter()
                    .zip(x)
                    .fold(S::lit(*c), |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powi(k as i32) })
            })
            .sum()
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.1.len())
    }
}

/// Uniform lattice in ambient coordinates, row-major with the last
/// coordinate fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub dims: Vec<usize>,
}

impl Lattice {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, dims: Vec<usize>) -> Result<Self> {
        let n = origin.len();
        if spacing.len() != n || dims.len() != n || n == 0 {
            return Err(Error::InvalidDimension("lattice origin/spacing/dims lengths differ".into()));
        }
        if spacing.iter().any(|&h| !(h > 0.0)) || dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter {
                name: "lattice",
                value: 0.0,
                reason: "spacing must be positive and every axis needs >= 2 nodes".into(),
            });
        }
        Ok(Lattice { origin, spacing, dims })
    }

    /// Lattice with spacing `step^j` on layer `j`, covering the box of half
    /// widths `half_extent^j` around `center`. The centre is snapped to the
    /// global lattice `Π step^{j} ℤ`, which on the Heisenberg groups is
    /// closed under `x ↦ x ∘ (±step e_j)`.
    pub fn covering<T: Real>(g: &CarnotGroup<T>, center: &[f64], half_extent: f64, step: f64) -> Result<Self> {
        let halves: Vec<f64> = (0..g.topological_dim())
            .map(|a| half_extent.powi(g.layer_of(a) as i32))
            .collect();
        Self::covering_box(g, center, &halves, &layer_spacing(g, step))
    }

    /// Lattice with the given spacing covering `center ± halves`, centre
    /// snapped to the global lattice.
    pub fn covering_box<T: Real>(
        g: &CarnotGroup<T>,
        center: &[f64],
        halves: &[f64],
        spacing: &[f64],
    ) -> Result<Self> {
        if center.len() != g.topological_dim() || spacing.len() != center.len() || halves.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: g.topological_dim(),
                got: center.len(),
            });
        }
        let mut origin = Vec::with_capacity(center.len());
        let mut dims = Vec::with_capacity(center.len());
        for ((&c, &h), &half) in center.iter().zip(spacing).zip(halves) {
            let k = (half / h).ceil().max(1.0);
            let c0 = (c / h).round() * h;
            origin.push(c0 - k * h);
            dims.push(2 * k as usize + 1);
        }
        Lattice::new(origin, spacing.to_vec(), dims)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut out = vec![0.0; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            let k = rem % self.dims[i];
            rem /= self.dims[i];
            out[i] = self.origin[i] + k as f64 * self.spacing[i];
        }
        out
    }

    /// Signed distance (in ambient units) from `x` to the lattice boundary,
    /// the minimum over axes. Negative outside.
    pub fn margin(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let lo = self.origin[i];
                let hi = lo + (self.dims[i] - 1) as f64 * self.spacing[i];
                (xi - lo).min(hi - xi)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `step^j` for a coordinate in layer `j`.
pub fn layer_spacing<T: Real>(g: &CarnotGroup<T>, step: f64) -> Vec<f64> {
    (0..g.topological_dim()).map(|a| step.powi(g.layer_of(a) as i32)).collect()
}

/// Values sampled on a [`Lattice`]; off-lattice values use multilinear
/// interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    pub lattice: Lattice,
    pub values: Vec<T>,
}

const SNAP: f64 = 1e-7;

impl<T: Real> GridField<T> {
    pub fn new(lattice: Lattice, values: Vec<T>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value at node {i}")));
        }
        Ok(GridField { lattice, values })
    }

    /// Samples `f` at every node, in parallel.
    pub fn sample<F>(lattice: Lattice, f: F) -> Result<Self>
    where
        F: Fn(&[T]) -> T + Sync,
    {
        let values: Vec<T> = (0..lattice.len())
            .into_par_iter()
            .map(|i| {
                let x: Vec<T> = lattice.node(i).into_iter().map(T::lit).collect();
                f(&x)
            })
            .collect();
        Self::new(lattice, values)
    }

    pub fn value_at_node(&self, idx: &[usize]) -> T {
        let strides = self.lattice.strides();
        self.values[idx.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Multilinear interpolation; points within `1e-7` cells of a node
    /// coordinate are snapped to it.
    pub fn interpolate(&self, x: &[T]) -> Result<T> {
        let lat = &self.lattice;
        let n = lat.ndim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let strides = lat.strides();
        let mut base = 0usize;
        let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let u = (x[i].as_f64() - lat.origin[i]) / lat.spacing[i];
            let last = (lat.dims[i] - 1) as f64;
            let r = u.round();
            let (k, frac) = if (u - r).abs() < SNAP { (r, 0.0) } else { (u.floor(), u - u.floor()) };
            if !(k >= 0.0 && (k < last || (k == last && frac == 0.0))) {
                return Err(Error::OutsideLattice {
                    margin: lat.margin(&x.iter().map(|v| v.as_f64()).collect::<Vec<_>>()),
                });
            }
            base += k as usize * strides[i];
            if frac > 0.0 {
                fracs.push((i, frac));
            }
        }
        let mut acc = T::zero();
        for corner in 0..(1usize << fracs.len()) {
            let mut w = 1.0;
            let mut off = 0usize;
            for (b, &(i, fr)) in fracs.iter().enumerate() {
                if corner >> b & 1 == 1 {
                    w *= fr;
                    off += strides[i];
                } else {
                    w *= 1.0 - fr;
                }
            }
            acc = acc + T::lit(w) * self.values[base + off];
        }
        Ok(acc)
    }

    /// Writes `<base>.bin` (little-endian f64, row-major) and the sidecar
    /// `<base>.json` holding the lattice.
    pub fn write_binary(&self, base: &Path) -> Result<(PathBuf, PathBuf)> {
        let bin = base.with_extension("bin");
        let side = base.with_extension("json");
        let mut w = BufWriter::new(File::create(&bin)?);
        for v in &self.values {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        w.flush()?;
        std::fs::write(&side, serde_json::to_string_pretty(&self.lattice)?)?;
        Ok((bin, side))
    }

    pub fn read_binary(bin: &Path, sidecar: &Path) -> Result<Self> {
        let lattice: Lattice = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let mut bytes = Vec::new();
        BufReader::new(File::open(bin)?).read_to_end(&mut bytes)?;
        if bytes.len() != 8 * lattice.len() {
            return Err(Error::Format(format!(
                "{} bytes for {} nodes",
                bytes.len(),
                lattice.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Self::new(lattice, values)
    }

    /// CSV with one row per node: coordinates then value, full precision.
    pub fn write_csv(&self, path: &Path) -> Result<PathBuf> {
        let mut w = BufWriter::new(File::create(path)?);
        let n = self.lattice.ndim();
        let header: Vec<String> = (0..n).map(|i| format!("x{i}")).chain(["value".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let row: Vec<String> = self
                .lattice
                .node(i)
                .iter()
                .map(|c| format!("{c:?}"))
                .chain([format!("{:?}", v.as_f64())])
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        let side = path.with_extension("json");
        std::fs::write(&side, serde_json::to_string_pretty(&self.lattice)?)?;
        Ok(side)
    }

    /// Reads a CSV written by [`GridField::write_csv`] with its sidecar.
    pub fn read_csv(path: &Path, sidecar: &Path) -> Result<Self> {
        let lattice: Lattice = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::with_capacity(lattice.len());
        for (ln, line) in text.lines().enumerate().skip(1) {
            let last = line
                .rsplit(',')
                .next()
                .ok_or_else(|| Error::Format(format!("line {}: empty", ln + 1)))?;
            let v: f64 = last
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("line {}: {e}", ln + 1)))?;
            values.push(T::lit(v));
        }
        Self::new(lattice, values)
    }
}

/// A function on the group.
#[derive(Clone)]
pub enum ScalarField<T> {
    Constant(T),
    Radial(RadialField<T>),
    Polynomial(Polynomial),
    Grid(Arc<GridField<T>>),
    /// Pointwise maximum; its gradient is the gradient of the larger branch.
    Max(Box<ScalarField<T>>, Box<ScalarField<T>>),
}

impl<T: Real> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Radial(r) => r.fmt(f),
            ScalarField::Polynomial(p) => p.fmt(f),
            ScalarField::Grid(g) => write!(f, "Grid({:?})", g.lattice.dims),
            ScalarField::Max(a, b) => write!(f, "Max({a:?}, {b:?})"),
        }
    }
}

impl<T: Real> ScalarField<T> {
    pub fn radial(f: RadialField<T>) -> Self {
        ScalarField::Radial(f)
    }

    pub fn grid(g: GridField<T>) -> Self {
        ScalarField::Grid(Arc::new(g))
    }

    pub fn max(a: ScalarField<T>, b: ScalarField<T>) -> Self {
        ScalarField::Max(Box::new(a), Box::new(b))
    }

    pub fn is_closed_form(&self) -> bool {
        match self {
            ScalarField::Grid(_) => false,
            ScalarField::Max(a, b) => a.is_closed_form() && b.is_closed_form(),
            _ => true,
        }
    }

    pub fn value(&self, g: &CarnotGroup<T>, x: &[T]) -> Result<T> {
        match self {
            ScalarField::Constant(c) => Ok(*c),
            ScalarField::Radial(f) => {
                let rho = match f.arg {
                    RadialArg::R => g.hom_norm(x),
                    RadialArg::RSquared => {
                        let r = g.hom_norm(x);
                        r * r
                    }
                };
                Ok(f.eval(rho).0)
            }
            ScalarField::Polynomial(p) => Ok(p.eval(x)),
            ScalarField::Grid(gf) => gf.interpolate(x),
            ScalarField::Max(a, b) => Ok(a.value(g, x)?.max(b.value(g, x)?)),
        }
    }
}
