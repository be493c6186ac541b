//! Sub-Riemannian calculus on homogeneous Carnot groups, with executable
//! Liouville-type classifications, Keller–Osserman tests, radial witnesses
//! and weak-form verification for quasilinear φ-Laplacian inequalities.
//!
//! The numerical core is generic over the scalar type (`f32`, `f64`, and
//! dual numbers for exact derivatives); the range oracle also accepts exact
//! rationals. The `*64` aliases fix `f64`.

pub mod calculus;
pub mod error;
pub mod field;
pub mod group;
pub mod keller_osserman;
pub mod numerics;
pub mod oracle;
pub mod profile;
pub mod scalar;
pub mod weak_form;
pub mod witness;

pub use error::{Error, Result};
pub use field::{GridField, Lattice, Polynomial, RadialArg, RadialField, ScalarField};
pub use group::{CarnotGroup, GroupDescriptor, GroupKind, GroupRegistry, Point};
pub use profile::{PhiProfile, ProfileDescriptor};
pub use scalar::{Dual, HyperDual, Real};

pub type CarnotGroup64 = CarnotGroup<f64>;
pub type PhiProfile64 = PhiProfile<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type GridField64 = GridField<f64>;
pub type RadialField64 = RadialField<f64>;
