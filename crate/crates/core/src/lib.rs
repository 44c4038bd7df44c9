//! Kinetic formulation of the dispersionless KP hierarchy on a truncated phase-space
//! lattice, with numerical checks of its Frobenius-manifold structure.
//!
//! The state is a sampled density `f(x, p)`. Everything singular (Hilbert transforms,
//! principal values, the Lax function `lambda = p + pv f/(p - q)`) goes through
//! [`singular`]. Products, metrics and the potential live in [`frobenius`], the
//! principal hierarchy in [`hierarchy`], time stepping in [`evolve`], implicit
//! solutions in [`hodograph`] and the special coordinate systems in [`coords`].

pub mod coords;
pub mod error;
pub mod evolve;
pub mod frobenius;
pub mod grid;
pub mod hierarchy;
pub mod hodograph;
pub mod moments;
pub mod singular;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Axis, Field, MomentVector, PhaseGrid, Profile};
pub use singular::LambdaProfile;
