//! Certified numerics for scaled convolutions of central Cantor measures:
//! correlation dimensions via grid sums, the rotation-driven rectangle
//! families behind them, Fourier transforms along Pisot resonances, and the
//! Diophantine construction of exceptional skews.

pub mod algebraic;
pub mod dimension;
pub mod diophantine;
pub mod error;
pub mod lattice;
pub mod measures;
pub mod real;
pub mod spectral;

pub use error::{Error, Result};
pub use real::{BoundedValue, MassBound, Real};
