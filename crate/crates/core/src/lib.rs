//! Fourier analysis on 2-step nilpotent Lie groups: spectral decomposition of
//! the λ-twisted symplectic form, rescaled Hermite bases, the frequency set ĝ
//! with its Plancherel-type measure, matrix coefficient kernels, and the
//! group Fourier transform with its identities.

pub mod cli;
pub mod error;
pub mod frequency;
pub mod group;
pub mod hermite;
pub mod kernel;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
