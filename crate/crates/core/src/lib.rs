//! Separating diffusions from deterministic signals by counting excursions.
//!
//! A diffusion with quadratic variation `[X]_T` completes about
//! `[X]_T / (2 ε²)` oscillations of size ε, so log-count against log-ε has
//! slope −2. Smooth signals do not. [`classify`] measures that slope over the
//! range of ε where the counting law holds.

pub mod config;
pub mod error;
pub mod excursion;
pub mod harness;
pub mod series;
pub mod systems;
pub mod trajectory;

pub use error::{Error, Result};
pub use excursion::*;
pub use trajectory::{Label, Trajectory};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/excursions.md")]
    mod excursions {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
