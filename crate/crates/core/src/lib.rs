//! Rearrangements, K-functionals, reverse Hölder and Muckenhoupt constants,
//! and almost-increasing indices for weights that are piecewise constant on
//! dyadic grids.
//!
//! Start with [`grid::make_grid`], then see [`weights`] for class constants
//! and [`suites`] for the verification runs behind `rhlab verify`.

pub mod error;
pub mod exact;
pub mod grid;
pub mod quad;
pub mod rearrange;

pub mod kcalc;
pub mod indices;
pub mod weights;

pub mod corpus;
pub mod suites;
pub mod report;
pub mod cli;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/rearrangements.md")]
    mod rearrangements {}
    #[doc = include_str!("../../../book/src/k-functionals.md")]
    mod k_functionals {}
    #[doc = include_str!("../../../book/src/indices.md")]
    mod indices {}
    #[doc = include_str!("../../../book/src/weight-classes.md")]
    mod weight_classes {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
