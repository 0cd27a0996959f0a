//! Cramér–Rao bounds on 2-D positioning error for pinching-antenna and
//! conventional arrays under distance-dependent Gaussian range noise.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: positions, the service area and array generators.
//! - [`crlb`]: the range-noise model, likelihood, Fisher information, the
//!   bound itself, its analytic gradient and a single-antenna upper bound.
//! - [`closed_form`]: square-cluster closed forms and spacing optimizers.
//! - [`estimation`]: noisy range sampling, a maximum-likelihood position
//!   estimator and Monte-Carlo comparison against the bound.
//! - [`experiments`]: area averages, heatmaps, local maxima, sweeps and focal
//!   placements.
//! - [`cli`]: configuration, the experiment commands and output writers.
//!
//! ```
//! use pinching_crlb::crlb::{crlb, RangeModel};
//! use pinching_crlb::geometry::{make_waveguide_array, Point3, ServiceArea};
//!
//! let area = ServiceArea::new(10.0, 40.0, 0.0)?;
//! let array = make_waveguide_array(2, 10, &area, 3.0)?;
//! let model = RangeModel::new(0.01)?;
//! let bound = crlb(&model, &Point3::ground(20.0, 0.0), &array);
//! assert!(bound.is_finite());
//! # Ok::<(), pinching_crlb::Error>(())
//! ```

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closed_form;
pub mod crlb;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod format;
pub mod geometry;
pub mod svg;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/fisher.md")]
    pub mod fisher {}
    #[doc = include_str!("../../../book/src/bound.md")]
    pub mod bound {}
    #[doc = include_str!("../../../book/src/spacing.md")]
    pub mod spacing {}
    #[doc = include_str!("../../../book/src/monte_carlo.md")]
    pub mod monte_carlo {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
}
