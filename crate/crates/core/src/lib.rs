//! Pixel-level fractal features for tubular-structure segmentation.
//!
//! This crate holds the numerical core and needs only `alloc`:
//!
//! * [`fd`] estimates the fractal dimension of a gray-level region by box counting,
//! * [`ffm`] slides that estimator over an image to build a fractal feature map (FFM),
//! * [`loss`] implements the soft-IoU / BCE training losses and their FFM-weighted form,
//! * [`topo`] provides edges, skeletons, components, Betti numbers and distances on masks,
//! * [`metrics`] evaluates a predicted probability map against a ground-truth mask.
//!
//! File formats, the command line front-end and the multithreaded FFM driver live in the
//! `fracseg` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod fd;
pub mod ffm;
mod grid;
pub mod loss;
pub mod metrics;
pub mod topo;

pub use error::{Error, Result};
pub use grid::{BinaryMask, FloatMap, GrayImage, Grid};
