//! Distinguishability of quantum channel pairs.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate openblas_src;

pub mod boxtrans;
pub mod channel_div;
pub mod error;
pub mod io;
pub mod linalg;
pub mod qobjects;
pub mod random;
pub mod sdp;
pub mod state_div;

pub use error::{Error, Result};
