// SPDX-License-Identifier: MIT OR Apache-2.0

//! Feature selection for a naive Bayes classifier over large grids of
//! redundant binary indicators.
//!
//! The pipeline runs from synthetic time series ([`datagen`]) through
//! split-window test scores ([`stats`]) and thresholded indicators
//! ([`indicators`]) to a naive Bayes model with an incremental log-joint
//! cache ([`nbc`]), filter and wrapper subset searches ([`selection`]), and
//! the train/validate/test protocol that compares them ([`harness`]).

pub mod bits;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod indicators;
pub mod io;
pub mod nbc;
pub mod selection;
pub mod stats;

pub use error::{Error, Result};
