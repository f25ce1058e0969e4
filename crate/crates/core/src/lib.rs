//! Object pose estimation as a sequence of discrete pose-update decisions.
//!
//! A policy compares a rendering of the current pose hypothesis with the
//! observed image crop and picks one of thirteen actions (a unit step along
//! one of six pose parameters, or stop) until it stops.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod renderer;
pub mod eval;
pub mod policy;
pub mod network;
pub mod datagen;
pub mod scene;
pub mod detection;
pub mod training;
