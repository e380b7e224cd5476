//! Adversarial per-face texture atlases ("3D logos") on triangle meshes.

pub mod attack;
pub mod boxes;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod geom;
pub mod image;
pub mod mesh;
pub mod render;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
