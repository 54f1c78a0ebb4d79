//! View packing for multi-view texturing: orthographic G-buffer rendering of
//! a mesh from six canonical views, MaxRects-based packing of the views onto
//! a single atlas with adaptive enlargement, single-view guidance spreading,
//! and weighted back-projection of a multi-view texture atlas into UV space.

pub mod backproject;
pub mod binpack;
pub mod error;
pub mod fixtures;
pub mod guidance;
pub mod image;
pub mod kdtree;
pub mod manifest;
pub mod mesh;
pub mod metrics;
pub mod pack;
pub mod pipeline;
pub mod raster;

pub use error::{Error, Result};
pub use image::{Image, Mask};
pub use mesh::Mesh;
