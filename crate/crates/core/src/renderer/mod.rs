//! Software rasterizer and crop resampling.

mod image;
mod mesh;
mod patch;
mod raster;

pub use self::image::Image;
pub use mesh::{Appearance, Mesh};
pub use patch::{
    crop_resize, render_crop, render_patch_stack, sample_bilinear, sample_bilinear_into, PatchStack, STACK_CHANNELS,
};
pub use raster::{
    rasterize, scan_triangle, LightConfig, MaterialConfig, MaterialMode, PaletteColor,
    PointLight, RenderPatch, AMBIENT, NEAR_PLANE,
};

use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("image error: {0}")]
    Image(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
