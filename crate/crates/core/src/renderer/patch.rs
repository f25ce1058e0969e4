use super::raster::{rasterize, LightConfig, MaterialConfig, RenderPatch};
use super::{Image, Mesh, RenderError};
use crate::geometry::{CameraIntrinsics, CropState, GeometryError, Pose};

/// Channels in a patch stack: observed RGB, rendered RGB, depth, mask.
pub const STACK_CHANNELS: usize = 8;

/// Bilinear sample of channel `c` at continuous image coordinates, pixel
/// centers at `k + 0.5`. Positions outside the image return 0.
#[inline]
pub fn sample_bilinear(img: &Image, x: f64, y: f64, c: usize) -> f32 {
    if !(x >= 0.0 && y >= 0.0 && x <= img.width as f64 && y <= img.height as f64) {
        return 0.0;
    }
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let ax = fx - x0;
    let ay = fy - y0;
    let clamp = |v: f64, hi: usize| v.clamp(0.0, (hi - 1) as f64) as usize;
    let (xa, xb) = (clamp(x0, img.width), clamp(x0 + 1.0, img.width));
    let (ya, yb) = (clamp(y0, img.height), clamp(y0 + 1.0, img.height));
    let top = img.get(xa, ya, c) as f64 * (1.0 - ax) + img.get(xb, ya, c) as f64 * ax;
    let bot = img.get(xa, yb, c) as f64 * (1.0 - ax) + img.get(xb, yb, c) as f64 * ax;
    (top * (1.0 - ay) + bot * ay) as f32
}

/// All channels of one bilinear sample, under the same rules as
/// [`sample_bilinear`].
pub fn sample_bilinear_into(img: &Image, x: f64, y: f64, out: &mut [f32]) {
    if !(x >= 0.0 && y >= 0.0 && x <= img.width as f64 && y <= img.height as f64) {
        out.fill(0.0);
        return;
    }
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let ax = fx - x0;
    let ay = fy - y0;
    let clamp = |v: f64, hi: usize| v.clamp(0.0, (hi - 1) as f64) as usize;
    let (xa, xb) = (clamp(x0, img.width), clamp(x0 + 1.0, img.width));
    let (ya, yb) = (clamp(y0, img.height), clamp(y0 + 1.0, img.height));
    for (c, o) in out.iter_mut().enumerate().take(img.channels) {
        let top = img.get(xa, ya, c) as f64 * (1.0 - ax) + img.get(xb, ya, c) as f64 * ax;
        let bot = img.get(xa, yb, c) as f64 * (1.0 - ax) + img.get(xb, yb, c) as f64 * ax;
        *o = (top * (1.0 - ay) + bot * ay) as f32;
    }
}

/// Resamples the square window described by `crop` to a
/// `crop.patch_side × crop.patch_side` image.
pub fn crop_resize(image: &Image, crop: &CropState) -> Image {
    let n = crop.patch_side;
    let d = crop.diameter;
    let x0 = crop.center.x - d / 2.0;
    let y0 = crop.center.y - d / 2.0;
    let step = d / n as f64;
    Image::from_fn(n, n, image.channels, |i, j, c| {
        let x = x0 + (i as f64 + 0.5) * step;
        let y = y0 + (j as f64 + 0.5) * step;
        sample_bilinear(image, x, y, c)
    })
}

/// Renders `mesh` at `pose` directly into the crop window.
pub fn render_crop(
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    crop: &CropState,
    lights: &LightConfig,
    material: &MaterialConfig,
) -> Result<RenderPatch, RenderError> {
    if !(crop.diameter > 0.0) || crop.patch_side == 0 {
        return Err(RenderError::Geometry(GeometryError::DegenerateProjection));
    }
    Ok(rasterize(mesh, pose, &k.crop_camera(crop), lights, material))
}

/// Network input: `8 × n × n`, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchStack {
    pub side: usize,
    pub data: Vec<f32>,
}

impl PatchStack {
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            data: vec![0.0; STACK_CHANNELS * side * side],
        }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let s = self.side * self.side;
        &self.data[c * s..(c + 1) * s]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let s = self.side * self.side;
        &mut self.data[c * s..(c + 1) * s]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f32 {
        self.data[(c * self.side + y) * self.side + x]
    }

    /// Assembles a stack from an observed crop and a rendered patch of the
    /// same side. `depth_ref` normalizes the depth channel.
    pub fn assemble(observed: &Image, rendered: &RenderPatch, depth_ref: f64) -> Self {
        let n = observed.width;
        assert_eq!(observed.height, n);
        assert_eq!(rendered.width(), n);
        let mut s = PatchStack::zeros(n);
        let inv = (1.0 / depth_ref) as f32;
        for y in 0..n {
            for x in 0..n {
                let p = y * n + x;
                for c in 0..3 {
                    s.data[c * n * n + p] = observed.get(x, y, c.min(observed.channels - 1));
                    s.data[(3 + c) * n * n + p] = rendered.rgb.get(x, y, c);
                }
                s.data[6 * n * n + p] = rendered.depth.data[p] * inv;
                s.data[7 * n * n + p] = rendered.mask.data[p];
            }
        }
        s
    }

    /// Channels `[c0, c0 + 3)` as an RGB image.
    pub fn rgb(&self, c0: usize) -> Image {
        Image::from_fn(self.side, self.side, 3, |x, y, c| self.get(c0 + c, x, y))
    }
}

/// Observed crop stacked with the hypothesis rendered under default lighting.
pub fn render_patch_stack(
    observed: &Image,
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    crop: &CropState,
) -> Result<PatchStack, RenderError> {
    let rendered = render_crop(
        mesh,
        pose,
        k,
        crop,
        &LightConfig::default(),
        &MaterialConfig::default(),
    )?;
    let obs = crop_resize(observed, crop);
    Ok(PatchStack::assemble(&obs, &rendered, pose.depth()))
}
