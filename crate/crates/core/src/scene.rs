//! Synthetic scenes: a default camera, ground-truth pose sampling and
//! full-frame observations.

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{
    compute_crop_with_margin, rotation_from_4d, CameraIntrinsics, GeometryError, Pose,
};
use crate::policy::Frame;
use crate::renderer::{rasterize, Image, LightConfig, MaterialConfig, Mesh};

/// 640×480 pinhole camera with a 500 px focal length.
pub fn default_camera() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480)
}

/// Uniformly distributed rotation.
pub fn random_rotation(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    loop {
        let q = [0; 4].map(|_| rng.sample::<f64, _>(StandardNormal));
        if q.iter().map(|v| v * v).sum::<f64>() > 1e-12 {
            return rotation_from_4d(q);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSampler {
    /// Object depth range, meters.
    pub depth: (f64, f64),
    /// Minimum distance in pixels between the projected bounding box and
    /// the image border.
    pub border: f64,
}

impl Default for PoseSampler {
    fn default() -> Self {
        Self {
            depth: (0.5, 2.0),
            border: 2.0,
        }
    }
}

impl PoseSampler {
    /// Uniform rotation, uniform depth, and an image-plane position that
    /// keeps the projected bounding box inside the frame.
    pub fn sample(&self, mesh: &Mesh, k: &CameraIntrinsics, rng: &mut impl Rng) -> Pose {
        let (w, h) = (k.width as f64, k.height as f64);
        for _ in 0..1000 {
            let rotation = random_rotation(rng);
            let z = rng.random_range(self.depth.0..=self.depth.1);
            let centered = Pose::new(rotation, Vector3::new(0.0, 0.0, z));
            let Ok(c) = compute_crop_with_margin(&centered, k, mesh.vertices(), 1, 1.0) else {
                continue;
            };
            // bounding box relative to the projected model origin
            let half = c.diameter / 2.0 + self.border;
            let off = c.center - Vector2::new(k.cx, k.cy);
            let (lo_u, hi_u) = (half - off.x, w - half - off.x);
            let (lo_v, hi_v) = (half - off.y, h - half - off.y);
            if lo_u >= hi_u || lo_v >= hi_v {
                continue;
            }
            let uv = Vector2::new(rng.random_range(lo_u..hi_u), rng.random_range(lo_v..hi_v));
            let pose = Pose::new(rotation, k.unproject(&uv, z));
            if fits(&pose, mesh, k) {
                return pose;
            }
        }
        panic!("could not place the model inside the frame; depth range too small for the camera");
    }
}

/// Whether the projected bounding box lies inside the image.
pub fn fits(pose: &Pose, mesh: &Mesh, k: &CameraIntrinsics) -> bool {
    match compute_crop_with_margin(pose, k, mesh.vertices(), 1, 1.0) {
        Ok(c) => {
            let r = c.diameter / 2.0;
            c.center.x - r >= 0.0
                && c.center.y - r >= 0.0
                && c.center.x + r <= k.width as f64
                && c.center.y + r <= k.height as f64
        }
        Err(_) => false,
    }
}

/// Renders `mesh` at `pose` over `background` (black when absent).
pub fn render_observation(
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    background: Option<&Image>,
    lights: &LightConfig,
    material: &MaterialConfig,
) -> Result<Image, GeometryError> {
    k.validate()?;
    let r = rasterize(mesh, pose, k, lights, material);
    let mut out = match background {
        Some(bg) if bg.width == k.width && bg.height == k.height && bg.channels == 3 => bg.clone(),
        Some(_) => return Err(GeometryError::InvalidIntrinsics("background size differs from the camera".into())),
        None => Image::new(k.width, k.height, 3),
    };
    for i in 0..k.width * k.height {
        if r.mask.data[i] > 0.0 {
            out.data[3 * i..3 * i + 3].copy_from_slice(&r.rgb.data[3 * i..3 * i + 3]);
        }
    }
    Ok(out)
}

/// A clean rendered scene: default lighting over `background`.
pub fn synthetic_scene(
    mesh: &Mesh,
    k: &CameraIntrinsics,
    background: Option<&Image>,
    sampler: &PoseSampler,
    rng: &mut impl Rng,
) -> Result<(Image, Pose), GeometryError> {
    let gt = sampler.sample(mesh, k, rng);
    let img = render_observation(mesh, &gt, k, background, &LightConfig::default(), &MaterialConfig::default())?;
    Ok((img, gt))
}

/// Constant-velocity sequence starting at `start`: every frame the pose is
/// translated by `velocity` (meters) and rotated by `spin` (axis-angle,
/// radians) about the object center.
pub fn moving_sequence(
    mesh: &Mesh,
    k: &CameraIntrinsics,
    start: &Pose,
    frames: usize,
    velocity: Vector3<f64>,
    spin: Vector3<f64>,
    background: Option<&Image>,
) -> Result<Vec<Frame>, GeometryError> {
    let step = UnitQuaternion::from_scaled_axis(spin);
    let mut pose = *start;
    let mut out = Vec::with_capacity(frames);
    for _ in 0..frames {
        let observed = render_observation(mesh, &pose, k, background, &LightConfig::default(), &MaterialConfig::default())?;
        out.push(Frame {
            observed,
            gt: Some(pose),
        });
        pose = Pose::new(step * pose.rotation, pose.translation + velocity);
    }
    Ok(out)
}
