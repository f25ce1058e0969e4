use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{Image, Mesh};
use crate::geometry::{CameraIntrinsics, Pose};

/// Triangles with a vertex closer than this are dropped.
pub const NEAR_PLANE: f64 = 1e-3;

/// Lambertian ambient term.
pub const AMBIENT: f32 = 0.2;

/// Light colors available to appearance augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaletteColor {
    Blue,
    Cyan,
    Green,
    Magenta,
    Red,
    Yellow,
    White,
}

impl PaletteColor {
    pub const ALL: [PaletteColor; 7] = [
        PaletteColor::Blue,
        PaletteColor::Cyan,
        PaletteColor::Green,
        PaletteColor::Magenta,
        PaletteColor::Red,
        PaletteColor::Yellow,
        PaletteColor::White,
    ];

    pub fn rgb(self) -> [f32; 3] {
        match self {
            PaletteColor::Blue => [0.0, 0.0, 1.0],
            PaletteColor::Cyan => [0.0, 1.0, 1.0],
            PaletteColor::Green => [0.0, 1.0, 0.0],
            PaletteColor::Magenta => [1.0, 0.0, 1.0],
            PaletteColor::Red => [1.0, 0.0, 0.0],
            PaletteColor::Yellow => [1.0, 1.0, 0.0],
            PaletteColor::White => [1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    /// Camera frame, meters.
    pub position: Vector3<f64>,
    pub intensity: f32,
    pub color: [f32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightConfig {
    pub ambient: f32,
    pub lights: Vec<PointLight>,
    /// Scales every point light's contribution.
    pub gain: f32,
}

impl Default for LightConfig {
    /// A white headlight at the camera center.
    fn default() -> Self {
        Self {
            ambient: AMBIENT,
            lights: vec![PointLight {
                position: Vector3::zeros(),
                intensity: 0.8,
                color: [1.0, 1.0, 1.0],
            }],
            gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialMode {
    /// Albedo only.
    Unlit,
    /// Lambertian, plus a Blinn-Phong lobe when metallic or smoothness is set.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub mode: MaterialMode,
    /// `[0, 0.85]` when sampled for augmentation.
    pub metallic: f32,
    /// `[0, 0.8]` when sampled for augmentation.
    pub smoothness: f32,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self {
            mode: MaterialMode::Standard,
            metallic: 0.0,
            smoothness: 0.0,
        }
    }
}

/// Rendered RGB, depth (meters, 0 = background) and occupancy mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderPatch {
    pub rgb: Image,
    pub depth: Image,
    pub mask: Image,
}

impl RenderPatch {
    pub fn width(&self) -> usize {
        self.rgb.width
    }

    pub fn height(&self) -> usize {
        self.rgb.height
    }
}

#[inline]
fn edge(a: &Vector2<f64>, b: &Vector2<f64>, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Pixel-center coverage of a screen-space triangle.
///
/// Calls `visit(x, y, [w0, w1, w2])` with screen-space barycentrics for every
/// pixel `(x, y)` whose center `(x + 0.5, y + 0.5)` lies inside or on the
/// triangle. Degenerate triangles cover nothing.
pub fn scan_triangle(
    p: [Vector2<f64>; 3],
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize, [f64; 3]),
) {
    let area = edge(&p[0], &p[1], p[2].x, p[2].y);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let min_x = p.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let max_x = p.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = p.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
    let max_y = p.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
    let x0 = (min_x - 0.5).ceil().max(0.0);
    let y0 = (min_y - 0.5).ceil().max(0.0);
    let x1 = (max_x - 0.5).floor().min(width as f64 - 1.0);
    let y1 = (max_y - 0.5).floor().min(height as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let inv = 1.0 / area;
    for y in y0 as usize..=y1 as usize {
        let py = y as f64 + 0.5;
        for x in x0 as usize..=x1 as usize {
            let px = x as f64 + 0.5;
            let w0 = edge(&p[1], &p[2], px, py) * inv;
            let w1 = edge(&p[2], &p[0], px, py) * inv;
            let w2 = edge(&p[0], &p[1], px, py) * inv;
            if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                visit(x, y, [w0, w1, w2]);
            }
        }
    }
}

/// Z-buffered rasterization of `mesh` at `pose` into a `k.width × k.height`
/// image.
///
/// Visibility is resolved per pixel by the smallest camera-frame depth with
/// ties going to the lower triangle index, so the output does not depend on
/// triangle order. Geometry outside the image or in front of the near plane
/// is dropped without error.
pub fn rasterize(
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    lights: &LightConfig,
    material: &MaterialConfig,
) -> RenderPatch {
    let (w, h) = (k.width, k.height);
    let cam: Vec<Vector3<f64>> = mesh.vertices().iter().map(|v| pose.transform_point(v)).collect();
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut tri_id = vec![u32::MAX; w * h];
    let mut bary = vec![[0.0f64; 3]; w * h];

    for (ti, t) in mesh.triangles().iter().enumerate() {
        let v = t.map(|i| cam[i as usize]);
        if v.iter().any(|p| p.z < NEAR_PLANE) {
            continue;
        }
        let screen = v.map(|p| k.project(&p));
        let inv_z = v.map(|p| 1.0 / p.z);
        scan_triangle(screen, w, h, |x, y, b| {
            let iz = b[0] * inv_z[0] + b[1] * inv_z[1] + b[2] * inv_z[2];
            let z = 1.0 / iz;
            let i = y * w + x;
            if z < zbuf[i] || (z == zbuf[i] && (ti as u32) < tri_id[i]) {
                zbuf[i] = z;
                tri_id[i] = ti as u32;
                // perspective-correct barycentrics
                bary[i] = [b[0] * inv_z[0] * z, b[1] * inv_z[1] * z, b[2] * inv_z[2] * z];
            }
        });
    }

    let mut rgb = Image::new(w, h, 3);
    let mut depth = Image::new(w, h, 1);
    let mut mask = Image::new(w, h, 1);
    for i in 0..w * h {
        let ti = tri_id[i];
        if ti == u32::MAX {
            continue;
        }
        let ti = ti as usize;
        depth.data[i] = zbuf[i] as f32;
        mask.data[i] = 1.0;
        let albedo = mesh.albedo(ti, bary[i]);
        let color = match material.mode {
            MaterialMode::Unlit => albedo,
            MaterialMode::Standard => {
                let idx = mesh.triangles()[ti];
                let v = idx.map(|j| cam[j as usize]);
                let b = bary[i];
                let p = v[0] * b[0] + v[1] * b[1] + v[2] * b[2];
                shade(albedo, &v, &p, lights, material)
            }
        };
        rgb.data[3 * i..3 * i + 3].copy_from_slice(&color);
    }
    RenderPatch { rgb, depth, mask }
}

fn shade(
    albedo: [f32; 3],
    tri: &[Vector3<f64>; 3],
    p: &Vector3<f64>,
    lights: &LightConfig,
    material: &MaterialConfig,
) -> [f32; 3] {
    let mut n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let view = -p;
    if n.dot(&view) < 0.0 {
        n = -n;
    }
    let n = n.normalize();
    let view = view.normalize();
    let specular = material.metallic > 0.0 || material.smoothness > 0.0;
    let diffuse_scale = 1.0 - 0.5 * material.metallic;
    let shininess = 2.0 + 126.0 * material.smoothness as f64;
    let ks = 0.04 + 0.6 * material.metallic;

    let mut out = [0.0f32; 3];
    for c in 0..3 {
        out[c] = albedo[c] * lights.ambient;
    }
    for light in &lights.lights {
        let l = light.position - p;
        let dist = l.norm();
        if dist == 0.0 {
            continue;
        }
        let l = l / dist;
        let ndl = n.dot(&l).max(0.0) as f32;
        if ndl <= 0.0 {
            continue;
        }
        let spec = if specular {
            let hv = (l + view).normalize();
            (n.dot(&hv).max(0.0).powf(shininess) as f32) * ks * (1.0 + material.smoothness)
        } else {
            0.0
        };
        for c in 0..3 {
            let tint = lights.gain * light.intensity * light.color[c];
            let spec_color = (1.0 - material.metallic) + material.metallic * albedo[c];
            out[c] += tint * (albedo[c] * ndl * diffuse_scale + spec * spec_color);
        }
    }
    out.map(|v| v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::Appearance;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(n: usize) -> CameraIntrinsics {
        CameraIntrinsics::new(60.0, 60.0, n as f64 / 2.0, n as f64 / 2.0, n, n)
    }

    fn plane() -> Mesh {
        let v = vec![
            Vector3::new(-0.3, -0.3, 0.0),
            Vector3::new(0.3, -0.3, 0.0),
            Vector3::new(0.3, 0.3, 0.0),
            Vector3::new(-0.3, 0.3, 0.0),
        ];
        Mesh::new(v, vec![[0, 1, 2], [0, 2, 3]], Appearance::Uniform([0.5, 0.5, 0.5])).unwrap()
    }

    /// Point-in-triangle by sign agreement of the three cross products.
    fn brute_inside(p: &[Vector2<f64>; 3], x: f64, y: f64) -> bool {
        let s = |a: &Vector2<f64>, b: &Vector2<f64>| (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
        let d = [s(&p[0], &p[1]), s(&p[1], &p[2]), s(&p[2], &p[0])];
        (d.iter().all(|&v| v >= 0.0) || d.iter().all(|&v| v <= 0.0))
            && !(d.iter().all(|&v| v == 0.0))
    }

    #[test]
    fn object_behind_is_empty() {
        let m = plane();
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, -1.0));
        let r = rasterize(&m, &pose, &cam(32), &LightConfig::default(), &MaterialConfig::default());
        assert!(r.mask.data.iter().all(|&v| v == 0.0));
        assert!(r.depth.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fronto_parallel_plane_depth() {
        let m = plane();
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let r = rasterize(&m, &pose, &cam(32), &LightConfig::default(), &MaterialConfig::default());
        let covered: Vec<_> = r.depth.data.iter().filter(|&&d| d > 0.0).collect();
        assert!(covered.len() > 100);
        for d in covered {
            assert!((*d as f64 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_triangle_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = cam(24);
        for _ in 0..1000 {
            let v: Vec<Vector3<f64>> = (0..3)
                .map(|_| {
                    Vector3::new(
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.2..0.2),
                    )
                })
                .collect();
            let m = Mesh::new(v.clone(), vec![[0, 1, 2]], Appearance::Uniform([1.0; 3])).unwrap();
            let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
            let r = rasterize(&m, &pose, &k, &LightConfig::default(), &MaterialConfig::default());
            let p: [Vector2<f64>; 3] = [0, 1, 2].map(|i| k.project(&(v[i] + pose.translation)));
            for y in 0..24 {
                for x in 0..24 {
                    let inside = brute_inside(&p, x as f64 + 0.5, y as f64 + 0.5);
                    assert_eq!(r.mask.get(x, y, 0) == 1.0, inside, "pixel {x},{y}");
                }
            }
        }
    }

    #[test]
    fn triangle_order_does_not_matter() {
        let m = Mesh::textured_cube(0.2);
        let pose = Pose::new(
            UnitQuaternion::from_euler_angles(0.5, 0.4, -0.3),
            Vector3::new(0.01, 0.02, 0.6),
        );
        let k = cam(48);
        let a = rasterize(&m, &pose, &k, &LightConfig::default(), &MaterialConfig::default());
        let order: Vec<usize> = (0..m.triangles().len()).rev().collect();
        let b = rasterize(
            &m.with_triangle_order(&order),
            &pose,
            &k,
            &LightConfig::default(),
            &MaterialConfig::default(),
        );
        assert_eq!(a.depth, b.depth);
        assert_eq!(a.mask, b.mask);
        for i in 0..a.mask.data.len() {
            assert_eq!(a.mask.data[i] == 1.0, a.depth.data[i] > 0.0);
        }
    }

    #[test]
    fn unlit_returns_albedo() {
        let m = plane();
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let unlit = MaterialConfig {
            mode: MaterialMode::Unlit,
            ..MaterialConfig::default()
        };
        let r = rasterize(&m, &pose, &cam(16), &LightConfig::default(), &unlit);
        assert_eq!(r.rgb.get(8, 8, 0), 0.5);
        let lit = rasterize(&m, &pose, &cam(16), &LightConfig::default(), &MaterialConfig::default());
        // headlight facing the plane: ambient + full diffuse
        assert!((lit.rgb.get(8, 8, 1) - 0.5 * (0.2 + 0.8)).abs() < 1e-3);
        assert!(lit.rgb.is_finite());
    }
}
