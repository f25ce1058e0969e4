//! Background images and the occluder patch pool.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatagenError;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::renderer::{
    rasterize, sample_bilinear, Appearance, Image, LightConfig, MaterialConfig, Mesh,
};
use crate::scene::random_rotation;

/// Backgrounds pre-fitted to one resolution.
#[derive(Debug, Clone)]
pub struct BackgroundPool {
    images: Vec<Image>,
}

/// Center-crops `img` to the target aspect ratio and resamples it.
pub fn fit_image(img: &Image, width: usize, height: usize) -> Image {
    let target = width as f64 / height as f64;
    let (w, h) = (img.width as f64, img.height as f64);
    let (cw, ch) = if w / h > target { (h * target, h) } else { (w, w / target) };
    let (x0, y0) = ((w - cw) / 2.0, (h - ch) / 2.0);
    let (sx, sy) = (cw / width as f64, ch / height as f64);
    Image::from_fn(width, height, 3, |x, y, c| {
        let c = c.min(img.channels - 1);
        sample_bilinear(img, x0 + (x as f64 + 0.5) * sx, y0 + (y as f64 + 0.5) * sy, c)
    })
}

impl BackgroundPool {
    pub fn from_images(images: Vec<Image>, width: usize, height: usize) -> Result<Self, DatagenError> {
        if images.is_empty() {
            return Err(DatagenError::EmptyPool);
        }
        Ok(Self {
            images: images.iter().map(|i| fit_image(i, width, height)).collect(),
        })
    }

    /// Every readable image in `dir`, in file-name order. Files that fail to
    /// decode are skipped with a warning.
    pub fn load_dir(dir: &Path, width: usize, height: usize) -> Result<Self, DatagenError> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| DatagenError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let mut images = Vec::new();
        for p in paths {
            match Image::load(&p) {
                Ok(img) => images.push(img),
                Err(e) => log::warn!("skipping background {}: {e}", p.display()),
            }
        }
        Self::from_images(images, width, height)
    }

    /// Synthetic clutter: smooth color gradients, sinusoidal texture and
    /// random rectangles.
    pub fn procedural(count: usize, width: usize, height: usize, seed: u64) -> Self {
        let images = (0..count.max(1))
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                procedural_image(width, height, &mut rng)
            })
            .collect();
        Self { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn sample_index(&self, rng: &mut impl Rng) -> usize {
        rng.random_range(0..self.images.len())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> &Image {
        &self.images[self.sample_index(rng)]
    }

    pub fn get(&self, i: usize) -> &Image {
        &self.images[i]
    }
}

fn procedural_image(width: usize, height: usize, rng: &mut impl Rng) -> Image {
    let c0: [f32; 3] = [rng.random(), rng.random(), rng.random()];
    let c1: [f32; 3] = [rng.random(), rng.random(), rng.random()];
    let waves: Vec<(f64, f64, f64, usize)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.005..0.08),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0..3),
            )
        })
        .collect();
    let mut img = Image::from_fn(width, height, 3, |x, y, c| {
        let t = (x + y) as f32 / (width + height) as f32;
        let mut v = c0[c] * (1.0 - t) + c1[c] * t;
        for &(f, phase, dir, ch) in &waves {
            if ch == c {
                let s = (x as f64 * dir.cos() + y as f64 * dir.sin()) * f + phase;
                v += 0.15 * s.sin() as f32;
            }
        }
        v.clamp(0.0, 1.0)
    });
    for _ in 0..rng.random_range(10..40) {
        let w = rng.random_range(4..width / 3);
        let h = rng.random_range(4..height / 3);
        let x0 = rng.random_range(0..width - w);
        let y0 = rng.random_range(0..height - h);
        let col: [f32; 3] = [rng.random(), rng.random(), rng.random()];
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                img.pixel_mut(x, y).copy_from_slice(&col);
            }
        }
    }
    img
}

/// A pre-rendered occluding object: RGB and occupancy.
#[derive(Debug, Clone)]
pub struct Occluder {
    pub rgb: Image,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct OccluderPool {
    items: Vec<Occluder>,
}

/// Box with one random color per vertex.
fn random_box(rng: &mut impl Rng) -> Mesh {
    let s = [0; 3].map(|_| rng.random_range(0.02..0.12));
    let mut v = Vec::new();
    for i in 0..8 {
        v.push(Vector3::new(
            if i & 1 == 0 { -s[0] } else { s[0] },
            if i & 2 == 0 { -s[1] } else { s[1] },
            if i & 4 == 0 { -s[2] } else { s[2] },
        ));
    }
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let tris = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    let colors = (0..8).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    Mesh::new(v, tris, Appearance::VertexColors(colors)).expect("box mesh is valid")
}

impl OccluderPool {
    /// `count` renders of random boxes at random orientations, `side`
    /// pixels square.
    pub fn generate(count: usize, side: usize, seed: u64) -> Self {
        let f = side as f64 * 2.0;
        let k = CameraIntrinsics::new(f, f, side as f64 / 2.0, side as f64 / 2.0, side, side);
        let items = (0..count.max(1))
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let mesh = random_box(&mut rng);
                let pose = Pose::new(random_rotation(&mut rng), Vector3::new(0.0, 0.0, 0.5));
                let r = rasterize(&mesh, &pose, &k, &LightConfig::default(), &MaterialConfig::default());
                Occluder {
                    mask: r.mask.data.iter().map(|&m| m > 0.0).collect(),
                    rgb: r.rgb,
                }
            })
            .collect();
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> &Occluder {
        &self.items[rng.random_range(0..self.items.len())]
    }
}
