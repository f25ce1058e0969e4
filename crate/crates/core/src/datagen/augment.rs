//! Patch-level appearance augmentation.

use nalgebra::Vector3;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::background::OccluderPool;
use crate::geometry::Pose;
use crate::renderer::{
    sample_bilinear, Image, LightConfig, MaterialConfig, MaterialMode, PaletteColor, PointLight,
    RenderPatch,
};

/// Patch side the pixel sizes below refer to; they scale with the actual
/// patch side.
pub const REFERENCE_SIDE: f64 = 128.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Probability of motion blur; radial blur otherwise.
    pub motion_blur_p: f64,
    pub motion_taps: usize,
    /// Radial blur zoom per step, sampled from this range.
    pub radial_strength: (f64, f64),
    pub radial_steps: usize,
    pub noise_sigma: f64,
    /// Brightness, contrast and saturation factors.
    pub jitter: (f64, f64),
    pub unlit_p: f64,
    pub metallic: (f64, f64),
    pub smoothness: (f64, f64),
    pub light_count: usize,
    pub light_intensity: (f64, f64),
    /// Crop window side before the low-resolution resize, pixels.
    pub crop_window: (f64, f64),
    /// Intermediate resolution of the crop window, pixels.
    pub crop_resize: (f64, f64),
    /// Probabilities of 0, 1, 2, 3 and 4 occluders.
    pub occluder_p: [f64; 5],
    /// Occluder side as a fraction of the patch side.
    pub occluder_scale: (f64, f64),
    pub masked_crop_p: f64,
    pub masked_crop_side: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            motion_blur_p: 0.75,
            motion_taps: 9,
            radial_strength: (0.005, 0.02),
            radial_steps: 5,
            noise_sigma: 0.05,
            jitter: (0.95, 1.25),
            unlit_p: 0.2,
            metallic: (0.0, 0.85),
            smoothness: (0.0, 0.8),
            light_count: 5,
            light_intensity: (0.5, 1.5),
            crop_window: (96.0, 128.0),
            crop_resize: (32.0, 64.0),
            occluder_p: [0.5, 0.125, 0.125, 0.125, 0.125],
            occluder_scale: (0.3, 0.6),
            masked_crop_p: 0.25,
            masked_crop_side: (72.0, 96.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Blur {
    Motion { angle: f64 },
    Radial { strength: f64 },
}

/// Every random choice the pipeline made for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub material: MaterialConfig,
    pub light_color: PaletteColor,
    pub light_intensities: Vec<f32>,
    pub blur: Blur,
    /// Brightness, contrast, saturation.
    pub jitter: [f64; 3],
    /// Window `[x, y, side]` and intermediate resolution.
    pub resize_window: [f64; 3],
    pub resize_side: usize,
    pub occluders: usize,
    /// Rectangle `[x, y, w, h]` outside which object pixels are dropped.
    pub masked_crop: Option<[usize; 4]>,
}

/// Five point lights around the object with one shared palette color, and a
/// random material.
pub fn sample_lighting(
    cfg: &AugmentConfig,
    gt: &Pose,
    rng: &mut impl Rng,
) -> (LightConfig, MaterialConfig, PaletteColor) {
    let color = *PaletteColor::ALL.choose(rng).expect("palette is not empty");
    let z = gt.depth();
    let lights: Vec<PointLight> = (0..cfg.light_count)
        .map(|_| PointLight {
            position: gt.translation
                + Vector3::new(
                    rng.random_range(-1.0..1.0) * z,
                    rng.random_range(-1.0..1.0) * z,
                    -rng.random_range(0.2..1.0) * z,
                ),
            intensity: rng.random_range(cfg.light_intensity.0..=cfg.light_intensity.1) as f32,
            color: color.rgb(),
        })
        .collect();
    let material = if rng.random_bool(cfg.unlit_p) {
        MaterialConfig {
            mode: MaterialMode::Unlit,
            metallic: 0.0,
            smoothness: 0.0,
        }
    } else {
        MaterialConfig {
            mode: MaterialMode::Standard,
            metallic: rng.random_range(cfg.metallic.0..=cfg.metallic.1) as f32,
            smoothness: rng.random_range(cfg.smoothness.0..=cfg.smoothness.1) as f32,
        }
    };
    let gain = 1.6 / cfg.light_count.max(1) as f32;
    (
        LightConfig {
            ambient: crate::renderer::AMBIENT,
            lights,
            gain,
        },
        material,
        color,
    )
}

fn sample_clamped(img: &Image, x: f64, y: f64, c: usize) -> f32 {
    let eps = 1e-9;
    sample_bilinear(
        img,
        x.clamp(eps, img.width as f64 - eps),
        y.clamp(eps, img.height as f64 - eps),
        c,
    )
}

/// Average of `taps` samples along a line through each pixel, one pixel
/// apart, at the given angle.
pub fn motion_blur(img: &Image, angle: f64, taps: usize) -> Image {
    let (dx, dy) = (angle.cos(), angle.sin());
    let half = (taps as f64 - 1.0) / 2.0;
    let offsets: Vec<(f64, f64)> = (0..taps).map(|t| ((t as f64 - half) * dx, (t as f64 - half) * dy)).collect();
    average_samples(img, |px, py, t| (px + offsets[t].0, py + offsets[t].1), taps)
}

/// Average of `steps` copies zoomed about the image center by
/// `1 + i·strength`.
pub fn radial_blur(img: &Image, strength: f64, steps: usize) -> Image {
    let (cx, cy) = (img.width as f64 / 2.0, img.height as f64 / 2.0);
    let scales: Vec<f64> = (0..steps).map(|i| 1.0 / (1.0 + i as f64 * strength)).collect();
    average_samples(img, |px, py, i| (cx + (px - cx) * scales[i], cy + (py - cy) * scales[i]), steps)
}

/// Per pixel, the mean of `n` bilinear samples at `at(x, y, i)`, with
/// sample positions clamped into the image.
fn average_samples(img: &Image, at: impl Fn(f64, f64, usize) -> (f64, f64), n: usize) -> Image {
    let (w, h, ch) = (img.width, img.height, img.channels);
    let mut out = Image::new(w, h, ch);
    let eps = 1e-9;
    let inv = 1.0 / n as f32;
    // position in [eps, side - eps] to (lower index, upper index, weight)
    let split = |v: f64, side: usize| {
        let v = v.clamp(eps, side as f64 - eps);
        let i = (v + 0.5) as usize; // floor(v - 0.5) + 1, v - 0.5 > -1
        let a = (v + 0.5 - i as f64) as f32;
        (i.saturating_sub(1), i.min(side - 1), a)
    };
    for y in 0..h {
        for x in 0..w {
            let o = (y * w + x) * ch;
            for t in 0..n {
                let (sx, sy) = at(x as f64 + 0.5, y as f64 + 0.5, t);
                let (xa, xb, ax) = split(sx, w);
                let (ya, yb, ay) = split(sy, h);
                let (r0, r1) = (ya * w, yb * w);
                let w00 = (1.0 - ax) * (1.0 - ay);
                let w10 = ax * (1.0 - ay);
                let w01 = (1.0 - ax) * ay;
                let w11 = ax * ay;
                for c in 0..ch {
                    out.data[o + c] += w00 * img.data[(r0 + xa) * ch + c]
                        + w10 * img.data[(r0 + xb) * ch + c]
                        + w01 * img.data[(r1 + xa) * ch + c]
                        + w11 * img.data[(r1 + xb) * ch + c];
                }
            }
            for v in &mut out.data[o..o + ch] {
                *v *= inv;
            }
        }
    }
    out
}

fn luma(p: &[f32]) -> f32 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

/// Brightness, then contrast about the mean luma, then saturation about
/// each pixel's luma. Output clamped to `[0, 1]`.
pub fn color_jitter(img: &mut Image, brightness: f32, contrast: f32, saturation: f32) {
    for v in img.data.iter_mut() {
        *v *= brightness;
    }
    let n = (img.width * img.height) as f32;
    let mean: f32 = img.data.chunks_exact(3).map(luma).sum::<f32>() / n;
    for p in img.data.chunks_exact_mut(3) {
        for v in p.iter_mut() {
            *v = (*v - mean) * contrast + mean;
        }
        let g = luma(p);
        for v in p.iter_mut() {
            *v = (g + (*v - g) * saturation).clamp(0.0, 1.0);
        }
    }
}

/// Replaces the square window `[x, y, side]` by a copy downsampled to
/// `low × low` and scaled back up, leaving geometry unchanged.
pub fn resize_window(img: &mut Image, window: [f64; 3], low: usize) {
    let [x0, y0, side] = window;
    let step = side / low as f64;
    let small = Image::from_fn(low, low, img.channels, |i, j, c| {
        sample_clamped(img, x0 + (i as f64 + 0.5) * step, y0 + (j as f64 + 0.5) * step, c)
    });
    let xs = x0.floor().max(0.0) as usize;
    let ys = y0.floor().max(0.0) as usize;
    let xe = ((x0 + side).ceil() as usize).min(img.width);
    let ye = ((y0 + side).ceil() as usize).min(img.height);
    for y in ys..ye {
        for x in xs..xe {
            let u = (x as f64 + 0.5 - x0) / step;
            let v = (y as f64 + 0.5 - y0) / step;
            if u < 0.0 || v < 0.0 || u > low as f64 || v > low as f64 {
                continue;
            }
            for c in 0..img.channels {
                let val = sample_clamped(&small, u, v, c);
                img.set(x, y, c, val);
            }
        }
    }
}

fn add_noise(img: &mut Image, sigma: f64, rng: &mut impl Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0f32, sigma as f32).expect("positive sigma");
    for v in img.data.iter_mut() {
        *v = (*v + normal.sample(rng)).clamp(0.0, 1.0);
    }
}

fn blur(img: &Image, cfg: &AugmentConfig, rng: &mut impl Rng) -> (Image, Blur) {
    if rng.random_bool(cfg.motion_blur_p) {
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        (motion_blur(img, angle, cfg.motion_taps), Blur::Motion { angle })
    } else {
        let strength = rng.random_range(cfg.radial_strength.0..=cfg.radial_strength.1);
        (radial_blur(img, strength, cfg.radial_steps), Blur::Radial { strength })
    }
}

fn jitter(img: &mut Image, cfg: &AugmentConfig, rng: &mut impl Rng) -> [f64; 3] {
    let f = [0; 3].map(|_| rng.random_range(cfg.jitter.0..=cfg.jitter.1));
    color_jitter(img, f[0] as f32, f[1] as f32, f[2] as f32);
    f
}

fn occluder_count(cfg: &AugmentConfig, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in cfg.occluder_p.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    cfg.occluder_p.len() - 1
}

/// Augments the object rendering `obj` (already lit with the sampled lights
/// and material) composited over `background`. Pixels with `valid[i] =
/// false` lie outside the source image and are zeroed at the end.
pub fn augment_patch(
    obj: &RenderPatch,
    background: &Image,
    valid: &[bool],
    cfg: &AugmentConfig,
    occluders: &OccluderPool,
    rng: &mut impl Rng,
) -> (Image, AugmentRecordPart) {
    let n = obj.width();
    let scale = n as f64 / REFERENCE_SIDE;

    let mut img = background.clone();
    for i in 0..n * n {
        if obj.mask.data[i] > 0.0 {
            img.data[3 * i..3 * i + 3].copy_from_slice(&obj.rgb.data[3 * i..3 * i + 3]);
        }
    }

    let (blurred, blur_kind) = blur(&img, cfg, rng);
    img = blurred;
    add_noise(&mut img, cfg.noise_sigma, rng);
    let jitter_f = jitter(&mut img, cfg, rng);

    let side = rng.random_range(cfg.crop_window.0..=cfg.crop_window.1) * scale;
    let wx = rng.random_range(0.0..=(n as f64 - side).max(0.0));
    let wy = rng.random_range(0.0..=(n as f64 - side).max(0.0));
    let low = (rng.random_range(cfg.crop_resize.0..=cfg.crop_resize.1) * scale).round().max(1.0) as usize;
    resize_window(&mut img, [wx, wy, side], low);

    let count = occluder_count(cfg, rng);
    for _ in 0..count {
        let occ = occluders.sample(rng);
        let mut rgb = occ.rgb.clone();
        let (b, _) = blur(&rgb, cfg, rng);
        rgb = b;
        jitter(&mut rgb, cfg, rng);
        let s = (rng.random_range(cfg.occluder_scale.0..=cfg.occluder_scale.1) * n as f64).max(1.0);
        let ox = rng.random_range(-s / 2.0..n as f64 - s / 2.0);
        let oy = rng.random_range(-s / 2.0..n as f64 - s / 2.0);
        let k = occ.rgb.width as f64 / s;
        for y in 0..n {
            for x in 0..n {
                let u = (x as f64 + 0.5 - ox) * k;
                let v = (y as f64 + 0.5 - oy) * k;
                if u < 0.0 || v < 0.0 || u >= occ.rgb.width as f64 || v >= occ.rgb.height as f64 {
                    continue;
                }
                let (iu, iv) = (u as usize, v as usize);
                if occ.mask[iv * occ.rgb.width + iu] {
                    for c in 0..3 {
                        img.set(x, y, c, rgb.get(iu, iv, c));
                    }
                }
            }
        }
    }

    let masked_crop = if rng.random_bool(cfg.masked_crop_p) {
        let w = (rng.random_range(cfg.masked_crop_side.0..=cfg.masked_crop_side.1) * scale).round() as usize;
        let h = (rng.random_range(cfg.masked_crop_side.0..=cfg.masked_crop_side.1) * scale).round() as usize;
        let (w, h) = (w.min(n), h.min(n));
        let x0 = rng.random_range(0..=n - w);
        let y0 = rng.random_range(0..=n - h);
        for y in 0..n {
            for x in 0..n {
                let inside = x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
                let i = y * n + x;
                if !inside && obj.mask.data[i] > 0.0 {
                    img.data[3 * i..3 * i + 3].copy_from_slice(&background.data[3 * i..3 * i + 3]);
                }
            }
        }
        Some([x0, y0, w, h])
    } else {
        None
    };

    for (i, ok) in valid.iter().enumerate() {
        if !ok {
            img.data[3 * i..3 * i + 3].fill(0.0);
        }
    }

    (
        img,
        AugmentRecordPart {
            blur: blur_kind,
            jitter: jitter_f,
            resize_window: [wx, wy, side],
            resize_side: low,
            occluders: count,
            masked_crop,
        },
    )
}

/// The part of [`AugmentRecord`] decided after rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentRecordPart {
    pub blur: Blur,
    pub jitter: [f64; 3],
    pub resize_window: [f64; 3],
    pub resize_side: usize,
    pub occluders: usize,
    pub masked_crop: Option<[usize; 4]>,
}

impl AugmentRecordPart {
    pub fn complete(
        self,
        material: MaterialConfig,
        light_color: PaletteColor,
        lights: &LightConfig,
    ) -> AugmentRecord {
        AugmentRecord {
            material,
            light_color,
            light_intensities: lights.lights.iter().map(|l| l.intensity).collect(),
            blur: self.blur,
            jitter: self.jitter,
            resize_window: self.resize_window,
            resize_side: self.resize_side,
            occluders: self.occluders,
            masked_crop: self.masked_crop,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Image {
        Image::from_fn(n, n, 3, |x, y, c| ((x + 2 * y + c) % 7) as f32 / 6.0)
    }

    #[test]
    fn blurs_preserve_constant_images() {
        let img = Image::filled(16, 16, &[0.3, 0.6, 0.9]);
        for out in [motion_blur(&img, 0.7, 9), radial_blur(&img, 0.02, 5)] {
            for (a, b) in out.data.iter().zip(&img.data) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn horizontal_motion_blur_is_a_box_filter() {
        let img = Image::from_fn(32, 1, 1, |x, _, _| (x % 2) as f32);
        let out = motion_blur(&img, 0.0, 9);
        // nine alternating samples: four or five ones
        let v = out.get(16, 0, 0);
        assert!((v - 4.0 / 9.0).abs() < 1e-6 || (v - 5.0 / 9.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn unit_jitter_is_identity() {
        let mut img = ramp(8);
        let orig = img.clone();
        color_jitter(&mut img, 1.0, 1.0, 1.0);
        for (a, b) in img.data.iter().zip(&orig.data) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn full_resolution_window_is_identity() {
        let mut img = ramp(16);
        let orig = img.clone();
        resize_window(&mut img, [0.0, 0.0, 16.0], 16);
        for (a, b) in img.data.iter().zip(&orig.data) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
