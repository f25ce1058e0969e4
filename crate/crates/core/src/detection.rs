//! Detector-free initialization. Translation comes from the divergence of a
//! field of first decisions taken at many image positions; rotation comes
//! from the grid rotation whose episode terminates fastest.

use nalgebra::{Quaternion, UnitQuaternion, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{compute_crop, Action, CameraIntrinsics, CropState, Pose, CROP_MARGIN};
use crate::policy::{run_episode, TIE_TOLERANCE, LoopConfig, Observation, Policy, PolicyError, Scene};
use crate::renderer::{render_patch_stack, Image};

#[derive(Debug, thiserror::Error)]
pub enum DetectionError {
    #[error("only {0} valid seeds, need at least 4")]
    TooFewSeeds(usize),
    #[error("divergence map has no distinct extremum")]
    FlatMap,
    #[error("empty rotation grid")]
    EmptyGrid,
    #[error("invalid detection config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Regular grid of seed centers in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    /// Pixel position of cell (0, 0).
    pub origin: [f64; 2],
    pub spacing: f64,
}

impl Grid {
    /// Cell centers spaced `spacing` apart, centered on a `width × height`
    /// image.
    pub fn covering(width: usize, height: usize, spacing: f64) -> Self {
        let nx = ((width as f64 / spacing).floor() as usize).max(1);
        let ny = ((height as f64 / spacing).floor() as usize).max(1);
        let ox = (width as f64 - (nx - 1) as f64 * spacing) / 2.0;
        let oy = (height as f64 - (ny - 1) as f64 * spacing) / 2.0;
        Self {
            nx,
            ny,
            origin: [ox, oy],
            spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel position of fractional cell coordinates.
    pub fn point(&self, i: f64, j: f64) -> Vector2<f64> {
        Vector2::new(self.origin[0] + i * self.spacing, self.origin[1] + j * self.spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedField {
    pub grid: Grid,
    /// Unit vectors in raster order; `None` for seeds without an
    /// image-plane pull.
    pub vectors: Vec<Option<[f64; 2]>>,
}

impl SeedField {
    pub fn valid_count(&self) -> usize {
        self.vectors.iter().flatten().count()
    }
}

/// Image-plane pull direction from one set of action scores. The seed is
/// invalid when no image-plane translation scores above stop.
pub fn seed_vector(scores: &[f64; 13]) -> Option<[f64; 2]> {
    let planar = [Action::PlusTx, Action::MinusTx, Action::PlusTy, Action::MinusTy];
    let best = planar
        .iter()
        .map(|a| scores[a.index()])
        .fold(f64::NEG_INFINITY, f64::max);
    if !(best > scores[Action::Stop.index()] + TIE_TOLERANCE) {
        return None;
    }
    let d = |p: Action, m: Action| {
        let v = scores[p.index()] - scores[m.index()];
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let v = Vector2::new(d(Action::PlusTx, Action::MinusTx), d(Action::PlusTy, Action::MinusTy));
    let n = v.norm();
    (n > 0.0).then(|| [v.x / n, v.y / n])
}

/// One decision per grid seed, with the probe translated so that its
/// origin projects onto the seed center at the probe depth.
pub fn seed_translation_field(
    policy: &dyn Policy,
    scene: &Scene,
    grid: &Grid,
    probe: &Pose,
    cfg: &LoopConfig,
) -> Result<SeedField, DetectionError> {
    cfg.validate()?;
    let k = scene.k;
    let vectors = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let uv = grid.point((idx % grid.nx) as f64, (idx / grid.nx) as f64);
            let pose = Pose::new(probe.rotation, k.unproject(&uv, probe.depth()));
            let (crop, stack) = if policy.needs_observation() {
                let crop = compute_crop(&pose, k, scene.mesh.vertices(), cfg.patch_side)
                    .map_err(PolicyError::from)?;
                let stack = render_patch_stack(scene.observed, scene.mesh, &pose, k, &crop)
                    .map_err(PolicyError::from)?;
                (Some(crop), Some(stack))
            } else {
                (None, None)
            };
            let obs = Observation {
                pose: &pose,
                k,
                steps: &cfg.steps,
                crop: crop.as_ref(),
                stack: stack.as_ref(),
                gt: scene.gt,
                step: 0,
            };
            Ok(seed_vector(&policy.scores(&obs)?))
        })
        .collect::<Result<Vec<_>, PolicyError>>()?;
    Ok(SeedField { grid: *grid, vectors })
}

/// Divergence `W` sampled on the seed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMap {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl DivergenceMap {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.grid.nx + i]
    }

    /// `-W` normalized to [0, 1] as a grayscale image, one pixel per cell.
    pub fn heatmap(&self) -> Image {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(-v), b.max(-v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        Image::from_fn(self.grid.nx, self.grid.ny, 1, |i, j, _| ((-self.at(i, j) - lo) / span) as f32)
    }
}

fn gaussian_kernel(sigma_cells: f64) -> Vec<f64> {
    let r = (3.0 * sigma_cells).ceil() as isize;
    (-r..=r)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma_cells * sigma_cells)).exp())
        .collect()
}

/// Separable convolution with zero padding.
fn smooth(data: &[f64], nx: usize, ny: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; data.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut s = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let x = i as isize + t as isize - r;
                if (0..nx as isize).contains(&x) {
                    s += w * data[j * nx + x as usize];
                }
            }
            tmp[j * nx + i] = s;
        }
    }
    let mut out = vec![0.0; data.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut s = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let y = j as isize + t as isize - r;
                if (0..ny as isize).contains(&y) {
                    s += w * tmp[y as usize * nx + i];
                }
            }
            out[j * nx + i] = s;
        }
    }
    out
}

/// Gaussian-smoothed field (sigma `radius` pixels) and its central
/// difference divergence; one-sided differences on the border.
pub fn divergence(field: &SeedField, radius: f64) -> Result<DivergenceMap, DetectionError> {
    let n = field.valid_count();
    if n < 4 {
        return Err(DetectionError::TooFewSeeds(n));
    }
    if !(radius > 0.0) {
        return Err(DetectionError::InvalidConfig("smoothing radius must be positive".into()));
    }
    let g = field.grid;
    let (nx, ny) = (g.nx, g.ny);
    let comp = |c: usize| -> Vec<f64> {
        field.vectors.iter().map(|v| v.map_or(0.0, |v| v[c])).collect()
    };
    let kernel = gaussian_kernel(radius / g.spacing);
    let vx = smooth(&comp(0), nx, ny, &kernel);
    let vy = smooth(&comp(1), nx, ny, &kernel);
    let diff = |v: &[f64], i: usize, j: usize, dx: bool| -> f64 {
        let (len, idx) = if dx { (nx, i) } else { (ny, j) };
        let get = |t: usize| if dx { v[j * nx + t] } else { v[t * nx + i] };
        if len < 2 {
            0.0
        } else if idx == 0 {
            get(1) - get(0)
        } else if idx == len - 1 {
            get(idx) - get(idx - 1)
        } else {
            (get(idx + 1) - get(idx - 1)) / 2.0
        }
    };
    let mut data = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            data.push((diff(&vx, i, j, true) + diff(&vy, i, j, false)) / g.spacing);
        }
    }
    Ok(DivergenceMap { grid: g, data })
}

/// Vertex offset of the parabola through three samples, in [-0.5, 0.5].
fn parabolic(l: f64, c: f64, r: f64) -> f64 {
    let den = l - 2.0 * c + r;
    if den < 0.0 {
        (0.5 * (l - r) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Distance in cells from the peak to where `v` first drops to `half`
/// along one direction, linearly interpolated. Runs to the border if it
/// never does.
fn half_width(v: &[f64], peak: usize, half: f64, step: isize) -> f64 {
    let mut prev = v[peak];
    let mut i = peak as isize;
    loop {
        let next = i + step;
        if next < 0 || next >= v.len() as isize {
            return (i - peak as isize).unsigned_abs() as f64 + 0.5;
        }
        let cur = v[next as usize];
        if cur <= half {
            let frac = (prev - half) / (prev - cur);
            return (i - peak as isize).unsigned_abs() as f64 + frac;
        }
        prev = cur;
        i = next;
    }
}

/// Object center at the maximum of `-W` and crop diameter from the full
/// width at half maximum of its lobe, clamped to `[16, min(width, height)]`.
pub fn detect_center_and_scale(
    map: &DivergenceMap,
    width: usize,
    height: usize,
    patch_side: usize,
) -> Result<CropState, DetectionError> {
    let g = map.grid;
    let neg: Vec<f64> = map.data.iter().map(|v| -v).collect();
    let n = neg.len() as f64;
    let mean = neg.iter().sum::<f64>() / n;
    let std = (neg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut best = 0;
    for (i, &v) in neg.iter().enumerate() {
        if v > neg[best] {
            best = i;
        }
    }
    let peak = neg[best];
    if !(peak > mean + 3.0 * std) || std == 0.0 {
        return Err(DetectionError::FlatMap);
    }
    let (bi, bj) = (best % g.nx, best / g.nx);
    let row: Vec<f64> = (0..g.nx).map(|i| neg[bj * g.nx + i]).collect();
    let col: Vec<f64> = (0..g.ny).map(|j| neg[j * g.nx + bi]).collect();
    let refine = |v: &[f64], p: usize| {
        if p == 0 || p + 1 >= v.len() {
            0.0
        } else {
            parabolic(v[p - 1], v[p], v[p + 1])
        }
    };
    let center = g.point(bi as f64 + refine(&row, bi), bj as f64 + refine(&col, bj));
    let half = peak / 2.0;
    let fwhm_x = half_width(&row, bi, half, -1) + half_width(&row, bi, half, 1);
    let fwhm_y = half_width(&col, bj, half, -1) + half_width(&col, bj, half, 1);
    let side = width.min(height) as f64;
    let diameter = ((fwhm_x + fwhm_y) / 2.0 * g.spacing).clamp(16.0, side.max(16.0));
    Ok(CropState::new(center, diameter, patch_side))
}

/// Low-discrepancy covering of the rotation group (super-Fibonacci
/// spirals).
pub fn rotation_grid(n: usize) -> Vec<UnitQuaternion<f64>> {
    const PHI: f64 = std::f64::consts::SQRT_2;
    const PSI: f64 = 1.533_751_168_755_204_3;
    (0..n)
        .map(|i| {
            let s = i as f64 + 0.5;
            let r = (s / n as f64).sqrt();
            let big_r = (1.0 - s / n as f64).sqrt();
            let a = std::f64::consts::TAU * s / PHI;
            let b = std::f64::consts::TAU * s / PSI;
            UnitQuaternion::from_quaternion(Quaternion::new(
                big_r * b.cos(),
                r * a.sin(),
                r * a.cos(),
                big_r * b.sin(),
            ))
        })
        .collect()
}

/// Runs one capped episode per grid rotation from `translation` and
/// returns the final pose of the fastest run. Runs that ended on stop
/// rank before runs that did not; ties go to the lowest grid index.
pub fn init_rotation(
    policy: &dyn Policy,
    scene: &Scene,
    translation: &Vector3<f64>,
    grid: &[UnitQuaternion<f64>],
    cfg: &LoopConfig,
) -> Result<(Pose, usize), DetectionError> {
    if grid.is_empty() {
        return Err(DetectionError::EmptyGrid);
    }
    let runs = grid
        .par_iter()
        .map(|q| run_episode(policy, scene, &Pose::new(*q, *translation), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let (idx, best) = runs
        .iter()
        .enumerate()
        .min_by_key(|(i, e)| (!e.stopped(), e.trace.len(), *i))
        .expect("grid is non-empty");
    Ok((best.pose, idx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub grid_spacing: f64,
    /// Gaussian sigma in pixels; 1.5 grid spacings when absent.
    pub smoothing: Option<f64>,
    /// Depth at which the probe is placed.
    pub probe_depth: f64,
    pub rotations: usize,
    /// Decision budget of each rotation episode.
    pub rotation_cap: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            grid_spacing: 16.0,
            smoothing: None,
            probe_depth: 1.0,
            rotations: 60,
            rotation_cap: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub field: SeedField,
    pub map: DivergenceMap,
    pub crop: CropState,
    /// Translation implied by the crop center and diameter.
    pub translation: Vector3<f64>,
}

/// Depth at which a model of bounding radius `radius` fills a crop of
/// `diameter` pixels.
pub fn depth_from_crop(k: &CameraIntrinsics, radius: f64, diameter: f64) -> f64 {
    k.fx * 2.0 * radius * CROP_MARGIN / diameter
}

/// Center, scale and translation from one seeded field.
pub fn detect_translation(
    policy: &dyn Policy,
    scene: &Scene,
    probe_rotation: UnitQuaternion<f64>,
    dcfg: &DetectConfig,
    cfg: &LoopConfig,
) -> Result<Detection, DetectionError> {
    if !(dcfg.grid_spacing >= 1.0) || !(dcfg.probe_depth > 0.0) {
        return Err(DetectionError::InvalidConfig("grid_spacing must be >= 1 and probe_depth positive".into()));
    }
    let k = scene.k;
    let grid = Grid::covering(k.width, k.height, dcfg.grid_spacing);
    let probe = Pose::new(probe_rotation, Vector3::new(0.0, 0.0, dcfg.probe_depth));
    let field = seed_translation_field(policy, scene, &grid, &probe, cfg)?;
    let map = divergence(&field, dcfg.smoothing.unwrap_or(1.5 * dcfg.grid_spacing))?;
    let crop = detect_center_and_scale(&map, k.width, k.height, cfg.patch_side)?;
    let z = depth_from_crop(k, scene.mesh.bounding_radius(), crop.diameter);
    Ok(Detection {
        translation: k.unproject(&crop.center, z),
        field,
        map,
        crop,
    })
}

/// Full initialization: translation from the divergence field, then the
/// best grid rotation.
pub fn detect(
    policy: &dyn Policy,
    scene: &Scene,
    dcfg: &DetectConfig,
    cfg: &LoopConfig,
) -> Result<(Detection, Pose), DetectionError> {
    let det = detect_translation(policy, scene, UnitQuaternion::identity(), dcfg, cfg)?;
    let capped = LoopConfig {
        max_steps: dcfg.rotation_cap,
        ..*cfg
    };
    let (pose, _) = init_rotation(policy, scene, &det.translation, &rotation_grid(dcfg.rotations), &capped)?;
    Ok((det, pose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_action, StepSizes};
    use crate::policy::OraclePolicy;
    use crate::renderer::Mesh;
    use crate::scene::default_camera;

    fn field_from(grid: Grid, f: impl Fn(Vector2<f64>) -> Option<[f64; 2]>) -> SeedField {
        let vectors = (0..grid.len())
            .map(|i| f(grid.point((i % grid.nx) as f64, (i / grid.nx) as f64)))
            .collect();
        SeedField { grid, vectors }
    }

    #[test]
    fn constant_field_has_zero_interior_divergence() {
        let grid = Grid::covering(640, 480, 16.0);
        let field = field_from(grid, |_| Some([0.6, -0.8]));
        let w = divergence(&field, 24.0).unwrap();
        let margin = 6; // kernel reach plus one difference
        for j in margin..grid.ny - margin {
            for i in margin..grid.nx - margin {
                assert!(w.at(i, j).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn radial_sink_peaks_at_center() {
        let grid = Grid::covering(640, 480, 16.0);
        let c = Vector2::new(250.0, 190.0);
        let field = field_from(grid, |p| {
            let d = p - c;
            (d.norm() > 1e-9).then(|| [-d.x / d.norm(), -d.y / d.norm()])
        });
        let w = divergence(&field, 24.0).unwrap();
        let crop = detect_center_and_scale(&w, 640, 480, 128).unwrap();
        assert!((crop.center - c).norm() < 16.0, "{:?}", crop.center);
    }

    #[test]
    fn gaussian_lobe_width_is_recovered() {
        let grid = Grid::covering(640, 480, 8.0);
        let c = grid.point(40.0, 30.0);
        let sigma = 30.0;
        let data = (0..grid.len())
            .map(|i| {
                let p = grid.point((i % grid.nx) as f64, (i / grid.nx) as f64);
                -(-(p - c).norm_squared() / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let map = DivergenceMap { grid, data };
        let crop = detect_center_and_scale(&map, 640, 480, 128).unwrap();
        let fwhm = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        assert!((crop.diameter - fwhm).abs() < 0.25 * fwhm, "{} vs {fwhm}", crop.diameter);
        assert!((crop.center - c).norm() < 1e-6);
    }

    #[test]
    fn flat_map_is_an_error() {
        let grid = Grid::covering(64, 64, 8.0);
        let map = DivergenceMap {
            grid,
            data: vec![0.25; grid.len()],
        };
        assert!(matches!(detect_center_and_scale(&map, 64, 64, 128), Err(DetectionError::FlatMap)));
    }

    #[test]
    fn equal_extrema_pick_first_in_raster_order() {
        let grid = Grid::covering(160, 160, 8.0);
        let mut data = vec![0.0; grid.len()];
        data[3 * grid.nx + 15] = -1.0;
        data[15 * grid.nx + 3] = -1.0;
        let map = DivergenceMap { grid, data };
        let crop = detect_center_and_scale(&map, 160, 160, 128).unwrap();
        assert!((crop.center - grid.point(15.0, 3.0)).norm() < 1e-9);
    }

    #[test]
    fn too_few_seeds() {
        let grid = Grid::covering(64, 64, 16.0);
        let field = field_from(grid, |p| (p.x < 20.0 && p.y < 20.0).then_some([1.0, 0.0]));
        assert!(matches!(divergence(&field, 8.0), Err(DetectionError::TooFewSeeds(1))));
    }

    fn oracle_scene<'a>(img: &'a Image, mesh: &'a Mesh, k: &'a CameraIntrinsics, gt: &'a Pose) -> Scene<'a> {
        Scene {
            observed: img,
            mesh,
            k,
            gt: Some(gt),
        }
    }

    #[test]
    fn oracle_seed_vectors() {
        let k = default_camera();
        let mesh = Mesh::textured_cube(0.2);
        let img = Image::new(k.width, k.height, 3);
        let gt = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let scene = oracle_scene(&img, &mesh, &k, &gt);
        let cfg = LoopConfig::default();
        // a single seed below the center in the image (larger v)
        let grid = Grid {
            nx: 1,
            ny: 1,
            origin: [320.0, 300.0],
            spacing: 16.0,
        };
        let f = seed_translation_field(&OraclePolicy::default(), &scene, &grid, &gt, &cfg).unwrap();
        let v = f.vectors[0].unwrap();
        assert!(v[0].abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
        let on = Grid { origin: [320.0, 240.0], ..grid };
        let f = seed_translation_field(&OraclePolicy::default(), &scene, &on, &gt, &cfg).unwrap();
        assert_eq!(f.vectors[0], None);
    }

    #[test]
    fn oracle_field_points_at_center() {
        let k = default_camera();
        let mesh = Mesh::textured_cube(0.2);
        let img = Image::new(k.width, k.height, 3);
        let gt = Pose::from_translation(k.unproject(&Vector2::new(290.0, 260.0), 1.2));
        let scene = oracle_scene(&img, &mesh, &k, &gt);
        let grid = Grid {
            nx: 9,
            ny: 9,
            origin: [130.0, 70.0],
            spacing: 40.0,
        };
        let probe = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let f = seed_translation_field(&OraclePolicy::default(), &scene, &grid, &probe, &LoopConfig::default())
            .unwrap();
        let c = k.project(&gt.translation);
        assert!(f.valid_count() >= 70);
        for (i, v) in f.vectors.iter().enumerate() {
            if let Some(v) = v {
                let to_c = c - grid.point((i % 9) as f64, (i / 9) as f64);
                assert!(v[0] * to_c.x + v[1] * to_c.y >= 0.0);
            }
        }
        let dense = Grid::covering(640, 480, 16.0);
        let f = seed_translation_field(&OraclePolicy::default(), &scene, &dense, &probe, &LoopConfig::default())
            .unwrap();
        let w = divergence(&f, 24.0).unwrap();
        let crop = detect_center_and_scale(&w, 640, 480, 128).unwrap();
        assert!((crop.center - c).norm() < 0.05 * 640.0);
    }

    #[test]
    fn misrotated_probe_still_pulls_toward_center() {
        let k = default_camera();
        let mesh = Mesh::textured_cube(0.2);
        let img = Image::new(k.width, k.height, 3);
        let q = UnitQuaternion::from_euler_angles(2.0, -1.0, 0.5);
        let gt = Pose::new(q, k.unproject(&Vector2::new(400.0, 200.0), 1.5));
        let scene = oracle_scene(&img, &mesh, &k, &gt);
        let grid = Grid::covering(640, 480, 16.0);
        let probe = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let f = seed_translation_field(&OraclePolicy::default(), &scene, &grid, &probe, &LoopConfig::default())
            .unwrap();
        assert!(f.valid_count() > grid.len() / 2);
        let w = divergence(&f, 24.0).unwrap();
        let crop = detect_center_and_scale(&w, 640, 480, 128).unwrap();
        assert!((crop.center - Vector2::new(400.0, 200.0)).norm() < 32.0, "{:?}", crop.center);
    }

    #[test]
    fn rotation_grid_is_unit_and_spread() {
        let g = rotation_grid(60);
        assert_eq!(g.len(), 60);
        let mut min = f64::INFINITY;
        for i in 0..60 {
            for j in 0..i {
                min = min.min(g[i].angle_to(&g[j]));
            }
        }
        assert!(min > 0.3, "closest pair {min}");
    }

    #[test]
    fn init_rotation_prefers_true_and_near_rotations() {
        let k = default_camera();
        let mesh = Mesh::textured_cube(0.2);
        let img = Image::new(k.width, k.height, 3);
        let gt = Pose::from_translation(Vector3::new(0.05, 0.0, 1.0));
        let scene = oracle_scene(&img, &mesh, &k, &gt);
        let steps = StepSizes::default();
        let rz = |n: usize| {
            let mut p = gt;
            for _ in 0..n {
                p = apply_action(&p, Action::PlusRz, &steps, &k).unwrap();
            }
            p.rotation
        };
        let cfg = LoopConfig {
            max_steps: 40,
            ..LoopConfig::default()
        };
        let grid = vec![rz(30), rz(6), gt.rotation, rz(1)];
        let (pose, idx) = init_rotation(&OraclePolicy::default(), &scene, &gt.translation, &grid, &cfg).unwrap();
        assert_eq!(idx, 2);
        assert_eq!(pose, gt);
        let (_, idx) = init_rotation(&OraclePolicy::default(), &scene, &gt.translation, &grid[..2], &cfg).unwrap();
        assert_eq!(idx, 1);
    }
}
