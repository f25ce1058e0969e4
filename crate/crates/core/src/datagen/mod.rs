//! Synthetic training samples: random ground truth poses, offset seeds,
//! augmented observations and oracle labels.

mod augment;
mod background;

pub use augment::{
    augment_patch, color_jitter, motion_blur, radial_blur, resize_window, sample_lighting,
    AugmentConfig, AugmentRecord, AugmentRecordPart, Blur, REFERENCE_SIDE,
};
pub use background::{fit_image, BackgroundPool, Occluder, OccluderPool};

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    apply_action, compute_crop, Action, CameraIntrinsics, CropState, GeometryError, Param, Pose,
    StepSizes, DEFAULT_PATCH_SIDE,
};
use crate::policy::oracle_decide;
use crate::renderer::{
    crop_resize, render_crop, Image, LightConfig, MaterialConfig, Mesh, PatchStack, RenderError,
    RenderPatch,
};
use crate::scene::PoseSampler;

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("background pool is empty")]
    EmptyPool,
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("sample {id}: {msg}")]
    Sample { id: String, msg: String },
}

/// Offset seed clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedGroup {
    Small,
    Large,
    Mixed,
    RandomSmall,
    RandomLarge,
}

impl SeedGroup {
    pub const ALL: [SeedGroup; 5] = [
        SeedGroup::Small,
        SeedGroup::Large,
        SeedGroup::Mixed,
        SeedGroup::RandomSmall,
        SeedGroup::RandomLarge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeedGroup::Small => "small",
            SeedGroup::Large => "large",
            SeedGroup::Mixed => "mixed",
            SeedGroup::RandomSmall => "random_small",
            SeedGroup::RandomLarge => "random_large",
        }
    }
}

/// Inclusive action-count range of the small seeds for one parameter.
pub fn small_range(p: Param) -> (i32, i32) {
    match p {
        Param::Tx | Param::Ty => (1, 5),
        _ => (1, 4),
    }
}

/// Inclusive action-count range of the large seeds for one parameter.
pub fn large_range(p: Param) -> (i32, i32) {
    match p {
        Param::Tx | Param::Ty => (5, 30),
        Param::Tz => (1, 15),
        _ => (4, 20),
    }
}

fn signed(rng: &mut impl Rng, (lo, hi): (i32, i32)) -> i32 {
    let m = rng.random_range(lo..=hi);
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

/// Signed per-parameter action counts separating a hypothesis from the
/// ground truth.
pub fn sample_seed_offset(group: SeedGroup, rng: &mut impl Rng) -> [i32; 6] {
    let mut out = [0i32; 6];
    match group {
        SeedGroup::Small | SeedGroup::Large => {
            let a = Action::ALL[rng.random_range(0..Action::COUNT)];
            if let Some((p, sign)) = a.param() {
                let (lo, hi) = if group == SeedGroup::Small { small_range(p) } else { large_range(p) };
                out[p.index()] = sign * rng.random_range(lo..=hi);
            }
        }
        SeedGroup::Mixed => {
            let big = Param::ALL[rng.random_range(0..6)];
            for p in Param::ALL {
                let range = if p == big { large_range(p) } else { small_range(p) };
                out[p.index()] = signed(rng, range);
            }
        }
        SeedGroup::RandomSmall | SeedGroup::RandomLarge => {
            for p in Param::ALL {
                let range = if group == SeedGroup::RandomSmall { small_range(p) } else { large_range(p) };
                out[p.index()] = signed(rng, range);
            }
        }
    }
    out
}

/// Applies the offset as single actions in random order.
pub fn apply_offsets(
    pose: &Pose,
    offsets: &[i32; 6],
    steps: &StepSizes,
    k: &CameraIntrinsics,
    rng: &mut impl Rng,
) -> Result<Pose, GeometryError> {
    let mut actions = Vec::new();
    for p in Param::ALL {
        let n = offsets[p.index()];
        actions.extend(std::iter::repeat_n(p.action(n.signum()), n.unsigned_abs() as usize));
    }
    actions.shuffle(rng);
    let mut out = *pose;
    for a in actions {
        out = apply_action(&out, a, steps, k)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatagenConfig {
    pub patch_side: usize,
    pub steps: StepSizes,
    pub depth_range: (f64, f64),
    pub augment: AugmentConfig,
    pub occluder_pool: usize,
    pub occluder_side: usize,
    /// Procedural backgrounds generated when no directory is given.
    pub procedural_backgrounds: usize,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            patch_side: DEFAULT_PATCH_SIDE,
            steps: StepSizes::default(),
            depth_range: (0.5, 2.0),
            augment: AugmentConfig::default(),
            occluder_pool: 256,
            occluder_side: 64,
            procedural_backgrounds: 8,
        }
    }
}

/// Shared read-only inputs of sample generation.
pub struct Resources {
    pub backgrounds: BackgroundPool,
    pub occluders: OccluderPool,
}

impl Resources {
    /// Procedural backgrounds sized for `k` unless a directory is given.
    pub fn new(
        cfg: &DatagenConfig,
        k: &CameraIntrinsics,
        background_dir: Option<&Path>,
        seed: u64,
    ) -> Result<Self, DatagenError> {
        let backgrounds = match background_dir {
            Some(dir) => BackgroundPool::load_dir(dir, k.width, k.height)?,
            None => BackgroundPool::procedural(cfg.procedural_backgrounds, k.width, k.height, seed),
        };
        Ok(Self {
            backgrounds,
            occluders: OccluderPool::generate(cfg.occluder_pool, cfg.occluder_side, seed ^ 0x6f63),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub group: SeedGroup,
    pub offsets: [i32; 6],
    pub gt: Pose,
    pub hypothesis: Pose,
    pub crop: CropState,
    pub label: Action,
    pub background: usize,
    pub augment: AugmentRecord,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub stack: PatchStack,
    pub observed: Image,
    pub rendered: RenderPatch,
    pub meta: SampleMeta,
}

/// Patch pixels whose sample position lies inside the source image.
pub fn valid_pixels(crop: &CropState, k: &CameraIntrinsics) -> Vec<bool> {
    let n = crop.patch_side;
    let step = crop.diameter / n as f64;
    let x0 = crop.center.x - crop.diameter / 2.0;
    let y0 = crop.center.y - crop.diameter / 2.0;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = y0 + (j as f64 + 0.5) * step;
        for i in 0..n {
            let x = x0 + (i as f64 + 0.5) * step;
            out.push(x >= 0.0 && y >= 0.0 && x <= k.width as f64 && y <= k.height as f64);
        }
    }
    out
}

/// One labelled training sample.
pub fn generate_sample(
    mesh: &Mesh,
    k: &CameraIntrinsics,
    cfg: &DatagenConfig,
    res: &Resources,
    group: SeedGroup,
    rng: &mut impl Rng,
) -> Result<Sample, DatagenError> {
    let sampler = PoseSampler {
        depth: cfg.depth_range,
        ..PoseSampler::default()
    };
    let gt = sampler.sample(mesh, k, rng);
    let offsets = sample_seed_offset(group, rng);
    let hypothesis = apply_offsets(&gt, &offsets, &cfg.steps, k, rng)?;
    let crop = compute_crop(&hypothesis, k, mesh.vertices(), cfg.patch_side)?;

    let (lights, material, color) = sample_lighting(&cfg.augment, &gt, rng);
    let obj = render_crop(mesh, &gt, k, &crop, &lights, &material)?;
    let bg_index = res.backgrounds.sample_index(rng);
    let bg = crop_resize(res.backgrounds.get(bg_index), &crop);
    let valid = valid_pixels(&crop, k);
    let (observed, part) = augment_patch(&obj, &bg, &valid, &cfg.augment, &res.occluders, rng);

    let rendered = render_crop(
        mesh,
        &hypothesis,
        k,
        &crop,
        &LightConfig::default(),
        &MaterialConfig::default(),
    )?;
    let stack = PatchStack::assemble(&observed, &rendered, hypothesis.depth());
    let label = oracle_decide(&hypothesis, &gt, &cfg.steps, k);
    Ok(Sample {
        stack,
        observed,
        rendered,
        meta: SampleMeta {
            group,
            offsets,
            gt,
            hypothesis,
            crop,
            label,
            background: bg_index,
            augment: part.complete(material, color, &lights),
        },
    })
}

/// Independent generator for sample `index` under `base_seed`.
pub fn sample_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Endless labelled samples cycling through the seed groups.
pub struct SampleStream<'a> {
    pub mesh: &'a Mesh,
    pub k: &'a CameraIntrinsics,
    pub cfg: &'a DatagenConfig,
    pub res: &'a Resources,
    pub groups: Vec<SeedGroup>,
    pub base_seed: u64,
    pub next: u64,
}

impl SampleStream<'_> {
    /// The next `n` samples, generated in parallel.
    pub fn batch(&mut self, n: usize) -> Result<Vec<(PatchStack, Action)>, DatagenError> {
        let start = self.next;
        self.next += n as u64;
        (start..start + n as u64)
            .into_par_iter()
            .map(|i| {
                let group = self.groups[(i % self.groups.len() as u64) as usize];
                let s = generate_sample(self.mesh, self.k, self.cfg, self.res, group, &mut sample_rng(self.base_seed, i))?;
                Ok((s.stack, s.meta.label))
            })
            .collect()
    }
}

/// Per-group sample counts, in [`SeedGroup::ALL`] order.
pub type GroupCounts = [usize; 5];

pub const MANIFEST_VERSION: u32 = 1;
pub const SHARD_SIZE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub shard: String,
    pub object: String,
    pub group: SeedGroup,
    /// Stream index of the sample generator under the base seed.
    pub stream: u64,
    pub label: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub base_seed: u64,
    pub patch_side: usize,
    pub shard_size: usize,
    pub objects: Vec<String>,
    /// Samples per group over all objects.
    pub groups: Vec<(SeedGroup, usize)>,
    pub total: usize,
    pub shards: Vec<(String, usize)>,
    pub samples: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct SampleFile<'a> {
    id: &'a str,
    object: &'a str,
    base_seed: u64,
    stream: u64,
    #[serde(flatten)]
    meta: &'a SampleMeta,
}

fn io(path: &Path, e: impl std::fmt::Display) -> DatagenError {
    DatagenError::Io(format!("{}: {e}", path.display()))
}

fn write_sample(dir: &Path, id: &str, object: &str, base_seed: u64, stream: u64, s: &Sample) -> Result<(), DatagenError> {
    s.observed.save_png(&dir.join(format!("{id}_obs.png")))?;
    s.rendered.rgb.save_png(&dir.join(format!("{id}_rgb.png")))?;
    s.rendered.depth.save_depth_png_mm(&dir.join(format!("{id}_depth.png")))?;
    s.rendered.mask.save_png(&dir.join(format!("{id}_mask.png")))?;
    let meta = SampleFile {
        id,
        object,
        base_seed,
        stream,
        meta: &s.meta,
    };
    let path = dir.join(format!("{id}.json"));
    let text = serde_json::to_string_pretty(&meta).map_err(|e| io(&path, e))?;
    fs::write(&path, text).map_err(|e| io(&path, e))
}

/// Generates `counts` samples per group for every mesh into `out`, using
/// `workers` threads. The output depends only on the inputs and
/// `base_seed`.
#[allow(clippy::too_many_arguments)]
pub fn generate_dataset(
    meshes: &[(String, Mesh)],
    k: &CameraIntrinsics,
    counts: &GroupCounts,
    out: &Path,
    workers: usize,
    base_seed: u64,
    cfg: &DatagenConfig,
    res: &Resources,
) -> Result<Manifest, DatagenError> {
    let mut jobs = Vec::new();
    for (obj, _) in meshes.iter().enumerate() {
        for (g, &n) in SeedGroup::ALL.iter().zip(counts) {
            for _ in 0..n {
                jobs.push((obj, *g));
            }
        }
    }
    let total = jobs.len();
    let shard_name = |i: usize| format!("shard_{:04}", i / SHARD_SIZE);
    for s in 0..total.div_ceil(SHARD_SIZE) {
        let dir = out.join(shard_name(s * SHARD_SIZE));
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DatagenError::Io(e.to_string()))?;
    let samples: Vec<ManifestEntry> = pool.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(i, &(obj, group))| {
                let (name, mesh) = &meshes[obj];
                let id = format!("{i:06}");
                let shard = shard_name(i);
                let s = generate_sample(mesh, k, cfg, res, group, &mut sample_rng(base_seed, i as u64))
                    .map_err(|e| DatagenError::Sample { id: id.clone(), msg: e.to_string() })?;
                write_sample(&out.join(&shard), &id, name, base_seed, i as u64, &s)?;
                Ok(ManifestEntry {
                    id,
                    shard,
                    object: name.clone(),
                    group,
                    stream: i as u64,
                    label: s.meta.label,
                })
            })
            .collect::<Result<Vec<_>, DatagenError>>()
    })?;

    let mut shards: Vec<(String, usize)> = Vec::new();
    for e in &samples {
        match shards.last_mut() {
            Some((name, n)) if *name == e.shard => *n += 1,
            _ => shards.push((e.shard.clone(), 1)),
        }
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        base_seed,
        patch_side: cfg.patch_side,
        shard_size: SHARD_SIZE,
        objects: meshes.iter().map(|(n, _)| n.clone()).collect(),
        groups: SeedGroup::ALL
            .iter()
            .map(|&g| (g, samples.iter().filter(|e| e.group == g).count()))
            .collect(),
        total,
        shards,
        samples,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io(&path, e))?;
    fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(manifest)
}

/// Reassembles a stored sample into a network input and its label.
pub fn load_sample(root: &Path, entry: &ManifestEntry) -> Result<(PatchStack, Action), DatagenError> {
    let dir = root.join(&entry.shard);
    let id = &entry.id;
    let meta_path = dir.join(format!("{id}.json"));
    let text = fs::read_to_string(&meta_path).map_err(|e| io(&meta_path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| io(&meta_path, e))?;
    let hyp: Pose = serde_json::from_value(v["hypothesis"].clone()).map_err(|e| io(&meta_path, e))?;
    let label: Action = serde_json::from_value(v["label"].clone()).map_err(|e| io(&meta_path, e))?;
    let observed = Image::load(&dir.join(format!("{id}_obs.png")))?;
    let rgb = Image::load(&dir.join(format!("{id}_rgb.png")))?;
    let depth = Image::load_depth_png_mm(&dir.join(format!("{id}_depth.png")))?;
    let mask = Image::load(&dir.join(format!("{id}_mask.png")))?.channel(0);
    let rendered = RenderPatch { rgb, depth, mask };
    Ok((PatchStack::assemble(&observed, &rendered, hyp.depth()), label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::oracle_decide;
    use crate::scene::default_camera;

    #[test]
    fn small_and_large_ranges_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for g in [SeedGroup::Small, SeedGroup::Large] {
            for _ in 0..2000 {
                let o = sample_seed_offset(g, &mut rng);
                let nz: Vec<usize> = (0..6).filter(|&i| o[i] != 0).collect();
                assert!(nz.len() <= 1);
                for &i in &nz {
                    let (lo, hi) = if g == SeedGroup::Small {
                        small_range(Param::ALL[i])
                    } else {
                        large_range(Param::ALL[i])
                    };
                    assert!((lo..=hi).contains(&o[i].abs()));
                }
            }
        }
    }

    #[test]
    fn mixed_has_one_large_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let o = sample_seed_offset(SeedGroup::Mixed, &mut rng);
            let in_small = |i: usize| {
                let (lo, hi) = small_range(Param::ALL[i]);
                o[i] == 0 || (lo..=hi).contains(&o[i].abs())
            };
            let in_large = |i: usize| {
                let (lo, hi) = large_range(Param::ALL[i]);
                (lo..=hi).contains(&o[i].abs())
            };
            // some axis is large and all others are small
            assert!((0..6).any(|b| in_large(b) && (0..6).filter(|&i| i != b).all(in_small)));
        }
    }

    #[test]
    fn sample_label_matches_oracle() {
        let mesh = Mesh::textured_cube(0.2);
        let k = default_camera();
        let cfg = DatagenConfig {
            patch_side: 64,
            occluder_pool: 8,
            procedural_backgrounds: 2,
            ..DatagenConfig::default()
        };
        let res = Resources::new(&cfg, &k, None, 3).unwrap();
        for i in 0..20 {
            let g = SeedGroup::ALL[i % 5];
            let s = generate_sample(&mesh, &k, &cfg, &res, g, &mut sample_rng(3, i as u64)).unwrap();
            assert_eq!(s.meta.label, oracle_decide(&s.meta.hypothesis, &s.meta.gt, &cfg.steps, &k));
            if s.meta.offsets == [0; 6] {
                assert_eq!(s.meta.label, Action::Stop);
            }
            assert_eq!(s.stack.side, 64);
            assert!(s.observed.is_finite());
        }
    }

    #[test]
    fn single_tx_offset_labels_minus_tx() {
        let k = default_camera();
        let mesh = Mesh::textured_cube(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gt = PoseSampler::default().sample(&mesh, &k, &mut rng);
        let hyp = apply_offsets(&gt, &[4, 0, 0, 0, 0, 0], &StepSizes::default(), &k, &mut rng).unwrap();
        assert_eq!(oracle_decide(&hyp, &gt, &StepSizes::default(), &k), Action::MinusTx);
    }
}
