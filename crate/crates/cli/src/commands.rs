use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use pose_act::datagen::{
    apply_offsets, generate_dataset, load_sample, sample_rng, sample_seed_offset, DatagenConfig, Manifest,
    Resources, SampleStream, SeedGroup,
};
use pose_act::detection::{detect, DetectConfig};
use pose_act::eval::{
    adi_metric, add_auc, add_metric, estimate_shift, robustness_sweep, runtime_profile, success_rate, EvalScene,
    ModelPoints, RobustnessConfig,
};
use pose_act::geometry::{compute_crop, CameraIntrinsics, Pose, DEFAULT_PATCH_SIDE};
use pose_act::network::{load_checkpoint, save_checkpoint, ArchConfig, NetworkPolicy, Params, TrainConfig};
use pose_act::policy::{run_episode, track_sequence, LoopConfig, OraclePolicy, Policy, Scene};
use pose_act::renderer::{render_patch_stack, Image, Mesh};
use pose_act::scene::{default_camera, moving_sequence, synthetic_scene, PoseSampler};
use pose_act::training::{train_on_stream, train_with, ReplayConfig, TrainError};

use crate::config::Settings;
use crate::{Cli, Command, PolicySpec, SceneArgs};

/// Side length of the built-in cube, meters.
const CUBE_SIDE: f64 = 0.2;

struct Ctx {
    settings: Settings,
    seed: u64,
    workers: usize,
    policy: PolicySpec,
}

pub fn run(cli: Cli) -> Result<()> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(0);
    settings.record("seed", &seed);
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    ensure!(workers >= 1, "--workers must be at least 1");
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("starting worker threads")?;
    let policy = cli.policy.unwrap_or(PolicySpec::Oracle);
    settings.record(
        "policy",
        &match &policy {
            PolicySpec::Oracle => "oracle".to_string(),
            PolicySpec::Network(p) => format!("network:{}", p.display()),
        },
    );
    let mut ctx = Ctx {
        settings,
        seed,
        workers,
        policy,
    };
    match cli.command {
        Command::GenData {
            mesh,
            backgrounds,
            out,
            per_group,
            counts,
            patch_side,
        } => gen_data(&mut ctx, mesh, backgrounds, out, per_group, counts, patch_side),
        Command::Train {
            scene,
            data,
            out,
            steps,
            batch_size,
            lr,
            replay_capacity,
            replay_refresh,
            log_every,
        } => {
            let t = TrainArgs {
                steps,
                batch_size,
                lr,
                replay_capacity,
                replay_refresh,
                log_every,
            };
            train(&mut ctx, scene, data, out, t)
        }
        Command::Track {
            scene,
            frames,
            reset_every,
            r#static,
            trace,
            out,
            ..
        } => track(&mut ctx, scene, frames, reset_every, r#static, trace, out),
        Command::Detect {
            scene,
            grid_spacing,
            rotations,
            debug_dir,
            out,
            ..
        } => detect_cmd(&mut ctx, scene, grid_spacing, rotations, debug_dir, out),
        Command::Eval {
            scene,
            scenes,
            symmetric,
            csv,
            out,
        } => eval_cmd(&mut ctx, scene, scenes, symmetric, csv, out),
        Command::Robustness {
            scene,
            scenes,
            m_max,
            delta,
            cap,
            out,
        } => robustness(&mut ctx, scene, scenes, m_max, delta, cap, out),
        Command::RenderDebug { scene, out } => render_debug(&mut ctx, scene, out),
    }
}

fn camera(s: &mut Settings) -> Result<CameraIntrinsics> {
    let d = default_camera();
    let k = CameraIntrinsics::new(
        s.get("camera.fx", None, d.fx)?,
        s.get("camera.fy", None, d.fy)?,
        s.get("camera.cx", None, d.cx)?,
        s.get("camera.cy", None, d.cy)?,
        s.get("camera.width", None, d.width)?,
        s.get("camera.height", None, d.height)?,
    );
    k.validate()?;
    Ok(k)
}

fn load_mesh(spec: &str) -> Result<Mesh> {
    if spec == "cube" {
        return Ok(Mesh::textured_cube(CUBE_SIDE));
    }
    Mesh::load_obj(Path::new(spec), None).with_context(|| format!("loading mesh {spec}"))
}

fn mesh_name(spec: &str) -> String {
    Path::new(spec)
        .file_stem()
        .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_report(out: Option<&Path>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Policy, loop settings and the mesh/background inputs shared by the
/// inference commands.
struct Inference {
    policy: Box<dyn Policy>,
    loop_cfg: LoopConfig,
    mesh: Mesh,
    mesh_name: String,
    k: CameraIntrinsics,
    backgrounds: Resources,
}

fn inference(ctx: &mut Ctx, a: &SceneArgs) -> Result<Inference> {
    let s = &mut ctx.settings;
    let k = camera(s)?;
    let mesh_spec: String = s.get("paths.mesh", a.mesh.clone(), "cube".into())?;
    let mesh = load_mesh(&mesh_spec)?;
    let (policy, ckpt_side): (Box<dyn Policy>, Option<usize>) = match &ctx.policy {
        PolicySpec::Oracle => (Box::new(OraclePolicy::default()), None),
        PolicySpec::Network(p) => {
            let (params, meta) = load_checkpoint::<f32>(p).with_context(|| format!("loading {}", p.display()))?;
            let side = meta.get("patch_side").and_then(Value::as_u64).map(|v| v as usize);
            (Box::new(NetworkPolicy::new(params)), side)
        }
    };
    let loop_cfg = LoopConfig {
        max_steps: s.get("loop.max_steps", a.max_steps, LoopConfig::default().max_steps)?,
        patch_side: s.get("loop.patch_side", a.patch_side, ckpt_side.unwrap_or(DEFAULT_PATCH_SIDE))?,
        ..LoopConfig::default()
    };
    loop_cfg.validate()?;
    let bg_dir: Option<PathBuf> = s.get_opt("paths.backgrounds", a.backgrounds.clone())?;
    let dcfg = DatagenConfig {
        occluder_pool: 1,
        ..DatagenConfig::default()
    };
    let backgrounds = Resources::new(&dcfg, &k, bg_dir.as_deref(), ctx.seed)?;
    Ok(Inference {
        policy,
        loop_cfg,
        mesh_name: mesh_name(&mesh_spec),
        mesh,
        k,
        backgrounds,
    })
}

impl Inference {
    /// Seeded synthetic scene number `i`.
    fn scene(&self, seed: u64, i: u64, sampler: &PoseSampler) -> Result<(Image, Pose)> {
        let mut rng = sample_rng(seed, i);
        let bg = self.backgrounds.backgrounds.sample(&mut rng).clone();
        Ok(synthetic_scene(&self.mesh, &self.k, Some(&bg), sampler, &mut rng)?)
    }
}

fn log_config(ctx: &Ctx, command: &str) -> Value {
    let v = json!({ "command": command, "settings": ctx.settings.resolved });
    log::info!("resolved config: {v}");
    v
}

#[allow(clippy::too_many_arguments)]
fn gen_data(
    ctx: &mut Ctx,
    meshes: Vec<String>,
    backgrounds: Option<PathBuf>,
    out: PathBuf,
    per_group: Option<usize>,
    counts: Option<Vec<usize>>,
    patch_side: Option<usize>,
) -> Result<()> {
    let s = &mut ctx.settings;
    let k = camera(s)?;
    let specs = if meshes.is_empty() {
        vec![s.get("paths.mesh", None, "cube".to_string())?]
    } else {
        meshes
    };
    s.record("paths.mesh", &specs);
    let per_group = s.get("datagen.per_group", per_group, 1000usize)?;
    let counts: [usize; 5] = match counts {
        Some(c) => c.try_into().map_err(|_| anyhow::anyhow!("--counts needs five values"))?,
        None => [per_group; 5],
    };
    s.record("datagen.counts", &counts);
    let cfg = DatagenConfig {
        patch_side: s.get("loop.patch_side", patch_side, DEFAULT_PATCH_SIDE)?,
        occluder_pool: s.get("datagen.occluder_pool", None, DatagenConfig::default().occluder_pool)?,
        procedural_backgrounds: s.get(
            "datagen.procedural_backgrounds",
            None,
            DatagenConfig::default().procedural_backgrounds,
        )?,
        ..DatagenConfig::default()
    };
    let bg_dir: Option<PathBuf> = s.get_opt("paths.backgrounds", backgrounds)?;
    log_config(ctx, "gen-data");
    let mut names = Vec::new();
    let mut loaded = Vec::new();
    for spec in &specs {
        let name = mesh_name(spec);
        ensure!(!names.contains(&name), "duplicate object name {name}");
        names.push(name.clone());
        loaded.push((name, load_mesh(spec)?));
    }
    let res = Resources::new(&cfg, &k, bg_dir.as_deref(), ctx.seed)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = generate_dataset(&loaded, &k, &counts, &out, ctx.workers, ctx.seed, &cfg, &res)?;
    log::info!("wrote {} samples to {}", manifest.total, out.display());
    write_report(
        None,
        &json!({ "manifest": out.join("manifest.json"), "total": manifest.total, "groups": manifest.groups }),
    )
}

struct TrainArgs {
    steps: Option<u64>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    replay_capacity: Option<usize>,
    replay_refresh: Option<usize>,
    log_every: u64,
}

fn train(ctx: &mut Ctx, a: SceneArgs, data: Option<PathBuf>, out: PathBuf, t: TrainArgs) -> Result<()> {
    let s = &mut ctx.settings;
    let k = camera(s)?;
    let d = TrainConfig::default();
    let tcfg = TrainConfig {
        total_steps: s.get("train.steps", t.steps, 10_000)?,
        batch_size: s.get("train.batch_size", t.batch_size, d.batch_size)?,
        lr: s.get("train.lr", t.lr, d.lr)?,
        ..d
    };
    let replay = ReplayConfig {
        capacity: s.get("train.replay_capacity", t.replay_capacity, ReplayConfig::default().capacity)?,
        refresh: s.get("train.replay_refresh", t.replay_refresh, ReplayConfig::default().refresh)?,
        seed: ctx.seed,
    };
    let mut params = Params::<f32>::init(ArchConfig::default(), &mut ChaCha8Rng::seed_from_u64(ctx.seed));
    let progress = |step: u64, loss: f64| log::info!("step {step} loss {loss:.4}");
    let (log, side, source) = match data {
        Some(dir) => {
            s.record("train.data", &dir);
            log_config(ctx, "train");
            let path = dir.join("manifest.json");
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let manifest: Manifest = serde_json::from_str(&text).context("parsing manifest")?;
            let samples = manifest
                .samples
                .iter()
                .map(|e| load_sample(&dir, e))
                .collect::<Result<Vec<_>, _>>()?;
            let log = train_with(&mut params, samples, None, &tcfg, &replay, t.log_every, progress)?;
            (log, manifest.patch_side, json!({ "dataset": dir }))
        }
        None => {
            let mesh_spec: String = s.get("paths.mesh", a.mesh.clone(), "cube".into())?;
            let dcfg = DatagenConfig {
                patch_side: s.get("loop.patch_side", a.patch_side, DEFAULT_PATCH_SIDE)?,
                ..DatagenConfig::default()
            };
            let bg_dir: Option<PathBuf> = s.get_opt("paths.backgrounds", a.backgrounds.clone())?;
            log_config(ctx, "train");
            let mesh = load_mesh(&mesh_spec)?;
            let res = Resources::new(&dcfg, &k, bg_dir.as_deref(), ctx.seed)?;
            let mut stream = SampleStream {
                mesh: &mesh,
                k: &k,
                cfg: &dcfg,
                res: &res,
                groups: SeedGroup::ALL.to_vec(),
                base_seed: ctx.seed,
                next: 0,
            };
            let log = train_on_stream(&mut params, &mut stream, &tcfg, &replay, t.log_every, progress)
                .map_err(|e: TrainError| anyhow::anyhow!(e))?;
            (log, dcfg.patch_side, json!({ "mesh": mesh_spec }))
        }
    };
    let meta = json!({
        "patch_side": side,
        "seed": ctx.seed,
        "train": tcfg,
        "replay": replay,
        "source": source,
        "final_loss": log.losses.last(),
    });
    save_checkpoint(&params, meta, &out)?;
    write_report(None, &json!({ "checkpoint": out, "steps": log.steps, "losses": log.losses }))
}

fn track(
    ctx: &mut Ctx,
    a: SceneArgs,
    frames: usize,
    reset_every: Option<usize>,
    still: bool,
    trace: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    ensure!(frames > 0, "--frames must be positive");
    let inf = inference(ctx, &a)?;
    ctx.settings.record("track.frames", &frames);
    ctx.settings.record("track.reset_every", &reset_every);
    ctx.settings.record("track.static", &still);
    let config = log_config(ctx, "track");
    let sampler = PoseSampler {
        depth: (0.8, 1.2),
        ..PoseSampler::default()
    };
    let (_, start) = inf.scene(ctx.seed, 0, &sampler)?;
    let mut rng = sample_rng(ctx.seed, 1);
    let bg = inf.backgrounds.backgrounds.sample(&mut rng).clone();
    let (velocity, spin) = if still {
        (Vector3::zeros(), Vector3::zeros())
    } else {
        (Vector3::new(0.001, -0.0005, 0.002), Vector3::new(0.0, 0.01, 0.005))
    };
    let seq = moving_sequence(&inf.mesh, &inf.k, &start, frames, velocity, spin, Some(&bg))?;
    let results = track_sequence(inf.policy.as_ref(), &seq, &inf.mesh, &inf.k, &start, reset_every, &inf.loop_cfg)?;
    let pts = ModelPoints::from_mesh(&inf.mesh)?;
    let mut lines = String::new();
    let mut per_frame = Vec::new();
    let mut resets = Vec::new();
    let mut errors = Vec::new();
    for (i, (r, f)) in results.iter().zip(&seq).enumerate() {
        if r.reset {
            log::info!("frame {i}: reset to ground truth");
            resets.push(i);
        }
        lines.push_str(&r.trace.to_json_lines(i));
        let gt = f.gt.expect("synthetic frames carry ground truth");
        let add = add_metric(&r.pose, &gt, &pts);
        errors.push(add);
        per_frame.push(json!({
            "frame": i,
            "reset": r.reset,
            "decisions": r.trace.len(),
            "terminal": r.trace.terminal_reason,
            "add": add,
        }));
    }
    if let Some(p) = trace {
        fs::write(&p, lines).with_context(|| format!("writing {}", p.display()))?;
    }
    let decisions: usize = results.iter().map(|r| r.trace.len()).sum();
    write_report(
        out.as_deref(),
        &json!({
            "config": config,
            "object": inf.mesh_name,
            "frames": frames,
            "resets": resets,
            "mean_decisions_per_frame": decisions as f64 / frames as f64,
            "success_at_0.1d": success_rate(&errors, pts.diameter, 0.1),
            "per_frame": per_frame,
        }),
    )
}

fn detect_cmd(
    ctx: &mut Ctx,
    a: SceneArgs,
    grid_spacing: Option<f64>,
    rotations: Option<usize>,
    debug_dir: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let inf = inference(ctx, &a)?;
    let s = &mut ctx.settings;
    let d = DetectConfig::default();
    let dcfg = DetectConfig {
        grid_spacing: s.get("detect.grid_spacing", grid_spacing, d.grid_spacing)?,
        probe_depth: s.get("detect.probe_depth", None, d.probe_depth)?,
        rotations: s.get("detect.rotations", rotations, d.rotations)?,
        rotation_cap: s.get("detect.rotation_cap", None, d.rotation_cap)?,
        smoothing: None,
    };
    let config = log_config(ctx, "detect");
    let (img, gt) = inf.scene(ctx.seed, 0, &PoseSampler::default())?;
    let scene = Scene {
        observed: &img,
        mesh: &inf.mesh,
        k: &inf.k,
        gt: Some(&gt),
    };
    let (det, pose) = detect(inf.policy.as_ref(), &scene, &dcfg, &inf.loop_cfg)?;
    let true_center = inf.k.project(&gt.translation);
    let pts = ModelPoints::from_mesh(&inf.mesh)?;
    if let Some(dir) = debug_dir {
        fs::create_dir_all(&dir)?;
        let heat = det.map.heatmap();
        let g = det.map.grid;
        let up = Image::from_fn(inf.k.width, inf.k.height, 1, |x, y, _| {
            let i = ((x as f64 - g.origin[0]) / g.spacing + 0.5).floor().clamp(0.0, (g.nx - 1) as f64) as usize;
            let j = ((y as f64 - g.origin[1]) / g.spacing + 0.5).floor().clamp(0.0, (g.ny - 1) as f64) as usize;
            heat.get(i, j, 0)
        });
        up.save_png(&dir.join("divergence.png"))?;
        img.save_png(&dir.join("observed.png"))?;
        fs::write(dir.join("seeds.json"), serde_json::to_string_pretty(&det.field)?)?;
    }
    write_report(
        out.as_deref(),
        &json!({
            "config": config,
            "object": inf.mesh_name,
            "center": [det.crop.center.x, det.crop.center.y],
            "diameter": det.crop.diameter,
            "valid_seeds": det.field.valid_count(),
            "translation": det.translation,
            "pose": pose,
            "gt": gt,
            "gt_center": [true_center.x, true_center.y],
            "center_error_px": (det.crop.center - true_center).norm(),
            "add": add_metric(&pose, &gt, &pts),
            "diameter_m": pts.diameter,
        }),
    )
}

fn eval_cmd(
    ctx: &mut Ctx,
    a: SceneArgs,
    scenes: usize,
    symmetric: bool,
    csv: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    ensure!(scenes > 0, "--scenes must be positive");
    let inf = inference(ctx, &a)?;
    ctx.settings.record("eval.scenes", &scenes);
    ctx.settings.record("eval.symmetric", &symmetric);
    let config = log_config(ctx, "eval");
    let pts = ModelPoints::from_mesh(&inf.mesh)?;
    let metric = if symmetric { adi_metric } else { add_metric };
    let mut errors = Vec::new();
    let (mut preds, mut gts) = (Vec::new(), Vec::new());
    let mut rows = vec!["scene,group,decisions,terminal,error_m".to_string()];
    let mut profile_input = None;
    for i in 0..scenes {
        let (img, gt) = inf.scene(ctx.seed, i as u64, &PoseSampler::default())?;
        let group = [SeedGroup::Small, SeedGroup::Large][i % 2];
        let mut rng = sample_rng(ctx.seed ^ 0x5eed, i as u64);
        let init = apply_offsets(&gt, &sample_seed_offset(group, &mut rng), &inf.loop_cfg.steps, &inf.k, &mut rng)?;
        let scene = Scene {
            observed: &img,
            mesh: &inf.mesh,
            k: &inf.k,
            gt: Some(&gt),
        };
        let ep = run_episode(inf.policy.as_ref(), &scene, &init, &inf.loop_cfg)?;
        let e = metric(&ep.pose, &gt, &pts);
        rows.push(format!(
            "{i},{},{},{},{e}",
            group.name(),
            ep.trace.len(),
            serde_json::to_value(ep.trace.terminal_reason)?.as_str().unwrap_or("")
        ));
        errors.push(e);
        preds.push(ep.pose);
        gts.push(gt);
        if i == 0 {
            profile_input = Some((img, gt, init));
        }
    }
    if let Some(p) = csv {
        fs::write(&p, rows.join("\n") + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let shift = estimate_shift(&preds, &gts)?;
    let runtime = {
        let (img, gt, init) = profile_input.expect("at least one scene");
        let scene = Scene {
            observed: &img,
            mesh: &inf.mesh,
            k: &inf.k,
            gt: Some(&gt),
        };
        let inits = vec![init; 32];
        runtime_profile(inf.policy.as_ref(), &scene, &inits, &inf.loop_cfg)
            .ok()
            .map(|r| serde_json::to_value(r).unwrap_or(Value::Null))
    };
    let name = if symmetric { "adi" } else { "add" };
    write_report(
        out.as_deref(),
        &json!({
            "config": config,
            "metric": name,
            "per_object": {
                inf.mesh_name.clone(): {
                    "add_auc": add_auc(&errors, 0.1),
                    "success_at_0.1d": success_rate(&errors, pts.diameter, 0.1),
                    "shift_mm": [shift.x * 1e3, shift.y * 1e3, shift.z * 1e3],
                    "episodes": scenes,
                }
            },
            "runtime": runtime,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn robustness(
    ctx: &mut Ctx,
    a: SceneArgs,
    scenes: Option<usize>,
    m_max: Option<u32>,
    delta: Option<u32>,
    cap: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let inf = inference(ctx, &a)?;
    let s = &mut ctx.settings;
    let d = RobustnessConfig::default();
    let n = s.get("robustness.scenes", scenes, 3usize)?;
    ensure!(n > 0, "--scenes must be positive");
    let cfg = RobustnessConfig {
        delta: s.get("robustness.delta", delta, d.delta)?,
        m_max: s.get("robustness.m_max", m_max, d.m_max)?,
        cap: s.get("robustness.cap", cap, d.cap)?,
        seed: ctx.seed,
        ..d
    };
    cfg.validate()?;
    let config = log_config(ctx, "robustness");
    let pts = ModelPoints::from_mesh(&inf.mesh)?;
    let data = (0..n as u64)
        .map(|i| inf.scene(ctx.seed, i, &PoseSampler::default()))
        .collect::<Result<Vec<_>>>()?;
    let eval_scenes: Vec<EvalScene> = data
        .iter()
        .map(|(img, gt)| EvalScene {
            observed: img,
            mesh: &inf.mesh,
            k: &inf.k,
            gt: *gt,
            points: &pts,
        })
        .collect();
    let sweep = robustness_sweep(inf.policy.as_ref(), &eval_scenes, &cfg)?;
    write_report(
        out.as_deref(),
        &json!({ "config": config, "object": inf.mesh_name, "robustness": cfg, "sweep": sweep }),
    )
}

fn render_debug(ctx: &mut Ctx, a: SceneArgs, out: PathBuf) -> Result<()> {
    let inf = inference(ctx, &a)?;
    log_config(ctx, "render-debug");
    let (img, gt) = inf.scene(ctx.seed, 0, &PoseSampler::default())?;
    let mut rng = sample_rng(ctx.seed, 1);
    let hyp = apply_offsets(
        &gt,
        &sample_seed_offset(SeedGroup::RandomSmall, &mut rng),
        &inf.loop_cfg.steps,
        &inf.k,
        &mut rng,
    )?;
    let crop = compute_crop(&hyp, &inf.k, inf.mesh.vertices(), inf.loop_cfg.patch_side)?;
    let stack = render_patch_stack(&img, &inf.mesh, &hyp, &inf.k, &crop)?;
    fs::create_dir_all(&out)?;
    img.save_png(&out.join("scene.png"))?;
    stack.rgb(0).save_png(&out.join("patch_observed.png"))?;
    stack.rgb(3).save_png(&out.join("patch_rendered.png"))?;
    let plane = |c: usize| Image::from_fn(stack.side, stack.side, 1, |x, y, _| stack.get(c, x, y).clamp(0.0, 1.0));
    plane(6).save_png(&out.join("patch_depth.png"))?;
    plane(7).save_png(&out.join("patch_mask.png"))?;
    let mut f = fs::File::create(out.join("poses.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&json!({ "gt": gt, "hypothesis": hyp, "crop": crop }))?)?;
    Ok(())
}
