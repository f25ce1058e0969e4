//! Pose metrics, the perturbation robustness sweep, shift estimation and
//! runtime accounting.

use std::time::Instant;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{apply_action, CameraIntrinsics, GeometryError, Param, Pose, StepSizes};
use crate::policy::{run_episode, LoopConfig, Policy, PolicyError, Scene};
use crate::renderer::{Image, Mesh};

/// Cap on the number of model points used by the metrics.
pub const MAX_MODEL_POINTS: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("model needs at least two distinct points")]
    DegenerateModel,
    #[error("sequence lengths differ or are empty ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least {need} decision cycles required, measured {got}")]
    TooFewCycles { need: usize, got: usize },
    #[error("invalid robustness config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoints {
    pub points: Vec<Vector3<f64>>,
    /// Largest pairwise distance, meters.
    pub diameter: f64,
}

impl ModelPoints {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, EvalError> {
        let mut diameter: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                diameter = diameter.max((a - b).norm());
            }
        }
        if points.len() < 2 || !(diameter > 0.0) {
            return Err(EvalError::DegenerateModel);
        }
        Ok(Self { points, diameter })
    }

    /// Mesh vertices, or a farthest-point subsample of them when there are
    /// more than [`MAX_MODEL_POINTS`].
    pub fn from_mesh(mesh: &Mesh) -> Result<Self, EvalError> {
        Self::new(farthest_point_subsample(mesh.vertices(), MAX_MODEL_POINTS))
    }
}

/// Greedy farthest-point sampling starting from the first point.
pub fn farthest_point_subsample(points: &[Vector3<f64>], count: usize) -> Vec<Vector3<f64>> {
    if points.len() <= count {
        return points.to_vec();
    }
    let mut chosen = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; points.len()];
    let mut next = 0;
    for _ in 0..count {
        chosen.push(points[next]);
        let p = points[next];
        let mut best = (0, -1.0);
        for (i, q) in points.iter().enumerate() {
            dist[i] = dist[i].min((q - p).norm_squared());
            if dist[i] > best.1 {
                best = (i, dist[i]);
            }
        }
        next = best.0;
    }
    chosen
}

/// Mean distance between corresponding transformed model points.
pub fn add_metric(p: &Pose, gt: &Pose, pts: &ModelPoints) -> f64 {
    let sum: f64 = pts
        .points
        .iter()
        .map(|x| (p.transform_point(x) - gt.transform_point(x)).norm())
        .sum();
    sum / pts.points.len() as f64
}

/// Mean distance from each ground-truth transformed point to the nearest
/// predicted one.
pub fn adi_metric(p: &Pose, gt: &Pose, pts: &ModelPoints) -> f64 {
    let pred: Vec<_> = pts.points.iter().map(|x| p.transform_point(x)).collect();
    let sum: f64 = pts
        .points
        .iter()
        .map(|x| {
            let g = gt.transform_point(x);
            pred.iter()
                .map(|q| (q - g).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    sum / pts.points.len() as f64
}

/// Percentage of errors strictly below `fraction · diameter`.
pub fn success_rate(errors: &[f64], diameter: f64, fraction: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let thr = fraction * diameter;
    let hits = errors.iter().filter(|&&e| e < thr).count();
    100.0 * hits as f64 / errors.len() as f64
}

/// Area under the accuracy-vs-threshold curve for thresholds in
/// `[0, max_threshold]`, as a percentage.
pub fn add_auc(errors: &[f64], max_threshold: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let sum: f64 = errors
        .iter()
        .map(|&e| (max_threshold - e.clamp(0.0, max_threshold)) / max_threshold)
        .sum();
    100.0 * sum / errors.len() as f64
}

/// Constant translation `δ` minimizing `Σ |pred_i.t + δ − gt_i.t|²`.
pub fn estimate_shift(pred: &[Pose], gt: &[Pose]) -> Result<Vector3<f64>, EvalError> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(EvalError::LengthMismatch(pred.len(), gt.len()));
    }
    let sum: Vector3<f64> = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| g.translation - p.translation)
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            out[t] = r;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    /// Deviation multiplier.
    pub delta: u32,
    pub m_max: u32,
    /// Corruption offsets are counted in steps of `steps / step_size`.
    pub step_size: f64,
    /// Decision budget per episode; runs that hit it count as failures.
    pub cap: usize,
    /// `(m_lo, m_hi, keep_fraction)`: only this fraction of scenes is run
    /// for `m` in `[m_lo, m_hi]`.
    pub keyframe_rates: Vec<(u32, u32, f64)>,
    pub seed: u64,
    pub steps: StepSizes,
    /// Convergence threshold as a fraction of the model diameter.
    pub add_fraction: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            delta: 6,
            m_max: 45,
            step_size: 3.0,
            cap: 200,
            keyframe_rates: vec![(25, 30, 0.25), (31, 45, 0.10)],
            seed: 0,
            steps: StepSizes::default(),
            add_fraction: 0.1,
        }
    }
}

impl RobustnessConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.delta < 1 {
            return Err(EvalError::InvalidConfig("delta must be at least 1".into()));
        }
        if self.cap < 1 {
            return Err(EvalError::InvalidConfig("cap must be at least 1".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(EvalError::InvalidConfig("step_size must be positive".into()));
        }
        self.steps.validate()?;
        Ok(())
    }

    /// Size of one corruption unit.
    pub fn unit_steps(&self) -> StepSizes {
        self.steps.subdivide(self.step_size)
    }

    fn keep_fraction(&self, m: u32) -> f64 {
        self.keyframe_rates
            .iter()
            .find(|(lo, hi, _)| (*lo..=*hi).contains(&m))
            .map_or(1.0, |r| r.2)
    }
}

/// Offsets every pose parameter by `delta · m` corruption units with an
/// independent random sign, applied as single unit actions in shuffled
/// order. Returns the corrupted pose and the signed unit counts.
pub fn corrupt_pose(
    gt: &Pose,
    m: u32,
    cfg: &RobustnessConfig,
    k: &CameraIntrinsics,
    rng: &mut impl Rng,
) -> Result<(Pose, [i32; 6]), GeometryError> {
    let n = (cfg.delta * m) as i32;
    let mut counts = [0i32; 6];
    let mut actions = Vec::with_capacity(6 * n as usize);
    for p in Param::ALL {
        let sign = if rng.random::<bool>() { 1 } else { -1 };
        counts[p.index()] = sign * n;
        actions.extend(std::iter::repeat_n(p.action(sign), n as usize));
    }
    actions.shuffle(rng);
    let unit = cfg.unit_steps();
    let mut pose = *gt;
    for a in actions {
        pose = apply_action(&pose, a, &unit, k)?;
    }
    Ok((pose, counts))
}

/// Input to the robustness sweep.
pub struct EvalScene<'a> {
    pub observed: &'a Image,
    pub mesh: &'a Mesh,
    pub k: &'a CameraIntrinsics,
    pub gt: Pose,
    pub points: &'a ModelPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub m: u32,
    pub runs: usize,
    /// Percentage of runs that converged; `None` without runs.
    pub success: Option<f64>,
    /// Mean decisions per run, failures counted at the cap.
    pub mean_steps: Option<f64>,
    /// Mean decisions over converged runs only.
    pub mean_steps_converged: Option<f64>,
    /// Fraction of runs that did not converge.
    pub fails: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RunOutcome {
    converged: bool,
    steps: usize,
}

/// Per-`m` convergence statistics. A run converges when the stop action
/// fires with ADD below `add_fraction` of the diameter.
pub fn robustness_sweep(
    policy: &dyn Policy,
    scenes: &[EvalScene],
    cfg: &RobustnessConfig,
) -> Result<Vec<SweepEntry>, EvalError> {
    cfg.validate()?;
    let loop_cfg = LoopConfig {
        max_steps: cfg.cap,
        steps: cfg.steps,
        ..LoopConfig::default()
    };
    let jobs: Vec<(usize, u32)> = (0..=cfg.m_max)
        .flat_map(|m| (0..scenes.len()).map(move |s| (s, m)))
        .collect();
    let outcomes: Vec<Option<RunOutcome>> = jobs
        .par_iter()
        .map(|&(si, m)| -> Result<Option<RunOutcome>, EvalError> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((si as u64) << 32) | m as u64);
            let keep = rng.random::<f64>() < cfg.keep_fraction(m);
            if !keep {
                return Ok(None);
            }
            let sc = &scenes[si];
            let failed = RunOutcome {
                converged: false,
                steps: cfg.cap,
            };
            let Ok((init, _)) = corrupt_pose(&sc.gt, m, cfg, sc.k, &mut rng) else {
                return Ok(Some(failed));
            };
            let scene = Scene {
                observed: sc.observed,
                mesh: sc.mesh,
                k: sc.k,
                gt: Some(&sc.gt),
            };
            match run_episode(policy, &scene, &init, &loop_cfg) {
                Ok(ep) => {
                    let add = add_metric(&ep.pose, &sc.gt, sc.points);
                    let converged = ep.stopped() && add < cfg.add_fraction * sc.points.diameter;
                    Ok(Some(RunOutcome {
                        converged,
                        steps: if converged { ep.trace.len() } else { cfg.cap },
                    }))
                }
                Err(PolicyError::Geometry(_)) | Err(PolicyError::Render(_)) => Ok(Some(failed)),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut entries = Vec::new();
    for m in 0..=cfg.m_max {
        let runs: Vec<RunOutcome> = jobs
            .iter()
            .zip(&outcomes)
            .filter(|((_, jm), _)| *jm == m)
            .filter_map(|(_, o)| *o)
            .collect();
        let n = runs.len();
        let conv: Vec<&RunOutcome> = runs.iter().filter(|r| r.converged).collect();
        let frac = |x: usize| (n > 0).then(|| x as f64 / n as f64);
        entries.push(SweepEntry {
            m,
            runs: n,
            success: frac(conv.len()).map(|f| 100.0 * f),
            mean_steps: (n > 0).then(|| runs.iter().map(|r| r.steps).sum::<usize>() as f64 / n as f64),
            mean_steps_converged: (!conv.is_empty())
                .then(|| conv.iter().map(|r| r.steps).sum::<usize>() as f64 / conv.len() as f64),
            fails: frac(n - conv.len()),
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeProfile {
    pub cycles: usize,
    pub episodes: usize,
    pub mean_preprocess_ms: f64,
    pub mean_inference_ms: f64,
    pub mean_total_ms: f64,
    pub mean_actions_per_frame: f64,
}

/// Minimum number of measured decision cycles.
pub const MIN_PROFILE_CYCLES: usize = 32;

/// Per-cycle wall-clock averages over one episode per initial pose.
pub fn runtime_profile(
    policy: &dyn Policy,
    scene: &Scene,
    inits: &[Pose],
    cfg: &LoopConfig,
) -> Result<RuntimeProfile, EvalError> {
    let (mut pre, mut inf, mut total, mut cycles, mut actions) = (0.0, 0.0, 0.0, 0usize, 0usize);
    for init in inits {
        let t0 = Instant::now();
        let ep = run_episode(policy, scene, init, cfg)?;
        total += t0.elapsed().as_secs_f64() * 1e3;
        pre += ep.timing.preprocess.as_secs_f64() * 1e3;
        inf += ep.timing.inference.as_secs_f64() * 1e3;
        cycles += ep.timing.cycles;
        actions += ep.trace.len();
    }
    if cycles < MIN_PROFILE_CYCLES {
        return Err(EvalError::TooFewCycles {
            need: MIN_PROFILE_CYCLES,
            got: cycles,
        });
    }
    let c = cycles as f64;
    Ok(RuntimeProfile {
        cycles,
        episodes: inits.len(),
        mean_preprocess_ms: pre / c,
        mean_inference_ms: inf / c,
        mean_total_ms: total / c,
        mean_actions_per_frame: actions as f64 / inits.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_from_4d;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand_distr::StandardNormal;

    fn random_pose(rng: &mut impl Rng) -> Pose {
        let q = [0; 4].map(|_| rng.sample::<f64, _>(StandardNormal));
        Pose::new(
            rotation_from_4d(q),
            Vector3::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(0.5..2.0),
            ),
        )
    }

    fn cube_points() -> ModelPoints {
        ModelPoints::from_mesh(&Mesh::textured_cube(0.2)).unwrap()
    }

    #[test]
    fn add_of_identical_and_translated() {
        let pts = cube_points();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_pose(&mut rng);
        assert_eq!(add_metric(&p, &p, &pts), 0.0);
        assert_eq!(adi_metric(&p, &p, &pts), 0.0);
        let mut q = p;
        q.translation.x += 0.01;
        assert!((add_metric(&q, &p, &pts) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn cube_diameter() {
        assert!((cube_points().diameter - 0.2 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn success_rate_threshold_straddle() {
        let d = 0.3;
        assert_eq!(success_rate(&[0.0, 0.0], d, 0.1), 100.0);
        assert_eq!(success_rate(&[0.09 * d, 0.11 * d], d, 0.1), 50.0);
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(add_auc(&[0.0; 5], 0.1), 100.0);
        assert_eq!(add_auc(&[0.1, 0.2, 5.0], 0.1), 0.0);
        assert!((add_auc(&[0.05], 0.1) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn shift_recovers_constant_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gt: Vec<Pose> = (0..10).map(|_| random_pose(&mut rng)).collect();
        assert_eq!(estimate_shift(&gt, &gt).unwrap(), Vector3::zeros());
        let off = Vector3::new(0.005, 0.0, -0.003);
        let pred: Vec<Pose> = gt
            .iter()
            .map(|g| Pose::new(g.rotation, g.translation + off))
            .collect();
        let d = estimate_shift(&pred, &gt).unwrap();
        assert!((d + off).norm() < 1e-12);
        assert!(estimate_shift(&pred[..2], &gt).is_err());
    }

    #[test]
    fn spearman_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&a, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&a, &[1.0; 4]), 0.0);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn farthest_point_keeps_extremes() {
        let pts: Vec<_> = (0..100).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        let s = farthest_point_subsample(&pts, 3);
        assert_eq!(s, vec![pts[0], pts[99], pts[49]]);
    }

    #[test]
    fn corrupt_zero_is_identity() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = random_pose(&mut rng);
        let (p, c) = corrupt_pose(&g, 0, &RobustnessConfig::default(), &k, &mut rng).unwrap();
        assert_eq!(p, g);
        assert_eq!(c, [0; 6]);
    }

    proptest! {
        #[test]
        fn adi_never_exceeds_add(seed in any::<u64>()) {
            let pts = cube_points();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            prop_assert!(adi_metric(&a, &b, &pts) <= add_metric(&a, &b, &pts) + 1e-15);
        }

        #[test]
        fn add_left_invariant(seed in any::<u64>()) {
            let pts = cube_points();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let t = random_pose(&mut rng);
            let d0 = add_metric(&a, &b, &pts);
            let d1 = add_metric(&a.then(&t), &b.then(&t), &pts);
            prop_assert!((d0 - d1).abs() < 1e-9);
        }

        #[test]
        fn auc_monotone(errs in proptest::collection::vec(0.0f64..0.2, 1..20), i in 0usize..20, bump in 0.0f64..0.1) {
            let i = i % errs.len();
            let mut worse = errs.clone();
            worse[i] += bump;
            prop_assert!(add_auc(&worse, 0.1) <= add_auc(&errs, 0.1) + 1e-12);
        }
    }
}
