//! Decision policies, the episode loop and frame-to-frame tracking.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::geometry::{
    apply_action, compute_crop, pose_error, pose_key, Action, CameraIntrinsics, CropState,
    GeometryError, Pose, StepSizes, DEFAULT_PATCH_SIDE,
};
use crate::renderer::{render_patch_stack, Image, Mesh, PatchStack, RenderError};

/// Scores closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("ground truth pose required at frame {0}")]
    MissingGroundTruth(usize),
    #[error("policy needs an observation patch but none was rendered")]
    MissingObservation,
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("invalid loop config: {0}")]
    InvalidConfig(String),
    #[error("decision failed: {0}")]
    Decision(String),
}

/// Everything a policy may look at when deciding.
pub struct Observation<'a> {
    pub pose: &'a Pose,
    pub k: &'a CameraIntrinsics,
    pub steps: &'a StepSizes,
    pub crop: Option<&'a CropState>,
    pub stack: Option<&'a PatchStack>,
    /// Only the oracle reads this.
    pub gt: Option<&'a Pose>,
    /// Decision index inside the current episode.
    pub step: usize,
}

/// Index of the highest score; scores within [`TIE_TOLERANCE`] of the
/// maximum tie and the lowest index wins. NaN scores never win.
pub fn argmax(scores: &[f64]) -> usize {
    let max = scores
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .position(|&v| v >= max - TIE_TOLERANCE)
        .unwrap_or(0)
}

pub trait Policy: Sync {
    /// Whether [`Policy::scores`] reads `Observation::stack`.
    fn needs_observation(&self) -> bool {
        true
    }

    /// One score per action; higher is better.
    fn scores(&self, obs: &Observation) -> Result<[f64; 13], PolicyError>;

    fn decide(&self, obs: &Observation) -> Result<Action, PolicyError> {
        let s = self.scores(obs)?;
        Ok(Action::ALL[argmax(&s)])
    }
}

/// Greedy ground-truth policy: picks the action whose result is closest to
/// the ground truth pose, stop included.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePolicy {
    /// Render the patch stack anyway (for timing or debug output).
    pub render: bool,
}

impl Policy for OraclePolicy {
    fn needs_observation(&self) -> bool {
        self.render
    }

    fn scores(&self, obs: &Observation) -> Result<[f64; 13], PolicyError> {
        let gt = obs.gt.ok_or(PolicyError::MissingGroundTruth(0))?;
        Ok(oracle_scores(obs.pose, gt, obs.steps, obs.k))
    }
}

/// Negated pose error after each candidate action. Actions that cannot be
/// applied score `-inf`.
pub fn oracle_scores(
    current: &Pose,
    gt: &Pose,
    steps: &StepSizes,
    k: &CameraIntrinsics,
) -> [f64; 13] {
    let mut out = [f64::NEG_INFINITY; 13];
    for a in Action::ALL {
        if let Ok(p) = apply_action(current, a, steps, k) {
            out[a.index()] = -pose_error(&p, gt, steps, k);
        }
    }
    out
}

pub fn oracle_decide(
    current: &Pose,
    gt: &Pose,
    steps: &StepSizes,
    k: &CameraIntrinsics,
) -> Action {
    Action::ALL[argmax(&oracle_scores(current, gt, steps, k))]
}

/// Emits the scripted action sequence in a loop, ignoring its input.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy(pub Vec<Action>);

impl ScriptedPolicy {
    /// `+tx, -tx, +tx, ...`
    pub fn alternator() -> Self {
        ScriptedPolicy(vec![Action::PlusTx, Action::MinusTx])
    }
}

impl Policy for ScriptedPolicy {
    fn needs_observation(&self) -> bool {
        false
    }

    fn scores(&self, obs: &Observation) -> Result<[f64; 13], PolicyError> {
        let mut s = [0.0; 13];
        let a = self.0[obs.step % self.0.len()];
        s[a.index()] = 1.0;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub max_steps: usize,
    pub oscillation_check: bool,
    /// Revisit detection grid, in action units.
    pub key_resolution: f64,
    pub steps: StepSizes,
    pub patch_side: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_steps: 30,
            oscillation_check: true,
            key_resolution: 0.25,
            steps: StepSizes::default(),
            patch_side: DEFAULT_PATCH_SIDE,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.max_steps == 0 {
            return Err(PolicyError::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(self.key_resolution > 0.0) {
            return Err(PolicyError::InvalidConfig("key_resolution must be positive".into()));
        }
        if self.patch_side == 0 {
            return Err(PolicyError::InvalidConfig("patch_side must be positive".into()));
        }
        self.steps.validate()?;
        Ok(())
    }
}

/// Observed image plus what is needed to render hypotheses against it.
#[derive(Clone, Copy)]
pub struct Scene<'a> {
    pub observed: &'a Image,
    pub mesh: &'a Mesh,
    pub k: &'a CameraIntrinsics,
    pub gt: Option<&'a Pose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    StopAction,
    Oscillation,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Pose the decision was taken from.
    pub pose: Pose,
    pub action: Action,
    pub crop: Option<CropState>,
    /// Pose error to the ground truth before the action, when known.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub steps: Vec<TraceStep>,
    pub terminal_reason: TerminalReason,
}

impl DecisionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    /// One JSON object per step: `{frame, step, action, pose, error?}`.
    pub fn to_json_lines(&self, frame: usize) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let mut v = serde_json::json!({
                "frame": frame,
                "step": i,
                "action": s.action,
                "pose": s.pose,
            });
            if let Some(e) = s.error {
                v["error"] = serde_json::json!(e);
            }
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Wall-clock split of an episode's decision cycles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeTiming {
    /// Crop computation and patch rendering.
    pub preprocess: Duration,
    /// Policy evaluation.
    pub inference: Duration,
    /// Whole cycles, including pose updates and bookkeeping.
    pub total: Duration,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub pose: Pose,
    pub trace: DecisionTrace,
    pub timing: EpisodeTiming,
}

impl Episode {
    pub fn stopped(&self) -> bool {
        self.trace.terminal_reason == TerminalReason::StopAction
    }
}

/// Runs the decision loop from `init` until stop, a revisited pose, or
/// `cfg.max_steps` decisions (stop included). The returned pose is the one
/// held at termination.
pub fn run_episode(
    policy: &dyn Policy,
    scene: &Scene,
    init: &Pose,
    cfg: &LoopConfig,
) -> Result<Episode, PolicyError> {
    run_episode_with(policy, scene, init, cfg, |_| {})
}

/// Like [`run_episode`], calling `on_stack` with every rendered stack.
pub fn run_episode_with(
    policy: &dyn Policy,
    scene: &Scene,
    init: &Pose,
    cfg: &LoopConfig,
    mut on_stack: impl FnMut(&PatchStack),
) -> Result<Episode, PolicyError> {
    cfg.validate()?;
    let k = scene.k;
    let key = |p: &Pose| pose_key(p, init, &cfg.steps, k, cfg.key_resolution);
    let mut seen = HashSet::new();
    seen.insert(key(init));
    let mut pose = *init;
    let mut steps = Vec::new();
    let mut reason = TerminalReason::MaxSteps;
    let mut timing = EpisodeTiming::default();
    let started = Instant::now();

    for step in 0..cfg.max_steps {
        timing.cycles += 1;
        let t0 = Instant::now();
        let (crop, stack) = if policy.needs_observation() {
            let crop = compute_crop(&pose, k, scene.mesh.vertices(), cfg.patch_side)?;
            let stack = render_patch_stack(scene.observed, scene.mesh, &pose, k, &crop)?;
            on_stack(&stack);
            (Some(crop), Some(stack))
        } else {
            (None, None)
        };
        let t1 = Instant::now();
        timing.preprocess += t1 - t0;
        let obs = Observation {
            pose: &pose,
            k,
            steps: &cfg.steps,
            crop: crop.as_ref(),
            stack: stack.as_ref(),
            gt: scene.gt,
            step,
        };
        let action = policy.decide(&obs)?;
        timing.inference += t1.elapsed();
        steps.push(TraceStep {
            pose,
            action,
            crop,
            error: scene.gt.map(|g| pose_error(&pose, g, &cfg.steps, k)),
        });
        if action.is_stop() {
            reason = TerminalReason::StopAction;
            break;
        }
        pose = apply_action(&pose, action, &cfg.steps, k)?;
        if cfg.oscillation_check && !seen.insert(key(&pose)) {
            reason = TerminalReason::Oscillation;
            break;
        }
    }
    timing.total = started.elapsed();
    Ok(Episode {
        pose,
        trace: DecisionTrace {
            steps,
            terminal_reason: reason,
        },
        timing,
    })
}

/// One video frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub observed: Image,
    pub gt: Option<Pose>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub pose: Pose,
    pub trace: DecisionTrace,
    /// Whether this frame started from its ground truth pose.
    pub reset: bool,
}

/// Frame-to-frame tracking. Each frame starts from the previous result;
/// with `reset_every = Some(r)`, frames `0, r, 2r, ...` start from their
/// ground truth instead. Without resets frame 0 starts from `init`.
pub fn track_sequence(
    policy: &dyn Policy,
    frames: &[Frame],
    mesh: &Mesh,
    k: &CameraIntrinsics,
    init: &Pose,
    reset_every: Option<usize>,
    cfg: &LoopConfig,
) -> Result<Vec<FrameResult>, PolicyError> {
    if frames.is_empty() {
        return Err(PolicyError::EmptySequence);
    }
    if reset_every == Some(0) {
        return Err(PolicyError::InvalidConfig("reset_every must be positive".into()));
    }
    let mut out: Vec<FrameResult> = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let reset = reset_every.is_some_and(|r| i % r == 0);
        let start = if reset {
            frame.gt.ok_or(PolicyError::MissingGroundTruth(i))?
        } else if let Some(prev) = out.last() {
            prev.pose
        } else {
            *init
        };
        let scene = Scene {
            observed: &frame.observed,
            mesh,
            k,
            gt: frame.gt.as_ref(),
        };
        let ep = run_episode(policy, &scene, &start, cfg).map_err(|e| match e {
            PolicyError::MissingGroundTruth(_) => PolicyError::MissingGroundTruth(i),
            e => e,
        })?;
        out.push(FrameResult {
            pose: ep.pose,
            trace: ep.trace,
            reset,
        });
    }
    Ok(out)
}
