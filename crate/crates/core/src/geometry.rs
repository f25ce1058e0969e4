//! Rigid poses, pinhole projection, crops and the discrete pose actions.
//!
//! Poses live in the camera frame (x right, y down, z forward). The thirteen
//! actions move a pose by one *action unit*:
//!
//! * `±tx`, `±ty` shift the projected object center by `tx_ty` image pixels
//!   while keeping the depth.
//! * `±tz` scales the translation along the viewing ray through the object
//!   center by `(1 + tz)^±1`, so the projected size changes by the fraction
//!   `tz` of the current bounding-box diameter and the projected center stays
//!   put.
//! * `±rx`, `±ry`, `±rz` rotate the model by `rot` degrees about camera-frame
//!   axes through the object center.
//!
//! All translation actions commute with each other and each `+a` is the exact
//! inverse of `-a`, independent of the crop it was issued from.

use std::fmt;

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Bounding-box margin applied by [`compute_crop`].
pub const CROP_MARGIN: f64 = 1.2;

/// Default side of the square patch fed to a policy.
pub const DEFAULT_PATCH_SIDE: usize = 128;

/// Smallest depth a pose may be moved to by a `tz` action.
pub const MIN_DEPTH: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point {index} lies behind the camera (z = {z})")]
    BehindCamera { index: usize, z: f64 },
    #[error("projected bounding box has zero area")]
    DegenerateProjection,
    #[error("model point set is empty")]
    EmptyModel,
    #[error("invalid action vector: {0}")]
    InvalidAction(String),
    #[error("depth underflow: action would move the object to z = {0}")]
    DepthUnderflow(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid step sizes: {0}")]
    InvalidSteps(String),
}

/// Rigid object-to-camera transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    /// Meters, camera frame.
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    q: [f64; 4],
    t: [f64; 3],
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRepr {
            q: [q.w, q.i, q.j, q.k],
            t: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl TryFrom<PoseRepr> for Pose {
    type Error = GeometryError;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        Pose::from_parts(r.q, r.t)
    }
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Identity rotation at the given translation.
    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    /// Builds a pose from a `(w, x, y, z)` quaternion and a translation.
    ///
    /// Quaternions within 1e-6 of unit norm are renormalized; anything
    /// further off is rejected.
    pub fn from_parts(q: [f64; 4], t: [f64; 3]) -> Result<Self, GeometryError> {
        if q.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite component".into()));
        }
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(GeometryError::InvalidPose(format!(
                "quaternion norm {norm} is not 1"
            )));
        }
        Ok(Self::new(
            UnitQuaternion::from_quaternion(quat),
            Vector3::new(t[0], t[1], t[2]),
        ))
    }

    pub fn depth(&self) -> f64 {
        self.translation.z
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &Pose) -> Pose {
        Pose::new(
            other.rotation * self.rotation,
            other.rotation * self.translation + other.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.inverse();
        Pose::new(r, -(r * self.translation))
    }
}

/// Pinhole camera without distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidIntrinsics(m.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("focal lengths must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive");
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return bad("cx outside the image");
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return bad("cy outside the image");
        }
        Ok(())
    }

    /// Projects a camera-frame point. The caller guarantees `p.z > 0`.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }

    /// Camera-frame point at depth `z` on the ray through pixel `uv`.
    pub fn unproject(&self, uv: &Vector2<f64>, z: f64) -> Vector3<f64> {
        Vector3::new(
            (uv.x - self.cx) / self.fx * z,
            (uv.y - self.cy) / self.fy * z,
            z,
        )
    }

    /// Intrinsics of a virtual camera that images exactly the crop window at
    /// `patch_side × patch_side` pixels.
    pub fn crop_camera(&self, crop: &CropState) -> CameraIntrinsics {
        let scale = crop.patch_side as f64 / crop.diameter;
        let x0 = crop.center.x - crop.diameter / 2.0;
        let y0 = crop.center.y - crop.diameter / 2.0;
        CameraIntrinsics {
            fx: self.fx * scale,
            fy: self.fy * scale,
            cx: (self.cx - x0) * scale,
            cy: (self.cy - y0) * scale,
            width: crop.patch_side,
            height: crop.patch_side,
        }
    }
}

/// Square image window around the projected object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropState {
    /// Pixels.
    pub center: Vector2<f64>,
    /// Side of the square window in pixels, margin included.
    pub diameter: f64,
    pub patch_side: usize,
}

impl CropState {
    pub fn new(center: Vector2<f64>, diameter: f64, patch_side: usize) -> Self {
        Self {
            center,
            diameter,
            patch_side,
        }
    }

    /// Image pixel per patch pixel.
    pub fn scale(&self) -> f64 {
        self.diameter / self.patch_side as f64
    }
}

/// One of the thirteen discrete decisions.
///
/// The declaration order is the action index used for one-hot vectors,
/// logits and every tie-break (lowest index wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "+tx")]
    PlusTx,
    #[serde(rename = "-tx")]
    MinusTx,
    #[serde(rename = "+ty")]
    PlusTy,
    #[serde(rename = "-ty")]
    MinusTy,
    #[serde(rename = "+tz")]
    PlusTz,
    #[serde(rename = "-tz")]
    MinusTz,
    #[serde(rename = "+rx")]
    PlusRx,
    #[serde(rename = "-rx")]
    MinusRx,
    #[serde(rename = "+ry")]
    PlusRy,
    #[serde(rename = "-ry")]
    MinusRy,
    #[serde(rename = "+rz")]
    PlusRz,
    #[serde(rename = "-rz")]
    MinusRz,
    #[serde(rename = "stop")]
    Stop,
}

/// Pose parameter moved by an action, in the order `tx, ty, tz, rx, ry, rz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Tx,
    Ty,
    Tz,
    Rx,
    Ry,
    Rz,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::Tx, Param::Ty, Param::Tz, Param::Rx, Param::Ry, Param::Rz];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn action(self, sign: i32) -> Action {
        let base = 2 * self.index();
        Action::ALL[if sign >= 0 { base } else { base + 1 }]
    }
}

impl Action {
    pub const COUNT: usize = 13;

    pub const ALL: [Action; 13] = [
        Action::PlusTx,
        Action::MinusTx,
        Action::PlusTy,
        Action::MinusTy,
        Action::PlusTz,
        Action::MinusTz,
        Action::PlusRx,
        Action::MinusRx,
        Action::PlusRy,
        Action::MinusRy,
        Action::PlusRz,
        Action::MinusRz,
        Action::Stop,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn is_stop(self) -> bool {
        self == Action::Stop
    }

    /// The moved parameter and the direction, `None` for stop.
    pub fn param(self) -> Option<(Param, i32)> {
        if self.is_stop() {
            return None;
        }
        let i = self.index();
        let sign = if i.is_multiple_of(2) { 1 } else { -1 };
        Some((Param::ALL[i / 2], sign))
    }

    pub fn opposite(self) -> Action {
        match self.param() {
            Some((p, s)) => p.action(-s),
            None => Action::Stop,
        }
    }

    /// Direction/stop split `(a, s)` with `a ∈ {-1,0,1}^6`, `s ∈ {0,1}`.
    pub fn components(self) -> ([i8; 6], u8) {
        let mut a = [0i8; 6];
        match self.param() {
            Some((p, s)) => {
                a[p.index()] = s as i8;
                (a, 0)
            }
            None => (a, 1),
        }
    }

    pub fn one_hot(self) -> [f32; 13] {
        let mut v = [0.0; 13];
        v[self.index()] = 1.0;
        v
    }

    /// Parses a one-hot vector; anything but exactly one `1` and twelve `0`
    /// entries is rejected.
    pub fn from_one_hot(v: &[f64]) -> Result<Action, GeometryError> {
        if v.len() != Self::COUNT {
            return Err(GeometryError::InvalidAction(format!(
                "expected 13 entries, got {}",
                v.len()
            )));
        }
        let mut hot = None;
        for (i, &x) in v.iter().enumerate() {
            if x == 1.0 {
                if hot.is_some() {
                    return Err(GeometryError::InvalidAction("more than one hot entry".into()));
                }
                hot = Some(i);
            } else if x != 0.0 {
                return Err(GeometryError::InvalidAction(format!("entry {i} = {x}")));
            }
        }
        hot.and_then(Action::from_index)
            .ok_or_else(|| GeometryError::InvalidAction("no hot entry".into()))
    }

    pub fn name(self) -> &'static str {
        [
            "+tx", "-tx", "+ty", "-ty", "+tz", "-tz", "+rx", "-rx", "+ry", "-ry", "+rz", "-rz",
            "stop",
        ][self.index()]
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sums a decision sequence into per-action counts.
pub fn accumulate_actions(actions: &[Action]) -> [u32; 13] {
    let mut v = [0u32; 13];
    for a in actions {
        v[a.index()] += 1;
    }
    v
}

/// Net signed per-parameter displacement of a decision sequence.
pub fn net_offsets(actions: &[Action]) -> [i32; 6] {
    let mut net = [0i32; 6];
    for a in actions {
        if let Some((p, s)) = a.param() {
            net[p.index()] += s;
        }
    }
    net
}

/// Size of one action per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    /// Image pixels per `tx`/`ty` action.
    pub tx_ty: f64,
    /// Fraction of the current bounding-box diameter per `tz` action.
    pub tz: f64,
    /// Degrees per rotation action.
    pub rot: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            tx_ty: 3.0,
            tz: 1.0 / 30.0,
            rot: 3.0,
        }
    }
}

impl StepSizes {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.tx_ty > 0.0 && self.tz > 0.0 && self.rot > 0.0 {
            Ok(())
        } else {
            Err(GeometryError::InvalidSteps(format!("{self:?}")))
        }
    }

    /// Step sizes such that `k` of the returned steps equal one of these.
    pub fn subdivide(&self, k: f64) -> StepSizes {
        StepSizes {
            tx_ty: self.tx_ty / k,
            tz: (1.0 + self.tz).powf(1.0 / k) - 1.0,
            rot: self.rot / k,
        }
    }

    fn log_depth_unit(&self) -> f64 {
        self.tz.ln_1p()
    }

    fn rot_rad(&self) -> f64 {
        self.rot.to_radians()
    }
}

/// Projects model-frame points through `pose` and `k`.
pub fn project_points(
    pose: &Pose,
    k: &CameraIntrinsics,
    points: &[Vector3<f64>],
) -> Result<Vec<Vector2<f64>>, GeometryError> {
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let c = pose.transform_point(p);
            if c.z <= 0.0 {
                Err(GeometryError::BehindCamera { index, z: c.z })
            } else {
                Ok(k.project(&c))
            }
        })
        .collect()
}

/// Crop around the projected axis-aligned bounding box of the model, with the
/// default [`CROP_MARGIN`].
pub fn compute_crop(
    pose: &Pose,
    k: &CameraIntrinsics,
    model_points: &[Vector3<f64>],
    patch_side: usize,
) -> Result<CropState, GeometryError> {
    compute_crop_with_margin(pose, k, model_points, patch_side, CROP_MARGIN)
}

pub fn compute_crop_with_margin(
    pose: &Pose,
    k: &CameraIntrinsics,
    model_points: &[Vector3<f64>],
    patch_side: usize,
    margin: f64,
) -> Result<CropState, GeometryError> {
    if model_points.is_empty() {
        return Err(GeometryError::EmptyModel);
    }
    let uv = project_points(pose, k, model_points)?;
    let (mut lo, mut hi) = (uv[0], uv[0]);
    for p in &uv[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let size = hi - lo;
    if !(size.x > 0.0 && size.y > 0.0) {
        return Err(GeometryError::DegenerateProjection);
    }
    Ok(CropState::new(
        (lo + hi) / 2.0,
        size.x.max(size.y) * margin,
        patch_side,
    ))
}

fn axis_of(param: Param) -> Unit<Vector3<f64>> {
    match param {
        Param::Rx => Vector3::x_axis(),
        Param::Ry => Vector3::y_axis(),
        _ => Vector3::z_axis(),
    }
}

/// Applies one action to a pose.
pub fn apply_action(
    pose: &Pose,
    action: Action,
    steps: &StepSizes,
    k: &CameraIntrinsics,
) -> Result<Pose, GeometryError> {
    let Some((param, sign)) = action.param() else {
        return Ok(*pose);
    };
    let z = pose.translation.z;
    if !(z > 0.0) {
        return Err(GeometryError::InvalidPose(format!("depth {z} is not positive")));
    }
    let s = sign as f64;
    let mut out = *pose;
    match param {
        Param::Tx => out.translation.x += s * steps.tx_ty * z / k.fx,
        Param::Ty => out.translation.y += s * steps.tx_ty * z / k.fy,
        Param::Tz => {
            out.translation *= (s * steps.log_depth_unit()).exp();
            let nz = out.translation.z;
            if !(nz > MIN_DEPTH) || !nz.is_finite() {
                return Err(GeometryError::DepthUnderflow(nz));
            }
        }
        Param::Rx | Param::Ry | Param::Rz => {
            let r = UnitQuaternion::from_axis_angle(&axis_of(param), s * steps.rot_rad());
            out.rotation = r * pose.rotation;
        }
    }
    Ok(out)
}

/// Signed offset of `pose` from `reference` along the six action parameters,
/// in action units: projected-center offsets over `tx_ty`, log-depth ratio
/// over one `tz` step, and the camera-frame rotation vector of
/// `R_pose · R_ref⁻¹` over `rot`.
pub fn pose_offsets(
    pose: &Pose,
    reference: &Pose,
    steps: &StepSizes,
    k: &CameraIntrinsics,
) -> [f64; 6] {
    let a = k.project(&pose.translation);
    let b = k.project(&reference.translation);
    let dz = (pose.translation.z / reference.translation.z).ln() / steps.log_depth_unit();
    let w = (pose.rotation * reference.rotation.inverse()).scaled_axis() / steps.rot_rad();
    [
        (a.x - b.x) / steps.tx_ty,
        (a.y - b.y) / steps.tx_ty,
        dz,
        w.x,
        w.y,
        w.z,
    ]
}

/// Action-unit weighted pose distance: one action step costs exactly 1 on
/// any parameter. Symmetric in its pose arguments.
///
/// Both poses must have positive depth. The crop does not enter the
/// distance: the chosen action units make it crop independent.
pub fn pose_error(p: &Pose, gt: &Pose, steps: &StepSizes, k: &CameraIntrinsics) -> f64 {
    pose_offsets(p, gt, steps, k).iter().map(|v| v.abs()).sum()
}

/// Quantized pose coordinates relative to `reference`, used to detect
/// revisits inside one episode.
pub fn pose_key(
    pose: &Pose,
    reference: &Pose,
    steps: &StepSizes,
    k: &CameraIntrinsics,
    resolution: f64,
) -> [i64; 6] {
    let o = pose_offsets(pose, reference, steps, k);
    let mut key = [0i64; 6];
    for (dst, v) in key.iter_mut().zip(o) {
        *dst = (v / resolution).round() as i64;
    }
    key
}

/// Rotation from a uniformly distributed point on the unit 3-sphere.
pub fn rotation_from_4d(v: [f64; 4]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::new(v[0], v[1], v[2], v[3]))
}
