//! Deterministic pinhole scene simulator.
//!
//! Objects are rigid cuboids translating at constant velocity and turning
//! about the vertical axis. Each key frame renders every object as the
//! axis-aligned box around its eight projected corners, and the simulator
//! reports the exact motion in depth of the cuboid centre alongside. That
//! exact value is the reference every approximation in [`crate::ttc`] is
//! measured against.
//!
//! Cuboid axes follow KITTI: at yaw 0 the length runs along camera X and
//! the width along camera Z.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::scene::{from_json, IntrinsicsDoc};
use crate::ingest::IngestError;
use crate::ttc::tau_from_eta;
use crate::types::{
    AnnotationMethod, BBox, CameraIntrinsics, Dimensions, Frame, InvariantError, Location,
    MiDAnnotation, ObjectInstance, TrackedSequence,
};

pub const SCENE_SPEC_FORMAT: &str = "ottc-scene-spec v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("degenerate scene spec: {0}")]
    DegenerateSpec(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// Which part of the validation suite a scene belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneFamily {
    #[default]
    Custom,
    /// Zero-depth plates facing the camera, moving along their line of sight.
    Plate,
    /// Cuboids with a fixed yaw of ±10° or ±30°.
    ConstantYaw,
    /// Cuboids with a nonzero yaw rate, rendered at several key-frame rates.
    Rotating,
    /// Objects moving parallel to the image plane (`Vz = 0`).
    LateralMover,
    /// Cuboids whose projected orientation sits near 45°.
    NearSingular,
}

impl SceneFamily {
    pub const ALL: [SceneFamily; 6] = [
        Self::Custom,
        Self::Plate,
        Self::ConstantYaw,
        Self::Rotating,
        Self::LateralMover,
        Self::NearSingular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Custom => "custom",
            Self::Plate => "plate",
            Self::ConstantYaw => "constant-yaw",
            Self::Rotating => "rotating",
            Self::LateralMover => "lateral-mover",
            Self::NearSingular => "near-singular",
        }
    }
}

impl std::str::FromStr for SceneFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown scene family {s:?}"))
    }
}

/// Cuboid extent in meters. Width or length may be zero (a plate), not both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuboidSize {
    pub height: f64,
    pub width: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub track_id: u32,
    pub category: String,
    /// Cuboid centre at `t = 0`, camera frame, meters.
    pub initial_position: [f64; 3],
    /// m/s.
    pub velocity: [f64; 3],
    pub size: CuboidSize,
    /// Rotation about camera Y at `t = 0`, radians.
    pub yaw0: f64,
    /// rad/s.
    pub yaw_rate: f64,
}

impl SimObject {
    pub fn position_at(&self, t: f64) -> Location {
        let [x, y, z] = self.initial_position;
        let [vx, vy, vz] = self.velocity;
        Location::new(x + vx * t, y + vy * t, z + vz * t)
    }

    pub fn yaw_at(&self, t: f64) -> f64 {
        self.yaw0 + self.yaw_rate * t
    }

    /// Signed rate of change of the centre distance at `t`.
    pub fn range_rate_at(&self, t: f64) -> f64 {
        let p = self.position_at(t);
        let [vx, vy, vz] = self.velocity;
        (p.x * vx + p.y * vy + p.z * vz) / p.norm()
    }

    /// The eight cuboid corners at time `t`.
    pub fn corners_at(&self, t: f64) -> [Location; 8] {
        let c = self.position_at(t);
        let (sin, cos) = self.yaw_at(t).sin_cos();
        let CuboidSize {
            height,
            width,
            length,
        } = self.size;
        let mut out = [c; 8];
        let mut i = 0;
        for dx in [-length / 2.0, length / 2.0] {
            for dy in [-height / 2.0, height / 2.0] {
                for dz in [-width / 2.0, width / 2.0] {
                    out[i] = Location::new(
                        c.x + cos * dx + sin * dz,
                        c.y + dy,
                        c.z - sin * dx + cos * dz,
                    );
                    i += 1;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub sequence_id: String,
    pub family: SceneFamily,
    pub intrinsics: CameraIntrinsics,
    pub kfps: f64,
    pub n_frames: u32,
    pub objects: Vec<SimObject>,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::DegenerateSpec(msg));
        if self.n_frames == 0 {
            return bad("n_frames must be >= 1".into());
        }
        if !(self.kfps > 0.0 && self.kfps.is_finite()) {
            return bad(format!("kfps {} is not positive", self.kfps));
        }
        let mut ids = std::collections::HashSet::new();
        for o in &self.objects {
            if !ids.insert(o.track_id) {
                return bad(format!("track {} appears twice", o.track_id));
            }
            let finite = o
                .initial_position
                .iter()
                .chain(&o.velocity)
                .chain([&o.yaw0, &o.yaw_rate])
                .all(|v| v.is_finite());
            if !finite {
                return bad(format!("track {} has a non-finite parameter", o.track_id));
            }
            if o.initial_position[2] <= 0.0 {
                return bad(format!(
                    "track {} starts at Z = {} (not in front of the camera)",
                    o.track_id, o.initial_position[2]
                ));
            }
            let s = o.size;
            let sizes_ok = s.height > 0.0
                && s.width >= 0.0
                && s.length >= 0.0
                && (s.width > 0.0 || s.length > 0.0)
                && [s.height, s.width, s.length].iter().all(|v| v.is_finite());
            if !sizes_ok {
                return bad(format!(
                    "track {} has size {}x{}x{}; need H > 0 and W or L > 0",
                    o.track_id, s.height, s.width, s.length
                ));
            }
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.kfps
    }

    pub fn time_of(&self, frame: u32) -> f64 {
        f64::from(frame) / self.kfps
    }
}

/// A simulated sequence and its exact annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub sequence: TrackedSequence,
    pub exact: Vec<MiDAnnotation>,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Full (unclipped) image box of an object, `None` if any corner is not in
/// front of the camera.
pub fn render_box(cam: &CameraIntrinsics, object: &SimObject, t: f64) -> Option<[f64; 4]> {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for corner in object.corners_at(t) {
        let (u, v) = cam.project(corner)?;
        b[0] = b[0].min(u);
        b[1] = b[1].min(v);
        b[2] = b[2].max(u);
        b[3] = b[3].max(v);
    }
    Some(b)
}

fn render_instance(
    spec: &SceneSpec,
    object: &SimObject,
    frame: u32,
) -> Result<Option<ObjectInstance>, InvariantError> {
    let t = spec.time_of(frame);
    let center = object.position_at(t);
    if center.z <= 0.0 {
        return Ok(None);
    }
    let Some(full) = render_box(&spec.intrinsics, object, t) else {
        return Ok(None);
    };
    let (w, h) = spec.intrinsics.image_size();
    let clipped = [
        full[0].max(0.0),
        full[1].max(0.0),
        full[2].min(f64::from(w)),
        full[3].min(f64::from(h)),
    ];
    let Ok(bbox) = BBox::new(clipped[0], clipped[1], clipped[2], clipped[3]) else {
        return Ok(None);
    };
    let full_area = (full[2] - full[0]) * (full[3] - full[1]);
    let truncated = (1.0 - bbox.area() / full_area).clamp(0.0, 1.0);
    let yaw = object.yaw_at(t);
    let mut inst = ObjectInstance::new(frame, object.track_id, object.category.clone(), bbox)?
        .with_location(center)?
        .with_rotation_y(wrap_angle(yaw))?
        .with_alpha(wrap_angle(yaw - center.x.atan2(center.z)))?
        .with_range_rate(object.range_rate_at(t))?
        .with_truncation(truncated)?;
    if let Ok(d) = Dimensions::new(object.size.height, object.size.width, object.size.length) {
        inst = inst.with_dimensions(d);
    }
    Ok(Some(inst))
}

/// Renders the scene and computes exact annotations.
///
/// An object is omitted from a frame when its centre or any corner is not
/// in front of the camera, or when its box lies entirely outside the image.
/// An exact annotation is emitted at frame `k` whenever the object is
/// rendered at both `k` and `k + 1`.
pub fn simulate(spec: &SceneSpec) -> Result<SimOutput, SimError> {
    spec.validate()?;
    let period = spec.period();
    let mut frames = Vec::with_capacity(spec.n_frames as usize);
    let mut rendered: Vec<Vec<Option<ObjectInstance>>> = Vec::with_capacity(spec.n_frames as usize);
    for k in 0..spec.n_frames {
        let row = spec
            .objects
            .iter()
            .map(|o| render_instance(spec, o, k))
            .collect::<Result<Vec<_>, _>>()?;
        frames.push(Frame::new(k, row.iter().flatten().cloned().collect())?);
        rendered.push(row);
    }
    let mut exact = Vec::new();
    for k in 0..spec.n_frames.saturating_sub(1) {
        for (i, object) in spec.objects.iter().enumerate() {
            let (Some(now), Some(_)) = (&rendered[k as usize][i], &rendered[k as usize + 1][i]) else {
                continue;
            };
            let lambda0 = object.position_at(spec.time_of(k)).norm();
            let lambda1 = object.position_at(spec.time_of(k + 1)).norm();
            let eta = lambda1 / lambda0;
            let tau = tau_from_eta(eta, period)
                .map_err(|e| SimError::DegenerateSpec(format!("track {}: {e}", object.track_id)))?;
            exact.push(MiDAnnotation::new(
                spec.sequence_id.clone(),
                k,
                object.track_id,
                object.category.clone(),
                eta,
                tau,
                now.center(),
                AnnotationMethod::SimulatorExact,
            )?);
        }
    }
    exact.sort_by_key(|a| (a.frame_index(), a.track_id()));
    let sequence = TrackedSequence::new(spec.sequence_id.clone(), spec.intrinsics, spec.kfps, frames)?;
    Ok(SimOutput { sequence, exact })
}

/// KITTI-like left colour camera.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(721.5377, (609.5593, 172.854), (1242, 375))
        .expect("constant intrinsics are valid")
}

/// Key-frame rates the rotating family is rendered at.
pub const ROTATING_KFPS: [f64; 3] = [2.0, 10.0, 30.0];
/// Duration of rotating scenes, seconds.
pub const ROTATING_DURATION_S: f64 = 3.0;
/// Yaw values of the constant-yaw family, degrees.
pub const CONSTANT_YAWS_DEG: [f64; 4] = [10.0, -10.0, 30.0, -30.0];

/// True when the object is rendered untruncated in every frame.
fn fully_visible(spec: &SceneSpec, object: &SimObject) -> bool {
    let (w, h) = spec.intrinsics.image_size();
    (0..spec.n_frames).all(|k| {
        let t = spec.time_of(k);
        object.position_at(t).z > 0.5
            && render_box(&spec.intrinsics, object, t).is_some_and(|b| {
                b[0] >= 0.0 && b[1] >= 0.0 && b[2] <= f64::from(w) && b[3] <= f64::from(h)
            })
    })
}

fn single_object_scene(
    id: String,
    family: SceneFamily,
    kfps: f64,
    n_frames: u32,
    seed: u64,
    object: SimObject,
) -> SceneSpec {
    SceneSpec {
        sequence_id: id,
        family,
        intrinsics: default_intrinsics(),
        kfps,
        n_frames,
        objects: vec![object],
        seed,
    }
}

/// Draws objects until one stays fully visible for the whole scene.
fn sample_visible(
    rng: &mut ChaCha8Rng,
    make: impl Fn(&mut ChaCha8Rng) -> SceneSpec,
) -> SceneSpec {
    loop {
        let spec = make(rng);
        if spec.objects.iter().all(|o| fully_visible(&spec, o)) {
            return spec;
        }
    }
}

struct Archetype {
    category: &'static str,
    size: CuboidSize,
}

const CAR: Archetype = Archetype {
    category: "Car",
    size: CuboidSize {
        height: 1.5,
        width: 1.6,
        length: 3.9,
    },
};
const PEDESTRIAN: Archetype = Archetype {
    category: "Pedestrian",
    size: CuboidSize {
        height: 1.75,
        width: 0.6,
        length: 0.8,
    },
};

fn jitter_size(rng: &mut ChaCha8Rng, base: CuboidSize) -> CuboidSize {
    let mut s = || rng.random_range(0.9..1.1);
    CuboidSize {
        height: base.height * s(),
        width: base.width * s(),
        length: base.length * s(),
    }
}

/// Fronto-parallel plates (`W = 0`, yaw 0) moving along their line of sight,
/// the case in which box-height ratios equal distance ratios exactly.
pub fn plate_scenes(seed: u64, count: usize) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x706c_6174);
    (0..count)
        .map(|i| {
            sample_visible(&mut rng, |rng| {
                let p: [f64; 3] = [
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-1.0..1.5),
                    rng.random_range(12.0..45.0),
                ];
                let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let speed = rng.random_range(-8.0..8.0);
                let object = SimObject {
                    track_id: 1,
                    category: "Car".into(),
                    initial_position: p,
                    velocity: p.map(|c| c / norm * speed),
                    size: CuboidSize {
                        height: rng.random_range(0.5..2.0),
                        width: 0.0,
                        length: rng.random_range(0.5..3.0),
                    },
                    yaw0: 0.0,
                    yaw_rate: 0.0,
                };
                single_object_scene(format!("plate-{i:04}"), SceneFamily::Plate, 10.0, 10, seed, object)
            })
        })
        .collect()
}

/// Cuboids held at a constant yaw from [`CONSTANT_YAWS_DEG`], moving in depth.
pub fn constant_yaw_scenes(seed: u64, per_yaw: usize) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0079_6177);
    let mut out = Vec::new();
    for yaw_deg in CONSTANT_YAWS_DEG {
        for i in 0..per_yaw {
            let arche = if i % 2 == 0 { &CAR } else { &PEDESTRIAN };
            out.push(sample_visible(&mut rng, |rng| {
                let object = SimObject {
                    track_id: 1,
                    category: arche.category.into(),
                    initial_position: [
                        rng.random_range(-3.0..3.0),
                        rng.random_range(0.6..1.0),
                        rng.random_range(15.0..35.0),
                    ],
                    velocity: [rng.random_range(-0.5..0.5), 0.0, rng.random_range(-6.0..3.0)],
                    size: jitter_size(rng, arche.size),
                    yaw0: yaw_deg.to_radians(),
                    yaw_rate: 0.0,
                };
                single_object_scene(
                    format!("constant-yaw-{:+03}-{i:02}", yaw_deg as i32),
                    SceneFamily::ConstantYaw,
                    10.0,
                    20,
                    seed,
                    object,
                )
            }));
        }
    }
    out
}

/// Sequence id of one rendering of a rotating scene.
pub fn rotating_scene_id(base: usize, kfps: f64) -> String {
    format!("rotating-{base:02}-kfps{:02}", kfps as u32)
}

/// Turning cuboids, each rendered at every rate in [`ROTATING_KFPS`] over the
/// same [`ROTATING_DURATION_S`] seconds.
pub fn rotating_scenes(seed: u64, count: usize) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0072_6f74);
    let finest = ROTATING_KFPS[ROTATING_KFPS.len() - 1];
    let mut out = Vec::new();
    for i in 0..count {
        let arche = if i % 3 == 2 { &PEDESTRIAN } else { &CAR };
        let base = sample_visible(&mut rng, |rng| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let object = SimObject {
                track_id: 1,
                category: arche.category.into(),
                initial_position: [
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.6..1.0),
                    rng.random_range(18.0..32.0),
                ],
                velocity: [rng.random_range(-1.0..1.0), 0.0, rng.random_range(-4.0..2.0)],
                size: jitter_size(rng, arche.size),
                yaw0: rng.random_range(-PI..PI),
                yaw_rate: sign * rng.random_range(0.2..0.8),
            };
            single_object_scene(
                rotating_scene_id(i, finest),
                SceneFamily::Rotating,
                finest,
                (ROTATING_DURATION_S * finest).round() as u32 + 1,
                seed,
                object,
            )
        });
        for kfps in ROTATING_KFPS {
            out.push(SceneSpec {
                sequence_id: rotating_scene_id(i, kfps),
                kfps,
                n_frames: (ROTATING_DURATION_S * kfps).round() as u32 + 1,
                ..base.clone()
            });
        }
    }
    out
}

/// Objects crossing in front of the camera at constant depth `Z`.
pub fn lateral_mover_scenes(seed: u64, count: usize) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x006c_6174);
    (0..count)
        .map(|i| {
            let arche = if i % 2 == 0 { &PEDESTRIAN } else { &CAR };
            sample_visible(&mut rng, |rng| {
                let x0 = rng.random_range(-4.0..4.0);
                let vx = rng.random_range(1.0..3.0) * if x0 > 0.0 { -1.0 } else { 1.0 };
                let object = SimObject {
                    track_id: 1,
                    category: arche.category.into(),
                    initial_position: [x0, rng.random_range(0.6..1.0), rng.random_range(8.0..20.0)],
                    velocity: [vx, 0.0, 0.0],
                    size: jitter_size(rng, arche.size),
                    yaw0: 0.0,
                    yaw_rate: 0.0,
                };
                single_object_scene(
                    format!("lateral-{i:02}"),
                    SceneFamily::LateralMover,
                    10.0,
                    20,
                    seed,
                    object,
                )
            })
        })
        .collect()
}

/// Cuboids on the optical axis with yaw within a few degrees of 45°.
pub fn near_singular_scenes(seed: u64, count: usize) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0073_696e);
    (0..count)
        .map(|i| {
            sample_visible(&mut rng, |rng| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let object = SimObject {
                    track_id: 1,
                    category: "Car".into(),
                    initial_position: [0.0, rng.random_range(0.6..1.0), rng.random_range(15.0..30.0)],
                    velocity: [0.0, 0.0, rng.random_range(-5.0..2.0)],
                    size: jitter_size(rng, CAR.size),
                    yaw0: sign * (45.0f64 + rng.random_range(-0.5..0.5)).to_radians(),
                    yaw_rate: 0.0,
                };
                single_object_scene(
                    format!("near-singular-{i:02}"),
                    SceneFamily::NearSingular,
                    10.0,
                    10,
                    seed,
                    object,
                )
            })
        })
        .collect()
}

/// The full validation family for a seed: plates, constant-yaw cuboids,
/// rotating cuboids at several key-frame rates, lateral movers and
/// near-singular orientations.
pub fn make_validation_suite(seed: u64) -> Vec<SceneSpec> {
    let mut out = plate_scenes(seed, 16);
    out.extend(constant_yaw_scenes(seed, 6));
    out.extend(rotating_scenes(seed, 8));
    out.extend(lateral_mover_scenes(seed, 6));
    out.extend(near_singular_scenes(seed, 4));
    out
}

#[derive(Serialize, Deserialize)]
struct SceneSpecDoc {
    format: String,
    #[serde(flatten)]
    spec: SceneSpecBody,
}

#[derive(Serialize, Deserialize)]
struct SceneSpecBody {
    sequence_id: String,
    #[serde(default)]
    family: SceneFamily,
    intrinsics: IntrinsicsDoc,
    kfps: f64,
    n_frames: u32,
    objects: Vec<SimObject>,
    #[serde(default)]
    seed: u64,
}

/// JSON document with the same conventions as scene files.
pub fn write_scene_spec(spec: &SceneSpec) -> String {
    let doc = SceneSpecDoc {
        format: SCENE_SPEC_FORMAT.into(),
        spec: SceneSpecBody {
            sequence_id: spec.sequence_id.clone(),
            family: spec.family,
            intrinsics: IntrinsicsDoc::from_intrinsics(&spec.intrinsics),
            kfps: spec.kfps,
            n_frames: spec.n_frames,
            objects: spec.objects.clone(),
            seed: spec.seed,
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("scene specs always serialize");
    text.push('\n');
    text
}

pub fn parse_scene_spec(text: &str) -> Result<SceneSpec, IngestError> {
    let doc: SceneSpecDoc = from_json(text)?;
    if doc.format != SCENE_SPEC_FORMAT {
        return Err(IngestError::SchemaViolation {
            path: "format".into(),
            reason: format!("expected {SCENE_SPEC_FORMAT:?}, found {:?}", doc.format),
        });
    }
    let body = doc.spec;
    let intrinsics = body.intrinsics.to_intrinsics().map_err(|e| IngestError::SchemaViolation {
        path: format!("intrinsics.{}", e.field),
        reason: e.reason,
    })?;
    Ok(SceneSpec {
        sequence_id: body.sequence_id,
        family: body.family,
        intrinsics,
        kfps: body.kfps,
        n_frames: body.n_frames,
        objects: body.objects,
        seed: body.seed,
    })
}
