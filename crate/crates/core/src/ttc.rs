//! Motion in depth (η) and time to contact (τ) from tracked objects.
//!
//! Sign convention: an approaching object has `η < 1` and `τ > 0`, a
//! receding one `η > 1` and `τ < 0`. Depth `λ` is always the Euclidean
//! distance to the camera centre, never the `Z` coordinate alone.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::types::{
    AnnotationMethod, InvariantError, Location, MiDAnnotation, ObjectInstance, Tau,
    TrackedSequence,
};

/// Tolerance on `|cos 2θ|` below which the projected-height correction is
/// treated as singular.
pub const SINGULARITY_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TtcError {
    #[error("depth must be > 0, got {0}")]
    NonPositiveDepth(f64),
    #[error("key-frame period must be > 0, got {0}")]
    NonPositivePeriod(f64),
    #[error("box height must be > 0, got {0}")]
    NonPositiveHeight(f64),
    #[error("motion in depth must be > 0, got {0}")]
    NonPositiveEta(f64),
    #[error("object is behind the camera (Z = {0})")]
    BehindCamera(f64),
    #[error("orientation {theta} rad is within {SINGULARITY_EPSILON} of the cos 2θ = 0 pole")]
    OrientationSingularity { theta: f64 },
    #[error("projected height {0} is not positive")]
    NonPositiveResult(f64),
    #[error("instance lacks {0}")]
    MissingField(&'static str),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// Ground-truth generation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GtMethod {
    DepthVelocity,
    Tracks3D,
    Tracks2D,
    Tracks2DCorrected,
}

impl GtMethod {
    pub const ALL: [GtMethod; 4] = [
        Self::DepthVelocity,
        Self::Tracks3D,
        Self::Tracks2D,
        Self::Tracks2DCorrected,
    ];

    pub fn annotation_method(self) -> AnnotationMethod {
        match self {
            Self::DepthVelocity => AnnotationMethod::DepthVelocity,
            Self::Tracks3D => AnnotationMethod::Tracks3D,
            Self::Tracks2D => AnnotationMethod::Tracks2D,
            Self::Tracks2DCorrected => AnnotationMethod::Tracks2DCorrected,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.annotation_method().as_str()
    }
}

impl fmt::Display for GtMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GtMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown method {s:?} (expected one of depth-velocity, tracks3d, tracks2d, tracks2d-corrected)"
                )
            })
    }
}

fn check_depth(lambda: f64) -> Result<f64, TtcError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(TtcError::NonPositiveDepth(lambda))
    }
}

fn check_period(period: f64) -> Result<f64, TtcError> {
    if period > 0.0 && period.is_finite() {
        Ok(period)
    } else {
        Err(TtcError::NonPositivePeriod(period))
    }
}

fn check_height(h: f64) -> Result<f64, TtcError> {
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(TtcError::NonPositiveHeight(h))
    }
}

/// `η = λ(t1) / λ(t0)`.
pub fn eta_from_depth_pair(lambda_t0: f64, lambda_t1: f64) -> Result<f64, TtcError> {
    Ok(check_depth(lambda_t1)? / check_depth(lambda_t0)?)
}

/// `τ = T / (1 − η)`; `NoContact` when `η` is exactly 1.
pub fn tau_from_eta(eta: f64, period: f64) -> Result<Tau, TtcError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(TtcError::NonPositiveEta(eta));
    }
    let period = check_period(period)?;
    if eta == 1.0 {
        Ok(Tau::NoContact)
    } else {
        Ok(Tau::Seconds(period / (1.0 - eta)))
    }
}

/// Inverse of [`tau_from_eta`]: `η = 1 − T / τ`.
pub fn eta_from_tau(tau: Tau, period: f64) -> Result<f64, TtcError> {
    let period = check_period(period)?;
    Ok(match tau {
        Tau::NoContact => 1.0,
        Tau::Seconds(s) => 1.0 - period / s,
    })
}

/// η and τ from a depth and its signed rate of change (negative when
/// approaching): `τ = λ / (−λ̇)` and `η = 1 + λ̇·T / λ`.
pub fn eta_tau_from_depth_velocity(
    lambda: f64,
    lambda_dot: f64,
    period: f64,
) -> Result<(f64, Tau), TtcError> {
    let lambda = check_depth(lambda)?;
    let period = check_period(period)?;
    if !lambda_dot.is_finite() {
        return Err(TtcError::MissingField("finite range rate"));
    }
    if lambda_dot == 0.0 {
        return Ok((1.0, Tau::NoContact));
    }
    let eta = 1.0 + lambda_dot * period / lambda;
    if eta <= 0.0 {
        // the object would pass the camera within one key-frame period
        return Err(TtcError::NonPositiveEta(eta));
    }
    Ok((eta, Tau::Seconds(lambda / -lambda_dot)))
}

/// Euclidean distance of a camera-frame point from the camera centre.
pub fn distance_from_camera(location: Location) -> Result<f64, TtcError> {
    if !(location.z > 0.0) {
        return Err(TtcError::BehindCamera(location.z));
    }
    Ok(location.norm())
}

/// `η = h(t0) / h(t1)` for perceived heights of a rigid fronto-parallel object.
pub fn eta_from_height_pair(h_t0: f64, h_t1: f64) -> Result<f64, TtcError> {
    Ok(check_height(h_t0)? / check_height(h_t1)?)
}

/// Height of the object on the image plane recovered from its box and
/// projected orientation `θ`:
/// `h_p = (h·cosθ − w·sinθ) / (cos²θ − sin²θ)`.
pub fn projected_height(h_bbox: f64, w_bbox: f64, theta: f64) -> Result<f64, TtcError> {
    check_height(h_bbox)?;
    if !(w_bbox >= 0.0 && w_bbox.is_finite()) {
        return Err(TtcError::NonPositiveResult(w_bbox));
    }
    let (sin, cos) = theta.sin_cos();
    let denom = cos * cos - sin * sin;
    if !(denom.abs() > SINGULARITY_EPSILON) {
        return Err(TtcError::OrientationSingularity { theta });
    }
    let h_p = (h_bbox * cos - w_bbox * sin) / denom;
    if h_p > 0.0 && h_p.is_finite() {
        Ok(h_p)
    } else {
        Err(TtcError::NonPositiveResult(h_p))
    }
}

/// Folds an angle into `[−π/4, π/4)` modulo `π/2`.
fn fold_quarter_turn(angle: f64) -> f64 {
    let folded = angle - FRAC_PI_2 * (angle / FRAC_PI_2).round();
    if folded >= FRAC_PI_4 {
        folded - FRAC_PI_2
    } else {
        folded
    }
}

/// Projected orientation angle used by [`projected_height`].
///
/// Taken from the observation angle `alpha`, or from `rotation_y` minus the
/// azimuth of the object when only the global yaw is known. The result is
/// folded modulo a quarter turn so that side-on and head-on views both map
/// to `θ = 0`, where the box height needs no correction.
pub fn projected_orientation(instance: &ObjectInstance) -> Option<f64> {
    let raw = match (instance.alpha(), instance.rotation_y(), instance.location()) {
        (Some(alpha), _, _) => alpha,
        (None, Some(ry), Some(loc)) => ry - loc.x.atan2(loc.z),
        _ => return None,
    };
    Some(fold_quarter_turn(raw))
}

fn instance_depth(instance: &ObjectInstance) -> Result<f64, TtcError> {
    let loc = instance
        .location()
        .ok_or(TtcError::MissingField("location"))?;
    distance_from_camera(loc)
}

fn corrected_height(instance: &ObjectInstance) -> Result<f64, TtcError> {
    let theta = projected_orientation(instance)
        .ok_or(TtcError::MissingField("alpha or rotation_y with location"))?;
    let bbox = instance.bbox();
    projected_height(bbox.height(), bbox.width(), theta)
}

/// η and τ for one object between two consecutive key frames.
pub fn pair_eta_tau(
    method: GtMethod,
    t0: &ObjectInstance,
    t1: &ObjectInstance,
    period: f64,
) -> Result<(f64, Tau), TtcError> {
    let eta = match method {
        GtMethod::DepthVelocity => {
            let rate = t0
                .range_rate()
                .ok_or(TtcError::MissingField("range_rate"))?;
            eta_tau_from_depth_velocity(instance_depth(t0)?, rate, period)?.0
        }
        GtMethod::Tracks3D => eta_from_depth_pair(instance_depth(t0)?, instance_depth(t1)?)?,
        GtMethod::Tracks2D => eta_from_height_pair(t0.bbox().height(), t1.bbox().height())?,
        GtMethod::Tracks2DCorrected => {
            eta_from_height_pair(corrected_height(t0)?, corrected_height(t1)?)?
        }
    };
    Ok((eta, tau_from_eta(eta, period)?))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    /// The track is not observed in the next key frame.
    NoSuccessor,
    Failed(TtcError),
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::NoSuccessor => f.write_str("no observation in the next key frame"),
            SkipReason::Failed(e) => write!(f, "{e}"),
        }
    }
}

impl SkipReason {
    /// Short stable tag for grouping skips in summaries.
    pub fn tag(&self) -> &'static str {
        match self {
            SkipReason::NoSuccessor => "no-successor",
            SkipReason::Failed(e) => match e {
                TtcError::NonPositiveDepth(_) => "non-positive-depth",
                TtcError::NonPositivePeriod(_) => "non-positive-period",
                TtcError::NonPositiveHeight(_) => "non-positive-height",
                TtcError::NonPositiveEta(_) => "non-positive-eta",
                TtcError::BehindCamera(_) => "behind-camera",
                TtcError::OrientationSingularity { .. } => "orientation-singularity",
                TtcError::NonPositiveResult(_) => "non-positive-projected-height",
                TtcError::MissingField(_) => "missing-field",
                TtcError::Invariant(_) => "invariant",
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub frame_index: u32,
    pub track_id: u32,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationOutcome {
    pub annotations: Vec<MiDAnnotation>,
    pub skipped: Vec<Skip>,
}

/// Every instance paired with the same track in the next key frame, if any.
pub(crate) fn track_pairs(
    seq: &TrackedSequence,
) -> impl Iterator<Item = (&ObjectInstance, Option<&ObjectInstance>)> {
    seq.consecutive_frames().flat_map(|(frame, next)| {
        frame
            .objects()
            .iter()
            .map(move |obj| (obj, next.and_then(|n| n.object(obj.track_id()))))
    })
}

/// Annotates every instance that has a successor in the next key frame.
///
/// The annotation attaches to the earlier frame and its centre is the box
/// centre there. Failures never abort the sequence; they are collected in
/// [`AnnotationOutcome::skipped`].
pub fn annotate_sequence(seq: &TrackedSequence, method: GtMethod) -> AnnotationOutcome {
    let period = seq.period();
    let mut out = AnnotationOutcome::default();
    for (t0, t1) in track_pairs(seq) {
        let skip = |reason| Skip {
            frame_index: t0.frame_index(),
            track_id: t0.track_id(),
            reason,
        };
        let Some(t1) = t1 else {
            out.skipped.push(skip(SkipReason::NoSuccessor));
            continue;
        };
        let annotation = pair_eta_tau(method, t0, t1, period).and_then(|(eta, tau)| {
            MiDAnnotation::new(
                seq.sequence_id(),
                t0.frame_index(),
                t0.track_id(),
                t0.category(),
                eta,
                tau,
                t0.center(),
                method.annotation_method(),
            )
            .map_err(TtcError::from)
        });
        match annotation {
            Ok(a) => out.annotations.push(a),
            Err(e) => out.skipped.push(skip(SkipReason::Failed(e))),
        }
    }
    out.annotations
        .sort_by_key(|a| (a.frame_index(), a.track_id()));
    out
}
