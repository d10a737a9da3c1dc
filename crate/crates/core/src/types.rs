//! Domain types shared by every module.
//!
//! Every constructor validates its invariants and returns an
//! [`InvariantError`] on violation; once built, values are immutable.
//! Camera coordinates follow the KITTI convention: X right, Y down,
//! Z forward.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A value violated a domain invariant at construction time.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {field}: {reason}")]
pub struct InvariantError {
    pub field: &'static str,
    pub reason: String,
}

impl InvariantError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

fn finite(field: &'static str, value: f64) -> Result<f64, InvariantError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(InvariantError::new(field, format!("{value} is not finite")))
    }
}

fn positive(field: &'static str, value: f64) -> Result<f64, InvariantError> {
    finite(field, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(InvariantError::new(field, format!("{value} is not > 0")))
    }
}

/// Labels end up in tab-separated files, so they may not contain
/// tabs or line breaks.
fn label(field: &'static str, value: String) -> Result<String, InvariantError> {
    if value.is_empty() {
        return Err(InvariantError::new(field, "empty"));
    }
    if value.contains(['\t', '\n', '\r']) {
        return Err(InvariantError::new(
            field,
            format!("{value:?} contains a tab or line break"),
        ));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    focal_length_px: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        focal_length_px: f64,
        principal_point: (f64, f64),
        image_size: (u32, u32),
    ) -> Result<Self, InvariantError> {
        positive("focal_length_px", focal_length_px)?;
        let (cx, cy) = principal_point;
        let (width, height) = image_size;
        if width == 0 || height == 0 {
            return Err(InvariantError::new(
                "image_size",
                format!("{width}x{height} has a zero side"),
            ));
        }
        finite("principal_point.cx", cx)?;
        finite("principal_point.cy", cy)?;
        if !(0.0..=f64::from(width)).contains(&cx) || !(0.0..=f64::from(height)).contains(&cy) {
            return Err(InvariantError::new(
                "principal_point",
                format!("({cx}, {cy}) outside {width}x{height}"),
            ));
        }
        Ok(Self {
            focal_length_px,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn focal_length_px(&self) -> f64 {
        self.focal_length_px
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    pub fn image_size(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Same camera with the focal length multiplied by `factor`.
    pub fn with_scaled_focal_length(&self, factor: f64) -> Result<Self, InvariantError> {
        Self::new(
            self.focal_length_px * factor,
            (self.cx, self.cy),
            (self.width, self.height),
        )
    }

    /// Pinhole projection of a camera-frame point. `None` when `z <= 0`.
    pub fn project(&self, p: Location) -> Option<(f64, f64)> {
        if p.z > 0.0 {
            Some((
                self.focal_length_px * p.x / p.z + self.cx,
                self.focal_length_px * p.y / p.z + self.cy,
            ))
        } else {
            None
        }
    }
}

/// Axis-aligned image box `(x1, y1, x2, y2)` in pixels with `x2 > x1`, `y2 > y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, InvariantError> {
        for (name, v) in [("bbox.x1", x1), ("bbox.y1", y1), ("bbox.x2", x2), ("bbox.y2", y2)] {
            finite(name, v)?;
        }
        if !(x2 > x1 && y2 > y1) {
            return Err(InvariantError::new(
                "bbox",
                format!("({x1}, {y1}, {x2}, {y2}) needs x2 > x1 and y2 > y1"),
            ));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn translate(&self, du: f64, dv: f64) -> Result<Self, InvariantError> {
        Self::new(self.x1 + du, self.y1 + dv, self.x2 + du, self.y2 + dv)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let ih = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = iw * ih;
        inter / (self.area() + other.area() - inter)
    }
}

/// Point in camera coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Location {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Object extent `(H, W, L)` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensions {
    pub height: f64,
    pub width: f64,
    pub length: f64,
}

impl Dimensions {
    pub fn new(height: f64, width: f64, length: f64) -> Result<Self, InvariantError> {
        positive("dimensions.height", height)?;
        positive("dimensions.width", width)?;
        positive("dimensions.length", length)?;
        Ok(Self {
            height,
            width,
            length,
        })
    }
}

/// One observation of a tracked object in one key frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    frame_index: u32,
    track_id: u32,
    category: String,
    bbox: BBox,
    location: Option<Location>,
    dimensions: Option<Dimensions>,
    rotation_y: Option<f64>,
    alpha: Option<f64>,
    truncated: f64,
    occluded: i32,
    range_rate: Option<f64>,
}

impl ObjectInstance {
    pub fn new(
        frame_index: u32,
        track_id: u32,
        category: impl Into<String>,
        bbox: BBox,
    ) -> Result<Self, InvariantError> {
        Ok(Self {
            frame_index,
            track_id,
            category: label("category", category.into())?,
            bbox,
            location: None,
            dimensions: None,
            rotation_y: None,
            alpha: None,
            truncated: 0.0,
            occluded: 0,
            range_rate: None,
        })
    }

    /// Rejects observations behind or on the camera plane (`Z <= 0`).
    pub fn with_location(mut self, location: Location) -> Result<Self, InvariantError> {
        finite("location.x", location.x)?;
        finite("location.y", location.y)?;
        positive("location.z", location.z)?;
        self.location = Some(location);
        Ok(self)
    }

    pub fn with_dimensions(mut self, dimensions: Dimensions) -> Self {
        self.dimensions = Some(dimensions);
        self
    }

    pub fn with_rotation_y(mut self, rotation_y: f64) -> Result<Self, InvariantError> {
        self.rotation_y = Some(finite("rotation_y", rotation_y)?);
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, InvariantError> {
        self.alpha = Some(finite("alpha", alpha)?);
        Ok(self)
    }

    /// KITTI tracking stores truncation as a level in {0, 1, 2}; other
    /// sources use a fraction in [0, 1]. Both fit in [0, 2].
    pub fn with_truncation(mut self, truncated: f64) -> Result<Self, InvariantError> {
        finite("truncated", truncated)?;
        if !(0.0..=2.0).contains(&truncated) {
            return Err(InvariantError::new(
                "truncated",
                format!("{truncated} outside [0, 2]"),
            ));
        }
        self.truncated = truncated;
        Ok(self)
    }

    pub fn with_occlusion(mut self, occluded: i32) -> Self {
        self.occluded = occluded;
        self
    }

    /// Signed range rate in m/s, negative when approaching.
    pub fn with_range_rate(mut self, range_rate: f64) -> Result<Self, InvariantError> {
        self.range_rate = Some(finite("range_rate", range_rate)?);
        Ok(self)
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn track_id(&self) -> u32 {
        self.track_id
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn location(&self) -> Option<Location> {
        self.location
    }

    pub fn dimensions(&self) -> Option<Dimensions> {
        self.dimensions
    }

    pub fn rotation_y(&self) -> Option<f64> {
        self.rotation_y
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn truncated(&self) -> f64 {
        self.truncated
    }

    pub fn occluded(&self) -> i32 {
        self.occluded
    }

    pub fn range_rate(&self) -> Option<f64> {
        self.range_rate
    }

    pub fn center(&self) -> (f64, f64) {
        self.bbox.center()
    }
}

/// Midpoint of the instance's box.
pub fn bbox_center(instance: &ObjectInstance) -> (f64, f64) {
    instance.center()
}

/// All objects observed in one key frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    frame_index: u32,
    objects: Vec<ObjectInstance>,
}

impl Frame {
    pub fn new(frame_index: u32, objects: Vec<ObjectInstance>) -> Result<Self, InvariantError> {
        let mut seen = HashSet::with_capacity(objects.len());
        for obj in &objects {
            if obj.frame_index != frame_index {
                return Err(InvariantError::new(
                    "frame",
                    format!(
                        "object of frame {} placed in frame {frame_index}",
                        obj.frame_index
                    ),
                ));
            }
            if !seen.insert(obj.track_id) {
                return Err(InvariantError::new(
                    "track_id",
                    format!("track {} repeated in frame {frame_index}", obj.track_id),
                ));
            }
        }
        Ok(Self {
            frame_index,
            objects,
        })
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn object(&self, track_id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.track_id == track_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedSequence {
    sequence_id: String,
    intrinsics: CameraIntrinsics,
    kfps: f64,
    frames: Vec<Frame>,
}

impl TrackedSequence {
    pub fn new(
        sequence_id: impl Into<String>,
        intrinsics: CameraIntrinsics,
        kfps: f64,
        frames: Vec<Frame>,
    ) -> Result<Self, InvariantError> {
        positive("kfps", kfps)?;
        for pair in frames.windows(2) {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(InvariantError::new(
                    "frames",
                    format!(
                        "frame {} follows frame {}; indices must strictly increase",
                        pair[1].frame_index, pair[0].frame_index
                    ),
                ));
            }
        }
        Ok(Self {
            sequence_id: label("sequence_id", sequence_id.into())?,
            intrinsics,
            kfps,
            frames,
        })
    }

    pub fn sequence_id(&self) -> &str {
        &self.sequence_id
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn kfps(&self) -> f64 {
        self.kfps
    }

    /// Time between consecutive key frames, `T = 1 / kfps`.
    pub fn period(&self) -> f64 {
        1.0 / self.kfps
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn instances(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.frames.iter().flat_map(|f| f.objects.iter())
    }

    /// Each key frame paired with the frame exactly one index later, when
    /// that frame exists.
    pub fn consecutive_frames(&self) -> impl Iterator<Item = (&Frame, Option<&Frame>)> {
        self.frames.iter().enumerate().map(move |(i, f)| {
            let next = self
                .frames
                .get(i + 1)
                .filter(|n| n.frame_index == f.frame_index + 1);
            (f, next)
        })
    }
}

/// Time to contact. `NoContact` only for `η == 1` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Seconds(f64),
    NoContact,
}

impl Tau {
    pub fn seconds(self) -> Option<f64> {
        match self {
            Tau::Seconds(s) => Some(s),
            Tau::NoContact => None,
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Seconds(s) => write!(f, "{s} s"),
            Tau::NoContact => f.write_str("no contact"),
        }
    }
}

/// Where an annotation's η came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnotationMethod {
    DepthVelocity,
    Tracks3D,
    Tracks2D,
    Tracks2DCorrected,
    SimulatorExact,
}

impl AnnotationMethod {
    pub const ALL: [AnnotationMethod; 5] = [
        Self::DepthVelocity,
        Self::Tracks3D,
        Self::Tracks2D,
        Self::Tracks2DCorrected,
        Self::SimulatorExact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DepthVelocity => "depth-velocity",
            Self::Tracks3D => "tracks3d",
            Self::Tracks2D => "tracks2d",
            Self::Tracks2DCorrected => "tracks2d-corrected",
            Self::SimulatorExact => "simulator-exact",
        }
    }
}

impl fmt::Display for AnnotationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnnotationMethod {
    type Err = InvariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| InvariantError::new("method", format!("unknown method {s:?}")))
    }
}

/// Ground-truth motion in depth and TTC for one object at one key frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MiDAnnotation {
    sequence_id: String,
    frame_index: u32,
    track_id: u32,
    category: String,
    eta: f64,
    tau: Tau,
    center: (f64, f64),
    method: AnnotationMethod,
}

impl MiDAnnotation {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sequence_id: impl Into<String>,
        frame_index: u32,
        track_id: u32,
        category: impl Into<String>,
        eta: f64,
        tau: Tau,
        center: (f64, f64),
        method: AnnotationMethod,
    ) -> Result<Self, InvariantError> {
        positive("eta", eta)?;
        match tau {
            Tau::NoContact if eta != 1.0 => {
                return Err(InvariantError::new(
                    "tau",
                    format!("no-contact needs eta == 1, got {eta}"),
                ))
            }
            Tau::Seconds(_) if eta == 1.0 => {
                return Err(InvariantError::new("tau", "eta == 1 needs no-contact"))
            }
            Tau::Seconds(s) => {
                finite("tau", s)?;
                if (eta < 1.0) != (s > 0.0) {
                    return Err(InvariantError::new(
                        "tau",
                        format!("sign of tau {s} disagrees with eta {eta}"),
                    ));
                }
            }
            Tau::NoContact => {}
        }
        finite("center.u", center.0)?;
        finite("center.v", center.1)?;
        Ok(Self {
            sequence_id: label("sequence_id", sequence_id.into())?,
            frame_index,
            track_id,
            category: label("category", category.into())?,
            eta,
            tau,
            center,
            method,
        })
    }

    pub fn sequence_id(&self) -> &str {
        &self.sequence_id
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn track_id(&self) -> u32 {
        self.track_id
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn tau(&self) -> Tau {
        self.tau
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn method(&self) -> AnnotationMethod {
        self.method
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RiskLabel {
    Risky,
    Safe,
    Neutral,
}

impl RiskLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskLabel::Risky => "risky",
            RiskLabel::Safe => "safe",
            RiskLabel::Neutral => "neutral",
        }
    }
}

/// How a prediction is tied to a ground-truth object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionKey {
    Track(u32),
    Center { u: f64, v: f64 },
    Box(BBox),
}

impl PredictionKey {
    pub fn kind(&self) -> &'static str {
        match self {
            PredictionKey::Track(_) => "track",
            PredictionKey::Center { .. } => "center",
            PredictionKey::Box(_) => "box",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    frame_index: u32,
    key: PredictionKey,
    eta_pred: f64,
    risk_pred: Option<RiskLabel>,
}

impl PredictionRecord {
    pub fn new(
        frame_index: u32,
        key: PredictionKey,
        eta_pred: f64,
        risk_pred: Option<RiskLabel>,
    ) -> Result<Self, InvariantError> {
        positive("eta_pred", eta_pred)?;
        if let PredictionKey::Center { u, v } = key {
            finite("center.u", u)?;
            finite("center.v", v)?;
        }
        if risk_pred == Some(RiskLabel::Neutral) {
            return Err(InvariantError::new(
                "risk_pred",
                "neutral is reserved for ground truth",
            ));
        }
        Ok(Self {
            frame_index,
            key,
            eta_pred,
            risk_pred,
        })
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn key(&self) -> &PredictionKey {
        &self.key
    }

    pub fn eta_pred(&self) -> f64 {
        self.eta_pred
    }

    pub fn risk_pred(&self) -> Option<RiskLabel> {
        self.risk_pred
    }
}

/// Per-pixel η grid, row-major. NaN marks pixels without data.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMiDMap {
    frame_index: u32,
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl DenseMiDMap {
    pub fn new(
        frame_index: u32,
        width: u32,
        height: u32,
        values: Vec<f32>,
    ) -> Result<Self, InvariantError> {
        let expected = u64::from(width) * u64::from(height);
        if values.len() as u64 != expected {
            return Err(InvariantError::new(
                "values",
                format!("{} values for a {width}x{height} grid", values.len()),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_nan() && !(v.is_finite() && **v > 0.0))
        {
            return Err(InvariantError::new(
                "values",
                format!("value {v} at index {i} is neither > 0 nor no-data"),
            ));
        }
        Ok(Self {
            frame_index,
            width,
            height,
            values,
        })
    }

    pub fn uniform(frame_index: u32, width: u32, height: u32, eta: f32) -> Result<Self, InvariantError> {
        Self::new(
            frame_index,
            width,
            height,
            vec![eta; width as usize * height as usize],
        )
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Raw cell value (possibly NaN), `None` outside the grid.
    pub fn get(&self, col: u32, row: u32) -> Option<f32> {
        if col < self.width && row < self.height {
            Some(self.values[row as usize * self.width as usize + col as usize])
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn instance(bbox: BBox) -> ObjectInstance {
        ObjectInstance::new(0, 1, "Car", bbox).unwrap()
    }

    #[test]
    fn bbox_center_examples() {
        let c = bbox_center(&instance(BBox::new(0.0, 0.0, 10.0, 20.0).unwrap()));
        assert_eq!(c, (5.0, 10.0));
        // every intermediate is exactly representable
        let c = bbox_center(&instance(BBox::new(100.0, 100.0, 100.5, 101.0).unwrap()));
        assert_eq!(c, (100.25, 100.5));
        let c = bbox_center(&instance(BBox::new(599.41, 156.40, 629.75, 189.25).unwrap()));
        assert!((c.0 - 614.58).abs() < 1e-12);
        assert!((c.1 - 172.825).abs() < 1e-12);
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(BBox::new(10.0, 0.0, 10.0, 5.0).is_err());
        assert!(BBox::new(0.0, 5.0, 10.0, 4.0).is_err());
        assert!(BBox::new(0.0, 0.0, f64::NAN, 4.0).is_err());
    }

    #[test]
    fn intrinsics_invariants() {
        assert!(CameraIntrinsics::new(700.0, (621.0, 187.5), (1242, 375)).is_ok());
        assert!(CameraIntrinsics::new(0.0, (621.0, 187.5), (1242, 375)).is_err());
        assert!(CameraIntrinsics::new(700.0, (1300.0, 187.5), (1242, 375)).is_err());
        assert!(CameraIntrinsics::new(700.0, (621.0, 187.5), (0, 375)).is_err());
    }

    #[test]
    fn behind_camera_location_rejected() {
        let bbox = BBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(instance(bbox).with_location(Location::new(0.0, 0.0, 0.0)).is_err());
        assert!(instance(bbox).with_location(Location::new(1.0, 0.0, -3.0)).is_err());
        assert!(instance(bbox).with_location(Location::new(1.0, 0.0, 3.0)).is_ok());
        assert!(Dimensions::new(1.5, 0.0, 4.0).is_err());
    }

    #[test]
    fn frames_and_sequences_validated() {
        let bbox = BBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let a = ObjectInstance::new(3, 7, "Car", bbox).unwrap();
        assert!(Frame::new(3, vec![a.clone(), a.clone()]).is_err());
        assert!(Frame::new(4, vec![a.clone()]).is_err());
        let cam = CameraIntrinsics::new(700.0, (621.0, 187.5), (1242, 375)).unwrap();
        let f3 = Frame::new(3, vec![a]).unwrap();
        let f2 = Frame::new(2, vec![]).unwrap();
        assert!(TrackedSequence::new("s", cam, 10.0, vec![f3.clone(), f2.clone()]).is_err());
        assert!(TrackedSequence::new("s", cam, 0.0, vec![]).is_err());
        let seq = TrackedSequence::new("s", cam, 2.0, vec![f2, f3]).unwrap();
        assert_eq!(seq.period(), 0.5);
    }

    #[test]
    fn annotation_tau_sign_contract() {
        let mk = |eta, tau| {
            MiDAnnotation::new("s", 0, 0, "Car", eta, tau, (1.0, 1.0), AnnotationMethod::Tracks3D)
        };
        assert!(mk(0.95, Tau::Seconds(2.0)).is_ok());
        assert!(mk(0.95, Tau::Seconds(-2.0)).is_err());
        assert!(mk(1.05, Tau::Seconds(-2.0)).is_ok());
        assert!(mk(1.0, Tau::NoContact).is_ok());
        assert!(mk(1.0, Tau::Seconds(1e9)).is_err());
        assert!(mk(0.9, Tau::NoContact).is_err());
        assert!(mk(0.0, Tau::Seconds(1.0)).is_err());
    }

    #[test]
    fn labels_reject_separators() {
        let bbox = BBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(ObjectInstance::new(0, 0, "Traffic\tCone", bbox).is_err());
        assert!(ObjectInstance::new(0, 0, "", bbox).is_err());
        assert!(ObjectInstance::new(0, 0, "Person_sitting", bbox).is_ok());
    }

    #[test]
    fn prediction_records_validated() {
        assert!(PredictionRecord::new(0, PredictionKey::Track(2), 0.97, None).is_ok());
        assert!(PredictionRecord::new(0, PredictionKey::Track(2), 0.0, None).is_err());
        assert!(PredictionRecord::new(0, PredictionKey::Track(2), 1.0, Some(RiskLabel::Neutral)).is_err());
    }

    #[test]
    fn dense_map_validation_and_lookup() {
        assert!(DenseMiDMap::new(0, 2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMiDMap::new(0, 2, 1, vec![1.0, -1.0]).is_err());
        let m = DenseMiDMap::new(0, 2, 1, vec![0.9, f32::NAN]).unwrap();
        assert_eq!(m.get(0, 0), Some(0.9));
        assert!(m.get(1, 0).unwrap().is_nan());
        assert_eq!(m.get(2, 0), None);
    }

    proptest! {
        #[test]
        fn bbox_center_translation_equivariant(
            x1 in -1e4f64..1e4, y1 in -1e4f64..1e4,
            w in 0.5f64..500.0, h in 0.5f64..500.0,
            du in -1e3f64..1e3, dv in -1e3f64..1e3,
        ) {
            let b = BBox::new(x1, y1, x1 + w, y1 + h).unwrap();
            let (u, v) = b.center();
            let (tu, tv) = b.translate(du, dv).unwrap().center();
            prop_assert!((tu - (u + du)).abs() <= 1e-9 * (1.0 + u.abs() + du.abs()));
            prop_assert!((tv - (v + dv)).abs() <= 1e-9 * (1.0 + v.abs() + dv.abs()));
        }
    }
}
