//! JSON scene documents: the exchange format for tracked sequences that do
//! not come from KITTI (converted NuScenes or Shift data, simulator output).
//!
//! ```json
//! {
//!   "format": "ottc-scene v1",
//!   "sequence_id": "scene-0001",
//!   "kfps": 2.0,
//!   "intrinsics": {"f": 1266.4, "cx": 816.3, "cy": 491.5, "width": 1600, "height": 900},
//!   "frames": [
//!     {"frame_index": 0, "objects": [
//!       {"track_id": 1, "category": "Car", "bbox": [10, 20, 110, 90],
//!        "location": [1.0, 1.2, 18.0], "range_rate": -3.2}
//!     ]}
//!   ]
//! }
//! ```
//!
//! Unknown fields are ignored.

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::types::{
    BBox, CameraIntrinsics, Dimensions, Frame, InvariantError, Location, ObjectInstance,
    TrackedSequence,
};

pub const SCENE_FORMAT: &str = "ottc-scene v1";

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct IntrinsicsDoc {
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl IntrinsicsDoc {
    pub(crate) fn from_intrinsics(cam: &CameraIntrinsics) -> Self {
        let (cx, cy) = cam.principal_point();
        let (width, height) = cam.image_size();
        Self {
            f: cam.focal_length_px(),
            cx,
            cy,
            width,
            height,
        }
    }

    pub(crate) fn to_intrinsics(&self) -> Result<CameraIntrinsics, InvariantError> {
        CameraIntrinsics::new(self.f, (self.cx, self.cy), (self.width, self.height))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectDoc {
    track_id: u32,
    category: String,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimensions: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    truncated: f64,
    #[serde(default, skip_serializing_if = "is_zero_i32")]
    occluded: i32,
}

fn is_zero_f64(v: &f64) -> bool {
    *v == 0.0 && v.is_sign_positive()
}

fn is_zero_i32(v: &i32) -> bool {
    *v == 0
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameDoc {
    frame_index: u32,
    objects: Vec<ObjectDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    sequence_id: String,
    kfps: f64,
    intrinsics: IntrinsicsDoc,
    frames: Vec<FrameDoc>,
}

/// Runs `serde_json` and reports the JSON path of the first type error.
pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, IngestError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        IngestError::schema(if path.is_empty() { "$".into() } else { path }, e.into_inner().to_string())
    })
}

fn object_from_doc(frame_index: u32, doc: ObjectDoc) -> Result<ObjectInstance, InvariantError> {
    let [x1, y1, x2, y2] = doc.bbox;
    let mut obj = ObjectInstance::new(frame_index, doc.track_id, doc.category, BBox::new(x1, y1, x2, y2)?)?
        .with_truncation(doc.truncated)?
        .with_occlusion(doc.occluded);
    if let Some([x, y, z]) = doc.location {
        obj = obj.with_location(Location::new(x, y, z))?;
    }
    if let Some([h, w, l]) = doc.dimensions {
        obj = obj.with_dimensions(Dimensions::new(h, w, l)?);
    }
    if let Some(ry) = doc.rotation_y {
        obj = obj.with_rotation_y(ry)?;
    }
    if let Some(a) = doc.alpha {
        obj = obj.with_alpha(a)?;
    }
    if let Some(r) = doc.range_rate {
        obj = obj.with_range_rate(r)?;
    }
    Ok(obj)
}

pub fn parse_scene(scene_text: &str) -> Result<TrackedSequence, IngestError> {
    let doc: SceneDoc = from_json(scene_text)?;
    if let Some(fmt) = &doc.format {
        if fmt != SCENE_FORMAT {
            return Err(IngestError::schema("format", format!("unsupported format {fmt:?}")));
        }
    }
    let intrinsics = doc
        .intrinsics
        .to_intrinsics()
        .map_err(|e| IngestError::schema(format!("intrinsics.{}", e.field), e.reason))?;
    let mut frames = Vec::with_capacity(doc.frames.len());
    for (fi, frame) in doc.frames.into_iter().enumerate() {
        let mut objects = Vec::with_capacity(frame.objects.len());
        for (oi, obj) in frame.objects.into_iter().enumerate() {
            let inst = object_from_doc(frame.frame_index, obj).map_err(|e| {
                IngestError::schema(format!("frames[{fi}].objects[{oi}].{}", e.field), e.reason)
            })?;
            objects.push(inst);
        }
        let frame = Frame::new(frame.frame_index, objects)
            .map_err(|e| IngestError::schema(format!("frames[{fi}]"), e.to_string()))?;
        frames.push(frame);
    }
    TrackedSequence::new(doc.sequence_id, intrinsics, doc.kfps, frames)
        .map_err(|e| IngestError::schema(e.field, e.reason))
}

/// Pretty-printed JSON; deterministic for a given sequence.
pub fn write_scene(seq: &TrackedSequence) -> String {
    let doc = SceneDoc {
        format: Some(SCENE_FORMAT.into()),
        sequence_id: seq.sequence_id().into(),
        kfps: seq.kfps(),
        intrinsics: IntrinsicsDoc::from_intrinsics(seq.intrinsics()),
        frames: seq
            .frames()
            .iter()
            .map(|f| FrameDoc {
                frame_index: f.frame_index(),
                objects: f
                    .objects()
                    .iter()
                    .map(|o| ObjectDoc {
                        track_id: o.track_id(),
                        category: o.category().into(),
                        bbox: o.bbox().corners(),
                        location: o.location().map(Location::to_array),
                        dimensions: o.dimensions().map(|d| [d.height, d.width, d.length]),
                        rotation_y: o.rotation_y(),
                        alpha: o.alpha(),
                        range_rate: o.range_rate(),
                        truncated: o.truncated(),
                        occluded: o.occluded(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("scene documents always serialize");
    text.push('\n');
    text
}
