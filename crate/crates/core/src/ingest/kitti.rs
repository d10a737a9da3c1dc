//! KITTI object-tracking labels and calibration.
//!
//! Label lines carry 17 whitespace-separated fields:
//! `frame track_id type truncated occluded alpha left top right bottom
//! height width length x y z rotation_y`.

use std::collections::BTreeMap;

use super::{parse_f64, IngestError, ParseDiagnostics};
use crate::types::{
    BBox, CameraIntrinsics, Dimensions, Frame, InvariantError, Location, ObjectInstance,
    TrackedSequence,
};

pub const KITTI_FIELDS: usize = 17;

#[derive(Debug, Clone, PartialEq)]
pub struct KittiConfig {
    pub sequence_id: String,
    /// Key frames per second; 10 for KITTI tracking.
    pub kfps: f64,
    /// Not recorded in calibration files.
    pub image_size: (u32, u32),
}

impl KittiConfig {
    pub fn new(sequence_id: impl Into<String>, kfps: f64) -> Self {
        Self {
            sequence_id: sequence_id.into(),
            kfps,
            image_size: (1242, 375),
        }
    }
}

/// Reads the left colour camera `P2` projection matrix. Focal length comes
/// from entry (0,0), principal point from (0,2) and (1,2).
pub fn parse_kitti_calibration(
    calib_text: &str,
    image_size: (u32, u32),
) -> Result<CameraIntrinsics, IngestError> {
    let line = calib_text
        .lines()
        .find_map(|l| {
            let l = l.trim_start();
            l.strip_prefix("P2:").or_else(|| l.strip_prefix("P2 "))
        })
        .ok_or_else(|| IngestError::MissingCalibration("no P2 projection matrix".into()))?;
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|f| f.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| IngestError::MissingCalibration("P2 has an unparsable entry".into()))?;
    if values.len() != 12 {
        return Err(IngestError::MissingCalibration(format!(
            "P2 has {} entries, expected 12",
            values.len()
        )));
    }
    CameraIntrinsics::new(values[0], (values[2], values[6]), image_size)
        .map_err(|e| IngestError::MissingCalibration(e.to_string()))
}

struct Record<'a> {
    frame: u32,
    track_id: i64,
    category: &'a str,
    numbers: [f64; 14],
}

fn split_record(line_no: usize, line: &str) -> Result<Record<'_>, IngestError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != KITTI_FIELDS {
        return Err(IngestError::malformed(
            line_no,
            format!("{} fields, expected {KITTI_FIELDS}", fields.len()),
        ));
    }
    let frame = fields[0].parse::<u32>().map_err(|_| {
        IngestError::malformed(line_no, format!("frame: {:?} is not a frame index", fields[0]))
    })?;
    let track_id = fields[1].parse::<i64>().map_err(|_| {
        IngestError::malformed(line_no, format!("track_id: {:?} is not an integer", fields[1]))
    })?;
    let mut numbers = [0.0; 14];
    for (slot, (i, field)) in numbers.iter_mut().zip(fields.iter().enumerate().skip(3)) {
        *slot = parse_f64(line_no, &format!("field {}", i + 1), field)?;
    }
    Ok(Record {
        frame,
        track_id,
        category: fields[2],
        numbers,
    })
}

fn build_instance(r: &Record<'_>, track_id: u32) -> Result<ObjectInstance, InvariantError> {
    let n = &r.numbers;
    let [truncated, occluded, alpha, left, top, right, bottom, h, w, l, x, y, z, ry] = *n;
    if occluded.fract() != 0.0 {
        return Err(InvariantError::new("occluded", format!("{occluded} is not an integer level")));
    }
    ObjectInstance::new(r.frame, track_id, r.category, BBox::new(left, top, right, bottom)?)?
        .with_truncation(truncated)?
        .with_occlusion(occluded as i32)
        .with_alpha(alpha)?
        .with_location(Location::new(x, y, z))?
        .with_rotation_y(ry)
        .and_then(|o| Ok(o.with_dimensions(Dimensions::new(h, w, l)?)))
}

/// Parses one KITTI tracking sequence.
///
/// `DontCare` rows, negative track ids, records behind the camera and other
/// invariant violations are skipped and reported in the diagnostics.
/// Structural problems (field count, unparsable numbers) abort with the line
/// number.
pub fn parse_kitti_tracking(
    label_text: &str,
    calib_text: &str,
    config: &KittiConfig,
) -> Result<(TrackedSequence, ParseDiagnostics), IngestError> {
    let intrinsics = parse_kitti_calibration(calib_text, config.image_size)?;
    let mut diagnostics = ParseDiagnostics::default();
    let mut frames: BTreeMap<u32, Vec<ObjectInstance>> = BTreeMap::new();

    for (i, raw) in label_text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record = split_record(line_no, raw)?;
        if record.category == "DontCare" {
            diagnostics.skip(line_no, "DontCare region");
            continue;
        }
        let Ok(track_id) = u32::try_from(record.track_id) else {
            diagnostics.skip(line_no, format!("track id {} is not a valid track", record.track_id));
            continue;
        };
        if record.numbers[12] <= 0.0 {
            diagnostics.skip(line_no, format!("behind camera (Z = {})", record.numbers[12]));
            continue;
        }
        let instance = match build_instance(&record, track_id) {
            Ok(inst) => inst,
            Err(e) => {
                diagnostics.skip(line_no, e.to_string());
                continue;
            }
        };
        let objects = frames.entry(record.frame).or_default();
        if objects.iter().any(|o| o.track_id() == track_id) {
            diagnostics.skip(
                line_no,
                format!("track {track_id} repeated in frame {}", record.frame),
            );
            continue;
        }
        objects.push(instance);
    }

    let frames = frames
        .into_iter()
        .map(|(idx, objects)| Frame::new(idx, objects))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IngestError::schema("frames", e.to_string()))?;
    let seq = TrackedSequence::new(config.sequence_id.clone(), intrinsics, config.kfps, frames)
        .map_err(|e| IngestError::schema(e.field, e.reason))?;
    Ok((seq, diagnostics))
}
