//! Detection-agnostic evaluation of dense per-pixel η maps: the map is read
//! at each ground-truth object's centre pixel.

use crate::types::{DenseMiDMap, MiDAnnotation, PredictionKey, PredictionRecord};

/// Map value at the pixel nearest `(u, v)`, rounding half away from zero on
/// each axis. `None` outside the grid or on a no-data cell.
pub fn sample_pixel(map: &DenseMiDMap, (u, v): (f64, f64)) -> Option<f64> {
    let (col, row) = (u.round(), v.round());
    if !(col >= 0.0 && row >= 0.0 && col < f64::from(map.width()) && row < f64::from(map.height())) {
        return None;
    }
    let value = map.get(col as u32, row as u32)?;
    (!value.is_nan()).then_some(f64::from(value))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CenterSamples {
    /// `(η_pred, η_gt)` for every annotation with a readable centre pixel.
    pub pairs: Vec<(f64, f64)>,
    /// Indices of annotations whose centre fell outside the map or on no data.
    pub missing: Vec<usize>,
}

/// Reads `map` at the centre of every annotation, regardless of frame.
pub fn sample_map_at_centers(map: &DenseMiDMap, annotations: &[MiDAnnotation]) -> CenterSamples {
    let mut out = CenterSamples::default();
    for (i, a) in annotations.iter().enumerate() {
        match sample_pixel(map, a.center()) {
            Some(p) => out.pairs.push((p, a.eta())),
            None => out.missing.push(i),
        }
    }
    out
}

/// Track-keyed predictions read from the map of each annotation's frame.
/// Annotations without a map, or whose centre has no value, get no
/// prediction and are handled by the evaluation's missing policy.
pub fn dense_map_predictions(maps: &[DenseMiDMap], annotations: &[MiDAnnotation]) -> Vec<PredictionRecord> {
    let by_frame: std::collections::HashMap<u32, &DenseMiDMap> =
        maps.iter().map(|m| (m.frame_index(), m)).collect();
    let mut out: Vec<PredictionRecord> = annotations
        .iter()
        .filter_map(|a| {
            let eta = sample_pixel(by_frame.get(&a.frame_index())?, a.center())?;
            PredictionRecord::new(a.frame_index(), PredictionKey::Track(a.track_id()), eta, None).ok()
        })
        .collect();
    let key = |p: &PredictionRecord| match *p.key() {
        PredictionKey::Track(id) => (p.frame_index(), id),
        _ => unreachable!("dense predictions are track keyed"),
    };
    out.sort_by_key(key);
    // several annotation methods may describe the same object
    out.dedup_by_key(|p| key(p));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AnnotationMethod, Tau};

    fn ann(frame: u32, track: u32, eta: f64, center: (f64, f64)) -> MiDAnnotation {
        let tau = if eta == 1.0 { Tau::NoContact } else { Tau::Seconds(0.1 / (1.0 - eta)) };
        MiDAnnotation::new("s", frame, track, "Car", eta, tau, center, AnnotationMethod::Tracks3D).unwrap()
    }

    #[test]
    fn uniform_map() {
        let map = DenseMiDMap::uniform(0, 8, 4, 0.95).unwrap();
        let anns = [ann(0, 1, 0.9, (1.2, 0.3)), ann(0, 2, 1.1, (6.7, 3.4))];
        let s = sample_map_at_centers(&map, &anns);
        assert_eq!(s.pairs, vec![(f64::from(0.95f32), 0.9), (f64::from(0.95f32), 1.1)]);
        assert!(s.missing.is_empty());
    }

    #[test]
    fn marker_pixel_rounding() {
        let mut values = vec![1.0f32; 8 * 6];
        values[3 * 8 + 5] = 0.5;
        let map = DenseMiDMap::new(0, 8, 6, values).unwrap();
        assert_eq!(sample_pixel(&map, (5.4, 2.6)), Some(0.5));
        // halves round away from zero
        assert_eq!(sample_pixel(&map, (4.5, 2.5)), Some(0.5));
        assert_eq!(sample_pixel(&map, (4.49, 2.5)), Some(1.0));
        assert_eq!(sample_pixel(&map, (-0.4, 0.0)), Some(1.0));
        assert_eq!(sample_pixel(&map, (-0.5, 0.0)), None);
        assert_eq!(sample_pixel(&map, (7.5, 0.0)), None);
    }

    #[test]
    fn out_of_bounds_and_no_data_are_missing() {
        let map = DenseMiDMap::new(0, 2, 1, vec![0.9, f32::NAN]).unwrap();
        let anns = [ann(0, 1, 0.9, (0.0, 0.0)), ann(0, 2, 0.9, (1.0, 0.0)), ann(0, 3, 0.9, (50.0, 0.0))];
        let s = sample_map_at_centers(&map, &anns);
        assert_eq!(s.pairs.len(), 1);
        assert_eq!(s.missing, vec![1, 2]);
    }

    #[test]
    fn predictions_follow_frames() {
        let maps = [DenseMiDMap::uniform(0, 4, 4, 0.9).unwrap(), DenseMiDMap::uniform(1, 4, 4, 1.1).unwrap()];
        let anns = [ann(1, 1, 1.0, (1.0, 1.0)), ann(0, 1, 1.0, (1.0, 1.0)), ann(2, 1, 1.0, (1.0, 1.0))];
        let preds = dense_map_predictions(&maps, &anns);
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[0].eta_pred(), f64::from(0.9f32));
        assert_eq!(preds[1].eta_pred(), f64::from(1.1f32));
    }
}
