//! Matching predictions to ground truth and aggregating the metrics.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::{
    mid_loss, risk_label_gt, risk_label_pred, EvalConfig, EvalError, MatchMode, MetricsAccumulator,
    MetricsReport, MissingPolicy,
};
use crate::types::{BBox, MiDAnnotation, PredictionKey, PredictionRecord, RiskLabel, TrackedSequence};

/// Ground-truth boxes by `(frame, track)`, needed for IoU matching since
/// annotations only carry box centres.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GtBoxes(HashMap<(u32, u32), BBox>);

impl GtBoxes {
    pub fn from_sequence(seq: &TrackedSequence) -> Self {
        Self(
            seq.instances()
                .map(|o| ((o.frame_index(), o.track_id()), *o.bbox()))
                .collect(),
        )
    }

    pub fn get(&self, frame: u32, track: u32) -> Option<&BBox> {
        self.0.get(&(frame, track))
    }
}

/// Scores predictions against the annotations of one sequence.
pub fn evaluate(
    predictions: &[PredictionRecord],
    annotations: &[MiDAnnotation],
    config: &EvalConfig,
) -> Result<MetricsReport, EvalError> {
    evaluate_inner(predictions, annotations, None, config)
}

/// Like [`evaluate`], with ground-truth boxes for [`MatchMode::ByIoU`].
pub fn evaluate_with_boxes(
    predictions: &[PredictionRecord],
    annotations: &[MiDAnnotation],
    boxes: &GtBoxes,
    config: &EvalConfig,
) -> Result<MetricsReport, EvalError> {
    evaluate_inner(predictions, annotations, Some(boxes), config)
}

fn key_mismatch(mode: &MatchMode, p: &PredictionRecord) -> EvalError {
    EvalError::KeyModeMismatch {
        mode: mode.name(),
        key: p.key().kind(),
        frame: p.frame_index(),
    }
}

fn key_coords(key: &PredictionKey) -> Vec<f64> {
    match key {
        PredictionKey::Track(id) => vec![f64::from(*id)],
        PredictionKey::Center { u, v } => vec![*u, *v],
        PredictionKey::Box(b) => b.corners().to_vec(),
    }
}

/// Rank of each prediction in a content-based order, used to break ties so
/// results do not depend on input order.
fn canonical_rank(predictions: &[PredictionRecord]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..predictions.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (&predictions[a], &predictions[b]);
        pa.frame_index()
            .cmp(&pb.frame_index())
            .then_with(|| {
                key_coords(pa.key())
                    .iter()
                    .zip(key_coords(pb.key()).iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| pa.eta_pred().total_cmp(&pb.eta_pred()))
    });
    let mut rank = vec![0; predictions.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// One-to-one greedy assignment over `(score, gt, pred)` candidates sorted
/// best first.
fn greedy(candidates: &mut [(f64, usize, usize, usize)], n_gt: usize, n_pred: usize) -> Vec<Option<usize>> {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));
    let mut gt_match = vec![None; n_gt];
    let mut pred_used = vec![false; n_pred];
    for &(_, g, p, _) in candidates.iter() {
        if gt_match[g].is_none() && !pred_used[p] {
            gt_match[g] = Some(p);
            pred_used[p] = true;
        }
    }
    gt_match
}

fn match_predictions(
    predictions: &[PredictionRecord],
    annotations: &[MiDAnnotation],
    order: &[usize],
    boxes: Option<&GtBoxes>,
    mode: &MatchMode,
) -> Result<Vec<Option<usize>>, EvalError> {
    let pred_rank = canonical_rank(predictions);
    match *mode {
        MatchMode::ByTrackId => {
            let mut by_key = HashMap::with_capacity(predictions.len());
            for (i, p) in predictions.iter().enumerate() {
                let PredictionKey::Track(track) = *p.key() else {
                    return Err(key_mismatch(mode, p));
                };
                let frame = p.frame_index();
                if by_key.insert((frame, track), i).is_some() {
                    return Err(EvalError::DuplicatePrediction { frame, track });
                }
            }
            Ok(annotations
                .iter()
                .map(|a| by_key.get(&(a.frame_index(), a.track_id())).copied())
                .collect())
        }
        MatchMode::ByCenterRadius(radius) => {
            let mut centers = Vec::with_capacity(predictions.len());
            for p in predictions {
                centers.push(match p.key() {
                    PredictionKey::Center { u, v } => (*u, *v),
                    PredictionKey::Box(b) => b.center(),
                    PredictionKey::Track(_) => return Err(key_mismatch(mode, p)),
                });
            }
            let mut by_frame: HashMap<u32, Vec<usize>> = HashMap::new();
            for (i, p) in predictions.iter().enumerate() {
                by_frame.entry(p.frame_index()).or_default().push(i);
            }
            let mut candidates = Vec::new();
            for (g, a) in annotations.iter().enumerate() {
                let (u, v) = a.center();
                for &p in by_frame.get(&a.frame_index()).into_iter().flatten() {
                    let d = (centers[p].0 - u).hypot(centers[p].1 - v);
                    if d <= radius {
                        candidates.push((d, order[g], p, pred_rank[p]));
                    }
                }
            }
            let gt_of_rank = invert(order);
            let ranked = greedy(&mut candidates, annotations.len(), predictions.len());
            Ok(reorder(&ranked, &gt_of_rank))
        }
        MatchMode::ByIoU(threshold) => {
            let boxes = boxes.ok_or(EvalError::MissingGtBoxes)?;
            let mut pred_boxes = Vec::with_capacity(predictions.len());
            for p in predictions {
                let PredictionKey::Box(b) = p.key() else {
                    return Err(key_mismatch(mode, p));
                };
                pred_boxes.push(*b);
            }
            let mut by_frame: HashMap<u32, Vec<usize>> = HashMap::new();
            for (i, p) in predictions.iter().enumerate() {
                by_frame.entry(p.frame_index()).or_default().push(i);
            }
            let mut candidates = Vec::new();
            for (g, a) in annotations.iter().enumerate() {
                let Some(gt_box) = boxes.get(a.frame_index(), a.track_id()) else {
                    continue;
                };
                for &p in by_frame.get(&a.frame_index()).into_iter().flatten() {
                    let iou = gt_box.iou(&pred_boxes[p]);
                    if iou >= threshold {
                        candidates.push((-iou, order[g], p, pred_rank[p]));
                    }
                }
            }
            let gt_of_rank = invert(order);
            let ranked = greedy(&mut candidates, annotations.len(), predictions.len());
            Ok(reorder(&ranked, &gt_of_rank))
        }
    }
}

fn invert(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (i, &r) in order.iter().enumerate() {
        inv[r] = i;
    }
    inv
}

fn reorder(by_rank: &[Option<usize>], index_of_rank: &[usize]) -> Vec<Option<usize>> {
    let mut out = vec![None; by_rank.len()];
    for (rank, m) in by_rank.iter().enumerate() {
        out[index_of_rank[rank]] = *m;
    }
    out
}

fn annotation_order(annotations: &[MiDAnnotation]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..annotations.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&annotations[a], &annotations[b]);
        (x.frame_index(), x.track_id(), x.method())
            .cmp(&(y.frame_index(), y.track_id(), y.method()))
            .then(x.eta().total_cmp(&y.eta()))
    });
    let mut rank = vec![0; annotations.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

fn evaluate_inner(
    predictions: &[PredictionRecord],
    annotations: &[MiDAnnotation],
    boxes: Option<&GtBoxes>,
    config: &EvalConfig,
) -> Result<MetricsReport, EvalError> {
    config.validate()?;
    if let Some(first) = annotations.first() {
        if let Some(other) = annotations.iter().find(|a| a.sequence_id() != first.sequence_id()) {
            return Err(EvalError::MultipleSequences(
                first.sequence_id().into(),
                other.sequence_id().into(),
            ));
        }
    }
    let order = annotation_order(annotations);
    let matches = match_predictions(predictions, annotations, &order, boxes, &config.match_mode)?;

    let mut report = MetricsReport::for_categories(&config.categories);
    let mut by_rank: Vec<usize> = (0..annotations.len()).collect();
    by_rank.sort_by_key(|&i| order[i]);
    for i in by_rank {
        let a = &annotations[i];
        let Some(cat) = report.per_category.get_mut(a.category()) else {
            continue;
        };
        let gt_label = risk_label_gt(a.eta(), config);
        let mut delta = MetricsAccumulator::default();
        match matches[i] {
            Some(p) => {
                let pred = &predictions[p];
                delta.add_loss(mid_loss(pred.eta_pred(), a.eta())?, a.eta() < 1.0);
                if gt_label == RiskLabel::Neutral {
                    delta.n_ignored_neutral += 1;
                } else {
                    let label = pred
                        .risk_pred()
                        .unwrap_or_else(|| risk_label_pred(pred.eta_pred(), config));
                    delta.risk.add(label, gt_label);
                }
            }
            None => {
                delta.n_missing_pred += 1;
                if config.missing_policy == MissingPolicy::CountMissing {
                    if gt_label == RiskLabel::Neutral {
                        delta.n_ignored_neutral += 1;
                    } else {
                        delta.risk.add(RiskLabel::Safe, gt_label);
                    }
                }
            }
        }
        cat.merge(&delta);
        report.overall.merge(&delta);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AnnotationMethod, Tau};
    use proptest::prelude::*;

    fn ann(frame: u32, track: u32, cat: &str, eta: f64, center: (f64, f64)) -> MiDAnnotation {
        let tau = if eta == 1.0 { Tau::NoContact } else { Tau::Seconds(0.1 / (1.0 - eta)) };
        MiDAnnotation::new("s", frame, track, cat, eta, tau, center, AnnotationMethod::Tracks3D).unwrap()
    }

    fn track_pred(frame: u32, track: u32, eta: f64) -> PredictionRecord {
        PredictionRecord::new(frame, PredictionKey::Track(track), eta, None).unwrap()
    }

    fn gt_set() -> Vec<MiDAnnotation> {
        vec![
            ann(0, 1, "Car", 0.95, (100.0, 100.0)),
            ann(0, 2, "Pedestrian", 1.05, (300.0, 120.0)),
            ann(1, 1, "Car", 0.999, (101.0, 100.0)),
            ann(1, 3, "Cyclist", 0.9, (500.0, 150.0)),
        ]
    }

    #[test]
    fn perfect_predictions() {
        let gt = gt_set();
        let preds: Vec<_> = gt.iter().map(|a| track_pred(a.frame_index(), a.track_id(), a.eta())).collect();
        let r = evaluate(&preds, &gt, &EvalConfig::default()).unwrap();
        assert_eq!(r.o_mid(), Some(0.0));
        assert_eq!(r.o_mid_plus(), Some(0.0));
        assert_eq!(r.risk_accuracy(), Some(1.0));
        assert_eq!(r.overall.n_missing_pred, 0);
        // the cyclist is outside the category set
        assert_eq!(r.overall.n_matched, 3);
        assert_eq!(r.overall.n_ignored_neutral, 1);
        assert_eq!(r.per_category.keys().collect::<Vec<_>>(), ["Car", "Pedestrian"]);
    }

    #[test]
    fn missing_policies() {
        let gt = gt_set();
        let preds = vec![track_pred(0, 2, 1.05)];
        let skip = evaluate(&preds, &gt, &EvalConfig::default()).unwrap();
        assert_eq!(skip.overall.n_missing_pred, 2);
        assert_eq!(skip.overall.n_matched, 1);
        assert_eq!(skip.risk_accuracy(), None);
        let cfg = EvalConfig { missing_policy: MissingPolicy::CountMissing, ..Default::default() };
        let count = evaluate(&preds, &gt, &cfg).unwrap();
        assert_eq!(count.overall.n_missing_pred, 2);
        assert_eq!(count.o_mid(), skip.o_mid());
        // the missing approaching car becomes a false negative
        assert_eq!(count.overall.risk.fn_, 1);
        assert_eq!(count.risk_accuracy(), Some(0.0));
    }

    #[test]
    fn category_filter() {
        let gt = gt_set();
        let preds: Vec<_> = gt.iter().map(|a| track_pred(a.frame_index(), a.track_id(), 1.0)).collect();
        let cfg = EvalConfig { categories: ["Car".to_string()].into(), ..Default::default() };
        let r = evaluate(&preds, &gt, &cfg).unwrap();
        assert_eq!(r.per_category.len(), 1);
        assert_eq!(r.overall.n_matched, 2);
    }

    #[test]
    fn key_mode_errors() {
        let gt = gt_set();
        let center = PredictionRecord::new(0, PredictionKey::Center { u: 1.0, v: 1.0 }, 0.9, None).unwrap();
        assert!(matches!(
            evaluate(&[center], &gt, &EvalConfig::default()),
            Err(EvalError::KeyModeMismatch { mode: "track", key: "center", frame: 0 })
        ));
        let cfg = EvalConfig { match_mode: MatchMode::ByCenterRadius(5.0), ..Default::default() };
        assert!(evaluate(&[track_pred(0, 1, 0.9)], &gt, &cfg).is_err());
        let cfg = EvalConfig { match_mode: MatchMode::ByIoU(0.5), ..Default::default() };
        assert_eq!(evaluate(&[], &gt, &cfg), Err(EvalError::MissingGtBoxes));
        assert!(matches!(
            evaluate(&[track_pred(0, 1, 0.9), track_pred(0, 1, 0.8)], &gt, &EvalConfig::default()),
            Err(EvalError::DuplicatePrediction { frame: 0, track: 1 })
        ));
        let mut two = gt.clone();
        two.push(MiDAnnotation::new("t", 0, 9, "Car", 1.0, Tau::NoContact, (0.0, 0.0), AnnotationMethod::Tracks3D).unwrap());
        assert!(matches!(evaluate(&[], &two, &EvalConfig::default()), Err(EvalError::MultipleSequences(..))));
    }

    #[test]
    fn center_matching_is_greedy_one_to_one() {
        let gt = vec![ann(0, 1, "Car", 0.9, (100.0, 100.0)), ann(0, 2, "Car", 0.8, (104.0, 100.0))];
        let p = |u: f64, eta: f64| PredictionRecord::new(0, PredictionKey::Center { u, v: 100.0 }, eta, None).unwrap();
        // the prediction at 103 is closest to track 2, so track 1 gets the one at 99
        let preds = vec![p(103.0, 0.8), p(99.0, 0.9)];
        let cfg = EvalConfig { match_mode: MatchMode::ByCenterRadius(5.0), ..Default::default() };
        let r = evaluate(&preds, &gt, &cfg).unwrap();
        assert_eq!(r.overall.n_matched, 2);
        assert_eq!(r.o_mid(), Some(0.0));
        // one prediction for two objects leaves one missing
        let r = evaluate(&preds[..1], &gt, &cfg).unwrap();
        assert_eq!(r.overall.n_missing_pred, 1);
        // outside the radius
        let r = evaluate(&[p(200.0, 0.9)], &gt, &cfg).unwrap();
        assert_eq!(r.overall.n_matched, 0);
    }

    #[test]
    fn iou_matching() {
        let cam = crate::types::CameraIntrinsics::new(700.0, (621.0, 187.5), (1242, 375)).unwrap();
        let b = BBox::new(90.0, 90.0, 110.0, 110.0).unwrap();
        let inst = crate::types::ObjectInstance::new(0, 1, "Car", b).unwrap();
        let seq = TrackedSequence::new("s", cam, 10.0, vec![crate::types::Frame::new(0, vec![inst]).unwrap()]).unwrap();
        let gt = vec![ann(0, 1, "Car", 0.9, b.center())];
        let shifted = PredictionRecord::new(0, PredictionKey::Box(b.translate(2.0, 0.0).unwrap()), 0.9, None).unwrap();
        let far = PredictionRecord::new(0, PredictionKey::Box(b.translate(15.0, 0.0).unwrap()), 0.5, None).unwrap();
        let cfg = EvalConfig { match_mode: MatchMode::ByIoU(0.5), ..Default::default() };
        let r = evaluate_with_boxes(&[far.clone(), shifted], &gt, &GtBoxes::from_sequence(&seq), &cfg).unwrap();
        assert_eq!(r.o_mid(), Some(0.0));
        let r = evaluate_with_boxes(&[far], &gt, &GtBoxes::from_sequence(&seq), &cfg).unwrap();
        assert_eq!(r.overall.n_missing_pred, 1);
    }

    #[test]
    fn explicit_risk_label_wins() {
        let gt = vec![ann(0, 1, "Car", 0.9, (0.0, 0.0))];
        let p = PredictionRecord::new(0, PredictionKey::Track(1), 0.9, Some(RiskLabel::Safe)).unwrap();
        let r = evaluate(&[p], &gt, &EvalConfig::default()).unwrap();
        assert_eq!(r.overall.risk.fn_, 1);
    }

    proptest! {
        #[test]
        fn track_matching_is_order_independent(
            etas in prop::collection::vec((0.5f64..1.5, 0.5f64..1.5, any::<bool>()), 1..40),
            rot in 0usize..40,
        ) {
            let gt: Vec<_> = etas.iter().enumerate()
                .map(|(i, (g, _, _))| ann(i as u32 / 3, i as u32 % 3, if i % 2 == 0 { "Car" } else { "Pedestrian" }, *g, (0.0, 0.0)))
                .collect();
            let preds: Vec<_> = etas.iter().enumerate()
                .filter(|(_, (_, _, keep))| *keep)
                .map(|(i, (_, p, _))| track_pred(i as u32 / 3, i as u32 % 3, *p))
                .collect();
            let cfg = EvalConfig::default();
            let a = evaluate(&preds, &gt, &cfg).unwrap();
            let mut gt2 = gt.clone();
            gt2.reverse();
            let mut preds2 = preds.clone();
            let n = preds2.len().max(1);
            preds2.rotate_left(rot % n);
            let b = evaluate(&preds2, &gt2, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
