//! Reference predictors built from two consecutive key frames.

use std::fmt;
use std::str::FromStr;

use crate::ttc::{pair_eta_tau, track_pairs, GtMethod, Skip, SkipReason, TtcError};
use crate::types::{PredictionKey, PredictionRecord, TrackedSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// `η = 1` for every object: "nothing moves".
    Unit,
    /// Ratio of raw box heights.
    HeightRatio,
    /// Ratio of orientation-corrected box heights.
    HeightRatioCorrected,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [Self::Unit, Self::HeightRatio, Self::HeightRatioCorrected];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unit => "unit",
            Self::HeightRatio => "height-ratio",
            Self::HeightRatioCorrected => "height-ratio-corrected",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown baseline {s:?} (unit, height-ratio, height-ratio-corrected)"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineOutput {
    pub predictions: Vec<PredictionRecord>,
    pub skipped: Vec<Skip>,
}

/// Track-keyed predictions for every object that has a successor in the
/// next key frame, the same objects [`crate::ttc::annotate_sequence`]
/// can annotate.
pub fn baseline_predict(seq: &TrackedSequence, kind: BaselineKind) -> BaselineOutput {
    let period = seq.period();
    let mut out = BaselineOutput::default();
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
        let eta = match kind {
            BaselineKind::Unit => Ok(1.0),
            BaselineKind::HeightRatio => pair_eta_tau(GtMethod::Tracks2D, t0, t1, period).map(|r| r.0),
            BaselineKind::HeightRatioCorrected => {
                pair_eta_tau(GtMethod::Tracks2DCorrected, t0, t1, period).map(|r| r.0)
            }
        };
        let record = eta.and_then(|eta| {
            PredictionRecord::new(t0.frame_index(), PredictionKey::Track(t0.track_id()), eta, None)
                .map_err(TtcError::from)
        });
        match record {
            Ok(r) => out.predictions.push(r),
            Err(e) => out.skipped.push(skip(SkipReason::Failed(e))),
        }
    }
    out.predictions
        .sort_by_key(|p| match p.key() {
            PredictionKey::Track(id) => (p.frame_index(), *id),
            _ => unreachable!("baselines are track keyed"),
        });
    out
}
