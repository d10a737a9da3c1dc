//! Object-level MiD metrics and the evaluation protocol.
//!
//! The MiD loss of one object is `|ln η_pred − ln η_gt| · 10⁴`. oMiD is its
//! mean over matched objects and oMiD⁺ the mean over objects whose
//! ground-truth `η < 1`. Binary risk accuracy counts an object as risky when
//! `η < risk_lower`; ground truth inside `[risk_lower, risk_upper)` is
//! neutral and left out of the score.

mod baseline;
mod dense;
mod matching;
mod report;

pub use baseline::{baseline_predict, BaselineKind, BaselineOutput};
pub use dense::{dense_map_predictions, sample_map_at_centers, sample_pixel, CenterSamples};
pub use matching::{evaluate, evaluate_with_boxes, GtBoxes};
pub use report::{MetricsAccumulator, MetricsReport, REPORT_HEADER};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::types::RiskLabel;

/// Scale applied to the log-ratio error.
pub const MID_SCALE: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("eta must be > 0, got {0}")]
    NonPositiveEta(f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: {left} predicted vs {right} ground-truth labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("risk accuracy undefined: no positives in prediction or ground truth")]
    UndefinedAccuracy,
    #[error("match mode {mode} cannot use {key}-keyed prediction (frame {frame})")]
    KeyModeMismatch {
        mode: &'static str,
        key: &'static str,
        frame: u32,
    },
    #[error("duplicate prediction for frame {frame}, track {track}")]
    DuplicatePrediction { frame: u32, track: u32 },
    #[error("annotations span several sequences ({0} and {1}); evaluate one sequence at a time")]
    MultipleSequences(String, String),
    #[error("IoU matching needs ground-truth boxes")]
    MissingGtBoxes,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// How predictions are tied to ground-truth objects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchMode {
    /// Track-keyed predictions matched on `(frame, track_id)`.
    ByTrackId,
    /// Center- or box-keyed predictions matched to the nearest ground-truth
    /// center within `r` pixels, greedily by distance, one to one.
    ByCenterRadius(f64),
    /// Box-keyed predictions matched greedily by IoU at or above the threshold.
    ByIoU(f64),
}

impl MatchMode {
    pub fn name(&self) -> &'static str {
        match self {
            MatchMode::ByTrackId => "track",
            MatchMode::ByCenterRadius(_) => "center",
            MatchMode::ByIoU(_) => "iou",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchMode::ByTrackId => f.write_str("track"),
            MatchMode::ByCenterRadius(r) => write!(f, "center:{r}"),
            MatchMode::ByIoU(t) => write!(f, "iou:{t}"),
        }
    }
}

/// Parses `track`, `center:<radius px>` or `iou:<threshold>`.
impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64, String> {
            let a = a.ok_or_else(|| format!("match mode {name} needs a value, e.g. {name}:0.5"))?;
            a.parse::<f64>()
                .map_err(|_| format!("match mode value {a:?} is not a number"))
        };
        match name {
            "track" if arg.is_none() => Ok(MatchMode::ByTrackId),
            "center" => Ok(MatchMode::ByCenterRadius(number(arg)?)),
            "iou" => Ok(MatchMode::ByIoU(number(arg)?)),
            _ => Err(format!(
                "unknown match mode {s:?} (track, center:<r>, iou:<threshold>)"
            )),
        }
    }
}

/// What happens to a ground-truth object without a matched prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Left out of every metric; only `n_missing_pred` records it.
    #[default]
    Skip,
    /// Left out of oMiD, scored as a non-risky prediction in risk accuracy.
    CountMissing,
}

impl MissingPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            MissingPolicy::Skip => "skip",
            MissingPolicy::CountMissing => "count-missing",
        }
    }
}

impl FromStr for MissingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip" => Ok(MissingPolicy::Skip),
            "count-missing" => Ok(MissingPolicy::CountMissing),
            _ => Err(format!("unknown missing policy {s:?} (skip, count-missing)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub categories: BTreeSet<String>,
    pub risk_lower: f64,
    pub risk_upper: f64,
    pub match_mode: MatchMode,
    pub missing_policy: MissingPolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            categories: ["Car", "Pedestrian"].map(String::from).into(),
            risk_lower: 0.998,
            risk_upper: 1.002,
            match_mode: MatchMode::ByTrackId,
            missing_policy: MissingPolicy::Skip,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidConfig(m));
        if self.categories.is_empty() {
            return bad("category set is empty".into());
        }
        if !(self.risk_lower < 1.0 && 1.0 < self.risk_upper) {
            return bad(format!(
                "risk band [{}, {}) must contain 1",
                self.risk_lower, self.risk_upper
            ));
        }
        match self.match_mode {
            MatchMode::ByCenterRadius(r) if !(r > 0.0 && r.is_finite()) => {
                bad(format!("center radius {r} must be > 0"))
            }
            MatchMode::ByIoU(t) if !(t > 0.0 && t <= 1.0) => {
                bad(format!("IoU threshold {t} outside (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

fn check_eta(eta: f64) -> Result<f64, EvalError> {
    if eta > 0.0 && eta.is_finite() {
        Ok(eta)
    } else {
        Err(EvalError::NonPositiveEta(eta))
    }
}

/// `|ln η_pred − ln η_gt| · 10⁴`.
///
/// Evaluated as `ln_1p((hi − lo) / lo)` when the two values are within a
/// factor of two, where `hi − lo` is exact, so the result keeps full
/// relative precision even for nearly equal arguments.
pub fn mid_loss(eta_pred: f64, eta_gt: f64) -> Result<f64, EvalError> {
    let (a, b) = (check_eta(eta_pred)?, check_eta(eta_gt)?);
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let log_ratio = if hi <= 2.0 * lo {
        ((hi - lo) / lo).ln_1p()
    } else {
        hi.ln() - lo.ln()
    };
    Ok(log_ratio * MID_SCALE)
}

/// `(oMiD, oMiD⁺)` over `(η_pred, η_gt)` pairs. oMiD⁺ is `None` when no
/// pair has `η_gt < 1`.
pub fn o_mid(pairs: &[(f64, f64)]) -> Result<(f64, Option<f64>), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput("no (eta_pred, eta_gt) pairs"));
    }
    let mut acc = MetricsAccumulator::default();
    for &(p, g) in pairs {
        acc.add_loss(mid_loss(p, g)?, g < 1.0);
    }
    Ok((
        acc.o_mid().expect("nonempty"),
        acc.o_mid_plus(),
    ))
}

/// Ground-truth risk label under the config's band.
pub fn risk_label_gt(eta_gt: f64, config: &EvalConfig) -> RiskLabel {
    if eta_gt < config.risk_lower {
        RiskLabel::Risky
    } else if eta_gt < config.risk_upper {
        RiskLabel::Neutral
    } else {
        RiskLabel::Safe
    }
}

/// Predictions are binary: risky iff `η_pred < risk_lower`.
pub fn risk_label_pred(eta_pred: f64, config: &EvalConfig) -> RiskLabel {
    if eta_pred < config.risk_lower {
        RiskLabel::Risky
    } else {
        RiskLabel::Safe
    }
}

/// Confusion counts with risky as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RiskCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl RiskCounts {
    /// Neutral ground truth is ignored; a neutral prediction counts as safe.
    pub fn add(&mut self, pred: RiskLabel, gt: RiskLabel) {
        let pred_risky = pred == RiskLabel::Risky;
        match gt {
            RiskLabel::Neutral => {}
            RiskLabel::Risky if pred_risky => self.tp += 1,
            RiskLabel::Risky => self.fn_ += 1,
            _ if pred_risky => self.fp += 1,
            _ => self.tn += 1,
        }
    }

    /// `TP / (TP + FP + FN)`; `None` when the denominator is zero.
    pub fn accuracy(&self) -> Option<f64> {
        let denom = self.tp + self.fp + self.fn_;
        (denom > 0).then(|| self.tp as f64 / denom as f64)
    }
}

pub fn binary_risk_accuracy(pred: &[RiskLabel], gt: &[RiskLabel]) -> Result<f64, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    let mut counts = RiskCounts::default();
    for (&p, &g) in pred.iter().zip(gt) {
        counts.add(p, g);
    }
    counts.accuracy().ok_or(EvalError::UndefinedAccuracy)
}
