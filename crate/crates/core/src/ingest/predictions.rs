//! Prediction files, one whitespace-separated record per predicted object:
//!
//! ```text
//! ottc-predictions v1
//! <frame> track <track_id> <eta> [risky|safe]
//! <frame> center <u> <v> <eta> [risky|safe]
//! <frame> box <x1> <y1> <x2> <y2> <eta> [risky|safe]
//! ```

use std::fmt::Write as _;

use super::{content_lines, fmt_f64, parse_f64, parse_u32, IngestError, ParseDiagnostics};
use crate::types::{BBox, PredictionKey, PredictionRecord, RiskLabel};

pub const PREDICTIONS_HEADER: &str = "ottc-predictions v1";

/// Records with `eta <= 0` are dropped with a diagnostic; structural errors
/// abort with the line number.
pub fn parse_predictions(
    text: &str,
) -> Result<(Vec<PredictionRecord>, ParseDiagnostics), IngestError> {
    let mut records = Vec::new();
    let mut diagnostics = ParseDiagnostics::default();
    for (n, line) in content_lines(text, PREDICTIONS_HEADER)? {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 2 {
            return Err(IngestError::malformed(n, "expected <frame> <key kind> ..."));
        }
        let frame = parse_u32(n, "frame_index", f[0])?;
        let key_len = match f[1] {
            "track" => 1,
            "center" => 2,
            "box" => 4,
            other => {
                return Err(IngestError::malformed(
                    n,
                    format!("unknown key kind {other:?} (track, center or box)"),
                ))
            }
        };
        let rest = &f[2..];
        if rest.len() != key_len + 1 && rest.len() != key_len + 2 {
            return Err(IngestError::malformed(
                n,
                format!("{} key takes {key_len} values, an eta and an optional risk label", f[1]),
            ));
        }
        let key = match f[1] {
            "track" => PredictionKey::Track(parse_u32(n, "track_id", rest[0])?),
            "center" => PredictionKey::Center {
                u: parse_f64(n, "u", rest[0])?,
                v: parse_f64(n, "v", rest[1])?,
            },
            _ => {
                let c: Vec<f64> = rest[..4]
                    .iter()
                    .map(|s| parse_f64(n, "box", s))
                    .collect::<Result<_, _>>()?;
                let bbox = BBox::new(c[0], c[1], c[2], c[3])
                    .map_err(|e| IngestError::malformed(n, e.to_string()))?;
                PredictionKey::Box(bbox)
            }
        };
        let eta = parse_f64(n, "eta", rest[key_len])?;
        let risk = match rest.get(key_len + 1) {
            None => None,
            Some(&"risky") => Some(RiskLabel::Risky),
            Some(&"safe") => Some(RiskLabel::Safe),
            Some(other) => {
                return Err(IngestError::malformed(
                    n,
                    format!("risk label {other:?} is not risky or safe"),
                ))
            }
        };
        if eta <= 0.0 {
            diagnostics.skip(n, format!("eta {eta} is not positive"));
            continue;
        }
        records.push(
            PredictionRecord::new(frame, key, eta, risk)
                .map_err(|e| IngestError::malformed(n, e.to_string()))?,
        );
    }
    Ok((records, diagnostics))
}

/// Records are written in the given order.
pub fn write_predictions(records: &[PredictionRecord]) -> String {
    let mut out = String::with_capacity(40 * (records.len() + 1));
    out.push_str(PREDICTIONS_HEADER);
    out.push('\n');
    for r in records {
        let _ = write!(out, "{} ", r.frame_index());
        let _ = match r.key() {
            PredictionKey::Track(id) => write!(out, "track {id}"),
            PredictionKey::Center { u, v } => write!(out, "center {} {}", fmt_f64(*u), fmt_f64(*v)),
            PredictionKey::Box(b) => {
                let [x1, y1, x2, y2] = b.corners();
                write!(
                    out,
                    "box {} {} {} {}",
                    fmt_f64(x1),
                    fmt_f64(y1),
                    fmt_f64(x2),
                    fmt_f64(y2)
                )
            }
        };
        let _ = write!(out, " {}", fmt_f64(r.eta_pred()));
        if let Some(label) = r.risk_pred() {
            let _ = write!(out, " {}", label.as_str());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_records() {
        let text = "ottc-predictions v1\n0 track 2 0.97\n0 center 614.58 172.82 1.01 safe\n# comment\n\n3 box 1 2 30 40 0.5 risky\n";
        let (recs, diag) = parse_predictions(text).unwrap();
        assert!(diag.is_empty());
        assert_eq!(recs[0].key(), &PredictionKey::Track(2));
        assert_eq!(recs[0].eta_pred(), 0.97);
        assert_eq!(recs[1].key(), &PredictionKey::Center { u: 614.58, v: 172.82 });
        assert_eq!(recs[1].risk_pred(), Some(RiskLabel::Safe));
        assert_eq!(recs[2].frame_index(), 3);
        assert_eq!(write_predictions(&recs), text.replace("# comment\n\n", "").replace(" 1 2 30 40 0.5", " 1.0 2.0 30.0 40.0 0.5"));
    }

    #[test]
    fn non_positive_eta_is_a_diagnostic() {
        let (recs, diag) =
            parse_predictions("ottc-predictions v1\n0 track 1 0\n0 track 2 -1\n0 track 3 0.9\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(diag.skipped_records, 2);
        assert_eq!(diag.warnings[0].0, 2);
    }

    #[test]
    fn malformed_lines() {
        for bad in [
            "0 track 1",
            "0 lane 1 0.9",
            "x track 1 0.9",
            "0 track 1 0,9",
            "0 center 1 0.9",
            "0 track 1 0.9 neutral",
            "0 box 5 5 1 1 0.9",
        ] {
            let err = parse_predictions(&format!("ottc-predictions v1\n{bad}\n")).unwrap_err();
            assert!(matches!(err, IngestError::MalformedRecord { line: 2, .. }), "{bad}: {err:?}");
        }
    }
}
