//! Annotation files: one tab-separated record per annotated object,
//!
//! ```text
//! ottc-annotations v1
//! <sequence_id> <frame> <track> <category> <eta> <tau_s|null> <u> <v> <method>
//! ```

use std::cmp::Ordering;
use std::fmt::Write as _;

use super::{content_lines, fmt_f64, parse_f64, parse_u32, IngestError};
use crate::types::{AnnotationMethod, MiDAnnotation, Tau};

pub const ANNOTATIONS_HEADER: &str = "ottc-annotations v1";
const FIELDS: usize = 9;

fn record_order(a: &MiDAnnotation, b: &MiDAnnotation) -> Ordering {
    a.sequence_id()
        .cmp(b.sequence_id())
        .then(a.frame_index().cmp(&b.frame_index()))
        .then(a.track_id().cmp(&b.track_id()))
        .then(a.method().cmp(&b.method()))
}

/// Records are written sorted by (sequence, frame, track, method).
pub fn write_annotations(annotations: &[MiDAnnotation]) -> String {
    let mut sorted: Vec<&MiDAnnotation> = annotations.iter().collect();
    sorted.sort_by(|a, b| record_order(a, b));
    let mut out = String::with_capacity(64 * (sorted.len() + 1));
    out.push_str(ANNOTATIONS_HEADER);
    out.push('\n');
    for a in sorted {
        let tau = match a.tau() {
            Tau::Seconds(s) => fmt_f64(s),
            Tau::NoContact => "null".into(),
        };
        let (u, v) = a.center();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            a.sequence_id(),
            a.frame_index(),
            a.track_id(),
            a.category(),
            fmt_f64(a.eta()),
            tau,
            fmt_f64(u),
            fmt_f64(v),
            a.method()
        );
    }
    out
}

pub fn parse_annotations(text: &str) -> Result<Vec<MiDAnnotation>, IngestError> {
    let mut out = Vec::new();
    for (n, line) in content_lines(text, ANNOTATIONS_HEADER)? {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != FIELDS {
            return Err(IngestError::schema(
                format!("line {n}"),
                format!("{} fields, expected {FIELDS}", f.len()),
            ));
        }
        let schema = |e: IngestError| match e {
            IngestError::MalformedRecord { line, reason } => {
                IngestError::schema(format!("line {line}"), reason)
            }
            other => other,
        };
        let frame = parse_u32(n, "frame_index", f[1]).map_err(schema)?;
        let track = parse_u32(n, "track_id", f[2]).map_err(schema)?;
        let eta = parse_f64(n, "eta", f[4]).map_err(schema)?;
        let tau = match f[5] {
            "null" => Tau::NoContact,
            s => Tau::Seconds(parse_f64(n, "tau_s", s).map_err(schema)?),
        };
        let u = parse_f64(n, "u", f[6]).map_err(schema)?;
        let v = parse_f64(n, "v", f[7]).map_err(schema)?;
        let method: AnnotationMethod = f[8]
            .parse()
            .map_err(|e: crate::types::InvariantError| IngestError::schema(format!("line {n}.method"), e.reason))?;
        let a = MiDAnnotation::new(f[0], frame, track, f[3], eta, tau, (u, v), method)
            .map_err(|e| IngestError::schema(format!("line {n}.{}", e.field), e.reason))?;
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ann(seq: &str, frame: u32, track: u32, eta: f64, tau: Tau) -> MiDAnnotation {
        MiDAnnotation::new(seq, frame, track, "Car", eta, tau, (614.58, 172.825), AnnotationMethod::Tracks3D)
            .unwrap()
    }

    #[test]
    fn three_record_round_trip() {
        let items = vec![
            ann("0004", 0, 2, 0.95, Tau::Seconds(0.1 / (1.0 - 0.95))),
            ann("0004", 0, 1, 1.0, Tau::NoContact),
            ann("0011", 3, 7, 1.025, Tau::Seconds(-4.0)),
        ];
        let text = write_annotations(&items);
        let back = parse_annotations(&text).unwrap();
        let mut expected = items.clone();
        expected.sort_by(record_order);
        assert_eq!(back, expected);
        assert_eq!(write_annotations(&back), text);
    }

    #[test]
    fn no_contact_written_as_null() {
        let text = write_annotations(&[ann("s", 0, 1, 1.0, Tau::NoContact)]);
        let record = text.lines().nth(1).unwrap();
        assert_eq!(record.split('\t').nth(5), Some("null"));
    }

    #[test]
    fn schema_errors() {
        assert!(parse_annotations("").is_err());
        assert!(parse_annotations("ottc-annotations v2\n").is_err());
        let good = write_annotations(&[ann("s", 0, 1, 0.95, Tau::Seconds(2.0))]);
        assert!(parse_annotations(&good.replace("0.95", "-0.95")).is_err());
        assert!(parse_annotations(&good.replace("tracks3d", "magic")).is_err());
        assert!(parse_annotations(&good.replace("\t2.0", "\t-2.0")).is_err());
        let truncated = good.rsplit_once('\t').unwrap().0;
        assert!(matches!(
            parse_annotations(truncated),
            Err(IngestError::SchemaViolation { .. })
        ));
    }

    prop_compose! {
        fn arb_annotation()(
            seq in "[a-z0-9_-]{1,8}",
            frame in 0u32..10_000,
            track in 0u32..1000,
            cat in prop::sample::select(vec!["Car", "Pedestrian", "Van", "Person sitting"]),
            eta in prop_oneof![1 => Just(1.0), 20 => 1e-3f64..10.0],
            u in -1e4f64..1e4,
            v in -1e4f64..1e4,
            period in prop::sample::select(vec![0.1, 0.5, 1.0 / 30.0]),
            method in prop::sample::select(AnnotationMethod::ALL.to_vec()),
        ) -> MiDAnnotation {
            let tau = if eta == 1.0 { Tau::NoContact } else { Tau::Seconds(period / (1.0 - eta)) };
            MiDAnnotation::new(seq, frame, track, cat, eta, tau, (u, v), method).unwrap()
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(items in prop::collection::vec(arb_annotation(), 0..50)) {
            let text = write_annotations(&items);
            let back = parse_annotations(&text).unwrap();
            let mut expected = items.clone();
            expected.sort_by(record_order);
            prop_assert_eq!(back.len(), expected.len());
            for (a, b) in back.iter().zip(&expected) {
                prop_assert_eq!(a.eta().to_bits(), b.eta().to_bits());
                prop_assert_eq!(a.tau().seconds().map(f64::to_bits), b.tau().seconds().map(f64::to_bits));
                prop_assert_eq!(a.center().0.to_bits(), b.center().0.to_bits());
            }
            prop_assert_eq!(write_annotations(&back), text);
        }

        #[test]
        fn parser_is_total(text in ".{0,200}") {
            let _ = parse_annotations(&format!("{ANNOTATIONS_HEADER}\n{text}"));
        }
    }
}
