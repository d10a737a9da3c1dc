//! Metric accumulators and the `ottc-report v1` record format.
//!
//! A report stores sums and counts rather than means so reports of disjoint
//! sequences merge exactly by addition. Derived columns are written for
//! external tools and recomputed on parse.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::RiskCounts;
use crate::ingest::{content_lines, fmt_f64, parse_f64, IngestError};

pub const REPORT_HEADER: &str = "ottc-report v1";

const COLUMNS: [&str; 15] = [
    "scope",
    "name",
    "n_matched",
    "loss_sum",
    "n_plus",
    "loss_sum_plus",
    "n_missing_pred",
    "n_ignored_neutral",
    "tp",
    "fp",
    "fn",
    "tn",
    "o_mid",
    "o_mid_plus",
    "risk_accuracy",
];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub n_matched: u64,
    pub loss_sum: f64,
    /// Matched objects with ground-truth `η < 1`.
    pub n_plus: u64,
    pub loss_sum_plus: f64,
    pub n_missing_pred: u64,
    /// Ground truth inside the neutral band, left out of risk accuracy.
    pub n_ignored_neutral: u64,
    pub risk: RiskCounts,
}

impl MetricsAccumulator {
    pub fn add_loss(&mut self, loss: f64, approaching: bool) {
        self.n_matched += 1;
        self.loss_sum += loss;
        if approaching {
            self.n_plus += 1;
            self.loss_sum_plus += loss;
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.n_matched += other.n_matched;
        self.loss_sum += other.loss_sum;
        self.n_plus += other.n_plus;
        self.loss_sum_plus += other.loss_sum_plus;
        self.n_missing_pred += other.n_missing_pred;
        self.n_ignored_neutral += other.n_ignored_neutral;
        self.risk.tp += other.risk.tp;
        self.risk.fp += other.risk.fp;
        self.risk.fn_ += other.risk.fn_;
        self.risk.tn += other.risk.tn;
    }

    pub fn o_mid(&self) -> Option<f64> {
        (self.n_matched > 0).then(|| self.loss_sum / self.n_matched as f64)
    }

    pub fn o_mid_plus(&self) -> Option<f64> {
        (self.n_plus > 0).then(|| self.loss_sum_plus / self.n_plus as f64)
    }

    pub fn risk_accuracy(&self) -> Option<f64> {
        self.risk.accuracy()
    }
}

/// Overall metrics plus one entry per configured category.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub overall: MetricsAccumulator,
    pub per_category: BTreeMap<String, MetricsAccumulator>,
}

impl MetricsReport {
    pub fn for_categories<'a>(categories: impl IntoIterator<Item = &'a String>) -> Self {
        Self {
            overall: MetricsAccumulator::default(),
            per_category: categories
                .into_iter()
                .map(|c| (c.clone(), MetricsAccumulator::default()))
                .collect(),
        }
    }

    /// Adds another report's counts. Merging in a fixed order gives
    /// bit-identical sums regardless of how the work was scheduled.
    pub fn merge(&mut self, other: &MetricsReport) {
        self.overall.merge(&other.overall);
        for (cat, acc) in &other.per_category {
            self.per_category.entry(cat.clone()).or_default().merge(acc);
        }
    }

    pub fn merged<'a>(
        categories: &BTreeSet<String>,
        reports: impl IntoIterator<Item = &'a MetricsReport>,
    ) -> Self {
        let mut out = Self::for_categories(categories);
        for r in reports {
            out.merge(r);
        }
        out
    }

    pub fn o_mid(&self) -> Option<f64> {
        self.overall.o_mid()
    }

    pub fn o_mid_plus(&self) -> Option<f64> {
        self.overall.o_mid_plus()
    }

    pub fn risk_accuracy(&self) -> Option<f64> {
        self.overall.risk_accuracy()
    }

    fn rows(&self) -> impl Iterator<Item = (&'static str, &str, &MetricsAccumulator)> {
        std::iter::once(("overall", "*", &self.overall)).chain(
            self.per_category
                .iter()
                .map(|(c, a)| ("category", c.as_str(), a)),
        )
    }

    /// Machine-readable record, bit-exact under [`MetricsReport::parse`].
    pub fn to_record(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_f64);
        let mut out = format!("{REPORT_HEADER}\n# {}\n", COLUMNS.join("\t"));
        for (scope, name, a) in self.rows() {
            let _ = writeln!(
                out,
                "{scope}\t{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                a.n_matched,
                fmt_f64(a.loss_sum),
                a.n_plus,
                fmt_f64(a.loss_sum_plus),
                a.n_missing_pred,
                a.n_ignored_neutral,
                a.risk.tp,
                a.risk.fp,
                a.risk.fn_,
                a.risk.tn,
                opt(a.o_mid()),
                opt(a.o_mid_plus()),
                opt(a.risk_accuracy()),
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut overall = None;
        let mut per_category = BTreeMap::new();
        for (n, line) in content_lines(text, REPORT_HEADER)? {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != COLUMNS.len() {
                return Err(IngestError::malformed(
                    n,
                    format!("{} fields, expected {}", f.len(), COLUMNS.len()),
                ));
            }
            let count = |i: usize| -> Result<u64, IngestError> {
                f[i].parse()
                    .map_err(|_| IngestError::malformed(n, format!("{}: {:?} is not a count", COLUMNS[i], f[i])))
            };
            let acc = MetricsAccumulator {
                n_matched: count(2)?,
                loss_sum: parse_f64(n, COLUMNS[3], f[3])?,
                n_plus: count(4)?,
                loss_sum_plus: parse_f64(n, COLUMNS[5], f[5])?,
                n_missing_pred: count(6)?,
                n_ignored_neutral: count(7)?,
                risk: RiskCounts {
                    tp: count(8)?,
                    fp: count(9)?,
                    fn_: count(10)?,
                    tn: count(11)?,
                },
            };
            match f[0] {
                "overall" if overall.is_none() => overall = Some(acc),
                "overall" => return Err(IngestError::malformed(n, "second overall row")),
                "category" => {
                    if per_category.insert(f[1].to_string(), acc).is_some() {
                        return Err(IngestError::malformed(n, format!("category {:?} repeated", f[1])));
                    }
                }
                other => {
                    return Err(IngestError::malformed(
                        n,
                        format!("scope {other:?} is not overall or category"),
                    ))
                }
            }
        }
        Ok(Self {
            overall: overall.ok_or_else(|| IngestError::malformed(1, "no overall row"))?,
            per_category,
        })
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"));
        let mut out = format!(
            "{:<14} {:>8} {:>10} {:>10} {:>9} {:>8} {:>8}\n",
            "scope", "matched", "oMiD", "oMiD+", "risk_acc", "missing", "neutral"
        );
        for (_, name, a) in self.rows() {
            let label = if name == "*" { "overall" } else { name };
            let _ = writeln!(
                out,
                "{:<14} {:>8} {:>10} {:>10} {:>9} {:>8} {:>8}",
                label,
                a.n_matched,
                opt(a.o_mid(), 2),
                opt(a.o_mid_plus(), 2),
                opt(a.risk_accuracy(), 4),
                a.n_missing_pred,
                a.n_ignored_neutral,
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> MetricsReport {
        let cats: BTreeSet<String> = ["Car", "Pedestrian"].map(String::from).into();
        let mut r = MetricsReport::for_categories(&cats);
        r.overall.add_loss(100.5, true);
        r.overall.add_loss(0.0, false);
        r.overall.risk.tp = 1;
        r.per_category.get_mut("Car").unwrap().add_loss(100.5, true);
        r
    }

    #[test]
    fn record_round_trip() {
        let r = sample();
        let text = r.to_record();
        assert!(text.starts_with("ottc-report v1\n"));
        assert_eq!(MetricsReport::parse(&text).unwrap(), r);
        assert!(text.contains("category\tPedestrian\t0\t0.0\t0\t0.0\t0\t0\t0\t0\t0\t0\t-\t-\t-"));
    }

    #[test]
    fn table_shows_every_category() {
        let t = sample().to_table();
        assert!(t.contains("overall"));
        assert!(t.contains("Pedestrian"));
        assert!(t.contains("50.25"));
    }

    #[test]
    fn malformed_records() {
        assert!(MetricsReport::parse("ottc-report v1\n").is_err());
        let text = sample().to_record();
        assert!(MetricsReport::parse(&text.replace("overall\t*\t2", "overall\t*\tx")).is_err());
        assert!(MetricsReport::parse(&text.replace("category\tCar", "lane\tCar")).is_err());
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = sample();
        a.merge(&sample());
        assert_eq!(a.overall.n_matched, 4);
        assert_eq!(a.o_mid(), sample().o_mid());
        assert_eq!(a.per_category["Car"].n_plus, 2);
    }

    prop_compose! {
        fn arb_acc()(
            n in 0u64..1_000_000, sum in 0.0f64..1e9, np in 0u64..1000, sp in 0.0f64..1e9,
            miss in 0u64..1000, neu in 0u64..1000,
            tp in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000, tn in 0u64..1000,
        ) -> MetricsAccumulator {
            MetricsAccumulator {
                n_matched: n, loss_sum: sum, n_plus: np, loss_sum_plus: sp,
                n_missing_pred: miss, n_ignored_neutral: neu,
                risk: RiskCounts { tp, fp, fn_, tn },
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            overall in arb_acc(),
            cats in prop::collection::btree_map("[A-Za-z_]{1,12}", arb_acc(), 0..5),
        ) {
            let r = MetricsReport { overall, per_category: cats };
            let back = MetricsReport::parse(&r.to_record()).unwrap();
            prop_assert_eq!(back.overall.loss_sum.to_bits(), r.overall.loss_sum.to_bits());
            prop_assert_eq!(&back, &r);
        }
    }
}
