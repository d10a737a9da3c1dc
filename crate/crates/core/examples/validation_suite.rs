//! The seeded validation suite and the three baselines on each family.

use std::collections::BTreeMap;

use ottc::eval::{baseline_predict, BaselineKind};
use ottc::sim::{make_validation_suite, simulate};
use ottc::{evaluate, EvalConfig, MetricsReport};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let cfg = EvalConfig::default();
    let mut by_family: BTreeMap<(&str, &str), MetricsReport> = BTreeMap::new();
    let suite = make_validation_suite(seed);
    for spec in &suite {
        let sim = simulate(spec).expect("suite scenes are valid");
        for kind in BaselineKind::ALL {
            let preds = baseline_predict(&sim.sequence, kind).predictions;
            let report = evaluate(&preds, &sim.exact, &cfg).expect("baseline evaluation");
            by_family
                .entry((spec.family.as_str(), kind.as_str()))
                .or_insert_with(|| MetricsReport::for_categories(&cfg.categories))
                .merge(&report);
        }
    }
    println!("{} scenes from seed {seed}\n", suite.len());
    println!("{:<16} {:<24} {:>8} {:>10} {:>8}", "family", "baseline", "matched", "oMiD", "missing");
    for ((family, kind), r) in &by_family {
        println!(
            "{family:<16} {kind:<24} {:>8} {:>10} {:>8}",
            r.overall.n_matched,
            r.o_mid().map_or("-".into(), |m| format!("{m:.2}")),
            r.overall.n_missing_pred
        );
    }
}
