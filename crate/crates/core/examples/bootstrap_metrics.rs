//! Bootstrap intervals on a toy set of predictions: micro-F1, a mean Likert
//! score, and how the interval settles as the resample count grows.

use std::collections::{BTreeMap, BTreeSet};

use diagram_feedback::eval::{
    bootstrap_ci, bootstrap_mean_ci, ece, f1_suite, hallucination_rate, likert_scores, micro_f1_of, ErrorRef,
    PredictionRecord,
};
use diagram_feedback::feedback::Mode;
use diagram_feedback::ErrorType;

fn record(i: usize, pred: &[ErrorType], gt: &[ErrorType], text: &str) -> PredictionRecord {
    let set = |ts: &[ErrorType]| -> BTreeSet<ErrorRef> { ts.iter().map(|t| ErrorRef::new(*t, "x")).collect() };
    PredictionRecord {
        sample_id: format!("s{i}"),
        mode: Mode::Grammar,
        oracle_perception: false,
        predicted_errors: set(pred),
        gt_errors: set(gt),
        feedback_text: text.into(),
        violation_confidences: vec![],
        latency_ms: BTreeMap::new(),
        total_ms: 0.0,
        fallback_used: false,
        config_hash: String::new(),
    }
}

fn main() -> anyhow::Result<()> {
    use ErrorType::*;
    let records = vec![
        record(0, &[MissingForce], &[MissingForce], "1. Missing force: x is absent. Add x."),
        record(1, &[], &[], "Diagram looks correct per scenario key."),
        record(2, &[ExtraForce], &[WrongDirection], "1. Extra force: x does not act on the body. Remove x."),
        record(3, &[AnchorError], &[AnchorError], "1. Anchor error: x sits in the wrong place. Move x."),
        record(4, &[], &[MissingForce], "Diagram looks correct per scenario key."),
        record(5, &[WrongDirection, ExtraForce], &[WrongDirection], "1. Wrong direction: x. Reverse x.\n2. Extra force: y. Remove y."),
        record(6, &[MissingForce], &[MissingForce], "1. Missing force: x. Add x."),
        record(7, &[], &[], "Diagram looks correct per scenario key."),
    ];

    let suite = f1_suite(&records)?;
    println!("micro-F1 {:.3}  macro-F1 {:.3}  hallucination {:.3}", suite.micro_f1, suite.macro_f1, hallucination_rate(&records));
    for n in [100, 1_000, 10_000, 50_000] {
        let (lo, hi) = bootstrap_ci(records.len(), n, 0, |idx| micro_f1_of(&records, idx))?;
        println!("  {n:>6} resamples: micro-F1 95% CI [{lo:.3}, {hi:.3}]");
    }

    let correctness: Vec<f64> = records
        .iter()
        .map(|r| f64::from(likert_scores(&r.feedback_text, &r.gt_errors).0))
        .collect();
    let mean = correctness.iter().sum::<f64>() / correctness.len() as f64;
    let (lo, hi) = bootstrap_mean_ci(&correctness, 10_000, 0)?;
    println!("correctness per record {correctness:?}, mean {mean:.2} [{lo:.2}, {hi:.2}]");

    let confident = [(0.95, true), (0.9, true), (0.85, false), (0.6, true), (0.55, false), (0.3, false)];
    println!("ECE over {} scored violations: {:.3}", confident.len(), ece(&confident, 10));
    Ok(())
}
