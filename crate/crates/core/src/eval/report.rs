//! Report assembly and the two markdown tables (main results, per-type F1).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    bootstrap_many, ece, f1_suite, hallucination_rate, likert_scores, suite_of, Counts, ErrorRef, PredictionRecord,
    ECE_BINS,
};
use crate::error::{Error, Result};
use crate::feedback::Mode;
use crate::synthgen::{Manifest, Split};
use crate::types::{Domain, ErrorType};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Interval {
    /// Widens the percentile interval to include the point estimate when
    /// the bootstrap distribution is skewed past it.
    fn new(value: f64, (lo, hi): (f64, f64)) -> Self {
        Interval {
            value,
            ci_low: lo.min(value),
            ci_high: hi.max(value),
        }
    }

    fn cell(&self) -> String {
        format!("{:.3} [{:.3}, {:.3}]", self.value, self.ci_low, self.ci_high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Samples whose ground truth has this type.
    pub support: usize,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub benchmark: Domain,
    pub mode: Mode,
    pub oracle_perception: bool,
    pub split: String,
    pub n_samples: usize,
    pub n_bootstrap: usize,
    pub seed: u64,
    pub config_hash: String,
    pub micro_f1: Interval,
    pub macro_f1: Interval,
    pub precision: Interval,
    pub recall: Interval,
    pub hallucination_rate: Interval,
    pub correctness_mean: Interval,
    pub actionability_mean: Interval,
    pub per_type: BTreeMap<ErrorType, TypeScores>,
    pub ece: f64,
    /// Number of predicted violations behind the calibration error.
    pub ece_n: usize,
    pub latency_mean_ms: f64,
    pub latency_max_ms: f64,
    pub stage_latency_mean_ms: BTreeMap<String, f64>,
    pub fallback_count: usize,
}

impl MetricsReport {
    pub fn method(&self) -> String {
        if self.oracle_perception {
            format!("{} (oracle perception)", self.mode)
        } else {
            self.mode.to_string()
        }
    }
}

fn gt_of(errors: &[crate::types::InjectedError]) -> BTreeSet<ErrorRef> {
    errors.iter().map(|e| ErrorRef::new(e.error_type, &e.target)).collect()
}

/// Scores the predictions for every sample of `split` (all samples when
/// `None`). Ground truth comes from the manifest; predictions for samples
/// outside the split are ignored.
pub fn evaluate(
    manifest: &Manifest,
    predictions: &[PredictionRecord],
    split: Option<Split>,
    n_bootstrap: usize,
    seed: u64,
) -> Result<MetricsReport> {
    let mut by_id: BTreeMap<&str, &PredictionRecord> = BTreeMap::new();
    let mut problems = Vec::new();
    for p in predictions {
        if manifest.sample(&p.sample_id).is_none() {
            problems.push(format!("unknown sample id '{}'", p.sample_id));
        } else if by_id.insert(&p.sample_id, p).is_some() {
            problems.push(format!("duplicate prediction for '{}'", p.sample_id));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Schema(problems.join("; ")));
    }
    let samples: Vec<_> = manifest
        .samples
        .iter()
        .filter(|s| split.is_none_or(|sp| s.split == sp))
        .collect();
    let missing: Vec<String> = samples
        .iter()
        .filter(|s| !by_id.contains_key(s.sample_id.as_str()))
        .map(|s| s.sample_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let mut records: Vec<PredictionRecord> = samples
        .iter()
        .map(|s| {
            let mut r = by_id[s.sample_id.as_str()].clone();
            r.gt_errors = gt_of(&s.injected_errors);
            let gt = r.gt_types();
            for c in &mut r.violation_confidences {
                c.is_true_positive = Some(gt.contains(&c.error_type));
            }
            r
        })
        .collect();
    if records.is_empty() {
        return Err(Error::Empty("no samples in the selected split"));
    }
    records.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let modes: BTreeSet<(Mode, bool)> = records.iter().map(|r| (r.mode, r.oracle_perception)).collect();
    if modes.len() > 1 {
        return Err(Error::Schema(format!("predictions mix several modes: {modes:?}")));
    }
    let (mode, oracle_perception) = *modes.iter().next().expect("records are nonempty");
    let hashes: BTreeSet<&str> = records.iter().map(|r| r.config_hash.as_str()).collect();
    let config_hash = if hashes.len() == 1 {
        hashes.iter().next().copied().unwrap_or_default().to_string()
    } else {
        "mixed".to_string()
    };

    let likert: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let (c, a) = likert_scores(&r.feedback_text, &r.gt_errors);
            (c as f64, a as f64)
        })
        .collect();
    let stats = |idx: &[usize]| -> Vec<f64> {
        let s = suite_of(idx.iter().map(|&i| &records[i]));
        let hall = if s.micro.tp + s.micro.fp == 0 {
            0.0
        } else {
            s.micro.fp as f64 / (s.micro.tp + s.micro.fp) as f64
        };
        let n = idx.len() as f64;
        vec![
            s.micro_f1,
            s.macro_f1,
            s.micro_precision,
            s.micro_recall,
            hall,
            idx.iter().map(|&i| likert[i].0).sum::<f64>() / n,
            idx.iter().map(|&i| likert[i].1).sum::<f64>() / n,
        ]
    };
    let point = stats(&(0..records.len()).collect::<Vec<_>>());
    let ci = bootstrap_many(records.len(), n_bootstrap, seed, stats)?;
    let iv = |k: usize| Interval::new(point[k], ci[k]);

    let suite = f1_suite(&records)?;
    debug_assert!((hallucination_rate(&records) - point[4]).abs() < 1e-12);
    let mut per_type = BTreeMap::new();
    for t in manifest.benchmark.error_types() {
        let c = suite.per_type.get(t).copied().unwrap_or_default();
        per_type.insert(
            *t,
            TypeScores {
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
                support: c.tp + c.fn_,
                counts: c,
            },
        );
    }
    let pairs: Vec<(f64, bool)> = records
        .iter()
        .flat_map(|r| {
            r.violation_confidences
                .iter()
                .map(|c| (c.confidence, c.is_true_positive.unwrap_or(false)))
        })
        .collect();
    let n = records.len() as f64;
    let mut stage_sum: BTreeMap<String, f64> = BTreeMap::new();
    for r in &records {
        for (k, v) in &r.latency_ms {
            *stage_sum.entry(k.clone()).or_default() += v;
        }
    }
    Ok(MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        benchmark: manifest.benchmark,
        mode,
        oracle_perception,
        split: split.map_or("all", |s| s.as_str()).to_string(),
        n_samples: records.len(),
        n_bootstrap,
        seed,
        config_hash,
        micro_f1: iv(0),
        macro_f1: iv(1),
        precision: iv(2),
        recall: iv(3),
        hallucination_rate: iv(4),
        correctness_mean: iv(5),
        actionability_mean: iv(6),
        per_type,
        ece: ece(&pairs, ECE_BINS),
        ece_n: pairs.len(),
        latency_mean_ms: records.iter().map(|r| r.total_ms).sum::<f64>() / n,
        latency_max_ms: records.iter().map(|r| r.total_ms).fold(0.0, f64::max),
        stage_latency_mean_ms: stage_sum.into_iter().map(|(k, v)| (k, v / n)).collect(),
        fallback_count: records.iter().filter(|r| r.fallback_used).count(),
    })
}

/// Marks the best entry of `values` in bold when there is more than one.
fn bolded(values: &[f64], cells: Vec<String>, lower_is_better: bool) -> Vec<String> {
    if values.len() < 2 {
        return cells;
    }
    let best = values.iter().copied().fold(if lower_is_better { f64::INFINITY } else { f64::NEG_INFINITY }, |a, b| {
        if lower_is_better {
            a.min(b)
        } else {
            a.max(b)
        }
    });
    cells
        .into_iter()
        .zip(values)
        .map(|(c, v)| if (v - best).abs() < 1e-12 { format!("**{c}**") } else { c })
        .collect()
}

/// Main-results and per-type tables for one or more reports.
pub fn render_markdown(reports: &[MetricsReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Empty("no reports to render"));
    }
    if let Some(r) = reports.iter().find(|r| r.schema_version != REPORT_SCHEMA_VERSION) {
        return Err(Error::Schema(format!(
            "report schema version {} (expected {REPORT_SCHEMA_VERSION})",
            r.schema_version
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "## Main results (95% bootstrap CIs)\n");
    let _ = writeln!(
        out,
        "| Benchmark | Method | n | Mi-F1 | Ma-F1 | Prec. | Rec. | Corr. | Act. | Hall. ↓ | ECE ↓ | Latency ms ↓ |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|---|");
    for domain in [Domain::Fbd, Domain::Circuit] {
        let group: Vec<&MetricsReport> = reports.iter().filter(|r| r.benchmark == domain).collect();
        if group.is_empty() {
            continue;
        }
        type Col = (fn(&MetricsReport) -> f64, fn(&MetricsReport) -> String, bool);
        let cols: [Col; 9] = [
            (|r| r.micro_f1.value, |r| r.micro_f1.cell(), false),
            (|r| r.macro_f1.value, |r| r.macro_f1.cell(), false),
            (|r| r.precision.value, |r| r.precision.cell(), false),
            (|r| r.recall.value, |r| r.recall.cell(), false),
            (|r| r.correctness_mean.value, |r| r.correctness_mean.cell(), false),
            (|r| r.actionability_mean.value, |r| r.actionability_mean.cell(), false),
            (|r| r.hallucination_rate.value, |r| r.hallucination_rate.cell(), true),
            (|r| r.ece, |r| format!("{:.3}", r.ece), true),
            (|r| r.latency_mean_ms, |r| format!("{:.1}", r.latency_mean_ms), true),
        ];
        let columns: Vec<Vec<String>> = cols
            .iter()
            .map(|(val, cell, low)| {
                let values: Vec<f64> = group.iter().map(|r| val(r)).collect();
                bolded(&values, group.iter().map(|r| cell(r)).collect(), *low)
            })
            .collect();
        for (i, r) in group.iter().enumerate() {
            let cells: Vec<&str> = columns.iter().map(|c| c[i].as_str()).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                domain.as_str(),
                r.method(),
                r.n_samples,
                cells.join(" | ")
            );
        }
    }
    let _ = writeln!(out, "\n## Per-error-type F1\n");
    for domain in [Domain::Fbd, Domain::Circuit] {
        let group: Vec<&MetricsReport> = reports.iter().filter(|r| r.benchmark == domain).collect();
        if group.is_empty() {
            continue;
        }
        let heads: Vec<String> = group.iter().map(|r| r.method()).collect();
        let _ = writeln!(out, "| {} error type | support | {} |", domain.as_str(), heads.join(" | "));
        let _ = writeln!(out, "|---|---|{}", "---|".repeat(group.len()));
        for t in domain.error_types() {
            let values: Vec<f64> = group.iter().map(|r| r.per_type.get(t).map_or(0.0, |s| s.f1)).collect();
            let cells = bolded(&values, values.iter().map(|v| format!("{v:.3}")).collect(), false);
            let support = group[0].per_type.get(t).map_or(0, |s| s.support);
            let _ = writeln!(out, "| {} | {support} | {} |", t.display_name(), cells.join(" | "));
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "Bootstrap: {} resamples, seed {}.", reports[0].n_bootstrap, reports[0].seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ScoredConfidence;
    use crate::synthgen::{build_samples, Histograms, RenderConfig, SCHEMA_VERSION};

    fn manifest(domain: Domain) -> Manifest {
        let samples: Vec<_> = build_samples(domain, 3, &RenderConfig::default())
            .unwrap()
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        Manifest {
            schema_version: SCHEMA_VERSION,
            benchmark: domain,
            master_seed: 3,
            render_config: RenderConfig::default(),
            histograms: Histograms::of(&samples),
            samples,
        }
    }

    fn perfect(m: &Manifest) -> Vec<PredictionRecord> {
        m.samples
            .iter()
            .map(|s| {
                let gt = gt_of(&s.injected_errors);
                PredictionRecord {
                    sample_id: s.sample_id.clone(),
                    mode: Mode::Grammar,
                    oracle_perception: true,
                    predicted_errors: gt.clone(),
                    gt_errors: gt.clone(),
                    feedback_text: String::new(),
                    violation_confidences: gt
                        .iter()
                        .map(|e| ScoredConfidence {
                            error_type: e.error_type,
                            confidence: 0.95,
                            is_true_positive: None,
                        })
                        .collect(),
                    latency_ms: BTreeMap::from([("constraints".to_string(), 1.0)]),
                    total_ms: 2.0,
                    fallback_used: false,
                    config_hash: "abc".into(),
                }
            })
            .collect()
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let m = manifest(Domain::Circuit);
        let preds = perfect(&m);
        let r = evaluate(&m, &preds, Some(Split::Test), 200, 1).unwrap();
        assert_eq!(r.n_samples, 40);
        assert_eq!((r.micro_f1.value, r.hallucination_rate.value), (1.0, 0.0));
        assert_eq!((r.micro_f1.ci_low, r.micro_f1.ci_high), (1.0, 1.0));
        assert_eq!(r.per_type.len(), 5);
        assert!((r.ece - 0.05).abs() < 1e-9);
        assert_eq!(r.config_hash, "abc");

        let empty: Vec<PredictionRecord> = preds
            .into_iter()
            .map(|mut p| {
                p.predicted_errors.clear();
                p.violation_confidences.clear();
                p
            })
            .collect();
        let r = evaluate(&m, &empty, Some(Split::Test), 200, 1).unwrap();
        assert_eq!((r.recall.value, r.hallucination_rate.value, r.ece_n), (0.0, 0.0, 0));
    }

    #[test]
    fn missing_and_unknown_ids_are_reported() {
        let m = manifest(Domain::Fbd);
        let mut preds = perfect(&m);
        let test_id = m.split(Split::Test).next().unwrap().sample_id.clone();
        preds.retain(|p| p.sample_id != test_id);
        match evaluate(&m, &preds, Some(Split::Test), 10, 1) {
            Err(Error::MissingPredictions(ids)) => assert_eq!(ids, vec![test_id]),
            other => panic!("{other:?}"),
        }
        let mut preds = perfect(&m);
        preds[0].sample_id = "nope".into();
        assert!(matches!(evaluate(&m, &preds, None, 10, 1), Err(Error::Schema(_))));
    }

    #[test]
    fn report_is_reproducible_and_renders() {
        let m = manifest(Domain::Fbd);
        let mut preds = perfect(&m);
        for (i, p) in preds.iter_mut().enumerate() {
            if i % 3 == 0 {
                p.predicted_errors.insert(ErrorRef::new(ErrorType::ExtraForce, "x"));
            }
        }
        let a = evaluate(&m, &preds, Some(Split::Test), 1000, 7).unwrap();
        let b = evaluate(&m, &preds, Some(Split::Test), 1000, 7).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for iv in [a.micro_f1, a.macro_f1, a.precision, a.recall, a.hallucination_rate] {
            assert!(iv.ci_low <= iv.value && iv.value <= iv.ci_high);
            assert!((0.0..=1.0).contains(&iv.ci_low) && iv.ci_high <= 1.0);
        }
        for iv in [a.correctness_mean, a.actionability_mean] {
            assert!(iv.ci_low >= 1.0 && iv.ci_high <= 5.0);
        }
        let mut vision = a.clone();
        vision.mode = Mode::VisionOnly;
        vision.oracle_perception = false;
        vision.micro_f1.value = 0.1;
        let md = render_markdown(&[a.clone(), vision]).unwrap();
        assert!(md.contains("| fbd | grammar (oracle perception) |"));
        assert!(md.contains("| fbd | vision-only |"));
        assert!(md.contains("**"));
        for t in Domain::Fbd.error_types() {
            assert!(md.contains(t.display_name()));
        }
        let single = render_markdown(std::slice::from_ref(&a)).unwrap();
        assert!(!single.contains("**"));
        let mut old = a;
        old.schema_version = 0;
        assert!(render_markdown(&[old]).is_err());
    }
}
