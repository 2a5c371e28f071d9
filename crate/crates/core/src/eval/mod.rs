//! Scoring predictions: type-level F1, hallucination rate, keyword Likert
//! heuristics, calibration error and percentile bootstrap intervals.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{error_keywords, mentioned_types, Mode, CORRECT_DIAGRAM, FIX_VERBS};
use crate::types::ErrorType;

pub use report::{evaluate, render_markdown, Interval, MetricsReport, TypeScores, REPORT_SCHEMA_VERSION};

pub const DEFAULT_BOOTSTRAP: usize = 10_000;
pub const ECE_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ErrorRef {
    pub error_type: ErrorType,
    pub target: String,
}

impl ErrorRef {
    pub fn new(error_type: ErrorType, target: impl Into<String>) -> Self {
        ErrorRef {
            error_type,
            target: target.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredConfidence {
    pub error_type: ErrorType,
    pub confidence: f64,
    /// Set while scoring: whether the type is among the ground-truth errors.
    #[serde(default)]
    pub is_true_positive: Option<bool>,
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub mode: Mode,
    #[serde(default)]
    pub oracle_perception: bool,
    pub predicted_errors: BTreeSet<ErrorRef>,
    pub gt_errors: BTreeSet<ErrorRef>,
    pub feedback_text: String,
    pub violation_confidences: Vec<ScoredConfidence>,
    pub latency_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
    #[serde(default)]
    pub fallback_used: bool,
    #[serde(default)]
    pub config_hash: String,
}

impl PredictionRecord {
    pub fn predicted_types(&self) -> BTreeSet<ErrorType> {
        self.predicted_errors.iter().map(|e| e.error_type).collect()
    }

    pub fn gt_types(&self) -> BTreeSet<ErrorType> {
        self.gt_errors.iter().map(|e| e.error_type).collect()
    }
}

pub fn write_jsonl(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        buf.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    crate::fsio::write_atomic(path, &buf)
}

/// Reads a predictions file; malformed lines are reported with their numbers.
pub fn read_jsonl(path: &Path) -> Result<Vec<PredictionRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PredictionRecord>(&line) {
            Ok(r) => out.push(r),
            Err(e) => bad.push(format!("line {}: {e}", i + 1)),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Schema(format!("{}: {}", path.display(), bad.join("; "))));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-type confusion counts; errors match on type only.
pub fn match_errors(predicted: &BTreeSet<ErrorType>, gt: &BTreeSet<ErrorType>) -> BTreeMap<ErrorType, Counts> {
    let mut out: BTreeMap<ErrorType, Counts> = BTreeMap::new();
    for t in predicted.union(gt) {
        let c = out.entry(*t).or_default();
        match (predicted.contains(t), gt.contains(t)) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            _ => c.fn_ += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Suite {
    pub micro: Counts,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    /// Mean per-type F1 over types present in ground truth.
    pub macro_f1: f64,
    pub per_type: BTreeMap<ErrorType, Counts>,
}

fn suite_of<'a>(records: impl Iterator<Item = &'a PredictionRecord>) -> F1Suite {
    let mut per_type: BTreeMap<ErrorType, Counts> = BTreeMap::new();
    for r in records {
        for (t, c) in match_errors(&r.predicted_types(), &r.gt_types()) {
            per_type.entry(t).or_default().add(c);
        }
    }
    let mut micro = Counts::default();
    for c in per_type.values() {
        micro.add(*c);
    }
    let present: Vec<f64> = per_type
        .values()
        .filter(|c| c.tp + c.fn_ > 0)
        .map(Counts::f1)
        .collect();
    let macro_f1 = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    F1Suite {
        micro,
        micro_precision: micro.precision(),
        micro_recall: micro.recall(),
        micro_f1: micro.f1(),
        macro_f1,
        per_type,
    }
}

pub fn f1_suite(records: &[PredictionRecord]) -> Result<F1Suite> {
    if records.is_empty() {
        return Err(Error::Empty("f1_suite needs at least one record"));
    }
    Ok(suite_of(records.iter()))
}

/// Pooled false positives over pooled predictions; 0 when nothing was predicted.
pub fn hallucination_rate(records: &[PredictionRecord]) -> f64 {
    let mut c = Counts::default();
    for r in records {
        for (_, k) in match_errors(&r.predicted_types(), &r.gt_types()) {
            c.add(k);
        }
    }
    ratio(c.fp, c.tp + c.fp)
}

fn words(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A pair target `A-B` counts as named when either element is.
fn names_target(lower_line: &str, target: &str) -> bool {
    let t = target.to_lowercase();
    lower_line.contains(&t) || (t.contains('-') && t.split('-').any(|part| !part.is_empty() && lower_line.contains(part)))
}

/// Keyword heuristics for the two rubric dimensions, each in 1..=5.
///
/// Correctness: share of ground-truth types mentioned, minus one if any
/// other type is mentioned. Actionability: mean over lines that mention an
/// error of 1 + 2·(fix verb) + 2·(target of a mentioned gt error named).
/// One broken wire can open several component pairs; naming any element of
/// the recorded pair counts.
pub fn likert_scores(feedback_text: &str, gt_errors: &BTreeSet<ErrorRef>) -> (u8, u8) {
    let text = feedback_text.trim();
    let mentioned = mentioned_types(text);
    let gt: BTreeSet<ErrorType> = gt_errors.iter().map(|e| e.error_type).collect();
    let correctness = if gt.is_empty() {
        if mentioned.is_empty() {
            5
        } else {
            1
        }
    } else {
        let hit = mentioned.intersection(&gt).count() as f64;
        let spurious = i64::from(mentioned.difference(&gt).next().is_some());
        ((1.0 + 4.0 * hit / gt.len() as f64).round() as i64 - spurious).clamp(1, 5) as u8
    };
    let actionability = if text.is_empty() {
        1
    } else if text == CORRECT_DIAGRAM {
        5
    } else {
        let scores: Vec<f64> = text
            .lines()
            .filter_map(|line| {
                let types = mentioned_types(line);
                if types.is_empty() {
                    return None;
                }
                let w = words(line);
                let verb = FIX_VERBS.iter().any(|v| w.contains(*v));
                let lower = line.to_lowercase();
                let named = gt_errors
                    .iter()
                    .filter(|e| types.contains(&e.error_type))
                    .any(|e| names_target(&lower, &e.target));
                Some(1.0 + 2.0 * f64::from(u8::from(verb)) + 2.0 * f64::from(u8::from(named)))
            })
            .collect();
        if scores.is_empty() {
            1
        } else {
            (scores.iter().sum::<f64>() / scores.len() as f64).round().clamp(1.0, 5.0) as u8
        }
    };
    (correctness, actionability)
}

/// Expected calibration error with `n_bins` equal-width bins. Empty input
/// gives 0 and a logged warning.
pub fn ece(pairs: &[(f64, bool)], n_bins: usize) -> f64 {
    if pairs.is_empty() {
        log::warn!("calibration error over zero predictions reported as 0");
        return 0.0;
    }
    let n_bins = n_bins.max(1);
    let mut bins = vec![(0usize, 0.0f64, 0usize); n_bins];
    for &(c, ok) in pairs {
        let b = ((c.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        bins[b].0 += 1;
        bins[b].1 += c;
        bins[b].2 += usize::from(ok);
    }
    let n = pairs.len() as f64;
    bins.iter()
        .filter(|b| b.0 > 0)
        .map(|&(k, sum, ok)| {
            let k_f = k as f64;
            (k_f / n) * (ok as f64 / k_f - sum / k_f).abs()
        })
        .sum()
}

/// Percentile of sorted values with linear interpolation between ranks.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 95 % percentile-bootstrap intervals for several statistics at once.
///
/// `stat` maps a resample (indices into the records, with repetition) to one
/// value per statistic. Resample `r` draws its indices from
/// `ChaCha8Rng::seed_from_u64(seed)` switched to stream `r`, so results do
/// not depend on thread count or scheduling.
pub fn bootstrap_many<F>(n_records: usize, n_resamples: usize, seed: u64, stat: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    if n_records == 0 {
        return Err(Error::Empty("bootstrap needs at least one record"));
    }
    if n_resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    let draws: Vec<Vec<f64>> = (0..n_resamples)
        .into_par_iter()
        .map_init(
            || vec![0usize; n_records],
            |idx, r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                for i in idx.iter_mut() {
                    *i = rng.random_range(0..n_records);
                }
                stat(idx)
            },
        )
        .collect();
    let k = draws.first().map_or(0, Vec::len);
    Ok((0..k)
        .map(|j| {
            let mut col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            col.sort_by(f64::total_cmp);
            (percentile(&col, 0.025), percentile(&col, 0.975))
        })
        .collect())
}

/// Single-statistic form of [`bootstrap_many`].
pub fn bootstrap_ci<F>(n_records: usize, n_resamples: usize, seed: u64, stat: F) -> Result<(f64, f64)>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    Ok(bootstrap_many(n_records, n_resamples, seed, |idx| vec![stat(idx)])?[0])
}

/// Interval for the mean of per-sample values.
pub fn bootstrap_mean_ci(values: &[f64], n_resamples: usize, seed: u64) -> Result<(f64, f64)> {
    bootstrap_ci(values.len(), n_resamples, seed, |idx| {
        idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
    })
}

/// Micro F1 of the records selected by `idx` (with repetition).
pub fn micro_f1_of(records: &[PredictionRecord], idx: &[usize]) -> f64 {
    suite_of(idx.iter().map(|&i| &records[i])).micro_f1
}

/// Does any keyword list contain a phrase of another? Used as a sanity check
/// for custom keyword tables.
pub fn keyword_lists_disjoint() -> bool {
    let all: Vec<(ErrorType, &str)> = ErrorType::all()
        .flat_map(|t| error_keywords(t).iter().map(move |k| (t, *k)))
        .collect();
    all.iter()
        .all(|(t, k)| all.iter().all(|(u, j)| t == u || !(k.contains(j) || j.contains(k))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(pred: &[ErrorType], gt: &[ErrorType]) -> PredictionRecord {
        PredictionRecord {
            sample_id: "s".into(),
            mode: Mode::Grammar,
            oracle_perception: false,
            predicted_errors: pred.iter().map(|t| ErrorRef::new(*t, "x")).collect(),
            gt_errors: gt.iter().map(|t| ErrorRef::new(*t, "x")).collect(),
            feedback_text: String::new(),
            violation_confidences: vec![],
            latency_ms: BTreeMap::new(),
            total_ms: 0.0,
            fallback_used: false,
            config_hash: String::new(),
        }
    }

    use ErrorType::{AnchorError as C, MissingForce as A, MissingGround as G, WrongDirection as B};

    #[test]
    fn match_examples() {
        let s = |v: &[ErrorType]| v.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(match_errors(&s(&[G]), &s(&[G]))[&G], Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(match_errors(&s(&[]), &s(&[A]))[&A], Counts { tp: 0, fp: 0, fn_: 1 });
        let m = match_errors(&s(&[A, B]), &s(&[A, C]));
        assert_eq!((m[&A].tp, m[&B].fp, m[&C].fn_), (1, 1, 1));
    }

    #[test]
    fn f1_examples() {
        let perfect = [rec(&[A], &[A]), rec(&[], &[]), rec(&[B, C], &[B, C])];
        let s = f1_suite(&perfect).unwrap();
        assert_eq!((s.micro_f1, s.macro_f1, s.micro_precision, s.micro_recall), (1.0, 1.0, 1.0, 1.0));
        // TP 2, FP 1, FN 3.
        let s = f1_suite(&[rec(&[A, B], &[A, C]), rec(&[C], &[C, G]), rec(&[], &[B])]).unwrap();
        assert_eq!(s.micro, Counts { tp: 2, fp: 1, fn_: 3 });
        assert!((s.micro_precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.micro_recall - 0.4).abs() < 1e-12);
        assert!((s.micro_f1 - 0.5).abs() < 1e-12);
        let s = f1_suite(&[rec(&[], &[A])]).unwrap();
        assert_eq!((s.micro_recall, s.micro_f1), (0.0, 0.0));
        assert!(f1_suite(&[]).is_err());
    }

    #[test]
    fn hallucination_examples() {
        assert_eq!(hallucination_rate(&[rec(&[A, B], &[A])]), 0.5);
        assert_eq!(hallucination_rate(&[rec(&[], &[A])]), 0.0);
        assert_eq!(hallucination_rate(&[rec(&[B], &[A]), rec(&[C], &[])]), 1.0);
    }

    #[test]
    fn likert_examples() {
        let none = BTreeSet::new();
        assert_eq!(likert_scores(CORRECT_DIAGRAM, &none), (5, 5));
        let gt = BTreeSet::from([ErrorRef::new(ErrorType::WrongPolarity, "D1")]);
        assert_eq!(likert_scores("1. Wrong polarity: D1 is drawn backwards. Flip D1 end to end.", &gt), (5, 5));
        assert_eq!(likert_scores("", &gt), (1, 1));
        // Right type, no verb, no target.
        assert_eq!(likert_scores("The polarity looks off.", &gt), (5, 1));
        // Mentions an error on a correct diagram.
        assert_eq!(likert_scores("Missing ground: add one.", &none).0, 1);
        // Half the errors found plus a spurious one.
        let two = BTreeSet::from([ErrorRef::new(G, "ground"), ErrorRef::new(ErrorType::OpenCircuit, "R1-B1")]);
        assert_eq!(likert_scores("Missing ground. Also wrong polarity.", &two).0, 2);
        let open = BTreeSet::from([ErrorRef::new(ErrorType::OpenCircuit, "R1-R2")]);
        assert_eq!(likert_scores("1. Open circuit: B1 and R2. Connect B1 to R2.", &open), (5, 5));
        assert_eq!(likert_scores("1. Open circuit: B1 and C1. Connect B1 to C1.", &open), (5, 3));
    }

    #[test]
    fn ece_examples() {
        let mut pairs = vec![(0.5, true); 500];
        pairs.extend(vec![(0.5, false); 500]);
        assert_eq!(ece(&pairs, 10), 0.0);
        assert!((ece(&[(0.9, false)], 10) - 0.9).abs() < 1e-12);
        assert_eq!(ece(&[], 10), 0.0);
        assert!((ece(&[(1.0, true), (0.0, false)], 10)).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_basics() {
        assert_eq!(bootstrap_mean_ci(&[0.25; 12], 500, 1).unwrap(), (0.25, 0.25));
        let v: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let a = bootstrap_mean_ci(&v, 2000, 9).unwrap();
        assert_eq!(a, bootstrap_mean_ci(&v, 2000, 9).unwrap());
        assert_ne!(a, bootstrap_mean_ci(&v, 2000, 10).unwrap());
        let mean = v.iter().sum::<f64>() / 30.0;
        assert!(a.0 <= mean && mean <= a.1);
        assert!(bootstrap_mean_ci(&[], 10, 1).is_err());
    }

    #[test]
    fn bootstrap_width_shrinks_with_more_records() {
        let make = |n: usize| -> Vec<f64> { (0..n).map(|i| ((i * 7919) % 13) as f64).collect() };
        let w = |v: &[f64]| {
            let (l, h) = bootstrap_mean_ci(v, 3000, 5).unwrap();
            h - l
        };
        assert!(w(&make(400)) < w(&make(25)));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert_eq!(percentile(&v, 0.125), 0.5);
        assert_eq!(percentile(&v, 1.0), 4.0);
    }

    #[test]
    fn keyword_tables_do_not_overlap() {
        assert!(keyword_lists_disjoint());
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        let rs = vec![rec(&[A], &[A, B]), rec(&[], &[])];
        write_jsonl(&p, &rs).unwrap();
        assert_eq!(read_jsonl(&p).unwrap(), rs);
        std::fs::write(&p, "{}\n").unwrap();
        assert!(matches!(read_jsonl(&p), Err(Error::Schema(_))));
    }

    fn arb_type() -> impl Strategy<Value = ErrorType> {
        prop::sample::select(vec![A, B, C, G])
    }

    proptest! {
        #[test]
        fn likert_in_range(text in ".{0,80}", gt in prop::collection::btree_set(arb_type(), 0..3)) {
            let gt: BTreeSet<ErrorRef> = gt.into_iter().map(|t| ErrorRef::new(t, "x")).collect();
            let (c, a) = likert_scores(&text, &gt);
            prop_assert!((1..=5).contains(&c) && (1..=5).contains(&a));
        }

        #[test]
        fn hallucination_is_one_minus_precision(
            recs in prop::collection::vec(
                (prop::collection::btree_set(arb_type(), 0..3), prop::collection::btree_set(arb_type(), 0..3)),
                1..10,
            )
        ) {
            let rs: Vec<PredictionRecord> = recs
                .iter()
                .map(|(p, g)| rec(&p.iter().copied().collect::<Vec<_>>(), &g.iter().copied().collect::<Vec<_>>()))
                .collect();
            let s = f1_suite(&rs).unwrap();
            let h = hallucination_rate(&rs);
            if s.micro.tp + s.micro.fp > 0 {
                prop_assert!((h - (1.0 - s.micro_precision)).abs() < 1e-12);
            } else {
                prop_assert_eq!(h, 0.0);
            }
        }
    }
}
