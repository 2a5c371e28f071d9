//! Per-sample orchestration: detect, build the graph, check, explain.

use std::collections::BTreeMap;
use std::time::Instant;

use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::{map_to_rubric, render_feedback, ExternalClient, Mode};
use crate::constraints::{check_all_strict, ConstraintConfig, Violation};
use crate::error::{Error, Result};
use crate::graph::{build_graph, GraphConfig};
use crate::perception::{detect_all, detect_objects, PerceptionConfig};
use crate::types::{Domain, ErrorType, Primitive, PrimitiveKind, ScenarioKey};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub perception: PerceptionConfig,
    pub graph: GraphConfig,
    pub constraints: ConstraintConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.perception.validate()?;
        self.constraints.validate()?;
        if self.graph.proximity_radius.is_nan() || self.graph.proximity_radius <= 0.0 {
            return Err(Error::invalid("proximity radius must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub sample_id: String,
    pub mode: Mode,
    pub violations: Vec<Violation>,
    pub text: String,
    /// Milliseconds per stage, in pipeline order of names.
    pub latency_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
    pub n_detections: usize,
    #[serde(default)]
    pub fallback_used: bool,
}

struct Timer {
    stages: BTreeMap<String, f64>,
    start: Instant,
}

impl Timer {
    fn new() -> Self {
        Timer {
            stages: BTreeMap::new(),
            start: Instant::now(),
        }
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.insert(name.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }

    fn total(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

/// Where stage-1 primitives come from.
enum Source<'a> {
    Image(&'a GrayImage),
    Oracle(&'a [Primitive]),
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub external: Option<ExternalClient>,
}

/// Key elements with no detection of the same kind anywhere in the image.
fn naive_absence(prims: &[Primitive], key: &ScenarioKey, confidence: f64) -> Vec<Violation> {
    let has = |k: PrimitiveKind| prims.iter().any(|p| p.kind == k);
    let absent = |t: ErrorType, target: &str, kind: &str| Violation {
        constraint_id: "absence".into(),
        error_type: t,
        target: target.to_string(),
        evidence: vec![],
        confidence,
        params: BTreeMap::from([("kind".to_string(), kind.to_string())]),
    };
    let mut out = Vec::new();
    match key.domain {
        Domain::Fbd => {
            if !has(PrimitiveKind::ForceArrow) {
                for f in &key.required_forces {
                    out.push(absent(ErrorType::MissingForce, &f.name, "force_arrow"));
                }
            }
        }
        Domain::Circuit => {
            for c in &key.components {
                if !has(PrimitiveKind::Component(c.kind)) {
                    out.push(absent(ErrorType::MissingComponent, &c.id, c.kind.name()));
                }
            }
            if key.requires_ground && !has(PrimitiveKind::GroundSymbol) {
                out.push(absent(ErrorType::MissingGround, "ground", "ground_symbol"));
            }
        }
    }
    out
}

fn detection_summary(prims: &[Primitive]) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in prims {
        let name = match p.kind {
            PrimitiveKind::Component(k) => k.name().to_string(),
            k => k.tag().replace('_', " "),
        };
        *counts.entry(name).or_default() += 1;
    }
    counts.into_iter().map(|(k, n)| format!("Detected {n} × {k}.")).collect()
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline {
            config,
            external: None,
        }
    }

    pub fn with_external(mut self, client: ExternalClient) -> Self {
        self.external = Some(client);
        self
    }

    /// Full pipeline on a raster image. `domain` is the benchmark the image
    /// came from; a key of the other domain is rejected.
    pub fn run_pipeline(
        &self,
        sample_id: &str,
        image: &GrayImage,
        key: &ScenarioKey,
        domain: Domain,
        mode: Mode,
    ) -> Result<FeedbackReport> {
        self.run(sample_id, Source::Image(image), Some(image), key, domain, mode)
    }

    /// Same as [`run_pipeline`](Self::run_pipeline) with ground-truth
    /// primitives standing in for detection.
    pub fn run_pipeline_oracle(
        &self,
        sample_id: &str,
        primitives: &[Primitive],
        image: Option<&GrayImage>,
        key: &ScenarioKey,
        domain: Domain,
        mode: Mode,
    ) -> Result<FeedbackReport> {
        self.run(sample_id, Source::Oracle(primitives), image, key, domain, mode)
    }

    fn run(
        &self,
        sample_id: &str,
        source: Source<'_>,
        image: Option<&GrayImage>,
        key: &ScenarioKey,
        domain: Domain,
        mode: Mode,
    ) -> Result<FeedbackReport> {
        if key.domain != domain {
            return Err(Error::DomainMismatch {
                expected: domain,
                actual: key.domain,
            });
        }
        let cfg = &self.config;
        let mut timer = Timer::new();
        let prims = timer.stage("perception", || match (&source, mode) {
            (Source::Oracle(p), _) => Ok(p.to_vec()),
            (Source::Image(img), Mode::VisionOnly) => detect_objects(img, &cfg.perception),
            (Source::Image(img), _) => detect_all(img, &cfg.perception),
        })?;
        let mut fallback_used = false;
        let (violations, text) = match mode {
            Mode::VisionOnly => {
                let v = timer.stage("compare", || {
                    naive_absence(&prims, key, cfg.constraints.absence_confidence)
                });
                let text = timer.stage("render", || -> Result<String> {
                    if v.is_empty() {
                        return Ok(render_feedback(&[]));
                    }
                    let mut lines = detection_summary(&prims);
                    lines.push(render_feedback(&map_to_rubric(&v, key)?));
                    Ok(lines.join("\n"))
                })?;
                (v, text)
            }
            Mode::Grammar | Mode::External => {
                let g = timer.stage("graph", || build_graph(&prims, &cfg.graph));
                let v = timer.stage("constraints", || check_all_strict(&g, key, domain, &cfg.constraints))?;
                let items = timer.stage("rubric", || map_to_rubric(&v, key))?;
                let text = if mode == Mode::Grammar || v.is_empty() {
                    timer.stage("render", || render_feedback(&items))
                } else {
                    let generated = timer.stage("generate", || match &self.external {
                        Some(client) => client.generate(&v, image, || render_feedback(&items)),
                        None => {
                            log::warn!("external mode without a client; using template feedback");
                            super::Generated {
                                text: render_feedback(&items),
                                fallback_used: true,
                            }
                        }
                    });
                    fallback_used = generated.fallback_used;
                    generated.text
                };
                (v, text)
            }
        };
        Ok(FeedbackReport {
            sample_id: sample_id.to_string(),
            mode,
            violations,
            text,
            total_ms: timer.total(),
            latency_ms: timer.stages,
            n_detections: prims.len(),
            fallback_used,
        })
    }
}
