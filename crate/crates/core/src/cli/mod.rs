//! Command-line front end: `generate`, `run`, `eval`, `report`.
//!
//! Every threshold lives in a TOML run config (see `configs/default.toml`);
//! flags override the file. Outputs carry the seed and a hash of the
//! effective config so any number in a report can be traced to its inputs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    evaluate, read_jsonl, render_markdown, write_jsonl, ErrorRef, MetricsReport, PredictionRecord, ScoredConfidence,
    DEFAULT_BOOTSTRAP,
};
use crate::feedback::{ExternalClient, ExternalConfig, FeedbackReport, Mode, Pipeline, PipelineConfig, ENDPOINT_ENV};
use crate::fsio;
use crate::synthgen::{generate_benchmark, DiagramSample, Manifest, Split, MANIFEST_FILE};
use crate::types::Domain;

/// Everything a `run` or `eval` needs besides file paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// `train`, `test` or `all`.
    pub split: String,
    pub oracle_perception: bool,
    pub pipeline: PipelineConfig,
    pub external: ExternalConfig,
    pub n_bootstrap: usize,
    pub bootstrap_seed: u64,
    pub debug_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Grammar,
            split: "test".into(),
            oracle_perception: false,
            pipeline: PipelineConfig::default(),
            external: ExternalConfig::default(),
            n_bootstrap: DEFAULT_BOOTSTRAP,
            bootstrap_seed: 0,
            debug_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        parse_split(&self.split)?;
        if self.n_bootstrap == 0 {
            return Err(Error::invalid("n_bootstrap must be positive"));
        }
        if self.external.timeout_secs.is_nan() || self.external.timeout_secs <= 0.0 {
            return Err(Error::invalid("external timeout must be positive"));
        }
        Ok(())
    }

    /// Short hash over the settings that influence predictions. The endpoint
    /// URL and debug paths are left out.
    pub fn hash(&self) -> String {
        let v = serde_json::json!({
            "mode": self.mode,
            "oracle_perception": self.oracle_perception,
            "pipeline": self.pipeline,
            "rubric_prompt": self.external.rubric_prompt,
        });
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn split(&self) -> Option<Split> {
        parse_split(&self.split).expect("validated")
    }
}

fn parse_split(s: &str) -> Result<Option<Split>> {
    if s == "all" {
        return Ok(None);
    }
    Split::parse(s)
        .map(Some)
        .ok_or_else(|| Error::invalid(format!("unknown split '{s}' (expected train, test or all)")))
}

/// Turns a pipeline result into a predictions-file line.
pub fn to_record(sample: &DiagramSample, report: FeedbackReport, oracle: bool, config_hash: &str) -> PredictionRecord {
    PredictionRecord {
        sample_id: sample.sample_id.clone(),
        mode: report.mode,
        oracle_perception: oracle,
        predicted_errors: report
            .violations
            .iter()
            .map(|v| ErrorRef::new(v.error_type, &v.target))
            .collect::<BTreeSet<_>>(),
        gt_errors: sample
            .injected_errors
            .iter()
            .map(|e| ErrorRef::new(e.error_type, &e.target))
            .collect(),
        violation_confidences: report
            .violations
            .iter()
            .map(|v| ScoredConfidence {
                error_type: v.error_type,
                confidence: v.confidence,
                is_true_positive: None,
            })
            .collect(),
        feedback_text: report.text,
        latency_ms: report.latency_ms,
        total_ms: report.total_ms,
        fallback_used: report.fallback_used,
        config_hash: config_hash.to_string(),
    }
}

/// Runs the pipeline over the selected samples of a dataset, in manifest
/// order, on up to `jobs` threads (0 = all cores).
pub fn run_dataset(dataset: &Path, manifest: &Manifest, cfg: &RunConfig, jobs: usize) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    let split = cfg.split();
    let samples: Vec<&DiagramSample> = manifest
        .samples
        .iter()
        .filter(|s| split.is_none_or(|sp| s.split == sp))
        .collect();
    let mut pipeline = Pipeline::new(cfg.pipeline.clone());
    if cfg.mode == Mode::External {
        pipeline = pipeline.with_external(ExternalClient::new(cfg.external.clone()));
    }
    let hash = cfg.hash();
    if let Some(d) = &cfg.debug_dir {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let work = |s: &&DiagramSample| -> Result<PredictionRecord> {
        let key = manifest.key_for(s)?;
        let needs_image = !cfg.oracle_perception || cfg.mode == Mode::External;
        let image = if needs_image {
            Some(fsio::read_png(&dataset.join(&s.image_path))?)
        } else {
            None
        };
        let report = if cfg.oracle_perception {
            pipeline.run_pipeline_oracle(&s.sample_id, &s.gt_primitives, image.as_ref(), &key, manifest.benchmark, cfg.mode)?
        } else {
            let img = image.as_ref().expect("loaded above");
            if let Some(d) = &cfg.debug_dir {
                crate::perception::write_debug(img, &cfg.pipeline.perception, d, &s.sample_id)?;
            }
            pipeline.run_pipeline(&s.sample_id, img, &key, manifest.benchmark, cfg.mode)?
        };
        Ok(to_record(s, report, cfg.oracle_perception, &hash))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| samples.par_iter().map(work).collect())
}

#[derive(Debug, Parser)]
#[command(name = "diagram-feedback", version, about = "Generate diagram benchmarks, run the feedback pipeline and score it")]
pub struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a 200-sample benchmark with images, annotations and a manifest.
    Generate {
        #[arg(long, value_parser = ["fbd", "circuit"])]
        benchmark: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run the pipeline over a dataset split and write predictions (JSON lines).
    Run(RunArgs),
    /// Score a predictions file against its dataset.
    Eval(EvalArgs),
    /// Merge report JSON files into the markdown tables.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Write the tables here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset directory written by `generate`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Predictions output (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// TOML run config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["grammar", "vision-only", "external"])]
    pub mode: Option<String>,
    #[arg(long, value_parser = ["train", "test", "all"])]
    pub split: Option<String>,
    /// Use annotated primitives instead of running detection.
    #[arg(long)]
    pub oracle_perception: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Base URL of the external text generator (external mode).
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    /// Write binary maps and detection overlays here.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Report JSON output; the markdown tables go next to it (`.md`).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["train", "test", "all"])]
    pub split: Option<String>,
}

fn base_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

pub fn cmd_generate(benchmark: &str, out: &Path, seed: u64) -> Result<Manifest> {
    let domain = Domain::parse(benchmark).ok_or_else(|| Error::invalid(format!("unknown benchmark '{benchmark}'")))?;
    let t = std::time::Instant::now();
    let m = generate_benchmark(domain, out, seed)?;
    let bytes = std::fs::read(out.join(MANIFEST_FILE)).map_err(|e| Error::io(out, e))?;
    let digest: String = Sha256::digest(&bytes)[..8].iter().map(|b| format!("{b:02x}")).collect();
    println!("{} samples of {domain} in {:.1?} -> {}", m.samples.len(), t.elapsed(), out.display());
    println!("manifest sha256/8: {digest}  seed: {seed}");
    let h = &m.histograms;
    println!("error classes: {:?}", h.error_class);
    println!("noise levels:  {:?}", h.noise_level);
    println!("split:         {:?}", h.split);
    Ok(m)
}

pub fn cmd_run(args: &RunArgs) -> Result<Vec<PredictionRecord>> {
    let mut cfg = base_config(args.config.as_deref())?;
    if let Some(m) = &args.mode {
        cfg.mode = m.parse()?;
    }
    if let Some(s) = &args.split {
        cfg.split = s.clone();
    }
    cfg.oracle_perception |= args.oracle_perception;
    if args.endpoint.is_some() {
        cfg.external.endpoint = args.endpoint.clone();
    }
    if args.debug_dir.is_some() {
        cfg.debug_dir = args.debug_dir.clone();
    }
    let manifest = Manifest::load(&args.dataset)?;
    let t = std::time::Instant::now();
    let records = run_dataset(&args.dataset, &manifest, &cfg, args.jobs)?;
    write_jsonl(&args.out, &records)?;
    let n = records.len().max(1) as f64;
    let flagged = records.iter().filter(|r| !r.predicted_errors.is_empty()).count();
    println!(
        "{} {} samples ({}, split {}{}) in {:.1?}: {flagged} flagged, mean latency {:.1} ms, config {}",
        records.len(),
        manifest.benchmark,
        cfg.mode,
        cfg.split,
        if cfg.oracle_perception { ", oracle perception" } else { "" },
        t.elapsed(),
        records.iter().map(|r| r.total_ms).sum::<f64>() / n,
        cfg.hash()
    );
    Ok(records)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<MetricsReport> {
    let cfg = base_config(args.config.as_deref())?;
    let split = parse_split(args.split.as_deref().unwrap_or(&cfg.split))?;
    let manifest = Manifest::load(&args.dataset)?;
    let preds = read_jsonl(&args.predictions)?;
    let report = evaluate(
        &manifest,
        &preds,
        split,
        args.n_bootstrap.unwrap_or(cfg.n_bootstrap),
        args.seed.unwrap_or(cfg.bootstrap_seed),
    )?;
    fsio::write_json(&args.out, &report)?;
    let md = render_markdown(std::slice::from_ref(&report))?;
    fsio::write_atomic(&args.out.with_extension("md"), md.as_bytes())?;
    print!("{md}");
    Ok(report)
}

pub fn cmd_report(paths: &[PathBuf], out: Option<&Path>) -> Result<String> {
    let reports: Vec<MetricsReport> = paths.iter().map(|p| fsio::read_json(p)).collect::<Result<_>>()?;
    let md = render_markdown(&reports)?;
    match out {
        Some(p) => fsio::write_atomic(p, md.as_bytes())?,
        None => print!("{md}"),
    }
    Ok(md)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { benchmark, out, seed } => cmd_generate(benchmark, out, *seed).map(drop),
        Command::Run(a) => cmd_run(a).map(drop),
        Command::Eval(a) => cmd_eval(a).map(drop),
        Command::Report { reports, out } => cmd_report(reports, out.as_deref()).map(drop),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
