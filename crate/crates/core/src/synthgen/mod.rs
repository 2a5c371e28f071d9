//! Synthetic benchmark construction: scenario library, rendering, error
//! injection, noise assignment, split and manifest output.

pub mod raster;
pub mod render;
pub mod scenarios;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constraints::{check_all, ConstraintConfig};
use crate::error::{Error, Result};
use crate::fsio;
use crate::graph::{build_graph, GraphConfig};
use crate::types::{Domain, ErrorType, InjectedError, Primitive, ScenarioKey};

pub use render::{ideal_primitives, render_sample, RenderedSample};
pub use scenarios::{find_scenario, list_keys, list_scenarios, Layout, Scenario};

pub const SAMPLES_PER_SCENARIO: usize = 20;
pub const CYCLE_LEN: usize = 5;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseParams {
    level: f64,
}

impl NoiseParams {
    pub const LEVELS: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];

    pub fn new(level: f64) -> Result<Self> {
        Self::LEVELS
            .iter()
            .find(|l| (*l - level).abs() < 1e-9)
            .map(|&level| NoiseParams { level })
            .ok_or_else(|| Error::invalid(format!("noise level {level} is not one of 0.0..0.4")))
    }

    pub fn clean() -> Self {
        NoiseParams { level: 0.0 }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn stroke_jitter_sigma(&self) -> f64 {
        3.0 * self.level
    }

    pub fn pixel_noise_sigma(&self) -> f64 {
        25.0 * self.level
    }

    pub fn rotation_max(&self) -> f64 {
        5.0 * self.level
    }

    pub fn brightness_max(&self) -> f64 {
        20.0 * self.level
    }

    pub fn label(&self) -> String {
        format!("{:.1}", self.level)
    }
}

impl TryFrom<f64> for NoiseParams {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        NoiseParams::new(v)
    }
}

impl From<NoiseParams> for f64 {
    fn from(n: NoiseParams) -> f64 {
        n.level
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub background: u8,
    pub ink: u8,
    pub stroke_width: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 640,
            height: 480,
            background: 255,
            ink: 0,
            stroke_width: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Nominal error class of each cycle slot, before eligibility substitution.
pub fn cycle_classes(domain: Domain) -> [&'static str; CYCLE_LEN] {
    match domain {
        Domain::Fbd => ["none", "missing_force", "wrong_direction", "anchor_error", "extra_force"],
        Domain::Circuit => [
            "none",
            "missing_component",
            "missing_ground",
            "wrong_polarity",
            "open_circuit",
        ],
    }
}

/// Wires whose removal opens a required connection, with the broken pair.
///
/// Simulated on the unaugmented layout through the graph and constraint
/// stages, so the injected error is exactly what the checker reports.
pub fn open_circuit_candidates(scenario: &Scenario) -> Result<Vec<(String, String)>> {
    let Layout::Circuit(layout) = &scenario.layout else {
        return Ok(vec![]);
    };
    let gcfg = GraphConfig::default();
    let ccfg = ConstraintConfig::default();
    let mut out = Vec::new();
    for wire in &layout.wires {
        let err = InjectedError::new(ErrorType::OpenCircuit, "", format!("wire={}", wire.id));
        let prims = ideal_primitives(scenario, &[err])?;
        let g = build_graph(&prims, &gcfg);
        let v = check_all(&g, &scenario.key, &ccfg)?;
        if !v.is_empty() && v.iter().all(|v| v.error_type == ErrorType::OpenCircuit) {
            out.push((wire.id.clone(), v[0].target.clone()));
        }
    }
    Ok(out)
}

/// Deterministic error for one sample slot: `[none, e1, e2, e3, e4][index mod 5]`.
pub fn error_cycle(scenario: &Scenario, sample_index: usize) -> Result<Vec<InjectedError>> {
    if sample_index >= SAMPLES_PER_SCENARIO {
        return Err(Error::invalid(format!("sample index {sample_index} out of range 0..20")));
    }
    let key = &scenario.key;
    let slot = sample_index % CYCLE_LEN;
    if slot == 0 {
        return Ok(vec![]);
    }
    let err = match key.domain {
        Domain::Fbd => {
            let first = key
                .required_forces
                .first()
                .ok_or_else(|| Error::invalid(format!("'{}' has no forces", key.id)))?;
            match slot {
                1 => InjectedError::new(ErrorType::MissingForce, &first.name, ""),
                2 => InjectedError::new(ErrorType::WrongDirection, &first.name, ""),
                3 => InjectedError::new(ErrorType::AnchorError, &first.name, ""),
                _ => {
                    let pos = list_keys(Domain::Fbd).iter().position(|k| k.id == key.id);
                    InjectedError::new(ErrorType::ExtraForce, render::extra_force_name(pos.unwrap_or(0)), "")
                }
            }
        }
        Domain::Circuit => {
            let open = |n: usize| -> Result<InjectedError> {
                let cands = open_circuit_candidates(scenario)?;
                if cands.is_empty() {
                    return Err(Error::invalid(format!("'{}' has no removable wire", key.id)));
                }
                let (wire, pair) = &cands[n % cands.len()];
                Ok(InjectedError::new(ErrorType::OpenCircuit, pair, format!("wire={wire}")))
            };
            match slot {
                1 => {
                    let first = key
                        .components
                        .first()
                        .ok_or_else(|| Error::invalid(format!("'{}' has no components", key.id)))?;
                    InjectedError::new(ErrorType::MissingComponent, &first.id, "")
                }
                2 if key.requires_ground => InjectedError::new(ErrorType::MissingGround, "ground", ""),
                2 => open(1)?,
                3 => match (key.polar_components().next(), key.crossing_wires_connected) {
                    (Some(c), _) => InjectedError::new(ErrorType::WrongPolarity, &c.id, ""),
                    (None, Some(_)) => InjectedError::new(ErrorType::IllegalJunction, "junction", ""),
                    (None, None) => open(2)?,
                },
                _ => open(0)?,
            }
        }
    };
    Ok(vec![err])
}

/// Latin-square noise assignment: `0.1 · ((i + ⌊i/5⌋) mod 5)`.
pub fn assign_noise(sample_index: usize) -> NoiseParams {
    let step = (sample_index + sample_index / CYCLE_LEN) % CYCLE_LEN;
    NoiseParams {
        level: NoiseParams::LEVELS[step],
    }
}

/// 80/20 split stratified by scenario and error class.
///
/// `samples` lists `(scenario_id, sample_index)`; scenarios are numbered in
/// order of first appearance. Scenario `j` sends the lowest-index sample of
/// each class `(j + k) mod 5`, `k = 0..3`, to the test split.
pub fn stratified_split(samples: &[(String, usize)]) -> Result<Vec<Split>> {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, idx) in samples {
        if *idx >= SAMPLES_PER_SCENARIO {
            return Err(Error::invalid(format!("sample index {idx} out of range")));
        }
        if !order.contains(&s.as_str()) {
            order.push(s);
        }
        *counts.entry(s).or_default() += 1;
    }
    if order.len() != 10 || counts.values().any(|&c| c != SAMPLES_PER_SCENARIO) {
        return Err(Error::invalid(format!(
            "expected 10 scenarios x 20 samples, got {} scenarios and {} samples",
            order.len(),
            samples.len()
        )));
    }
    Ok(samples
        .iter()
        .map(|(s, idx)| {
            let j = order.iter().position(|o| o == s).expect("scenario was recorded");
            let class = idx % CYCLE_LEN;
            let lowest = *idx < CYCLE_LEN;
            let in_window = (0..4).any(|k| (j + k) % CYCLE_LEN == class);
            if lowest && in_window {
                Split::Test
            } else {
                Split::Train
            }
        })
        .collect())
}

/// Per-sample seed: first 8 bytes of `sha256(master_seed ‖ scenario_id ‖ index)`.
pub fn sample_seed(master_seed: u64, scenario_id: &str, sample_index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(scenario_id.as_bytes());
    h.update((sample_index as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

pub fn sample_id(scenario_id: &str, sample_index: usize) -> String {
    format!("{scenario_id}_{sample_index:02}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSample {
    pub sample_id: String,
    pub scenario_id: String,
    pub domain: Domain,
    /// Relative to the dataset directory.
    pub image_path: String,
    pub noise: NoiseParams,
    pub error_class: String,
    pub injected_errors: Vec<InjectedError>,
    pub gt_primitives: Vec<Primitive>,
    pub split: Split,
    pub render_seed: u64,
}

/// Per-sample annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub sample_id: String,
    pub scenario_id: String,
    pub domain: Domain,
    pub noise_level: NoiseParams,
    pub split: Split,
    pub seed: u64,
    pub errors: Vec<InjectedError>,
    pub primitives: Vec<Primitive>,
}

impl From<&DiagramSample> for Annotation {
    fn from(s: &DiagramSample) -> Self {
        Annotation {
            sample_id: s.sample_id.clone(),
            scenario_id: s.scenario_id.clone(),
            domain: s.domain,
            noise_level: s.noise,
            split: s.split,
            seed: s.render_seed,
            errors: s.injected_errors.clone(),
            primitives: s.gt_primitives.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub scenario: BTreeMap<String, usize>,
    pub error_class: BTreeMap<String, usize>,
    pub error_type: BTreeMap<String, usize>,
    pub noise_level: BTreeMap<String, usize>,
    pub split: BTreeMap<String, usize>,
}

impl Histograms {
    pub fn of(samples: &[DiagramSample]) -> Self {
        let mut h = Histograms::default();
        for s in samples {
            *h.scenario.entry(s.scenario_id.clone()).or_default() += 1;
            *h.error_class.entry(s.error_class.clone()).or_default() += 1;
            let t = s
                .injected_errors
                .first()
                .map_or("none", |e| e.error_type.as_str());
            *h.error_type.entry(t.to_string()).or_default() += 1;
            *h.noise_level.entry(s.noise.label()).or_default() += 1;
            *h.split.entry(s.split.as_str().to_string()).or_default() += 1;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub benchmark: Domain,
    pub master_seed: u64,
    pub render_config: RenderConfig,
    pub samples: Vec<DiagramSample>,
    pub histograms: Histograms,
}

impl Manifest {
    pub fn load(dataset_dir: &Path) -> Result<Manifest> {
        let path = dataset_dir.join(MANIFEST_FILE);
        let m: Manifest = fsio::read_json(&path)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "{}: schema version {} (expected {SCHEMA_VERSION})",
                path.display(),
                m.schema_version
            )));
        }
        Ok(m)
    }

    pub fn sample(&self, id: &str) -> Option<&DiagramSample> {
        self.samples.iter().find(|s| s.sample_id == id)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DiagramSample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn key_for(&self, sample: &DiagramSample) -> Result<ScenarioKey> {
        find_scenario(&sample.scenario_id)
            .map(|s| s.key)
            .ok_or_else(|| Error::Schema(format!("unknown scenario '{}'", sample.scenario_id)))
    }
}

/// Builds every sample of a benchmark in memory, without writing files.
pub fn build_samples(
    domain: Domain,
    master_seed: u64,
    cfg: &RenderConfig,
) -> Result<Vec<(DiagramSample, RenderedSample)>> {
    let scenarios = list_scenarios(domain);
    let slots: Vec<(&Scenario, usize)> = scenarios
        .iter()
        .flat_map(|s| (0..SAMPLES_PER_SCENARIO).map(move |i| (s, i)))
        .collect();
    let ids: Vec<(String, usize)> = slots.iter().map(|(s, i)| (s.key.id.clone(), *i)).collect();
    let splits = stratified_split(&ids)?;
    let classes = cycle_classes(domain);
    slots
        .par_iter()
        .zip(splits.par_iter())
        .map(|(&(scenario, idx), &split)| {
            let errors = error_cycle(scenario, idx)?;
            let noise = assign_noise(idx);
            let seed = sample_seed(master_seed, &scenario.key.id, idx);
            let rendered = render_sample(scenario, &errors, &noise, seed, cfg)?;
            let id = sample_id(&scenario.key.id, idx);
            let sample = DiagramSample {
                image_path: format!("images/{id}.png"),
                sample_id: id,
                scenario_id: scenario.key.id.clone(),
                domain,
                noise,
                error_class: classes[idx % CYCLE_LEN].to_string(),
                injected_errors: rendered.errors.clone(),
                gt_primitives: rendered.primitives.clone(),
                split,
                render_seed: seed,
            };
            Ok((sample, rendered))
        })
        .collect()
}

/// Renders the benchmark into `out_dir`: `images/`, `annotations/` and the manifest.
pub fn generate_benchmark(domain: Domain, out_dir: &Path, master_seed: u64) -> Result<Manifest> {
    let cfg = RenderConfig::default();
    let built = build_samples(domain, master_seed, &cfg)?;
    let images = out_dir.join("images");
    let annotations = out_dir.join("annotations");
    for d in [&images, &annotations] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    built.par_iter().try_for_each(|(sample, rendered)| -> Result<()> {
        let png = out_dir.join(&sample.image_path);
        fsio::write_png(&png, &rendered.image)?;
        let ann: PathBuf = annotations.join(format!("{}.json", sample.sample_id));
        fsio::write_json(&ann, &Annotation::from(sample))
    })?;
    let samples: Vec<DiagramSample> = built.into_iter().map(|(s, _)| s).collect();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        benchmark: domain,
        master_seed,
        render_config: cfg,
        histograms: Histograms::of(&samples),
        samples,
    };
    fsio::write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    log::info!(
        "wrote {} {} samples to {}",
        manifest.samples.len(),
        domain,
        out_dir.display()
    );
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_assignment_examples() {
        assert_eq!(assign_noise(0).level(), 0.0);
        assert!((assign_noise(6).level() - 0.2).abs() < 1e-12);
        assert!((assign_noise(19).level() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn each_cycle_class_sees_four_noise_levels() {
        for class in 0..CYCLE_LEN {
            let levels: std::collections::BTreeSet<String> = (0..SAMPLES_PER_SCENARIO)
                .filter(|i| i % CYCLE_LEN == class)
                .map(|i| assign_noise(i).label())
                .collect();
            assert_eq!(levels.len(), 4);
        }
    }

    #[test]
    fn noise_rejects_off_grid_levels() {
        assert!(NoiseParams::new(0.25).is_err());
        assert_eq!(NoiseParams::new(0.3).unwrap().rotation_max(), 1.5);
    }

    #[test]
    fn fbd_cycle_examples() {
        let s = &list_scenarios(Domain::Fbd)[0];
        assert!(error_cycle(s, 0).unwrap().is_empty());
        let e = error_cycle(s, 6).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].error_type, ErrorType::MissingForce);
        assert_eq!(e[0].target, s.key.required_forces[0].name);
        assert!(error_cycle(s, 20).is_err());
    }

    #[test]
    fn diode_circuit_gets_polarity_error_in_slot_three() {
        let s = find_scenario("diode_polarity").unwrap();
        let e = error_cycle(&s, 3).unwrap();
        assert_eq!(e[0].error_type, ErrorType::WrongPolarity);
        assert_eq!(e[0].target, "D1");
    }

    #[test]
    fn circuit_substitutions() {
        let series = find_scenario("series").unwrap();
        assert_eq!(error_cycle(&series, 2).unwrap()[0].error_type, ErrorType::OpenCircuit);
        assert_eq!(error_cycle(&series, 3).unwrap()[0].error_type, ErrorType::OpenCircuit);
        // slots 2 and 4 remove different wires
        assert_ne!(
            error_cycle(&series, 2).unwrap()[0].detail,
            error_cycle(&series, 4).unwrap()[0].detail
        );
        let parallel = find_scenario("parallel").unwrap();
        assert_eq!(error_cycle(&parallel, 3).unwrap()[0].error_type, ErrorType::IllegalJunction);
        let grounded = find_scenario("grounded_reference").unwrap();
        assert_eq!(error_cycle(&grounded, 2).unwrap()[0].error_type, ErrorType::MissingGround);
    }

    #[test]
    fn every_circuit_has_removable_wires() {
        for s in list_scenarios(Domain::Circuit) {
            assert!(!open_circuit_candidates(&s).unwrap().is_empty(), "{}", s.key.id);
        }
    }

    #[test]
    fn split_counts() {
        let ids: Vec<(String, usize)> = list_keys(Domain::Fbd)
            .iter()
            .flat_map(|k| (0..20).map(move |i| (k.id.clone(), i)))
            .collect();
        let split = stratified_split(&ids).unwrap();
        assert_eq!(split.iter().filter(|s| **s == Split::Test).count(), 40);
        for class in 0..CYCLE_LEN {
            let n = ids
                .iter()
                .zip(&split)
                .filter(|((_, i), s)| i % CYCLE_LEN == class && **s == Split::Test)
                .count();
            assert_eq!(n, 8);
        }
        assert_eq!(stratified_split(&ids).unwrap(), split);
        assert!(stratified_split(&ids[..199]).is_err());
    }

    #[test]
    fn seeds_differ_per_sample() {
        assert_ne!(sample_seed(42, "series", 0), sample_seed(42, "series", 1));
        assert_ne!(sample_seed(42, "series", 0), sample_seed(43, "series", 0));
        assert_eq!(sample_seed(42, "series", 0), sample_seed(42, "series", 0));
    }
}
