//! Prints the tutor feedback each mode produces for one rendered diagram per
//! error class.
//!
//! Usage: `feedback_templates [SCENARIO]`.

use diagram_feedback::feedback::{Mode, Pipeline, PipelineConfig};
use diagram_feedback::synthgen::{error_cycle, find_scenario, render_sample, NoiseParams, RenderConfig};

fn main() -> anyhow::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "inclined_plane".into());
    let scenario = find_scenario(&id).ok_or_else(|| anyhow::anyhow!("no scenario '{id}'"))?;
    let pipeline = Pipeline::new(PipelineConfig::default());
    let domain = scenario.key.domain;

    for slot in 0..5 {
        let errors = error_cycle(&scenario, slot)?;
        let r = render_sample(&scenario, &errors, &NoiseParams::clean(), slot as u64, &RenderConfig::default())?;
        let injected = errors
            .first()
            .map_or("no error".to_string(), |e| format!("{} on {}", e.error_type, e.target));
        println!("== {id}, {injected}");
        for mode in [Mode::Grammar, Mode::VisionOnly] {
            let report = pipeline.run_pipeline(&id, &r.image, &scenario.key, domain, mode)?;
            println!("-- {mode} ({:.1} ms)", report.total_ms);
            for line in report.text.lines() {
                println!("   {line}");
            }
        }
        let oracle = pipeline.run_pipeline_oracle(&id, &r.primitives, None, &scenario.key, domain, Mode::Grammar)?;
        println!("-- grammar, annotated primitives");
        for line in oracle.text.lines() {
            println!("   {line}");
        }
        println!();
    }
    Ok(())
}
