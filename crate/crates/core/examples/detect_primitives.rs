//! Renders one diagram and runs the detector on it.
//!
//! Usage: `detect_primitives [SCENARIO] [NOISE] [DEBUG_DIR]`, e.g.
//! `detect_primitives series_parallel 0.2 /tmp/dbg`. Lists every detection
//! and which annotated primitive it was matched to.

use std::path::Path;

use diagram_feedback::perception::{detect_all, match_detections, write_debug, PerceptionConfig};
use diagram_feedback::synthgen::{error_cycle, find_scenario, render_sample, NoiseParams, RenderConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id = args.first().map_or("series_parallel", String::as_str);
    let noise = NoiseParams::new(args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(0.1))?;
    let scenario = find_scenario(id).ok_or_else(|| anyhow::anyhow!("no scenario '{id}'"))?;

    // Slot 2 of the error cycle carries an injected mistake in every scenario.
    let errors = error_cycle(&scenario, 2)?;
    let rendered = render_sample(&scenario, &errors, &noise, 1234, &RenderConfig::default())?;
    let cfg = PerceptionConfig::default();

    let t = std::time::Instant::now();
    let dets = detect_all(&rendered.image, &cfg)?;
    println!("{id} at noise {}: {} detections in {:.1?}", noise.label(), dets.len(), t.elapsed());
    println!("injected: {:?}", errors.iter().map(|e| (e.error_type, &e.target)).collect::<Vec<_>>());

    let assigned = match_detections(&rendered.primitives, &dets);
    for (d, det) in dets.iter().enumerate() {
        let gt = assigned.iter().position(|a| *a == Some(d));
        let b = det.bbox;
        println!(
            "  {:<18} conf {:.2}  box ({:>5.1},{:>5.1})-({:>5.1},{:>5.1})  {}",
            det.kind.tag(),
            det.confidence,
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max,
            gt.map_or("unmatched".to_string(), |g| format!("-> annotation #{g}")),
        );
    }
    let missed = assigned.iter().filter(|a| a.is_none()).count();
    println!("{missed} of {} annotated primitives missed", rendered.primitives.len());

    if let Some(dir) = args.get(2) {
        std::fs::create_dir_all(dir)?;
        write_debug(&rendered.image, &cfg, Path::new(dir), id)?;
        println!("binary map and overlay written to {dir}");
    }
    Ok(())
}
