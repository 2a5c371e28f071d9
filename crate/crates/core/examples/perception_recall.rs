//! Measures the classical-CV detector against generator ground truth.
//!
//! Usage: `perception_recall [SEED] [CONFIG.toml]`. Prints, per benchmark and
//! noise level, the share of ink pixels kept by preprocessing, speckle
//! counts, and per-kind recall at IoU >= 0.5 (wires: 80% overlap).

use std::collections::BTreeMap;

use anyhow::Result;
use rayon::prelude::*;

use diagram_feedback::perception::{self, match_detections, PerceptionConfig};
use diagram_feedback::synthgen::{build_samples, RenderConfig};
use diagram_feedback::{Domain, PrimitiveKind};

#[derive(Default, Clone, Copy)]
struct Tally {
    ink: usize,
    ink_kept: usize,
    speckle: usize,
    hits: [usize; 5],
    totals: [usize; 5],
    false_pos: [usize; 5],
    n: usize,
}

const KINDS: [&str; 5] = ["arrow", "body", "component", "wire", "junction"];

fn slot(k: &PrimitiveKind) -> usize {
    match k {
        PrimitiveKind::ForceArrow => 0,
        PrimitiveKind::Body => 1,
        PrimitiveKind::Wire => 3,
        PrimitiveKind::Junction => 4,
        _ => 2,
    }
}

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let cfg: PerceptionConfig = match args.get(1) {
        Some(path) => toml::from_str(&std::fs::read_to_string(path)?)?,
        None => PerceptionConfig::default(),
    };
    cfg.validate()?;
    for domain in [Domain::Fbd, Domain::Circuit] {
        let samples = build_samples(domain, seed, &RenderConfig::default())?;
        let rows: Vec<(String, Tally)> = samples
            .par_iter()
            .map(|(sample, rendered)| {
                let mut t = Tally { n: 1, ..Tally::default() };
                let map = perception::preprocess(&rendered.image, &cfg).expect("valid image");
                let mut near = vec![false; map.data.len()];
                for pixels in &rendered.element_pixels {
                    for &(x, y) in pixels {
                        t.ink += 1;
                        t.ink_kept += usize::from(map.get(x, y));
                        for dy in -2i64..=2 {
                            for dx in -2i64..=2 {
                                let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                                if qx >= 0 && qy >= 0 && qx < map.width as i64 && qy < map.height as i64 {
                                    near[(qy * map.width as i64 + qx) as usize] = true;
                                }
                            }
                        }
                    }
                }
                t.speckle = map.data.iter().zip(&near).filter(|(&on, &n)| on && !n).count();
                let dets = perception::detect_all(&rendered.image, &cfg).expect("valid image");
                let assigned = match_detections(&sample.gt_primitives, &dets);
                let mut used = vec![false; dets.len()];
                let verbose = std::env::var("VERBOSE").is_ok_and(|v| v == sample.noise.label() || v == "all");
                for (gt, m) in sample.gt_primitives.iter().zip(&assigned) {
                    t.totals[slot(&gt.kind)] += 1;
                    if let Some(j) = *m {
                        used[j] = true;
                        t.hits[slot(&gt.kind)] += 1;
                    } else if verbose {
                        println!("  {} missed {} {:?} {:?}", sample.sample_id, gt.kind.tag(), gt.label, gt.bbox);
                    }
                }
                for (j, d) in dets.iter().enumerate() {
                    if !used[j] {
                        t.false_pos[slot(&d.kind)] += 1;
                        if verbose {
                            println!("  {} extra {} {:?} {:?}", sample.sample_id, d.kind.tag(), d.bbox, d.endpoints);
                        }
                    }
                }
                (sample.noise.label(), t)
            })
            .collect();
        let mut by_level: BTreeMap<String, Tally> = BTreeMap::new();
        for (level, t) in rows {
            let e = by_level.entry(level).or_default();
            e.ink += t.ink;
            e.ink_kept += t.ink_kept;
            e.speckle += t.speckle;
            e.n += t.n;
            for k in 0..5 {
                e.hits[k] += t.hits[k];
                e.totals[k] += t.totals[k];
                e.false_pos[k] += t.false_pos[k];
            }
        }
        println!("{domain}");
        for (level, t) in &by_level {
            let mut line = format!(
                "  noise {level}: ink kept {:.4}, speckle/img {:.1}",
                t.ink_kept as f64 / t.ink.max(1) as f64,
                t.speckle as f64 / t.n as f64
            );
            for (k, kind) in KINDS.iter().enumerate() {
                if t.totals[k] > 0 || t.false_pos[k] > 0 {
                    line += &format!(
                        ", {} {}/{} (fp {})",
                        kind, t.hits[k], t.totals[k], t.false_pos[k]
                    );
                }
            }
            println!("{line}");
        }
    }
    Ok(())
}
