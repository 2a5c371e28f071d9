//! The whole benchmark in one process: generate both datasets, run grammar,
//! vision-only and annotated-primitive modes on the test split, score with
//! bootstrap intervals and print the tables.
//!
//! Usage: `full_evaluation [OUT_DIR] [N_BOOTSTRAP]`. Without `OUT_DIR` the
//! datasets go to a temporary directory that is removed afterwards.

use std::path::PathBuf;

use diagram_feedback::cli::{run_dataset, RunConfig};
use diagram_feedback::eval::{evaluate, render_markdown};
use diagram_feedback::feedback::Mode;
use diagram_feedback::synthgen::{generate_benchmark, Split};
use diagram_feedback::Domain;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let root = args.first().filter(|a| !a.is_empty()).map_or_else(|| tmp.path().to_path_buf(), PathBuf::from);
    let n_bootstrap: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(10_000);

    let mut reports = Vec::new();
    for domain in [Domain::Fbd, Domain::Circuit] {
        let dir = root.join(domain.as_str());
        let manifest = generate_benchmark(domain, &dir, 42)?;
        for (mode, oracle) in [(Mode::Grammar, false), (Mode::VisionOnly, false), (Mode::Grammar, true)] {
            let cfg = RunConfig {
                mode,
                oracle_perception: oracle,
                ..RunConfig::default()
            };
            let t = std::time::Instant::now();
            let records = run_dataset(&dir, &manifest, &cfg, 0)?;
            let report = evaluate(&manifest, &records, Some(Split::Test), n_bootstrap, 0)?;
            eprintln!("{domain} {}: {} samples in {:.1?}", report.method(), records.len(), t.elapsed());
            reports.push(report);
        }
    }
    print!("{}", render_markdown(&reports)?);
    Ok(())
}
