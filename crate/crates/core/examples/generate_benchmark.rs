//! Generate both benchmarks and print their manifest histograms.
//!
//! ```text
//! cargo run --release --example generate_benchmark -- /tmp/bench 42
//! ```

use std::path::PathBuf;

use diagram_feedback::synthgen::generate_benchmark;
use diagram_feedback::Domain;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(args.next().unwrap_or_else(|| "bench".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    for domain in [Domain::Fbd, Domain::Circuit] {
        let t = std::time::Instant::now();
        let dir = root.join(domain.as_str());
        let m = generate_benchmark(domain, &dir, seed)?;
        println!("{domain}: {} samples in {:.2?} -> {}", m.samples.len(), t.elapsed(), dir.display());
        println!("  error classes: {:?}", m.histograms.error_class);
        println!("  injected types: {:?}", m.histograms.error_type);
        println!("  noise levels: {:?}", m.histograms.noise_level);
        println!("  split: {:?}", m.histograms.split);
    }
    Ok(())
}
