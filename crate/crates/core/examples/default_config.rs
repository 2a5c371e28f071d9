//! Print the default run config as TOML, the starting point for a
//! sensitivity study: every detector, graph and constraint threshold is in it.
//!
//! ```text
//! cargo run --example default_config > my_run.toml
//! diagram-feedback run --config my_run.toml --dataset data/fbd --out preds.jsonl
//! ```

use diagram_feedback::cli::RunConfig;

fn main() {
    print!("{}", RunConfig::default().to_toml());
}
