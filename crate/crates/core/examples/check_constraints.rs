//! Runs the symbolic checker on clean geometry for every error slot of each
//! scenario, showing which constraint fires for which injected mistake.
//!
//! Usage: `check_constraints [fbd|circuit]`.

use diagram_feedback::constraints::{check_all, ConstraintConfig};
use diagram_feedback::graph::{build_graph, GraphConfig};
use diagram_feedback::synthgen::{error_cycle, ideal_primitives, list_scenarios};
use diagram_feedback::Domain;

fn main() -> anyhow::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "circuit".into());
    let domain = Domain::parse(&arg).ok_or_else(|| anyhow::anyhow!("unknown benchmark '{arg}'"))?;
    let (gcfg, ccfg) = (GraphConfig::default(), ConstraintConfig::default());

    for scenario in list_scenarios(domain) {
        println!("{}", scenario.key.id);
        for slot in 0..5 {
            let errors = error_cycle(&scenario, slot)?;
            let prims = ideal_primitives(&scenario, &errors)?;
            let graph = build_graph(&prims, &gcfg);
            let found = check_all(&graph, &scenario.key, &ccfg)?;
            let injected = errors
                .first()
                .map_or("none".to_string(), |e| format!("{} {}", e.error_type, e.target));
            let reported: Vec<String> = found
                .iter()
                .map(|v| format!("{}:{} {} ({:.2})", v.constraint_id, v.error_type, v.target, v.confidence))
                .collect();
            println!(
                "  injected {injected:<32} {} nodes, {} nets -> [{}]",
                graph.len(),
                graph.nets().len(),
                reported.join(", ")
            );
        }
    }
    Ok(())
}
