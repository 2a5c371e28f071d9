use diagram_feedback::constraints::{check_all, ConstraintConfig};
use diagram_feedback::graph::{build_graph, GraphConfig};
use diagram_feedback::synthgen::{build_samples, find_scenario, RenderConfig};
use diagram_feedback::{Domain, ErrorType};

#[test]
fn gt_primitives_reproduce_injected_errors_exactly() {
    let gcfg = GraphConfig::default();
    let ccfg = ConstraintConfig::default();
    let mut failures = Vec::new();
    for domain in [Domain::Fbd, Domain::Circuit] {
        for (sample, _) in build_samples(domain, 42, &RenderConfig::default()).unwrap() {
            let key = find_scenario(&sample.scenario_id).unwrap().key;
            let g = build_graph(&sample.gt_primitives, &gcfg);
            let v = check_all(&g, &key, &ccfg).unwrap();
            let mut got: Vec<ErrorType> = v.iter().map(|v| v.error_type).collect();
            got.sort();
            got.dedup();
            let want: Vec<ErrorType> = sample.injected_errors.iter().map(|e| e.error_type).collect();
            if got != want {
                failures.push(format!("{}: want {want:?}, got {v:?}", sample.sample_id));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn gt_annotations_cover_their_ink() {
    for domain in [Domain::Fbd, Domain::Circuit] {
        for (sample, rendered) in build_samples(domain, 7, &RenderConfig::default()).unwrap() {
            for (p, pixels) in sample.gt_primitives.iter().zip(&rendered.element_pixels) {
                let b = p.bbox.expand(2.0);
                for &(x, y) in pixels {
                    let c = diagram_feedback::Point::new(x as f64 + 0.5, y as f64 + 0.5);
                    assert!(b.contains(&c), "{} {:?} pixel ({x},{y}) outside {:?}", sample.sample_id, p.label, p.bbox);
                }
            }
        }
    }
}
