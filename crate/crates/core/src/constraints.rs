//! Constraint predicates evaluated over the symbolic graph against a key.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, raster_direction, segment_intersection, Point};
use crate::graph::{NodeId, SymbolicGraph};
use crate::types::{Domain, ErrorType, KindFilter, PrimitiveKind, ScenarioKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintConfig {
    /// Degrees; deviations strictly above this are wrong directions.
    pub direction_tolerance: f64,
    /// Pixels between an arrow tail and its key anchor.
    pub anchor_tolerance: f64,
    /// Largest tail-to-anchor distance at which an arrow can stand for a
    /// required force at all.
    pub match_radius: f64,
    pub force_balance_tau_ratio: f64,
    pub polarity_tolerance: f64,
    /// A junction node within this distance of a wire crossing marks it connected.
    pub junction_radius: f64,
    /// Crossings closer than this to a segment end are treated as T or corner
    /// joints, not crossings.
    pub crossing_end_margin: f64,
    /// Confidence assigned to violations with no evidence node.
    pub absence_confidence: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        ConstraintConfig {
            direction_tolerance: 25.0,
            anchor_tolerance: 30.0,
            match_radius: 150.0,
            force_balance_tau_ratio: 0.2,
            polarity_tolerance: 45.0,
            junction_radius: 6.0,
            crossing_end_margin: 8.0,
            absence_confidence: 0.9,
        }
    }
}

impl ConstraintConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.direction_tolerance,
            self.anchor_tolerance,
            self.match_radius,
            self.force_balance_tau_ratio,
            self.polarity_tolerance,
            self.junction_radius,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("constraint tolerances must be positive"));
        }
        if !(0.0..=1.0).contains(&self.absence_confidence) {
            return Err(Error::invalid("absence confidence outside [0,1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint_id: String,
    pub error_type: ErrorType,
    pub target: String,
    pub evidence: Vec<NodeId>,
    pub confidence: f64,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Violation {
    fn new(id: &str, error_type: ErrorType, target: impl Into<String>) -> Self {
        Violation {
            constraint_id: id.to_string(),
            error_type,
            target: target.into(),
            evidence: vec![],
            confidence: 1.0,
            params: BTreeMap::new(),
        }
    }

    fn param(mut self, k: &str, v: impl ToString) -> Self {
        self.params.insert(k.to_string(), v.to_string());
        self
    }

    fn evidence(mut self, g: &SymbolicGraph, ids: &[NodeId], cfg: &ConstraintConfig) -> Self {
        self.evidence = ids.to_vec();
        self.confidence = if ids.is_empty() {
            cfg.absence_confidence
        } else {
            ids.iter()
                .map(|&i| g.nodes[i].confidence)
                .fold(1.0, f64::min)
        };
        self
    }
}

fn require(key: &ScenarioKey, domain: Domain) -> Result<()> {
    if key.domain != domain {
        return Err(Error::DomainMismatch {
            expected: domain,
            actual: key.domain,
        });
    }
    Ok(())
}

/// Greedy global assignment: candidate pairs within `radius`, cheapest first,
/// ties broken by key order then node order.
fn greedy_match(costs: &[Vec<(NodeId, f64)>], radius: f64) -> Vec<Option<NodeId>> {
    let mut pairs: Vec<(f64, usize, NodeId)> = costs
        .iter()
        .enumerate()
        .flat_map(|(k, cands)| cands.iter().map(move |&(n, d)| (d, k, n)))
        .filter(|(d, _, _)| *d <= radius)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; costs.len()];
    let mut taken = Vec::new();
    for (_, k, n) in pairs {
        if out[k].is_none() && !taken.contains(&n) {
            out[k] = Some(n);
            taken.push(n);
        }
    }
    out
}

fn arrow_tail(g: &SymbolicGraph, id: NodeId) -> Point {
    let p = &g.nodes[id];
    p.arrow_axis().map_or_else(|| p.bbox.center(), |(t, _)| t)
}

/// Force-to-arrow correspondence for an FBD key.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceMatching {
    /// Matched arrow per required force, in key order.
    pub matched: Vec<Option<NodeId>>,
    /// Arrows left over, in node order.
    pub unmatched: Vec<NodeId>,
}

pub fn match_forces(g: &SymbolicGraph, key: &ScenarioKey, cfg: &ConstraintConfig) -> ForceMatching {
    let arrows: Vec<NodeId> = g.ids_of(KindFilter::Arrows).collect();
    let costs: Vec<Vec<(NodeId, f64)>> = key
        .required_forces
        .iter()
        .map(|f| {
            arrows
                .iter()
                .map(|&a| (a, arrow_tail(g, a).distance(&f.anchor)))
                .collect()
        })
        .collect();
    let matched = greedy_match(&costs, cfg.match_radius);
    let unmatched = arrows
        .into_iter()
        .filter(|a| !matched.contains(&Some(*a)))
        .collect();
    ForceMatching { matched, unmatched }
}

/// Component-to-node correspondence, nearest same-kind node first.
pub fn match_components(g: &SymbolicGraph, key: &ScenarioKey) -> Vec<Option<NodeId>> {
    let costs: Vec<Vec<(NodeId, f64)>> = key
        .components
        .iter()
        .map(|c| {
            g.ids_of(KindFilter::Exactly(PrimitiveKind::Component(c.kind)))
                .map(|n| {
                    let d = c
                        .position
                        .map_or(0.0, |p| p.distance(&g.nodes[n].bbox.center()));
                    (n, d)
                })
                .collect()
        })
        .collect();
    greedy_match(&costs, f64::INFINITY)
}

pub fn check_required_forces(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Fbd)?;
    let m = match_forces(g, key, cfg);
    Ok(key
        .required_forces
        .iter()
        .zip(&m.matched)
        .filter(|(_, n)| n.is_none())
        .map(|(f, _)| {
            Violation::new("required_forces", ErrorType::MissingForce, &f.name)
                .evidence(g, &[], cfg)
        })
        .collect())
}

pub fn check_force_directions(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Fbd)?;
    let m = match_forces(g, key, cfg);
    let mut out = Vec::new();
    for (f, n) in key.required_forces.iter().zip(&m.matched) {
        let Some(n) = *n else { continue };
        let Some(observed) = g.nodes[n].orientation else { continue };
        let diff = angle_diff(observed, f.direction);
        if diff > cfg.direction_tolerance {
            out.push(
                Violation::new("force_directions", ErrorType::WrongDirection, &f.name)
                    .evidence(g, &[n], cfg)
                    .param("expected_deg", format!("{:.1}", f.direction))
                    .param("observed_deg", format!("{observed:.1}")),
            );
        }
    }
    Ok(out)
}

pub fn check_anchor(g: &SymbolicGraph, key: &ScenarioKey, cfg: &ConstraintConfig) -> Result<Vec<Violation>> {
    require(key, Domain::Fbd)?;
    let m = match_forces(g, key, cfg);
    let mut out = Vec::new();
    for (f, n) in key.required_forces.iter().zip(&m.matched) {
        let Some(n) = *n else { continue };
        let d = arrow_tail(g, n).distance(&f.anchor);
        if d > cfg.anchor_tolerance {
            out.push(
                Violation::new("anchor", ErrorType::AnchorError, &f.name)
                    .evidence(g, &[n], cfg)
                    .param("offset_px", format!("{d:.1}")),
            );
        }
    }
    Ok(out)
}

pub fn check_extra_forces(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Fbd)?;
    let m = match_forces(g, key, cfg);
    Ok(m.unmatched
        .iter()
        .map(|&n| {
            let target = g.nodes[n].label.clone().unwrap_or_else(|| format!("arrow #{n}"));
            Violation::new("extra_forces", ErrorType::ExtraForce, target).evidence(g, &[n], cfg)
        })
        .collect())
}

/// Net force test for static scenarios: `|Σ F| < τ` with arrow lengths as
/// magnitudes and `τ = ratio × mean key magnitude`.
pub fn check_force_balance(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Fbd)?;
    if !key.is_static || key.required_forces.is_empty() {
        return Ok(vec![]);
    }
    let arrows: Vec<NodeId> = g.ids_of(KindFilter::Arrows).collect();
    let (mut sx, mut sy) = (0.0, 0.0);
    for &a in &arrows {
        let p = &g.nodes[a];
        let (Some(theta), Some(len)) = (p.orientation, p.arrow_length()) else { continue };
        let (dx, dy) = raster_direction(theta);
        sx += dx * len;
        sy += dy * len;
    }
    let mean =
        key.required_forces.iter().map(|f| f.magnitude).sum::<f64>() / key.required_forces.len() as f64;
    let tau = cfg.force_balance_tau_ratio * mean;
    let net = sx.hypot(sy);
    if net < tau {
        return Ok(vec![]);
    }
    Ok(vec![Violation::new("force_balance", ErrorType::MissingForce, "net_force")
        .evidence(g, &arrows, cfg)
        .param("net_px", format!("{net:.1}"))
        .param("tau_px", format!("{tau:.1}"))])
}

pub fn check_component_presence(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Circuit)?;
    let m = match_components(g, key);
    Ok(key
        .components
        .iter()
        .zip(&m)
        .filter(|(_, n)| n.is_none())
        .map(|(c, _)| {
            Violation::new("component_presence", ErrorType::MissingComponent, &c.id)
                .evidence(g, &[], cfg)
                .param("kind", c.kind.name())
        })
        .collect())
}

/// A required connection `(a, b)` listed `k` times must be realized by `k`
/// distinct wire nets touching both components. Pairs with an unmatched
/// component are left to the presence check.
pub fn check_connectivity(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Circuit)?;
    let m = match_components(g, key);
    let node_of = |id: &str| {
        key.components
            .iter()
            .position(|c| c.id == id)
            .and_then(|i| m[i])
    };
    let mut out = Vec::new();
    for ((a, b), need) in key.connection_requirements() {
        let (Some(na), Some(nb)) = (node_of(&a), node_of(&b)) else { continue };
        let shared = g.shared_nets(na, nb)?;
        if shared < need {
            out.push(
                Violation::new("connectivity", ErrorType::OpenCircuit, format!("{a}-{b}"))
                    .evidence(g, &[na, nb], cfg)
                    .param("shared_nets", shared)
                    .param("required_nets", need),
            );
        }
    }
    Ok(out)
}

pub fn check_polarity(g: &SymbolicGraph, key: &ScenarioKey, cfg: &ConstraintConfig) -> Result<Vec<Violation>> {
    require(key, Domain::Circuit)?;
    let m = match_components(g, key);
    let mut out = Vec::new();
    for (c, n) in key.components.iter().zip(&m) {
        let (Some(expected), Some(n)) = (c.polarity, *n) else { continue };
        let Some(observed) = g.nodes[n].orientation else { continue };
        if angle_diff(observed, expected) > cfg.polarity_tolerance {
            out.push(
                Violation::new("polarity", ErrorType::WrongPolarity, &c.id)
                    .evidence(g, &[n], cfg)
                    .param("expected_deg", format!("{expected:.1}"))
                    .param("observed_deg", format!("{observed:.1}")),
            );
        }
    }
    Ok(out)
}

pub fn check_ground(g: &SymbolicGraph, key: &ScenarioKey, cfg: &ConstraintConfig) -> Result<Vec<Violation>> {
    require(key, Domain::Circuit)?;
    if !key.requires_ground || g.ids_of(KindFilter::Exactly(PrimitiveKind::GroundSymbol)).next().is_some() {
        return Ok(vec![]);
    }
    Ok(vec![Violation::new("ground", ErrorType::MissingGround, "ground").evidence(g, &[], cfg)])
}

/// Points where two wire segments cross away from their ends.
pub fn wire_crossings(g: &SymbolicGraph, end_margin: f64) -> Vec<(Point, NodeId, NodeId)> {
    let wires: Vec<(NodeId, Point, Point)> = g
        .ids_of(KindFilter::Wires)
        .filter_map(|i| g.nodes[i].endpoints.map(|(a, b)| (i, a, b)))
        .collect();
    let mut out = Vec::new();
    for (k, &(i, a0, a1)) in wires.iter().enumerate() {
        for &(j, b0, b1) in &wires[k + 1..] {
            let Some((p, _, _)) = segment_intersection(&a0, &a1, &b0, &b1) else { continue };
            let clear = [a0, a1, b0, b1].iter().all(|e| e.distance(&p) > end_margin);
            if clear {
                out.push((p, i, j));
            }
        }
    }
    out
}

pub fn check_junction_semantics(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, Domain::Circuit)?;
    let Some(connected) = key.crossing_wires_connected else {
        return Ok(vec![]);
    };
    let junctions: Vec<NodeId> = g.ids_of(KindFilter::Exactly(PrimitiveKind::Junction)).collect();
    let mut out: Vec<Violation> = Vec::new();
    for (p, a, b) in wire_crossings(g, cfg.crossing_end_margin) {
        // one verdict per crossing point, however many segment pairs meet there
        if out.iter().any(|v| {
            v.params.get("x").and_then(|x| x.parse::<f64>().ok()).is_some_and(|x| (x - p.x).abs() < cfg.junction_radius)
                && v.params.get("y").and_then(|y| y.parse::<f64>().ok()).is_some_and(|y| (y - p.y).abs() < cfg.junction_radius)
        }) {
            continue;
        }
        let dot = junctions
            .iter()
            .copied()
            .find(|&j| g.nodes[j].bbox.center().distance(&p) <= cfg.junction_radius);
        let v = match (connected, dot) {
            (true, None) => Violation::new("junction_semantics", ErrorType::IllegalJunction, "junction")
                .evidence(g, &[a, b], cfg)
                .param("expected", "dot"),
            (false, Some(j)) => {
                Violation::new("junction_semantics", ErrorType::IllegalJunction, "junction")
                    .evidence(g, &[a, b, j], cfg)
                    .param("expected", "no dot")
            }
            _ => continue,
        };
        out.push(v.param("x", format!("{:.1}", p.x)).param("y", format!("{:.1}", p.y)));
    }
    Ok(out)
}

/// All applicable checks in fixed order.
///
/// The balance check only reports when nothing else did: any other force
/// error already unbalances the diagram, and a second violation for the same
/// mistake would be noise.
pub fn check_all(g: &SymbolicGraph, key: &ScenarioKey, cfg: &ConstraintConfig) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    match key.domain {
        Domain::Fbd => {
            out.extend(check_required_forces(g, key, cfg)?);
            out.extend(check_force_directions(g, key, cfg)?);
            out.extend(check_anchor(g, key, cfg)?);
            out.extend(check_extra_forces(g, key, cfg)?);
            if out.is_empty() {
                out.extend(check_force_balance(g, key, cfg)?);
            }
        }
        Domain::Circuit => {
            out.extend(check_component_presence(g, key, cfg)?);
            out.extend(check_connectivity(g, key, cfg)?);
            out.extend(check_polarity(g, key, cfg)?);
            out.extend(check_ground(g, key, cfg)?);
            out.extend(check_junction_semantics(g, key, cfg)?);
        }
    }
    Ok(out)
}

/// Like [`check_all`], but rejects primitives that belong to the other domain.
pub fn check_all_strict(
    g: &SymbolicGraph,
    key: &ScenarioKey,
    domain: Domain,
    cfg: &ConstraintConfig,
) -> Result<Vec<Violation>> {
    require(key, domain)?;
    check_all(g, key, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::graph::{build_graph, GraphConfig};
    use crate::synthgen::{error_cycle, find_scenario, ideal_primitives, list_scenarios};
    use crate::types::{InjectedError, Primitive};
    use proptest::prelude::*;

    fn graph_of(prims: &[Primitive]) -> SymbolicGraph {
        build_graph(prims, &GraphConfig::default())
    }

    fn oracle(id: &str, errors: &[InjectedError]) -> (SymbolicGraph, ScenarioKey) {
        let s = find_scenario(id).unwrap();
        (graph_of(&ideal_primitives(&s, errors).unwrap()), s.key)
    }

    fn types(v: &[Violation]) -> Vec<ErrorType> {
        v.iter().map(|v| v.error_type).collect()
    }

    fn arrow(tail: Point, deg: f64, len: f64) -> Primitive {
        let shapes = crate::synthgen::render::arrow_shapes(tail, deg, len, 2.0);
        let b = shapes.iter().map(|s| s.bounds()).reduce(|a, b| a.union(&b)).unwrap();
        Primitive::new(PrimitiveKind::ForceArrow, b, 0.8).with_orientation(deg)
    }

    #[test]
    fn correct_diagrams_pass() {
        let cfg = ConstraintConfig::default();
        for d in [Domain::Fbd, Domain::Circuit] {
            for s in list_scenarios(d) {
                let g = graph_of(&ideal_primitives(&s, &[]).unwrap());
                assert_eq!(check_all(&g, &s.key, &cfg).unwrap(), vec![], "{}", s.key.id);
            }
        }
    }

    #[test]
    fn single_injected_error_is_reported_alone() {
        let cfg = ConstraintConfig::default();
        for d in [Domain::Fbd, Domain::Circuit] {
            for s in list_scenarios(d) {
                for i in 0..20 {
                    let errs = error_cycle(&s, i).unwrap();
                    let g = graph_of(&ideal_primitives(&s, &errs).unwrap());
                    let mut got = types(&check_all(&g, &s.key, &cfg).unwrap());
                    got.dedup();
                    let want: Vec<ErrorType> = errs.iter().map(|e| e.error_type).collect();
                    assert_eq!(got, want, "{} #{i}", s.key.id);
                }
            }
        }
    }

    #[test]
    fn missing_gravity() {
        let cfg = ConstraintConfig::default();
        let (g, key) = oracle(
            "block_on_table",
            &[InjectedError::new(ErrorType::MissingForce, "gravity", "")],
        );
        let v = check_required_forces(&g, &key, &cfg).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].target, "gravity");
        assert_eq!(v[0].confidence, 0.9);
        assert!(v[0].evidence.is_empty());
    }

    #[test]
    fn empty_graph_reports_every_force() {
        let cfg = ConstraintConfig::default();
        let key = find_scenario("inclined_plane").unwrap().key;
        let g = graph_of(&[]);
        assert_eq!(check_required_forces(&g, &key, &cfg).unwrap().len(), 3);
        // nothing is drawn, so balance is trivially satisfied and only absences remain
        assert_eq!(types(&check_all(&g, &key, &cfg).unwrap()), vec![ErrorType::MissingForce; 3]);
        assert!(check_required_forces(&g, &find_scenario("series").unwrap().key, &cfg).is_err());
    }

    #[test]
    fn direction_tolerance_is_strict() {
        let cfg = ConstraintConfig::default();
        let key = find_scenario("block_on_table").unwrap().key;
        let prims: Vec<Primitive> = key
            .required_forces
            .iter()
            .map(|f| arrow(f.anchor, f.direction + 25.0, f.magnitude))
            .collect();
        assert!(check_force_directions(&graph_of(&prims), &key, &cfg).unwrap().is_empty());
        let mut rotated = prims.clone();
        let f = &key.required_forces[0];
        rotated[0] = arrow(f.anchor, f.direction + 120.0, f.magnitude);
        let v = check_force_directions(&graph_of(&rotated), &key, &cfg).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].target, f.name);
    }

    #[test]
    fn anchor_tolerance() {
        let cfg = ConstraintConfig::default();
        let key = find_scenario("hanging_mass").unwrap().key;
        let shifted = |d: f64| -> Vec<Primitive> {
            key.required_forces
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let tail = if i == 0 { f.anchor.offset(d, 0.0) } else { f.anchor };
                    arrow(tail, f.direction, f.magnitude)
                })
                .collect()
        };
        assert!(check_anchor(&graph_of(&shifted(10.0)), &key, &cfg).unwrap().is_empty());
        let v = check_anchor(&graph_of(&shifted(80.0)), &key, &cfg).unwrap();
        assert_eq!(types(&v), vec![ErrorType::AnchorError]);
        assert_eq!(v[0].target, "tension");
    }

    #[test]
    fn extra_and_missing_are_disjoint() {
        let cfg = ConstraintConfig::default();
        let key = find_scenario("pushing_block").unwrap().key;
        let one = [arrow(key.required_forces[0].anchor, 0.0, 80.0)];
        assert!(check_extra_forces(&graph_of(&one), &key, &cfg).unwrap().is_empty());
        let (g, key) = oracle(
            "pushing_block",
            &[InjectedError::new(ErrorType::ExtraForce, "impetus", "")],
        );
        assert_eq!(types(&check_extra_forces(&g, &key, &cfg).unwrap()), vec![ErrorType::ExtraForce]);
    }

    #[test]
    fn force_balance_examples() {
        let cfg = ConstraintConfig::default();
        let mut key = find_scenario("block_on_table").unwrap().key;
        let c = Point::new(320., 240.);
        let balanced = [arrow(c.offset(10., 0.), 0.0, 100.0), arrow(c.offset(-10., 0.), 180.0, 100.0)];
        assert!(check_force_balance(&graph_of(&balanced), &key, &cfg).unwrap().is_empty());
        let single = [arrow(c, 270.0, 100.0)];
        let v = check_force_balance(&graph_of(&single), &key, &cfg).unwrap();
        assert_eq!(v[0].constraint_id, "force_balance");
        assert_eq!(v[0].target, "net_force");
        assert_eq!(v[0].error_type, ErrorType::MissingForce);
        key.is_static = false;
        assert!(check_force_balance(&graph_of(&single), &key, &cfg).unwrap().is_empty());
    }

    #[test]
    fn circuit_absences() {
        let cfg = ConstraintConfig::default();
        let key = find_scenario("series_parallel").unwrap().key;
        let g = graph_of(&[]);
        assert_eq!(check_component_presence(&g, &key, &cfg).unwrap().len(), key.components.len());
        let (g, key) = oracle(
            "series",
            &[InjectedError::new(ErrorType::MissingComponent, "R1", "")],
        );
        let v = check_component_presence(&g, &key, &cfg).unwrap();
        assert_eq!(v[0].target, "R1");
    }

    #[test]
    fn polarity_and_ground() {
        let cfg = ConstraintConfig::default();
        let (g, key) = oracle(
            "diode_polarity",
            &[InjectedError::new(ErrorType::WrongPolarity, "D1", "")],
        );
        let v = check_polarity(&g, &key, &cfg).unwrap();
        assert_eq!((v.len(), v[0].target.as_str()), (1, "D1"));
        let (g, key) = oracle("series", &[]);
        assert!(check_polarity(&g, &key, &cfg).unwrap().is_empty());
        assert!(check_ground(&g, &key, &cfg).unwrap().is_empty());
        let (g, key) = oracle(
            "grounded_reference",
            &[InjectedError::new(ErrorType::MissingGround, "ground", "")],
        );
        assert_eq!(types(&check_ground(&g, &key, &cfg).unwrap()), vec![ErrorType::MissingGround]);
    }

    #[test]
    fn junction_semantics() {
        let cfg = ConstraintConfig::default();
        let (g, key) = oracle("parallel", &[]);
        assert!(check_junction_semantics(&g, &key, &cfg).unwrap().is_empty());
        let (g, key) = oracle(
            "parallel",
            &[InjectedError::new(ErrorType::IllegalJunction, "junction", "")],
        );
        assert_eq!(check_junction_semantics(&g, &key, &cfg).unwrap().len(), 1);
        let (g, key) = oracle("series", &[]);
        assert!(check_junction_semantics(&g, &key, &cfg).unwrap().is_empty());
    }

    #[test]
    fn open_circuit_from_removed_wire() {
        let cfg = ConstraintConfig::default();
        let (g, key) = oracle(
            "series",
            &[InjectedError::new(ErrorType::OpenCircuit, "", "wire=n1.w0")],
        );
        assert!(!check_connectivity(&g, &key, &cfg).unwrap().is_empty());
        let (g, key) = oracle("series", &[]);
        assert!(check_connectivity(&g, &key, &cfg).unwrap().is_empty());
        let mut bare = key.clone();
        bare.connections.clear();
        assert!(check_connectivity(&g, &bare, &cfg).unwrap().is_empty());
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let cfg = ConstraintConfig::default();
        let key = find_scenario("series").unwrap().key;
        let g = graph_of(&[]);
        assert!(matches!(
            check_all_strict(&g, &key, Domain::Fbd, &cfg),
            Err(Error::DomainMismatch { .. })
        ));
    }

    fn scenario_and_sample() -> impl Strategy<Value = (String, usize, Vec<bool>)> {
        let ids: Vec<String> = [Domain::Fbd, Domain::Circuit]
            .into_iter()
            .flat_map(list_scenarios)
            .map(|s| s.key.id)
            .collect();
        (prop::sample::select(ids), 0..20usize, prop::collection::vec(any::<bool>(), 16))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Dropping primitives never clears an absence-type violation.
        #[test]
        fn absence_violations_are_monotone((id, idx, keep) in scenario_and_sample()) {
            let cfg = ConstraintConfig::default();
            let s = find_scenario(&id).unwrap();
            let errs = error_cycle(&s, idx).unwrap();
            let prims = ideal_primitives(&s, &errs).unwrap();
            let kept: Vec<Primitive> = prims
                .iter()
                .zip(keep.iter().cycle())
                .filter(|(_, k)| **k)
                .map(|(p, _)| p.clone())
                .collect();
            let absences = |p: &[Primitive]| -> Vec<(ErrorType, String)> {
                let mut v: Vec<(ErrorType, String)> = check_all(&graph_of(p), &s.key, &cfg)
                    .unwrap()
                    .into_iter()
                    .filter(|v| matches!(
                        v.error_type,
                        ErrorType::MissingForce | ErrorType::MissingComponent | ErrorType::MissingGround
                    ))
                    .map(|v| (v.error_type, v.target))
                    .collect();
                v.sort();
                v
            };
            let before = absences(&prims);
            let after = absences(&kept);
            for t in before.iter().map(|(t, _)| *t) {
                prop_assert!(after.iter().any(|(a, _)| *a == t), "{t} vanished");
            }
        }

        #[test]
        fn check_all_is_deterministic((id, idx, _k) in scenario_and_sample()) {
            let cfg = ConstraintConfig::default();
            let s = find_scenario(&id).unwrap();
            let g = graph_of(&ideal_primitives(&s, &error_cycle(&s, idx).unwrap()).unwrap());
            prop_assert_eq!(check_all(&g, &s.key, &cfg).unwrap(), check_all(&g, &s.key, &cfg).unwrap());
        }
    }

    #[test]
    fn greedy_ties_follow_key_order() {
        let m = greedy_match(&[vec![(0, 5.0)], vec![(0, 5.0)]], 10.0);
        assert_eq!(m, vec![Some(0), None]);
        let b = BBox::new(0., 0., 1., 1.);
        assert!(b.is_valid());
    }
}
