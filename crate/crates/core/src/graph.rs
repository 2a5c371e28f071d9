//! Typed proximity graph over primitives.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::bbox_gap;
use crate::types::{KindFilter, Primitive, PrimitiveKind};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Nodes whose boxes are closer than this are adjacent.
    pub proximity_radius: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            proximity_radius: 80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicGraph {
    pub nodes: Vec<Primitive>,
    /// Sorted `(u, v)` pairs with `u < v`.
    pub edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

pub fn build_graph(primitives: &[Primitive], config: &GraphConfig) -> SymbolicGraph {
    let n = primitives.len();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if bbox_gap(&primitives[u].bbox, &primitives[v].bbox) < config.proximity_radius {
                edges.push((u, v));
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    for a in &mut adjacency {
        a.sort_unstable();
    }
    SymbolicGraph {
        nodes: primitives.to_vec(),
        edges,
        adjacency,
    }
}

impl SymbolicGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&Primitive> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn ids_of(&self, filter: KindFilter) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, p)| filter.admits(&p.kind))
            .map(|(i, _)| i)
    }

    pub fn neighbors(&self, id: NodeId, filter: KindFilter) -> Result<Vec<NodeId>> {
        self.node(id)?;
        Ok(self.adjacency[id]
            .iter()
            .copied()
            .filter(|&v| filter.admits(&self.nodes[v].kind))
            .collect())
    }

    /// Whether a path joins `a` and `b` whose interior nodes all pass `via`.
    pub fn connected(&self, a: NodeId, b: NodeId, via: KindFilter) -> Result<bool> {
        self.node(a)?;
        self.node(b)?;
        if a == b {
            return Ok(true);
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if v == b {
                    return Ok(true);
                }
                if !seen[v] && via.admits(&self.nodes[v].kind) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        Ok(false)
    }

    /// Connected components of the wire/junction subgraph, each sorted,
    /// ordered by smallest member.
    pub fn nets(&self) -> Vec<Vec<NodeId>> {
        let conductive = |k: &PrimitiveKind| KindFilter::WiresAndJunctions.admits(k);
        let mut seen = vec![false; self.len()];
        let mut nets = Vec::new();
        for start in 0..self.len() {
            if seen[start] || !conductive(&self.nodes[start].kind) {
                continue;
            }
            let mut net = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < net.len() {
                let u = net[i];
                for &v in &self.adjacency[u] {
                    if !seen[v] && conductive(&self.nodes[v].kind) {
                        seen[v] = true;
                        net.push(v);
                    }
                }
                i += 1;
            }
            net.sort_unstable();
            nets.push(net);
        }
        nets
    }

    /// Indices into [`SymbolicGraph::nets`] of the nets adjacent to `id`.
    pub fn nets_touching(&self, id: NodeId) -> Result<BTreeSet<usize>> {
        self.node(id)?;
        let nets = self.nets();
        Ok(nets
            .iter()
            .enumerate()
            .filter(|(_, net)| net.iter().any(|w| self.adjacency[id].contains(w)))
            .map(|(i, _)| i)
            .collect())
    }

    /// Number of distinct nets both nodes touch.
    pub fn shared_nets(&self, a: NodeId, b: NodeId) -> Result<usize> {
        let na = self.nets_touching(a)?;
        let nb = self.nets_touching(b)?;
        Ok(na.intersection(&nb).count())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.nodes,
            "edges": self.edges.iter().map(|&(u, v)| [u, v]).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, Point};
    use crate::types::ComponentKind;
    use proptest::prelude::*;

    fn boxed(kind: PrimitiveKind, x0: f64, x1: f64) -> Primitive {
        Primitive::new(kind, BBox::new(x0, 0.0, x1, 10.0), 1.0)
    }

    fn wire(x0: f64, x1: f64) -> Primitive {
        Primitive::wire(Point::new(x0, 5.0), Point::new(x1, 5.0), 1.0, 1.0)
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(&[], &GraphConfig::default());
        assert!(g.is_empty());
        assert!(g.edges.is_empty());
    }

    #[test]
    fn proximity_threshold() {
        let cfg = GraphConfig::default();
        let near = [boxed(PrimitiveKind::Body, 0., 10.), boxed(PrimitiveKind::Body, 60., 70.)];
        assert_eq!(build_graph(&near, &cfg).edges, vec![(0, 1)]);
        let far = [boxed(PrimitiveKind::Body, 0., 10.), boxed(PrimitiveKind::Body, 110., 120.)];
        assert!(build_graph(&far, &cfg).edges.is_empty());
    }

    #[test]
    fn chain_connectivity() {
        let r = PrimitiveKind::Component(ComponentKind::Resistor);
        let b = PrimitiveKind::Component(ComponentKind::Battery);
        let chain = [boxed(r, 0., 40.), wire(70., 200.), boxed(b, 230., 270.)];
        let g = build_graph(&chain, &GraphConfig::default());
        assert!(g.connected(0, 2, KindFilter::Wires).unwrap());
        assert!(g.connected(1, 1, KindFilter::None).unwrap());
        assert!(!g.connected(0, 2, KindFilter::Components).unwrap());

        let broken = [boxed(r, 0., 40.), wire(70., 200.), boxed(b, 300., 340.)];
        let g = build_graph(&broken, &GraphConfig::default());
        assert!(!g.connected(0, 2, KindFilter::Wires).unwrap());
        assert!(matches!(g.connected(0, 9, KindFilter::Any), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn junction_neighbors() {
        let nodes = [
            Primitive::new(PrimitiveKind::Junction, BBox::new(96., 96., 104., 104.), 1.0),
            Primitive::wire(Point::new(0., 100.), Point::new(96., 100.), 1.0, 1.0),
            Primitive::wire(Point::new(104., 100.), Point::new(200., 100.), 1.0, 1.0),
            Primitive::wire(Point::new(100., 104.), Point::new(100., 200.), 1.0, 1.0),
            boxed(PrimitiveKind::Body, 500., 520.),
        ];
        let g = build_graph(&nodes, &GraphConfig::default());
        assert_eq!(g.neighbors(0, KindFilter::Wires).unwrap(), vec![1, 2, 3]);
        assert!(g.neighbors(4, KindFilter::Any).unwrap().is_empty());
        assert!(g.neighbors(0, KindFilter::None).unwrap().is_empty());
    }

    #[test]
    fn shared_net_count() {
        let r = PrimitiveKind::Component(ComponentKind::Resistor);
        // two wires far apart, a component touching both and one touching one
        let nodes = [
            Primitive::wire(Point::new(0., 0.), Point::new(200., 0.), 1.0, 1.0),
            Primitive::wire(Point::new(0., 300.), Point::new(200., 300.), 1.0, 1.0),
            Primitive::new(r, BBox::new(90., 60., 110., 240.), 1.0),
            Primitive::new(r, BBox::new(150., 220., 190., 290.), 1.0),
        ];
        let g = build_graph(&nodes, &GraphConfig::default());
        assert_eq!(g.nets(), vec![vec![0], vec![1]]);
        assert_eq!(g.shared_nets(2, 2).unwrap(), 2);
        assert_eq!(g.shared_nets(2, 3).unwrap(), 1);
    }

    fn arb_prims() -> impl Strategy<Value = Vec<Primitive>> {
        prop::collection::vec(
            (0.0..600.0f64, 0.0..400.0f64, 1.0..80.0f64, 1.0..80.0f64, 0..3usize),
            0..12,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(x, y, w, h, k)| {
                    let kind = [PrimitiveKind::Wire, PrimitiveKind::Junction, PrimitiveKind::Body][k];
                    if kind == PrimitiveKind::Wire {
                        Primitive::wire(Point::new(x, y), Point::new(x + w, y + h), 1.0, 1.0)
                    } else {
                        Primitive::new(kind, BBox::new(x, y, x + w, y + h), 1.0)
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn edges_match_gap_rule(prims in arb_prims()) {
            let cfg = GraphConfig::default();
            let g = build_graph(&prims, &cfg);
            for u in 0..prims.len() {
                prop_assert!(!g.neighbors(u, KindFilter::Any).unwrap().contains(&u));
                for v in 0..prims.len() {
                    if u == v { continue; }
                    let expect = bbox_gap(&prims[u].bbox, &prims[v].bbox) < cfg.proximity_radius;
                    prop_assert_eq!(g.neighbors(u, KindFilter::Any).unwrap().contains(&v), expect);
                }
            }
        }

        #[test]
        fn unrestricted_connectivity_is_an_equivalence(prims in arb_prims()) {
            let g = build_graph(&prims, &GraphConfig::default());
            let n = prims.len();
            for a in 0..n {
                prop_assert!(g.connected(a, a, KindFilter::Any).unwrap());
                for b in 0..n {
                    let ab = g.connected(a, b, KindFilter::Any).unwrap();
                    prop_assert_eq!(ab, g.connected(b, a, KindFilter::Any).unwrap());
                    for c in 0..n {
                        if ab && g.connected(b, c, KindFilter::Any).unwrap() {
                            prop_assert!(g.connected(a, c, KindFilter::Any).unwrap());
                        }
                    }
                }
            }
        }
    }
}
