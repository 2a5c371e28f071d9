//! The FBD-10 and Circuit-10 scenario libraries.
//!
//! Each scenario pairs an instructor key with the drawing layout the renderer
//! uses. Circuit layouts keep distinct nets at least 80 px apart and give every
//! symbol a 90 px footprint (body plus leads), so that a proximity graph can
//! tell nets apart and a removed wire leaves a gap no proximity edge bridges.

use crate::geometry::{raster_direction, BBox, Point};
use crate::types::{ComponentKind, Domain, KeyComponent, RequiredForce, ScenarioKey};

pub const CANVAS_CENTER: Point = Point::new(320.0, 240.0);

/// Body rectangle size for FBD scenarios.
pub const BODY_WIDTH: f64 = 80.0;
pub const BODY_HEIGHT: f64 = 50.0;
/// Distance between the body outline and a force arrow's tail.
pub const ARROW_TAIL_GAP: f64 = 10.0;

/// Symbol footprint along its axis, leads included, is `±SYMBOL_HALF_SPAN`.
pub const SYMBOL_HALF_SPAN: f64 = 45.0;
/// Gap between a symbol terminal and the wire that serves it.
pub const LEAD_GAP: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub key: ScenarioKey,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Fbd(FbdLayout),
    Circuit(CircuitLayout),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbdLayout {
    pub body: BBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPlacement {
    pub id: String,
    pub kind: ComponentKind,
    pub center: Point,
    /// Orientation of the symbol axis, from terminal `a` to terminal `b`.
    pub axis: f64,
    /// Net ids of terminals `a` and `b`.
    pub nets: [usize; 2],
}

impl SymbolPlacement {
    pub fn terminals(&self) -> [Point; 2] {
        [
            self.center.step(self.axis, -SYMBOL_HALF_SPAN),
            self.center.step(self.axis, SYMBOL_HALF_SPAN),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireSeg {
    pub id: String,
    pub net: usize,
    pub a: Point,
    pub b: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundPlacement {
    /// Point on the wire the ground symbol hangs from.
    pub attach: Point,
    pub net: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLayout {
    pub symbols: Vec<SymbolPlacement>,
    pub wires: Vec<WireSeg>,
    /// Junction dots at connected T and cross points.
    pub dots: Vec<Point>,
    pub ground: Option<GroundPlacement>,
    /// Wire crossing whose semantics the key pins down.
    pub crossing: Option<Point>,
}

pub fn list_scenarios(domain: Domain) -> Vec<Scenario> {
    match domain {
        Domain::Fbd => fbd_scenarios(),
        Domain::Circuit => circuit_scenarios(),
    }
}

pub fn list_keys(domain: Domain) -> Vec<ScenarioKey> {
    list_scenarios(domain).into_iter().map(|s| s.key).collect()
}

pub fn find_scenario(id: &str) -> Option<Scenario> {
    [Domain::Fbd, Domain::Circuit]
        .into_iter()
        .flat_map(list_scenarios)
        .find(|s| s.key.id == id)
}

pub fn body_rect() -> BBox {
    BBox::new(
        CANVAS_CENTER.x - BODY_WIDTH / 2.0,
        CANVAS_CENTER.y - BODY_HEIGHT / 2.0,
        CANVAS_CENTER.x + BODY_WIDTH / 2.0,
        CANVAS_CENTER.y + BODY_HEIGHT / 2.0,
    )
}

/// Point where a ray from the body center along `orientation` leaves the
/// body, pushed out by `gap` pixels.
pub fn boundary_anchor(body: &BBox, orientation: f64, gap: f64) -> Point {
    let c = body.center();
    let (dx, dy) = raster_direction(orientation);
    let hx = body.width() / 2.0;
    let hy = body.height() / 2.0;
    let tx = if dx.abs() > 1e-12 { hx / dx.abs() } else { f64::INFINITY };
    let ty = if dy.abs() > 1e-12 { hy / dy.abs() } else { f64::INFINITY };
    let t = tx.min(ty) + gap;
    c.offset(dx * t, dy * t)
}

fn fbd(id: &str, is_static: bool, forces: &[(&str, f64, f64)]) -> Scenario {
    let body = body_rect();
    let required_forces = forces
        .iter()
        .map(|&(name, direction, magnitude)| RequiredForce {
            name: name.to_string(),
            direction,
            anchor: boundary_anchor(&body, direction, ARROW_TAIL_GAP),
            magnitude,
        })
        .collect();
    Scenario {
        key: ScenarioKey {
            id: id.to_string(),
            domain: Domain::Fbd,
            required_forces,
            is_static,
            components: vec![],
            connections: vec![],
            requires_ground: false,
            crossing_wires_connected: None,
        },
        layout: Layout::Fbd(FbdLayout { body }),
    }
}

fn fbd_scenarios() -> Vec<Scenario> {
    // Incline at 30°: normal ⟂ surface, static friction up the slope.
    let w = 120.0_f64;
    let incline_normal = w * 30f64.to_radians().cos();
    let incline_friction = w * 30f64.to_radians().sin();
    vec![
        fbd(
            "inclined_plane",
            true,
            &[
                ("gravity", 270.0, w),
                ("normal", 120.0, incline_normal),
                ("friction", 30.0, incline_friction),
            ],
        ),
        fbd("hanging_mass", true, &[("tension", 90.0, 100.0), ("gravity", 270.0, 100.0)]),
        fbd(
            "pushing_block",
            true,
            &[
                ("applied", 0.0, 80.0),
                ("friction", 180.0, 80.0),
                ("normal", 90.0, 100.0),
                ("gravity", 270.0, 100.0),
            ],
        ),
        fbd(
            "car_on_road",
            true,
            &[
                ("drive", 0.0, 70.0),
                ("drag", 180.0, 70.0),
                ("normal", 90.0, 100.0),
                ("gravity", 270.0, 100.0),
            ],
        ),
        fbd("pendulum", false, &[("tension", 110.0, 90.0), ("gravity", 270.0, 100.0)]),
        fbd("block_on_table", true, &[("normal", 90.0, 100.0), ("gravity", 270.0, 100.0)]),
        fbd(
            "sliding_block",
            false,
            &[("friction", 180.0, 60.0), ("normal", 90.0, 100.0), ("gravity", 270.0, 100.0)],
        ),
        fbd("elevator", false, &[("tension", 90.0, 120.0), ("gravity", 270.0, 100.0)]),
        fbd("projectile", false, &[("gravity", 270.0, 100.0)]),
        fbd(
            "spring_mass",
            false,
            &[("spring", 180.0, 80.0), ("normal", 90.0, 100.0), ("gravity", 270.0, 100.0)],
        ),
    ]
}

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn sym(id: &str, kind: ComponentKind, center: Point, axis: f64, nets: [usize; 2]) -> SymbolPlacement {
    SymbolPlacement {
        id: id.to_string(),
        kind,
        center,
        axis,
        nets,
    }
}

struct CircuitBuilder {
    id: &'static str,
    symbols: Vec<SymbolPlacement>,
    wires: Vec<WireSeg>,
    dots: Vec<Point>,
    ground: Option<GroundPlacement>,
    crossing: Option<(Point, bool)>,
}

impl CircuitBuilder {
    fn new(id: &'static str) -> Self {
        CircuitBuilder {
            id,
            symbols: vec![],
            wires: vec![],
            dots: vec![],
            ground: None,
            crossing: None,
        }
    }

    fn symbol(mut self, s: SymbolPlacement) -> Self {
        self.symbols.push(s);
        self
    }

    /// Adds a net drawn as a chain of straight segments through `points`.
    fn net(mut self, net: usize, points: &[Point]) -> Self {
        for pair in points.windows(2) {
            let k = self.wires.iter().filter(|w| w.net == net).count();
            self.wires.push(WireSeg {
                id: format!("n{net}.w{k}"),
                net,
                a: pair[0],
                b: pair[1],
            });
        }
        self
    }

    fn dot(mut self, at: Point) -> Self {
        self.dots.push(at);
        self
    }

    fn ground(mut self, attach: Point, net: usize) -> Self {
        self.ground = Some(GroundPlacement { attach, net });
        self
    }

    fn crossing(mut self, at: Point, connected: bool) -> Self {
        self.crossing = Some((at, connected));
        self
    }

    fn build(self) -> Scenario {
        let components = self
            .symbols
            .iter()
            .map(|s| KeyComponent {
                id: s.id.clone(),
                kind: s.kind,
                polarity: is_polar(s.kind).then_some(s.axis),
                position: Some(s.center),
            })
            .collect();
        let mut connections = Vec::new();
        for (i, a) in self.symbols.iter().enumerate() {
            for b in &self.symbols[i + 1..] {
                for na in dedup_nets(a.nets) {
                    if b.nets.contains(&na) {
                        connections.push((a.id.clone(), b.id.clone()));
                    }
                }
            }
        }
        Scenario {
            key: ScenarioKey {
                id: self.id.to_string(),
                domain: Domain::Circuit,
                required_forces: vec![],
                is_static: false,
                components,
                connections,
                requires_ground: self.ground.is_some(),
                crossing_wires_connected: self.crossing.map(|(_, c)| c),
            },
            layout: Layout::Circuit(CircuitLayout {
                symbols: self.symbols,
                wires: self.wires,
                dots: self.dots,
                ground: self.ground,
                crossing: self.crossing.map(|(p, _)| p),
            }),
        }
    }
}

fn dedup_nets(nets: [usize; 2]) -> Vec<usize> {
    if nets[0] == nets[1] {
        vec![nets[0]]
    } else {
        nets.to_vec()
    }
}

/// Components whose drawing direction carries meaning.
pub fn is_polar(kind: ComponentKind) -> bool {
    matches!(
        kind,
        ComponentKind::Diode | ComponentKind::Led | ComponentKind::CurrentSource
    )
}

use ComponentKind::*;

/// Three-element loop: source on the left edge, `top` on the top edge, `right`
/// on the right edge. Current circulates clockwise.
fn three_loop(
    id: &'static str,
    source: (&str, ComponentKind),
    top: (&str, ComponentKind),
    right: (&str, ComponentKind),
) -> Scenario {
    CircuitBuilder::new(id)
        .symbol(sym(top.0, top.1, p(320., 100.), 0.0, [1, 2]))
        .symbol(sym(right.0, right.1, p(540., 240.), 270.0, [2, 3]))
        .symbol(sym(source.0, source.1, p(100., 240.), 90.0, [3, 1]))
        .net(1, &[p(100., 189.), p(100., 100.), p(269., 100.)])
        .net(2, &[p(371., 100.), p(540., 100.), p(540., 189.)])
        .net(3, &[p(540., 291.), p(540., 380.), p(100., 380.), p(100., 291.)])
        .build()
}

/// Two-element loop: source on the left edge, load on the right edge.
fn two_loop(id: &'static str, source: (&str, ComponentKind), load: (&str, ComponentKind)) -> CircuitBuilder {
    CircuitBuilder::new(id)
        .symbol(sym(load.0, load.1, p(540., 240.), 270.0, [1, 2]))
        .symbol(sym(source.0, source.1, p(100., 240.), 90.0, [2, 1]))
        .net(1, &[p(100., 189.), p(100., 100.), p(540., 100.), p(540., 189.)])
        .net(2, &[p(540., 291.), p(540., 380.), p(100., 380.), p(100., 291.)])
}

fn circuit_scenarios() -> Vec<Scenario> {
    vec![
        three_loop("series", ("B1", Battery), ("R1", Resistor), ("R2", Resistor)),
        // Source and two branches share both rails. R1's branch wire runs past
        // the top rail to a test point, crossing it at a dotted 4-way junction.
        CircuitBuilder::new("parallel")
            .symbol(sym("R1", Resistor, p(320., 240.), 270.0, [1, 2]))
            .symbol(sym("R2", Resistor, p(540., 240.), 270.0, [1, 2]))
            .symbol(sym("B1", Battery, p(100., 240.), 90.0, [2, 1]))
            .net(1, &[p(100., 189.), p(100., 100.)])
            .net(1, &[p(100., 100.), p(540., 100.), p(540., 189.)])
            .net(1, &[p(320., 40.), p(320., 189.)])
            .net(2, &[p(100., 291.), p(100., 380.), p(540., 380.), p(540., 291.)])
            .net(2, &[p(320., 291.), p(320., 380.)])
            .dot(p(320., 100.))
            .dot(p(320., 380.))
            .crossing(p(320., 100.), true)
            .build(),
        CircuitBuilder::new("series_parallel")
            .symbol(sym("R1", Resistor, p(250., 100.), 0.0, [1, 2]))
            .symbol(sym("R2", Resistor, p(420., 240.), 270.0, [2, 3]))
            .symbol(sym("R3", Resistor, p(540., 240.), 270.0, [2, 3]))
            .symbol(sym("B1", Battery, p(100., 240.), 90.0, [3, 1]))
            .net(1, &[p(100., 189.), p(100., 100.), p(199., 100.)])
            .net(2, &[p(301., 100.), p(540., 100.), p(540., 189.)])
            .net(2, &[p(420., 100.), p(420., 189.)])
            .net(3, &[p(100., 291.), p(100., 380.), p(540., 380.), p(540., 291.)])
            .net(3, &[p(420., 291.), p(420., 380.)])
            .dot(p(420., 100.))
            .dot(p(420., 380.))
            .build(),
        three_loop("diode_polarity", ("B1", Battery), ("D1", Diode), ("R1", Resistor)),
        two_loop("battery_resistor", ("B1", Battery), ("R1", Resistor)).build(),
        three_loop("led_resistor", ("B1", Battery), ("R1", Resistor), ("L1", Led)),
        // R1 on top, R2 on the right; the output tap leaves the R1-R2 net and
        // crosses the return wire without connecting to it.
        CircuitBuilder::new("voltage_divider")
            .symbol(sym("R1", Resistor, p(300., 60.), 0.0, [1, 2]))
            .symbol(sym("R2", Resistor, p(540., 240.), 270.0, [2, 3]))
            .symbol(sym("B1", Battery, p(100., 240.), 90.0, [3, 1]))
            .net(1, &[p(100., 189.), p(100., 60.), p(249., 60.)])
            .net(2, &[p(351., 60.), p(540., 60.), p(540., 189.)])
            .net(2, &[p(450., 60.), p(450., 460.)])
            .net(3, &[p(540., 291.), p(540., 420.), p(100., 420.), p(100., 291.)])
            .dot(p(450., 60.))
            .crossing(p(450., 420.), false)
            .build(),
        two_loop("current_source", ("I1", CurrentSource), ("R1", Resistor)).build(),
        three_loop("capacitor_charge", ("B1", Battery), ("R1", Resistor), ("C1", Capacitor)),
        two_loop("grounded_reference", ("B1", Battery), ("R1", Resistor))
            .ground(p(320., 380.), 2)
            .build(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::bbox_gap;

    #[test]
    fn ten_scenarios_per_domain() {
        for d in [Domain::Fbd, Domain::Circuit] {
            let keys = list_keys(d);
            assert_eq!(keys.len(), 10);
            for k in &keys {
                k.validate().unwrap();
                assert_eq!(k.domain, d);
            }
        }
        let ids: Vec<String> = list_keys(Domain::Fbd).into_iter().map(|k| k.id).collect();
        for name in [
            "inclined_plane",
            "hanging_mass",
            "pushing_block",
            "car_on_road",
            "pendulum",
            "block_on_table",
            "sliding_block",
            "elevator",
            "projectile",
            "spring_mass",
        ] {
            assert!(ids.iter().any(|i| i == name), "missing {name}");
        }
    }

    #[test]
    fn exactly_one_grounded_circuit() {
        let grounded: Vec<_> = list_keys(Domain::Circuit)
            .into_iter()
            .filter(|k| k.requires_ground)
            .collect();
        assert_eq!(grounded.len(), 1);
        assert_eq!(grounded[0].id, "grounded_reference");
    }

    #[test]
    fn every_force_direction_is_finite() {
        for k in list_keys(Domain::Fbd) {
            assert!(k.required_forces.iter().all(|f| f.direction.is_finite()));
        }
    }

    #[test]
    fn static_scenarios_balance() {
        for k in list_keys(Domain::Fbd).into_iter().filter(|k| k.is_static) {
            let (mut sx, mut sy) = (0.0, 0.0);
            for f in &k.required_forces {
                let (dx, dy) = raster_direction(f.direction);
                sx += dx * f.magnitude;
                sy += dy * f.magnitude;
            }
            assert!(sx.hypot(sy) < 1e-6, "{} does not balance", k.id);
        }
    }

    #[test]
    fn wires_end_one_lead_gap_from_terminals() {
        for s in circuit_scenarios() {
            let Layout::Circuit(l) = &s.layout else { unreachable!() };
            for sy in &l.symbols {
                for (t, net) in sy.terminals().iter().zip(sy.nets) {
                    let nearest = l
                        .wires
                        .iter()
                        .filter(|w| w.net == net)
                        .flat_map(|w| [w.a, w.b])
                        .map(|e| e.distance(t))
                        .fold(f64::INFINITY, f64::min);
                    assert!(
                        (nearest - LEAD_GAP).abs() < 1e-9,
                        "{}:{} terminal is {nearest} px from its net",
                        s.key.id,
                        sy.id
                    );
                }
            }
        }
    }

    #[test]
    fn distinct_nets_keep_clear_of_each_other() {
        // Crossing nets are deliberately allowed to touch at the crossing.
        for s in circuit_scenarios() {
            let Layout::Circuit(l) = &s.layout else { unreachable!() };
            for (i, a) in l.wires.iter().enumerate() {
                for b in &l.wires[i + 1..] {
                    if a.net == b.net {
                        continue;
                    }
                    let ba = BBox::new(a.a.x, a.a.y, a.b.x, a.b.y).expand(1.0);
                    let bb = BBox::new(b.a.x, b.a.y, b.b.x, b.b.y).expand(1.0);
                    let g = bbox_gap(&ba, &bb);
                    let crossing_pair = l.crossing.is_some_and(|c| ba.contains(&c) && bb.contains(&c));
                    assert!(
                        crossing_pair || g >= 80.0,
                        "{}: {} and {} only {g} px apart",
                        s.key.id,
                        a.id,
                        b.id
                    );
                }
            }
        }
    }
}
