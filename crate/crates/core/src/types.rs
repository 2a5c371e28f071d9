//! Domain vocabulary: diagram primitives, error taxonomy and scenario keys.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{raster_direction, BBox, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Fbd,
    Circuit,
}

impl Domain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::Fbd => "fbd",
            Domain::Circuit => "circuit",
        }
    }

    pub fn parse(s: &str) -> Option<Domain> {
        match s.to_ascii_lowercase().as_str() {
            "fbd" | "fbd-10" | "fbd10" => Some(Domain::Fbd),
            "circuit" | "circuit-10" | "circuit10" | "circ" => Some(Domain::Circuit),
            _ => None,
        }
    }

    pub fn error_types(&self) -> &'static [ErrorType] {
        match self {
            Domain::Fbd => &ErrorType::FBD,
            Domain::Circuit => &ErrorType::CIRCUIT,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Resistor,
    Battery,
    Diode,
    Led,
    Capacitor,
    CurrentSource,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 6] = [
        ComponentKind::Resistor,
        ComponentKind::Battery,
        ComponentKind::Diode,
        ComponentKind::Led,
        ComponentKind::Capacitor,
        ComponentKind::CurrentSource,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ComponentKind::Resistor => "resistor",
            ComponentKind::Battery => "battery",
            ComponentKind::Diode => "diode",
            ComponentKind::Led => "LED",
            ComponentKind::Capacitor => "capacitor",
            ComponentKind::CurrentSource => "current source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    ForceArrow,
    Wire,
    Component(ComponentKind),
    Junction,
    GroundSymbol,
    Body,
    Label,
}

impl PrimitiveKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PrimitiveKind::ForceArrow => "force_arrow",
            PrimitiveKind::Wire => "wire",
            PrimitiveKind::Component(_) => "component",
            PrimitiveKind::Junction => "junction",
            PrimitiveKind::GroundSymbol => "ground_symbol",
            PrimitiveKind::Body => "body",
            PrimitiveKind::Label => "label",
        }
    }

    pub fn is_component(&self) -> bool {
        matches!(self, PrimitiveKind::Component(_))
    }

    fn from_tag(tag: &str, component: Option<ComponentKind>) -> Option<PrimitiveKind> {
        Some(match tag {
            "force_arrow" => PrimitiveKind::ForceArrow,
            "wire" => PrimitiveKind::Wire,
            "component" => PrimitiveKind::Component(component?),
            "junction" => PrimitiveKind::Junction,
            "ground_symbol" => PrimitiveKind::GroundSymbol,
            "body" => PrimitiveKind::Body,
            "label" => PrimitiveKind::Label,
            _ => return None,
        })
    }
}

/// Kind filter used by graph queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFilter {
    Any,
    None,
    Wires,
    WiresAndJunctions,
    Components,
    Arrows,
    Exactly(PrimitiveKind),
}

impl KindFilter {
    pub fn admits(&self, kind: &PrimitiveKind) -> bool {
        match self {
            KindFilter::Any => true,
            KindFilter::None => false,
            KindFilter::Wires => *kind == PrimitiveKind::Wire,
            KindFilter::WiresAndJunctions => {
                matches!(kind, PrimitiveKind::Wire | PrimitiveKind::Junction)
            }
            KindFilter::Components => kind.is_component(),
            KindFilter::Arrows => *kind == PrimitiveKind::ForceArrow,
            KindFilter::Exactly(k) => k == kind,
        }
    }
}

/// Full lateral width of a rendered force arrow (head plus stroke), used to
/// recover the arrow axis from its bounding box.
pub const ARROW_LATERAL_WIDTH: f64 = 10.0;

/// One detected or ground-truth diagram element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrimitiveRecord", into = "PrimitiveRecord")]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub bbox: BBox,
    pub confidence: f64,
    /// Degrees in `[0, 360)`, diagram convention.
    pub orientation: Option<f64>,
    /// Wire endpoints; present iff `kind == Wire`.
    pub endpoints: Option<(Point, Point)>,
    pub label: Option<String>,
}

impl Primitive {
    pub fn new(kind: PrimitiveKind, bbox: BBox, confidence: f64) -> Self {
        Primitive {
            kind,
            bbox,
            confidence: confidence.clamp(0.0, 1.0),
            orientation: None,
            endpoints: None,
            label: None,
        }
    }

    /// A wire segment; its box is the endpoints' hull padded by `half_width`.
    pub fn wire(a: Point, b: Point, half_width: f64, confidence: f64) -> Self {
        let bbox = BBox::new(a.x, a.y, b.x, b.y).expand(half_width);
        let mut p = Primitive::new(PrimitiveKind::Wire, bbox, confidence);
        p.endpoints = Some((a, b));
        p.orientation = Some(crate::geometry::orientation_of(b.x - a.x, b.y - a.y));
        p
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_orientation(mut self, deg: f64) -> Self {
        self.orientation = Some(crate::geometry::normalize_deg(deg));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::invalid(format!(
                "primitive confidence {} outside [0,1]",
                self.confidence
            )));
        }
        if !self.bbox.is_valid() {
            return Err(Error::invalid("primitive bbox is not a valid box"));
        }
        let is_wire = self.kind == PrimitiveKind::Wire;
        match (&self.endpoints, is_wire) {
            (Some((a, b)), true) => {
                let padded = self.bbox.expand(1e-6);
                if !padded.contains(a) || !padded.contains(b) {
                    return Err(Error::invalid("wire bbox does not enclose its endpoints"));
                }
            }
            (None, true) => return Err(Error::invalid("wire primitive without endpoints")),
            (Some(_), false) => {
                return Err(Error::invalid("only wires carry endpoints"));
            }
            (None, false) => {}
        }
        Ok(())
    }

    /// Tail and tip of a force arrow, recovered from its box and orientation.
    ///
    /// The box of an arrow of length `L` and lateral width `W` at angle θ has
    /// width `L|cos θ| + W|sin θ|` and height `L|sin θ| + W|cos θ|`; `L` is the
    /// least-squares solution of that pair.
    pub fn arrow_axis(&self) -> Option<(Point, Point)> {
        let theta = self.orientation?;
        let (dx, dy) = raster_direction(theta);
        let (c, s) = (dx.abs(), dy.abs());
        let w = self.bbox.width();
        let h = self.bbox.height();
        let len = (c * (w - ARROW_LATERAL_WIDTH * s) + s * (h - ARROW_LATERAL_WIDTH * c)).max(0.0);
        let center = self.bbox.center();
        let half = 0.5 * len;
        Some((
            center.offset(-dx * half, -dy * half),
            center.offset(dx * half, dy * half),
        ))
    }

    pub fn arrow_length(&self) -> Option<f64> {
        self.arrow_axis().map(|(t, h)| t.distance(&h))
    }
}

#[derive(Serialize, Deserialize)]
struct PrimitiveRecord {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    component_kind: Option<ComponentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    bbox: BBox,
    #[serde(default = "one")]
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orientation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endpoints: Option<[Point; 2]>,
}

fn one() -> f64 {
    1.0
}

impl From<Primitive> for PrimitiveRecord {
    fn from(p: Primitive) -> Self {
        let component_kind = match p.kind {
            PrimitiveKind::Component(k) => Some(k),
            _ => None,
        };
        PrimitiveRecord {
            kind: p.kind.tag().to_string(),
            component_kind,
            label: p.label,
            bbox: p.bbox,
            confidence: p.confidence,
            orientation: p.orientation,
            endpoints: p.endpoints.map(|(a, b)| [a, b]),
        }
    }
}

impl TryFrom<PrimitiveRecord> for Primitive {
    type Error = String;

    fn try_from(r: PrimitiveRecord) -> std::result::Result<Self, Self::Error> {
        let kind = PrimitiveKind::from_tag(&r.kind, r.component_kind)
            .ok_or_else(|| format!("unknown primitive kind '{}'", r.kind))?;
        let p = Primitive {
            kind,
            bbox: r.bbox,
            confidence: r.confidence,
            orientation: r.orientation,
            endpoints: r.endpoints.map(|[a, b]| (a, b)),
            label: r.label,
        };
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    MissingForce,
    WrongDirection,
    AnchorError,
    ExtraForce,
    WrongPolarity,
    OpenCircuit,
    IllegalJunction,
    MissingGround,
    MissingComponent,
}

impl ErrorType {
    pub const FBD: [ErrorType; 4] = [
        ErrorType::MissingForce,
        ErrorType::WrongDirection,
        ErrorType::AnchorError,
        ErrorType::ExtraForce,
    ];
    pub const CIRCUIT: [ErrorType; 5] = [
        ErrorType::WrongPolarity,
        ErrorType::OpenCircuit,
        ErrorType::IllegalJunction,
        ErrorType::MissingGround,
        ErrorType::MissingComponent,
    ];

    pub fn all() -> impl Iterator<Item = ErrorType> {
        Self::FBD.into_iter().chain(Self::CIRCUIT)
    }

    pub fn domain(&self) -> Domain {
        match self {
            ErrorType::MissingForce
            | ErrorType::WrongDirection
            | ErrorType::AnchorError
            | ErrorType::ExtraForce => Domain::Fbd,
            _ => Domain::Circuit,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorType::MissingForce => "missing_force",
            ErrorType::WrongDirection => "wrong_direction",
            ErrorType::AnchorError => "anchor_error",
            ErrorType::ExtraForce => "extra_force",
            ErrorType::WrongPolarity => "wrong_polarity",
            ErrorType::OpenCircuit => "open_circuit",
            ErrorType::IllegalJunction => "illegal_junction",
            ErrorType::MissingGround => "missing_ground",
            ErrorType::MissingComponent => "missing_component",
        }
    }

    /// Human-readable name, as used in report tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            ErrorType::MissingForce => "missing force",
            ErrorType::WrongDirection => "wrong direction",
            ErrorType::AnchorError => "anchor error",
            ErrorType::ExtraForce => "extra force",
            ErrorType::WrongPolarity => "wrong polarity",
            ErrorType::OpenCircuit => "open circuit",
            ErrorType::IllegalJunction => "illegal junction",
            ErrorType::MissingGround => "missing ground",
            ErrorType::MissingComponent => "missing component",
        }
    }

    pub fn parse(s: &str) -> Option<ErrorType> {
        ErrorType::all().find(|e| e.as_str() == s)
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequiredForce {
    pub name: String,
    /// Expected orientation, degrees.
    pub direction: f64,
    /// Expected tail position on the canvas.
    pub anchor: Point,
    /// Arbitrary units; rendered as the arrow length in pixels.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyComponent {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<f64>,
    /// Reference position used to pair detections with key components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point>,
}

/// Instructor answer key for one diagram task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioKey {
    pub id: String,
    pub domain: Domain,
    #[serde(default)]
    pub required_forces: Vec<RequiredForce>,
    #[serde(default)]
    pub is_static: bool,
    #[serde(default)]
    pub components: Vec<KeyComponent>,
    /// Component pairs that must share a net. A pair listed `k` times must
    /// share `k` distinct nets.
    #[serde(default)]
    pub connections: Vec<(String, String)>,
    #[serde(default)]
    pub requires_ground: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_wires_connected: Option<bool>,
}

impl ScenarioKey {
    pub fn validate(&self) -> Result<()> {
        match self.domain {
            Domain::Fbd => {
                if self.required_forces.is_empty() {
                    return Err(Error::invalid(format!(
                        "FBD key '{}' has no required forces",
                        self.id
                    )));
                }
                if let Some(f) = self
                    .required_forces
                    .iter()
                    .find(|f| !f.direction.is_finite() || !f.anchor.is_finite())
                {
                    return Err(Error::invalid(format!(
                        "force '{}' of key '{}' has a non-finite direction or anchor",
                        f.name, self.id
                    )));
                }
            }
            Domain::Circuit => {
                if self.components.is_empty() {
                    return Err(Error::invalid(format!(
                        "circuit key '{}' has no components",
                        self.id
                    )));
                }
                let ids: BTreeSet<&str> = self.components.iter().map(|c| c.id.as_str()).collect();
                for (a, b) in &self.connections {
                    for end in [a, b] {
                        if !ids.contains(end.as_str()) {
                            return Err(Error::invalid(format!(
                                "connection endpoint '{}' is not a component of key '{}'",
                                end, self.id
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn force(&self, name: &str) -> Option<&RequiredForce> {
        self.required_forces.iter().find(|f| f.name == name)
    }

    pub fn component(&self, id: &str) -> Option<&KeyComponent> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn polar_components(&self) -> impl Iterator<Item = &KeyComponent> {
        self.components.iter().filter(|c| c.polarity.is_some())
    }

    /// Distinct connection pairs with their required multiplicity, in key order.
    pub fn connection_requirements(&self) -> Vec<((String, String), usize)> {
        let mut out: Vec<((String, String), usize)> = Vec::new();
        for (a, b) in &self.connections {
            let pair = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            match out.iter_mut().find(|(p, _)| *p == pair) {
                Some((_, n)) => *n += 1,
                None => out.push((pair, 1)),
            }
        }
        out
    }
}

/// One error deliberately planted in a generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedError {
    #[serde(rename = "type")]
    pub error_type: ErrorType,
    pub target: String,
    #[serde(default)]
    pub detail: String,
}

impl InjectedError {
    pub fn new(error_type: ErrorType, target: impl Into<String>, detail: impl Into<String>) -> Self {
        InjectedError {
            error_type,
            target: target.into(),
            detail: detail.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_error_type_has_one_domain() {
        for e in ErrorType::FBD {
            assert_eq!(e.domain(), Domain::Fbd);
        }
        for e in ErrorType::CIRCUIT {
            assert_eq!(e.domain(), Domain::Circuit);
        }
        assert_eq!(ErrorType::all().count(), 9);
    }

    #[test]
    fn primitive_json_matches_annotation_schema() {
        let p = Primitive::new(
            PrimitiveKind::Component(ComponentKind::Diode),
            BBox::new(1., 2., 3., 4.),
            0.5,
        )
        .with_label("D1")
        .with_orientation(90.0);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["kind"], "component");
        assert_eq!(v["component_kind"], "diode");
        assert_eq!(v["bbox"], serde_json::json!([1.0, 2.0, 3.0, 4.0]));
        let back: Primitive = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn wire_must_carry_endpoints() {
        let bad = r#"{"kind":"wire","bbox":[0,0,10,2]}"#;
        assert!(serde_json::from_str::<Primitive>(bad).is_err());
        let arrow_with_ends =
            r#"{"kind":"force_arrow","bbox":[0,0,10,2],"endpoints":[{"x":0,"y":0},{"x":1,"y":1}]}"#;
        assert!(serde_json::from_str::<Primitive>(arrow_with_ends).is_err());
    }

    #[test]
    fn arrow_axis_recovers_horizontal_arrow() {
        // 100 px arrow pointing right, tail at (50, 100)
        let bbox = BBox::new(50.0, 94.0, 150.0, 106.0);
        let p = Primitive::new(PrimitiveKind::ForceArrow, bbox, 1.0).with_orientation(0.0);
        let (tail, tip) = p.arrow_axis().unwrap();
        assert!(tail.distance(&Point::new(50.0, 100.0)) < 1e-9);
        assert!(tip.distance(&Point::new(150.0, 100.0)) < 1e-9);
    }

    #[test]
    fn connection_multiplicity_counts_repeats() {
        let key = ScenarioKey {
            id: "k".into(),
            domain: Domain::Circuit,
            required_forces: vec![],
            is_static: false,
            components: vec![],
            connections: vec![
                ("B1".into(), "R1".into()),
                ("R1".into(), "B1".into()),
                ("R1".into(), "R2".into()),
            ],
            requires_ground: false,
            crossing_wires_connected: None,
        };
        let req = key.connection_requirements();
        assert_eq!(req[0], (("B1".to_string(), "R1".to_string()), 2));
        assert_eq!(req[1].1, 1);
    }
}
