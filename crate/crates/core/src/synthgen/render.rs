//! Sample rendering: scenario geometry, error injection and augmentation.

use image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{
    normalize_deg, raster_direction, segment_distance, BBox, Point,
};
use crate::types::{ComponentKind, ErrorType, InjectedError, Primitive, PrimitiveKind};

use super::raster::{InkCanvas, Shape};
use super::scenarios::{
    boundary_anchor, CircuitLayout, FbdLayout, Layout, Scenario, SymbolPlacement,
    ARROW_TAIL_GAP, CANVAS_CENTER,
};
use super::{NoiseParams, RenderConfig};

pub const ARROW_HEAD_LEN: f64 = 12.0;
pub const ARROW_HEAD_HALF_WIDTH: f64 = 5.0;
pub const JUNCTION_RADIUS: f64 = 4.0;

/// Rendered sample plus the exact per-element ink, for annotation checks.
#[derive(Debug, Clone)]
pub struct RenderedSample {
    pub image: GrayImage,
    pub primitives: Vec<Primitive>,
    /// Injected errors with their drawn magnitudes filled into `detail`.
    pub errors: Vec<InjectedError>,
    /// Pixels inked by each primitive, parallel to `primitives`.
    pub element_pixels: Vec<Vec<(u32, u32)>>,
}

/// One drawable element before augmentation.
#[derive(Debug, Clone)]
struct Element {
    kind: PrimitiveKind,
    label: String,
    shapes: Vec<Shape>,
    orientation: Option<f64>,
    endpoints: Option<(Point, Point)>,
}

pub fn arrow_shapes(tail: Point, direction: f64, length: f64, stroke: f64) -> Vec<Shape> {
    let tip = tail.step(direction, length);
    let base = tail.step(direction, length - ARROW_HEAD_LEN);
    // slight overlap so shaft and head form one connected stroke
    let shaft_end = tail.step(direction, length - ARROW_HEAD_LEN + 1.0);
    let left = base.step(direction + 90.0, ARROW_HEAD_HALF_WIDTH);
    let right = base.step(direction - 90.0, ARROW_HEAD_HALF_WIDTH);
    vec![
        Shape::line(tail, shaft_end, stroke),
        Shape::Polygon {
            points: vec![tip, left, right],
        },
    ]
}

fn rect_outline(b: &BBox, stroke: f64) -> Shape {
    Shape::Polyline {
        points: vec![
            Point::new(b.x_min, b.y_min),
            Point::new(b.x_max, b.y_min),
            Point::new(b.x_max, b.y_max),
            Point::new(b.x_min, b.y_max),
            Point::new(b.x_min, b.y_min),
        ],
        width: stroke,
    }
}

/// Local symbol frame: `u` runs along the axis from terminal `a` (-45) to
/// terminal `b` (+45), `v` points to the left of the axis on the page.
struct Frame {
    center: Point,
    axis: f64,
}

impl Frame {
    fn at(&self, u: f64, v: f64) -> Point {
        self.center.step(self.axis, u).step(self.axis + 90.0, v)
    }

    fn line(&self, u0: f64, v0: f64, u1: f64, v1: f64, w: f64) -> Shape {
        Shape::line(self.at(u0, v0), self.at(u1, v1), w)
    }

    fn poly(&self, pts: &[(f64, f64)]) -> Shape {
        Shape::Polygon {
            points: pts.iter().map(|&(u, v)| self.at(u, v)).collect(),
        }
    }
}

pub fn symbol_shapes(kind: ComponentKind, center: Point, axis: f64, w: f64) -> Vec<Shape> {
    let f = Frame { center, axis };
    match kind {
        ComponentKind::Resistor => vec![
            f.line(-45., 0., -20., 0., w),
            Shape::Polyline {
                points: [(-20., -8.), (20., -8.), (20., 8.), (-20., 8.), (-20., -8.)]
                    .iter()
                    .map(|&(u, v)| f.at(u, v))
                    .collect(),
                width: w,
            },
            f.line(20., 0., 45., 0., w),
        ],
        // terminal a is the negative (short, thick) plate
        ComponentKind::Battery => vec![
            f.line(-45., 0., -7., 0., w),
            f.poly(&[(-7., -7.), (-3., -7.), (-3., 7.), (-7., 7.)]),
            f.line(3., -14., 3., 14., w),
            f.line(3., 0., 45., 0., w),
        ],
        ComponentKind::Capacitor => vec![
            f.line(-45., 0., -4., 0., w),
            f.line(-4., -12., -4., 12., w),
            f.line(4., -12., 4., 12., w),
            f.line(4., 0., 45., 0., w),
        ],
        ComponentKind::Diode | ComponentKind::Led => {
            let mut s = vec![
                f.line(-45., 0., -10., 0., w),
                f.poly(&[(-10., -10.), (-10., 10.), (8., 0.)]),
                f.line(9., -10., 9., 10., w),
                f.line(9., 0., 45., 0., w),
            ];
            if kind == ComponentKind::Led {
                s.push(f.line(-2., 14., 4., 22., w));
                s.push(f.line(5., 14., 11., 22., w));
            }
            s
        }
        ComponentKind::CurrentSource => {
            let mut s = vec![
                f.line(-45., 0., -15., 0., w),
                Shape::Circle {
                    center,
                    radius: 15.0,
                    width: w,
                },
                f.line(15., 0., 45., 0., w),
            ];
            s.extend(arrow_shapes_local(&f, w));
            s
        }
    }
}

fn arrow_shapes_local(f: &Frame, w: f64) -> Vec<Shape> {
    vec![
        f.line(-8., 0., 4., 0., w),
        f.poly(&[(3., -4.), (3., 4.), (9., 0.)]),
    ]
}

/// Ground symbol hanging below `attach`: a lead and three shrinking bars.
pub fn ground_shapes(attach: Point, w: f64) -> Vec<Shape> {
    let top = attach.offset(0.0, 6.0);
    let mut s = vec![Shape::line(top, top.offset(0.0, 20.0), w)];
    for (i, half) in [15.0, 10.0, 5.0].iter().enumerate() {
        let y = top.y + 20.0 + 6.0 * i as f64;
        s.push(Shape::line(
            Point::new(top.x - half, y),
            Point::new(top.x + half, y),
            w,
        ));
    }
    s
}

fn parse_detail(detail: &str, key: &str) -> Option<f64> {
    detail
        .split(';')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .and_then(|(_, v)| v.trim().parse().ok())
}

fn detail_text(detail: &str, key: &str) -> Option<String> {
    detail
        .split(';')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
}

struct ArrowSpec {
    name: String,
    tail: Point,
    direction: f64,
    length: f64,
}

impl ArrowSpec {
    fn segment(&self) -> (Point, Point) {
        (self.tail, self.tail.step(self.direction, self.length))
    }
}

/// Clearance between an arrow and the body outline or other arrows.
fn arrow_clearance(a: &ArrowSpec, body: &BBox, others: &[ArrowSpec], cfg: &RenderConfig) -> f64 {
    let (t, h) = a.segment();
    let corners = [
        Point::new(body.x_min, body.y_min),
        Point::new(body.x_max, body.y_min),
        Point::new(body.x_max, body.y_max),
        Point::new(body.x_min, body.y_max),
    ];
    let mut c = (0..4)
        .map(|i| segment_distance(&t, &h, &corners[i], &corners[(i + 1) % 4]))
        .fold(f64::INFINITY, f64::min);
    if body.contains(&t) || body.contains(&h) {
        c = 0.0;
    }
    for o in others.iter().filter(|o| o.name != a.name) {
        let (ot, oh) = o.segment();
        c = c.min(segment_distance(&t, &h, &ot, &oh));
    }
    let margin = 4.0;
    let inside = [t, h].iter().all(|p| {
        p.x >= margin
            && p.y >= margin
            && p.x <= cfg.width as f64 - margin
            && p.y <= cfg.height as f64 - margin
    });
    if inside {
        c
    } else {
        -1.0
    }
}

const EXTRA_FORCE_NAMES: [&str; 3] = ["force_of_motion", "centrifugal_force", "impetus"];

pub fn extra_force_name(scenario_index_hint: usize) -> &'static str {
    EXTRA_FORCE_NAMES[scenario_index_hint % EXTRA_FORCE_NAMES.len()]
}

fn fbd_elements(
    scenario: &Scenario,
    layout: &FbdLayout,
    errors: &mut [InjectedError],
    rng: &mut ChaCha8Rng,
    cfg: &RenderConfig,
) -> Result<Vec<Element>> {
    let key = &scenario.key;
    let mut arrows: Vec<ArrowSpec> = key
        .required_forces
        .iter()
        .map(|f| ArrowSpec {
            name: f.name.clone(),
            tail: f.anchor,
            direction: f.direction,
            length: f.magnitude,
        })
        .collect();

    for err in errors.iter_mut() {
        let idx = || {
            arrows
                .iter()
                .position(|a| a.name == err.target)
                .ok_or_else(|| Error::invalid(format!("'{}' is not a force of '{}'", err.target, key.id)))
        };
        match err.error_type {
            ErrorType::MissingForce => {
                let i = idx()?;
                arrows.remove(i);
            }
            ErrorType::WrongDirection => {
                let i = idx()?;
                let drawn: f64 = rng.random_range(90.0..=180.0);
                let magnitude = parse_detail(&err.detail, "rotated").map_or(drawn, f64::abs);
                // pick the rotation sense that keeps the arrow off the body
                let base = arrows[i].direction;
                let mut best = (f64::NEG_INFINITY, base + magnitude);
                for sign in [1.0, -1.0] {
                    let cand = ArrowSpec {
                        direction: normalize_deg(base + sign * magnitude),
                        ..ArrowSpec { name: arrows[i].name.clone(), tail: arrows[i].tail, direction: 0.0, length: arrows[i].length }
                    };
                    let c = arrow_clearance(&cand, &layout.body, &arrows, cfg);
                    if c > best.0 {
                        best = (c, cand.direction);
                    }
                }
                arrows[i].direction = best.1;
                err.detail = format!("rotated={magnitude:.1};direction={:.1}", best.1);
            }
            ErrorType::AnchorError => {
                let i = idx()?;
                let drawn: f64 = rng.random_range(60.0..=100.0);
                let dist = parse_detail(&err.detail, "displaced").unwrap_or(drawn);
                let dir = arrows[i].direction;
                let mut best: Option<(f64, Point)> = None;
                for offset in [90.0, -90.0, 0.0, 45.0, -45.0, 135.0, -135.0] {
                    let tail = arrows[i].tail.step(dir + offset, dist);
                    let cand = ArrowSpec {
                        name: arrows[i].name.clone(),
                        tail,
                        direction: dir,
                        length: arrows[i].length,
                    };
                    let c = arrow_clearance(&cand, &layout.body, &arrows, cfg);
                    if c >= 12.0 {
                        best = Some((c, tail));
                        break;
                    }
                    if best.is_none_or(|(bc, _)| c > bc) {
                        best = Some((c, tail));
                    }
                }
                let tail = best.expect("candidate offsets are non-empty").1;
                arrows[i].tail = tail;
                err.detail = format!("displaced={dist:.1}");
            }
            ErrorType::ExtraForce => {
                if key.force(&err.target).is_some() {
                    return Err(Error::invalid(format!(
                        "extra force '{}' duplicates a required force",
                        err.target
                    )));
                }
                let length: f64 = rng.random_range(60.0..=100.0);
                let start = rng.random_range(0..8usize);
                let mut chosen = None;
                for k in 0..8 {
                    let dir = 45.0 * ((start + k) % 8) as f64;
                    if key
                        .required_forces
                        .iter()
                        .any(|f| crate::geometry::angle_diff(f.direction, dir) < 40.0)
                    {
                        continue;
                    }
                    let cand = ArrowSpec {
                        name: err.target.clone(),
                        tail: boundary_anchor(&layout.body, dir, ARROW_TAIL_GAP),
                        direction: dir,
                        length,
                    };
                    if arrow_clearance(&cand, &layout.body, &arrows, cfg) >= 5.0 {
                        chosen = Some(cand);
                        break;
                    }
                }
                let cand = chosen.ok_or_else(|| {
                    Error::invalid(format!("no free direction for an extra force on '{}'", key.id))
                })?;
                err.detail = format!("direction={:.1};length={length:.1}", cand.direction);
                arrows.push(cand);
            }
            other => {
                return Err(Error::invalid(format!(
                    "{other} cannot be injected into FBD scenario '{}'",
                    key.id
                )))
            }
        }
    }

    let mut out = vec![Element {
        kind: PrimitiveKind::Body,
        label: "body".into(),
        shapes: vec![rect_outline(&layout.body, cfg.stroke_width)],
        orientation: None,
        endpoints: None,
    }];
    for a in arrows {
        out.push(Element {
            kind: PrimitiveKind::ForceArrow,
            label: a.name.clone(),
            shapes: arrow_shapes(a.tail, a.direction, a.length, cfg.stroke_width),
            orientation: Some(normalize_deg(a.direction)),
            endpoints: None,
        });
    }
    Ok(out)
}

fn circuit_elements(
    scenario: &Scenario,
    layout: &CircuitLayout,
    errors: &mut [InjectedError],
    cfg: &RenderConfig,
) -> Result<Vec<Element>> {
    let key = &scenario.key;
    let mut symbols: Vec<SymbolPlacement> = layout.symbols.clone();
    let mut wires = layout.wires.clone();
    let mut dots = layout.dots.clone();
    let mut ground = layout.ground.clone();

    for err in errors.iter_mut() {
        match err.error_type {
            ErrorType::MissingComponent => {
                let i = symbols
                    .iter()
                    .position(|s| s.id == err.target)
                    .ok_or_else(|| Error::invalid(format!("no component '{}' in '{}'", err.target, key.id)))?;
                symbols.remove(i);
            }
            ErrorType::WrongPolarity => {
                let s = symbols
                    .iter_mut()
                    .find(|s| s.id == err.target)
                    .ok_or_else(|| Error::invalid(format!("no component '{}' in '{}'", err.target, key.id)))?;
                if !super::scenarios::is_polar(s.kind) {
                    return Err(Error::invalid(format!("component '{}' has no polarity", s.id)));
                }
                s.axis = normalize_deg(s.axis + 180.0);
                s.nets.swap(0, 1);
                err.detail = "flipped=180".into();
            }
            ErrorType::MissingGround => {
                if ground.take().is_none() {
                    return Err(Error::invalid(format!("'{}' has no ground symbol", key.id)));
                }
            }
            ErrorType::OpenCircuit => {
                let wire = detail_text(&err.detail, "wire")
                    .ok_or_else(|| Error::invalid("open-circuit error without a wire id"))?;
                let i = wires
                    .iter()
                    .position(|w| w.id == wire)
                    .ok_or_else(|| Error::invalid(format!("no wire '{wire}' in '{}'", key.id)))?;
                wires.remove(i);
            }
            ErrorType::IllegalJunction => {
                let crossing = layout
                    .crossing
                    .ok_or_else(|| Error::invalid(format!("'{}' has no wire crossing", key.id)))?;
                match key.crossing_wires_connected {
                    Some(true) => {
                        let before = dots.len();
                        dots.retain(|d| d.distance(&crossing) > 1e-6);
                        if dots.len() == before {
                            return Err(Error::invalid("connected crossing has no dot to remove"));
                        }
                        err.detail = "dot=removed".into();
                    }
                    Some(false) => {
                        dots.push(crossing);
                        err.detail = "dot=added".into();
                    }
                    None => return Err(Error::invalid("key does not pin crossing semantics")),
                }
            }
            other => {
                return Err(Error::invalid(format!(
                    "{other} cannot be injected into circuit scenario '{}'",
                    key.id
                )))
            }
        }
    }

    let w = cfg.stroke_width;
    let mut out = Vec::new();
    for s in &symbols {
        out.push(Element {
            kind: PrimitiveKind::Component(s.kind),
            label: s.id.clone(),
            shapes: symbol_shapes(s.kind, s.center, s.axis, w),
            orientation: Some(normalize_deg(s.axis)),
            endpoints: None,
        });
    }
    for wire in &wires {
        out.push(Element {
            kind: PrimitiveKind::Wire,
            label: wire.id.clone(),
            shapes: vec![Shape::line(wire.a, wire.b, w)],
            orientation: None,
            endpoints: Some((wire.a, wire.b)),
        });
    }
    for (i, d) in dots.iter().enumerate() {
        out.push(Element {
            kind: PrimitiveKind::Junction,
            label: format!("J{}", i + 1),
            shapes: vec![Shape::Disc {
                center: *d,
                radius: JUNCTION_RADIUS,
            }],
            orientation: None,
            endpoints: None,
        });
    }
    if let Some(g) = ground {
        out.push(Element {
            kind: PrimitiveKind::GroundSymbol,
            label: "ground".into(),
            shapes: ground_shapes(g.attach, w),
            orientation: Some(270.0),
            endpoints: None,
        });
    }
    Ok(out)
}

/// Ideal (unaugmented) primitives of a scenario with the given errors applied.
pub fn ideal_primitives(scenario: &Scenario, errors: &[InjectedError]) -> Result<Vec<Primitive>> {
    let cfg = RenderConfig::default();
    let mut errs = errors.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let elements = match &scenario.layout {
        Layout::Fbd(l) => fbd_elements(scenario, l, &mut errs, &mut rng, &cfg)?,
        Layout::Circuit(l) => circuit_elements(scenario, l, &mut errs, &cfg)?,
    };
    Ok(elements.iter().map(|e| to_primitive(e, &cfg)).collect())
}

fn to_primitive(e: &Element, cfg: &RenderConfig) -> Primitive {
    let bbox = e
        .shapes
        .iter()
        .map(Shape::bounds)
        .reduce(|a, b| a.union(&b))
        .expect("elements have shapes");
    let mut p = Primitive::new(e.kind, bbox, 1.0).with_label(e.label.clone());
    if let Some(o) = e.orientation {
        p = p.with_orientation(o);
    }
    if let Some((a, b)) = e.endpoints {
        p.endpoints = Some((a, b));
        p.bbox = BBox::new(a.x, a.y, b.x, b.y).expand(cfg.stroke_width / 2.0);
    }
    p
}

fn jitter_shape(shape: &Shape, sigma: f64, rng: &mut ChaCha8Rng) -> Shape {
    if sigma <= 0.0 {
        return shape.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite");
    let wobble = Normal::new(0.0, sigma * 0.5).expect("sigma is finite");
    match shape {
        Shape::Polyline { points, width } => {
            // endpoints jitter fully; interior points along each stroke wobble
            let mut pts = Vec::new();
            let jittered: Vec<Point> = points
                .iter()
                .map(|p| p.offset(normal.sample(rng), normal.sample(rng)))
                .collect();
            for (i, pair) in jittered.windows(2).enumerate() {
                if i == 0 {
                    pts.push(pair[0]);
                }
                let len = pair[0].distance(&pair[1]);
                let pieces = (len / 15.0).ceil().max(1.0) as usize;
                for k in 1..pieces {
                    let t = k as f64 / pieces as f64;
                    let base = Point::new(
                        pair[0].x + t * (pair[1].x - pair[0].x),
                        pair[0].y + t * (pair[1].y - pair[0].y),
                    );
                    pts.push(base.offset(wobble.sample(rng), wobble.sample(rng)));
                }
                pts.push(pair[1]);
            }
            Shape::Polyline {
                points: pts,
                width: *width,
            }
        }
        other => other.map_points(&mut |p| p.offset(wobble.sample(rng), wobble.sample(rng))),
    }
}

/// Renders one sample. Deterministic in `(scenario, errors, noise, seed)`.
pub fn render_sample(
    scenario: &Scenario,
    errors: &[InjectedError],
    noise: &NoiseParams,
    seed: u64,
    cfg: &RenderConfig,
) -> Result<RenderedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation = if noise.rotation_max() > 0.0 {
        rng.random_range(-noise.rotation_max()..=noise.rotation_max())
    } else {
        0.0
    };
    let brightness = if noise.brightness_max() > 0.0 {
        rng.random_range(-noise.brightness_max()..=noise.brightness_max())
    } else {
        0.0
    };

    for e in errors {
        if e.error_type.domain() != scenario.key.domain {
            return Err(Error::invalid(format!(
                "{} error injected into {} scenario '{}'",
                e.error_type.domain(),
                scenario.key.domain,
                scenario.key.id
            )));
        }
    }
    let mut errs = errors.to_vec();
    let elements = match &scenario.layout {
        Layout::Fbd(l) => fbd_elements(scenario, l, &mut errs, &mut rng, cfg)?,
        Layout::Circuit(l) => circuit_elements(scenario, l, &mut errs, cfg)?,
    };

    let sigma = noise.stroke_jitter_sigma();
    let center = CANVAS_CENTER;
    let mut canvas = InkCanvas::new(cfg.width, cfg.height);
    let mut primitives = Vec::with_capacity(elements.len());
    let mut element_pixels = Vec::with_capacity(elements.len());
    for e in elements {
        let shapes: Vec<Shape> = e
            .shapes
            .iter()
            .map(|s| jitter_shape(s, sigma, &mut rng))
            .map(|s| s.map_points(&mut |p| p.rotate_about(&center, rotation)))
            .collect();
        let endpoints = match (&e.endpoints, shapes.first()) {
            (Some(_), Some(Shape::Polyline { points, .. })) => {
                Some((points[0], *points.last().expect("non-empty polyline")))
            }
            _ => None,
        };
        let mut pixels = Vec::new();
        for s in &shapes {
            pixels.extend(canvas.draw(s));
        }
        let augmented = Element {
            shapes,
            endpoints,
            orientation: e.orientation.map(|o| normalize_deg(o + rotation)),
            ..e
        };
        let mut prim = to_primitive(&augmented, cfg);
        if let Some(Shape::Polyline { .. }) = augmented.shapes.first() {
            if prim.kind == PrimitiveKind::Wire {
                // wobble can push interior points past the endpoint hull
                prim.bbox = augmented.shapes[0].bounds();
            }
        }
        pixels.sort_unstable();
        pixels.dedup();
        primitives.push(prim);
        element_pixels.push(pixels);
    }

    let mut image = canvas.to_image();
    let pixel_sigma = noise.pixel_noise_sigma();
    if pixel_sigma > 0.0 || brightness != 0.0 {
        let normal = Normal::new(0.0, pixel_sigma.max(1e-12)).expect("sigma is finite");
        for px in image.pixels_mut() {
            let n = if pixel_sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let v = px.0[0] as f64 + brightness + n;
            px.0[0] = v.round().clamp(0.0, 255.0) as u8;
        }
    }

    Ok(RenderedSample {
        image,
        primitives,
        errors: errs,
        element_pixels,
    })
}

/// Direction vector helper re-exported for tests of arrow geometry.
pub fn arrow_tip(tail: Point, direction: f64, length: f64) -> Point {
    let (dx, dy) = raster_direction(direction);
    tail.offset(dx * length, dy * length)
}
