//! Rule-based detectors over connected-component statistics.

use crate::geometry::{bbox_gap, iou, orientation_of, BBox, Point};
use crate::types::{ComponentKind, Primitive, PrimitiveKind};

use super::contours::{self, Blob, Hole, Pca};
use super::hough::{self, Segment};
use super::{lower_margin, BinaryMap, PerceptionConfig};

const MIN_HOLE: usize = 20;

fn confidence(margins: &[f64]) -> f64 {
    if margins.is_empty() {
        return 0.5;
    }
    let log_sum: f64 = margins.iter().map(|m| m.max(1e-3).ln()).sum();
    (log_sum / margins.len() as f64).exp().clamp(0.10, 0.99)
}

/// Per-blob measurements shared by the detectors.
#[derive(Debug, Clone)]
pub struct BlobInfo {
    pub blob: Blob,
    pub bbox: BBox,
    pub holes: Vec<Hole>,
    /// Eroded pixels that belong to this blob.
    pub core: Vec<Point>,
    pub pca: Pca,
    pub along: (f64, f64),
    pub across: (f64, f64),
}

impl BlobInfo {
    pub fn area(&self) -> f64 {
        self.blob.area() as f64
    }

    /// Length along the principal axis.
    pub fn extent(&self) -> f64 {
        self.along.1 - self.along.0 + 1.0
    }

    /// Width across the principal axis.
    pub fn thickness(&self) -> f64 {
        self.across.1 - self.across.0 + 1.0
    }

    pub fn largest_hole(&self) -> Option<&Hole> {
        self.holes.iter().max_by_key(|h| h.area)
    }

    fn centroid(&self) -> Point {
        self.pca.centroid
    }

    /// Smallest first coordinate of the pixel centers under `frame`.
    fn centers_min(&self, frame: &impl Fn(&Point) -> (f64, f64)) -> f64 {
        self.blob.centers().map(|p| frame(&p).0).fold(f64::MAX, f64::min)
    }
}

fn erode_n(map: &BinaryMap, n: u32) -> BinaryMap {
    (0..n).fold(map.clone(), |m, _| contours::erode3(&m))
}

impl BlobInfo {
    /// Measures a blob; `eroded` marks core pixels.
    pub fn measure(blob: Blob, eroded: &BinaryMap) -> BlobInfo {
        let pts: Vec<Point> = blob.centers().collect();
        let pca = contours::pca(&pts).expect("blobs are non-empty");
        let (mut along, mut across) = ((f64::MAX, f64::MIN), (f64::MAX, f64::MIN));
        for p in &pts {
            let (u, v) = pca.project(p);
            along = (along.0.min(u), along.1.max(u));
            across = (across.0.min(v), across.1.max(v));
        }
        let core = blob
            .pixels
            .iter()
            .filter(|&&(x, y)| eroded.get(x, y))
            .map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
            .collect();
        BlobInfo {
            bbox: blob.bbox(),
            holes: contours::holes(&blob, MIN_HOLE),
            blob,
            core,
            pca,
            along,
            across,
        }
    }
}

/// Connected components of a map with their statistics.
pub struct Analysis {
    pub labels: Vec<u32>,
    pub infos: Vec<BlobInfo>,
    pub eroded: BinaryMap,
    width: u32,
    height: u32,
}

impl Analysis {
    pub fn new(map: &BinaryMap, cfg: &PerceptionConfig) -> Analysis {
        let (labels, blobs) = contours::label_components(map);
        let eroded = erode_n(map, cfg.component.core_erosions);
        let infos = blobs.into_iter().map(|b| BlobInfo::measure(b, &eroded)).collect();
        Analysis {
            labels,
            infos,
            eroded,
            width: map.width,
            height: map.height,
        }
    }

    /// Pieces of `pixels` as separate measured blobs.
    fn pieces(&self, pixels: &[(u32, u32)], min_area: usize) -> Vec<BlobInfo> {
        let mut m = BinaryMap::new(self.width, self.height);
        for &(x, y) in pixels {
            m.set(x, y, true);
        }
        contours::label_components(&m)
            .1
            .into_iter()
            .filter(|b| b.area() >= min_area)
            .map(|b| BlobInfo::measure(b, &self.eroded))
            .collect()
    }
}

/// Lateral spread per 1 px step along `pca`'s major axis.
fn spread_profile(points: &[Point], pca: &Pca, along: (f64, f64)) -> Vec<f64> {
    let n = (along.1 - along.0).floor() as usize + 1;
    let mut lo = vec![f64::MAX; n];
    let mut hi = vec![f64::MIN; n];
    for p in points {
        let (u, v) = pca.project(p);
        let i = ((u - along.0).floor() as usize).min(n - 1);
        lo[i] = lo[i].min(v);
        hi[i] = hi[i].max(v);
    }
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| if h >= l { h - l + 1.0 } else { 0.0 })
        .collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Which end of a profile is wider: `Some(true)` for the high end, with the
/// head and tail spreads measured over `window` steps.
fn wide_end(profile: &[f64], window: usize) -> (bool, f64, f64) {
    let w = window.clamp(1, profile.len());
    let lo = max_of(&profile[..w]);
    let hi = max_of(&profile[profile.len() - w..]);
    if hi >= lo {
        (true, hi, lo)
    } else {
        (false, lo, hi)
    }
}

fn arrow_from(info: &BlobInfo, cfg: &PerceptionConfig) -> Option<Primitive> {
    let a = &cfg.arrow;
    let area = info.area();
    if !a.area.contains(area) || info.holes.iter().any(|h| h.area >= MIN_HOLE) {
        return None;
    }
    let elong = info.pca.elongation();
    let len = info.extent();
    if elong < a.min_elongation || !a.length.contains(len) {
        return None;
    }
    let sol = contours::solidity(&info.blob);
    if !a.solidity.contains(sol) {
        return None;
    }
    let pts: Vec<Point> = info.blob.centers().collect();
    let profile = spread_profile(&pts, &info.pca, info.along);
    let window = (len / 4.0).min(14.0).round() as usize;
    let (head_high, head, tail) = wide_end(&profile, window);
    let ratio = head / tail.max(1.0);
    if ratio < a.min_head_ratio || max_of(&profile) > a.max_head_width {
        return None;
    }
    // a tapering tip rather than a bar or a corner
    let tip: Vec<f64> = if head_high {
        profile[profile.len().saturating_sub(3)..].to_vec()
    } else {
        profile[..3.min(profile.len())].to_vec()
    };
    if max_of(&tip) > 0.6 * head {
        return None;
    }
    let (mx, my) = info.pca.major;
    let (dx, dy) = if head_high { (mx, my) } else { (-mx, -my) };
    let conf = confidence(&[
        a.area.margin(area),
        a.solidity.margin(sol),
        lower_margin(elong, a.min_elongation),
        a.length.margin(len),
        lower_margin(ratio, a.min_head_ratio),
    ]);
    Some(Primitive::new(PrimitiveKind::ForceArrow, info.bbox, conf).with_orientation(orientation_of(dx, dy)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Arrow,
    Body,
    Resistor,
    CurrentSource,
    Diode,
    /// Lead plus plate; `filled` for a thick plate.
    Tee { filled: bool },
    Bar,
    Other,
}

fn role_of(info: &BlobInfo, cfg: &PerceptionConfig) -> Role {
    let c = &cfg.component;
    if let Some(h) = info.largest_hole() {
        let hole_area = h.area as f64;
        if hole_area >= c.body_min_hole {
            return Role::Body;
        }
        let circ = h.circularity();
        if c.circle_hole_area.contains(hole_area) && c.circle_circularity.contains(circ) && h.aspect() <= 1.4 {
            return Role::CurrentSource;
        }
        if c.rect_hole_area.contains(hole_area)
            && c.rect_circularity.contains(circ)
            && h.aspect() >= c.rect_min_aspect
        {
            return Role::Resistor;
        }
        return Role::Other;
    }
    let (extent, thick, core) = (info.extent(), info.thickness(), info.core.len() as f64);
    if extent > c.max_extent || info.area() > c.area.max {
        return Role::Other;
    }
    if core >= c.diode_min_core && (40.0..=c.max_extent).contains(&extent) {
        return Role::Diode;
    }
    if (20.0..=65.0).contains(&extent) && thick >= 10.0 {
        return Role::Tee {
            filled: core >= c.min_filled_core,
        };
    }
    if (5.0..=40.0).contains(&extent) && thick < 8.0 {
        return Role::Bar;
    }
    Role::Other
}

/// Everything found in one image, before non-maximum suppression.
#[derive(Debug, Clone, Default)]
pub struct Detections {
    pub arrows: Vec<Primitive>,
    /// Bodies, components and ground symbols.
    pub objects: Vec<Primitive>,
    pub wires: Vec<Primitive>,
    pub junctions: Vec<Primitive>,
}

struct ObjectPass {
    arrows: Vec<Primitive>,
    objects: Vec<Primitive>,
    consumed: Vec<bool>,
}

fn union_bbox<'a>(infos: impl IntoIterator<Item = &'a BlobInfo>) -> BBox {
    infos
        .into_iter()
        .map(|i| i.bbox)
        .reduce(|a, b| a.union(&b))
        .expect("groups are non-empty")
}

fn direction_deg(from: &Point, to: &Point) -> f64 {
    orientation_of(to.x - from.x, to.y - from.y)
}

/// Undirected axis folded into `[0, 180)`.
fn axis_deg(pca: &Pca) -> f64 {
    orientation_of(pca.major.0, pca.major.1) % 180.0
}

/// Gathers unconsumed blobs of role `Bar` reachable from `seed` through
/// gaps of at most `gap`.
fn gather_bars(seed: usize, a: &Analysis, roles: &[Role], consumed: &[bool], gap: f64, max_extent: f64) -> Vec<usize> {
    let mut group = vec![seed];
    let mut bars = Vec::new();
    loop {
        let next = (0..a.infos.len()).find(|&j| {
            roles[j] == Role::Bar
                && !consumed[j]
                && !bars.contains(&j)
                && a.infos[j].extent() <= max_extent
                && group.iter().any(|&g| bbox_gap(&a.infos[g].bbox, &a.infos[j].bbox) <= gap)
        });
        match next {
            Some(j) => {
                bars.push(j);
                group.push(j);
            }
            None => return bars,
        }
    }
}

/// Width of the band around a body's interior that counts as its outline.
const OUTLINE_BAND: f64 = 5.0;

/// Separates a closed outline from strokes touching or crossing it. Returns
/// the outline's box and the arrows among the remaining pieces.
fn split_body(info: &BlobInfo, a: &Analysis, cfg: &PerceptionConfig) -> (BBox, Vec<Primitive>) {
    let Some(interior) = info
        .holes
        .iter()
        .filter(|h| h.area >= 100)
        .map(|h| h.bbox)
        .reduce(|x, y| x.union(&y))
    else {
        return (info.bbox, Vec::new());
    };
    let outer = interior.expand(OUTLINE_BAND);
    let inner = interior.expand(-2.0);
    let (mut outline, mut rest) = (Vec::new(), Vec::new());
    for &(x, y) in &info.blob.pixels {
        let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
        if outer.contains(&p) && !inner.contains(&p) {
            outline.push(p);
        } else {
            rest.push((x, y));
        }
    }
    let bbox = BBox::from_points(&outline).map_or(info.bbox, |b| b.expand(0.5));
    if rest.is_empty() {
        return (bbox, Vec::new());
    }
    let pieces = a.pieces(&rest, 4);
    let mut used = vec![false; pieces.len()];
    let mut arrows = Vec::new();
    for k in 0..pieces.len() {
        let Some(mut arrow) = arrow_from(&pieces[k], cfg) else { continue };
        used[k] = true;
        // collinear stubs behind the tail belong to the same stroke
        let (dx, dy) = crate::geometry::raster_direction(arrow.orientation.expect("arrows are oriented"));
        let origin = pieces[k].centroid();
        let frame = |p: &Point| {
            let (px, py) = (p.x - origin.x, p.y - origin.y);
            (px * dx + py * dy, (py * dx - px * dy).abs())
        };
        let mut back = pieces[k].centers_min(&frame);
        loop {
            let next = (0..pieces.len()).find(|&j| {
                if used[j] {
                    return false;
                }
                let pts: Vec<(f64, f64)> = pieces[j].blob.centers().map(|p| frame(&p)).collect();
                let front = pts.iter().map(|q| q.0).fold(f64::MIN, f64::max);
                pts.iter().all(|q| q.1 <= 4.0) && front < back + 1.0 && front >= back - 30.0
            });
            let Some(j) = next else { break };
            used[j] = true;
            arrow.bbox = arrow.bbox.union(&pieces[j].bbox);
            back = pieces[j].centers_min(&frame);
        }
        arrows.push(arrow);
    }
    (bbox, arrows)
}

fn object_pass(a: &Analysis, cfg: &PerceptionConfig) -> ObjectPass {
    let c = &cfg.component;
    let n = a.infos.len();
    let mut consumed = vec![false; n];
    let mut arrows = Vec::new();
    let mut roles = vec![Role::Other; n];
    for (i, info) in a.infos.iter().enumerate() {
        if let Some(p) = arrow_from(info, cfg) {
            arrows.push(p);
            consumed[i] = true;
            roles[i] = Role::Arrow;
        } else {
            roles[i] = role_of(info, cfg);
        }
    }

    let mut objects = Vec::new();
    // closed shapes first: bodies, resistors, current sources
    for i in 0..n {
        let info = &a.infos[i];
        match roles[i] {
            Role::Body => {
                let hole = info.largest_hole().expect("bodies enclose a hole").area as f64;
                let conf = confidence(&[lower_margin(hole, c.body_min_hole), lower_margin(info.area(), 100.0)]);
                let (bbox, attached) = split_body(info, a, cfg);
                objects.push(Primitive::new(PrimitiveKind::Body, bbox, conf));
                arrows.extend(attached);
                consumed[i] = true;
            }
            Role::Resistor => {
                let h = info.largest_hole().expect("resistors enclose a hole");
                let conf = confidence(&[
                    c.rect_circularity.margin(h.circularity()),
                    c.rect_hole_area.margin(h.area as f64),
                    lower_margin(h.aspect(), c.rect_min_aspect),
                ]);
                objects.push(
                    Primitive::new(PrimitiveKind::Component(ComponentKind::Resistor), info.bbox, conf)
                        .with_orientation(axis_deg(&info.pca)),
                );
                consumed[i] = true;
            }
            Role::CurrentSource => {
                let h = info.largest_hole().expect("sources enclose a hole");
                // the inner arrow is the largest blob inside the circle
                let inner = (0..n)
                    .filter(|&j| j != i && h.bbox.contains(&a.infos[j].centroid()))
                    .max_by_key(|&j| a.infos[j].blob.area());
                let orientation = match inner {
                    Some(j) => {
                        let ij = &a.infos[j];
                        let pts: Vec<Point> = ij.blob.centers().collect();
                        let profile = spread_profile(&pts, &info.pca, {
                            let us: Vec<f64> = pts.iter().map(|p| info.pca.project(p).0).collect();
                            (
                                us.iter().copied().fold(f64::MAX, f64::min),
                                us.iter().copied().fold(f64::MIN, f64::max),
                            )
                        });
                        let (high, _, _) = wide_end(&profile, profile.len() / 3);
                        let (mx, my) = info.pca.major;
                        consumed[j] = true;
                        if high {
                            orientation_of(mx, my)
                        } else {
                            orientation_of(-mx, -my)
                        }
                    }
                    None => axis_deg(&info.pca),
                };
                let conf = confidence(&[
                    c.circle_circularity.margin(h.circularity()).max(0.5),
                    c.circle_hole_area.margin(h.area as f64),
                    if inner.is_some() { 1.0 } else { 0.3 },
                ]);
                objects.push(
                    Primitive::new(PrimitiveKind::Component(ComponentKind::CurrentSource), info.bbox, conf)
                        .with_orientation(orientation),
                );
                consumed[i] = true;
            }
            _ => {}
        }
    }

    // diodes: the triangle half, the bar half when the two are apart, and
    // emission marks for LEDs
    for i in 0..n {
        if roles[i] != Role::Diode || consumed[i] {
            continue;
        }
        let info = &a.infos[i];
        let bar_half = (0..n)
            .filter(|&j| !consumed[j] && matches!(roles[j], Role::Tee { filled: false }))
            .map(|j| (bbox_gap(&info.bbox, &a.infos[j].bbox), j))
            .filter(|&(g, _)| g <= c.group_gap)
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(_, j)| j);
        let mut members = vec![i];
        let orientation = match bar_half {
            Some(j) => {
                members.push(j);
                consumed[j] = true;
                direction_deg(&info.centroid(), &a.infos[j].centroid())
            }
            None => {
                // the triangle's wide base sits behind its tip
                let (u0, u1) = info
                    .core
                    .iter()
                    .map(|p| info.pca.project(p).0)
                    .fold((f64::MAX, f64::MIN), |(lo, hi), u| (lo.min(u), hi.max(u)));
                let profile = spread_profile(&info.core, &info.pca, (u0, u1));
                let (base_high, _, _) = wide_end(&profile, (profile.len() / 3).max(1));
                let (mx, my) = info.pca.major;
                if base_high {
                    orientation_of(-mx, -my)
                } else {
                    orientation_of(mx, my)
                }
            }
        };
        let mut marks = Vec::new();
        for &m in &members {
            for b in gather_bars(m, a, &roles, &consumed, c.group_gap, 20.0) {
                if !marks.contains(&b) {
                    marks.push(b);
                }
            }
        }
        let kind = if marks.len() >= 2 { ComponentKind::Led } else { ComponentKind::Diode };
        if kind == ComponentKind::Led {
            members.extend(&marks);
        }
        let bbox = union_bbox(members.iter().map(|&k| &a.infos[k]));
        let span = bbox.width().max(bbox.height());
        let conf = confidence(&[
            lower_margin(info.core.len() as f64, c.diode_min_core),
            if bar_half.is_some() { 1.0 } else { 0.6 },
            lower_margin(span, 60.0),
        ]);
        objects.push(Primitive::new(PrimitiveKind::Component(kind), bbox, conf).with_orientation(orientation));
        for k in members {
            consumed[k] = true;
        }
    }

    // plate pairs: batteries and capacitors
    let tees: Vec<usize> = (0..n).filter(|&i| matches!(roles[i], Role::Tee { .. })).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (k, &i) in tees.iter().enumerate() {
        for &j in &tees[k + 1..] {
            let g = bbox_gap(&a.infos[i].bbox, &a.infos[j].bbox);
            let span = union_bbox([&a.infos[i], &a.infos[j]]);
            if g <= c.group_gap && span.width().max(span.height()) <= c.max_extent {
                pairs.push((g, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    for (g, i, j) in pairs {
        if consumed[i] || consumed[j] {
            continue;
        }
        let filled = |k: usize| matches!(roles[k], Role::Tee { filled: true });
        let (kind, orientation) = match (filled(i), filled(j)) {
            (false, false) => (
                ComponentKind::Capacitor,
                direction_deg(&a.infos[i].centroid(), &a.infos[j].centroid()) % 180.0,
            ),
            (true, false) | (true, true) => (
                ComponentKind::Battery,
                direction_deg(&a.infos[i].centroid(), &a.infos[j].centroid()),
            ),
            (false, true) => (
                ComponentKind::Battery,
                direction_deg(&a.infos[j].centroid(), &a.infos[i].centroid()),
            ),
        };
        let bbox = union_bbox([&a.infos[i], &a.infos[j]]);
        let conf = confidence(&[
            ((c.group_gap - g) / c.group_gap).clamp(0.0, 1.0).max(0.2),
            c.area.margin(a.infos[i].area() + a.infos[j].area()),
        ]);
        objects.push(Primitive::new(PrimitiveKind::Component(kind), bbox, conf).with_orientation(orientation));
        consumed[i] = true;
        consumed[j] = true;
    }

    // ground: a lead-and-bar tee above shorter bars
    for &i in &tees {
        if consumed[i] {
            continue;
        }
        let bars = gather_bars(i, a, &roles, &consumed, c.group_gap, 40.0);
        if bars.is_empty() {
            continue;
        }
        let members: Vec<&BlobInfo> = std::iter::once(i).chain(bars.iter().copied()).map(|k| &a.infos[k]).collect();
        let bbox = union_bbox(members.iter().copied());
        let bar_center = {
            let (sx, sy) = bars.iter().fold((0.0, 0.0), |(sx, sy), &k| {
                let p = a.infos[k].centroid();
                (sx + p.x, sy + p.y)
            });
            Point::new(sx / bars.len() as f64, sy / bars.len() as f64)
        };
        let conf = confidence(&[(bars.len() as f64 / 2.0).min(1.0), lower_margin(a.infos[i].thickness(), 10.0)]);
        objects.push(
            Primitive::new(PrimitiveKind::GroundSymbol, bbox, conf)
                .with_orientation(direction_deg(&a.infos[i].centroid(), &bar_center)),
        );
        consumed[i] = true;
        for k in bars {
            consumed[k] = true;
        }
    }

    ObjectPass {
        arrows,
        objects,
        consumed,
    }
}

fn wire_segments(map: &BinaryMap, cfg: &PerceptionConfig) -> Vec<Segment> {
    let skeleton = hough::thin(map);
    let raw = hough::probabilistic_hough(&skeleton, &cfg.hough);
    let h = &cfg.hough;
    hough::merge_collinear(&raw, h.merge_angle_deg, h.merge_offset, h.max_gap)
}

fn wire_primitive(s: &Segment, cfg: &PerceptionConfig) -> Primitive {
    let len = s.length();
    let coverage = (s.support as f64 / len.max(1.0)).min(1.0);
    let conf = confidence(&[lower_margin(len, cfg.hough.min_len), coverage]);
    // canonical endpoint order keeps output stable
    let (a, b) = if (s.a.x, s.a.y) <= (s.b.x, s.b.y) { (s.a, s.b) } else { (s.b, s.a) };
    Primitive::wire(a, b, 1.0, conf)
}

fn junctions_from(map: &BinaryMap, blocked: &[BBox], wires: &[Primitive], cfg: &PerceptionConfig) -> Vec<Primitive> {
    let j = &cfg.junction;
    let eroded = erode_n(map, j.erosions);
    let (_, blobs) = contours::label_components(&eroded);
    let grow = j.erosions as f64;
    blobs
        .iter()
        .filter_map(|b| {
            let area = b.area() as f64;
            if !j.area.contains(area) {
                return None;
            }
            let circ = contours::circularity(b);
            if circ < j.min_circularity {
                return None;
            }
            let bbox = b.bbox().expand(grow);
            let c = bbox.center();
            if blocked.iter().any(|bb| bb.contains(&c)) {
                return None;
            }
            let near = wires
                .iter()
                .filter_map(|w| w.endpoints)
                .filter(|(a, e)| crate::geometry::point_segment_distance(&c, a, e) <= j.wire_distance)
                .count();
            if near < 2 {
                return None;
            }
            let conf = confidence(&[j.area.margin(area), lower_margin(circ, j.min_circularity), (near as f64 / 2.0).min(1.0)]);
            Some(Primitive::new(PrimitiveKind::Junction, bbox, conf))
        })
        .collect()
}

fn erase(map: &BinaryMap, a: &Analysis, consumed: &[bool]) -> BinaryMap {
    let mut out = map.clone();
    for (i, info) in a.infos.iter().enumerate() {
        if consumed[i] {
            for &(x, y) in &info.blob.pixels {
                out.set(x, y, false);
            }
        }
    }
    out
}

impl Detections {
    /// Runs the object detectors and, with `with_wires`, the wire and junction
    /// detectors on the map left after erasing detected objects.
    pub fn from_map(map: &BinaryMap, cfg: &PerceptionConfig, with_wires: bool) -> Detections {
        let analysis = Analysis::new(map, cfg);
        let pass = object_pass(&analysis, cfg);
        let mut out = Detections {
            arrows: pass.arrows,
            objects: pass.objects,
            ..Default::default()
        };
        if with_wires {
            let rest = erase(map, &analysis, &pass.consumed);
            out.wires = wire_segments(&rest, cfg).iter().map(|s| wire_primitive(s, cfg)).collect();
            let blocked: Vec<BBox> = out.arrows.iter().chain(&out.objects).map(|p| p.bbox).collect();
            out.junctions = junctions_from(map, &blocked, &out.wires, cfg);
        }
        out
    }

    /// Per-kind NMS, then arrows, objects, wires, junctions in that order.
    pub fn into_primitives(self, cfg: &PerceptionConfig) -> Vec<Primitive> {
        let mut all = Vec::new();
        for group in [self.arrows, self.objects, self.wires, self.junctions] {
            all.extend(nms(&group, cfg.nms_iou));
        }
        all
    }
}

pub fn detect_arrows(map: &BinaryMap, cfg: &PerceptionConfig) -> Vec<Primitive> {
    let a = Analysis::new(map, cfg);
    a.infos.iter().filter_map(|i| arrow_from(i, cfg)).collect()
}

/// Component symbols, ground symbols and free-body outlines.
pub fn detect_components(map: &BinaryMap, cfg: &PerceptionConfig) -> Vec<Primitive> {
    object_pass(&Analysis::new(map, cfg), cfg).objects
}

/// Straight wire segments left after erasing arrows and symbols.
pub fn detect_wires(map: &BinaryMap, cfg: &PerceptionConfig) -> Vec<Primitive> {
    let a = Analysis::new(map, cfg);
    let pass = object_pass(&a, cfg);
    let rest = erase(map, &a, &pass.consumed);
    wire_segments(&rest, cfg).iter().map(|s| wire_primitive(s, cfg)).collect()
}

/// Small round blobs close to at least two of `wires`, outside detected symbols.
pub fn detect_junctions(map: &BinaryMap, wires: &[Primitive], cfg: &PerceptionConfig) -> Vec<Primitive> {
    let a = Analysis::new(map, cfg);
    let pass = object_pass(&a, cfg);
    let blocked: Vec<BBox> = pass.arrows.iter().chain(&pass.objects).map(|p| p.bbox).collect();
    junctions_from(map, &blocked, wires, cfg)
}

fn overlaps(p: &Primitive, q: &Primitive, threshold: f64) -> bool {
    match (p.kind, p.endpoints, q.endpoints) {
        (PrimitiveKind::Wire, Some((a, b)), Some((c, d))) => {
            let s = Segment { a, b, support: 0 };
            let t = Segment { a: c, b: d, support: 0 };
            hough::segment_overlap(&s, &t, 4.0, 4.0) >= threshold
        }
        _ => iou(&p.bbox, &q.bbox) >= threshold,
    }
}

/// Greedy non-maximum suppression within each kind; output sorted by
/// confidence, highest first (ties keep input order).
pub fn nms(detections: &[Primitive], iou_threshold: f64) -> Vec<Primitive> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&i, &j| detections[j].confidence.total_cmp(&detections[i].confidence).then(i.cmp(&j)));
    let mut kept: Vec<Primitive> = Vec::new();
    for i in order {
        let d = &detections[i];
        if kept.iter().any(|k| k.kind == d.kind && overlaps(k, d, iou_threshold)) {
            continue;
        }
        kept.push(d.clone());
    }
    kept
}
