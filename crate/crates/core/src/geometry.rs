//! Axis-aligned geometry shared by every pipeline stage.
//!
//! Coordinates are raster pixels with the origin at the top-left corner and
//! `y` growing downward. Orientations are degrees in `[0, 360)` measured in
//! diagram semantics: 0° points right and 90° points *up* on the page, so the
//! raster direction of an orientation is `(cos θ, -sin θ)`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    /// Moves `len` pixels along a diagram orientation.
    pub fn step(&self, orientation_deg: f64, len: f64) -> Point {
        let (dx, dy) = raster_direction(orientation_deg);
        self.offset(dx * len, dy * len)
    }

    /// Rotates about `center` by `deg` degrees, counter-clockwise on the page.
    pub fn rotate_about(&self, center: &Point, deg: f64) -> Point {
        let (s, c) = deg.to_radians().sin_cos();
        let dx = self.x - center.x;
        let dy = self.y - center.y;
        // page-CCW rotation in a y-down frame
        Point::new(center.x + dx * c + dy * s, center.y - dx * s + dy * c)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned bounding box. Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BBox {
    /// Builds a box, swapping coordinates if they arrive reversed.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox {
            x_min: x0.min(x1),
            y_min: y0.min(y1),
            x_max: x0.max(x1),
            y_max: y0.max(y1),
        }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox::new(first.x, first.y, first.x, first.y);
        for p in it {
            b.x_min = b.x_min.min(p.x);
            b.y_min = b.y_min.min(p.y);
            b.x_max = b.x_max.max(p.x);
            b.y_max = b.y_max.max(p.y);
        }
        Some(b)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn expand(&self, margin: f64) -> BBox {
        BBox::new(
            self.x_min - margin,
            self.y_min - margin,
            self.x_max + margin,
            self.y_max + margin,
        )
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            self.x_min.min(other.x_min),
            self.y_min.min(other.y_min),
            self.x_max.max(other.x_max),
            self.y_max.max(other.y_max),
        )
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        w * h
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min <= self.x_max
            && self.y_min <= self.y_max
    }
}

/// Intersection over union. Degenerate (zero-area) boxes score 1 against an
/// identical box and 0 otherwise, so NMS never sees a NaN.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Minimum Euclidean distance between two rectangles; 0 when they touch or overlap.
pub fn bbox_gap(a: &BBox, b: &BBox) -> f64 {
    let dx = (a.x_min - b.x_max).max(b.x_min - a.x_max).max(0.0);
    let dy = (a.y_min - b.y_max).max(b.y_min - a.y_max).max(0.0);
    dx.hypot(dy)
}

/// Wraps any finite angle into `[0, 360)`.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Minimal absolute circular difference, in `[0, 180]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Raster-space unit vector for a diagram orientation.
pub fn raster_direction(orientation_deg: f64) -> (f64, f64) {
    let (s, c) = orientation_deg.to_radians().sin_cos();
    (c, -s)
}

/// Diagram orientation of a raster-space vector.
pub fn orientation_of(dx: f64, dy: f64) -> f64 {
    normalize_deg((-dy).atan2(dx).to_degrees())
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0);
    p.distance(&Point::new(a.x + t * vx, a.y + t * vy))
}

/// Intersection of two segments as `(point, t_on_first, u_on_second)`, or
/// `None` for parallel or non-touching segments.
pub fn segment_intersection(
    a0: &Point,
    a1: &Point,
    b0: &Point,
    b1: &Point,
) -> Option<(Point, f64, f64)> {
    let r = (a1.x - a0.x, a1.y - a0.y);
    let s = (b1.x - b0.x, b1.y - b0.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = (b0.x - a0.x, b0.y - a0.y);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((Point::new(a0.x + t * r.0, a0.y + t * r.1), t, u))
    } else {
        None
    }
}

pub fn segment_distance(a0: &Point, a1: &Point, b0: &Point, b1: &Point) -> f64 {
    if segment_intersection(a0, a1, b0, b1).is_some() {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1)
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(0., 0., 10., 10.)), 1.0);
        assert_eq!(iou(&b(0., 0., 10., 10.), &b(20., 20., 30., 30.)), 0.0);
        let v = iou(&b(0., 0., 10., 10.), &b(5., 0., 15., 10.));
        assert!((v - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn iou_degenerate_boxes() {
        let p = b(3., 3., 3., 3.);
        assert_eq!(iou(&p, &p), 1.0);
        assert_eq!(iou(&p, &b(3., 3., 3., 4.)), 0.0);
        assert_eq!(iou(&p, &b(0., 0., 10., 10.)), 0.0);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(bbox_gap(&b(0., 0., 10., 10.), &b(5., 5., 15., 15.)), 0.0);
        assert_eq!(bbox_gap(&b(0., 0., 10., 10.), &b(13., 0., 20., 10.)), 3.0);
        assert!((bbox_gap(&b(0., 0., 10., 10.), &b(13., 14., 20., 20.)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angle_diff(0., 0.), 0.);
        assert!((angle_diff(350., 10.) - 20.).abs() < 1e-12);
        assert_eq!(angle_diff(0., 180.), 180.);
    }

    #[test]
    fn orientation_convention_is_page_up() {
        let (dx, dy) = raster_direction(90.0);
        assert!(dx.abs() < 1e-12 && (dy + 1.0).abs() < 1e-12);
        assert!((orientation_of(0.0, 1.0) - 270.0).abs() < 1e-9);
        let p = Point::new(10.0, 0.0).rotate_about(&Point::new(0.0, 0.0), 90.0);
        assert!((p.x).abs() < 1e-9 && (p.y + 10.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_segments_intersect() {
        let (p, t, u) = segment_intersection(
            &Point::new(0., 5.),
            &Point::new(10., 5.),
            &Point::new(4., 0.),
            &Point::new(4., 10.),
        )
        .unwrap();
        assert_eq!((p.x, p.y), (4.0, 5.0));
        assert!((t - 0.4).abs() < 1e-12 && (u - 0.5).abs() < 1e-12);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0.0..100.0f64, 0.0..100.0f64, 0.0..60.0f64, 0.0..60.0f64)
            .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let v = iou(&a, &c);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&c, &a));
        }

        #[test]
        fn iou_self_is_one(a in arb_box()) {
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn gap_symmetric_zero_iff_touching(a in arb_box(), c in arb_box()) {
            let g = bbox_gap(&a, &c);
            prop_assert_eq!(g, bbox_gap(&c, &a));
            let touching = a.x_min <= c.x_max && c.x_min <= a.x_max
                && a.y_min <= c.y_max && c.y_min <= a.y_max;
            prop_assert_eq!(g == 0.0, touching);
        }

        #[test]
        fn angle_diff_symmetric_and_periodic(a in -720.0..720.0f64, c in -720.0..720.0f64, k in -3i32..3) {
            prop_assert!((angle_diff(a, c) - angle_diff(c, a)).abs() < 1e-9);
            prop_assert!(angle_diff(a, a + 360.0 * k as f64) < 1e-9);
            prop_assert!((0.0..=180.0).contains(&angle_diff(a, c)));
        }
    }
}
