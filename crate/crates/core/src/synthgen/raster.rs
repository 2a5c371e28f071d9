//! Minimal vector-to-raster renderer for diagram strokes.
//!
//! Pixel `(i, j)` covers `[i, i+1) × [j, j+1)` and is inked when its center
//! `(i + 0.5, j + 0.5)` lies inside the shape.

use image::GrayImage;

use crate::geometry::{point_segment_distance, BBox, Point};

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Open or closed chain of straight strokes.
    Polyline { points: Vec<Point>, width: f64 },
    /// Filled polygon.
    Polygon { points: Vec<Point> },
    /// Circle outline.
    Circle { center: Point, radius: f64, width: f64 },
    /// Filled disc.
    Disc { center: Point, radius: f64 },
}

impl Shape {
    pub fn line(a: Point, b: Point, width: f64) -> Shape {
        Shape::Polyline {
            points: vec![a, b],
            width,
        }
    }

    /// Exact extent of the inked region.
    pub fn bounds(&self) -> BBox {
        match self {
            Shape::Polyline { points, width } => BBox::from_points(points)
                .expect("polyline has points")
                .expand(width / 2.0),
            Shape::Polygon { points } => BBox::from_points(points).expect("polygon has points"),
            Shape::Circle {
                center,
                radius,
                width,
            } => BBox::new(center.x, center.y, center.x, center.y).expand(radius + width / 2.0),
            Shape::Disc { center, radius } => {
                BBox::new(center.x, center.y, center.x, center.y).expand(*radius)
            }
        }
    }

    pub fn map_points(&self, f: &mut impl FnMut(Point) -> Point) -> Shape {
        match self {
            Shape::Polyline { points, width } => Shape::Polyline {
                points: points.iter().map(|p| f(*p)).collect(),
                width: *width,
            },
            Shape::Polygon { points } => Shape::Polygon {
                points: points.iter().map(|p| f(*p)).collect(),
            },
            Shape::Circle {
                center,
                radius,
                width,
            } => Shape::Circle {
                center: f(*center),
                radius: *radius,
                width: *width,
            },
            Shape::Disc { center, radius } => Shape::Disc {
                center: f(*center),
                radius: *radius,
            },
        }
    }

    fn covers(&self, q: &Point) -> bool {
        match self {
            Shape::Polyline { points, width } => points
                .windows(2)
                .any(|s| point_segment_distance(q, &s[0], &s[1]) <= width / 2.0),
            Shape::Polygon { points } => point_in_polygon(q, points),
            Shape::Circle {
                center,
                radius,
                width,
            } => (q.distance(center) - radius).abs() <= width / 2.0,
            Shape::Disc { center, radius } => q.distance(center) <= *radius,
        }
    }
}

fn point_in_polygon(q: &Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&poly[i], &poly[j]);
        if (a.y > q.y) != (b.y > q.y) && q.x < (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Boolean ink layer.
#[derive(Debug, Clone)]
pub struct InkCanvas {
    pub width: u32,
    pub height: u32,
    ink: Vec<bool>,
}

impl InkCanvas {
    pub fn new(width: u32, height: u32) -> Self {
        InkCanvas {
            width,
            height,
            ink: vec![false; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.ink[(y * self.width + x) as usize]
    }

    /// Inks `shape` and returns the pixels it covered.
    pub fn draw(&mut self, shape: &Shape) -> Vec<(u32, u32)> {
        let b = shape.bounds().expand(1.0);
        let x0 = b.x_min.floor().max(0.0) as u32;
        let y0 = b.y_min.floor().max(0.0) as u32;
        let x1 = (b.x_max.ceil().max(0.0) as u32).min(self.width);
        let y1 = (b.y_max.ceil().max(0.0) as u32).min(self.height);
        let mut covered = Vec::new();
        for y in y0..y1 {
            for x in x0..x1 {
                let q = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                if shape.covers(&q) {
                    self.ink[(y * self.width + x) as usize] = true;
                    covered.push((x, y));
                }
            }
        }
        covered
    }

    pub fn ink_count(&self) -> usize {
        self.ink.iter().filter(|&&v| v).count()
    }

    /// Black ink on a white page.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            image::Luma([if self.get(x, y) { 0 } else { 255 }])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_stroke_is_two_pixels_thick() {
        let mut c = InkCanvas::new(40, 20);
        let px = c.draw(&Shape::line(Point::new(5., 10.), Point::new(35., 10.), 2.0));
        let rows: std::collections::BTreeSet<u32> = px.iter().map(|p| p.1).collect();
        assert_eq!(rows.into_iter().collect::<Vec<_>>(), vec![9, 10]);
    }

    #[test]
    fn inked_pixels_stay_inside_bounds() {
        let shapes = [
            Shape::line(Point::new(3.3, 4.1), Point::new(30.7, 17.9), 2.0),
            Shape::Polygon {
                points: vec![Point::new(5., 5.), Point::new(25., 8.), Point::new(12., 18.)],
            },
            Shape::Circle {
                center: Point::new(20., 10.),
                radius: 7.0,
                width: 2.0,
            },
            Shape::Disc {
                center: Point::new(10.2, 9.7),
                radius: 4.0,
            },
        ];
        for s in shapes {
            let mut c = InkCanvas::new(40, 24);
            let b = s.bounds();
            for (x, y) in c.draw(&s) {
                assert!(b.contains(&Point::new(x as f64 + 0.5, y as f64 + 0.5)));
            }
        }
    }
}
