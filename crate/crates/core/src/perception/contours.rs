//! Connected components, border following and shape statistics.

use std::collections::VecDeque;

use crate::geometry::{BBox, Point};

use super::BinaryMap;

/// One 8-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub pixels: Vec<(u32, u32)>,
    /// Inclusive pixel bounds.
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Blob {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    /// Box covering the pixel squares.
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x0 as f64, self.y0 as f64, self.x1 as f64 + 1.0, self.y1 as f64 + 1.0)
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        self.pixels
            .iter()
            .map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
    }
}

const DIRS: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Labels 8-connected components in raster order. Label 0 is background,
/// blob `k` carries label `k + 1`.
pub fn label_components(map: &BinaryMap) -> (Vec<u32>, Vec<Blob>) {
    let (w, h) = (map.width as i32, map.height as i32);
    let mut labels = vec![0u32; (map.width * map.height) as usize];
    let mut blobs = Vec::new();
    let mut queue = VecDeque::new();
    for sy in 0..h {
        for sx in 0..w {
            let si = (sy * w + sx) as usize;
            if !map.data[si] || labels[si] != 0 {
                continue;
            }
            let id = blobs.len() as u32 + 1;
            labels[si] = id;
            queue.push_back((sx, sy));
            let mut blob = Blob {
                pixels: vec![],
                x0: sx as u32,
                y0: sy as u32,
                x1: sx as u32,
                y1: sy as u32,
            };
            while let Some((x, y)) = queue.pop_front() {
                blob.pixels.push((x as u32, y as u32));
                blob.x0 = blob.x0.min(x as u32);
                blob.x1 = blob.x1.max(x as u32);
                blob.y0 = blob.y0.min(y as u32);
                blob.y1 = blob.y1.max(y as u32);
                for (dx, dy) in DIRS {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let ni = (ny * w + nx) as usize;
                    if map.data[ni] && labels[ni] == 0 {
                        labels[ni] = id;
                        queue.push_back((nx, ny));
                    }
                }
            }
            blob.pixels.sort_unstable_by_key(|&(x, y)| (y, x));
            blobs.push(blob);
        }
    }
    (labels, blobs)
}

/// Local membership mask of a blob, padded by one pixel.
struct Mask {
    ox: i32,
    oy: i32,
    w: i32,
    h: i32,
    on: Vec<bool>,
}

impl Mask {
    fn of(blob: &Blob) -> Mask {
        let (ox, oy) = (blob.x0 as i32 - 1, blob.y0 as i32 - 1);
        let (w, h) = ((blob.x1 - blob.x0) as i32 + 3, (blob.y1 - blob.y0) as i32 + 3);
        let mut on = vec![false; (w * h) as usize];
        for &(x, y) in &blob.pixels {
            on[((y as i32 - oy) * w + (x as i32 - ox)) as usize] = true;
        }
        Mask { ox, oy, w, h, on }
    }

    fn get(&self, x: i32, y: i32) -> bool {
        let (lx, ly) = (x - self.ox, y - self.oy);
        lx >= 0 && ly >= 0 && lx < self.w && ly < self.h && self.on[(ly * self.w + lx) as usize]
    }
}

/// Outer boundary by Moore-neighbour tracing with Jacob's stopping rule.
/// Returns pixel coordinates in clockwise order (y down).
pub fn trace_border(blob: &Blob) -> Vec<(i32, i32)> {
    let mask = Mask::of(blob);
    let start = {
        let &(x, y) = blob.pixels.first().expect("blobs are non-empty");
        (x as i32, y as i32)
    };
    let mut contour = vec![start];
    let mut p = start;
    // the raster-order first pixel always has background to its west
    let mut back = 4usize;
    let mut first_move: Option<usize> = None;
    let limit = 4 * blob.pixels.len() + 8;
    for _ in 0..limit {
        let step = (1..=8).map(|k| (back + k) % 8).find(|&d| {
            let (dx, dy) = DIRS[d];
            mask.get(p.0 + dx, p.1 + dy)
        });
        let Some(d) = step else { break };
        if p == start {
            match first_move {
                Some(f) if f == d => break,
                None => first_move = Some(d),
                _ => {}
            }
        }
        let q = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
        let prev = DIRS[(d + 7) % 8];
        let b = (p.0 + prev.0 - q.0, p.1 + prev.1 - q.1);
        back = DIRS.iter().position(|&v| v == b).expect("backtrack is a neighbour");
        p = q;
        if p != start {
            contour.push(p);
        }
    }
    contour
}

pub fn contour_perimeter(contour: &[(i32, i32)]) -> f64 {
    if contour.len() < 2 {
        return 0.0;
    }
    let n = contour.len();
    (0..n)
        .map(|i| {
            let (a, b) = (contour[i], contour[(i + 1) % n]);
            (((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as f64).sqrt()
        })
        .sum()
}

pub fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice.abs() / 2.0
}

/// Andrew's monotone chain; counter-clockwise in math orientation.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Point, a: &Point, b: &Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Pixel area over the area of the hull of the pixel squares; in `(0, 1]`.
pub fn solidity(blob: &Blob) -> f64 {
    let corners: Vec<Point> = blob
        .pixels
        .iter()
        .flat_map(|&(x, y)| {
            let (x, y) = (x as f64, y as f64);
            [
                Point::new(x, y),
                Point::new(x + 1.0, y),
                Point::new(x, y + 1.0),
                Point::new(x + 1.0, y + 1.0),
            ]
        })
        .collect();
    let hull = polygon_area(&convex_hull(&corners));
    if hull <= 0.0 {
        return 1.0;
    }
    (blob.area() as f64 / hull).min(1.0)
}

/// `4πA/P²` on the traced outer contour, clipped to `[0, 1]`.
pub fn circularity(blob: &Blob) -> f64 {
    let contour = trace_border(blob);
    if contour.len() < 3 {
        return 1.0;
    }
    let poly: Vec<Point> = contour.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();
    let p = contour_perimeter(&contour);
    (4.0 * std::f64::consts::PI * polygon_area(&poly) / (p * p)).clamp(0.0, 1.0)
}

/// Background region fully enclosed by a blob.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub area: usize,
    pub bbox: BBox,
    pub pixels: Vec<(u32, u32)>,
}

impl Hole {
    /// Circularity of the enclosed region.
    pub fn circularity(&self) -> f64 {
        circularity(&self.as_blob())
    }

    pub fn as_blob(&self) -> Blob {
        let mut pixels = self.pixels.clone();
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        Blob {
            x0: pixels.iter().map(|p| p.0).min().unwrap_or(0),
            x1: pixels.iter().map(|p| p.0).max().unwrap_or(0),
            y0: pixels.iter().map(|p| p.1).min().unwrap_or(0),
            y1: pixels.iter().map(|p| p.1).max().unwrap_or(0),
            pixels,
        }
    }

    pub fn aspect(&self) -> f64 {
        let (w, h) = (self.bbox.width(), self.bbox.height());
        w.max(h) / w.min(h).max(1.0)
    }
}

/// Enclosed background regions (4-connected) of at least `min_area` pixels.
pub fn holes(blob: &Blob, min_area: usize) -> Vec<Hole> {
    let mask = Mask::of(blob);
    let (w, h) = (mask.w, mask.h);
    let mut state = vec![0u8; (w * h) as usize]; // 0 unvisited, 1 outside, 2 hole
    let idx = |x: i32, y: i32| (y * w + x) as usize;
    let mut queue = VecDeque::new();
    let flood = |seed: (i32, i32), mark: u8, state: &mut Vec<u8>, queue: &mut VecDeque<(i32, i32)>| {
        let mut members = Vec::new();
        state[idx(seed.0, seed.1)] = mark;
        queue.push_back(seed);
        while let Some((x, y)) = queue.pop_front() {
            members.push((x, y));
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let i = idx(nx, ny);
                if state[i] == 0 && !mask.on[i] {
                    state[i] = mark;
                    queue.push_back((nx, ny));
                }
            }
        }
        members
    };
    flood((0, 0), 1, &mut state, &mut queue);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = idx(x, y);
            if state[i] != 0 || mask.on[i] {
                continue;
            }
            let members = flood((x, y), 2, &mut state, &mut queue);
            if members.len() >= min_area {
                let pts: Vec<Point> = members
                    .iter()
                    .flat_map(|&(x, y)| {
                        let (gx, gy) = ((x + mask.ox) as f64, (y + mask.oy) as f64);
                        [Point::new(gx, gy), Point::new(gx + 1.0, gy + 1.0)]
                    })
                    .collect();
                out.push(Hole {
                    area: members.len(),
                    bbox: BBox::from_points(&pts).expect("hole has pixels"),
                    pixels: members
                        .iter()
                        .map(|&(x, y)| ((x + mask.ox) as u32, (y + mask.oy) as u32))
                        .collect(),
                });
            }
        }
    }
    out
}

/// Principal axes of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pca {
    pub centroid: Point,
    /// Unit raster vector along the major axis.
    pub major: (f64, f64),
    pub l1: f64,
    pub l2: f64,
}

impl Pca {
    pub fn elongation(&self) -> f64 {
        (self.l1 / self.l2.max(0.25)).sqrt()
    }

    /// `(along, across)` coordinates of `p` in the principal frame.
    pub fn project(&self, p: &Point) -> (f64, f64) {
        let (dx, dy) = (p.x - self.centroid.x, p.y - self.centroid.y);
        (dx * self.major.0 + dy * self.major.1, -dx * self.major.1 + dy * self.major.0)
    }
}

pub fn pca(points: &[Point]) -> Option<Pca> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - cx, p.y - cy);
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    let (a, b, c) = (a / n, b / n, c / n);
    let mid = (a + c) / 2.0;
    let r = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    Some(Pca {
        centroid: Point::new(cx, cy),
        major: (theta.cos(), theta.sin()),
        l1: mid + r,
        l2: (mid - r).max(0.0),
    })
}

/// 3×3 erosion; pixels outside the map count as background.
pub fn erode3(map: &BinaryMap) -> BinaryMap {
    let mut out = BinaryMap::new(map.width, map.height);
    let (w, h) = (map.width as i64, map.height as i64);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let all = (-1..=1).all(|dy| (-1..=1).all(|dx| map.get((x + dx) as u32, (y + dy) as u32)));
            if all {
                out.set(x as u32, y as u32, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(rows: &[&str]) -> BinaryMap {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        let mut m = BinaryMap::new(w, h);
        for (y, r) in rows.iter().enumerate() {
            for (x, c) in r.chars().enumerate() {
                if c == '#' {
                    m.set(x as u32, y as u32, true);
                }
            }
        }
        m
    }

    fn disc(r: f64) -> BinaryMap {
        let n = (2.0 * r + 6.0) as u32;
        let c = n as f64 / 2.0;
        let mut m = BinaryMap::new(n, n);
        for y in 0..n {
            for x in 0..n {
                if (x as f64 + 0.5 - c).hypot(y as f64 + 0.5 - c) <= r {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    #[test]
    fn labels_diagonal_neighbours_together() {
        let m = map_from(&["#..#", ".#..", "...#"]);
        let (_, blobs) = label_components(&m);
        assert_eq!(blobs.len(), 3);
        assert_eq!(blobs[0].area(), 2);
    }

    #[test]
    fn border_of_square_ring() {
        let m = map_from(&["....", ".##.", ".##.", "...."]);
        let (_, blobs) = label_components(&m);
        let c = trace_border(&blobs[0]);
        assert_eq!(c, vec![(1, 1), (2, 1), (2, 2), (1, 2)]);
        assert_eq!(contour_perimeter(&c), 4.0);
    }

    #[test]
    fn border_of_single_pixel_and_line() {
        let m = map_from(&["...", ".#.", "..."]);
        let (_, b) = label_components(&m);
        assert_eq!(trace_border(&b[0]), vec![(1, 1)]);
        let m = map_from(&["#####"]);
        let (_, b) = label_components(&m);
        // a one-pixel line is walked out and back
        assert_eq!(trace_border(&b[0]).len(), 8);
    }

    #[test]
    fn disc_is_circular_and_solid() {
        let (_, b) = label_components(&disc(8.0));
        assert!(circularity(&b[0]) > 0.85, "{}", circularity(&b[0]));
        assert!(solidity(&b[0]) > 0.9);
        assert!(holes(&b[0], 1).is_empty());
    }

    #[test]
    fn ring_has_one_hole() {
        let m = map_from(&["#####", "#...#", "#...#", "#####"]);
        let (_, b) = label_components(&m);
        let hs = holes(&b[0], 1);
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].area, 6);
        assert_eq!(hs[0].bbox, BBox::new(1., 1., 4., 3.));
    }

    #[test]
    fn pca_of_horizontal_bar() {
        let pts: Vec<Point> = (0..20).flat_map(|x| [Point::new(x as f64, 0.0), Point::new(x as f64, 1.0)]).collect();
        let p = pca(&pts).unwrap();
        assert!(p.major.0.abs() > 0.999);
        assert!(p.elongation() > 10.0);
    }

    #[test]
    fn hull_of_square_points() {
        let pts = [
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(0.5, 0.5),
            Point::new(1., 1.),
            Point::new(0., 1.),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert_eq!(polygon_area(&h), 1.0);
    }

    #[test]
    fn erosion_removes_thin_strokes() {
        let m = map_from(&["......", "######", "######", "......"]);
        assert_eq!(erode3(&m).count(), 0);
        let (_, b) = label_components(&disc(4.0));
        assert!(b[0].area() > 40);
        assert!(erode3(&disc(4.0)).count() > 10);
    }
}
