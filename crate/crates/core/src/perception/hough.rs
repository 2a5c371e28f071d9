//! Thinning and the probabilistic Hough transform for straight strokes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{angle_diff, orientation_of, point_segment_distance, Point};

use super::{BinaryMap, HoughParams};

/// Detected straight segment; `support` counts the pixels it swallowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub support: usize,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }

    /// Undirected angle in `[0, 180)`.
    pub fn angle(&self) -> f64 {
        orientation_of(self.b.x - self.a.x, self.b.y - self.a.y) % 180.0
    }

    fn unit(&self) -> (f64, f64) {
        let l = self.length().max(1e-9);
        ((self.b.x - self.a.x) / l, (self.b.y - self.a.y) / l)
    }

    /// Position of `p` along this segment's line, 0 at `a`.
    fn project(&self, p: &Point) -> f64 {
        let (ux, uy) = self.unit();
        (p.x - self.a.x) * ux + (p.y - self.a.y) * uy
    }

    fn at(&self, t: f64) -> Point {
        let (ux, uy) = self.unit();
        self.a.offset(ux * t, uy * t)
    }

    fn line_distance(&self, p: &Point) -> f64 {
        let (ux, uy) = self.unit();
        ((p.x - self.a.x) * uy - (p.y - self.a.y) * ux).abs()
    }
}

/// Zhang-Suen thinning to one-pixel-wide strokes.
pub fn thin(map: &BinaryMap) -> BinaryMap {
    let mut m = map.clone();
    let (w, h) = (map.width as i64, map.height as i64);
    let mut marked = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            marked.clear();
            for y in 0..h {
                for x in 0..w {
                    if !m.get_i(x, y) {
                        continue;
                    }
                    // p2..p9 clockwise from north
                    let n = [
                        m.get_i(x, y - 1),
                        m.get_i(x + 1, y - 1),
                        m.get_i(x + 1, y),
                        m.get_i(x + 1, y + 1),
                        m.get_i(x, y + 1),
                        m.get_i(x - 1, y + 1),
                        m.get_i(x - 1, y),
                        m.get_i(x - 1, y - 1),
                    ];
                    let b = n.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                    let ok = if pass == 0 {
                        !(p2 && p4 && p6) && !(p4 && p6 && p8)
                    } else {
                        !(p2 && p4 && p8) && !(p2 && p6 && p8)
                    };
                    if ok {
                        marked.push((x as u32, y as u32));
                    }
                }
            }
            for &(x, y) in &marked {
                m.set(x, y, false);
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            return m;
        }
    }
}

/// Probabilistic Hough transform: random-order voting, and a corridor walk
/// along any line whose vote count reaches the threshold. Pixels claimed by
/// an accepted segment are removed and their votes withdrawn.
pub fn probabilistic_hough(map: &BinaryMap, p: &HoughParams) -> Vec<Segment> {
    let (w, h) = (map.width as i64, map.height as i64);
    let n_theta = (180.0 / p.theta_deg).round().max(1.0) as usize;
    let thetas: Vec<(f64, f64)> = (0..n_theta)
        .map(|k| {
            let t = (k as f64 * p.theta_deg).to_radians();
            (t.cos(), t.sin())
        })
        .collect();
    let max_rho = ((w * w + h * h) as f64).sqrt();
    let offset = (max_rho / p.rho).ceil() as i64;
    let n_rho = (2 * offset + 1) as usize;
    let mut acc = vec![0u32; n_theta * n_rho];
    let rho_index = |x: i64, y: i64, k: usize| -> usize {
        let (c, s) = thetas[k];
        (((x as f64 * c + y as f64 * s) / p.rho).round() as i64 + offset) as usize
    };

    let mut avail = map.clone();
    let mut voted = vec![false; map.data.len()];
    let mut points: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| map.get_i(x, y))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    points.shuffle(&mut rng);

    let mut segments = Vec::new();
    for &(x, y) in &points {
        if !avail.get_i(x, y) {
            continue;
        }
        let mut best = (0u32, 0usize);
        for k in 0..n_theta {
            let cell = &mut acc[k * n_rho + rho_index(x, y, k)];
            *cell += 1;
            if *cell > best.0 {
                best = (*cell, k);
            }
        }
        voted[(y * w + x) as usize] = true;
        if best.0 < p.votes {
            continue;
        }

        // walk along the line direction; steps are unit moves on the major axis
        let (c, s) = thetas[best.1];
        let (dx, dy) = (-s, c);
        let (sx, sy, major_x) = if dx.abs() >= dy.abs() {
            (dx.signum(), dy / dx.abs(), true)
        } else {
            (dx / dy.abs(), dy.signum(), false)
        };
        let probe = |avail: &BinaryMap, t: f64| -> bool {
            let (px, py) = ((x as f64 + sx * t).round() as i64, (y as f64 + sy * t).round() as i64);
            if major_x {
                (-1..=1).any(|o| avail.get_i(px, py + o))
            } else {
                (-1..=1).any(|o| avail.get_i(px + o, py))
            }
        };
        let mut ends = [0.0f64; 2];
        for (i, dir) in [1.0, -1.0].into_iter().enumerate() {
            let mut gap = 0.0;
            let mut t = 0.0;
            loop {
                t += dir;
                let (px, py) = (x as f64 + sx * t, y as f64 + sy * t);
                if px < -0.5 || py < -0.5 || px > w as f64 - 0.5 || py > h as f64 - 0.5 {
                    break;
                }
                if probe(&avail, t) {
                    ends[i] = t;
                    gap = 0.0;
                } else {
                    gap += 1.0;
                    if gap > p.max_gap {
                        break;
                    }
                }
            }
        }
        let a = Point::new(x as f64 + sx * ends[1] + 0.5, y as f64 + sy * ends[1] + 0.5);
        let b = Point::new(x as f64 + sx * ends[0] + 0.5, y as f64 + sy * ends[0] + 0.5);
        if a.distance(&b) < p.min_len {
            continue;
        }
        let mut support = 0;
        let (t0, t1) = (ends[1] as i64, ends[0] as i64);
        for t in t0..=t1 {
            let (px, py) = (
                (x as f64 + sx * t as f64).round() as i64,
                (y as f64 + sy * t as f64).round() as i64,
            );
            for o in -1..=1 {
                let (qx, qy) = if major_x { (px, py + o) } else { (px + o, py) };
                if !avail.get_i(qx, qy) {
                    continue;
                }
                avail.set(qx as u32, qy as u32, false);
                support += 1;
                let qi = (qy * w + qx) as usize;
                if voted[qi] {
                    voted[qi] = false;
                    for k in 0..n_theta {
                        acc[k * n_rho + rho_index(qx, qy, k)] -= 1;
                    }
                }
            }
        }
        segments.push(Segment { a, b, support });
    }
    segments
}

fn collinear(s: &Segment, t: &Segment, angle_tol: f64, offset_tol: f64) -> bool {
    let da = angle_diff(s.angle(), t.angle()).min(180.0 - angle_diff(s.angle(), t.angle()));
    da <= angle_tol && s.line_distance(&t.a) <= offset_tol && s.line_distance(&t.b) <= offset_tol
}

/// Merges collinear segments whose extents overlap or leave a gap of at most `max_gap`.
pub fn merge_collinear(segments: &[Segment], angle_tol: f64, offset_tol: f64, max_gap: f64) -> Vec<Segment> {
    let mut segs: Vec<Segment> = segments.to_vec();
    loop {
        segs.sort_by(|a, b| b.length().total_cmp(&a.length()));
        let mut merged = false;
        'outer: for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                let (s, t) = (segs[i], segs[j]);
                if !collinear(&s, &t, angle_tol, offset_tol) {
                    continue;
                }
                let (ta, tb) = (s.project(&t.a), s.project(&t.b));
                let (lo, hi) = (ta.min(tb), ta.max(tb));
                let len = s.length();
                if lo > len + max_gap || hi < -max_gap {
                    continue;
                }
                let (n0, n1) = (lo.min(0.0), hi.max(len));
                segs[i] = Segment {
                    a: s.at(n0),
                    b: s.at(n1),
                    support: s.support + t.support,
                };
                segs.remove(j);
                merged = true;
                break 'outer;
            }
        }
        if !merged {
            return segs;
        }
    }
}

/// Overlap of `t` with `s` as a fraction of the shorter one, for near-collinear pairs.
pub fn segment_overlap(s: &Segment, t: &Segment, angle_tol: f64, offset_tol: f64) -> f64 {
    if !collinear(s, t, angle_tol, offset_tol) {
        return 0.0;
    }
    let (ta, tb) = (s.project(&t.a), s.project(&t.b));
    let (lo, hi) = (ta.min(tb).max(0.0), ta.max(tb).min(s.length()));
    let shorter = s.length().min(t.length()).max(1e-9);
    ((hi - lo).max(0.0) / shorter).min(1.0)
}

/// Distance from a point to the nearest segment.
pub fn distance_to(p: &Point, s: &Segment) -> f64 {
    point_segment_distance(p, &s.a, &s.b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_map(a: (i64, i64), b: (i64, i64), width: i64) -> BinaryMap {
        let mut m = BinaryMap::new(200, 150);
        let n = (b.0 - a.0).abs().max((b.1 - a.1).abs());
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let x = a.0 as f64 + t * (b.0 - a.0) as f64;
            let y = a.1 as f64 + t * (b.1 - a.1) as f64;
            for o in 0..width {
                if (b.0 - a.0).abs() >= (b.1 - a.1).abs() {
                    m.set(x.round() as u32, (y.round() as i64 + o) as u32, true);
                } else {
                    m.set((x.round() as i64 + o) as u32, y.round() as u32, true);
                }
            }
        }
        m
    }

    #[test]
    fn thinning_reduces_a_thick_line_to_one_pixel() {
        let m = line_map((20, 50), (120, 50), 4);
        let t = thin(&m);
        assert!(t.count() >= 90 && t.count() <= 101, "{}", t.count());
        for x in 30..110 {
            assert_eq!((45..56).filter(|&y| t.get(x, y)).count(), 1);
        }
    }

    #[test]
    fn blank_map_has_no_segments() {
        let m = BinaryMap::new(100, 100);
        assert!(probabilistic_hough(&m, &HoughParams::default()).is_empty());
    }

    #[test]
    fn single_stroke_gives_one_segment() {
        let m = line_map((40, 70), (140, 70), 1);
        let segs = probabilistic_hough(&m, &HoughParams::default());
        let segs = merge_collinear(&segs, 4.0, 4.0, 8.0);
        assert_eq!(segs.len(), 1);
        let s = segs[0];
        let (lo, hi) = if s.a.x < s.b.x { (s.a, s.b) } else { (s.b, s.a) };
        assert!(lo.distance(&Point::new(40.5, 70.5)) <= 5.0, "{lo:?}");
        assert!(hi.distance(&Point::new(140.5, 70.5)) <= 5.0, "{hi:?}");
    }

    #[test]
    fn diagonal_and_vertical_strokes() {
        let mut m = line_map((20, 20), (120, 120), 1);
        let v = line_map((170, 10), (170, 140), 1);
        for (i, b) in v.data.iter().enumerate() {
            m.data[i] |= *b;
        }
        let segs = merge_collinear(&probabilistic_hough(&m, &HoughParams::default()), 4.0, 4.0, 8.0);
        assert_eq!(segs.len(), 2, "{segs:?}");
        assert!(segs.iter().any(|s| (s.angle() - 90.0).abs() < 2.0));
        assert!(segs.iter().any(|s| (s.angle() - 135.0).abs() < 2.0 || (s.angle() - 45.0).abs() < 2.0));
    }

    #[test]
    fn short_strokes_are_ignored() {
        let m = line_map((40, 70), (60, 70), 1);
        assert!(probabilistic_hough(&m, &HoughParams::default()).is_empty());
    }

    #[test]
    fn gap_bridging_and_merge() {
        let mut m = line_map((10, 40), (80, 40), 1);
        let m2 = line_map((86, 40), (180, 40), 1);
        for (i, b) in m2.data.iter().enumerate() {
            m.data[i] |= *b;
        }
        let segs = merge_collinear(&probabilistic_hough(&m, &HoughParams::default()), 4.0, 4.0, 8.0);
        assert_eq!(segs.len(), 1);
        assert!(segs[0].length() > 165.0);
    }

    #[test]
    fn overlap_fraction() {
        let s = Segment { a: Point::new(0., 0.), b: Point::new(100., 0.), support: 1 };
        let t = Segment { a: Point::new(50., 1.), b: Point::new(150., 1.), support: 1 };
        assert!((segment_overlap(&s, &t, 4.0, 4.0) - 0.5).abs() < 1e-9);
        let far = Segment { a: Point::new(50., 20.), b: Point::new(150., 20.), support: 1 };
        assert_eq!(segment_overlap(&s, &far, 4.0, 4.0), 0.0);
    }
}
