//! Classical-CV detection of diagram primitives from a raster image.
//!
//! The stages are contrast normalization and adaptive thresholding
//! ([`preprocess`]), connected-component contour statistics ([`contours`]),
//! a probabilistic Hough transform over a thinned map ([`hough`]) and the
//! rule-based detectors plus non-maximum suppression ([`detect`]).

pub mod contours;
pub mod detect;
pub mod hough;
pub mod preprocess;

use std::path::Path;

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Primitive;

pub use detect::{
    detect_arrows, detect_components, detect_junctions, detect_wires, nms, Detections,
};

/// Binary foreground map; `true` is ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMap {
            width,
            height,
            data: vec![false; (width * height) as usize],
        }
    }

    /// Out-of-range coordinates read as background.
    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.data[(y * self.width + x) as usize]
    }

    pub fn get_i(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && self.get(x as u32, y as u32)
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        if x < self.width && y < self.height {
            self.data[(y * self.width + x) as usize] = v;
        }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Ink as black on white.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            image::Luma([if self.get(x, y) { 0 } else { 255 }])
        })
    }
}

/// Closed interval filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
}

impl Band {
    pub const fn new(min: f64, max: f64) -> Self {
        Band { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    /// Soft margin in `[0, 1]`: relative distance to the nearer bound,
    /// saturating at 1 one bound-width away.
    pub fn margin(&self, v: f64) -> f64 {
        if !self.contains(v) {
            return 0.0;
        }
        let lo = if self.min > 0.0 { (v - self.min) / self.min } else { 1.0 };
        let hi = if self.max > 0.0 { (self.max - v) / self.max } else { 1.0 };
        lo.min(hi).clamp(0.0, 1.0)
    }
}

/// Soft margin of a lower bound, saturating at `2 × min`.
pub fn lower_margin(v: f64, min: f64) -> f64 {
    if min <= 0.0 {
        return 1.0;
    }
    ((v - min) / min).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrowFilter {
    pub area: Band,
    pub solidity: Band,
    pub min_elongation: f64,
    /// Extent along the principal axis.
    pub length: Band,
    /// Head spread over tail spread.
    pub min_head_ratio: f64,
    /// Largest lateral spread of the head.
    pub max_head_width: f64,
}

impl Default for ArrowFilter {
    fn default() -> Self {
        ArrowFilter {
            area: Band::new(100.0, 5000.0),
            solidity: Band::new(0.15, 0.95),
            min_elongation: 2.0,
            length: Band::new(30.0, 220.0),
            min_head_ratio: 2.0,
            max_head_width: 16.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    pub rho: f64,
    pub theta_deg: f64,
    pub votes: u32,
    pub min_len: f64,
    pub max_gap: f64,
    /// Seed for the random point order.
    pub seed: u64,
    /// Collinear merge tolerances.
    pub merge_angle_deg: f64,
    pub merge_offset: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            rho: 1.0,
            theta_deg: 1.0,
            votes: 30,
            min_len: 30.0,
            max_gap: 8.0,
            seed: 0x5eed,
            merge_angle_deg: 4.0,
            merge_offset: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentFilter {
    pub area: Band,
    /// Enclosed area that marks a free-body outline.
    pub body_min_hole: f64,
    /// Enclosed-region circularity and area of a current source.
    pub circle_circularity: Band,
    pub circle_hole_area: Band,
    /// Enclosed-region circularity, area and aspect of a resistor.
    pub rect_circularity: Band,
    pub rect_hole_area: Band,
    pub rect_min_aspect: f64,
    /// Blobs closer than this are grouped into one symbol.
    pub group_gap: f64,
    /// Blobs wider than this on both axes, or longer than `max_extent`, are wiring.
    pub max_extent: f64,
    /// Minimum eroded core area of a filled shape (diode triangle, battery plate).
    pub min_filled_core: f64,
    pub diode_min_core: f64,
    /// Erosion passes used to measure filled cores.
    pub core_erosions: u32,
}

impl Default for ComponentFilter {
    fn default() -> Self {
        ComponentFilter {
            area: Band::new(60.0, 8000.0),
            body_min_hole: 1500.0,
            circle_circularity: Band::new(0.75, 1.0),
            circle_hole_area: Band::new(300.0, 1200.0),
            rect_circularity: Band::new(0.3, 0.78),
            rect_hole_area: Band::new(150.0, 1200.0),
            rect_min_aspect: 1.8,
            group_gap: 10.0,
            max_extent: 110.0,
            min_filled_core: 6.0,
            diode_min_core: 50.0,
            core_erosions: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JunctionFilter {
    pub area: Band,
    pub min_circularity: f64,
    /// Erosion passes that strip wires off the dots.
    pub erosions: u32,
    /// A dot must lie this close to at least two wire segments.
    pub wire_distance: f64,
}

impl Default for JunctionFilter {
    fn default() -> Self {
        JunctionFilter {
            area: Band::new(10.0, 80.0),
            min_circularity: 0.7,
            erosions: 1,
            wire_distance: 6.0,
        }
    }
}

/// Every numeric threshold of the detector, in one serializable place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    pub clahe_clip_limit: f64,
    pub clahe_tiles: (u32, u32),
    pub adaptive_block: u32,
    pub adaptive_offset: f64,
    /// Components smaller than this are speckle.
    pub min_blob_area: usize,
    pub arrow: ArrowFilter,
    pub hough: HoughParams,
    pub component: ComponentFilter,
    pub junction: JunctionFilter,
    pub nms_iou: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            clahe_clip_limit: 2.0,
            clahe_tiles: (8, 8),
            adaptive_block: 21,
            adaptive_offset: 60.0,
            min_blob_area: 8,
            arrow: ArrowFilter::default(),
            hough: HoughParams::default(),
            component: ComponentFilter::default(),
            junction: JunctionFilter::default(),
            nms_iou: 0.5,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<()> {
        let bands = [
            ("arrow.area", self.arrow.area),
            ("arrow.solidity", self.arrow.solidity),
            ("arrow.length", self.arrow.length),
            ("component.area", self.component.area),
            ("component.circle_circularity", self.component.circle_circularity),
            ("component.circle_hole_area", self.component.circle_hole_area),
            ("component.rect_circularity", self.component.rect_circularity),
            ("component.rect_hole_area", self.component.rect_hole_area),
            ("junction.area", self.junction.area),
        ];
        for (name, b) in bands {
            if !(b.min > 0.0 && b.max >= b.min && b.max.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a positive band, got {b:?}")));
            }
        }
        let positives = [
            ("clahe_clip_limit", self.clahe_clip_limit),
            ("adaptive_offset", self.adaptive_offset),
            ("arrow.min_elongation", self.arrow.min_elongation),
            ("arrow.min_head_ratio", self.arrow.min_head_ratio),
            ("arrow.max_head_width", self.arrow.max_head_width),
            ("hough.rho", self.hough.rho),
            ("hough.theta_deg", self.hough.theta_deg),
            ("hough.min_len", self.hough.min_len),
            ("hough.max_gap", self.hough.max_gap),
            ("hough.merge_angle_deg", self.hough.merge_angle_deg),
            ("hough.merge_offset", self.hough.merge_offset),
            ("component.body_min_hole", self.component.body_min_hole),
            ("component.rect_min_aspect", self.component.rect_min_aspect),
            ("component.group_gap", self.component.group_gap),
            ("component.max_extent", self.component.max_extent),
            ("component.min_filled_core", self.component.min_filled_core),
            ("component.diode_min_core", self.component.diode_min_core),
            ("junction.min_circularity", self.junction.min_circularity),
            ("junction.wire_distance", self.junction.wire_distance),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.clahe_tiles.0 == 0 || self.clahe_tiles.1 == 0 {
            return Err(Error::invalid("clahe_tiles must be positive"));
        }
        if self.adaptive_block < 3 || self.adaptive_block.is_multiple_of(2) {
            return Err(Error::invalid("adaptive_block must be odd and at least 3"));
        }
        if self.hough.votes == 0 || self.min_blob_area == 0 {
            return Err(Error::invalid("hough.votes and min_blob_area must be positive"));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(Error::invalid(format!("nms_iou must be in (0, 1], got {}", self.nms_iou)));
        }
        Ok(())
    }
}

/// CLAHE, adaptive threshold and speckle removal.
pub fn preprocess(image: &GrayImage, cfg: &PerceptionConfig) -> Result<BinaryMap> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::Empty("image"));
    }
    if w < cfg.clahe_tiles.0 || h < cfg.clahe_tiles.1 {
        return Err(Error::invalid(format!(
            "image {w}x{h} is smaller than the {}x{} tile grid",
            cfg.clahe_tiles.0, cfg.clahe_tiles.1
        )));
    }
    let smoothed = preprocess::smooth3(image);
    let equalized = preprocess::clahe(&smoothed, cfg.clahe_clip_limit, cfg.clahe_tiles);
    let mut map = preprocess::adaptive_threshold(&equalized, cfg.adaptive_block, cfg.adaptive_offset);
    let (_, blobs) = contours::label_components(&map);
    for b in blobs.iter().filter(|b| b.area() < cfg.min_blob_area) {
        for &(x, y) in &b.pixels {
            map.set(x, y, false);
        }
    }
    Ok(map)
}

/// Runs every detector on an image.
pub fn detect_all(image: &GrayImage, cfg: &PerceptionConfig) -> Result<Vec<Primitive>> {
    cfg.validate()?;
    let map = preprocess(image, cfg)?;
    Ok(Detections::from_map(&map, cfg, true).into_primitives(cfg))
}

/// Object detectors only (arrows, bodies, components); no wire or junction
/// extraction.
pub fn detect_objects(image: &GrayImage, cfg: &PerceptionConfig) -> Result<Vec<Primitive>> {
    cfg.validate()?;
    let map = preprocess(image, cfg)?;
    Ok(Detections::from_map(&map, cfg, false).into_primitives(cfg))
}

/// Writes the binary map and the detections drawn over the input.
pub fn write_debug(image: &GrayImage, cfg: &PerceptionConfig, dir: &Path, stem: &str) -> Result<()> {
    let map = preprocess(image, cfg)?;
    crate::fsio::write_png(&dir.join(format!("{stem}_binary.png")), &map.to_image())?;
    let prims = Detections::from_map(&map, cfg, true).into_primitives(cfg);
    let mut overlay = image.clone();
    for p in &prims {
        let b = p.bbox;
        let (x0, y0) = (b.x_min.max(0.0) as u32, b.y_min.max(0.0) as u32);
        let (x1, y1) = (
            (b.x_max.min(image.width() as f64 - 1.0)) as u32,
            (b.y_max.min(image.height() as f64 - 1.0)) as u32,
        );
        for x in x0..=x1 {
            overlay.put_pixel(x, y0, image::Luma([128]));
            overlay.put_pixel(x, y1, image::Luma([128]));
        }
        for y in y0..=y1 {
            overlay.put_pixel(x0, y, image::Luma([128]));
            overlay.put_pixel(x1, y, image::Luma([128]));
        }
    }
    crate::fsio::write_png(&dir.join(format!("{stem}_detections.png")), &overlay)
}

/// Whether a detection counts as finding a ground-truth primitive: same
/// kind and IoU >= 0.5, or for wires a collinear segment covering 80 % of
/// the true one with a length within 30 %.
pub fn matches_gt(gt: &Primitive, det: &Primitive) -> bool {
    if gt.kind != det.kind {
        return false;
    }
    match (gt.endpoints, det.endpoints) {
        (Some((a, b)), Some((c, d))) => {
            let s = hough::Segment { a, b, support: 0 };
            let t = hough::Segment { a: c, b: d, support: 0 };
            hough::segment_overlap(&s, &t, 5.0, 5.0) >= 0.8 && (t.length() - s.length()).abs() <= 0.3 * s.length()
        }
        _ => crate::geometry::iou(&gt.bbox, &det.bbox) >= 0.5,
    }
}

/// Greedy one-to-one matching in ground-truth order; entry `i` is the index
/// of the detection assigned to `gt[i]`.
pub fn match_detections(gt: &[Primitive], dets: &[Primitive]) -> Vec<Option<usize>> {
    let mut used = vec![false; dets.len()];
    gt.iter()
        .map(|g| {
            let j = (0..dets.len()).find(|&j| !used[j] && matches_gt(g, &dets[j]))?;
            used[j] = true;
            Some(j)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PerceptionConfig::default().validate().unwrap();
        let c = PerceptionConfig {
            nms_iou: 0.0,
            ..PerceptionConfig::default()
        };
        assert!(c.validate().is_err());
        let mut c = PerceptionConfig::default();
        c.arrow.area = Band::new(10.0, 5.0);
        assert!(c.validate().is_err());
        let c = PerceptionConfig {
            adaptive_block: 20,
            ..PerceptionConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = PerceptionConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: PerceptionConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        let partial: PerceptionConfig = toml::from_str("adaptive_offset = 9.0").unwrap();
        assert_eq!(partial.adaptive_offset, 9.0);
        assert_eq!(partial.nms_iou, 0.5);
    }

    #[test]
    fn constant_images_have_no_foreground() {
        let cfg = PerceptionConfig::default();
        for level in [0u8, 128, 255] {
            let img = GrayImage::from_pixel(640, 480, image::Luma([level]));
            assert_eq!(preprocess(&img, &cfg).unwrap().count(), 0);
            assert!(detect_all(&img, &cfg).unwrap().is_empty());
        }
    }

    #[test]
    fn empty_image_is_an_error() {
        let img = GrayImage::new(0, 0);
        assert!(preprocess(&img, &PerceptionConfig::default()).is_err());
    }

    #[test]
    fn band_margin_shape() {
        let b = Band::new(2.0, 10.0);
        assert!((b.margin(4.0) - 0.6).abs() < 1e-12);
        assert_eq!(b.margin(2.0), 0.0);
        assert_eq!(b.margin(10.0), 0.0);
        assert_eq!(b.margin(1.0), 0.0);
    }
}
