//! Colour segmentation of beacon balls on raster frames.
//!
//! Pixels are classified by hue window plus saturation/value floors, grouped
//! into 4-connected components, filtered by area and reduced to centroids.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Vec2;

/// Beacon colour role: orange marks a reach target, green a stop cue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorClass {
    Orange,
    Green,
}

impl ColorClass {
    /// Colour used when rendering synthetic frames.
    pub fn render_rgb(self) -> Rgb {
        match self {
            ColorClass::Orange => [255, 120, 0],
            ColorClass::Green => [0, 200, 0],
        }
    }
}

pub type Rgb = [u8; 3];

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone RGB to HSV. Achromatic pixels get hue 0.
pub fn rgb_to_hsv(px: Rgb) -> Hsv {
    let r = px[0] as f64 / 255.0;
    let g = px[1] as f64 / 255.0;
    let b = px[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * libm::fmod((g - b) / delta, 6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    Hsv { h: if h >= 360.0 { h - 360.0 } else { h }, s, v: max }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub pixels: Vec<Rgb>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        RasterImage { width, height, pixels: vec![color; width * height] }
    }

    /// `None` if the pixel buffer does not match the dimensions.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Option<Self> {
        (pixels.len() == width * height).then_some(RasterImage { width, height, pixels })
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.pixels[y * self.width + x] = c;
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Paints every pixel whose centre lies within `radius` of `center`.
    /// Pixel `(i, j)` has its centre at `(i, j)`.
    pub fn draw_disc(&mut self, center: Vec2, radius: f64, color: Rgb) {
        if self.is_empty() {
            return;
        }
        let x0 = libm::floor(center.x - radius).max(0.0) as usize;
        let y0 = libm::floor(center.y - radius).max(0.0) as usize;
        let x1 = (libm::ceil(center.x + radius).max(0.0) as usize).min(self.width - 1);
        let y1 = (libm::ceil(center.y + radius).max(0.0) as usize).min(self.height - 1);
        let r2 = radius * radius;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 - center.x;
                let dy = y as f64 - center.y;
                if dx * dx + dy * dy <= r2 {
                    self.set(x, y, color);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Inclusive hue window, degrees.
    pub orange_hue: (f64, f64),
    pub green_hue: (f64, f64),
    pub min_saturation: f64,
    pub min_value: f64,
    /// Components smaller than this fraction of the image area are dropped.
    pub min_area_fraction: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            orange_hue: (10.0, 35.0),
            green_hue: (85.0, 150.0),
            min_saturation: 0.35,
            min_value: 0.25,
            min_area_fraction: 0.001,
        }
    }
}

impl SegmentationConfig {
    pub fn classify(&self, px: Rgb) -> Option<ColorClass> {
        let hsv = rgb_to_hsv(px);
        if hsv.s < self.min_saturation || hsv.v < self.min_value {
            return None;
        }
        let within = |(lo, hi): (f64, f64)| hsv.h >= lo && hsv.h <= hi;
        if within(self.orange_hue) {
            Some(ColorClass::Orange)
        } else if within(self.green_hue) {
            Some(ColorClass::Green)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub color_class: ColorClass,
    /// Pixel coordinates in the orthographic frame.
    pub centroid: Vec2,
    /// Pixel count.
    pub area: usize,
}

/// Connected components of beacon-coloured pixels, largest first.
pub fn segment_beacons(img: &RasterImage, cfg: &SegmentationConfig) -> Vec<Blob> {
    if img.is_empty() {
        return Vec::new();
    }
    let (w, h) = (img.width, img.height);
    let classes: Vec<Option<ColorClass>> = img.pixels.iter().map(|&p| cfg.classify(p)).collect();
    let min_area = cfg.min_area_fraction * (w * h) as f64;

    let mut visited = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut blobs = Vec::new();
    for start in 0..w * h {
        let Some(class) = classes[start] else { continue };
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let (mut area, mut sx, mut sy) = (0usize, 0.0f64, 0.0f64);
        while let Some(idx) = queue.pop_front() {
            let (x, y) = (idx % w, idx / w);
            area += 1;
            sx += x as f64;
            sy += y as f64;
            let mut visit = |n: usize| {
                if !visited[n] && classes[n] == Some(class) {
                    visited[n] = true;
                    queue.push_back(n);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < w {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - w);
            }
            if y + 1 < h {
                visit(idx + w);
            }
        }
        if area as f64 >= min_area {
            blobs.push(Blob {
                color_class: class,
                centroid: Vec2::new(sx / area as f64, sy / area as f64),
                area,
            });
        }
    }
    // Stable sort keeps scan order for equal areas.
    blobs.sort_by(|a, b| b.area.cmp(&a.area));
    blobs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WHITE: Rgb = [255, 255, 255];

    /// Test-side inverse of the hexcone model.
    fn hsv_to_rgb(c: Hsv) -> Rgb {
        let chroma = c.v * c.s;
        let hp = c.h / 60.0;
        let x = chroma * (1.0 - ((hp % 2.0) - 1.0).abs());
        let (r1, g1, b1) = match hp as u32 {
            0 => (chroma, x, 0.0),
            1 => (x, chroma, 0.0),
            2 => (0.0, chroma, x),
            3 => (0.0, x, chroma),
            4 => (x, 0.0, chroma),
            _ => (chroma, 0.0, x),
        };
        let m = c.v - chroma;
        let q = |f: f64| ((f + m) * 255.0).round() as u8;
        [q(r1), q(g1), q(b1)]
    }

    #[test]
    fn primaries() {
        let red = rgb_to_hsv([255, 0, 0]);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        let green = rgb_to_hsv([0, 255, 0]);
        assert_eq!((green.h, green.s, green.v), (120.0, 1.0, 1.0));
        let gray = rgb_to_hsv([128, 128, 128]);
        assert_eq!((gray.h, gray.s), (0.0, 0.0));
        assert!((gray.v - 128.0 / 255.0).abs() < 1e-12);
        assert!((gray.v - 0.502).abs() < 1e-3);
    }

    #[test]
    fn render_colours_classify() {
        let cfg = SegmentationConfig::default();
        assert_eq!(cfg.classify(ColorClass::Orange.render_rgb()), Some(ColorClass::Orange));
        assert_eq!(cfg.classify(ColorClass::Green.render_rgb()), Some(ColorClass::Green));
        assert_eq!(cfg.classify(WHITE), None);
        assert_eq!(cfg.classify([0, 0, 0]), None);
    }

    #[test]
    fn black_image_has_no_blobs() {
        let img = RasterImage::filled(64, 48, [0, 0, 0]);
        assert!(segment_beacons(&img, &SegmentationConfig::default()).is_empty());
    }

    #[test]
    fn empty_image_has_no_blobs() {
        let img = RasterImage::filled(0, 0, [0, 0, 0]);
        assert!(segment_beacons(&img, &SegmentationConfig::default()).is_empty());
    }

    #[test]
    fn single_orange_disc() {
        let mut img = RasterImage::filled(320, 240, WHITE);
        img.draw_disc(Vec2::new(100.0, 100.0), 40.0, ColorClass::Orange.render_rgb());
        let blobs = segment_beacons(&img, &SegmentationConfig::default());
        assert_eq!(blobs.len(), 1);
        let b = blobs[0];
        assert_eq!(b.color_class, ColorClass::Orange);
        assert!((b.centroid - Vec2::new(100.0, 100.0)).norm() <= 1.0);
        let ideal = core::f64::consts::PI * 1600.0;
        assert!((b.area as f64 - ideal).abs() / ideal <= 0.03, "area {}", b.area);
    }

    #[test]
    fn orange_and_green_discs() {
        let mut img = RasterImage::filled(400, 300, WHITE);
        img.draw_disc(Vec2::new(100.0, 150.0), 30.0, ColorClass::Orange.render_rgb());
        img.draw_disc(Vec2::new(300.0, 100.0), 25.0, ColorClass::Green.render_rgb());
        let blobs = segment_beacons(&img, &SegmentationConfig::default());
        assert_eq!(blobs.len(), 2);
        assert_eq!(blobs[0].color_class, ColorClass::Orange);
        assert_eq!(blobs[1].color_class, ColorClass::Green);
        assert!((blobs[1].centroid - Vec2::new(300.0, 100.0)).norm() <= 1.0);
    }

    #[test]
    fn area_filter_drops_specks() {
        let mut img = RasterImage::filled(200, 200, WHITE);
        img.draw_disc(Vec2::new(50.0, 50.0), 2.0, ColorClass::Orange.render_rgb());
        img.draw_disc(Vec2::new(150.0, 150.0), 20.0, ColorClass::Orange.render_rgb());
        let blobs = segment_beacons(&img, &SegmentationConfig::default());
        assert_eq!(blobs.len(), 1);
        // The literal 15 % threshold rejects a realistic ball.
        let literal = SegmentationConfig { min_area_fraction: 0.15, ..Default::default() };
        assert!(segment_beacons(&img, &literal).is_empty());
    }

    #[test]
    fn every_rgb_round_trips_through_hsv() {
        let mut worst = 0i32;
        for n in 0..(1u32 << 24) {
            let px = [(n & 0xff) as u8, ((n >> 8) & 0xff) as u8, (n >> 16) as u8];
            let back = hsv_to_rgb(rgb_to_hsv(px));
            for c in 0..3 {
                worst = worst.max((back[c] as i32 - px[c] as i32).abs());
            }
        }
        assert!(worst <= 1, "worst channel error {worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn disc_centroid_within_one_pixel(
            cx in 20.0f64..300.0, cy in 20.0f64..220.0, r in 10.0f64..18.0,
        ) {
            let mut img = RasterImage::filled(320, 240, WHITE);
            img.draw_disc(Vec2::new(cx, cy), r, ColorClass::Orange.render_rgb());
            let blobs = segment_beacons(&img, &SegmentationConfig::default());
            prop_assert_eq!(blobs.len(), 1);
            prop_assert!((blobs[0].centroid - Vec2::new(cx, cy)).norm() <= 1.0);
        }
    }
}
