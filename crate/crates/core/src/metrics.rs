//! Partition quality metrics: achievable segmentation accuracy, boundary
//! recall, contour density, shape regularity and nestedness.
//!
//! All metrics use 4-connectivity: a pixel is a boundary pixel when one of
//! its in-image 4-neighbors carries a different label.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::label::LabelMap;

/// Default boundary recall tolerance, in pixels (Chebyshev distance).
pub const DEFAULT_BR_EPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BoundaryMask {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::BufferLength {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

pub fn boundary_mask(labels: &LabelMap) -> BoundaryMask {
    let (w, h) = (labels.width(), labels.height());
    let l = labels.labels();
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w && l[p] != l[p + 1] {
                bits[p] = true;
                bits[p + 1] = true;
            }
            if y + 1 < h && l[p] != l[p + w] {
                bits[p] = true;
                bits[p + w] = true;
            }
        }
    }
    BoundaryMask {
        width: w,
        height: h,
        bits,
    }
}

fn same_dims(what: &'static str, a: &LabelMap, b: &LabelMap) -> Result<()> {
    b.expect_dims(what, a.width(), a.height())
}

/// `sum over regions of a` of the largest pixel overlap with any region of `b`.
fn dominant_overlap(a: &LabelMap, b: &LabelMap) -> u64 {
    let nb = b.count() as u64;
    let mut codes: Vec<u64> = a
        .labels()
        .iter()
        .zip(b.labels())
        .map(|(&x, &y)| x as u64 * nb + y as u64)
        .collect();
    codes.sort_unstable();
    let mut best = vec![0u64; a.count()];
    let mut i = 0;
    while i < codes.len() {
        let code = codes[i];
        let run = codes[i..].iter().take_while(|&&c| c == code).count() as u64;
        let region = (code / nb) as usize;
        best[region] = best[region].max(run);
        i += run as usize;
    }
    best.into_iter().sum()
}

/// Achievable segmentation accuracy: the pixel accuracy reached by giving
/// every region its dominant ground-truth label.
pub fn asa(labels: &LabelMap, gt: &LabelMap) -> Result<f64> {
    same_dims("ground truth", labels, gt)?;
    Ok(dominant_overlap(labels, gt) as f64 / labels.len() as f64)
}

/// Boundary recall from precomputed masks.
pub fn boundary_recall_masks(partition: &BoundaryMask, gt: &BoundaryMask, eps: usize) -> Result<f64> {
    let (w, h) = (partition.width, partition.height);
    if gt.width != w || gt.height != h {
        return Err(Error::DimensionMismatch {
            what: "ground truth boundary",
            expected_w: w,
            expected_h: h,
            found_w: gt.width,
            found_h: gt.height,
        });
    }
    // summed-area table of partition boundary pixels
    let stride = w + 1;
    let mut sat = vec![0u32; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += partition.bits[y * w + x] as u32;
            sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
        }
    }
    let mut total = 0usize;
    let mut hit = 0usize;
    for y in 0..h {
        for x in 0..w {
            if !gt.bits[y * w + x] {
                continue;
            }
            total += 1;
            let (x0, x1) = (x.saturating_sub(eps), (x + eps + 1).min(w));
            let (y0, y1) = (y.saturating_sub(eps), (y + eps + 1).min(h));
            let inside = sat[y1 * stride + x1] + sat[y0 * stride + x0] - sat[y0 * stride + x1] - sat[y1 * stride + x0];
            if inside > 0 {
                hit += 1;
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

/// Fraction of ground-truth boundary pixels with a partition boundary pixel
/// within Chebyshev distance `eps`; `1.0` when the ground truth has no
/// boundary.
pub fn boundary_recall(labels: &LabelMap, gt: &LabelMap, eps: usize) -> Result<f64> {
    same_dims("ground truth", labels, gt)?;
    boundary_recall_masks(&boundary_mask(labels), &boundary_mask(gt), eps)
}

/// Fraction of pixels lying on a region boundary.
pub fn contour_density(labels: &LabelMap) -> f64 {
    boundary_mask(labels).count() as f64 / labels.len() as f64
}

#[derive(Debug, Clone, Default)]
struct ShapeAccumulator {
    n: u64,
    sx: u64,
    sy: u64,
    sxx: u128,
    syy: u128,
    // (row, min x, max x) for every row the region touches
    rows: Vec<(u32, u32, u32)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull (counter-clockwise, no collinear points) by monotone chain.
fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_area_perimeter(poly: &[(i64, i64)]) -> (f64, f64) {
    let mut twice_area = 0i64;
    let mut perimeter = 0.0;
    for (i, &a) in poly.iter().enumerate() {
        let b = poly[(i + 1) % poly.len()];
        twice_area += a.0 * b.1 - b.0 * a.1;
        let (dx, dy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
        perimeter += libm::sqrt(dx * dx + dy * dy);
    }
    (twice_area.unsigned_abs() as f64 / 2.0, perimeter)
}

impl ShapeAccumulator {
    /// Convexity x hull circularity x axis balance of one region.
    fn regularity(&self) -> f64 {
        if self.n == 1 {
            return 1.0;
        }
        let mut corners = Vec::with_capacity(4 * self.rows.len());
        for &(y, x0, x1) in &self.rows {
            let (y, x0, x1) = (y as i64, x0 as i64, x1 as i64 + 1);
            corners.extend([(x0, y), (x0, y + 1), (x1, y), (x1, y + 1)]);
        }
        let hull = convex_hull(corners);
        let (area, perimeter) = polygon_area_perimeter(&hull);
        let convexity = self.n as f64 / area;
        let smoothness = (4.0 * PI * area / (perimeter * perimeter)).min(1.0);

        let n = self.n as u128;
        let var_x = n * self.sxx - (self.sx as u128) * (self.sx as u128);
        let var_y = n * self.syy - (self.sy as u128) * (self.sy as u128);
        let (lo, hi) = if var_x < var_y { (var_x, var_y) } else { (var_y, var_x) };
        let balance = libm::sqrt(lo as f64 / hi as f64);

        convexity * smoothness * balance
    }
}

/// Shape regularity criterion: size-weighted mean over regions of
/// convexity (`|S| / |hull|`), hull circularity (`min(1, 4 pi A / P^2)`)
/// and the ratio of the smaller to the larger coordinate standard
/// deviation. Hulls are taken over pixel corners so a full rectangle has
/// convexity 1; single-pixel regions score 1.
pub fn src(labels: &LabelMap) -> f64 {
    let w = labels.width();
    let mut acc = vec![ShapeAccumulator::default(); labels.count()];
    for (p, &l) in labels.labels().iter().enumerate() {
        let (x, y) = ((p % w) as u32, (p / w) as u32);
        let a = &mut acc[l as usize];
        a.n += 1;
        a.sx += x as u64;
        a.sy += y as u64;
        a.sxx += (x as u128) * (x as u128);
        a.syy += (y as u128) * (y as u128);
        match a.rows.last_mut() {
            Some(row) if row.0 == y => {
                row.1 = row.1.min(x);
                row.2 = row.2.max(x);
            }
            _ => a.rows.push((y, x, x)),
        }
    }
    let total = labels.len() as f64;
    acc.iter()
        .map(|a| a.n as f64 / total * a.regularity())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Size-weighted share of each fine region lying in its best coarse region.
/// Exactly `1.0` iff every fine region sits inside one coarse region.
pub fn nestedness(fine: &LabelMap, coarse: &LabelMap) -> Result<f64> {
    same_dims("coarse partition", fine, coarse)?;
    Ok(dominant_overlap(fine, coarse) as f64 / fine.len() as f64)
}

/// Copy of `img` with the partition's boundary pixels painted `color`.
pub fn render_overlay(img: &RgbImage, labels: &LabelMap, color: [u8; 3]) -> Result<RgbImage> {
    labels.expect_dims("label map", img.width(), img.height())?;
    let mask = boundary_mask(labels);
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                out.put_pixel(x, y, color);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub k: usize,
    pub asa: f64,
    pub br: f64,
    pub cd: f64,
    pub src: f64,
    pub nestedness: Option<f64>,
    pub eps: usize,
    pub ground_truths: usize,
}

/// Evaluates one partition. Ground-truth dependent metrics are averaged
/// over `gts`; nestedness is reported when a coarser level is given.
pub fn evaluate(labels: &LabelMap, gts: &[LabelMap], eps: usize, coarser: Option<&LabelMap>) -> Result<MetricsReport> {
    let (mut asa_sum, mut br_sum) = (0.0, 0.0);
    let mask = boundary_mask(labels);
    for gt in gts {
        asa_sum += asa(labels, gt)?;
        br_sum += boundary_recall_masks(&mask, &boundary_mask(gt), eps)?;
    }
    let n = gts.len().max(1) as f64;
    let (asa_mean, br_mean) = if gts.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (asa_sum / n, br_sum / n)
    };
    Ok(MetricsReport {
        k: labels.count(),
        asa: asa_mean,
        br: br_mean,
        cd: mask.count() as f64 / labels.len() as f64,
        src: src(labels),
        nestedness: coarser.map(|c| nestedness(labels, c)).transpose()?,
        eps,
        ground_truths: gts.len(),
    })
}
