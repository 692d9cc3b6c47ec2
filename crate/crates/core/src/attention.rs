//! Saliency maps, either loaded from a precomputed source or rasterized
//! from user clicks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Per-pixel saliency in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl AttentionMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if values.len() != width * height {
            return Err(Error::BufferLength {
                expected: width * height,
                actual: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::AttentionRange(bad));
        }
        Ok(Self { width, height, values })
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub(crate) fn expect_dims(&self, what: &'static str, width: usize, height: usize) -> Result<()> {
        if self.width == width && self.height == height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected_w: width,
                expected_h: height,
                found_w: self.width,
                found_h: self.height,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickSign {
    Positive,
    Negative,
}

impl ClickSign {
    fn factor(self) -> f64 {
        match self {
            ClickSign::Positive => 1.0,
            ClickSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Click {
    pub x: usize,
    pub y: usize,
    pub sign: ClickSign,
    pub strength: f64,
}

pub type ClickSet = Vec<Click>;

/// Footprint of a click, as a fraction of the image diagonal.
pub const CLICK_SIGMA_FRACTION: f64 = 0.05;

/// Maps target coordinate `i` onto the source axis with aligned end samples.
fn source_coord(i: usize, dst: usize, src: usize) -> f64 {
    if dst <= 1 {
        (src - 1) as f64 / 2.0
    } else {
        i as f64 * (src - 1) as f64 / (dst - 1) as f64
    }
}

/// Bilinear resampling to `width x height`, end samples aligned with the
/// source corners, clamped to `[0, 1]`.
pub fn resample_attention(raw: &AttentionMap, width: usize, height: usize) -> Result<AttentionMap> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if raw.width == width && raw.height == height {
        return Ok(raw.clone());
    }
    let (sw, sh) = (raw.width, raw.height);
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        let fy = source_coord(y, height, sh);
        let y0 = (libm::floor(fy) as usize).min(sh - 1);
        let y1 = (y0 + 1).min(sh - 1);
        let ty = fy - y0 as f64;
        for x in 0..width {
            let fx = source_coord(x, width, sw);
            let x0 = (libm::floor(fx) as usize).min(sw - 1);
            let x1 = (x0 + 1).min(sw - 1);
            let tx = fx - x0 as f64;
            let at = |xx: usize, yy: usize| raw.values[yy * sw + xx] as f64;
            let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
            let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
            let v = top * (1.0 - ty) + bottom * ty;
            values.push(v.clamp(0.0, 1.0) as f32);
        }
    }
    AttentionMap::new(width, height, values)
}

/// Rasterizes clicks as signed gaussian stamps (sigma = 5% of the image
/// diagonal) added onto `base`, or onto zeros, then clamps to `[0, 1]`.
pub fn clicks_to_attention(
    clicks: &[Click],
    base: Option<&AttentionMap>,
    width: usize,
    height: usize,
) -> Result<AttentionMap> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if let Some(base) = base {
        base.expect_dims("base attention", width, height)?;
    }
    for c in clicks {
        if c.x >= width || c.y >= height {
            return Err(Error::ClickOutOfBounds {
                x: c.x,
                y: c.y,
                width,
                height,
            });
        }
        if !(c.strength.is_finite() && c.strength > 0.0) {
            return Err(Error::ClickStrength(c.strength));
        }
    }
    if clicks.is_empty() {
        return match base {
            Some(b) => Ok(b.clone()),
            None => AttentionMap::constant(width, height, 0.0),
        };
    }

    let mut acc: Vec<f64> = match base {
        Some(b) => b.values.iter().map(|&v| v as f64).collect(),
        None => vec![0.0; width * height],
    };
    let diag = libm::sqrt((width * width + height * height) as f64);
    let sigma = CLICK_SIGMA_FRACTION * diag;
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    for c in clicks {
        let amp = c.sign.factor() * c.strength;
        for y in 0..height {
            let dy = y as f64 - c.y as f64;
            for x in 0..width {
                let dx = x as f64 - c.x as f64;
                acc[y * width + x] += amp * libm::exp(-(dx * dx + dy * dy) * inv_two_var);
            }
        }
    }
    let values = acc.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect();
    AttentionMap::new(width, height, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn click(x: usize, y: usize, sign: ClickSign) -> Click {
        Click {
            x,
            y,
            sign,
            strength: 1.0,
        }
    }

    #[test]
    fn constant_survives_resize() {
        let raw = AttentionMap::constant(5, 3, 0.7).unwrap();
        let out = resample_attention(&raw, 17, 11).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.7).abs() < 1e-6));
    }

    #[test]
    fn single_sample_broadcast() {
        let raw = AttentionMap::constant(1, 1, 0.3).unwrap();
        let out = resample_attention(&raw, 4, 6).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn bilinear_midpoint() {
        let raw = AttentionMap::new(2, 1, vec![0.0, 1.0]).unwrap();
        let out = resample_attention(&raw, 3, 1).unwrap();
        assert_eq!(out.values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert_eq!(
            AttentionMap::new(1, 1, vec![1.5]).unwrap_err(),
            Error::AttentionRange(1.5)
        );
    }

    #[test]
    fn no_clicks_no_base_is_zero() {
        let out = clicks_to_attention(&[], None, 8, 8).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_clicks_keeps_base() {
        let base = AttentionMap::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(clicks_to_attention(&[], Some(&base), 2, 2).unwrap(), base);
    }

    #[test]
    fn positive_click_peaks_at_one() {
        let out = clicks_to_attention(&[click(10, 10, ClickSign::Positive)], None, 21, 21).unwrap();
        assert_eq!(out.get(10, 10), 1.0);
        assert!(out.get(0, 0) < out.get(5, 5));
        assert!(out.get(5, 5) < 1.0);
    }

    #[test]
    fn opposite_clicks_cancel() {
        let clicks = [click(4, 4, ClickSign::Positive), click(4, 4, ClickSign::Negative)];
        let out = clicks_to_attention(&clicks, None, 9, 9).unwrap();
        assert_eq!(out.get(4, 4), 0.0);
    }

    #[test]
    fn negative_click_lowers_base() {
        let base = AttentionMap::constant(100, 100, 0.8).unwrap();
        let out = clicks_to_attention(&[click(50, 50, ClickSign::Negative)], Some(&base), 100, 100).unwrap();
        assert_eq!(out.get(50, 50), 0.0);
        // sigma is about 7 px here
        assert!(out.get(57, 50) > 0.0 && out.get(57, 50) < 0.8);
        assert_eq!(out.get(0, 0), 0.8);
    }

    #[test]
    fn out_of_bounds_click() {
        let err = clicks_to_attention(&[click(9, 0, ClickSign::Positive)], None, 9, 9).unwrap_err();
        assert!(matches!(err, Error::ClickOutOfBounds { x: 9, .. }));
    }
}
