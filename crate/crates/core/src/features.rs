//! Per-pixel feature assembly: CIELAB color, normalized position and
//! optional deep feature channels, concatenated in that order.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Number of color channels leading every feature vector.
pub const COLOR_CHANNELS: usize = 3;
/// Number of position channels following the color channels.
pub const POSITION_CHANNELS: usize = 2;
/// Channel range holding the normalized (x, y) position.
pub const POSITION_RANGE: Range<usize> = COLOR_CHANNELS..COLOR_CHANNELS + POSITION_CHANNELS;

/// A stack of same-sized scalar planes, plane-major (`data[c * w * h + p]`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlanes {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeaturePlanes {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature planes"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    fn expect_dims(&self, what: &'static str, width: usize, height: usize) -> Result<()> {
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

/// Combined `d`-channel feature vector per pixel, pixel-major
/// (`data[p * d + c]`): color, then position, then deep channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelFeatureField {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl PixelFeatureField {
    /// Builds a field directly from pixel-major values.
    pub fn from_pixel_major(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if channels < COLOR_CHANNELS + POSITION_CHANNELS {
            return Err(Error::TooFewChannels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature field"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    /// Extracts `range` back into plane-major form.
    pub fn planes(&self, range: Range<usize>) -> FeaturePlanes {
        let n = self.width * self.height;
        let mut data = Vec::with_capacity(n * range.len());
        for c in range.clone() {
            data.extend((0..n).map(|p| self.data[p * self.channels + c] as f32));
        }
        FeaturePlanes {
            width: self.width,
            height: self.height,
            channels: range.len(),
            data,
        }
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

// D65 reference white, XYZ scaled so Y = 1.
const WHITE_X: f64 = 0.950_47;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.088_83;

fn srgb_to_linear(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        libm::pow((c + 0.055) / 1.055, 2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        libm::cbrt(t)
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one sRGB triple to CIELAB (D65), unscaled: `L in [0, 100]`.
pub fn srgb_to_lab([r, g, b]: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let (fx, fy, fz) = (lab_f(x / WHITE_X), lab_f(y / WHITE_Y), lab_f(z / WHITE_Z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// CIELAB planes rescaled to `[0, 1]`: `L / 100` and `(a + 128) / 255`,
/// `(b + 128) / 255`.
pub fn rgb_to_lab(img: &RgbImage) -> FeaturePlanes {
    let n = img.width() * img.height();
    let mut data = vec![0f32; 3 * n];
    for (p, rgb) in img.pixels().enumerate() {
        let [l, a, b] = srgb_to_lab(rgb);
        data[p] = (l / 100.0).clamp(0.0, 1.0) as f32;
        data[n + p] = ((a + 128.0) / 255.0).clamp(0.0, 1.0) as f32;
        data[2 * n + p] = ((b + 128.0) / 255.0).clamp(0.0, 1.0) as f32;
    }
    FeaturePlanes {
        width: img.width(),
        height: img.height(),
        channels: 3,
        data,
    }
}

/// Normalized pixel coordinates: `x / (width - 1)` and `y / (height - 1)`,
/// zero along a degenerate axis.
pub fn position_planes(width: usize, height: usize) -> Result<FeaturePlanes> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    let n = width * height;
    let mut data = vec![0f32; 2 * n];
    let norm = |i: usize, len: usize| {
        if len > 1 {
            (i as f64 / (len - 1) as f64) as f32
        } else {
            0.0
        }
    };
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            data[p] = norm(x, width);
            data[n + p] = norm(y, height);
        }
    }
    Ok(FeaturePlanes {
        width,
        height,
        channels: 2,
        data,
    })
}

/// Concatenates `[color(3), position(2), deep(d - 5)]` into a pixel-major field.
pub fn assemble_features(
    lab: &FeaturePlanes,
    pos: &FeaturePlanes,
    deep: Option<&FeaturePlanes>,
) -> Result<PixelFeatureField> {
    if lab.channels != COLOR_CHANNELS {
        return Err(Error::BufferLength {
            expected: COLOR_CHANNELS,
            actual: lab.channels,
        });
    }
    if pos.channels != POSITION_CHANNELS {
        return Err(Error::BufferLength {
            expected: POSITION_CHANNELS,
            actual: pos.channels,
        });
    }
    let (w, h) = (lab.width, lab.height);
    pos.expect_dims("position planes", w, h)?;
    if let Some(deep) = deep {
        deep.expect_dims("deep feature planes", w, h)?;
    }

    let stacks: Vec<&FeaturePlanes> = [Some(lab), Some(pos), deep].into_iter().flatten().collect();
    let d: usize = stacks.iter().map(|s| s.channels).sum();
    let n = w * h;
    let mut data = vec![0f64; n * d];
    let mut offset = 0;
    for stack in stacks {
        for c in 0..stack.channels {
            for (p, &v) in stack.plane(c).iter().enumerate() {
                data[p * d + offset + c] = v as f64;
            }
        }
        offset += stack.channels;
    }
    PixelFeatureField::from_pixel_major(w, h, d, data)
}

/// Color and position only (`d = 5`).
pub fn color_position_features(img: &RgbImage) -> PixelFeatureField {
    let lab = rgb_to_lab(img);
    let pos = position_planes(img.width(), img.height()).expect("image is non-empty");
    assemble_features(&lab, &pos, None).expect("planes share image dimensions")
}
