//! Raster, label map, feature tensor, attention and click file formats.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma};
use nestseg_core::attention::{AttentionMap, Click, ClickSet, ClickSign};
use nestseg_core::features::FeaturePlanes;
use nestseg_core::image::RgbImage;
use nestseg_core::label::LabelMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HSPF_MAGIC: &[u8; 4] = b"HSPF";
const HSPF_HEADER: usize = 16;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a sibling temporary file so a failed write leaves no
/// partial output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn decode(path: &Path, bytes: &[u8]) -> Result<DynamicImage> {
    let decode_err = |source| Error::Decode {
        path: path.to_path_buf(),
        source,
    };
    ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(decode_err)
}

pub fn load_image(path: &Path) -> Result<RgbImage> {
    let img = decode(path, &read(path)?)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(RgbImage::new(w, h, img.into_raw())?)
}

fn png_bytes(img: DynamicImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("buffer length checked by RgbImage");
    png_bytes(DynamicImage::ImageRgb8(buf))
}

pub fn save_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    write_atomic(path, &encode_rgb_png(img)?)
}

/// 16-bit single-channel PNG, pixel value = label.
pub fn encode_label_png(labels: &LabelMap) -> Result<Vec<u8>> {
    if labels.count() > 1 << 16 {
        return Err(Error::TooManyLabels(labels.count()));
    }
    let data: Vec<u16> = labels.labels().iter().map(|&l| l as u16).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(labels.width() as u32, labels.height() as u32, data)
            .expect("buffer length checked by LabelMap");
    png_bytes(DynamicImage::ImageLuma16(buf))
}

pub fn save_label_map(path: &Path, labels: &LabelMap) -> Result<()> {
    write_atomic(path, &encode_label_png(labels)?)
}

/// Decodes an 8- or 16-bit single-channel label image. Labels that are not
/// contiguous are compacted in increasing value order.
pub fn decode_label_png(path: &Path, bytes: &[u8]) -> Result<LabelMap> {
    let img = decode(path, bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw: Vec<u32> = match img {
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(Error::NotGrayscale {
                path: path.to_path_buf(),
                color: other.color(),
            })
        }
    };
    Ok(LabelMap::from_raw_compacting(w, h, raw)?)
}

pub fn load_label_map(path: &Path) -> Result<LabelMap> {
    decode_label_png(path, &read(path)?)
}

/// 8- or 16-bit single-channel PNG scaled by its maximum code value.
pub fn load_attention(path: &Path) -> Result<AttentionMap> {
    let img = decode(path, &read(path)?)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f32> = match img {
        DynamicImage::ImageLuma16(b) => b.into_raw().into_iter().map(|v| v as f32 / 65535.0).collect(),
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
        other => {
            return Err(Error::NotGrayscale {
                path: path.to_path_buf(),
                color: other.color(),
            })
        }
    };
    Ok(AttentionMap::new(w, h, values)?)
}

pub fn encode_attention_png(att: &AttentionMap) -> Result<Vec<u8>> {
    let data = att
        .values()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let buf = image::GrayImage::from_raw(att.width() as u32, att.height() as u32, data)
        .expect("buffer length checked by AttentionMap");
    png_bytes(DynamicImage::ImageLuma8(buf))
}

/// Parses an HSPF tensor: `"HSPF"`, little-endian `u32` width, height and
/// channel count, then each channel as a row-major `f32` plane.
pub fn decode_hspf(bytes: &[u8], width: usize, height: usize) -> Result<FeaturePlanes> {
    if bytes.len() < HSPF_HEADER {
        return Err(Error::Truncated {
            expected: HSPF_HEADER,
            actual: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != HSPF_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (w, h, channels) = (word(1), word(2), word(3));
    if (w, h) != (width, height) {
        return Err(Error::TensorDimensions {
            expected_w: width,
            expected_h: height,
            found_w: w,
            found_h: h,
        });
    }
    let expected = HSPF_HEADER + 4 * w * h * channels;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Invalid(format!(
            "feature tensor has {} trailing bytes",
            bytes.len() - expected
        )));
    }
    let data = bytes[HSPF_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FeaturePlanes::new(w, h, channels, data)?)
}

pub fn encode_hspf(planes: &FeaturePlanes) -> Vec<u8> {
    let mut out = Vec::with_capacity(HSPF_HEADER + 4 * planes.data().len());
    out.extend_from_slice(HSPF_MAGIC);
    for v in [planes.width(), planes.height(), planes.channels()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in planes.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn load_feature_tensor(path: &Path, width: usize, height: usize) -> Result<FeaturePlanes> {
    decode_hspf(&read(path)?, width, height)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub x: usize,
    pub y: usize,
    pub sign: SignRecord,
    #[serde(default = "default_strength")]
    pub strength: f64,
}

fn default_strength() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignRecord {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl From<ClickRecord> for Click {
    fn from(c: ClickRecord) -> Self {
        Click {
            x: c.x,
            y: c.y,
            sign: match c.sign {
                SignRecord::Positive => ClickSign::Positive,
                SignRecord::Negative => ClickSign::Negative,
            },
            strength: c.strength,
        }
    }
}

impl From<&Click> for ClickRecord {
    fn from(c: &Click) -> Self {
        ClickRecord {
            x: c.x,
            y: c.y,
            sign: match c.sign {
                ClickSign::Positive => SignRecord::Positive,
                ClickSign::Negative => SignRecord::Negative,
            },
            strength: c.strength,
        }
    }
}

pub fn parse_clicks(json: &str) -> std::result::Result<ClickSet, serde_json::Error> {
    let records: Vec<ClickRecord> = serde_json::from_str(json)?;
    Ok(records.into_iter().map(Click::from).collect())
}

pub fn load_clicks(path: &Path) -> Result<ClickSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clicks(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn clicks_to_json(clicks: &[Click]) -> String {
    let records: Vec<ClickRecord> = clicks.iter().map(ClickRecord::from).collect();
    serde_json::to_string(&records).expect("click records always serialize")
}
