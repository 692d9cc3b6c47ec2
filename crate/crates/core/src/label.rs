//! Per-pixel region labelings.
//!
//! A [`LabelMap`] always carries contiguous labels: every id in `[0, count)`
//! occurs at least once. The same type holds fine partitions, object prior
//! maps, ground truths and extracted partitions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelMap {
    /// Wraps `labels`, rejecting maps whose ids are not exactly `[0, count)`.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_buffer(width, height, labels.len())?;
        let max = labels.iter().copied().max().unwrap_or(0);
        let count = max + 1;
        let mut seen = vec![false; count as usize];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::NonContiguousLabels {
                missing: missing as u32,
                count,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
            count,
        })
    }

    /// Accepts arbitrary ids and compacts them to `[0, count)`.
    ///
    /// Already contiguous input is returned unchanged; otherwise ids are
    /// renumbered in increasing value order.
    pub fn from_raw_compacting(width: usize, height: usize, mut labels: Vec<u32>) -> Result<Self> {
        check_buffer(width, height, labels.len())?;
        let mut distinct = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let contiguous = distinct.last().map(|&m| m as usize + 1) == Some(distinct.len());
        if !contiguous {
            for l in labels.iter_mut() {
                *l = distinct.binary_search(l).unwrap_or_default() as u32;
            }
        }
        let count = distinct.len() as u32;
        Ok(Self {
            width,
            height,
            labels,
            count,
        })
    }

    /// Renumbers regions in order of first pixel occurrence (row-major).
    pub fn from_raw_first_occurrence(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_buffer(width, height, labels.len())?;
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![u32::MAX; max + 1];
        let mut next = 0u32;
        let labels = labels
            .into_iter()
            .map(|l| {
                let slot = &mut remap[l as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            count: next,
        })
    }

    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct regions.
    pub fn count(&self) -> usize {
        self.count as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn region_sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0u64; self.count()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }

    pub(crate) fn expect_dims(&self, what: &'static str, width: usize, height: usize) -> Result<()> {
        if self.same_dims(width, height) {
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

fn check_buffer(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if len != width * height {
        return Err(Error::BufferLength {
            expected: width * height,
            actual: len,
        });
    }
    Ok(())
}

/// Column boundaries splitting `len` pixels into `parts` near-equal spans.
fn spans(len: usize, parts: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..parts).map(move |i| (i * len / parts, (i + 1) * len / parts))
}

/// Regular grid fallback for when no fine partition is supplied.
///
/// Lays out `cols = ceil(sqrt(n * width / height))` columns and
/// `ceil(n / cols)` rows, then widens the cells of the last row so exactly
/// `n` rectangular regions remain. Labels are row-major cell order.
pub fn grid_partition(width: usize, height: usize, n: usize) -> Result<LabelMap> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    let total = width * height;
    if n == 0 || n > total {
        return Err(Error::RegionCountOutOfRange {
            requested: n,
            max: total,
        });
    }
    let ideal = libm::sqrt(n as f64 * width as f64 / height as f64);
    let cols = (libm::ceil(ideal) as usize).clamp(1, width);
    let rows = n.div_ceil(cols);
    debug_assert!(rows <= height);
    let last_cols = n - (rows - 1) * cols;

    let mut labels = vec![0u32; total];
    let mut next = 0u32;
    for (row, (y0, y1)) in spans(height, rows).enumerate() {
        let ncols = if row + 1 == rows { last_cols } else { cols };
        for (x0, x1) in spans(width, ncols) {
            for y in y0..y1 {
                labels[y * width + x0..y * width + x1].fill(next);
            }
            next += 1;
        }
    }
    debug_assert_eq!(next as usize, n);
    LabelMap::new(width, height, labels)
}
