//! Hierarchical superpixels by object-constrained region merging.
//!
//! Starting from a fine partition of an image into `n_f` superpixels, an
//! object prior map and a per-pixel feature field, [`hierarchy::build_hierarchy`]
//! produces a [`hierarchy::MergeSequence`]: `n_f - 1` pairwise merges that
//! first collapse superpixels inside each object and then merge objects
//! together. Any prefix of that sequence is a partition, so every scale
//! `K in [1, n_f]` can be extracted with [`hierarchy::extract_partition`] and
//! all extracted scales are perfectly nested.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the HTTP service live in the companion `nestseg` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attention;
pub mod error;
pub mod features;
pub mod hierarchy;
pub mod image;
pub mod label;
pub mod metrics;
pub mod rag;
mod union_find;

pub use attention::{AttentionMap, Click, ClickSet, ClickSign};
pub use error::{Error, Result};
pub use features::{FeaturePlanes, PixelFeatureField};
pub use hierarchy::{AttentionMode, AttentionScope, HierarchyParams, MergeRecord, MergeSequence, Phase};
pub use image::RgbImage;
pub use label::LabelMap;
pub use rag::{RegionGraph, RegionRecord};
pub use union_find::UnionFind;
