//! Loading a scene from files and turning it into a merge sequence.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nestseg_core::attention::{clicks_to_attention, resample_attention, AttentionMap, Click};
use nestseg_core::features::{assemble_features, position_planes, rgb_to_lab, PixelFeatureField};
use nestseg_core::hierarchy::{build_hierarchy, AttentionMode, HierarchyParams, MergeSequence, Phase};
use nestseg_core::image::RgbImage;
use nestseg_core::label::{grid_partition, LabelMap};
use nestseg_core::rag::build_rag;

use crate::error::{Error, Result};
use crate::io;

/// Where the fine partition comes from.
#[derive(Debug, Clone)]
pub enum FineSource {
    File(PathBuf),
    Grid(usize),
}

#[derive(Debug, Clone)]
pub struct SceneFiles {
    pub image: PathBuf,
    pub fine: FineSource,
    pub objects: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub attention: Option<PathBuf>,
    pub clicks: Option<PathBuf>,
}

/// Everything a hierarchy build needs, fully validated.
#[derive(Debug, Clone)]
pub struct Scene {
    pub image: RgbImage,
    pub field: PixelFeatureField,
    pub fine: LabelMap,
    pub objects: LabelMap,
    pub base_attention: Option<AttentionMap>,
    pub clicks: Vec<Click>,
}

fn expect_dims(what: &str, labels: &LabelMap, img: &RgbImage) -> Result<()> {
    if labels.same_dims(img.width(), img.height()) {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "{what} is {}x{}, image is {}x{}",
            labels.width(),
            labels.height(),
            img.width(),
            img.height()
        )))
    }
}

impl Scene {
    pub fn load(files: &SceneFiles) -> Result<Self> {
        let image = io::load_image(&files.image)?;
        let (w, h) = (image.width(), image.height());
        let fine = match &files.fine {
            FineSource::File(path) => io::load_label_map(path)?,
            FineSource::Grid(n) => grid_partition(w, h, *n)?,
        };
        expect_dims("fine partition", &fine, &image)?;
        let objects = match &files.objects {
            Some(path) => io::load_label_map(path)?,
            None => LabelMap::uniform(w, h)?,
        };
        expect_dims("object map", &objects, &image)?;
        let deep = files
            .features
            .as_ref()
            .map(|p| io::load_feature_tensor(p, w, h))
            .transpose()?;
        let base_attention = files
            .attention
            .as_ref()
            .map(|p| io::load_attention(p).and_then(|a| Ok(resample_attention(&a, w, h)?)))
            .transpose()?;
        let clicks = files
            .clicks
            .as_ref()
            .map(|p| io::load_clicks(p))
            .transpose()?
            .unwrap_or_default();
        let field = assemble_features(&rgb_to_lab(&image), &position_planes(w, h)?, deep.as_ref())?;
        let scene = Scene {
            image,
            field,
            fine,
            objects,
            base_attention,
            clicks,
        };
        // surface out-of-bounds clicks at load time
        scene.attention_with(&scene.clicks)?;
        Ok(scene)
    }

    /// True when an attention map or clicks are available.
    pub fn has_attention_source(&self) -> bool {
        self.base_attention.is_some() || !self.clicks.is_empty()
    }

    /// Base attention with `clicks` stamped on, or `None` without any
    /// attention source.
    pub fn attention_with(&self, clicks: &[Click]) -> Result<Option<AttentionMap>> {
        if self.base_attention.is_none() && clicks.is_empty() {
            return Ok(None);
        }
        let (w, h) = (self.image.width(), self.image.height());
        Ok(Some(clicks_to_attention(clicks, self.base_attention.as_ref(), w, h)?))
    }

    pub fn build(&self, clicks: &[Click], params: &HierarchyParams) -> Result<BuildOutcome> {
        let start = Instant::now();
        let attention = self.attention_with(clicks)?;
        let mode = if attention.is_some() {
            params.attention_mode
        } else {
            AttentionMode::Off
        };
        let graph = build_rag(&self.fine, &self.objects, &self.field, attention.as_ref(), mode)?;
        let seq = build_hierarchy(&graph, params)?;
        Ok(BuildOutcome {
            seq,
            attention,
            elapsed: start.elapsed(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub seq: MergeSequence,
    pub attention: Option<AttentionMap>,
    pub elapsed: Duration,
}

impl BuildOutcome {
    /// (phase-1 merges, phase-2 merges)
    pub fn phase_counts(&self) -> (usize, usize) {
        let intra = self.seq.records.iter().filter(|r| r.phase == Phase::Intra).count();
        (intra, self.seq.records.len() - intra)
    }
}
