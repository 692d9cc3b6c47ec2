//! Object-annotated region adjacency graph.
//!
//! Nodes are regions of a partition carrying their mean feature vector,
//! pixel count, object id and attention. Two regions are adjacent when a
//! pair of 4-neighboring pixels carries their two labels. Merged regions get
//! fresh ids past every existing id, so neighbor lists stay sorted by
//! appending.

use alloc::vec;
use alloc::vec::Vec;

use crate::attention::AttentionMap;
use crate::error::{Error, Result};
use crate::features::PixelFeatureField;
use crate::label::LabelMap;

/// Source of per-region attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionMode {
    #[default]
    Off,
    /// Mean attention over the superpixel's own pixels.
    Superpixel,
    /// Mean attention over all pixels of the superpixel's object.
    Object,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub id: u32,
    pub mu: Vec<f64>,
    pub size: u64,
    pub object: u32,
    pub attention: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub same_object: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    regions: Vec<RegionRecord>,
    neighbors: Vec<Vec<u32>>,
    alive: usize,
}

impl RegionGraph {
    /// Assembles a graph from region records and an undirected edge list.
    ///
    /// Records must be indexed by id. Duplicate and reversed edges collapse.
    pub fn from_parts(regions: Vec<RegionRecord>, edges: &[(u32, u32)]) -> Result<Self> {
        let n = regions.len();
        for (i, r) in regions.iter().enumerate() {
            if r.id as usize != i {
                return Err(Error::LabelOutOfRange {
                    label: r.id,
                    count: n as u32,
                });
            }
            if r.size == 0 {
                return Err(Error::InvalidParams("region size must be positive"));
            }
            if r.mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("region mean"));
            }
            if !(0.0..=1.0).contains(&r.attention) {
                return Err(Error::AttentionRange(r.attention as f32));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            for id in [u, v] {
                if id as usize >= n {
                    return Err(Error::LabelOutOfRange {
                        label: id,
                        count: n as u32,
                    });
                }
            }
            if u != v {
                neighbors[u as usize].push(v);
                neighbors[v as usize].push(u);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let alive = regions.iter().filter(|r| r.alive).count();
        Ok(Self {
            regions,
            neighbors,
            alive,
        })
    }

    pub fn regions(&self) -> &[RegionRecord] {
        &self.regions
    }

    pub fn region(&self, id: u32) -> &RegionRecord {
        &self.regions[id as usize]
    }

    /// Total number of ids ever allocated, dead regions included.
    pub fn id_bound(&self) -> usize {
        self.regions.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.regions.iter().filter(|r| r.alive).map(|r| r.id)
    }

    /// Sorted neighbor ids of `id`.
    pub fn neighbors(&self, id: u32) -> &[u32] {
        &self.neighbors[id as usize]
    }

    pub fn are_adjacent(&self, u: u32, v: u32) -> bool {
        self.neighbors
            .get(u as usize)
            .is_some_and(|n| n.binary_search(&v).is_ok())
    }

    pub fn same_object(&self, u: u32, v: u32) -> bool {
        self.regions[u as usize].object == self.regions[v as usize].object
    }

    /// Every edge once, as `(min id, max id)` in increasing order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.neighbors.iter().enumerate().flat_map(move |(u, list)| {
            let u = u as u32;
            list.iter().filter(move |&&v| v > u).map(move |&v| Edge {
                u,
                v,
                same_object: self.same_object(u, v),
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// True when all alive regions form one connected component.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.alive_ids().next() else {
            return true;
        };
        let mut seen = vec![false; self.regions.len()];
        let mut stack = vec![start];
        seen[start as usize] = true;
        let mut reached = 0;
        while let Some(u) = stack.pop() {
            reached += 1;
            for &v in &self.neighbors[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        reached == self.alive
    }

    /// Merges adjacent alive regions `u` and `v` into a new region and
    /// returns its id.
    ///
    /// The new mean feature and attention are size-weighted means, the size
    /// is the sum, and the object id is the larger operand's (`u` on ties).
    /// Edges of `u` and `v` are rewired to the new region with duplicates
    /// collapsed.
    pub fn merge_regions(&mut self, u: u32, v: u32) -> Result<u32> {
        for id in [u, v] {
            match self.regions.get(id as usize) {
                Some(r) if r.alive => {}
                _ => return Err(Error::DeadRegion(id)),
            }
        }
        if u == v || !self.are_adjacent(u, v) {
            return Err(Error::NotAdjacent(u, v));
        }
        let w = self.regions.len() as u32;
        let merged = merge_records(&self.regions[u as usize], &self.regions[v as usize], w);
        self.regions[u as usize].alive = false;
        self.regions[v as usize].alive = false;
        self.regions.push(merged);

        let nu = core::mem::take(&mut self.neighbors[u as usize]);
        let nv = core::mem::take(&mut self.neighbors[v as usize]);
        let mut nw = Vec::with_capacity(nu.len() + nv.len());
        merge_sorted(&nu, &nv, &mut nw);
        nw.retain(|&x| x != u && x != v);
        for &x in &nw {
            let list = &mut self.neighbors[x as usize];
            list.retain(|&y| y != u && y != v);
            list.push(w);
        }
        self.neighbors.push(nw);
        self.alive -= 1;
        Ok(w)
    }
}

/// Size-weighted fusion of two region records into id `w`.
pub(crate) fn merge_records(a: &RegionRecord, b: &RegionRecord, w: u32) -> RegionRecord {
    let size = a.size + b.size;
    let (sa, sb, s) = (a.size as f64, b.size as f64, size as f64);
    let mu = a.mu.iter().zip(&b.mu).map(|(&x, &y)| (sa * x + sb * y) / s).collect();
    let attention = ((sa * a.attention + sb * b.attention) / s).clamp(0.0, 1.0);
    let object = if b.size > a.size { b.object } else { a.object };
    RegionRecord {
        id: w,
        mu,
        size,
        object,
        attention,
        alive: true,
    }
}

fn merge_sorted(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Per-region mean feature vector and pixel count.
pub fn region_stats(labels: &LabelMap, features: &PixelFeatureField) -> Result<Vec<(Vec<f64>, u64)>> {
    features.expect_dims("feature field", labels.width(), labels.height())?;
    let d = features.channels();
    let n = labels.count();
    let mut sums = vec![0f64; n * d];
    let mut sizes = vec![0u64; n];
    for (p, &l) in labels.labels().iter().enumerate() {
        let l = l as usize;
        sizes[l] += 1;
        for (acc, &f) in sums[l * d..(l + 1) * d].iter_mut().zip(features.pixel(p)) {
            *acc += f;
        }
    }
    Ok(sums
        .chunks_exact(d.max(1))
        .zip(sizes)
        .map(|(sum, size)| (sum.iter().map(|&s| s / size as f64).collect(), size))
        .take(n)
        .collect())
}

/// Object id covering the most pixels of each region; ties go to the
/// smaller object id.
pub fn assign_objects(labels: &LabelMap, objects: &LabelMap) -> Result<Vec<u32>> {
    objects.expect_dims("object map", labels.width(), labels.height())?;
    let m = objects.count() as u64;
    let mut codes: Vec<u64> = labels
        .labels()
        .iter()
        .zip(objects.labels())
        .map(|(&l, &o)| l as u64 * m + o as u64)
        .collect();
    codes.sort_unstable();

    let mut best = vec![(0u64, 0u32); labels.count()];
    let mut i = 0;
    while i < codes.len() {
        let code = codes[i];
        let run = codes[i..].iter().take_while(|&&c| c == code).count();
        let (region, object) = ((code / m) as usize, (code % m) as u32);
        if run as u64 > best[region].0 {
            best[region] = (run as u64, object);
        }
        i += run;
    }
    Ok(best.into_iter().map(|(_, o)| o).collect())
}

/// Per-region attention under `mode`; zeros when `mode` is off.
pub fn region_attention(
    labels: &LabelMap,
    objects: &LabelMap,
    att: &AttentionMap,
    mode: AttentionMode,
) -> Result<Vec<f64>> {
    objects.expect_dims("object map", labels.width(), labels.height())?;
    att.expect_dims("attention map", labels.width(), labels.height())?;
    let means = |map: &LabelMap| {
        let mut sums = vec![0f64; map.count()];
        for (&l, &a) in map.labels().iter().zip(att.values()) {
            sums[l as usize] += a as f64;
        }
        for (s, n) in sums.iter_mut().zip(map.region_sizes()) {
            *s = (*s / n as f64).clamp(0.0, 1.0);
        }
        sums
    };
    Ok(match mode {
        AttentionMode::Off => vec![0.0; labels.count()],
        AttentionMode::Superpixel => means(labels),
        AttentionMode::Object => {
            let per_object = means(objects);
            assign_objects(labels, objects)?
                .into_iter()
                .map(|o| per_object[o as usize])
                .collect()
        }
    })
}

/// Unordered pairs of labels meeting across a horizontal or vertical pixel
/// boundary, sorted.
pub fn adjacent_pairs(labels: &LabelMap) -> Vec<(u32, u32)> {
    let (w, h) = (labels.width(), labels.height());
    let l = labels.labels();
    let mut codes = Vec::new();
    let mut note = |a: u32, b: u32| {
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            codes.push(((lo as u64) << 32) | hi as u64);
        }
    };
    for y in 0..h {
        let row = &l[y * w..(y + 1) * w];
        for x in 0..w {
            if x + 1 < w {
                note(row[x], row[x + 1]);
            }
            if y + 1 < h {
                note(row[x], l[(y + 1) * w + x]);
            }
        }
    }
    codes.sort_unstable();
    codes.dedup();
    codes.into_iter().map(|c| ((c >> 32) as u32, c as u32)).collect()
}

/// Builds the region adjacency graph of a fine partition.
pub fn build_rag(
    labels: &LabelMap,
    objects: &LabelMap,
    features: &PixelFeatureField,
    att: Option<&AttentionMap>,
    mode: AttentionMode,
) -> Result<RegionGraph> {
    let stats = region_stats(labels, features)?;
    let object_ids = assign_objects(labels, objects)?;
    let attention = match (att, mode) {
        (Some(att), mode) if mode != AttentionMode::Off => region_attention(labels, objects, att, mode)?,
        _ => vec![0.0; labels.count()],
    };
    let regions = stats
        .into_iter()
        .zip(object_ids)
        .zip(attention)
        .enumerate()
        .map(|(id, (((mu, size), object), attention))| RegionRecord {
            id: id as u32,
            mu,
            size,
            object,
            attention,
            alive: true,
        })
        .collect();
    RegionGraph::from_parts(regions, &adjacent_pairs(labels))
}
