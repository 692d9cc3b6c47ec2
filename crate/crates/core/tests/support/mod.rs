//! Shared test fixtures: random instance generation and a naive
//! full-rescan agglomeration used as the reference for the engine.
#![allow(dead_code)]

use nestseg_core::attention::AttentionMap;
use nestseg_core::features::PixelFeatureField;
use nestseg_core::hierarchy::{AttentionMode, AttentionScope, HierarchyParams, Phase};
use nestseg_core::label::LabelMap;
use nestseg_core::rag::{build_rag, RegionGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nearest-seed (Voronoi) labeling with `n` random seeds; labels compacted.
pub fn voronoi(rng: &mut impl Rng, w: usize, h: usize, n: usize) -> LabelMap {
    let seeds: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64)))
        .collect();
    let labels = (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as f64 + 0.5, (p / w) as f64 + 0.5);
            seeds
                .iter()
                .enumerate()
                .map(|(i, &(sx, sy))| (i, (sx - x).powi(2) + (sy - y).powi(2)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0 as u32
        })
        .collect();
    LabelMap::from_raw_compacting(w, h, labels).unwrap()
}

/// Fine partition that refines `objects`: the intersection of a Voronoi
/// tessellation with the object map.
pub fn object_aligned(rng: &mut impl Rng, objects: &LabelMap, n: usize) -> LabelMap {
    let cells = voronoi(rng, objects.width(), objects.height(), n);
    let m = objects.count() as u32;
    let raw = cells
        .labels()
        .iter()
        .zip(objects.labels())
        .map(|(&c, &o)| c * m + o)
        .collect();
    LabelMap::from_raw_compacting(objects.width(), objects.height(), raw).unwrap()
}

/// Random field with true normalized positions in channels 3 and 4.
pub fn random_field(rng: &mut impl Rng, w: usize, h: usize, d: usize) -> PixelFeatureField {
    let mut data = Vec::with_capacity(w * h * d);
    for p in 0..w * h {
        let (x, y) = (p % w, p / w);
        for c in 0..d {
            data.push(match c {
                3 => {
                    if w > 1 {
                        x as f64 / (w - 1) as f64
                    } else {
                        0.0
                    }
                }
                4 => {
                    if h > 1 {
                        y as f64 / (h - 1) as f64
                    } else {
                        0.0
                    }
                }
                _ => rng.random::<f64>(),
            });
        }
    }
    PixelFeatureField::from_pixel_major(w, h, d, data).unwrap()
}

pub fn random_attention(rng: &mut impl Rng, w: usize, h: usize) -> AttentionMap {
    AttentionMap::new(w, h, (0..w * h).map(|_| rng.random::<f32>()).collect()).unwrap()
}

pub struct Instance {
    pub fine: LabelMap,
    pub objects: LabelMap,
    pub field: PixelFeatureField,
    pub attention: Option<AttentionMap>,
    pub params: HierarchyParams,
}

impl Instance {
    pub fn graph(&self) -> RegionGraph {
        build_rag(
            &self.fine,
            &self.objects,
            &self.field,
            self.attention.as_ref(),
            self.params.attention_mode,
        )
        .unwrap()
    }
}

/// Random small instance with at most `max_regions` fine regions.
pub fn random_instance(rng: &mut impl Rng, max_regions: usize) -> Instance {
    let w = rng.random_range(6..16);
    let h = rng.random_range(6..16);
    let n = rng.random_range(2..=max_regions);
    let fine = voronoi(rng, w, h, n);
    let m = rng.random_range(1..5);
    let objects = voronoi(rng, w, h, m);
    let d = *[5usize, 6, 8].get(rng.random_range(0..3)).unwrap();
    let field = random_field(rng, w, h, d);
    let w_pos = [0.0, 1.0, 5.0, 10.0][rng.random_range(0..4)];
    let w_att = [0.0, 0.5][rng.random_range(0..2)];
    let mode = [AttentionMode::Superpixel, AttentionMode::Object][rng.random_range(0..2)];
    let attention = (w_att > 0.0).then(|| random_attention(rng, w, h));
    Instance {
        fine,
        objects,
        field,
        attention,
        params: HierarchyParams {
            w_pos,
            w_att,
            attention_mode: if w_att > 0.0 { mode } else { AttentionMode::Off },
            attention_scope: AttentionScope::Both,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveMerge {
    pub u: u32,
    pub v: u32,
    pub cost: f64,
    pub phase: Phase,
}

struct NaiveRegion {
    mu: Vec<f64>,
    size: u64,
    object: u32,
    attention: f64,
}

fn sq(a: f64) -> f64 {
    a * a
}

/// Reference agglomeration: every step rediscovers adjacency from the pixel
/// grid and evaluates every adjacent pair from scratch.
///
/// Starts from the region records of `graph` (means, sizes, objects,
/// attention); nothing else of the engine is used.
pub fn naive_hierarchy(fine: &LabelMap, graph: &RegionGraph, params: &HierarchyParams) -> Vec<NaiveMerge> {
    let (w, h) = (fine.width(), fine.height());
    let n_f = fine.count();
    let mut regions: Vec<Option<NaiveRegion>> = graph
        .regions()
        .iter()
        .map(|r| {
            Some(NaiveRegion {
                mu: r.mu.clone(),
                size: r.size,
                object: r.object,
                attention: r.attention,
            })
        })
        .collect();
    let mut owner: Vec<u32> = fine.labels().to_vec();
    let att_phase1 = matches!(
        params.attention_scope,
        AttentionScope::Both | AttentionScope::IntraObject
    );
    let att_phase2 = matches!(
        params.attention_scope,
        AttentionScope::Both | AttentionScope::InterObject
    );
    let mut merges = Vec::new();

    while regions.iter().filter(|r| r.is_some()).count() > 1 {
        let s = regions.iter().filter(|r| r.is_some()).count();
        let mut pairs = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let a = owner[y * w + x];
                for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                    if nx < w && ny < h {
                        let b = owner[ny * w + nx];
                        if a != b {
                            pairs.push((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let get = |id: u32| regions[id as usize].as_ref().unwrap();
        let intra: Vec<(u32, u32)> = pairs
            .iter()
            .copied()
            .filter(|&(a, b)| get(a).object == get(b).object)
            .collect();
        let phase = if intra.is_empty() { Phase::Inter } else { Phase::Intra };
        let weight = params.w_pos * (s as f64 / n_f as f64).sqrt();

        let mut best: Option<(f64, u32, u32)> = None;
        for &(a, b) in if intra.is_empty() { &pairs } else { &intra } {
            let (ra, rb) = (get(a), get(b));
            let mut appearance = 0.0;
            let mut spatial = 0.0;
            for c in 0..ra.mu.len() {
                if c == 3 || c == 4 {
                    spatial += sq(ra.mu[c] - rb.mu[c]);
                } else {
                    appearance += sq(ra.mu[c] - rb.mu[c]);
                }
            }
            let attention = params.w_att * ra.attention.max(rb.attention);
            let cost = match phase {
                Phase::Intra => {
                    let c = appearance + weight * spatial;
                    if att_phase1 {
                        c + attention
                    } else {
                        c
                    }
                }
                Phase::Inter => {
                    let (sa, sb) = (ra.size as f64, rb.size as f64);
                    let c = sa * sb / (sa + sb) * appearance;
                    if att_phase2 {
                        c + attention
                    } else {
                        c
                    }
                }
            };
            let better = match best {
                None => true,
                Some((bc, ba, bb)) => cost < bc || (cost == bc && (a, b) < (ba, bb)),
            };
            if better {
                best = Some((cost, a, b));
            }
        }
        let (cost, a, b) = best.expect("pixel grid is connected");
        let ra = regions[a as usize].take().unwrap();
        let rb = regions[b as usize].take().unwrap();
        let size = ra.size + rb.size;
        let (sa, sb, st) = (ra.size as f64, rb.size as f64, size as f64);
        let merged = NaiveRegion {
            mu: ra
                .mu
                .iter()
                .zip(&rb.mu)
                .map(|(&x, &y)| (sa * x + sb * y) / st)
                .collect(),
            size,
            object: if rb.size > ra.size { rb.object } else { ra.object },
            attention: ((sa * ra.attention + sb * rb.attention) / st).clamp(0.0, 1.0),
        };
        let new_id = regions.len() as u32;
        regions.push(Some(merged));
        for o in owner.iter_mut() {
            if *o == a || *o == b {
                *o = new_id;
            }
        }
        merges.push(NaiveMerge {
            u: a,
            v: b,
            cost,
            phase,
        });
    }
    merges
}

/// Number of connected components of the same-object subgraph, i.e. the
/// region count at which phase 1 must stop.
pub fn same_object_components(graph: &RegionGraph) -> usize {
    let n = graph.id_bound();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = n;
    for e in graph.edges().filter(|e| e.same_object) {
        let (a, b) = (find(&mut parent, e.u as usize), find(&mut parent, e.v as usize));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}
