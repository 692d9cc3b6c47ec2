//! Two-phase agglomeration over a region adjacency graph.
//!
//! Phase 1 only merges adjacent regions of the same object, ranking pairs by
//! appearance distance plus a spatial distance whose weight shrinks as
//! `sqrt(s / n_f)` with the current region count `s`. Phase 2 merges
//! whatever remains with a Ward-style, size-weighted appearance cost. An
//! optional attention term `w_att * max(a_u, a_v)` delays merges of salient
//! regions.
//!
//! Both phases always pick the globally cheapest admissible pair, ties
//! broken by `(cost, min id, max id)`. Phase 1 costs move with `s` after
//! every merge, so the engine caches the `s`-independent parts of each
//! candidate and rescans them per step; phase 2 costs are static and go
//! through a lazy-deletion binary heap.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::error::{Error, Result};
use crate::features::POSITION_RANGE;
use crate::label::LabelMap;
use crate::rag::{RegionGraph, RegionRecord};
use crate::union_find::UnionFind;

pub use crate::rag::AttentionMode;

/// Which phases the attention term applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionScope {
    #[default]
    Both,
    IntraObject,
    InterObject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyParams {
    /// Spatial weight coefficient.
    pub w_pos: f64,
    /// Attention weight; zero disables the attention term.
    pub w_att: f64,
    pub attention_mode: AttentionMode,
    pub attention_scope: AttentionScope,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        Self {
            w_pos: 5.0,
            w_att: 0.0,
            attention_mode: AttentionMode::Off,
            attention_scope: AttentionScope::Both,
        }
    }
}

impl HierarchyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_pos.is_finite() && self.w_pos >= 0.0) {
            return Err(Error::InvalidParams("w_pos must be finite and non-negative"));
        }
        if !(self.w_att.is_finite() && self.w_att >= 0.0) {
            return Err(Error::InvalidParams("w_att must be finite and non-negative"));
        }
        Ok(())
    }

    fn attention_in(&self, phase: Phase) -> bool {
        matches!(
            (self.attention_scope, phase),
            (AttentionScope::Both, _)
                | (AttentionScope::IntraObject, Phase::Intra)
                | (AttentionScope::InterObject, Phase::Inter)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    /// Merges inside one object.
    Intra = 1,
    /// Merges across objects.
    Inter = 2,
}

impl Phase {
    pub fn number(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRecord {
    pub u: u32,
    pub v: u32,
    pub w: u32,
    pub cost: f64,
    pub phase: Phase,
    /// Region count once this merge is applied.
    pub level_after: usize,
}

/// Ordered merges taking `n_f` regions down to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeSequence {
    pub n_f: usize,
    pub params: HierarchyParams,
    pub records: Vec<MergeRecord>,
}

impl MergeSequence {
    /// Checks the structural invariants: `n_f - 1` records, fresh ids
    /// `w = n_f + index`, each id consumed at most once, operands already
    /// existing, and phase 1 strictly before phase 2.
    pub fn validate(&self) -> Result<()> {
        if self.n_f == 0 {
            return Err(Error::SequenceMismatch("n_f must be at least 1"));
        }
        if self.records.len() != self.n_f - 1 {
            return Err(Error::SequenceMismatch("expected exactly n_f - 1 merges"));
        }
        let mut consumed = vec![false; 2 * self.n_f - 1];
        let mut in_phase2 = false;
        for (i, r) in self.records.iter().enumerate() {
            if r.w as usize != self.n_f + i {
                return Err(Error::SequenceMismatch("merge ids must be n_f + index"));
            }
            if r.u == r.v || r.u >= r.w || r.v >= r.w {
                return Err(Error::SequenceMismatch("merge operands must be distinct earlier ids"));
            }
            for id in [r.u, r.v] {
                if core::mem::replace(&mut consumed[id as usize], true) {
                    return Err(Error::SequenceMismatch("region merged twice"));
                }
            }
            if r.level_after != self.n_f - (i + 1) {
                return Err(Error::SequenceMismatch("level_after disagrees with merge index"));
            }
            match r.phase {
                Phase::Inter => in_phase2 = true,
                Phase::Intra if in_phase2 => {
                    return Err(Error::SequenceMismatch("phase-1 merge after phase 2 began"));
                }
                Phase::Intra => {}
            }
        }
        Ok(())
    }

    /// Index of the first phase-2 record, or the record count if none.
    pub fn phase_boundary(&self) -> usize {
        self.records
            .iter()
            .position(|r| r.phase == Phase::Inter)
            .unwrap_or(self.records.len())
    }

    /// Maps every fine label to its region among the `k` regions left after
    /// the first `n_f - k` merges. Coarse ids are the smallest fine label of
    /// each group's union-find root, not yet contiguous.
    fn group_roots(&self, k: usize) -> Result<Vec<u32>> {
        if k == 0 || k > self.n_f {
            return Err(Error::RegionCountOutOfRange {
                requested: k,
                max: self.n_f,
            });
        }
        let mut uf = UnionFind::new(self.n_f);
        let mut rep: Vec<u32> = (0..self.n_f as u32).collect();
        rep.reserve(self.n_f);
        for r in &self.records[..self.n_f - k] {
            let root = uf.union(rep[r.u as usize], rep[r.v as usize]);
            rep.push(root);
        }
        Ok((0..self.n_f as u32).map(|l| uf.find(l)).collect())
    }
}

/// Scale-dependent spatial weight `w_pos * sqrt(s / n_f)`.
pub fn spatial_weight(s: usize, n_f: usize, w_pos: f64) -> f64 {
    w_pos * libm::sqrt(s as f64 / n_f as f64)
}

/// Squared distance over color and deep channels (position excluded).
pub fn appearance_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (c, (x, y)) in a.iter().zip(b).enumerate() {
        if !POSITION_RANGE.contains(&c) {
            let d = x - y;
            acc += d * d;
        }
    }
    acc
}

/// Squared distance over the two position channels.
pub fn spatial_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for c in POSITION_RANGE {
        let d = a[c] - b[c];
        acc += d * d;
    }
    acc
}

pub fn attention_term(a_u: f64, a_v: f64, w_att: f64) -> f64 {
    w_att * a_u.max(a_v)
}

/// Intra-object cost at region count `s`; `+inf` across objects.
pub fn phase1_cost(u: &RegionRecord, v: &RegionRecord, s: usize, n_f: usize, params: &HierarchyParams) -> f64 {
    if u.object != v.object {
        return f64::INFINITY;
    }
    let base =
        appearance_distance(&u.mu, &v.mu) + spatial_weight(s, n_f, params.w_pos) * spatial_distance(&u.mu, &v.mu);
    if params.attention_in(Phase::Intra) {
        base + attention_term(u.attention, v.attention, params.w_att)
    } else {
        base
    }
}

/// Ward-style inter-object cost; position channels excluded.
pub fn phase2_cost(u: &RegionRecord, v: &RegionRecord, params: &HierarchyParams) -> f64 {
    let (su, sv) = (u.size as f64, v.size as f64);
    let base = su * sv / (su + sv) * appearance_distance(&u.mu, &v.mu);
    if params.attention_in(Phase::Inter) {
        base + attention_term(u.attention, v.attention, params.w_att)
    } else {
        base
    }
}

/// Phase-1 candidate with its `s`-independent cost parts cached.
struct IntraCandidate {
    u: u32,
    v: u32,
    appearance: f64,
    spatial: f64,
    attention: f64,
}

impl IntraCandidate {
    fn new(graph: &RegionGraph, u: u32, v: u32, params: &HierarchyParams) -> Self {
        let (ru, rv) = (graph.region(u), graph.region(v));
        let attention = if params.attention_in(Phase::Intra) {
            attention_term(ru.attention, rv.attention, params.w_att)
        } else {
            0.0
        };
        Self {
            u: u.min(v),
            v: u.max(v),
            appearance: appearance_distance(&ru.mu, &rv.mu),
            spatial: spatial_distance(&ru.mu, &rv.mu),
            attention,
        }
    }

    // Same evaluation order as `phase1_cost`.
    fn cost(&self, weight: f64, attention_on: bool) -> f64 {
        let base = self.appearance + weight * self.spatial;
        if attention_on {
            base + self.attention
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct InterEntry {
    cost: f64,
    u: u32,
    v: u32,
}

impl PartialEq for InterEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for InterEntry {}

impl PartialOrd for InterEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InterEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.u.cmp(&other.u))
            .then(self.v.cmp(&other.v))
    }
}

fn precedes(cost: f64, u: u32, v: u32, best: &Option<(f64, u32, u32)>) -> bool {
    match *best {
        None => true,
        Some((bc, bu, bv)) => cost < bc || (cost == bc && (u, v) < (bu, bv)),
    }
}

/// Builds the full merge sequence for a freshly built graph.
///
/// The graph must have all regions alive with ids `0..n_f` and be
/// connected.
pub fn build_hierarchy(graph: &RegionGraph, params: &HierarchyParams) -> Result<MergeSequence> {
    params.validate()?;
    let n_f = graph.alive_count();
    if n_f == 0 || graph.id_bound() != n_f {
        return Err(Error::SequenceMismatch("graph must be unmerged and non-empty"));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected { remaining: n_f });
    }

    let mut g = graph.clone();
    let mut records = Vec::with_capacity(n_f.saturating_sub(1));
    let mut record = |g: &RegionGraph, u: u32, v: u32, w: u32, cost: f64, phase: Phase| {
        records.push(MergeRecord {
            u,
            v,
            w,
            cost,
            phase,
            level_after: g.alive_count(),
        });
    };

    // Phase 1: same-object pairs only.
    let attention_on = params.attention_in(Phase::Intra);
    let mut candidates: Vec<IntraCandidate> = graph
        .edges()
        .filter(|e| e.same_object)
        .map(|e| IntraCandidate::new(&g, e.u, e.v, params))
        .collect();
    let mut stale = 0usize;
    loop {
        if stale > candidates.len() / 2 {
            candidates.retain(|c| g.region(c.u).alive && g.region(c.v).alive);
            stale = 0;
        }
        let weight = spatial_weight(g.alive_count(), n_f, params.w_pos);
        let mut best: Option<(f64, u32, u32)> = None;
        for c in &candidates {
            if !(g.region(c.u).alive && g.region(c.v).alive) {
                continue;
            }
            let cost = c.cost(weight, attention_on);
            if precedes(cost, c.u, c.v, &best) {
                best = Some((cost, c.u, c.v));
            }
        }
        let Some((cost, u, v)) = best else { break };
        let w = g.merge_regions(u, v)?;
        record(&g, u, v, w, cost, Phase::Intra);
        stale += g.neighbors(w).len() + 1;
        for &x in g.neighbors(w) {
            if g.same_object(w, x) {
                candidates.push(IntraCandidate::new(&g, w, x, params));
            }
        }
    }

    // Phase 2: everything else, static costs.
    let mut heap: BinaryHeap<Reverse<InterEntry>> = g
        .edges()
        .map(|e| {
            Reverse(InterEntry {
                cost: phase2_cost(g.region(e.u), g.region(e.v), params),
                u: e.u,
                v: e.v,
            })
        })
        .collect();
    while g.alive_count() > 1 {
        let Some(Reverse(entry)) = heap.pop() else {
            return Err(Error::Disconnected {
                remaining: g.alive_count(),
            });
        };
        if !(g.region(entry.u).alive && g.region(entry.v).alive) {
            continue;
        }
        let w = g.merge_regions(entry.u, entry.v)?;
        record(&g, entry.u, entry.v, w, entry.cost, Phase::Inter);
        for &x in g.neighbors(w) {
            heap.push(Reverse(InterEntry {
                cost: phase2_cost(g.region(x), g.region(w), params),
                u: x,
                v: w,
            }));
        }
    }

    Ok(MergeSequence {
        n_f,
        params: *params,
        records,
    })
}

/// Partition with exactly `k` regions: the first `n_f - k` merges applied to
/// `fine`, relabeled `0..k` in order of first pixel occurrence.
pub fn extract_partition(seq: &MergeSequence, fine: &LabelMap, k: usize) -> Result<LabelMap> {
    if fine.count() != seq.n_f {
        return Err(Error::SequenceMismatch("fine partition region count differs from n_f"));
    }
    seq.validate()?;
    let roots = seq.group_roots(k)?;
    let coarse = fine.labels().iter().map(|&l| roots[l as usize]).collect();
    LabelMap::from_raw_first_occurrence(fine.width(), fine.height(), coarse)
}

/// Fine-label to coarse-label lookup for scale `k`, contiguous but in
/// root order rather than pixel order.
pub fn level_lookup(seq: &MergeSequence, k: usize) -> Result<Vec<u32>> {
    seq.validate()?;
    let roots = seq.group_roots(k)?;
    let mut remap = vec![u32::MAX; seq.n_f];
    let mut next = 0;
    Ok(roots
        .into_iter()
        .map(|r| {
            let slot = &mut remap[r as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect())
}
