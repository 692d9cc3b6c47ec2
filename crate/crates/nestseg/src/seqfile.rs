//! JSON form of a merge sequence.
//!
//! ```json
//! {"n_f": 4, "params": {"w_pos": 5.0, "w_att": 0.0, "attention_mode": "off"},
//!  "merges": [{"u": 0, "v": 1, "w": 4, "cost": 0.01, "phase": 1}, ...]}
//! ```
//!
//! Costs are written in shortest round-trip form, so a reload reproduces
//! every bit.

use std::path::Path;

use nestseg_core::hierarchy::{AttentionMode, AttentionScope, HierarchyParams, MergeRecord, MergeSequence, Phase};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Off,
    Superpixel,
    Object,
}

impl From<ModeName> for AttentionMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Off => AttentionMode::Off,
            ModeName::Superpixel => AttentionMode::Superpixel,
            ModeName::Object => AttentionMode::Object,
        }
    }
}

impl From<AttentionMode> for ModeName {
    fn from(m: AttentionMode) -> Self {
        match m {
            AttentionMode::Off => ModeName::Off,
            AttentionMode::Superpixel => ModeName::Superpixel,
            AttentionMode::Object => ModeName::Object,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScopeName {
    #[default]
    Both,
    Intra,
    Inter,
}

impl From<ScopeName> for AttentionScope {
    fn from(s: ScopeName) -> Self {
        match s {
            ScopeName::Both => AttentionScope::Both,
            ScopeName::Intra => AttentionScope::IntraObject,
            ScopeName::Inter => AttentionScope::InterObject,
        }
    }
}

impl From<AttentionScope> for ScopeName {
    fn from(s: AttentionScope) -> Self {
        match s {
            AttentionScope::Both => ScopeName::Both,
            AttentionScope::IntraObject => ScopeName::Intra,
            AttentionScope::InterObject => ScopeName::Inter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub w_pos: f64,
    pub w_att: f64,
    pub attention_mode: ModeName,
    #[serde(default)]
    pub attention_scope: ScopeName,
}

impl From<&HierarchyParams> for ParamsRecord {
    fn from(p: &HierarchyParams) -> Self {
        Self {
            w_pos: p.w_pos,
            w_att: p.w_att,
            attention_mode: p.attention_mode.into(),
            attention_scope: p.attention_scope.into(),
        }
    }
}

impl From<ParamsRecord> for HierarchyParams {
    fn from(p: ParamsRecord) -> Self {
        Self {
            w_pos: p.w_pos,
            w_att: p.w_att,
            attention_mode: p.attention_mode.into(),
            attention_scope: p.attention_scope.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct MergeEntry {
    u: u32,
    v: u32,
    w: u32,
    cost: f64,
    phase: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SequenceFile {
    n_f: usize,
    params: ParamsRecord,
    merges: Vec<MergeEntry>,
}

pub fn sequence_to_json(seq: &MergeSequence) -> String {
    let file = SequenceFile {
        n_f: seq.n_f,
        params: (&seq.params).into(),
        merges: seq
            .records
            .iter()
            .map(|r| MergeEntry {
                u: r.u,
                v: r.v,
                w: r.w,
                cost: r.cost,
                phase: r.phase.number(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("merge sequence always serializes")
}

pub fn sequence_from_json(text: &str) -> Result<MergeSequence> {
    let file: SequenceFile = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
    let records = file
        .merges
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let phase = match m.phase {
                1 => Phase::Intra,
                2 => Phase::Inter,
                other => return Err(Error::Invalid(format!("merge {i}: unknown phase {other}"))),
            };
            Ok(MergeRecord {
                u: m.u,
                v: m.v,
                w: m.w,
                cost: m.cost,
                phase,
                level_after: file.n_f.saturating_sub(i + 1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let seq = MergeSequence {
        n_f: file.n_f,
        params: file.params.into(),
        records,
    };
    seq.validate()?;
    Ok(seq)
}

pub fn save_sequence(path: &Path, seq: &MergeSequence) -> Result<()> {
    write_atomic(path, sequence_to_json(seq).as_bytes())
}

pub fn load_sequence(path: &Path) -> Result<MergeSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    sequence_from_json(&text)
}
