// SPDX-License-Identifier: Apache-2.0

//! The `*.akbin` kernel artifact container.
//!
//! Layout: magic `AKB1`, then three sections, each an 8-byte big-endian
//! length followed by that many bytes:
//!
//! 1. UTF-8 JSON metadata, keys in a fixed order;
//! 2. canonical kernel IR text;
//! 3. the pipeline schedule as `index:start` lines.
//!
//! `content_hash` is SHA-256 over the tool version and all three sections
//! (with the hash field itself blank), hex encoded. Nothing time-dependent
//! is recorded.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ir::{parse_kernel, KernelIR, Port};
use super::schedule::PipelineSchedule;
use crate::error::{ContainerError, Result};
use crate::manifest::BuildType;
use crate::TOOL_VERSION;

pub const MAGIC: &[u8; 4] = b"AKB1";

/// Field order here is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactMetadata {
    pub kernel: String,
    pub platform: String,
    #[serde(rename = "type")]
    pub build_type: BuildType,
    pub clock_mhz: u32,
    pub depth: u32,
    pub ii: u32,
    pub dsps: u64,
    pub luts: u64,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KernelArtifact {
    pub metadata: ArtifactMetadata,
    pub ir: KernelIR,
    pub schedule: PipelineSchedule,
}

impl KernelArtifact {
    /// Fill in `metadata.content_hash` from the other fields.
    pub(crate) fn seal(mut self) -> Self {
        self.metadata.content_hash = String::new();
        let hash = content_hash(&self.metadata, &self.ir.render(), &self.schedule.render());
        self.metadata.content_hash = hash;
        self
    }
}

fn metadata_json(meta: &ArtifactMetadata) -> Vec<u8> {
    serde_json::to_vec(meta).expect("metadata serializes")
}

fn content_hash(meta: &ArtifactMetadata, ir_text: &str, schedule_text: &str) -> String {
    let mut unsealed = meta.clone();
    unsealed.content_hash.clear();
    let mut h = Sha256::new();
    for part in [
        TOOL_VERSION.as_bytes(),
        &metadata_json(&unsealed),
        ir_text.as_bytes(),
        schedule_text.as_bytes(),
    ] {
        h.update((part.len() as u64).to_be_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

pub fn encode_artifact(artifact: &KernelArtifact) -> Vec<u8> {
    let sections = [
        metadata_json(&artifact.metadata),
        artifact.ir.render().into_bytes(),
        artifact.schedule.render().into_bytes(),
    ];
    let mut out = Vec::with_capacity(4 + sections.iter().map(|s| s.len() + 8).sum::<usize>());
    out.extend_from_slice(MAGIC);
    for s in &sections {
        out.extend_from_slice(&(s.len() as u64).to_be_bytes());
        out.extend_from_slice(s);
    }
    out
}

fn take_section<'a>(bytes: &mut &'a [u8]) -> std::result::Result<&'a [u8], ContainerError> {
    if bytes.len() < 8 {
        return Err(ContainerError::Truncated);
    }
    let (len, rest) = bytes.split_at(8);
    let len = u64::from_be_bytes(len.try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| ContainerError::Truncated)?;
    if rest.len() < len {
        return Err(ContainerError::Truncated);
    }
    let (section, rest) = rest.split_at(len);
    *bytes = rest;
    Ok(section)
}

/// Decode and verify a container.
pub fn decode_artifact(bytes: &[u8]) -> Result<KernelArtifact> {
    Ok(decode_inner(bytes)?)
}

fn decode_inner(bytes: &[u8]) -> std::result::Result<KernelArtifact, ContainerError> {
    if bytes.len() < MAGIC.len() {
        return Err(ContainerError::Truncated);
    }
    if &bytes[..4] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let mut rest = &bytes[4..];
    let meta_bytes = take_section(&mut rest)?;
    let ir_bytes = take_section(&mut rest)?;
    let sched_bytes = take_section(&mut rest)?;
    if !rest.is_empty() {
        return Err(ContainerError::Malformed(format!("{} trailing bytes", rest.len())));
    }
    let metadata: ArtifactMetadata = serde_json::from_slice(meta_bytes)
        .map_err(|e| ContainerError::Malformed(format!("metadata: {e}")))?;
    let ir_text = std::str::from_utf8(ir_bytes)
        .map_err(|_| ContainerError::Malformed("IR is not UTF-8".into()))?;
    let sched_text = std::str::from_utf8(sched_bytes)
        .map_err(|_| ContainerError::Malformed("schedule is not UTF-8".into()))?;

    let computed = content_hash(&metadata, ir_text, sched_text);
    if computed != metadata.content_hash {
        return Err(ContainerError::HashMismatch {
            recorded: metadata.content_hash,
            computed,
        });
    }

    let ir = parse_kernel(ir_text).map_err(|e| ContainerError::Malformed(format!("IR: {e}")))?;
    let stage_start = PipelineSchedule::parse_starts(sched_text)
        .filter(|s| s.len() == ir.stages.len())
        .ok_or_else(|| ContainerError::Malformed("schedule".into()))?;
    let artifact = KernelArtifact {
        schedule: PipelineSchedule {
            depth: metadata.depth,
            ii: metadata.ii,
            stage_start,
        },
        metadata,
        ir,
    };
    if encode_artifact(&artifact) != bytes {
        return Err(ContainerError::Malformed("non-canonical encoding".into()));
    }
    Ok(artifact)
}
