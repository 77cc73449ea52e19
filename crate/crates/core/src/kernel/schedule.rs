// SPDX-License-Identifier: Apache-2.0

//! ASAP scheduling of the stage DAG into a streaming pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::config::KernelConfig;
use super::ir::{KernelIR, Op};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PipelineSchedule {
    /// Cycles from an element entering to its last output retiring.
    pub depth: u32,
    pub ii: u32,
    /// Start cycle of each stage, indexed like `KernelIR::stages`.
    pub stage_start: Vec<u32>,
}

impl PipelineSchedule {
    /// `index:start` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, start) in self.stage_start.iter().enumerate() {
            let _ = writeln!(s, "{i}:{start}");
        }
        s
    }

    /// Parse [`render`](Self::render) output; `None` if malformed.
    pub fn parse_starts(text: &str) -> Option<Vec<u32>> {
        text.lines()
            .enumerate()
            .map(|(i, line)| {
                let (idx, start) = line.split_once(':')?;
                (idx.parse::<usize>().ok()? == i).then_some(())?;
                start.parse::<u32>().ok()
            })
            .collect()
    }

    /// Cycles to stream `n` elements through the pipeline.
    pub fn pipeline_cycles(&self, n: u64) -> u64 {
        if n == 0 {
            0
        } else {
            self.depth as u64 + (n - 1) * self.ii as u64
        }
    }
}

/// Each stage starts as soon as all its operands have completed; inputs
/// complete at cycle 0. Outputs forwarded straight from an input pass through
/// an implicit copy, so depth is at least one copy latency.
pub fn schedule_pipeline(ir: &KernelIR, cfg: &KernelConfig) -> PipelineSchedule {
    let mut done: BTreeMap<&str, u32> = ir.inputs.iter().map(|p| (p.name.as_str(), 0)).collect();
    let mut stage_start = Vec::with_capacity(ir.stages.len());
    for st in &ir.stages {
        let start = st
            .stream_operands()
            .map(|o| done[o])
            .max()
            .unwrap_or(0);
        stage_start.push(start);
        done.insert(&st.result, start + st.op.latency());
    }
    let depth = ir
        .outputs
        .iter()
        .map(|p| {
            if ir.is_input(&p.name) {
                Op::Copy.latency()
            } else {
                done[p.name.as_str()]
            }
        })
        .max()
        .unwrap_or(0)
        .max(1);
    PipelineSchedule {
        depth,
        ii: cfg.ii,
        stage_start,
    }
}
