// SPDX-License-Identifier: Apache-2.0

//! The op latency/area model. All cost numbers live in [`Op::cost`].

use std::ops::Add;

use super::ir::{KernelIR, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCost {
    /// Pipeline latency in cycles.
    pub latency: u32,
    pub luts: u64,
    pub dsps: u64,
}

impl Op {
    pub const fn cost(self) -> OpCost {
        match self {
            Op::Add | Op::Sub | Op::Min | Op::Max | Op::AddI => OpCost {
                latency: 1,
                luts: 8,
                dsps: 0,
            },
            Op::Copy => OpCost {
                latency: 1,
                luts: 0,
                dsps: 0,
            },
            Op::ShrI => OpCost {
                latency: 1,
                luts: 4,
                dsps: 0,
            },
            Op::Mul | Op::MulI => OpCost {
                latency: 3,
                luts: 16,
                dsps: 1,
            },
        }
    }

    pub const fn latency(self) -> u32 {
        self.cost().latency
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResourceEstimate {
    pub dsps: u64,
    pub luts: u64,
}

impl Add for ResourceEstimate {
    type Output = ResourceEstimate;

    fn add(self, rhs: Self) -> Self {
        ResourceEstimate {
            dsps: self.dsps + rhs.dsps,
            luts: self.luts + rhs.luts,
        }
    }
}

/// Sum of per-stage costs.
pub fn estimate_resources(ir: &KernelIR) -> ResourceEstimate {
    ir.stages
        .iter()
        .map(|s| {
            let c = s.op.cost();
            ResourceEstimate {
                dsps: c.dsps,
                luts: c.luts,
            }
        })
        .fold(ResourceEstimate::default(), Add::add)
}
