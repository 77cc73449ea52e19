// SPDX-License-Identifier: Apache-2.0

//! Emulated device runtime: load kernel artifacts into a single slot, run
//! them functionally or through the cycle-stepped pipeline engine, and report
//! cycles against the fetch-compute-store baseline.
//!
//! The cycle numbers come from this crate's model (ASAP schedule, fixed op
//! latencies), not from any real device.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::firmware::PlatformDescriptor;
use crate::kernel::{decode_artifact, ElemType, KernelArtifact, KernelIR, Op, Operand, Port};
use crate::manifest::BuildType;

pub type Streams = BTreeMap<String, Vec<i64>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSignature {
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
}

/// A decoded, hash-verified artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedKernel {
    pub artifact: KernelArtifact,
    pub signature: KernelSignature,
}

impl LoadedKernel {
    pub fn from_artifact(artifact: KernelArtifact) -> Self {
        let signature = KernelSignature {
            inputs: artifact.ir.inputs.clone(),
            outputs: artifact.ir.outputs.clone(),
        };
        LoadedKernel { artifact, signature }
    }

    pub fn ir(&self) -> &KernelIR {
        &self.artifact.ir
    }
}

/// One kernel slot plus a named buffer pool that outlives kernel swaps.
#[derive(Debug, Clone)]
pub struct Device {
    pub platform: PlatformDescriptor,
    pub loaded: Option<LoadedKernel>,
    pub buffers: Streams,
}

impl Device {
    pub fn new(platform: PlatformDescriptor) -> Self {
        Device {
            platform,
            loaded: None,
            buffers: BTreeMap::new(),
        }
    }

    /// Decode `bytes` and place the kernel in the slot, replacing whatever
    /// was there. `hw` artifacts only load on the platform they were built for.
    pub fn load_artifact(&mut self, bytes: &[u8]) -> Result<&LoadedKernel> {
        let artifact = decode_artifact(bytes)?;
        if artifact.metadata.build_type == BuildType::Hw && artifact.metadata.platform != self.platform.platform {
            return Err(Error::PlatformMismatch {
                artifact: artifact.metadata.platform,
                device: self.platform.platform.clone(),
            });
        }
        Ok(self.loaded.insert(LoadedKernel::from_artifact(artifact)))
    }

    pub fn kernel(&self) -> Result<&LoadedKernel> {
        self.loaded
            .as_ref()
            .ok_or_else(|| Error::Signature("no kernel loaded".into()))
    }
}

/// Check inputs against the signature; returns the element count.
fn check_inputs(sig: &KernelSignature, inputs: &Streams) -> Result<usize> {
    for name in inputs.keys() {
        if !sig.inputs.iter().any(|p| &p.name == name) {
            return Err(Error::Signature(format!("unexpected input stream `{name}`")));
        }
    }
    let mut n = None;
    for port in &sig.inputs {
        let values = inputs
            .get(&port.name)
            .ok_or_else(|| Error::Signature(format!("missing input stream `{}`", port.name)))?;
        match n {
            None => n = Some(values.len()),
            Some(len) if len != values.len() => {
                return Err(Error::Signature(format!(
                    "stream `{}` has {} elements, expected {len}",
                    port.name,
                    values.len()
                )))
            }
            Some(_) => {}
        }
        if let Some(v) = values.iter().find(|v| !port.ty.fits(**v)) {
            return Err(Error::Signature(format!(
                "value {v} on stream `{}` does not fit {}",
                port.name, port.ty
            )));
        }
    }
    Ok(n.unwrap_or(0))
}

fn collect_outputs(ir: &KernelIR, env: &mut Streams) -> Streams {
    ir.outputs
        .iter()
        .map(|p| (p.name.clone(), env.get(&p.name).cloned().unwrap_or_default()))
        .collect()
}

fn operand_value(env: &Streams, operand: &Operand, e: usize) -> i64 {
    match operand {
        Operand::Stream(s) => env[s][e],
        Operand::Imm(v) => *v,
    }
}

fn eval_stage_element(op: Op, ty: ElemType, operands: &[Operand], env: &Streams, e: usize) -> i64 {
    let a = operand_value(env, &operands[0], e);
    let b = operands.get(1).map_or(0, |o| operand_value(env, o, e));
    op.eval(ty, a, b)
}

/// Interpret the IR one whole stream at a time, in stage order.
pub fn run_functional(k: &LoadedKernel, inputs: &Streams) -> Result<Streams> {
    let n = check_inputs(&k.signature, inputs)?;
    let ir = k.ir();
    let mut env = inputs.clone();
    for st in &ir.stages {
        let out: Vec<i64> = (0..n)
            .map(|e| eval_stage_element(st.op, st.ty, &st.operands, &env, e))
            .collect();
        env.insert(st.result.clone(), out);
    }
    Ok(collect_outputs(ir, &mut env))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    pub n: u64,
    pub pipeline_cycles: u64,
    pub sequential_cycles: u64,
    /// sequential / pipeline; zero when nothing was streamed.
    pub speedup: Ratio<u64>,
    /// pipeline cycles over the clock in MHz.
    pub wall_estimate_us: Ratio<u64>,
}

impl CycleReport {
    pub fn new(n: u64, pipeline_cycles: u64, sequential_cycles: u64, clock_mhz: u32) -> Self {
        let speedup = if pipeline_cycles == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(sequential_cycles, pipeline_cycles)
        };
        CycleReport {
            n,
            pipeline_cycles,
            sequential_cycles,
            speedup,
            wall_estimate_us: Ratio::new(pipeline_cycles, u64::from(clock_mhz.max(1))),
        }
    }
}

impl fmt::Display for CycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} pipeline={} sequential={} speedup={} est_us={}",
            self.n,
            self.pipeline_cycles,
            self.sequential_cycles,
            decimal3(self.speedup),
            decimal3(self.wall_estimate_us)
        )
    }
}

/// Round half up to three decimal places.
pub fn decimal3(r: Ratio<u64>) -> String {
    let num = u128::from(*r.numer());
    let den = u128::from(*r.denom());
    let milli = (num * 2000 + den) / (2 * den);
    format!("{}.{:03}", milli / 1000, milli % 1000)
}

/// Fetch-compute-store baseline: each stage, and each implicit copy for a
/// forwarded output, costs its latency plus one load and one store per
/// element.
pub fn sequential_cycle_model(ir: &KernelIR, n: u64) -> u64 {
    let per_element: u64 = ir
        .stages
        .iter()
        .map(|s| s.op)
        .chain(ir.forwarded_outputs().map(|_| Op::Copy))
        .map(|op| u64::from(op.latency()) + 2)
        .sum();
    n * per_element
}

/// Stream the inputs through the scheduled pipeline cycle by cycle.
///
/// Element `e` enters at cycle `e * ii`; stage `s` issues it at
/// `e * ii + start[s]` and the result is visible `latency` cycles later.
/// The cycle count is the cycle at which the last output element retires.
pub fn run_timed(k: &LoadedKernel, inputs: &Streams) -> Result<(Streams, CycleReport)> {
    let n = check_inputs(&k.signature, inputs)?;
    let ir = k.ir();
    let sched = &k.artifact.schedule;
    let ii = u64::from(sched.ii);

    // Visible-at cycle per element per stream.
    let mut ready: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for p in &ir.inputs {
        ready.insert(&p.name, (0..n as u64).map(|e| e * ii).collect());
    }
    let mut env: Streams = inputs.clone();
    for st in &ir.stages {
        env.insert(st.result.clone(), vec![0; n]);
        ready.insert(&st.result, vec![u64::MAX; n]);
    }

    let mut retire: u64 = 0;
    let horizon = if n == 0 {
        0
    } else {
        (n as u64 - 1) * ii + sched.stage_start.iter().map(|s| u64::from(*s) + 3).max().unwrap_or(0) + 1
    };
    for cycle in 0..horizon {
        for (idx, st) in ir.stages.iter().enumerate() {
            let start = u64::from(sched.stage_start[idx]);
            if cycle < start || (cycle - start) % ii != 0 {
                continue;
            }
            let e = ((cycle - start) / ii) as usize;
            if e >= n {
                continue;
            }
            debug_assert!(st.stream_operands().all(|s| ready[s][e] <= cycle));
            let v = eval_stage_element(st.op, st.ty, &st.operands, &env, e);
            env.get_mut(&st.result).expect("allocated")[e] = v;
            ready.get_mut(st.result.as_str()).expect("allocated")[e] = cycle + u64::from(st.op.latency());
        }
    }
    if n > 0 {
        let last = n - 1;
        for p in &ir.outputs {
            let at = if ir.is_input(&p.name) {
                ready[p.name.as_str()][last] + u64::from(Op::Copy.latency())
            } else {
                ready[p.name.as_str()][last]
            };
            retire = retire.max(at);
        }
        retire = retire.max(last as u64 * ii + 1);
    }

    let outputs = collect_outputs(ir, &mut env);
    let report = CycleReport::new(
        n as u64,
        retire,
        sequential_cycle_model(ir, n as u64),
        k.artifact.metadata.clock_mhz,
    );
    Ok((outputs, report))
}
