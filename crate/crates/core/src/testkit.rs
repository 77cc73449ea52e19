// SPDX-License-Identifier: Apache-2.0

//! Random generators and independent oracles for tests and benchmarks.
//!
//! Nothing here calls into the scheduler, cost model or runtime. The
//! oracles carry their own op semantics and latency table so they can check
//! the production code rather than repeat it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kernel::{KernelIR, Operand};

const OPS: [&str; 9] = ["add", "sub", "mul", "min", "max", "copy", "addi", "muli", "shri"];

/// Latency per op name, written out independently of the compiler's table.
pub fn oracle_latency(op: &str) -> u64 {
    match op {
        "mul" | "muli" => 3,
        "add" | "sub" | "min" | "max" | "copy" | "addi" | "shri" => 1,
        other => panic!("oracle does not know op {other}"),
    }
}

/// Kernel DSL text with 1..=3 inputs, 0..=`max_stages` stages and 1..=3
/// outputs drawn from any defined stream.
pub fn random_kernel_text<R: Rng>(rng: &mut R, name: &str, max_stages: usize) -> String {
    let mut text = format!("kernel {name}\n");
    let mut streams: Vec<(String, &str)> = Vec::new();
    for i in 0..rng.gen_range(1..=3) {
        let ty = if rng.gen_bool(0.7) { "i32" } else { "i64" };
        text.push_str(&format!("in x{i} {ty}\n"));
        streams.push((format!("x{i}"), ty));
    }
    let mut body = String::new();
    for s in 0..rng.gen_range(0..=max_stages) {
        let op = *OPS.choose(rng).expect("non-empty");
        let (a, ta) = streams.choose(rng).expect("non-empty").clone();
        let result = format!("t{s}");
        let ty = match op {
            "add" | "sub" | "mul" | "min" | "max" => {
                let (b, tb) = streams.choose(rng).expect("non-empty").clone();
                body.push_str(&format!("stage {op} {a} {b} -> {result}\n"));
                if ta == "i64" || tb == "i64" {
                    "i64"
                } else {
                    "i32"
                }
            }
            "copy" => {
                body.push_str(&format!("stage copy {a} -> {result}\n"));
                ta
            }
            _ => {
                let imm: i64 = match op {
                    "shri" => rng.gen_range(0..=63),
                    _ if rng.gen_bool(0.1) => rng.gen(),
                    _ => rng.gen_range(-1000..=1000),
                };
                body.push_str(&format!("stage {op} {a} ={imm} -> {result}\n"));
                ta
            }
        };
        streams.push((result, ty));
    }
    let n_out = rng.gen_range(1..=3).min(streams.len());
    let mut outs: Vec<(String, &str)> = streams.clone();
    // Prefer the most recent streams so most stages are live.
    outs.reverse();
    outs.truncate(n_out + rng.gen_range(0..=2));
    outs.shuffle(rng);
    outs.truncate(n_out);
    outs.sort();
    for (name, ty) in outs {
        text.push_str(&format!("out {name} {ty}\n"));
    }
    text.push_str(&body);
    text
}

/// Random in-range inputs of length `n` for every input stream.
pub fn random_inputs<R: Rng>(rng: &mut R, ir: &KernelIR, n: usize) -> BTreeMap<String, Vec<i64>> {
    ir.inputs
        .iter()
        .map(|p| {
            let v = (0..n)
                .map(|_| match p.ty.as_str() {
                    "i32" => i64::from(rng.gen::<i32>()),
                    _ => rng.gen::<i64>(),
                })
                .collect();
            (p.name.clone(), v)
        })
        .collect()
}

fn ref_apply(op: &str, wide: bool, a: i64, b: i64) -> i64 {
    if wide {
        match op {
            "add" | "addi" => a.wrapping_add(b),
            "sub" => a.wrapping_sub(b),
            "mul" | "muli" => a.wrapping_mul(b),
            "min" => a.min(b),
            "max" => a.max(b),
            "copy" => a,
            "shri" => u64::checked_shr(a as u64, b as u32).unwrap_or(0) as i64,
            other => panic!("oracle does not know op {other}"),
        }
    } else {
        let (x, y) = (a as i32, b as i32);
        i64::from(match op {
            "add" | "addi" => x.wrapping_add(y),
            "sub" => x.wrapping_sub(y),
            "mul" | "muli" => x.wrapping_mul(y),
            "min" => (a.min(b)) as i32,
            "max" => (a.max(b)) as i32,
            "copy" => x,
            "shri" => u32::checked_shr(x as u32, b as u32).unwrap_or(0) as i32,
            other => panic!("oracle does not know op {other}"),
        })
    }
}

/// Per-element evaluation by recursion from each output back to the inputs.
pub fn reference_eval(ir: &KernelIR, inputs: &BTreeMap<String, Vec<i64>>) -> BTreeMap<String, Vec<i64>> {
    fn value(ir: &KernelIR, inputs: &BTreeMap<String, Vec<i64>>, stream: &str, e: usize) -> i64 {
        if let Some(v) = inputs.get(stream) {
            return v[e];
        }
        let st = ir
            .stages
            .iter()
            .find(|s| s.result == stream)
            .expect("stream is defined");
        let args: Vec<i64> = st
            .operands
            .iter()
            .map(|o| match o {
                Operand::Stream(s) => value(ir, inputs, s, e),
                Operand::Imm(v) => *v,
            })
            .collect();
        let wide = st.ty.as_str() == "i64";
        ref_apply(st.op.as_str(), wide, args[0], args.get(1).copied().unwrap_or(0))
    }
    let n = inputs.values().next().map_or(0, Vec::len);
    ir.outputs
        .iter()
        .map(|p| (p.name.clone(), (0..n).map(|e| value(ir, inputs, &p.name, e)).collect()))
        .collect()
}

/// Event-driven simulation of a fully pipelined datapath: element `e`
/// arrives at `e * ii`; a stage fires for an element once all its operands
/// are available and at least `ii` cycles after it fired for the previous
/// element. Returns the cycle at which the last output element is ready.
pub fn event_sim_cycles(ir: &KernelIR, ii: u64, n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut last_fire: Vec<Option<u64>> = vec![None; ir.stages.len()];
    let mut finish = 0;
    for e in 0..n {
        let arrival = e * ii;
        let mut ready: BTreeMap<&str, u64> = ir.inputs.iter().map(|p| (p.name.as_str(), arrival)).collect();
        for (i, st) in ir.stages.iter().enumerate() {
            let mut fire = st.stream_operands().map(|s| ready[s]).max().expect("stages read a stream");
            if let Some(prev) = last_fire[i] {
                fire = fire.max(prev + ii);
            }
            last_fire[i] = Some(fire);
            ready.insert(&st.result, fire + oracle_latency(st.op.as_str()));
        }
        for p in &ir.outputs {
            let t = if ir.inputs.iter().any(|i| i.name == p.name) {
                ready[p.name.as_str()] + oracle_latency("copy")
            } else {
                ready[p.name.as_str()]
            };
            finish = finish.max(t);
        }
    }
    finish
}

/// Fetch-compute-store baseline, accumulated element by element.
pub fn sequential_oracle(ir: &KernelIR, n: u64) -> u64 {
    let mut total = 0;
    for _ in 0..n {
        for st in &ir.stages {
            total += oracle_latency(st.op.as_str()) + 2;
        }
        for p in &ir.outputs {
            if ir.inputs.iter().any(|i| i.name == p.name) {
                total += oracle_latency("copy") + 2;
            }
        }
    }
    total
}

/// Random DAG over `p0..p{n-1}` as (dependency, dependent) edges; edges only
/// run from lower to higher index before the names are shuffled.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, density: f64) -> (Vec<String>, Vec<(String, String)>) {
    let mut names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    names.shuffle(rng);
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(density) {
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    names.sort();
    (names, edges)
}

/// Every topological order, by exhaustive search. Only for small graphs.
pub fn all_topo_orders(nodes: &[String], edges: &[(String, String)]) -> Vec<Vec<String>> {
    fn go(
        remaining: &mut BTreeSet<String>,
        edges: &[(String, String)],
        prefix: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
    ) {
        if remaining.is_empty() {
            out.push(prefix.clone());
            return;
        }
        let ready: Vec<String> = remaining
            .iter()
            .filter(|n| !edges.iter().any(|(a, b)| b == *n && remaining.contains(a)))
            .cloned()
            .collect();
        for n in ready {
            remaining.remove(&n);
            prefix.push(n.clone());
            go(remaining, edges, prefix, out);
            prefix.pop();
            remaining.insert(n);
        }
    }
    let mut out = Vec::new();
    go(&mut nodes.iter().cloned().collect(), edges, &mut Vec::new(), &mut out);
    out
}

/// Fixed-point closure of `changed` under "depends on".
pub fn brute_dirty(edges: &[(String, String)], changed: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = changed.clone();
    loop {
        let before = out.len();
        for (dep, dependent) in edges {
            if out.contains(dep) {
                out.insert(dependent.clone());
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

/// Write a source-only workspace for the given graph under `root/src`. Each
/// package gets a couple of files so single-file mutations are possible.
pub fn write_graph_workspace(root: &Path, nodes: &[String], edges: &[(String, String)]) {
    for n in nodes {
        let dir = root.join("src").join(n);
        fs::create_dir_all(dir.join("include").join(n)).expect("create package dir");
        let deps: Vec<&str> = edges
            .iter()
            .filter(|(_, b)| b == n)
            .map(|(a, _)| a.as_str())
            .collect();
        let mut manifest = format!("package: {n}\nversion: 0.1.0\nkind: source\n");
        if !deps.is_empty() {
            manifest.push_str(&format!("depends: {}\n", deps.join(", ")));
        }
        fs::write(dir.join("package.accel"), manifest).expect("write manifest");
        fs::write(dir.join("include").join(n).join("api.h"), format!("// {n}\n")).expect("write header");
        fs::write(dir.join("main.src"), format!("{n} body\n")).expect("write source");
    }
}

/// Write a complete firmware package for `platform` under `src_dir`, using
/// the same layout and mixin template as the reference fixture.
pub fn write_firmware_package(src_dir: &Path, platform: &str, clock_mhz: u32, budget_dsps: u64) {
    let dir = src_dir.join(format!("acceleration_firmware_{platform}"));
    fs::create_dir_all(dir.join("sysroot").join("usr")).expect("create firmware dir");
    let manifest = format!(
        "package: acceleration_firmware_{platform}\nversion: 0.1.0\nkind: firmware\nfirmware:\n  platform: {platform}\n  descriptor: platform.desc\n  sysroot: sysroot\n  rootfs: rootfs.img\n  mixin-template: mixin.template\n"
    );
    let desc = format!(
        "platform: {platform}\ntriple: aarch64-accel-eabi\nclock-mhz: {clock_mhz}\nbudget-luts: 100000\nbudget-dsps: {budget_dsps}\nbudget-bram-kb: 4000\n"
    );
    let template = "mixin: ${PLATFORM}\nplatform: ${PLATFORM}\nfirmware-dir: ${FIRMWARE_DIR}\ntarget-triple: aarch64-accel-eabi\nbuild-base: build-${PLATFORM}\ninstall-base: install-${PLATFORM}\n";
    fs::write(dir.join("package.accel"), manifest).expect("write manifest");
    fs::write(dir.join("platform.desc"), desc).expect("write descriptor");
    fs::write(dir.join("rootfs.img"), format!("rootfs {platform}\n")).expect("write rootfs");
    fs::write(dir.join("sysroot").join("usr").join("BOARD"), format!("{platform}\n")).expect("write sysroot");
    fs::write(dir.join("mixin.template"), template).expect("write template");
}

/// Every regular file under `root` except the `src/` tree, by relative path.
pub fn tree_snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    crate::firmware::read_tree(root)
        .expect("readable tree")
        .into_iter()
        .filter(|(p, _)| !p.starts_with("src/"))
        .collect()
}

/// Paths added, removed or changed between two snapshots.
pub fn changed_paths(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> BTreeSet<String> {
    a.keys()
        .chain(b.keys())
        .filter(|p| a.get(*p) != b.get(*p))
        .cloned()
        .collect()
}
