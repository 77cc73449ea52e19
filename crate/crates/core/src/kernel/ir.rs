// SPDX-License-Identifier: Apache-2.0

//! Kernel DSL and its intermediate representation.
//!
//! ```text
//! kernel vadd
//! in a i32
//! in b i32
//! out c i32
//! stage add a b -> c
//! ```
//!
//! Streams are single-assignment and must be defined before use, so the
//! stage list is already a topological order of the dataflow graph.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{check_identifier, strip_comment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElemType {
    #[serde(rename = "i32")]
    I32,
    #[serde(rename = "i64")]
    I64,
}

impl ElemType {
    pub fn as_str(self) -> &'static str {
        match self {
            ElemType::I32 => "i32",
            ElemType::I64 => "i64",
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            ElemType::I32 => 32,
            ElemType::I64 => 64,
        }
    }

    /// Two's-complement wraparound of `v` to this width.
    pub fn wrap(self, v: i64) -> i64 {
        match self {
            ElemType::I32 => v as i32 as i64,
            ElemType::I64 => v,
        }
    }

    pub fn fits(self, v: i64) -> bool {
        self.wrap(v) == v
    }

    fn widest(a: ElemType, b: ElemType) -> ElemType {
        a.max(b)
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElemType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "i32" => Ok(ElemType::I32),
            "i64" => Ok(ElemType::I64),
            other => Err(format!("unknown element type `{other}` (expected i32 or i64)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Min,
    Max,
    Copy,
    AddI,
    MulI,
    ShrI,
}

/// How many operands an op takes, and of what kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    /// Two streams.
    Binary,
    /// One stream.
    Unary,
    /// One stream and one immediate.
    Immediate,
}

impl Op {
    pub const ALL: [Op; 9] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Min,
        Op::Max,
        Op::Copy,
        Op::AddI,
        Op::MulI,
        Op::ShrI,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Min => "min",
            Op::Max => "max",
            Op::Copy => "copy",
            Op::AddI => "addi",
            Op::MulI => "muli",
            Op::ShrI => "shri",
        }
    }

    pub fn arity(self) -> Arity {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Min | Op::Max => Arity::Binary,
            Op::Copy => Arity::Unary,
            Op::AddI | Op::MulI | Op::ShrI => Arity::Immediate,
        }
    }

    /// Apply the op to one element. `ty` is the result width; operands are
    /// already in range for their own widths.
    pub fn eval(self, ty: ElemType, a: i64, b: i64) -> i64 {
        let v = match self {
            Op::Add | Op::AddI => a.wrapping_add(b),
            Op::Sub => a.wrapping_sub(b),
            Op::Mul | Op::MulI => a.wrapping_mul(b),
            Op::Min => a.min(b),
            Op::Max => a.max(b),
            Op::Copy => a,
            Op::ShrI => {
                let shift = b as u32;
                if shift >= ty.bits() {
                    0
                } else {
                    match ty {
                        ElemType::I32 => ((a as u32) >> shift) as i32 as i64,
                        ElemType::I64 => ((a as u64) >> shift) as i64,
                    }
                }
            }
        };
        ty.wrap(v)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Op::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| format!("unknown op `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Stream(String),
    Imm(i64),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Stream(s) => f.write_str(s),
            Operand::Imm(v) => write!(f, "={v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stage {
    pub op: Op,
    pub operands: Vec<Operand>,
    pub result: String,
    /// Element type of `result`, inferred from the operands.
    pub ty: ElemType,
}

impl Stage {
    /// Stream operands, in order.
    pub fn stream_operands(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(|o| match o {
            Operand::Stream(s) => Some(s.as_str()),
            Operand::Imm(_) => None,
        })
    }

    pub fn immediate(&self) -> Option<i64> {
        self.operands.iter().find_map(|o| match o {
            Operand::Imm(v) => Some(*v),
            Operand::Stream(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ElemType,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KernelIR {
    pub name: String,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub stages: Vec<Stage>,
}

impl KernelIR {
    pub fn is_input(&self, stream: &str) -> bool {
        self.inputs.iter().any(|p| p.name == stream)
    }

    /// Index of the stage that defines `stream`, if any.
    pub fn producer(&self, stream: &str) -> Option<usize> {
        self.stages.iter().position(|s| s.result == stream)
    }

    /// Outputs that forward an input unchanged. Each is realized by an
    /// implicit copy stage.
    pub fn forwarded_outputs(&self) -> impl Iterator<Item = &Port> {
        self.outputs.iter().filter(|p| self.is_input(&p.name))
    }

    /// Canonical DSL text: header, inputs, outputs, then stages.
    pub fn render(&self) -> String {
        let mut s = format!("kernel {}\n", self.name);
        for p in &self.inputs {
            let _ = writeln!(s, "in {} {}", p.name, p.ty);
        }
        for p in &self.outputs {
            let _ = writeln!(s, "out {} {}", p.name, p.ty);
        }
        for st in &self.stages {
            let _ = write!(s, "stage {}", st.op);
            for o in &st.operands {
                let _ = write!(s, " {o}");
            }
            let _ = writeln!(s, " -> {}", st.result);
        }
        s
    }
}

fn parse_immediate(tok: &str, line: usize) -> Result<i64> {
    tok.strip_prefix('=')
        .and_then(|v| v.parse::<i64>().ok())
        .ok_or_else(|| Error::parse(line, format!("invalid immediate `{tok}` (expected =<integer>)")))
}

/// Parse kernel DSL text into a validated IR.
pub fn parse_kernel(text: &str) -> Result<KernelIR> {
    let mut name: Option<String> = None;
    let mut types: BTreeMap<String, ElemType> = BTreeMap::new();
    let mut inputs = Vec::new();
    let mut outputs: Vec<(Port, usize)> = Vec::new();
    let mut stages = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let toks: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        let Some(&head) = toks.first() else { continue };
        if head != "kernel" && name.is_none() {
            return Err(Error::parse(n, "the first statement must be `kernel <name>`"));
        }
        match head {
            "kernel" => {
                if name.is_some() {
                    return Err(Error::parse(n, "duplicate `kernel` statement"));
                }
                let [_, kname] = toks[..] else {
                    return Err(Error::parse(n, "expected `kernel <name>`"));
                };
                check_identifier(kname, "kernel name", Some(n))?;
                name = Some(kname.to_string());
            }
            "in" | "out" => {
                let [_, stream, ty] = toks[..] else {
                    return Err(Error::parse(n, format!("expected `{head} <stream> <i32|i64>`")));
                };
                check_identifier(stream, "stream name", Some(n))?;
                let ty = ty.parse::<ElemType>().map_err(|m| Error::parse(n, m))?;
                let port = Port {
                    name: stream.to_string(),
                    ty,
                };
                if head == "in" {
                    if types.contains_key(stream) {
                        return Err(Error::parse(n, format!("redefinition {stream}")));
                    }
                    types.insert(stream.to_string(), ty);
                    inputs.push(port);
                } else {
                    if outputs.iter().any(|(p, _)| p.name == stream) {
                        return Err(Error::parse(n, format!("duplicate output {stream}")));
                    }
                    outputs.push((port, n));
                }
            }
            "stage" => stages.push(parse_stage(&toks, n, &mut types)?),
            other => return Err(Error::parse(n, format!("unknown statement `{other}`"))),
        }
    }

    let name = name.ok_or_else(|| Error::parse_msg("empty kernel: expected `kernel <name>`"))?;
    if inputs.is_empty() {
        return Err(Error::parse_msg(format!("kernel `{name}` declares no inputs")));
    }
    if outputs.is_empty() {
        return Err(Error::parse_msg(format!("kernel `{name}` declares no outputs")));
    }
    for (port, line) in &outputs {
        match types.get(&port.name) {
            None => {
                return Err(Error::parse(*line, format!("undefined output {}", port.name)));
            }
            Some(t) if *t != port.ty => {
                return Err(Error::parse(
                    *line,
                    format!("output {} declared {} but defined as {}", port.name, port.ty, t),
                ));
            }
            Some(_) => {}
        }
    }

    Ok(KernelIR {
        name,
        inputs,
        outputs: outputs.into_iter().map(|(p, _)| p).collect(),
        stages,
    })
}

fn parse_stage(toks: &[&str], n: usize, types: &mut BTreeMap<String, ElemType>) -> Result<Stage> {
    // stage <op> <arg1> [<arg2>] -> <result>
    let arrow = toks
        .iter()
        .position(|t| *t == "->")
        .ok_or_else(|| Error::parse(n, "expected `-> <stream>` in stage"))?;
    if arrow + 2 != toks.len() || arrow < 2 {
        return Err(Error::parse(n, "expected `stage <op> <args...> -> <stream>`"));
    }
    let op = toks[1].parse::<Op>().map_err(|m| Error::parse(n, m))?;
    let args = &toks[2..arrow];
    let result = toks[arrow + 1];
    check_identifier(result, "stream name", Some(n))?;

    let stream = |tok: &str| -> Result<(Operand, ElemType)> {
        if tok.starts_with('=') {
            return Err(Error::parse(n, format!("`{op}` expects a stream, found immediate `{tok}`")));
        }
        check_identifier(tok, "stream name", Some(n))?;
        let ty = types
            .get(tok)
            .copied()
            .ok_or_else(|| Error::parse(n, format!("use-before-def {tok}")))?;
        Ok((Operand::Stream(tok.to_string()), ty))
    };

    let (operands, ty) = match (op.arity(), args) {
        (Arity::Binary, [a, b]) => {
            let (a, ta) = stream(a)?;
            let (b, tb) = stream(b)?;
            (vec![a, b], ElemType::widest(ta, tb))
        }
        (Arity::Unary, [a]) => {
            let (a, ta) = stream(a)?;
            (vec![a], ta)
        }
        (Arity::Immediate, [a, imm]) => {
            let (a, ta) = stream(a)?;
            let v = parse_immediate(imm, n)?;
            if op == Op::ShrI && !(0..=63).contains(&v) {
                return Err(Error::parse(n, format!("shift amount {v} out of range [0, 63]")));
            }
            (vec![a, Operand::Imm(v)], ta)
        }
        (arity, _) => {
            let want = match arity {
                Arity::Binary => "two streams",
                Arity::Unary => "one stream",
                Arity::Immediate => "a stream and an immediate",
            };
            return Err(Error::parse(n, format!("`{op}` takes {want}")));
        }
    };

    if types.contains_key(result) {
        return Err(Error::parse(n, format!("redefinition {result}")));
    }
    types.insert(result.to_string(), ty);
    Ok(Stage {
        op,
        operands,
        result: result.to_string(),
        ty,
    })
}
