// SPDX-License-Identifier: Apache-2.0

//! `package.accel` manifests.
//!
//! One statement per line; `#` starts a comment. Members of a `kernel:` or
//! `firmware:` block are indented by exactly two spaces. Top-level keys are
//! `package`, `version`, `kind`, `depends`; `kernel:` blocks may repeat.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{check_identifier, check_relpath, comma_list, key_value_lines, Line};

/// File name that marks a package root.
pub const MANIFEST_FILE: &str = "package.accel";

/// Kernel build type: functional emulation, timed emulation or a sealed
/// hardware artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuildType {
    #[serde(rename = "sw_emu")]
    SwEmu,
    #[serde(rename = "hw_emu")]
    HwEmu,
    #[serde(rename = "hw")]
    Hw,
}

impl BuildType {
    pub const ALL: [BuildType; 3] = [BuildType::SwEmu, BuildType::HwEmu, BuildType::Hw];

    pub fn as_str(self) -> &'static str {
        match self {
            BuildType::SwEmu => "sw_emu",
            BuildType::HwEmu => "hw_emu",
            BuildType::Hw => "hw",
        }
    }
}

impl fmt::Display for BuildType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuildType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sw_emu" => Ok(BuildType::SwEmu),
            "hw_emu" => Ok(BuildType::HwEmu),
            "hw" => Ok(BuildType::Hw),
            other => Err(format!(
                "invalid build type `{other}` (expected sw_emu, hw_emu or hw)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PackageKind {
    Source,
    Firmware,
}

impl PackageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PackageKind::Source => "source",
            PackageKind::Firmware => "firmware",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Version(pub u32, pub u32, pub u32);

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.0, self.1, self.2)
    }
}

impl FromStr for Version {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let parts: Vec<&str> = s.split('.').collect();
        if parts.len() != 3
            || parts
                .iter()
                .any(|p| p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()))
        {
            return Err(());
        }
        let n = |p: &str| p.parse::<u32>().map_err(|_| ());
        Ok(Version(n(parts[0])?, n(parts[1])?, n(parts[2])?))
    }
}

/// One acceleration kernel declared by a source package.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KernelDecl {
    pub name: String,
    /// Kernel DSL source, package-relative.
    pub file: String,
    /// Kernel config, package-relative.
    pub config: String,
    pub include: Vec<String>,
    pub build_type: BuildType,
    /// Also install the artifact into the install base.
    pub package_flag: bool,
}

/// What a firmware package ships, all paths package-relative.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FirmwareDecl {
    pub platform: String,
    pub descriptor: String,
    pub sysroot: String,
    pub rootfs: String,
    pub mixin_template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PackageManifest {
    pub name: String,
    pub version: Version,
    pub kind: PackageKind,
    pub depends: Vec<String>,
    pub kernels: Vec<KernelDecl>,
    pub firmware: Option<FirmwareDecl>,
}

impl PackageManifest {
    /// Canonical text: fixed key order, no comments, defaults written out.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "package: {}", self.name);
        let _ = writeln!(s, "version: {}", self.version);
        let _ = writeln!(s, "kind: {}", self.kind.as_str());
        if !self.depends.is_empty() {
            let _ = writeln!(s, "depends: {}", self.depends.join(", "));
        }
        for k in &self.kernels {
            s.push_str("kernel:\n");
            let _ = writeln!(s, "  name: {}", k.name);
            let _ = writeln!(s, "  file: {}", k.file);
            let _ = writeln!(s, "  config: {}", k.config);
            if !k.include.is_empty() {
                let _ = writeln!(s, "  include: {}", k.include.join(", "));
            }
            let _ = writeln!(s, "  type: {}", k.build_type);
            let _ = writeln!(s, "  package: {}", k.package_flag);
        }
        if let Some(fw) = &self.firmware {
            s.push_str("firmware:\n");
            let _ = writeln!(s, "  platform: {}", fw.platform);
            let _ = writeln!(s, "  descriptor: {}", fw.descriptor);
            let _ = writeln!(s, "  sysroot: {}", fw.sysroot);
            let _ = writeln!(s, "  rootfs: {}", fw.rootfs);
            let _ = writeln!(s, "  mixin-template: {}", fw.mixin_template);
        }
        s
    }
}

#[derive(Default)]
struct KernelBuilder {
    start: usize,
    name: Option<String>,
    file: Option<String>,
    config: Option<String>,
    include: Option<Vec<String>>,
    build_type: Option<BuildType>,
    package_flag: Option<bool>,
}

impl KernelBuilder {
    fn set(&mut self, line: &Line<'_>) -> Result<()> {
        let n = line.number;
        let dup = || Error::parse(n, format!("duplicate key `{}` in kernel block", line.key));
        match line.key {
            "name" => {
                check_identifier(line.value, "kernel name", Some(n))?;
                replace_once(&mut self.name, line.value.to_string()).ok_or_else(dup)
            }
            "file" => {
                check_relpath(line.value, "kernel file", n)?;
                replace_once(&mut self.file, line.value.to_string()).ok_or_else(dup)
            }
            "config" => {
                check_relpath(line.value, "kernel config", n)?;
                replace_once(&mut self.config, line.value.to_string()).ok_or_else(dup)
            }
            "include" => {
                let dirs = comma_list(line.value, n)?;
                for d in &dirs {
                    check_relpath(d, "include directory", n)?;
                }
                replace_once(&mut self.include, dirs).ok_or_else(dup)
            }
            "type" => {
                let t = line.value.parse::<BuildType>().map_err(|m| Error::parse(n, m))?;
                replace_once(&mut self.build_type, t).ok_or_else(dup)
            }
            "package" => {
                let flag = parse_bool(line.value, n)?;
                replace_once(&mut self.package_flag, flag).ok_or_else(dup)
            }
            other => Err(Error::parse(n, format!("unknown kernel key `{other}`"))),
        }
    }

    fn finish(self) -> Result<KernelDecl> {
        let missing = |k: &str| Error::parse(self.start, format!("kernel block is missing `{k}`"));
        Ok(KernelDecl {
            name: self.name.clone().ok_or_else(|| missing("name"))?,
            file: self.file.clone().ok_or_else(|| missing("file"))?,
            config: self.config.clone().ok_or_else(|| missing("config"))?,
            include: self.include.clone().unwrap_or_default(),
            build_type: self.build_type.ok_or_else(|| missing("type"))?,
            package_flag: self.package_flag.unwrap_or(false),
        })
    }
}

#[derive(Default)]
struct FirmwareBuilder {
    start: usize,
    platform: Option<String>,
    descriptor: Option<String>,
    sysroot: Option<String>,
    rootfs: Option<String>,
    mixin_template: Option<String>,
}

impl FirmwareBuilder {
    fn set(&mut self, line: &Line<'_>) -> Result<()> {
        let n = line.number;
        let value = line.value.to_string();
        if line.key == "platform" {
            check_identifier(line.value, "platform", Some(n))?;
        } else {
            check_relpath(line.value, line.key, n)?;
        }
        let slot = match line.key {
            "platform" => &mut self.platform,
            "descriptor" => &mut self.descriptor,
            "sysroot" => &mut self.sysroot,
            "rootfs" => &mut self.rootfs,
            "mixin-template" => &mut self.mixin_template,
            other => return Err(Error::parse(n, format!("unknown firmware key `{other}`"))),
        };
        replace_once(slot, value)
            .ok_or_else(|| Error::parse(n, format!("duplicate key `{}` in firmware block", line.key)))
    }

    fn finish(self) -> Result<FirmwareDecl> {
        let missing =
            |k: &str| Error::parse(self.start, format!("firmware block is missing `{k}`"));
        Ok(FirmwareDecl {
            platform: self.platform.clone().ok_or_else(|| missing("platform"))?,
            descriptor: self.descriptor.clone().ok_or_else(|| missing("descriptor"))?,
            sysroot: self.sysroot.clone().ok_or_else(|| missing("sysroot"))?,
            rootfs: self.rootfs.clone().ok_or_else(|| missing("rootfs"))?,
            mixin_template: self
                .mixin_template
                .clone()
                .ok_or_else(|| missing("mixin-template"))?,
        })
    }
}

enum Block {
    Top,
    Kernel(KernelBuilder),
    Firmware(FirmwareBuilder),
}

fn replace_once<T>(slot: &mut Option<T>, value: T) -> Option<()> {
    if slot.is_some() {
        None
    } else {
        *slot = Some(value);
        Some(())
    }
}

fn parse_bool(value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::parse(line, format!("expected true or false, found `{other}`"))),
    }
}

/// Parse the text of a `package.accel` file.
pub fn parse_manifest(text: &str) -> Result<PackageManifest> {
    let lines = key_value_lines(text)?;

    let mut name = None;
    let mut version = None;
    let mut kind: Option<(PackageKind, usize)> = None;
    let mut depends: Option<(Vec<String>, usize)> = None;
    let mut kernels = Vec::new();
    let mut firmware: Option<(FirmwareDecl, usize)> = None;
    let mut block = Block::Top;

    let close = |block: Block,
                 kernels: &mut Vec<KernelDecl>,
                 firmware: &mut Option<(FirmwareDecl, usize)>|
     -> Result<()> {
        match block {
            Block::Top => {}
            Block::Kernel(k) => kernels.push(k.finish()?),
            Block::Firmware(f) => {
                let start = f.start;
                if firmware.is_some() {
                    return Err(Error::parse(start, "duplicate firmware block"));
                }
                *firmware = Some((f.finish()?, start));
            }
        }
        Ok(())
    };

    for line in &lines {
        let n = line.number;
        match line.indent {
            0 => {
                let prev = std::mem::replace(&mut block, Block::Top);
                close(prev, &mut kernels, &mut firmware)?;
                let dup = || Error::parse(n, format!("duplicate key `{}`", line.key));
                match line.key {
                    "package" => {
                        check_identifier(line.value, "package name", Some(n))?;
                        replace_once(&mut name, line.value.to_string()).ok_or_else(dup)?;
                    }
                    "version" => {
                        let v = line.value.parse::<Version>().map_err(|_| {
                            Error::parse(n, format!("invalid version `{}` (expected d.d.d)", line.value))
                        })?;
                        replace_once(&mut version, v).ok_or_else(dup)?;
                    }
                    "kind" => {
                        let k = match line.value {
                            "source" => PackageKind::Source,
                            "firmware" => PackageKind::Firmware,
                            other => {
                                return Err(Error::parse(
                                    n,
                                    format!("invalid kind `{other}` (expected source or firmware)"),
                                ))
                            }
                        };
                        replace_once(&mut kind, (k, n)).ok_or_else(dup)?;
                    }
                    "depends" => {
                        let deps = comma_list(line.value, n)?;
                        for d in &deps {
                            check_identifier(d, "dependency name", Some(n))?;
                        }
                        replace_once(&mut depends, (deps, n)).ok_or_else(dup)?;
                    }
                    "kernel" | "firmware" => {
                        if !line.value.is_empty() {
                            return Err(Error::parse(
                                n,
                                format!("`{}:` opens a block and takes no value", line.key),
                            ));
                        }
                        block = if line.key == "kernel" {
                            Block::Kernel(KernelBuilder {
                                start: n,
                                ..Default::default()
                            })
                        } else {
                            Block::Firmware(FirmwareBuilder {
                                start: n,
                                ..Default::default()
                            })
                        };
                    }
                    other => return Err(Error::parse(n, format!("unknown key `{other}`"))),
                }
            }
            2 => match &mut block {
                Block::Top => {
                    return Err(Error::parse(n, "indented line outside a kernel or firmware block"))
                }
                Block::Kernel(k) => k.set(line)?,
                Block::Firmware(f) => f.set(line)?,
            },
            other => {
                return Err(Error::parse(
                    n,
                    format!("block members are indented by exactly two spaces, found {other}"),
                ))
            }
        }
    }
    close(block, &mut kernels, &mut firmware)?;

    let name = name.ok_or_else(|| Error::parse_msg("missing required key `package`"))?;
    let (kind, kind_line) = kind.ok_or_else(|| Error::parse_msg("missing required key `kind`"))?;
    let depends = match depends {
        Some((deps, n)) => {
            let mut seen = std::collections::BTreeSet::new();
            for d in &deps {
                if d == &name {
                    return Err(Error::parse(n, format!("package `{name}` depends on itself")));
                }
                if !seen.insert(d) {
                    return Err(Error::parse(n, format!("duplicate dependency `{d}`")));
                }
            }
            deps
        }
        None => Vec::new(),
    };

    match kind {
        PackageKind::Source => {
            if let Some((_, n)) = firmware {
                return Err(Error::parse(n, "firmware block in a source package"));
            }
        }
        PackageKind::Firmware => {
            if !kernels.is_empty() {
                return Err(Error::parse(kind_line, "firmware packages cannot declare kernels"));
            }
            if firmware.is_none() {
                return Err(Error::parse(kind_line, "firmware package without a firmware block"));
            }
        }
    }

    let mut names = std::collections::BTreeSet::new();
    for k in &kernels {
        if !names.insert(k.name.as_str()) {
            return Err(Error::parse_msg(format!("kernel `{}` declared twice", k.name)));
        }
    }

    Ok(PackageManifest {
        name,
        version: version.unwrap_or(Version(0, 0, 0)),
        kind,
        depends,
        kernels,
        firmware: firmware.map(|(f, _)| f),
    })
}
