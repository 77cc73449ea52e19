// SPDX-License-Identifier: Apache-2.0

//! Firmware packages: platform descriptors, deployment into
//! `acceleration/firmware/<platform>`, and mixin generation.
//!
//! A deployed platform directory holds `platform.desc`, `sysroot/`,
//! `rootfs.img` and an `.owner` file naming the package that deployed it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, IoContext, Result};
use crate::manifest::PackageKind;
use crate::mixin::{render_template, Mixin, MixinKey};
use crate::text::{check_identifier, key_value_lines, parse_count, parse_positive};
use crate::workspace::{firmware_dir, Workspace, WorkspacePackage};

pub const DESCRIPTOR_FILE: &str = "platform.desc";
pub const SYSROOT_DIR: &str = "sysroot";
pub const ROOTFS_FILE: &str = "rootfs.img";
const OWNER_FILE: &str = ".owner";
/// Build stamp of the deploying package; written by the executor and ignored
/// when comparing deployed content.
pub(crate) const STAMP_FILE: &str = ".accel-stamp";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlatformDescriptor {
    pub platform: String,
    pub triple: String,
    pub clock_mhz: u32,
    pub budget_luts: u64,
    pub budget_dsps: u64,
    pub budget_bram_kb: u64,
}

impl PlatformDescriptor {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "platform: {}", self.platform);
        let _ = writeln!(s, "triple: {}", self.triple);
        let _ = writeln!(s, "clock-mhz: {}", self.clock_mhz);
        let _ = writeln!(s, "budget-luts: {}", self.budget_luts);
        let _ = writeln!(s, "budget-dsps: {}", self.budget_dsps);
        let _ = writeln!(s, "budget-bram-kb: {}", self.budget_bram_kb);
        s
    }
}

/// Parse a `platform.desc` file; all six keys are required.
pub fn load_platform(text: &str) -> Result<PlatformDescriptor> {
    let mut fields: BTreeMap<&str, (String, usize)> = BTreeMap::new();
    for line in key_value_lines(text)? {
        const KEYS: [&str; 6] = [
            "platform",
            "triple",
            "clock-mhz",
            "budget-luts",
            "budget-dsps",
            "budget-bram-kb",
        ];
        let Some(key) = KEYS.iter().find(|k| **k == line.key) else {
            return Err(Error::parse(line.number, format!("unknown descriptor key `{}`", line.key)));
        };
        if line.indent != 0 {
            return Err(Error::parse(line.number, "descriptor entries are not indented"));
        }
        if fields
            .insert(key, (line.value.to_string(), line.number))
            .is_some()
        {
            return Err(Error::parse(line.number, format!("duplicate key `{key}`")));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .map(|(v, n)| (v.as_str(), *n))
            .ok_or_else(|| Error::parse_msg(format!("descriptor is missing `{k}`")))
    };
    let (platform, n) = get("platform")?;
    check_identifier(platform, "platform", Some(n))?;
    let (triple, n) = get("triple")?;
    if triple.is_empty() || triple.contains(char::is_whitespace) {
        return Err(Error::parse(n, format!("invalid triple `{triple}`")));
    }
    let (clock, n) = get("clock-mhz")?;
    let clock_mhz = parse_positive(clock, "clock-mhz", n)?;
    let count = |k: &str| -> Result<u64> {
        let (v, n) = get(k)?;
        parse_count(v, k, n)
    };
    Ok(PlatformDescriptor {
        platform: platform.to_string(),
        triple: triple.to_string(),
        clock_mhz,
        budget_luts: count("budget-luts")?,
        budget_dsps: count("budget-dsps")?,
        budget_bram_kb: count("budget-bram-kb")?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeployedFirmware {
    pub platform: String,
    pub dir: PathBuf,
    pub descriptor: PlatformDescriptor,
    pub sysroot_dir: PathBuf,
    /// Name of the mixin generated from the package's template.
    pub generated_mixin: String,
    /// Whether this call modified anything on disk.
    pub changed: bool,
}

/// Path of the generated mixin file for `platform`.
pub fn mixin_path(ws: &Workspace, platform: &str) -> PathBuf {
    ws.mixin_dir.join(format!("{platform}.mixin"))
}

/// Whether `platform` has a deployed descriptor.
pub fn is_deployed(ws: &Workspace, platform: &str) -> bool {
    firmware_dir(ws, platform)
        .map(|d| d.join(DESCRIPTOR_FILE).is_file())
        .unwrap_or(false)
}

/// Load the deployed descriptor for `platform`.
pub fn deployed_descriptor(ws: &Workspace, platform: &str) -> Result<(PlatformDescriptor, Vec<u8>)> {
    let path = firmware_dir(ws, platform)?.join(DESCRIPTOR_FILE);
    let bytes = fs::read(&path).at(&path)?;
    let text = String::from_utf8_lossy(&bytes);
    let desc = load_platform(&text).map_err(|e| e.in_source(path.display().to_string()))?;
    Ok((desc, bytes))
}

/// Relative path → bytes for every regular file below `dir`, sorted.
pub(crate) fn read_tree(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .at(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .at(dir)?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(base, &p, out)?;
            } else {
                let rel = p
                    .strip_prefix(base)
                    .expect("walked path is below base")
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                out.insert(rel, fs::read(&p).at(&p)?);
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    if dir.is_dir() {
        walk(dir, dir, &mut out)?;
    }
    Ok(out)
}

pub(crate) fn write_tree(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    for (rel, bytes) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).at(parent)?;
        }
        fs::write(&path, bytes).at(&path)?;
    }
    Ok(())
}

fn without_owner(files: &BTreeMap<String, Vec<u8>>) -> BTreeMap<&str, &[u8]> {
    files
        .iter()
        .filter(|(k, _)| k.as_str() != OWNER_FILE)
        .map(|(k, v)| (k.as_str(), v.as_slice()))
        .collect()
}

/// Unpack a firmware package into the workspace and generate its mixin.
///
/// Redeploying unchanged content touches nothing. A platform directory owned
/// by another firmware package that is still in the workspace is a conflict
/// when contents differ; one left behind by a package that has since been
/// removed from `src/` is replaced.
pub fn deploy_firmware(pkg: &WorkspacePackage, ws: &Workspace) -> Result<DeployedFirmware> {
    let m = &pkg.manifest;
    let fw = match (&m.kind, &m.firmware) {
        (PackageKind::Firmware, Some(fw)) => fw,
        _ => {
            return Err(Error::Config(format!(
                "package `{}` is not a firmware package",
                m.name
            )))
        }
    };
    let incomplete = |artifact: &str| Error::FirmwareIncomplete {
        package: m.name.clone(),
        artifact: artifact.to_string(),
    };
    let descriptor_path = pkg.dir.join(&fw.descriptor);
    let sysroot_src = pkg.dir.join(&fw.sysroot);
    let rootfs_path = pkg.dir.join(&fw.rootfs);
    let template_path = pkg.dir.join(&fw.mixin_template);
    if !descriptor_path.is_file() {
        return Err(incomplete("descriptor"));
    }
    if !sysroot_src.is_dir() {
        return Err(incomplete("sysroot"));
    }
    if !rootfs_path.is_file() {
        return Err(incomplete("rootfs"));
    }
    if !template_path.is_file() {
        return Err(incomplete("mixin-template"));
    }

    let descriptor_bytes = fs::read(&descriptor_path).at(&descriptor_path)?;
    let descriptor = load_platform(&String::from_utf8_lossy(&descriptor_bytes))
        .map_err(|e| e.in_source(descriptor_path.display().to_string()))?;
    if descriptor.platform != fw.platform {
        return Err(Error::Config(format!(
            "package `{}` targets `{}` but its descriptor names `{}`",
            m.name, fw.platform, descriptor.platform
        )));
    }

    let dir = firmware_dir(ws, &fw.platform)?;
    let mut desired = BTreeMap::new();
    desired.insert(DESCRIPTOR_FILE.to_string(), descriptor_bytes);
    desired.insert(ROOTFS_FILE.to_string(), fs::read(&rootfs_path).at(&rootfs_path)?);
    for (rel, bytes) in read_tree(&sysroot_src)? {
        desired.insert(format!("{SYSROOT_DIR}/{rel}"), bytes);
    }
    desired.insert(OWNER_FILE.to_string(), m.name.clone().into_bytes());

    let mut existing = read_tree(&dir)?;
    existing.remove(STAMP_FILE);
    let mut changed = false;
    if existing != desired {
        let occupant = existing
            .get(OWNER_FILE)
            .map(|o| String::from_utf8_lossy(o).into_owned());
        let same_content = without_owner(&existing) == without_owner(&desired);
        match occupant {
            Some(o) if o != m.name && same_content => {}
            Some(o) if o != m.name && ws.package(&o).is_some() => {
                return Err(Error::PlatformConflict {
                    platform: fw.platform.clone(),
                    occupant: o,
                    package: m.name.clone(),
                });
            }
            _ => {
                if dir.exists() {
                    fs::remove_dir_all(&dir).at(&dir)?;
                }
                write_tree(&dir, &desired)?;
                fs::create_dir_all(dir.join(SYSROOT_DIR)).at(&dir)?;
                changed = true;
            }
        }
    }

    let template = fs::read_to_string(&template_path).at(&template_path)?;
    let bindings = BTreeMap::from([
        ("WORKSPACE".to_string(), ws.root.display().to_string()),
        ("PLATFORM".to_string(), fw.platform.clone()),
        ("FIRMWARE_DIR".to_string(), dir.display().to_string()),
    ]);
    let mixin = render_template(&template, &bindings)
        .map_err(|e| e.in_source(template_path.display().to_string()))?;
    check_generated_mixin(&mixin, &fw.platform, &dir)?;
    let rendered = mixin.render();
    let mpath = mixin_path(ws, &fw.platform);
    if fs::read_to_string(&mpath).ok().as_deref() != Some(rendered.as_str()) {
        fs::create_dir_all(&ws.mixin_dir).at(&ws.mixin_dir)?;
        fs::write(&mpath, rendered).at(&mpath)?;
        changed = true;
    }

    Ok(DeployedFirmware {
        platform: fw.platform.clone(),
        sysroot_dir: dir.join(SYSROOT_DIR),
        dir,
        descriptor,
        generated_mixin: mixin.name,
        changed,
    })
}

fn check_generated_mixin(mixin: &Mixin, platform: &str, dir: &Path) -> Result<()> {
    if mixin.get(MixinKey::Platform) != Some(platform) {
        return Err(Error::Config(format!(
            "mixin template for `{platform}` must set `platform: {platform}`"
        )));
    }
    if mixin.get(MixinKey::FirmwareDir).map(Path::new) != Some(dir) {
        return Err(Error::Config(format!(
            "mixin template for `{platform}` must set `firmware-dir` to {}",
            dir.display()
        )));
    }
    Ok(())
}

/// Descriptors of every deployed platform, sorted by platform name.
pub fn list_platforms(ws: &Workspace) -> Result<Vec<PlatformDescriptor>> {
    if !ws.firmware_root.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(&ws.firmware_root).at(&ws.firmware_root)? {
        let path = entry.at(&ws.firmware_root)?.path().join(DESCRIPTOR_FILE);
        if path.is_file() {
            let text = fs::read_to_string(&path).at(&path)?;
            out.push(load_platform(&text).map_err(|e| e.in_source(path.display().to_string()))?);
        }
    }
    out.sort_by(|a, b| a.platform.cmp(&b.platform));
    Ok(out)
}
