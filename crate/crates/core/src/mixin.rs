// SPDX-License-Identifier: Apache-2.0

//! Named configuration bundles and their layering into one effective build
//! configuration.
//!
//! Precedence, lowest first: built-in defaults, mixins in the order given
//! (a later mixin overrides an earlier one), explicit command-line keys.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, IoContext, Result};
use crate::manifest::BuildType;
use crate::text::{check_identifier, key_value_lines};

/// The closed set of keys a mixin (or the command line) may set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MixinKey {
    BuildBase,
    InstallBase,
    MergeInstall,
    TargetTriple,
    FirmwareDir,
    Platform,
    KernelType,
    ClockMhz,
}

impl MixinKey {
    pub const ALL: [MixinKey; 8] = [
        MixinKey::BuildBase,
        MixinKey::InstallBase,
        MixinKey::MergeInstall,
        MixinKey::TargetTriple,
        MixinKey::FirmwareDir,
        MixinKey::Platform,
        MixinKey::KernelType,
        MixinKey::ClockMhz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MixinKey::BuildBase => "build-base",
            MixinKey::InstallBase => "install-base",
            MixinKey::MergeInstall => "merge-install",
            MixinKey::TargetTriple => "target-triple",
            MixinKey::FirmwareDir => "firmware-dir",
            MixinKey::Platform => "platform",
            MixinKey::KernelType => "kernel-type",
            MixinKey::ClockMhz => "clock-mhz",
        }
    }

    /// Check a concrete (placeholder-free) value for this key.
    pub fn validate(self, value: &str) -> std::result::Result<(), String> {
        match self {
            MixinKey::BuildBase | MixinKey::InstallBase | MixinKey::FirmwareDir => {
                if value.is_empty() {
                    Err(format!("`{}` must not be empty", self.as_str()))
                } else {
                    Ok(())
                }
            }
            MixinKey::MergeInstall => match value {
                "true" | "false" => Ok(()),
                other => Err(format!("merge-install must be true or false, found `{other}`")),
            },
            MixinKey::TargetTriple => {
                if value.is_empty() || value.contains(char::is_whitespace) {
                    Err(format!("invalid target triple `{value}`"))
                } else {
                    Ok(())
                }
            }
            MixinKey::Platform => check_identifier(value, "platform", None).map_err(|e| e.to_string()),
            MixinKey::KernelType => value.parse::<BuildType>().map(|_| ()),
            MixinKey::ClockMhz => match value.parse::<u32>() {
                Ok(v) if v > 0 => Ok(()),
                _ => Err(format!("clock-mhz must be a positive integer, found `{value}`")),
            },
        }
    }
}

impl fmt::Display for MixinKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MixinKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        MixinKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown mixin key `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mixin {
    pub name: String,
    pub entries: BTreeMap<MixinKey, String>,
}

impl Mixin {
    pub fn get(&self, key: MixinKey) -> Option<&str> {
        self.entries.get(&key).map(String::as_str)
    }

    /// `*.mixin` text, keys in canonical order.
    pub fn render(&self) -> String {
        let mut s = format!("mixin: {}\n", self.name);
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }
}

/// Structure of a mixin file before values are checked. Values may still
/// contain `${NAME}` placeholders.
struct RawMixin {
    name: (String, usize),
    entries: Vec<(MixinKey, String, usize)>,
}

fn parse_raw(text: &str) -> Result<RawMixin> {
    let lines = key_value_lines(text)?;
    let mut iter = lines.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::parse_msg("empty mixin: expected `mixin: <name>`"))?;
    if first.key != "mixin" || first.indent != 0 {
        return Err(Error::parse(
            first.number,
            format!("first statement must be `mixin: <name>`, found `{}`", first.key),
        ));
    }
    let mut entries: Vec<(MixinKey, String, usize)> = Vec::new();
    for line in iter {
        if line.indent != 0 {
            return Err(Error::parse(line.number, "mixin entries are not indented"));
        }
        let key = line
            .key
            .parse::<MixinKey>()
            .map_err(|m| Error::parse(line.number, m))?;
        if entries.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::parse(line.number, format!("duplicate key `{key}`")));
        }
        entries.push((key, line.value.to_string(), line.number));
    }
    Ok(RawMixin {
        name: (first.value.to_string(), first.number),
        entries,
    })
}

fn finish(raw: RawMixin) -> Result<Mixin> {
    let (name, line) = raw.name;
    check_identifier(&name, "mixin name", Some(line))?;
    let mut entries = BTreeMap::new();
    for (key, value, line) in raw.entries {
        key.validate(&value).map_err(|m| Error::parse(line, m))?;
        entries.insert(key, value);
    }
    Ok(Mixin { name, entries })
}

/// Parse a `*.mixin` file.
pub fn parse_mixin(text: &str) -> Result<Mixin> {
    let raw = parse_raw(text)?;
    if let Some((_, _, line)) = raw.entries.iter().find(|(_, v, _)| v.contains("${")) {
        return Err(Error::parse(*line, "unexpanded placeholder in mixin"));
    }
    finish(raw)
}

/// Replace every `${NAME}` in `s`. Names are uppercase letters, digits and
/// underscore, starting with a letter or underscore.
pub fn substitute(s: &str, bindings: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| Error::parse_msg(format!("unterminated placeholder in `{s}`")))?;
        let name = &after[..end];
        let well_formed = name
            .bytes()
            .next()
            .is_some_and(|b| b.is_ascii_uppercase() || b == b'_')
            && name
                .bytes()
                .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_');
        if !well_formed {
            return Err(Error::parse_msg(format!("malformed placeholder `${{{name}}}`")));
        }
        let value = bindings
            .get(name)
            .ok_or_else(|| Error::Template(name.to_string()))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Expand a mixin template into a concrete mixin.
pub fn render_template(template: &str, bindings: &BTreeMap<String, String>) -> Result<Mixin> {
    let raw = parse_raw(template)?;
    let sub = |v: &str, line: usize| {
        substitute(v, bindings).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(line, message),
            other => other,
        })
    };
    let name = (sub(&raw.name.0, raw.name.1)?, raw.name.1);
    let entries = raw
        .entries
        .iter()
        .map(|(k, v, line)| Ok((*k, sub(v, *line)?, *line)))
        .collect::<Result<Vec<_>>>()?;
    finish(RawMixin { name, entries })
}

/// Every mixin known to a workspace, by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MixinRegistry {
    mixins: BTreeMap<String, Mixin>,
}

impl MixinRegistry {
    pub fn new(mixins: impl IntoIterator<Item = Mixin>) -> Self {
        MixinRegistry {
            mixins: mixins.into_iter().map(|m| (m.name.clone(), m)).collect(),
        }
    }

    /// Load every `*.mixin` in `dir`. A missing directory is an empty registry.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Ok(Self::default());
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .at(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "mixin"))
            .collect();
        paths.sort();
        let mut mixins = Vec::new();
        for p in paths {
            let text = fs::read_to_string(&p).at(&p)?;
            mixins.push(parse_mixin(&text).map_err(|e| e.in_source(p.display().to_string()))?);
        }
        Ok(Self::new(mixins))
    }

    pub fn names(&self) -> Vec<String> {
        self.mixins.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mixin> {
        self.mixins.values()
    }

    pub fn get(&self, name: &str) -> Option<&Mixin> {
        self.mixins.get(name)
    }
}

pub fn resolve_mixin(name: &str, registry: &MixinRegistry) -> Result<Mixin> {
    registry
        .get(name)
        .cloned()
        .ok_or_else(|| Error::UnknownMixin {
            name: name.to_string(),
            known: registry.names(),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TargetTriple {
    Host,
    Triple(String),
}

impl TargetTriple {
    pub const HOST_MARKER: &'static str = "host";

    fn parse(s: &str) -> Self {
        if s == Self::HOST_MARKER {
            TargetTriple::Host
        } else {
            TargetTriple::Triple(s.to_string())
        }
    }
}

impl fmt::Display for TargetTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetTriple::Host => f.write_str(Self::HOST_MARKER),
            TargetTriple::Triple(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EffectiveConfig {
    pub build_base: PathBuf,
    pub install_base: PathBuf,
    pub merge_install: bool,
    pub target_triple: TargetTriple,
    pub firmware_dir: Option<PathBuf>,
    pub platform: Option<String>,
    pub kernel_type_override: Option<BuildType>,
    pub clock_mhz_override: Option<u32>,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            build_base: PathBuf::from("build"),
            install_base: PathBuf::from("install"),
            merge_install: false,
            target_triple: TargetTriple::Host,
            firmware_dir: None,
            platform: None,
            kernel_type_override: None,
            clock_mhz_override: None,
        }
    }
}

impl EffectiveConfig {
    /// Apply one layer of key/value overrides.
    fn apply(&mut self, key: MixinKey, value: &str) -> Result<()> {
        key.validate(value)
            .map_err(|m| Error::Config(format!("{key}: {m}")))?;
        match key {
            MixinKey::BuildBase => self.build_base = PathBuf::from(value),
            MixinKey::InstallBase => self.install_base = PathBuf::from(value),
            MixinKey::MergeInstall => self.merge_install = value == "true",
            MixinKey::TargetTriple => self.target_triple = TargetTriple::parse(value),
            MixinKey::FirmwareDir => self.firmware_dir = Some(PathBuf::from(value)),
            MixinKey::Platform => self.platform = Some(value.to_string()),
            MixinKey::KernelType => self.kernel_type_override = value.parse().ok(),
            MixinKey::ClockMhz => self.clock_mhz_override = value.parse().ok(),
        }
        Ok(())
    }

    /// The keys that change what a cross build produces.
    pub fn platform_keys(&self) -> Vec<(&'static str, String)> {
        vec![
            ("platform", self.platform.clone().unwrap_or_default()),
            ("target-triple", self.target_triple.to_string()),
            ("merge-install", self.merge_install.to_string()),
            ("install-base", self.install_base.display().to_string()),
            (
                "kernel-type",
                self.kernel_type_override
                    .map(|t| t.to_string())
                    .unwrap_or_default(),
            ),
            (
                "clock-mhz",
                self.clock_mhz_override
                    .map(|c| c.to_string())
                    .unwrap_or_default(),
            ),
        ]
    }
}

/// Layer `mixins` (later wins) and then `cli` over the defaults.
pub fn merge_mixins(mixins: &[Mixin], cli: &BTreeMap<MixinKey, String>) -> Result<EffectiveConfig> {
    let mut cfg = EffectiveConfig::default();
    for m in mixins {
        for (k, v) in &m.entries {
            cfg.apply(*k, v)?;
        }
    }
    for (k, v) in cli {
        cfg.apply(*k, v)?;
    }
    if cfg.build_base == cfg.install_base {
        return Err(Error::Config(format!(
            "build base and install base are both `{}`",
            cfg.build_base.display()
        )));
    }
    if cfg.platform.is_some() != cfg.firmware_dir.is_some() {
        return Err(Error::Config(
            "`platform` and `firmware-dir` must be set together".to_string(),
        ));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bindings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn mixin(name: &str, pairs: &[(MixinKey, &str)]) -> Mixin {
        Mixin {
            name: name.to_string(),
            entries: pairs.iter().map(|(k, v)| (*k, v.to_string())).collect(),
        }
    }

    #[test]
    fn template_expands_workspace_path() {
        let t = "mixin: kv260\nfirmware-dir: ${WORKSPACE}/acceleration/firmware/kv260\n";
        let m = render_template(t, &bindings(&[("WORKSPACE", "/ws")])).unwrap();
        assert_eq!(m.name, "kv260");
        assert_eq!(
            m.get(MixinKey::FirmwareDir),
            Some("/ws/acceleration/firmware/kv260")
        );
    }

    #[test]
    fn template_without_placeholders_is_identity() {
        let t = "mixin: zcu102\nbuild-base: build-zcu102\n";
        assert_eq!(
            render_template(t, &BTreeMap::new()).unwrap(),
            parse_mixin(t).unwrap()
        );
    }

    #[test]
    fn unbound_placeholder() {
        let t = "mixin: x\nfirmware-dir: ${SYSROOT}/lib\n";
        match render_template(t, &BTreeMap::new()).unwrap_err() {
            Error::Template(name) => assert_eq!(name, "SYSROOT"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn placeholder_in_name() {
        let t = "mixin: ${PLATFORM}\nplatform: ${PLATFORM}\n";
        let m = render_template(t, &bindings(&[("PLATFORM", "zcu104")])).unwrap();
        assert_eq!(m.name, "zcu104");
    }

    #[test]
    fn malformed_placeholder_is_a_parse_error() {
        let t = "mixin: x\nbuild-base: ${lower}\n";
        assert_eq!(render_template(t, &BTreeMap::new()).unwrap_err().code(), "E_PARSE");
        let t = "mixin: x\nbuild-base: ${OPEN\n";
        assert_eq!(render_template(t, &BTreeMap::new()).unwrap_err().code(), "E_PARSE");
    }

    #[test]
    fn closed_key_set() {
        assert!(parse_mixin("mixin: x\nbuild-dir: b\n").is_err());
        assert!(parse_mixin("mixin: x\nmerge-install: yes\n").is_err());
        assert!(parse_mixin("build-base: b\n").is_err());
        assert!(parse_mixin("mixin: x\nclock-mhz: 0\n").is_err());
    }

    #[test]
    fn resolve_by_name() {
        let reg = MixinRegistry::new([mixin("zcu102", &[]), mixin("kv260", &[])]);
        assert_eq!(resolve_mixin("zcu102", &reg).unwrap().name, "zcu102");
        match resolve_mixin("zcu999", &reg).unwrap_err() {
            Error::UnknownMixin { name, known } => {
                assert_eq!(name, "zcu999");
                assert_eq!(known, vec!["kv260", "zcu102"]);
            }
            other => panic!("unexpected {other}"),
        }
        let only = MixinRegistry::new([mixin("kv260", &[])]);
        assert_eq!(resolve_mixin("kv260", &only).unwrap().name, "kv260");
    }

    #[test]
    fn rightmost_mixin_wins() {
        let m1 = mixin("m1", &[(MixinKey::BuildBase, "b1")]);
        let m2 = mixin("m2", &[(MixinKey::BuildBase, "b2")]);
        let cfg = merge_mixins(&[m1, m2], &BTreeMap::new()).unwrap();
        assert_eq!(cfg.build_base, PathBuf::from("b2"));
    }

    #[test]
    fn quoted_command_flags() {
        let zcu102 = mixin(
            "zcu102",
            &[
                (MixinKey::BuildBase, "build-zcu102"),
                (MixinKey::InstallBase, "install-zcu102"),
            ],
        );
        let cli = BTreeMap::from([(MixinKey::MergeInstall, "true".to_string())]);
        let cfg = merge_mixins(&[zcu102], &cli).unwrap();
        assert!(cfg.merge_install);
        assert_eq!(cfg.build_base, PathBuf::from("build-zcu102"));
        assert_eq!(cfg.install_base, PathBuf::from("install-zcu102"));
    }

    #[test]
    fn defaults() {
        let cfg = merge_mixins(&[], &BTreeMap::new()).unwrap();
        assert_eq!(cfg, EffectiveConfig::default());
        assert_eq!(cfg.target_triple, TargetTriple::Host);
    }

    #[test]
    fn config_invariants() {
        let same = BTreeMap::from([(MixinKey::InstallBase, "build".to_string())]);
        assert_eq!(merge_mixins(&[], &same).unwrap_err().code(), "E_CONFIG");
        let half = mixin("h", &[(MixinKey::Platform, "kv260")]);
        assert_eq!(merge_mixins(&[half], &BTreeMap::new()).unwrap_err().code(), "E_CONFIG");
    }

    #[test]
    fn render_round_trips() {
        let m = mixin(
            "kv260",
            &[
                (MixinKey::Platform, "kv260"),
                (MixinKey::FirmwareDir, "/ws/acceleration/firmware/kv260"),
                (MixinKey::ClockMhz, "200"),
            ],
        );
        assert_eq!(parse_mixin(&m.render()).unwrap(), m);
    }
}
