// SPDX-License-Identifier: Apache-2.0

//! Overlay workspace discovery and layout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, IoContext, Result};
use crate::manifest::{parse_manifest, PackageKind, PackageManifest, MANIFEST_FILE};
use crate::text::check_identifier;

/// A package found under `src/`, with the directory it lives in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkspacePackage {
    pub manifest: PackageManifest,
    /// Absolute package root.
    pub dir: PathBuf,
}

impl WorkspacePackage {
    pub fn name(&self) -> &str {
        &self.manifest.name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    pub root: PathBuf,
    pub src_dir: PathBuf,
    /// In discovery order.
    pub packages: Vec<WorkspacePackage>,
    pub mixin_dir: PathBuf,
    pub firmware_root: PathBuf,
}

impl Workspace {
    pub fn package(&self, name: &str) -> Option<&WorkspacePackage> {
        self.packages.iter().find(|p| p.manifest.name == name)
    }

    pub fn manifests(&self) -> Vec<PackageManifest> {
        self.packages.iter().map(|p| p.manifest.clone()).collect()
    }

    /// Firmware packages in the workspace targeting `platform`.
    pub fn firmware_packages_for<'a>(
        &'a self,
        platform: &'a str,
    ) -> impl Iterator<Item = &'a WorkspacePackage> + 'a {
        self.packages.iter().filter(move |p| {
            p.manifest.kind == PackageKind::Firmware
                && p.manifest.firmware.as_ref().map(|f| f.platform.as_str()) == Some(platform)
        })
    }

    /// Resolve a base directory given on the command line or in a mixin.
    pub fn base_path(&self, base: &Path) -> PathBuf {
        if base.is_absolute() {
            base.to_path_buf()
        } else {
            self.root.join(base)
        }
    }
}

/// Scan `root/src` for packages.
///
/// Directories are visited in lexicographic order. A directory holding a
/// `package.accel` is a package root and is not descended into; other
/// directories are searched recursively. Hidden directories are skipped.
pub fn discover_workspace(root: &Path) -> Result<Workspace> {
    let src_dir = root.join("src");
    if !src_dir.is_dir() {
        return Err(Error::NoSrc(root.to_path_buf()));
    }
    let root = fs::canonicalize(root).at(root)?;
    let src_dir = root.join("src");

    let mut packages = Vec::new();
    collect_packages(&src_dir, &mut packages)?;

    let mut seen: BTreeMap<&str, &Path> = BTreeMap::new();
    for p in &packages {
        if let Some(first) = seen.insert(&p.manifest.name, &p.dir) {
            return Err(Error::DuplicatePackage {
                name: p.manifest.name.clone(),
                first: first.to_path_buf(),
                second: p.dir.clone(),
            });
        }
    }

    Ok(Workspace {
        mixin_dir: root.join(".accel").join("mixins"),
        firmware_root: root.join("acceleration").join("firmware"),
        src_dir,
        packages,
        root,
    })
}

fn collect_packages(dir: &Path, out: &mut Vec<WorkspacePackage>) -> Result<()> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let entry = entry.at(dir)?;
        if entry.file_type().at(entry.path())?.is_dir() {
            entries.push(entry.path());
        }
    }
    entries.sort();
    for path in entries {
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if hidden {
            continue;
        }
        let manifest_path = path.join(MANIFEST_FILE);
        if manifest_path.is_file() {
            let text = fs::read_to_string(&manifest_path).at(&manifest_path)?;
            let manifest = parse_manifest(&text)
                .map_err(|e| e.in_source(manifest_path.display().to_string()))?;
            out.push(WorkspacePackage { manifest, dir: path });
        } else {
            collect_packages(&path, out)?;
        }
    }
    Ok(())
}

/// `<root>/acceleration/firmware/<platform>`; no filesystem access.
pub fn firmware_dir(ws: &Workspace, platform: &str) -> Result<PathBuf> {
    check_identifier(platform, "platform", None)?;
    Ok(ws.root.join("acceleration").join("firmware").join(platform))
}
