// SPDX-License-Identifier: Apache-2.0

//! End-to-end smoke run over a reference workspace.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::build::{build, resolve_config, BuildReport};
use crate::error::{Error, Result};
use crate::firmware::{deployed_descriptor, read_tree, write_tree};
use crate::kernel::StreamingBackend;
use crate::manifest::BuildType;
use crate::mixin::MixinKey;
use crate::runtime::{run_functional, Device};
use crate::workspace::discover_workspace;

/// Boards every fixture run builds for.
pub const FIXTURE_PLATFORMS: [&str; 3] = ["zcu102", "zcu104", "kv260"];

#[derive(Debug, thiserror::Error)]
#[error("fixture divergence: {0}")]
pub struct Divergence(pub String);

impl From<Error> for Divergence {
    fn from(e: Error) -> Self {
        Divergence(e.to_string())
    }
}

#[derive(Debug, Default)]
pub struct FixtureReport {
    /// One line per check that passed, in order.
    pub checks: Vec<String>,
}

/// Copy every regular file of `src` into `dst`.
pub fn copy_tree(src: &Path, dst: &Path) -> Result<()> {
    write_tree(dst, &read_tree(src)?)
}

/// The cross-build command line for `platform`, as CLI keys plus mixins.
pub fn cross_options(platform: &str) -> (Vec<String>, BTreeMap<MixinKey, String>) {
    let cli = BTreeMap::from([
        (MixinKey::BuildBase, format!("build-{platform}")),
        (MixinKey::InstallBase, format!("install-{platform}")),
        (MixinKey::MergeInstall, "true".to_string()),
    ]);
    (vec![platform.to_string()], cli)
}

fn check(cond: bool, what: impl Into<String>) -> std::result::Result<(), Divergence> {
    if cond {
        Ok(())
    } else {
        Err(Divergence(what.into()))
    }
}

/// Phase A, Phase B for each fixture board, vadd through the runtime, and
/// the overflow on the `tiny` board. `root` is a scratch copy of the fixture
/// workspace; it is built in place.
pub fn verify_fixture(root: &Path) -> std::result::Result<FixtureReport, Divergence> {
    let mut report = FixtureReport::default();
    let ws = discover_workspace(root)?;
    let native = resolve_config(&ws, &[], &BTreeMap::new())?;
    let r = build(&ws, &native, None, &StreamingBackend)?;
    check(r.success(), format!("native build failed:\n{}", r.summary()))?;
    report.checks.push("native build".into());

    let ws = discover_workspace(root)?;
    for platform in FIXTURE_PLATFORMS {
        let (mixins, cli) = cross_options(platform);
        let cfg = resolve_config(&ws, &mixins, &cli)?;
        let r = build(&ws, &cfg, None, &StreamingBackend)?;
        check(r.success(), format!("{platform} build failed:\n{}", r.summary()))?;
        let vadd = vadd_report(&r).ok_or_else(|| Divergence(format!("{platform}: no vadd artifact")))?;
        let m = &vadd.metadata;
        check(
            (m.platform.as_str(), m.build_type, m.depth, m.ii, m.dsps, m.luts)
                == (platform, BuildType::Hw, 1, 1, 0, 8),
            format!("{platform}: unexpected vadd metadata {m:?}"),
        )?;
        let expected = root.join(format!("build-{platform}/acceleration_examples/kernels/vadd.akbin"));
        check(vadd.artifact == expected, format!("{platform}: vadd at {}", vadd.artifact.display()))?;

        let bytes = fs::read(&vadd.artifact).map_err(|e| Divergence(e.to_string()))?;
        let mut dev = Device::new(deployed_descriptor(&ws, platform)?.0);
        let k = dev.load_artifact(&bytes)?.clone();
        let inputs = BTreeMap::from([("a".to_string(), vec![1, 2, 3]), ("b".to_string(), vec![4, 5, 6])]);
        let out = run_functional(&k, &inputs)?;
        check(out.get("c") == Some(&vec![5, 7, 9]), format!("{platform}: vadd produced {out:?}"))?;
        report.checks.push(format!("{platform} cross build and vadd"));
    }

    let (mixins, cli) = cross_options("tiny");
    let cfg = resolve_config(&ws, &mixins, &cli)?;
    let r = build(&ws, &cfg, None, &StreamingBackend)?;
    let overflow = r
        .packages
        .values()
        .filter_map(|p| p.error.as_ref())
        .find_map(|e| match e {
            Error::ResourceOverflow { resource, needed, budget } => Some((resource.clone(), *needed, *budget)),
            _ => None,
        });
    check(
        overflow == Some(("dsps".to_string(), 2, 1)),
        format!("tiny: expected a dsps overflow (2 over 1), got {overflow:?}"),
    )?;
    report.checks.push("tiny overflow".into());
    Ok(report)
}

fn vadd_report(r: &BuildReport) -> Option<&crate::build::KernelReport> {
    r.kernels()
        .find(|(pkg, k)| *pkg == "acceleration_examples" && k.kernel == "vadd")
        .map(|(_, k)| k)
}
