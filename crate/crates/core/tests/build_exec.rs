// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use accel_core::build::{build, content_hash, plan_build, resolve_config, Action, BuildReport, Status};
use accel_core::fixture::{copy_tree, cross_options};
use accel_core::testkit::{brute_dirty, changed_paths, random_dag, tree_snapshot, write_graph_workspace};
use accel_core::{decode_artifact, discover_workspace, Error, MixinKey, StreamingBackend};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture_copy() -> tempfile::TempDir {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/ws1");
    let tmp = tempfile::tempdir().unwrap();
    copy_tree(&src, tmp.path()).unwrap();
    tmp
}

fn native(root: &Path) -> BuildReport {
    let ws = discover_workspace(root).unwrap();
    let cfg = resolve_config(&ws, &[], &BTreeMap::new()).unwrap();
    build(&ws, &cfg, None, &StreamingBackend).unwrap()
}

fn cross(root: &Path, platform: &str) -> BuildReport {
    let ws = discover_workspace(root).unwrap();
    let (mixins, cli) = cross_options(platform);
    let cfg = resolve_config(&ws, &mixins, &cli).unwrap();
    build(&ws, &cfg, None, &StreamingBackend).unwrap()
}

#[test]
fn native_plan_actions() {
    let tmp = fixture_copy();
    let ws = discover_workspace(tmp.path()).unwrap();
    let cfg = resolve_config(&ws, &[], &BTreeMap::new()).unwrap();
    let plan = plan_build(&ws, &cfg, None).unwrap();
    assert_eq!(plan.packages["acceleration_firmware_kv260"].actions, [Action::DeployFirmware]);
    assert_eq!(plan.packages["core_lib"].actions, [Action::HostBuild]);
    assert_eq!(plan.waves[0].len(), 5);
}

#[test]
fn mixin_exists_only_after_phase_a() {
    let tmp = fixture_copy();
    let mixin = tmp.path().join(".accel/mixins/zcu102.mixin");
    assert!(!mixin.exists());
    assert!(native(tmp.path()).success());
    assert!(mixin.is_file());
    let ws = discover_workspace(tmp.path()).unwrap();
    let cfg = resolve_config(&ws, &["zcu102".to_string()], &BTreeMap::new()).unwrap();
    assert_eq!(cfg.platform.as_deref(), Some("zcu102"));
    assert_eq!(cfg.build_base, PathBuf::from("build-zcu102"));
    assert_eq!(cfg.firmware_dir.as_deref(), Some(ws.root.join("acceleration/firmware/zcu102").as_path()));
    assert_eq!(fs::read_to_string(tmp.path().join(".accel/backends")).unwrap(), "streaming\n");
}

#[test]
fn cross_plan_compiles_kernels_and_skips_firmware() {
    let tmp = fixture_copy();
    native(tmp.path());
    let ws = discover_workspace(tmp.path()).unwrap();
    let (mixins, cli) = cross_options("zcu102");
    let cfg = resolve_config(&ws, &mixins, &cli).unwrap();
    let plan = plan_build(&ws, &cfg, None).unwrap();
    assert_eq!(plan.packages.keys().collect::<Vec<_>>(), ["acceleration_examples", "core_lib", "dsp_examples"]);
    assert_eq!(plan.packages["acceleration_examples"].actions, [Action::CrossBuild, Action::CompileKernels]);
    assert_eq!(plan.packages["core_lib"].actions, [Action::CrossBuild]);
}

#[test]
fn phase_a_is_idempotent() {
    let tmp = fixture_copy();
    native(tmp.path());
    let before = tree_snapshot(tmp.path());
    let again = native(tmp.path());
    assert!(again.rebuilt().is_empty());
    assert_eq!(tree_snapshot(tmp.path()), before);
}

#[test]
fn rebuild_without_changes_is_empty() {
    let tmp = fixture_copy();
    native(tmp.path());
    assert_eq!(cross(tmp.path(), "zcu102").rebuilt().len(), 3);
    let before = tree_snapshot(tmp.path());
    let r = cross(tmp.path(), "zcu102");
    assert!(r.rebuilt().is_empty(), "{}", r.summary());
    assert_eq!(tree_snapshot(tmp.path()), before);
}

#[test]
fn cross_build_touches_only_its_bases() {
    let tmp = fixture_copy();
    native(tmp.path());
    cross(tmp.path(), "kv260");
    let before = tree_snapshot(tmp.path());
    assert!(cross(tmp.path(), "zcu102").success());
    for p in changed_paths(&before, &tree_snapshot(tmp.path())) {
        assert!(p.starts_with("build-zcu102/") || p.starts_with("install-zcu102/"), "{p}");
    }
    let target = fs::read_to_string(tmp.path().join("build-zcu102/core_lib/target.stamp")).unwrap();
    assert_eq!(target, "aarch64-accel-eabi\n");
    let host = fs::read_to_string(tmp.path().join("build/core_lib/target.stamp")).unwrap();
    assert_eq!(host, "host\n");
}

#[test]
fn clean_builds_are_byte_identical() {
    let trees: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
        .map(|_| {
            let tmp = fixture_copy();
            native(tmp.path());
            for p in ["zcu102", "zcu104", "kv260"] {
                assert!(cross(tmp.path(), p).success());
            }
            tree_snapshot(tmp.path())
                .into_iter()
                .filter(|(p, _)| p.starts_with("install") || p.ends_with(".akbin"))
                .collect()
        })
        .collect();
    assert!(trees[0].keys().any(|p| p.ends_with("vadd.akbin")));
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn firmware_swap_retargets_one_platform() {
    let tmp = fixture_copy();
    let root = tmp.path();
    native(root);
    for p in ["zcu102", "zcu104", "kv260"] {
        cross(root, p);
    }
    let before = tree_snapshot(root);

    // Replace the zcu102 firmware package with a renamed copy clocked at 300.
    let old = root.join("src/acceleration_firmware_zcu102");
    let new = root.join("src/acceleration_firmware_zcu102_fast");
    copy_tree(&old, &new).unwrap();
    fs::remove_dir_all(&old).unwrap();
    let manifest = fs::read_to_string(new.join("package.accel")).unwrap();
    fs::write(
        new.join("package.accel"),
        manifest.replace("package: acceleration_firmware_zcu102", "package: acceleration_firmware_zcu102_fast"),
    )
    .unwrap();
    let desc = fs::read_to_string(new.join("platform.desc")).unwrap();
    fs::write(new.join("platform.desc"), desc.replace("clock-mhz: 200", "clock-mhz: 300")).unwrap();

    assert!(native(root).success());
    let r = cross(root, "zcu102");
    assert!(r.success());
    assert_eq!(r.rebuilt(), BTreeSet::from(["acceleration_examples".to_string(), "dsp_examples".to_string()]));

    let changed = changed_paths(&before, &tree_snapshot(root));
    assert!(!changed.is_empty());
    for p in &changed {
        assert!(
            p.starts_with("acceleration/firmware/zcu102/") || p.starts_with("build-zcu102/") || p.starts_with("install-zcu102/"),
            "unexpected change {p}"
        );
    }
    let vadd = fs::read(root.join("build-zcu102/acceleration_examples/kernels/vadd.akbin")).unwrap();
    assert_eq!(decode_artifact(&vadd).unwrap().metadata.clock_mhz, 300);
}

#[test]
fn tiny_overflow_values() {
    let tmp = fixture_copy();
    native(tmp.path());
    let r = cross(tmp.path(), "tiny");
    assert_eq!(r.failed(), BTreeSet::from(["dsp_examples".to_string()]));
    match &r.packages["dsp_examples"].error {
        Some(Error::ResourceOverflow { resource, needed, budget }) => {
            assert_eq!((resource.as_str(), *needed, *budget), ("dsps", 2, 1));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(r.packages["acceleration_examples"].status, Status::Built);
}

#[test]
fn failure_propagates_to_dependents_only() {
    let tmp = tempfile::tempdir().unwrap();
    let nodes: Vec<String> = ["base", "mid", "top", "side"].map(String::from).to_vec();
    let edges = [("base", "mid"), ("mid", "top")].map(|(a, b)| (a.to_string(), b.to_string()));
    write_graph_workspace(tmp.path(), &nodes, &edges);
    accel_core::testkit::write_firmware_package(&tmp.path().join("src"), "board", 200, 10);
    let mid = tmp.path().join("src/mid");
    fs::write(mid.join("bad.kdl"), "kernel bad\nin x i32\nout y i32\nstage frob x -> y\n").unwrap();
    fs::write(mid.join("bad.cfg"), "platform: board\nii: 1\n").unwrap();
    let m = fs::read_to_string(mid.join("package.accel")).unwrap();
    fs::write(
        mid.join("package.accel"),
        format!("{m}kernel:\n  name: bad\n  file: bad.kdl\n  config: bad.cfg\n  type: hw\n  package: false\n"),
    )
    .unwrap();
    assert!(native(tmp.path()).success());
    let r = cross(tmp.path(), "board");
    assert_eq!(r.failed(), BTreeSet::from(["mid".to_string(), "top".to_string()]));
    assert_eq!(r.rebuilt(), BTreeSet::from(["base".to_string(), "side".to_string()]));
    assert_eq!(r.packages["top"].error.as_ref().unwrap().code(), "E_DEPENDENCY_FAILED");
    assert_eq!(r.packages["mid"].error.as_ref().unwrap().code(), "E_PARSE");

    // Failed packages stay stale; a fixed kernel rebuilds exactly them.
    fs::write(mid.join("bad.kdl"), "kernel bad\nin x i32\nout y i32\nstage copy x -> y\n").unwrap();
    let r = cross(tmp.path(), "board");
    assert_eq!(r.rebuilt(), BTreeSet::from(["mid".to_string(), "top".to_string()]));
}

#[test]
fn merge_install_conflict_is_first_writer_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let nodes: Vec<String> = ["alpha", "beta"].map(String::from).to_vec();
    write_graph_workspace(tmp.path(), &nodes, &[]);
    for n in &nodes {
        fs::write(tmp.path().join("src").join(n).join("include/shared.h"), format!("// {n}\n")).unwrap();
    }
    let ws = discover_workspace(tmp.path()).unwrap();
    let cli = BTreeMap::from([(MixinKey::MergeInstall, "true".to_string())]);
    let cfg = resolve_config(&ws, &[], &cli).unwrap();
    let r = build(&ws, &cfg, None, &StreamingBackend).unwrap();
    assert_eq!(r.rebuilt(), BTreeSet::from(["alpha".to_string()]));
    match &r.packages["beta"].error {
        Some(Error::InstallConflict { path, owner }) => {
            assert_eq!((path.as_str(), owner.as_str()), ("include/shared.h", "alpha"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(fs::read_to_string(tmp.path().join("install/include/shared.h")).unwrap(), "// alpha\n");
}

#[test]
fn packages_select_pulls_in_dependencies() {
    let tmp = fixture_copy();
    let ws = discover_workspace(tmp.path()).unwrap();
    let cfg = resolve_config(&ws, &[], &BTreeMap::new()).unwrap();
    let sel = BTreeSet::from(["acceleration_examples".to_string()]);
    let plan = plan_build(&ws, &cfg, Some(&sel)).unwrap();
    assert_eq!(plan.packages.keys().collect::<Vec<_>>(), ["acceleration_examples", "core_lib"]);
    let bad = BTreeSet::from(["nope".to_string()]);
    assert_eq!(plan_build(&ws, &cfg, Some(&bad)).unwrap_err().code(), "E_UNKNOWN_PACKAGE");
}

#[test]
fn build_lock_rejects_concurrent_runs() {
    let tmp = fixture_copy();
    fs::create_dir_all(tmp.path().join("build")).unwrap();
    fs::write(tmp.path().join("build/.accel-lock"), "").unwrap();
    let ws = discover_workspace(tmp.path()).unwrap();
    let cfg = resolve_config(&ws, &[], &BTreeMap::new()).unwrap();
    assert_eq!(build(&ws, &cfg, None, &StreamingBackend).unwrap_err().code(), "E_LOCKED");
}

#[test]
fn hash_depends_on_platform_for_kernel_packages() {
    let tmp = fixture_copy();
    native(tmp.path());
    let ws = discover_workspace(tmp.path()).unwrap();
    let pkg = ws.package("acceleration_examples").unwrap();
    let h = |p: &str| {
        let (mixins, cli) = cross_options(p);
        content_hash(pkg, &ws, &resolve_config(&ws, &mixins, &cli).unwrap()).unwrap()
    };
    assert_eq!(h("zcu102"), h("zcu102"));
    assert_ne!(h("zcu102"), h("kv260"));
}

fn mutate_one_file(root: &Path, pkg: &str, which: u8, byte: u8) {
    let dir = root.join("src").join(pkg);
    let path = match which % 3 {
        0 => dir.join("main.src"),
        1 => dir.join("include").join(pkg).join("api.h"),
        _ => dir.join("extra.src"),
    };
    let mut bytes = fs::read(&path).unwrap_or_default();
    bytes.push(byte);
    fs::write(path, bytes).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rebuilt_set_is_exact_dirty_closure(seed in any::<u64>(), n in 1usize..=10, density in 0.0f64..0.5,
                                         pick in any::<prop::sample::Index>(), which in any::<u8>(), byte in any::<u8>()) {
        let tmp = tempfile::tempdir().unwrap();
        let (nodes, edges) = random_dag(&mut ChaCha8Rng::seed_from_u64(seed), n, density);
        write_graph_workspace(tmp.path(), &nodes, &edges);
        prop_assert_eq!(native(tmp.path()).rebuilt().len(), n);
        prop_assert!(native(tmp.path()).rebuilt().is_empty());
        let target = pick.get(&nodes).clone();
        mutate_one_file(tmp.path(), &target, which, byte);
        let expected = brute_dirty(&edges, &BTreeSet::from([target]));
        prop_assert_eq!(native(tmp.path()).rebuilt(), expected);
    }

    #[test]
    fn any_byte_change_changes_the_hash(pos in any::<prop::sample::Index>(), mask in 1u8..=255) {
        let tmp = tempfile::tempdir().unwrap();
        write_graph_workspace(tmp.path(), &["p".to_string()], &[]);
        let ws = discover_workspace(tmp.path()).unwrap();
        let cfg = resolve_config(&ws, &[], &BTreeMap::new()).unwrap();
        let before = content_hash(ws.package("p").unwrap(), &ws, &cfg).unwrap();
        let path = tmp.path().join("src/p/main.src");
        let mut bytes = fs::read(&path).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] ^= mask;
        fs::write(&path, bytes).unwrap();
        let after = content_hash(ws.package("p").unwrap(), &ws, &cfg).unwrap();
        prop_assert_ne!(before, after);
    }
}
