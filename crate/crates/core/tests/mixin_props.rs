// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::PathBuf;

use accel_core::build::{plan_build, resolve_config};
use accel_core::firmware::mixin_path;
use accel_core::testkit::{write_firmware_package, write_graph_workspace};
use accel_core::{discover_workspace, merge_mixins, BuildType, EffectiveConfig, Error, Mixin, MixinKey, TargetTriple};
use proptest::prelude::*;

/// Keys that can be layered freely (platform and firmware-dir must travel
/// together and are covered separately).
const FREE_KEYS: [MixinKey; 6] = [
    MixinKey::BuildBase,
    MixinKey::InstallBase,
    MixinKey::MergeInstall,
    MixinKey::TargetTriple,
    MixinKey::KernelType,
    MixinKey::ClockMhz,
];

fn value_for(key: MixinKey, i: u8) -> String {
    let i = i % 4;
    match key {
        MixinKey::BuildBase => format!("b{i}"),
        MixinKey::InstallBase => format!("i{i}"),
        MixinKey::MergeInstall => i.is_multiple_of(2).to_string(),
        MixinKey::TargetTriple => ["host", "aarch64-accel-eabi", "x86_64-linux", "riscv64-none"][i as usize].to_string(),
        MixinKey::KernelType => ["sw_emu", "hw_emu", "hw", "hw"][i as usize].to_string(),
        MixinKey::ClockMhz => (100 * (u32::from(i) + 1)).to_string(),
        MixinKey::Platform | MixinKey::FirmwareDir => unreachable!(),
    }
}

fn layer() -> impl Strategy<Value = BTreeMap<MixinKey, String>> {
    proptest::collection::vec((0usize..FREE_KEYS.len(), any::<u8>()), 0..5).prop_map(|kv| {
        kv.into_iter()
            .map(|(k, v)| (FREE_KEYS[k], value_for(FREE_KEYS[k], v)))
            .collect()
    })
}

/// The value a key ends up with, read back from the effective config.
fn field(cfg: &EffectiveConfig, key: MixinKey) -> String {
    match key {
        MixinKey::BuildBase => cfg.build_base.display().to_string(),
        MixinKey::InstallBase => cfg.install_base.display().to_string(),
        MixinKey::MergeInstall => cfg.merge_install.to_string(),
        MixinKey::TargetTriple => cfg.target_triple.to_string(),
        MixinKey::KernelType => cfg.kernel_type_override.map(|t| t.to_string()).unwrap_or_default(),
        MixinKey::ClockMhz => cfg.clock_mhz_override.map(|c| c.to_string()).unwrap_or_default(),
        MixinKey::Platform | MixinKey::FirmwareDir => unreachable!(),
    }
}

fn default_value(key: MixinKey) -> String {
    field(&EffectiveConfig::default(), key)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rightmost_layer_then_cli_wins(layers in proptest::collection::vec(layer(), 0..5), cli in layer()) {
        let mixins: Vec<Mixin> = layers
            .iter()
            .enumerate()
            .map(|(i, entries)| Mixin { name: format!("m{i}"), entries: entries.clone() })
            .collect();
        let cfg = merge_mixins(&mixins, &cli).unwrap();
        for key in FREE_KEYS {
            // Scan from the top of the stack down.
            let expected = cli
                .get(&key)
                .or_else(|| layers.iter().rev().find_map(|l| l.get(&key)))
                .cloned()
                .unwrap_or_else(|| default_value(key));
            prop_assert_eq!(field(&cfg, key), expected, "key {}", key);
        }
    }

    #[test]
    fn merge_is_associative_over_concatenation(a in layer(), b in layer(), c in layer()) {
        // Layering [a, b, c] equals layering [a, b+c] where b+c is b
        // overridden by c.
        let m = |n: &str, e: &BTreeMap<MixinKey, String>| Mixin { name: n.into(), entries: e.clone() };
        let mut bc = b.clone();
        bc.extend(c.clone());
        let left = merge_mixins(&[m("a", &a), m("b", &b), m("c", &c)], &BTreeMap::new()).unwrap();
        let right = merge_mixins(&[m("a", &a), m("bc", &bc)], &BTreeMap::new()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn cross_build_before_deploy_is_phase_order(
        platforms in proptest::collection::btree_set("[a-z][a-z0-9]{1,6}", 1..4),
        pick in any::<prop::sample::Index>(),
        write_mixin in any::<bool>(),
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("src");
        write_graph_workspace(tmp.path(), &["app".to_string()], &[]);
        for p in &platforms {
            write_firmware_package(&src, p, 200, 10);
        }
        let ws = discover_workspace(tmp.path()).unwrap();
        let platforms: Vec<&String> = platforms.iter().collect();
        let target = pick.get(&platforms).to_string();

        if write_mixin {
            // A mixin without deployed firmware (e.g. copied from elsewhere).
            let dir = PathBuf::from(&ws.root).join("acceleration/firmware").join(&target);
            let text = format!("mixin: {target}\nplatform: {target}\nfirmware-dir: {}\n", dir.display());
            std::fs::create_dir_all(&ws.mixin_dir).unwrap();
            std::fs::write(mixin_path(&ws, &target), text).unwrap();
        }
        let err = resolve_config(&ws, std::slice::from_ref(&target), &BTreeMap::new())
            .and_then(|cfg| plan_build(&ws, &cfg, None).map(|_| ()))
            .unwrap_err();
        match err {
            Error::PhaseOrder(p) => prop_assert_eq!(p, target),
            other => prop_assert!(false, "expected E_PHASE_ORDER, got {}", other),
        }
    }
}

#[test]
fn unknown_mixin_without_firmware() {
    let tmp = tempfile::tempdir().unwrap();
    write_graph_workspace(tmp.path(), &["app".to_string()], &[]);
    let ws = discover_workspace(tmp.path()).unwrap();
    let err = resolve_config(&ws, &["nosuch".to_string()], &BTreeMap::new()).unwrap_err();
    assert_eq!(err.code(), "E_UNKNOWN_MIXIN");
}

#[test]
fn platform_without_any_firmware_package() {
    let tmp = tempfile::tempdir().unwrap();
    write_graph_workspace(tmp.path(), &["app".to_string()], &[]);
    let ws = discover_workspace(tmp.path()).unwrap();
    let cli = BTreeMap::from([
        (MixinKey::Platform, "kv260".to_string()),
        (MixinKey::FirmwareDir, "acceleration/firmware/kv260".to_string()),
    ]);
    let cfg = resolve_config(&ws, &[], &cli).unwrap();
    match plan_build(&ws, &cfg, None).unwrap_err() {
        Error::NoFirmware(p) => assert_eq!(p, "kv260"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn host_triple_round_trips() {
    let cli = BTreeMap::from([(MixinKey::TargetTriple, "host".to_string())]);
    assert_eq!(merge_mixins(&[], &cli).unwrap().target_triple, TargetTriple::Host);
    let cli = BTreeMap::from([(MixinKey::KernelType, "hw_emu".to_string())]);
    assert_eq!(merge_mixins(&[], &cli).unwrap().kernel_type_override, Some(BuildType::HwEmu));
}
