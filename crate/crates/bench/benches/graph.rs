// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use accel_bench::package_graph;
use accel_core::build::{build, resolve_config};
use accel_core::fixture::copy_tree;
use accel_core::{dirty_set, discover_workspace, schedule_waves, topo_order, StreamingBackend};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn graph_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for n in [50usize, 200] {
        let g = package_graph(7, n, 0.1);
        let changed: BTreeSet<String> = topo_order(&g).into_iter().take(1).collect();
        group.bench_with_input(BenchmarkId::new("topo_order", n), &g, |b, g| b.iter(|| topo_order(g)));
        group.bench_with_input(BenchmarkId::new("waves", n), &g, |b, g| b.iter(|| schedule_waves(g)));
        group.bench_with_input(BenchmarkId::new("dirty_set", n), &g, |b, g| b.iter(|| dirty_set(g, &changed).unwrap()));
    }
    group.finish();
}

fn idle_rebuild(c: &mut Criterion) {
    let tmp = tempfile::tempdir().unwrap();
    copy_tree(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/ws1"), tmp.path()).unwrap();
    let ws = discover_workspace(tmp.path()).unwrap();
    let cfg = resolve_config(&ws, &[], &BTreeMap::new()).unwrap();
    build(&ws, &cfg, None, &StreamingBackend).unwrap();
    c.bench_function("fixture_noop_rebuild", |b| b.iter(|| build(&ws, &cfg, None, &StreamingBackend).unwrap()));
}

criterion_group!(benches, graph_ops, idle_rebuild);
criterion_main!(benches);
