// SPDX-License-Identifier: Apache-2.0

//! Seeded inputs shared by the benchmarks.

use accel_core::testkit::{random_dag, random_kernel_text};
use accel_core::{parse_kernel, DepGraph, KernelIR};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `count` random kernels with up to `max_stages` stages.
pub fn kernel_corpus(seed: u64, count: usize, max_stages: usize) -> Vec<KernelIR> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| parse_kernel(&random_kernel_text(&mut rng, &format!("k{i}"), max_stages)).expect("generated kernels parse"))
        .collect()
}

/// A random package DAG with `n` nodes.
pub fn package_graph(seed: u64, n: usize, density: f64) -> DepGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nodes, edges) = random_dag(&mut rng, n, density);
    DepGraph::from_edges(nodes, &edges).expect("generated graphs are acyclic")
}
