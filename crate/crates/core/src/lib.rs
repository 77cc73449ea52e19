// SPDX-License-Identifier: Apache-2.0

//! Hardware-acceleration-aware workspace builds.
//!
//! A workspace holds source packages, which may declare acceleration
//! kernels, and firmware packages, which describe a target board. A first
//! build deploys firmware and generates one mixin per board; a second build
//! with `--mixin <board>` cross-builds packages and compiles kernels into
//! `*.akbin` artifacts, which the emulated device in [`runtime`] can load
//! and run.

pub mod build;
pub mod error;
pub mod firmware;
pub mod fixture;
pub mod graph;
pub mod kernel;
pub mod manifest;
pub mod mixin;
pub mod runtime;
#[cfg(feature = "testkit")]
pub mod testkit;
mod text;
pub mod workspace;

pub use error::{ContainerError, Error, Result};
pub use firmware::{deploy_firmware, list_platforms, load_platform, DeployedFirmware, PlatformDescriptor};
pub use graph::{build_graph, dirty_set, schedule_waves, topo_order, DepGraph};
pub use kernel::{
    compile_kernel, decode_artifact, encode_artifact, parse_kernel, AccelerationBackend, KernelArtifact, KernelConfig,
    KernelIR, StreamingBackend,
};
pub use manifest::{parse_manifest, BuildType, KernelDecl, PackageKind, PackageManifest};
pub use mixin::{merge_mixins, EffectiveConfig, Mixin, MixinKey, MixinRegistry, TargetTriple};
pub use runtime::{run_functional, run_timed, sequential_cycle_model, CycleReport, Device, LoadedKernel};
pub use text::{is_contained_relpath, is_identifier};
pub use workspace::{discover_workspace, Workspace, WorkspacePackage};

/// Recorded in every content hash; bumping it invalidates all stamps.
pub const TOOL_VERSION: &str = concat!("accelbuild ", env!("CARGO_PKG_VERSION"));
