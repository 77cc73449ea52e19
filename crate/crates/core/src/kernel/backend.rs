// SPDX-License-Identifier: Apache-2.0

//! Acceleration backends. The build executor only sees
//! [`AccelerationBackend`]; [`StreamingBackend`] is the built-in one.

use super::artifact::{ArtifactMetadata, KernelArtifact};
use super::config::KernelConfig;
use super::cost::estimate_resources;
use super::ir::KernelIR;
use super::schedule::schedule_pipeline;
use crate::error::{Error, Result};
use crate::firmware::PlatformDescriptor;
use crate::manifest::BuildType;

pub trait AccelerationBackend: Send + Sync {
    /// Name registered in the workspace's backend list.
    fn name(&self) -> &str;

    fn compile(
        &self,
        ir: &KernelIR,
        cfg: &KernelConfig,
        platform: &PlatformDescriptor,
        build_type: BuildType,
    ) -> Result<KernelArtifact>;
}

/// Lowers kernels to streaming-pipeline artifacts for the emulation runtime.
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamingBackend;

impl AccelerationBackend for StreamingBackend {
    fn name(&self) -> &str {
        "streaming"
    }

    fn compile(
        &self,
        ir: &KernelIR,
        cfg: &KernelConfig,
        platform: &PlatformDescriptor,
        build_type: BuildType,
    ) -> Result<KernelArtifact> {
        compile_kernel(ir, cfg, platform, build_type)
    }
}

/// Schedule, estimate and package a kernel for `platform`.
///
/// `hw_emu` and `hw` builds must fit the platform budget; `sw_emu` builds
/// skip the check.
pub fn compile_kernel(
    ir: &KernelIR,
    cfg: &KernelConfig,
    platform: &PlatformDescriptor,
    build_type: BuildType,
) -> Result<KernelArtifact> {
    if cfg.platform != platform.platform {
        return Err(Error::Config(format!(
            "kernel config targets `{}` but the platform is `{}`",
            cfg.platform, platform.platform
        )));
    }
    let resources = estimate_resources(ir);
    if build_type != BuildType::SwEmu {
        for (resource, needed, budget) in [
            ("dsps", resources.dsps, platform.budget_dsps),
            ("luts", resources.luts, platform.budget_luts),
        ] {
            if needed > budget {
                return Err(Error::ResourceOverflow {
                    resource: resource.to_string(),
                    needed,
                    budget,
                });
            }
        }
    }
    let schedule = schedule_pipeline(ir, cfg);
    let metadata = ArtifactMetadata {
        kernel: ir.name.clone(),
        platform: platform.platform.clone(),
        build_type,
        clock_mhz: cfg.clock_mhz.unwrap_or(platform.clock_mhz),
        depth: schedule.depth,
        ii: schedule.ii,
        dsps: resources.dsps,
        luts: resources.luts,
        inputs: ir.inputs.clone(),
        outputs: ir.outputs.clone(),
        content_hash: String::new(),
    };
    Ok(KernelArtifact {
        metadata,
        ir: ir.clone(),
        schedule,
    }
    .seal())
}
