// SPDX-License-Identifier: Apache-2.0

//! The kernel compiler: DSL parsing, resource estimation, pipeline
//! scheduling and artifact emission for the three build types.

pub mod artifact;
pub mod backend;
pub mod config;
pub mod cost;
pub mod ir;
pub mod schedule;

pub use artifact::{decode_artifact, encode_artifact, ArtifactMetadata, KernelArtifact, MAGIC};
pub use backend::{compile_kernel, AccelerationBackend, StreamingBackend};
pub use config::{parse_config, KernelConfig};
pub use cost::{estimate_resources, OpCost, ResourceEstimate};
pub use ir::{parse_kernel, Arity, ElemType, KernelIR, Op, Operand, Port, Stage};
pub use schedule::{schedule_pipeline, PipelineSchedule};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{ContainerError, Error};
    use crate::firmware::PlatformDescriptor;
    use crate::manifest::BuildType;

    fn board(name: &str, dsps: u64, luts: u64) -> PlatformDescriptor {
        PlatformDescriptor {
            platform: name.into(),
            triple: "aarch64-accel-eabi".into(),
            clock_mhz: 200,
            budget_luts: luts,
            budget_dsps: dsps,
            budget_bram_kb: 4000,
        }
    }

    fn vadd() -> KernelIR {
        parse_kernel("kernel vadd\nin a i32\nin b i32\nout c i32\nstage add a b -> c\n").unwrap()
    }

    #[test]
    fn vadd_hw_metadata() {
        let a = compile_kernel(&vadd(), &KernelConfig::new("zcu102"), &board("zcu102", 1200, 120000), BuildType::Hw)
            .unwrap();
        let m = &a.metadata;
        assert_eq!((m.depth, m.ii, m.dsps, m.luts), (1, 1, 0, 8));
        assert_eq!((m.platform.as_str(), m.build_type), ("zcu102", BuildType::Hw));
        assert_eq!(m.clock_mhz, 200);
        assert_eq!(m.content_hash.len(), 64);
    }

    fn many_muls(n: usize) -> KernelIR {
        let mut text = String::from("kernel big\nin x i32\nout y i32\n");
        let mut prev = "x".to_string();
        for i in 0..n {
            let next = if i + 1 == n { "y".to_string() } else { format!("t{i}") };
            text.push_str(&format!("stage mul {prev} x -> {next}\n"));
            prev = next;
        }
        parse_kernel(&text).unwrap()
    }

    #[test]
    fn dsp_overflow() {
        let err = compile_kernel(&many_muls(1300), &KernelConfig::new("kv260"), &board("kv260", 1000, 100000), BuildType::Hw)
            .unwrap_err();
        match err {
            Error::ResourceOverflow { resource, needed, budget } => {
                assert_eq!((resource.as_str(), needed, budget), ("dsps", 1300, 1000));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn sw_emu_skips_resource_check() {
        let ir = many_muls(3);
        let tiny = board("tiny", 1, 1000);
        assert!(compile_kernel(&ir, &KernelConfig::new("tiny"), &tiny, BuildType::SwEmu).is_ok());
        assert!(compile_kernel(&ir, &KernelConfig::new("tiny"), &tiny, BuildType::HwEmu).is_err());
    }

    #[test]
    fn platform_mismatch_is_config_error() {
        let err = compile_kernel(&vadd(), &KernelConfig::new("kv260"), &board("zcu102", 1, 1), BuildType::Hw)
            .unwrap_err();
        assert_eq!(err.code(), "E_CONFIG");
    }

    #[test]
    fn clock_override() {
        let cfg = KernelConfig { clock_mhz: Some(300), ..KernelConfig::new("zcu102") };
        let a = compile_kernel(&vadd(), &cfg, &board("zcu102", 1, 100), BuildType::HwEmu).unwrap();
        assert_eq!(a.metadata.clock_mhz, 300);
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = KernelConfig::new("zcu102");
        let b = board("zcu102", 1200, 120000);
        let x = encode_artifact(&compile_kernel(&vadd(), &cfg, &b, BuildType::Hw).unwrap());
        let y = encode_artifact(&compile_kernel(&vadd(), &cfg, &b, BuildType::Hw).unwrap());
        assert_eq!(x, y);
    }

    #[test]
    fn container_round_trip_and_layout() {
        let a = compile_kernel(&vadd(), &KernelConfig::new("zcu102"), &board("zcu102", 1, 100), BuildType::Hw).unwrap();
        let bytes = encode_artifact(&a);
        assert_eq!(&bytes[..4], b"AKB1");
        let meta_len = u64::from_be_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let json = std::str::from_utf8(&bytes[12..12 + meta_len]).unwrap();
        let keys = ["kernel", "platform", "type", "clock_mhz", "depth", "ii", "dsps", "luts", "inputs", "outputs", "content_hash"];
        let positions: Vec<usize> = keys.iter().map(|k| json.find(&format!("\"{k}\":")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert_eq!(decode_artifact(&bytes).unwrap(), a);
    }

    #[test]
    fn container_errors() {
        let a = compile_kernel(&vadd(), &KernelConfig::new("zcu102"), &board("zcu102", 1, 100), BuildType::Hw).unwrap();
        let bytes = encode_artifact(&a);

        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_artifact(&bad), Err(Error::Container(ContainerError::BadMagic))));

        assert!(matches!(
            decode_artifact(&bytes[..bytes.len() - 1]),
            Err(Error::Container(ContainerError::Truncated))
        ));
        assert!(matches!(decode_artifact(b"AK"), Err(Error::Container(ContainerError::Truncated))));

        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_artifact(&extra), Err(Error::Container(ContainerError::Malformed(_)))));
    }
}
