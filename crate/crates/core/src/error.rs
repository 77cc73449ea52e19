// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why an artifact container was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContainerError {
    #[error("bad magic")]
    BadMagic,
    #[error("truncated container")]
    Truncated,
    #[error("content hash mismatch (recorded {recorded}, computed {computed})")]
    HashMismatch { recorded: String, computed: String },
    #[error("malformed section: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("E_NO_SRC: workspace root {0} has no src/ directory")]
    NoSrc(PathBuf),

    #[error("E_DUPLICATE_PACKAGE: package `{name}` declared by both {} and {}", first.display(), second.display())]
    DuplicatePackage {
        name: String,
        first: PathBuf,
        second: PathBuf,
    },

    #[error("E_PARSE: {}{message}", location(.source_name, *.line))]
    Parse {
        source_name: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error("E_MISSING_DEP: package `{package}` depends on unknown package `{missing}`")]
    MissingDep { package: String, missing: String },

    #[error("E_CYCLE: dependency cycle {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("E_TEMPLATE: unbound placeholder ${{{0}}}")]
    Template(String),

    #[error("E_UNKNOWN_MIXIN: no mixin named `{name}` (known: {})", known_list(.known))]
    UnknownMixin { name: String, known: Vec<String> },

    #[error("E_CONFIG: {0}")]
    Config(String),

    #[error("E_FIRMWARE_INCOMPLETE: firmware package `{package}` is missing its {artifact} artifact")]
    FirmwareIncomplete { package: String, artifact: String },

    #[error("E_PLATFORM_CONFLICT: platform `{platform}` is already deployed by package `{occupant}` with different content (while deploying `{package}`)")]
    PlatformConflict {
        platform: String,
        occupant: String,
        package: String,
    },

    #[error("E_RESOURCE_OVERFLOW: kernel needs {needed} {resource} but the platform budget is {budget}")]
    ResourceOverflow {
        resource: String,
        needed: u64,
        budget: u64,
    },

    #[error("E_CONTAINER: {0}")]
    Container(#[from] ContainerError),

    #[error("E_PLATFORM_MISMATCH: artifact is sealed for `{artifact}` but the device is `{device}`")]
    PlatformMismatch { artifact: String, device: String },

    #[error("E_SIGNATURE: {0}")]
    Signature(String),

    #[error("E_PHASE_ORDER: firmware for platform `{0}` has not been deployed; run `build` without a mixin first")]
    PhaseOrder(String),

    #[error("E_NO_FIRMWARE: no firmware package in the workspace targets platform `{0}`")]
    NoFirmware(String),

    #[error("E_UNKNOWN_PACKAGE: no package named `{0}` in the workspace")]
    UnknownPackage(String),

    #[error("E_LOCKED: another build holds {}; remove it if no build is running", .0.display())]
    Locked(PathBuf),

    #[error("E_DEPENDENCY_FAILED: dependency `{0}` failed")]
    DependencyFailed(String),

    #[error("E_INSTALL_CONFLICT: {path} is already installed by package `{owner}`")]
    InstallConflict { path: String, owner: String },

    #[error("E_IO: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(source_name: &Option<String>, line: Option<usize>) -> String {
    match (source_name, line) {
        (Some(s), Some(l)) => format!("{s}:{l}: "),
        (Some(s), None) => format!("{s}: "),
        (None, Some(l)) => format!("line {l}: "),
        (None, None) => String::new(),
    }
}

fn known_list(known: &[String]) -> String {
    if known.is_empty() {
        "none".to_string()
    } else {
        known.join(", ")
    }
}

impl Error {
    /// Stable error code, e.g. `E_PARSE`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NoSrc(_) => "E_NO_SRC",
            Error::DuplicatePackage { .. } => "E_DUPLICATE_PACKAGE",
            Error::Parse { .. } => "E_PARSE",
            Error::MissingDep { .. } => "E_MISSING_DEP",
            Error::Cycle(_) => "E_CYCLE",
            Error::Template(_) => "E_TEMPLATE",
            Error::UnknownMixin { .. } => "E_UNKNOWN_MIXIN",
            Error::Config(_) => "E_CONFIG",
            Error::FirmwareIncomplete { .. } => "E_FIRMWARE_INCOMPLETE",
            Error::PlatformConflict { .. } => "E_PLATFORM_CONFLICT",
            Error::ResourceOverflow { .. } => "E_RESOURCE_OVERFLOW",
            Error::Container(_) => "E_CONTAINER",
            Error::PlatformMismatch { .. } => "E_PLATFORM_MISMATCH",
            Error::Signature(_) => "E_SIGNATURE",
            Error::PhaseOrder(_) => "E_PHASE_ORDER",
            Error::NoFirmware(_) => "E_NO_FIRMWARE",
            Error::UnknownPackage(_) => "E_UNKNOWN_PACKAGE",
            Error::Locked(_) => "E_LOCKED",
            Error::DependencyFailed(_) => "E_DEPENDENCY_FAILED",
            Error::InstallConflict { .. } => "E_INSTALL_CONFLICT",
            Error::Io { .. } => "E_IO",
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: None,
            line: Some(line),
            message: message.into(),
        }
    }

    pub(crate) fn parse_msg(message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: None,
            line: None,
            message: message.into(),
        }
    }

    /// Attach a file name to a parse error that does not have one yet.
    pub fn in_source(self, name: impl Into<String>) -> Self {
        match self {
            Error::Parse {
                source_name: None,
                line,
                message,
            } => Error::Parse {
                source_name: Some(name.into()),
                line,
                message,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Shorthand for mapping `std::io::Result` into [`Error::Io`] with a path.
pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
