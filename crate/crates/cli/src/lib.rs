// SPDX-License-Identifier: Apache-2.0

//! The `accelbuild` command line.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use accel_core::build::{build, resolve_config};
use accel_core::firmware::{deployed_descriptor, is_deployed, mixin_path};
use accel_core::runtime::{run_functional, run_timed, Streams};
use accel_core::workspace::firmware_dir;
use accel_core::{
    build_graph, discover_workspace, is_identifier, list_platforms, topo_order, Device, Error, MixinKey,
    MixinRegistry, StreamingBackend, Workspace,
};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the workspace root.
pub const WORKSPACE_ENV: &str = "ACCEL_WORKSPACE";

#[derive(Debug, Parser, PartialEq, Eq)]
#[command(name = "accelbuild", version, about = "Acceleration-aware workspace builds")]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Build the workspace; with a platform mixin, cross-build and compile kernels.
    Build(BuildArgs),
    /// Print the package dependency graph.
    Graph {
        /// Emit Graphviz DOT instead of a topological order.
        #[arg(long)]
        dot: bool,
    },
    /// Generated mixins.
    Mixin {
        #[command(subcommand)]
        command: ListCommand,
    },
    /// Deployed platforms.
    Platform {
        #[command(subcommand)]
        command: ListCommand,
    },
    /// Kernel artifacts.
    Kernel {
        #[command(subcommand)]
        command: KernelCommand,
    },
    /// Remove build outputs.
    Clean {
        /// Only remove one platform's bases, firmware and mixin.
        #[arg(long, value_parser = identifier)]
        platform: Option<String>,
    },
}

#[derive(Debug, Args, PartialEq, Eq)]
pub struct BuildArgs {
    #[arg(long, value_name = "DIR")]
    pub build_base: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub install_base: Option<PathBuf>,
    #[arg(long)]
    pub merge_install: bool,
    /// Repeatable; later mixins override earlier ones.
    #[arg(long, value_name = "NAME", value_parser = identifier)]
    pub mixin: Vec<String>,
    /// Build only these packages and their dependencies.
    #[arg(long, value_name = "NAME", num_args = 1.., value_parser = identifier)]
    pub packages_select: Vec<String>,
}

#[derive(Debug, Subcommand, PartialEq, Eq)]
pub enum ListCommand {
    List,
}

#[derive(Debug, Subcommand, PartialEq, Eq)]
pub enum KernelCommand {
    /// Load an artifact on an emulated device and stream inputs through it.
    Run {
        file: PathBuf,
        #[arg(long, value_parser = identifier)]
        platform: String,
        /// `stream=v1,v2,...`; repeat per input stream.
        #[arg(long = "in", value_name = "STREAM=CSV", value_parser = stream_arg)]
        inputs: Vec<(String, Vec<i64>)>,
        #[arg(long)]
        report_cycles: bool,
    },
}

fn identifier(s: &str) -> Result<String, String> {
    if is_identifier(s) {
        Ok(s.to_string())
    } else {
        Err(format!("`{s}` is not a valid name (expected [a-z0-9_]+)"))
    }
}

fn stream_arg(s: &str) -> Result<(String, Vec<i64>), String> {
    let (name, csv) = s
        .split_once('=')
        .ok_or_else(|| format!("expected STREAM=CSV, got `{s}`"))?;
    let name = identifier(name)?;
    let values = if csv.trim().is_empty() {
        Vec::new()
    } else {
        csv.split(',')
            .map(|v| v.trim().parse::<i64>().map_err(|_| format!("`{v}` is not an integer")))
            .collect::<Result<_, _>>()?
    };
    Ok((name, values))
}

/// Parse `argv` (without the program name).
pub fn parse_cli<I, T>(argv: I) -> Result<Invocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = std::iter::once(OsString::from("accelbuild")).chain(argv.into_iter().map(Into::into));
    Invocation::try_parse_from(args)
}

/// Where the command runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub cwd: PathBuf,
    /// Overrides workspace discovery when set.
    pub workspace: Option<PathBuf>,
}

impl Context {
    /// From the process environment.
    pub fn from_env() -> std::io::Result<Self> {
        Ok(Context {
            cwd: std::env::current_dir()?,
            workspace: std::env::var_os(WORKSPACE_ENV).map(PathBuf::from),
        })
    }

    /// The workspace root: the override, or the nearest ancestor of `cwd`
    /// that has a `src/` directory.
    pub fn workspace_root(&self) -> Result<PathBuf, Error> {
        if let Some(ws) = &self.workspace {
            return Ok(self.cwd.join(ws));
        }
        self.cwd
            .ancestors()
            .find(|d| d.join("src").is_dir())
            .map(Path::to_path_buf)
            .ok_or_else(|| Error::NoSrc(self.cwd.clone()))
    }

    fn workspace(&self) -> Result<Workspace, Error> {
        discover_workspace(&self.workspace_root()?)
    }
}

/// Parse and run; returns the process exit code.
pub fn run_cli<I, T>(argv: I, ctx: &Context, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_cli(argv) {
        Ok(inv) => inv,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "E_USAGE: {}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(inv, ctx, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(inv: Invocation, ctx: &Context, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    match inv.command {
        Command::Build(args) => cmd_build(args, ctx, out, err),
        Command::Graph { dot } => {
            let g = build_graph(&ctx.workspace()?.manifests())?;
            if dot {
                emit(out, &g.to_dot());
            } else {
                for n in topo_order(&g) {
                    emit(out, &format!("{n}\n"));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Mixin { command: ListCommand::List } => {
            let ws = ctx.workspace()?;
            for name in MixinRegistry::load(&ws.mixin_dir)?.names() {
                emit(out, &format!("{name}\n"));
            }
            Ok(EXIT_OK)
        }
        Command::Platform { command: ListCommand::List } => {
            let ws = ctx.workspace()?;
            for p in list_platforms(&ws)? {
                emit(out, &format!("{}\n", p.platform));
            }
            Ok(EXIT_OK)
        }
        Command::Kernel {
            command: KernelCommand::Run { file, platform, inputs, report_cycles },
        } => cmd_kernel_run(ctx, &file, &platform, inputs, report_cycles, out, err),
        Command::Clean { platform } => cmd_clean(ctx, platform.as_deref()),
    }
}

fn emit(out: &mut dyn Write, s: &str) {
    let _ = out.write_all(s.as_bytes());
}

fn cmd_build(args: BuildArgs, ctx: &Context, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    let ws = ctx.workspace()?;
    let mut cli = BTreeMap::new();
    if let Some(b) = &args.build_base {
        cli.insert(MixinKey::BuildBase, b.display().to_string());
    }
    if let Some(b) = &args.install_base {
        cli.insert(MixinKey::InstallBase, b.display().to_string());
    }
    if args.merge_install {
        cli.insert(MixinKey::MergeInstall, "true".to_string());
    }
    let cfg = resolve_config(&ws, &args.mixin, &cli)?;
    let selected: Option<BTreeSet<String>> =
        (!args.packages_select.is_empty()).then(|| args.packages_select.iter().cloned().collect());
    let report = build(&ws, &cfg, selected.as_ref(), &StreamingBackend)?;
    emit(out, &report.summary());
    for (name, r) in &report.packages {
        if let Some(e) = &r.error {
            let _ = writeln!(err, "error: {name}: {e}");
        }
    }
    Ok(if report.success() { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_kernel_run(
    ctx: &Context,
    file: &Path,
    platform: &str,
    inputs: Vec<(String, Vec<i64>)>,
    report_cycles: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let ws = ctx.workspace()?;
    if !is_deployed(&ws, platform) {
        return Err(if ws.firmware_packages_for(platform).next().is_some() {
            Error::PhaseOrder(platform.to_string())
        } else {
            Error::NoFirmware(platform.to_string())
        });
    }
    let path = ctx.cwd.join(file);
    let bytes = fs::read(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    let mut streams: Streams = BTreeMap::new();
    for (name, values) in inputs {
        if streams.insert(name.clone(), values).is_some() {
            return Err(Error::Signature(format!("stream `{name}` given twice")));
        }
    }
    let mut dev = Device::new(deployed_descriptor(&ws, platform)?.0);
    let kernel = dev.load_artifact(&bytes)?;
    let (outputs, report) = if report_cycles {
        let (o, r) = run_timed(kernel, &streams)?;
        (o, Some(r))
    } else {
        (run_functional(kernel, &streams)?, None)
    };
    for (name, values) in &outputs {
        let csv: Vec<String> = values.iter().map(i64::to_string).collect();
        emit(out, &format!("{name}={}\n", csv.join(",")));
    }
    if let Some(r) = report {
        emit(out, &format!("{r}\n"));
        let _ = writeln!(err, "note: cycle counts come from the streaming pipeline model, not hardware");
    }
    Ok(EXIT_OK)
}

fn remove_in(root: &Path, path: &Path) -> Result<(), Error> {
    if !path.starts_with(root) || path == root {
        return Err(Error::Config(format!("refusing to remove {} outside the workspace", path.display())));
    }
    let res = if path.is_dir() {
        fs::remove_dir_all(path)
    } else if path.exists() {
        fs::remove_file(path)
    } else {
        return Ok(());
    };
    res.map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn cmd_clean(ctx: &Context, platform: Option<&str>) -> Result<i32, Error> {
    let ws = ctx.workspace()?;
    let registry = MixinRegistry::load(&ws.mixin_dir)?;
    let bases = |name: &str| -> Vec<PathBuf> {
        match registry.get(name) {
            Some(m) => [MixinKey::BuildBase, MixinKey::InstallBase]
                .iter()
                .filter_map(|k| m.get(*k))
                .map(|b| ws.base_path(Path::new(b)))
                .collect(),
            None => vec![ws.root.join(format!("build-{name}")), ws.root.join(format!("install-{name}"))],
        }
    };
    let mut doomed: Vec<PathBuf> = Vec::new();
    match platform {
        Some(p) => {
            doomed.extend(bases(p));
            doomed.push(firmware_dir(&ws, p)?);
            doomed.push(mixin_path(&ws, p));
        }
        None => {
            for name in registry.names() {
                doomed.extend(bases(&name));
            }
            doomed.extend(["build", "install", ".accel", "acceleration/firmware"].map(|d| ws.root.join(d)));
        }
    }
    for path in doomed {
        remove_in(&ws.root, &path)?;
    }
    // Drop the firmware parent once no platform is left in it.
    let parent = ws.root.join("acceleration");
    if fs::read_dir(&parent).map(|mut d| d.next().is_none()).unwrap_or(false) {
        remove_in(&ws.root, &parent)?;
    }
    Ok(EXIT_OK)
}
