// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::text::{check_identifier, key_value_lines, parse_positive};

/// Per-kernel platform configuration (`*.cfg`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KernelConfig {
    pub platform: String,
    /// Initiation interval, cycles between successive elements.
    pub ii: u32,
    pub clock_mhz: Option<u32>,
}

impl KernelConfig {
    pub fn new(platform: impl Into<String>) -> Self {
        KernelConfig {
            platform: platform.into(),
            ii: 1,
            clock_mhz: None,
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("platform: {}\nii: {}\n", self.platform, self.ii);
        if let Some(c) = self.clock_mhz {
            let _ = writeln!(s, "clock-mhz: {c}");
        }
        s
    }
}

pub fn parse_config(text: &str) -> Result<KernelConfig> {
    let mut platform = None;
    let mut ii = None;
    let mut clock = None;
    for line in key_value_lines(text)? {
        let n = line.number;
        if line.indent != 0 {
            return Err(Error::parse(n, "config entries are not indented"));
        }
        let fresh = match line.key {
            "platform" => {
                check_identifier(line.value, "platform", Some(n))?;
                platform.replace(line.value.to_string()).is_none()
            }
            "ii" => ii.replace(parse_positive(line.value, "ii", n)?).is_none(),
            "clock-mhz" => clock
                .replace(parse_positive(line.value, "clock-mhz", n)?)
                .is_none(),
            other => return Err(Error::parse(n, format!("unknown config key `{other}`"))),
        };
        if !fresh {
            return Err(Error::parse(n, format!("duplicate key `{}`", line.key)));
        }
    }
    Ok(KernelConfig {
        platform: platform.ok_or_else(|| Error::parse_msg("config is missing `platform`"))?,
        ii: ii.unwrap_or(1),
        clock_mhz: clock,
    })
}
