// SPDX-License-Identifier: Apache-2.0

use std::io;
use std::process::ExitCode;

use accelbuild::{run_cli, Context, EXIT_FAILURE};

fn main() -> ExitCode {
    let ctx = match Context::from_env() {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("E_IO: current directory: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    let code = run_cli(std::env::args_os().skip(1), &ctx, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
