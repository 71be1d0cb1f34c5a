use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use qrmap_cli::args::{Cli, Command};
use qrmap_cli::{commands, server};

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Compile(a) => commands::compile(&a, &mut out, &mut io::stderr()),
        Command::Decompile(a) => commands::decompile(&a, &mut out),
        Command::Inspect(a) => commands::inspect(&a, &mut out),
        Command::Run(a) => commands::run(&a, &mut io::stdin().lock(), &mut out),
        Command::Route(a) => commands::route(&a, &mut out),
        Command::Serve(a) => {
            drop(out);
            tokio::runtime::Runtime::new()?.block_on(server::serve(a))
        }
    }
}

fn closed_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if closed_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
