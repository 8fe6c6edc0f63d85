use std::io::Write;

use clap::Parser;
use packet_moments_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(()), Ok(())) => {}
        (Err(e), _) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
        (Ok(()), Err(e)) => {
            eprintln!("error: {e}");
            std::process::exit(packet_moments_cli::EXIT_FAILURE);
        }
    }
}
