//! Parses a flat configuration and runs it, as the command-line tool does.
//!
//! `cargo run --example run_config -- path/to/file.cfg [out_dir]`; without
//! arguments a built-in free-flow bump is run into a temporary directory.

use std::path::PathBuf;

use kinetra::config::parse_config;
use kinetra::scenario::run_scenario;

const DEFAULT: &str = "\
scenario = bump
a = 0.2
b = 0.2
p_law = power
gamma = 0.5
n_outputs = 5
";

fn main() -> kinetra::Result<()> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(&path).map_err(|e| kinetra::Error::Io { path: path.into(), source: e })?,
        None => DEFAULT.to_string(),
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("kinetra-example"));
    let cfg = parse_config(&text)?;
    print!("{}", cfg.echo());
    let report = run_scenario(&cfg, &out)?;
    println!("-- {} files in {}", report.files.len(), out.display());
    for (k, v) in &report.summary {
        println!("{k} = {v}");
    }
    Ok(())
}
